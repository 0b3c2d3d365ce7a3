from dataclasses import replace
from fractions import Fraction

import pytest

from hptransfer import ainfty as ai
from hptransfer import precy as pc
from hptransfer.exactla import QQ
from hptransfer.multi import is_cyclically_invariant, symmetrize
from hptransfer.testkit import (
    SUITE_PARAMS,
    GenParams,
    gauge_ainf,
    gauge_pcy,
    random_ainf_structure,
    random_dg_quiver,
    random_hom_collection,
    random_multi_collection,
    random_pcy_structure,
)

SMALL = GenParams(object_count=2, min_dim=1, max_dim=2, density=Fraction(2, 3))


def _ident(A):
    return {x: x for x in A.objects}


def _single_group(seed, d, nmax=4):
    p = replace(SMALL, seed=seed)
    A = random_dg_quiver(p)
    m = random_hom_collection(A, A, _ident(A), 1, nmax, p, salt="m")
    F = random_hom_collection(A, A, _ident(A), 0, nmax, p, salt="F")
    G = random_hom_collection(A, A, _ident(A), 0, nmax, p, salt="G")
    emb = lambda X: pc.embed_ainf(X, d, 1)
    return A, m, F, G, emb


class TestSingleGroupReduction:
    @pytest.mark.parametrize("d", [-1, 0, 1, 2])
    def test_necklace_is_gerstenhaber(self, d):
        _, m, _, _, emb = _single_group(1, d)
        assert pc.necklace_compose(emb(m), emb(m)).equals(emb(ai.gerstenhaber_compose(m, m)))

    @pytest.mark.parametrize("d", [0, 1])
    def test_multinec_and_pre(self, d):
        _, m, F, _, emb = _single_group(2, d)
        assert pc.multinec_compose(emb(F), emb(m)).equals(emb(ai.gerstenhaber_compose(F, m)))
        assert pc.pre_compose(emb(m), emb(F)).equals(emb(ai.compose_M(m, F)))

    @pytest.mark.parametrize("d", [0, 1])
    def test_composition(self, d):
        _, _, F, G, emb = _single_group(3, d)
        assert pc.compose_pcy(emb(G), emb(F)).equals(emb(ai.compose_morphisms(G, F)))

    def test_inversion(self):
        p = replace(SMALL, seed=4)
        A = random_dg_quiver(p)
        F = gauge_ainf(A, 4, p)
        G = pc.invert_pcy(pc.embed_ainf(F, 1, 1))
        assert pc.restrict_to_ainf(G).equals(ai.invert_morphism(F))

    def test_embed_restrict_round_trip(self):
        _, m, F, _, emb = _single_group(5, 1)
        assert pc.restrict_to_ainf(emb(m)).equals(m)
        assert pc.restrict_to_ainf(emb(F)).equals(F)
        assert emb(m).weight == 1 and emb(F).weight == 0


def _multi(seed, d=0, lmax=3, nmax=4):
    p = replace(SMALL, seed=seed)
    A = random_dg_quiver(p)
    mk = lambda role, salt, **kw: random_multi_collection(A, A, _ident(A), d, role, lmax, nmax, p,
                                                         salt=salt, min_size=2, **kw)
    return A, mk


class TestIdentities:
    @pytest.mark.parametrize("seed", [0, 1])
    def test_identity_is_unit(self, seed):
        A, mk = _multi(seed, d=seed)
        F = mk("morphism", "F")
        I = pc.identity_pcy(A, seed, 3, 4)
        assert pc.compose_pcy(I, F).equals(F)
        assert pc.compose_pcy(F, I).equals(F)

    def test_identity_is_morphism(self):
        A = random_dg_quiver(replace(SUITE_PARAMS, seed=3))
        M = random_pcy_structure(A, 1, 2, 4, replace(SUITE_PARAMS, seed=3))
        I = pc.identity_pcy(A, 1, 2, 4)
        assert pc.pcy_mi_defect(I, M, M).is_zero()

    def test_bracket_of_structure_with_itself(self):
        _, mk = _multi(2, d=1)
        M = mk("structure", "M")
        assert pc.necklace_bracket(M, M).equals(pc.mc_defect(M).scale(QQ(2)))

    def test_zero_homotopy(self):
        _, mk = _multi(3)
        M, F = mk("structure", "M"), mk("morphism", "F")
        H = F.like(weight=1)
        assert pc.lower_compose(M, H, F).is_zero()
        assert pc.upper_compose(H, M, F).is_zero()

    def test_different_d_rejected(self):
        _, mk0 = _multi(4, d=0)
        _, mk1 = _multi(4, d=1)
        with pytest.raises(pc.PcyError):
            pc.necklace_compose(mk0("structure", "M"), mk1("structure", "M"))


class TestEquivariance:
    @pytest.mark.parametrize("d", [-1, 0, 1, 2])
    def test_mc_defect_of_invariant_is_invariant(self, d):
        _, mk = _multi(14 + d, d=d)
        M = mk("structure", "M")
        assert is_cyclically_invariant(M)
        assert is_cyclically_invariant(pc.mc_defect(M))

    def test_symmetrize_commutes_with_embedding(self):
        _, m, F, _, emb = _single_group(15, 1)
        for X in (m, F):
            E = pc.embed_ainf(X, 1, 3)
            assert symmetrize(E).equals(E)


class TestStructures:
    @pytest.mark.parametrize("d", [0, 1])
    def test_gauge_transport(self, d):
        p = replace(SUITE_PARAMS, seed=6)
        A = random_dg_quiver(p)
        M = random_pcy_structure(A, d, 2, 4, p)
        assert is_cyclically_invariant(M)
        assert pc.mc_defect(M).is_zero()
        assert any(len(k) == 2 for k in M.comps)

    def test_transport_is_morphism(self):
        p = replace(SUITE_PARAMS, seed=7)
        A = random_dg_quiver(p)
        MA = random_pcy_structure(A, 0, 2, 4, p)
        F = gauge_pcy(A, 0, 2, 4, p, salt="other")
        MB = pc.transport_pcy(F, MA)
        assert pc.pcy_mi_defect(F, MA, MB).is_zero()
        G = pc.invert_pcy(F, MA, MB)
        assert pc.compose_pcy(G, F).equals(pc.identity_pcy(A, 0, 2, 4))


class TestTransfer:
    @pytest.mark.parametrize("direction", ["from", "to"])
    def test_along_identity(self, direction):
        p = replace(SUITE_PARAMS, seed=22)
        A = random_dg_quiver(p)
        M = random_pcy_structure(A, 1, 2, 4, p)
        f = ai.identity_morphism(A, 4)
        if direction == "from":
            MA, F = pc.transfer_pcy_from_target(f, M)
            assert pc.mc_defect(MA).is_zero() and pc.pcy_mi_defect(F, MA, M).is_zero()
        else:
            MB, F = pc.transfer_pcy_to_target(f, M)
            assert pc.mc_defect(MB).is_zero() and pc.pcy_mi_defect(F, M, MB).is_zero()

    def test_minimal_model(self):
        p = replace(SUITE_PARAMS, seed=23)
        A = random_dg_quiver(p)
        M = random_pcy_structure(A, 0, 2, 4, p)
        H, MH, P = pc.pcy_minimal_model(A, M)
        assert is_cyclically_invariant(MH)
        assert pc.mc_defect(MH).is_zero() and pc.pcy_mi_defect(P, M, MH).is_zero()
        assert not any(len(k) == 1 and len(k[0]) == 2 for k in MH.comps)

    def test_wrong_quiver(self):
        p = replace(SMALL, seed=10)
        A, B = random_dg_quiver(p), random_dg_quiver(replace(p, seed=11))
        M = random_pcy_structure(A, 0, 1, 3, p)
        with pytest.raises(pc.PcyError):
            pc.transfer_pcy_from_target(ai.identity_morphism(B, 3), M)

    def test_single_group_matches_ainf_transfer(self):
        p = replace(SUITE_PARAMS, seed=12)
        A = random_dg_quiver(p)
        m = random_ainf_structure(A, 4, p)
        H, mH, _ = ai.minimal_model(A, m)
        _, MH, _ = pc.pcy_minimal_model(A, pc.embed_ainf(m, 0, 1, "structure"))
        assert pc.restrict_to_ainf(MH).equals(mH)
