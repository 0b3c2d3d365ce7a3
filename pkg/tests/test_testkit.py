from dataclasses import replace
from fractions import Fraction

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from hptransfer.ainfty import gerstenhaber_compose
from hptransfer.diagrams import evaluate, make_datum
from hptransfer.exactla import GF
from hptransfer.graded import add_into
from hptransfer.precy import embed_ainf, necklace_diagrams
from hptransfer.testkit import (
    GenParams,
    SUITE_PARAMS,
    oracle_mismatches,
    random_collection,
    random_dg_quiver,
    random_hom_collection,
    random_multi_collection,
    reference_eval,
    run_identity_suite,
)

P = GenParams(object_count=2, min_dim=1, max_dim=2, density=Fraction(2, 3))


class TestGenerators:
    def test_reproducible(self):
        assert random_dg_quiver(replace(P, seed=4)) == random_dg_quiver(replace(P, seed=4))
        a = random_collection("multi", "morphism", replace(P, seed=4), 3, 2, d=1)
        b = random_collection("multi", "morphism", replace(P, seed=4), 3, 2, d=1)
        assert a.comps == b.comps

    def test_seeds_differ(self):
        A = random_dg_quiver(replace(P, min_dim=2, degree_window=(0, 0), seed=1))
        a = random_collection("hom", "structure", replace(P, seed=1), 3, source=A)
        b = random_collection("hom", "structure", replace(P, seed=2), 3, source=A)
        assert not a.equals(b)

    def test_zero_density(self):
        p = replace(P, density=Fraction(0))
        assert random_collection("hom", "structure", p, 4).is_zero()
        assert random_collection("multi", "structure", p, 4, 3).is_zero()

    @given(st.integers(0, 10**6), st.sampled_from([-1, 0, 1, 2]))
    @settings(max_examples=20, deadline=None)
    def test_homogeneous(self, seed, d):
        p = replace(P, seed=seed)
        A = random_dg_quiver(p)
        assert A.is_dg()
        ident = {x: x for x in A.objects}
        random_hom_collection(A, A, ident, 1, 4, p).check_homogeneous()
        random_multi_collection(A, A, ident, d, "structure", 3, 4, p, min_size=1).check_homogeneous()

    def test_zero_quiver(self):
        A = random_dg_quiver(replace(P, max_dim=0, min_dim=0))
        assert A.total_dim() == 0

    def test_square_zero_seed_26(self):
        A = random_dg_quiver(GenParams(object_count=3, max_dim=4, degree_window=(-2, 2), seed=26))
        for xy in A.pairs():
            d = A.differential[xy].matrix().to_dense(0)
            n = len(d)
            assert all(sum(d[i][k] * d[k][j] for k in range(n)) == 0 for i in range(n) for j in range(n))

    def test_dimension_bounds(self):
        A = random_dg_quiver(replace(P, min_dim=2, max_dim=3, object_count=3, seed=5))
        assert all(2 <= A.dim(x, y) <= 3 for x, y in A.pairs())
        assert all(-1 <= g <= 1 for V in A.hom.values() for g in V.degrees)

    def test_prime_field_coefficients_nonzero(self):
        p = replace(P, field=GF(5), seed=3, density=Fraction(1))
        C = random_collection("hom", "morphism", p, 3)
        assert all(v != 0 for comp in C.comps.values() for row in comp.values() for v in row.values())


class TestReferenceEvaluation:
    @pytest.mark.parametrize("d", [0, 1])
    def test_single_disc(self, d):
        p = replace(P, seed=6)
        A = random_dg_quiver(p)
        M = random_multi_collection(A, A, {x: x for x in A.objects}, d, "structure", 3, 4, p, min_size=1)
        for key in M.comps:
            D = make_datum(["M"], [key], [], 0, len(key) - 1)
            assert D.boundary == key
            assert reference_eval(D, {"M": M}) == M.comps[key]
            assert evaluate(D, {"M": M}, d) == M.comps[key]

    @pytest.mark.parametrize("seed", [27, 28])
    def test_two_discs_sum_to_gerstenhaber(self, seed):
        # single-group necklace diagrams, summed at each boundary, give the Gerstenhaber composite
        p = replace(SUITE_PARAMS, seed=seed)
        A = random_dg_quiver(p)
        ident = {x: x for x in A.objects}
        m = random_hom_collection(A, A, ident, 1, 4, p, salt="m")
        n = random_hom_collection(A, A, ident, 1, 4, p, salt="n")
        M, N = embed_ainf(m, 0, 1), embed_ainf(n, 0, 1)
        got: dict = {}
        for D in necklace_diagrams(M.nonzero_keys(), N.nonzero_keys(), 1, 4):
            for w, row in reference_eval(D, {"M": M, "N": N}, 0).items():
                add_into(got.setdefault(D.boundary[0], {}), w, {o[0]: c for o, c in row.items()})
        got = {k: v for k, v in got.items() if v}
        assert got and got == gerstenhaber_compose(m, n).comps

    def test_small_oracle_run(self):
        bad, count = oracle_mismatches(seeds=2, lmax=2, nmax=3)
        assert count > 0 and bad == []


class TestSuite:
    def test_no_seeds(self):
        rep = run_identity_suite(0)
        assert rep.ok and rep.checked == 0

    def test_one_seed(self):
        rep = run_identity_suite(1, nmax_ainf=4, lmax=2, nmax=3, first_seed=3)
        assert rep.ok and rep.checked == 7

    def test_prime_field(self):
        rep = run_identity_suite(1, nmax_ainf=4, lmax=2, nmax=3, params=replace(SUITE_PARAMS, field=GF(7)))
        assert rep.ok

    def test_dg_only_inputs(self):
        from hptransfer import ainfty as ai
        A = random_dg_quiver(replace(SUITE_PARAMS, seed=2))
        m = ai.differential_structure(A, 4)
        f = ai.identity_morphism(A, 4)
        # with only arity-two parts every identity is a statement about chain maps
        assert ai.gerstenhaber_compose(m, m).is_zero()
        assert ai.mi_defect(f, m, m).is_zero()
        assert ai.compose_wrt(m, ai.mi_defect(f, m, m), f).is_zero()

    def test_ainf_only(self):
        rep = run_identity_suite(2, nmax_ainf=4, pcy=False)
        assert rep.ok and rep.checked == 6
