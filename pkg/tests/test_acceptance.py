"""Acceptance gate: one PASS/FAIL line per criterion, all with exact arithmetic."""

import itertools
import time
from dataclasses import replace
from fractions import Fraction

from hptransfer import ainfty as ai
from hptransfer import precy as pc
from hptransfer.bundle import Bundle, dump, parse, serialize
from hptransfer.cli import main
from hptransfer.exactla import GF, QQ, rref
from hptransfer.graded import cohomology_contraction
from hptransfer.multi import is_cyclically_invariant
from hptransfer.testkit import (
    SUITE_PARAMS,
    GenParams,
    gauge_ainf,
    gauge_pcy,
    matrix_dg_category,
    oracle_mismatches,
    random_ainf_structure,
    random_collection,
    random_dg_quiver,
    random_pcy_structure,
    tree_formula_m3,
)

D_VALUES = (-1, 0, 1, 2)


def _squares_to_zero(A) -> bool:
    """Dense matrix product, independent of the library's sparse composition."""
    for xy in A.pairs():
        M = A.differential[xy].matrix().to_dense(0)
        n = len(M)
        for r in range(n):
            for c in range(n):
                if sum(M[r][k] * M[k][c] for k in range(n)) != 0:
                    return False
    return True


def _contraction_maps(A, nmax):
    C = cohomology_contraction(A)
    ident = {x: x for x in A.objects}
    i = ai.chain_map_morphism(C.reduced, A, ident, C.include, nmax)
    p = ai.chain_map_morphism(A, C.reduced, ident, C.project, nmax)
    return C, i, p


def _lowest(C):
    return {k: v for k, v in C.comps.items() if len(k) == 2}


def test_criterion_1_arity_one_reduction(tmp_path, capsys, criterion):
    start = time.perf_counter()
    agree, dg_count = 0, 0
    for seed in range(50):
        p = GenParams(object_count=1 + seed % 3, max_dim=4, degree_window=(-2, 2), density=Fraction(2, 3), seed=seed)
        A = random_dg_quiver(p, square_zero=seed % 2 == 0)
        b = Bundle(QQ)
        b.add("m", ai.differential_structure(A, 4), "A", "A")
        path = tmp_path / f"q{seed}.json"
        dump(b, str(path))
        code = main(["check-ainf", str(path)])
        capsys.readouterr()
        expected = _squares_to_zero(A)
        dg_count += expected
        agree += (code == 0) == expected and code in (0, 1)
    elapsed = time.perf_counter() - start
    ok = agree == 50 and 0 < dg_count < 50 and elapsed < 5
    criterion(1, ok, f"{agree}/50 verdicts match d^2 = 0, {50 - dg_count} non-dg quivers, {elapsed:.2f}s")
    assert ok


def test_criterion_2_identity_suites(capsys, criterion):
    start = time.perf_counter()
    code = main(["suite", "--seeds", "100", "--ainf-size", "5", "--max-length", "3", "--max-size", "4"])
    out = capsys.readouterr().out
    elapsed = time.perf_counter() - start
    ok = code == 0 and '"failures": []' in out and '"checked": 700' in out and elapsed < 600
    criterion(2, ok, f"7 identities x 100 seeds, exit {code}, {elapsed:.0f}s")
    assert ok


def test_criterion_3_ainf_transfer(criterion):
    nmax, failures = 5, []
    for seed in range(25):
        p = replace(SUITE_PARAMS, seed=seed)
        A = random_dg_quiver(p)
        C, i, pr = _contraction_maps(A, nmax)
        mA = random_ainf_structure(A, nmax, p)
        # pull back along the inclusion of cohomology
        mH, I = ai.transfer_from_target(i, mA)
        checks = [ai.is_ainf(mH).ok, ai.is_morphism(I, mH, mA).ok, _lowest(I) == _lowest(i),
                  _lowest(mH) == _lowest(ai.differential_structure(C.reduced, nmax))]
        # push forward along the projection
        mP, P = ai.transfer_to_target(pr, mA)
        checks += [ai.is_ainf(mP).ok, ai.is_morphism(P, mA, mP).ok, _lowest(P) == _lowest(pr), not _lowest(mP)]
        if not all(checks):
            failures.append((seed, checks))
    # arity three against the classical tree formula
    tree_terms, tree_bad = 0, 0
    for seed in range(25):
        p = GenParams(object_count=2, degree_window=(-1, 1), seed=seed, density=Fraction(2, 3))
        B, product = matrix_dg_category(p, points=5)
        mB = ai.dg_category_structure(B, product, 4)
        C, i, _ = _contraction_maps(B, 4)
        mH, _ = ai.transfer_from_target(i, mB, contraction=C)
        H = C.reduced
        for xs in itertools.product(B.objects, repeat=4):
            dims = [range(H.dim(xs[k], xs[k + 1])) for k in range(3)]
            for word in itertools.product(*dims):
                want = {k: -v for k, v in tree_formula_m3(C, product, xs, word).items()}
                got = dict(mH.row(xs, word))
                tree_terms += bool(want)
                tree_bad += want != got
    ok = not failures and tree_bad == 0 and tree_terms > 0
    criterion(3, ok, f"25 seeds both directions at N=5, {len(failures)} failing; "
                     f"tree formula {tree_terms} nonzero words, {tree_bad} mismatches")
    assert ok


def test_criterion_4_pcy_transfer(criterion):
    lmax, nmax, failures = 3, 4, []
    start = time.perf_counter()
    for seed in range(10):
        d = D_VALUES[seed % 4]
        p = replace(SUITE_PARAMS, seed=seed)
        A = random_dg_quiver(p)
        C, i, pr = _contraction_maps(A, nmax)
        MA = random_pcy_structure(A, d, lmax, nmax, p)
        MH, I = pc.transfer_pcy_from_target(i, MA)
        mH, I1 = ai.transfer_from_target(i, pc.restrict_to_ainf(MA))
        MP, P = pc.transfer_pcy_to_target(pr, MA)
        mP, P1 = ai.transfer_to_target(pr, pc.restrict_to_ainf(MA))
        checks = [
            pc.mc_defect(MH).is_zero(), pc.pcy_mi_defect(I, MH, MA).is_zero(),
            is_cyclically_invariant(MH), is_cyclically_invariant(I),
            pc.restrict_to_ainf(MH).comps == mH.comps, pc.restrict_to_ainf(I).comps == I1.comps,
            pc.mc_defect(MP).is_zero(), pc.pcy_mi_defect(P, MA, MP).is_zero(),
            is_cyclically_invariant(MP), is_cyclically_invariant(P),
            pc.restrict_to_ainf(MP).comps == mP.comps, pc.restrict_to_ainf(P).comps == P1.comps,
            any(len(k) > 1 for k in MA.comps),
        ]
        if not all(checks):
            failures.append((seed, d, checks))
    elapsed = time.perf_counter() - start
    ok = not failures and elapsed < 900
    criterion(4, ok, f"10 seeds at (3,4) both directions, {len(failures)} failing, {elapsed:.0f}s")
    assert ok


def test_criterion_5_inversion(criterion):
    failures = []
    for seed in range(25):
        p = replace(SUITE_PARAMS, seed=seed)
        A = random_dg_quiver(p)
        F = gauge_ainf(A, 5, p, salt="iso")
        mA = random_ainf_structure(A, 5, p)
        mB = ai.transport_structure(F, mA)
        G = ai.invert_morphism(F, mA, mB)
        idA = ai.identity_morphism(A, 5)
        ainf_ok = [ai.compose_morphisms(G, F).equals(idA), ai.compose_morphisms(F, G).equals(idA),
                   ai.is_morphism(G, mB, mA).ok, ai.is_morphism(F, mA, mB).ok]
        d = D_VALUES[seed % 4]
        F = gauge_pcy(A, d, 3, 4, p, salt="iso")
        MA = random_pcy_structure(A, d, 3, 4, p)
        MB = pc.transport_pcy(F, MA)
        G = pc.invert_pcy(F, MA, MB)
        idA = pc.identity_pcy(A, d, 3, 4)
        pcy_ok = [pc.compose_pcy(G, F).equals(idA), pc.compose_pcy(F, G).equals(idA),
                  pc.pcy_mi_defect(G, MB, MA).is_zero(), pc.pcy_mi_defect(F, MA, MB).is_zero(),
                  is_cyclically_invariant(G)]
        if not all(ainf_ok + pcy_ok):
            failures.append((seed, ainf_ok, pcy_ok))
    ok = not failures
    criterion(5, ok, f"25 A-infinity and 25 pre-CY isomorphisms, {len(failures)} failing")
    assert ok


def test_criterion_6_quasi_inverse(criterion):
    failures, nontrivial = [], 0
    for seed in range(10):
        p = replace(SUITE_PARAMS, seed=seed)
        A = random_dg_quiver(p)
        mA = random_ainf_structure(A, 4, p)
        H, mH, F = ai.minimal_model(A, mA)
        nontrivial += H.total_dim() < A.total_dim()
        q = ai.quasi_inverse(F, mA, mH)
        HA, HB = q.induced.source.contraction.reduced, q.induced.target.contraction.reduced
        ainf_ok = [ai.compose_morphisms(q.HG, q.HF).equals(ai.identity_morphism(HA, 4)),
                   ai.compose_morphisms(q.HF, q.HG).equals(ai.identity_morphism(HB, 4)),
                   ai.is_morphism(q.G, mH, mA).ok]
        d = D_VALUES[seed % 4]
        MA = random_pcy_structure(A, d, 3, 4, p)
        H, MH, F = pc.pcy_minimal_model(A, MA)
        q = pc.pcy_quasi_inverse(F, MA, MH)
        HA, HB = q.induced.source.contraction.reduced, q.induced.target.contraction.reduced
        pcy_ok = [pc.compose_pcy(q.HG, q.HF).equals(pc.identity_pcy(HA, d, 3, 4)),
                  pc.compose_pcy(q.HF, q.HG).equals(pc.identity_pcy(HB, d, 3, 4)),
                  pc.pcy_mi_defect(q.G, MH, MA).is_zero()]
        if not all(ainf_ok + pcy_ok):
            failures.append((seed, ainf_ok, pcy_ok))
    ok = not failures and nontrivial > 0
    criterion(6, ok, f"10 A-infinity and 10 pre-CY quasi-isomorphisms ({nontrivial} not isomorphisms), "
                     f"{len(failures)} failing")
    assert ok


def _first_components_invertible(F) -> bool:
    for (x, y) in F.source.pairs():
        V, W = F.source.hom[(x, y)], F.target.hom[(F.obj_map[x], F.obj_map[y])]
        if V.dim != W.dim:
            return False
        comp = F.comps.get(((x, y),), {})
        entries = {(o[0], w[0]): c for w, row in comp.items() for o, c in row.items()}
        from hptransfer.exactla import SparseMatrix
        if len(rref(SparseMatrix.from_dict(W.dim, V.dim, entries), F.source.field.one).pivot_cols) != V.dim:
            return False
    return True


def test_criterion_7_transferred_structures_isomorphic(criterion):
    failures = []
    for seed in range(10):
        d = D_VALUES[seed % 4]
        p = replace(SUITE_PARAMS, seed=seed)
        A = random_dg_quiver(p)
        MA = random_pcy_structure(A, d, 3, 4, p)
        t = pc.pcy_cohomology_transfers(A, MA)
        PI = pc.compose_pcy(t.P, t.I)
        checks = [_first_components_invertible(PI), pc.pcy_mi_defect(PI, t.M_i, t.M_p).is_zero()]
        K = pc.invert_pcy(PI, t.M_i, t.M_p)
        H = t.contraction.reduced
        checks += [pc.compose_pcy(K, PI).equals(pc.identity_pcy(H, d, 3, 4)),
                   pc.compose_pcy(PI, K).equals(pc.identity_pcy(H, d, 3, 4))]
        if not all(checks):
            failures.append((seed, checks))
    ok = not failures
    criterion(7, ok, f"10 seeds, {len(failures)} failing")
    assert ok


def test_criterion_8_oracle_equivalence(criterion):
    bad, count = oracle_mismatches(seeds=20, lmax=3, nmax=4)
    ok = not bad and count > 0
    criterion(8, ok, f"{count} diagrams over 20 seeds, {len(bad)} mismatches")
    assert ok


def _random_bundle(k: int) -> Bundle:
    field = QQ if k % 3 else GF(7 + 4 * (k % 2))
    p = GenParams(object_count=1 + k % 3, max_dim=3, min_dim=k % 2, density=Fraction(1, 2), seed=k, field=field)
    A = random_dg_quiver(p)
    b = Bundle(field, metadata={"seed": k})
    kind = k % 5
    if kind == 0:
        b.add_quiver("A", A)
    elif kind == 1:
        b.add("m", random_ainf_structure(A, 4, p), "A", "A")
    elif kind == 2:
        b.add("M", random_pcy_structure(A, D_VALUES[k % 4], 2, 3, p), "A", "A")
    elif kind == 3:
        b.add("F", random_collection("multi", "morphism", p, 3, 2, d=k % 3, source=A, salt="bundle"))
        b.add("C", random_collection("hom", "morphism", p, 3, source=A, target=b.collections["F"].target))
    else:
        b.add("m", random_collection("hom", "structure", p, 4, source=A), "A", "A")
        b.add("M", random_collection("multi", "structure", p, 4, 3, d=-1, source=A), "A", "A")
    return b


def test_criterion_9_serialization(criterion):
    stable, canonical = 0, 0
    for k in range(100):
        b = _random_bundle(k)
        text = serialize(b)
        once = serialize(parse(text))
        twice = serialize(parse(once))
        stable += text == once == twice
        shuffled = Bundle(b.field, dict(reversed(list(b.quivers.items()))),
                          dict(reversed(list(b.collections.items()))), dict(reversed(list(b.metadata.items()))))
        canonical += serialize(shuffled) == text
    ok = stable == 100 and canonical == 100
    criterion(9, ok, f"{stable}/100 byte-identical double round trips, {canonical}/100 order-independent")
    assert ok
