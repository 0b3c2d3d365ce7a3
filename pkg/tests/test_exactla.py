import random
from fractions import Fraction

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from hptransfer.exactla import GF, QQ, SparseMatrix, field_from_descriptor, rref, solve, solve_in_subspace


def _dense(M):
    return M.to_dense(0)


def _mul(A, B):
    return [[sum(A[i][k] * B[k][j] for k in range(len(B))) for j in range(len(B[0]))] for i in range(len(A))]


def _random_matrix(rng, n, m, density=0.6, field=QQ):
    return SparseMatrix.from_dict(n, m, {(i, j): field(rng.randint(-4, 4)) for i in range(n) for j in range(m)
                                         if rng.random() < density})


def _naive_rank(rows):
    """Plain dense elimination with Fractions, written independently of the library."""
    rows = [[Fraction(int(v.numerator), int(v.denominator)) for v in r] for r in rows]
    rank, col = 0, 0
    ncols = len(rows[0]) if rows else 0
    while rank < len(rows) and col < ncols:
        piv = next((r for r in range(rank, len(rows)) if rows[r][col] != 0), None)
        if piv is None:
            col += 1
            continue
        rows[rank], rows[piv] = rows[piv], rows[rank]
        for r in range(len(rows)):
            if r != rank and rows[r][col] != 0:
                f = rows[r][col] / rows[rank][col]
                rows[r] = [a - f * b for a, b in zip(rows[r], rows[rank])]
        rank += 1
        col += 1
    return rank


matrices = st.builds(
    lambda n, m, seed: _random_matrix(random.Random(seed), n, m),
    st.integers(1, 6), st.integers(1, 7), st.integers(0, 10**6))


class TestFields:
    def test_rationals_are_reduced(self):
        x = QQ.parse("-6/4")
        assert QQ.format(x) == "-3/2"
        assert x.denominator > 0

    def test_prime_field_rejects_small_characteristic(self):
        for p in (2, 3):
            with pytest.raises(ValueError):
                GF(p)
        with pytest.raises(ValueError):
            GF(9)

    def test_descriptor(self):
        assert field_from_descriptor("Q") is QQ
        F = field_from_descriptor("Fp:7")
        assert F.characteristic() == 7 and F.format(F.parse("1/2")) == "4"
        with pytest.raises(ValueError):
            field_from_descriptor("R")

    def test_no_floats(self):
        with pytest.raises(TypeError):
            QQ(0.5)
        with pytest.raises(TypeError):
            GF(5)(0.5)

    @given(st.integers(-50, 50), st.integers(-50, 50).filter(bool))
    def test_prime_field_inverse(self, a, b):
        F = GF(13)
        if F(b) == 0:
            return
        assert (F(a) / F(b)) * F(b) == F(a)


class TestRref:
    def test_identity(self):
        res = rref(SparseMatrix.identity(3, QQ.one))
        assert res.R == SparseMatrix.identity(3, QQ.one)
        assert res.pivot_cols == (0, 1, 2)

    def test_single_scaling(self):
        res = rref(SparseMatrix.from_rows([[QQ(2)]]))
        assert _dense(res.R) == [[1]]
        assert _dense(res.basis_change) == [[QQ(1) / 2]]

    def test_seeded_5x7(self):
        M = _random_matrix(random.Random(1), 5, 7)
        res = rref(M, QQ.one)
        assert _mul(_dense(res.basis_change), _dense(M)) == _dense(res.R)
        assert len(res.pivot_cols) == _naive_rank(_dense(M))

    @given(matrices)
    @settings(max_examples=60)
    def test_basis_change_and_idempotence(self, M):
        res = rref(M, QQ.one)
        assert _mul(_dense(res.basis_change), _dense(M)) == _dense(res.R)
        assert rref(res.R, QQ.one).R == res.R
        assert len(res.pivot_cols) == _naive_rank(_dense(M))

    @given(matrices)
    @settings(max_examples=30)
    def test_deterministic(self, M):
        assert rref(M, QQ.one) == rref(SparseMatrix.from_dict(M.nrows, M.ncols, M.entries()), QQ.one)


class TestSolve:
    def test_identity(self):
        assert solve(SparseMatrix.identity(2, QQ.one), [QQ(1), QQ(2)]) == [1, 2]

    def test_inconsistent(self):
        assert solve(SparseMatrix.from_rows([[QQ(1)], [QQ(0)]]), [QQ(0), QQ(1)]) is None

    def test_seeded_consistent(self):
        rng = random.Random(2)
        A = _random_matrix(rng, 4, 6)
        x0 = [QQ(rng.randint(-3, 3)) for _ in range(6)]
        b = A.apply(x0, QQ.zero)
        x = solve(A, b)
        assert A.apply(x, QQ.zero) == b

    @given(matrices, st.integers(0, 10**6))
    @settings(max_examples=60)
    def test_substitution(self, A, seed):
        rng = random.Random(seed)
        x0 = [QQ(rng.randint(-3, 3)) for _ in range(A.ncols)]
        b = A.apply(x0, QQ.zero)
        x = solve(A, b, QQ.zero)
        assert x is not None and A.apply(x, QQ.zero) == b
        # free variables are zero
        pivots = set(rref(A, QQ.one).pivot_cols)
        assert all(x[c] == 0 for c in range(A.ncols) if c not in pivots)

    def test_prime_field(self):
        F = GF(5)
        A = SparseMatrix.from_rows([[F(2), F(1)], [F(1), F(4)]])
        x = solve(A, [F(1), F(0)])
        assert A.apply(x, F.zero) == [F(1), F(0)]


class TestSolveInSubspace:
    def test_full_span_agrees_with_solve(self):
        rng = random.Random(4)
        A = _random_matrix(rng, 3, 4)
        b = A.apply([QQ(1), QQ(0), QQ(-1), QQ(2)], QQ.zero)
        S = [[QQ(int(i == j)) for i in range(4)] for j in range(4)]
        assert solve_in_subspace(A, b, S) == solve(A, b)

    def test_zero_span(self):
        A = SparseMatrix.from_rows([[QQ(1), QQ(2)]])
        assert solve_in_subspace(A, [QQ(0)], [[QQ(0), QQ(0)]]) == [0, 0]
        assert solve_in_subspace(A, [QQ(0)], []) == [0, 0]
        assert solve_in_subspace(A, [QQ(1)], []) is None

    def test_seeded(self):
        rng = random.Random(3)
        A = _random_matrix(rng, 4, 5)
        S = [[QQ(rng.randint(-2, 2)) for _ in range(5)] for _ in range(2)]
        y = [QQ(2), QQ(-1)]
        x0 = [S[0][r] * y[0] + S[1][r] * y[1] for r in range(5)]
        b = A.apply(x0, QQ.zero)
        x = solve_in_subspace(A, b, S)
        assert A.apply(x, QQ.zero) == b
        # membership: x is a combination of the spanning vectors
        M = SparseMatrix.from_dict(5, 2, {(r, c): S[c][r] for c in range(2) for r in range(5)})
        assert solve(M, x) is not None

    def test_outside_subspace(self):
        A = SparseMatrix.identity(2, QQ.one)
        assert solve_in_subspace(A, [QQ(1), QQ(0)], [[QQ(0), QQ(1)]]) is None
