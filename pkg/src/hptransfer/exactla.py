"""Exact fields and deterministic sparse linear algebra.

Two kinds of scalar are supported: arbitrary precision rationals (``QQ``) and
prime fields ``GF(p)`` with ``p > 3``.  Field elements are ordinary Python
objects supporting ``+ - * /`` and comparison with integers, so the rest of
the package is written once for both.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

import gmpy2
from gmpy2 import mpq


class Field:
    """Base class for the scalar fields used throughout the package."""

    name: str

    def __call__(self, value) -> object:
        raise NotImplementedError

    @property
    def zero(self):
        return self(0)

    @property
    def one(self):
        return self(1)

    def parse(self, text: str):
        raise NotImplementedError

    def format(self, value) -> str:
        raise NotImplementedError

    def characteristic(self) -> int:
        raise NotImplementedError

    def __repr__(self) -> str:
        return self.name


class RationalField(Field):
    name = "Q"

    def __call__(self, value):
        if isinstance(value, FpElement):
            raise TypeError("cannot coerce a prime field element into Q")
        if isinstance(value, float):
            raise TypeError("floating point values are not allowed")
        return mpq(value)

    def parse(self, text: str):
        num, _, den = text.strip().partition("/")
        return mpq(int(num), int(den) if den else 1)

    def format(self, value) -> str:
        value = mpq(value)
        if value.denominator == 1:
            return str(value.numerator)
        return f"{value.numerator}/{value.denominator}"

    def characteristic(self) -> int:
        return 0

    def __eq__(self, other):
        return isinstance(other, RationalField)

    def __hash__(self):
        return hash("Q")


class FpElement:
    """Residue class modulo a prime ``p``."""

    __slots__ = ("v", "p")

    def __init__(self, v: int, p: int):
        self.v = v % p
        self.p = p

    def _coerce(self, other):
        if isinstance(other, FpElement):
            if other.p != self.p:
                raise ValueError("mixing different prime fields")
            return other.v
        if isinstance(other, int):
            return other
        if isinstance(other, mpq) and other.denominator == 1:
            return int(other.numerator)
        return NotImplemented

    def __add__(self, other):
        o = self._coerce(other)
        if o is NotImplemented:
            return o
        return FpElement(self.v + o, self.p)

    __radd__ = __add__

    def __sub__(self, other):
        o = self._coerce(other)
        if o is NotImplemented:
            return o
        return FpElement(self.v - o, self.p)

    def __rsub__(self, other):
        o = self._coerce(other)
        if o is NotImplemented:
            return o
        return FpElement(o - self.v, self.p)

    def __mul__(self, other):
        o = self._coerce(other)
        if o is NotImplemented:
            return o
        return FpElement(self.v * o, self.p)

    __rmul__ = __mul__

    def __neg__(self):
        return FpElement(-self.v, self.p)

    def __pos__(self):
        return self

    def inverse(self):
        if self.v == 0:
            raise ZeroDivisionError("inverse of zero in a prime field")
        return FpElement(pow(self.v, -1, self.p), self.p)

    def __truediv__(self, other):
        o = self._coerce(other)
        if o is NotImplemented:
            return o
        return self * FpElement(o, self.p).inverse()

    def __rtruediv__(self, other):
        o = self._coerce(other)
        if o is NotImplemented:
            return o
        return FpElement(o, self.p) * self.inverse()

    def __eq__(self, other):
        o = self._coerce(other)
        if o is NotImplemented:
            return False
        return (self.v - o) % self.p == 0

    def __ne__(self, other):
        return not self == other

    def __hash__(self):
        return hash((self.v, self.p))

    def __bool__(self):
        return self.v != 0

    def __repr__(self):
        return f"{self.v} mod {self.p}"


def _is_prime(n: int) -> bool:
    return n >= 2 and bool(gmpy2.is_prime(n, 64))


class PrimeField(Field):
    def __init__(self, p: int):
        if not _is_prime(p):
            raise ValueError(f"{p} is not prime")
        if p in (2, 3):
            raise ValueError("characteristic 2 and 3 are not supported")
        self.p = p
        self.name = f"Fp:{p}"

    def __call__(self, value):
        if isinstance(value, FpElement):
            if value.p != self.p:
                raise ValueError("mixing different prime fields")
            return value
        if isinstance(value, float):
            raise TypeError("floating point values are not allowed")
        if isinstance(value, mpq):
            return FpElement(int(value.numerator), self.p) / int(value.denominator)
        return FpElement(int(value), self.p)

    def parse(self, text: str):
        num, _, den = text.strip().partition("/")
        value = FpElement(int(num), self.p)
        return value / int(den) if den else value

    def format(self, value) -> str:
        return str(self(value).v)

    def characteristic(self) -> int:
        return self.p

    def __eq__(self, other):
        return isinstance(other, PrimeField) and other.p == self.p

    def __hash__(self):
        return hash(("Fp", self.p))


QQ = RationalField()


def GF(p: int) -> PrimeField:
    return PrimeField(p)


def field_from_descriptor(text: str) -> Field:
    """Parse ``"Q"`` or ``"Fp:<p>"``."""
    text = text.strip()
    if text == "Q":
        return QQ
    if text.startswith("Fp:"):
        return PrimeField(int(text[3:]))
    raise ValueError(f"unknown field descriptor {text!r}")


@dataclass(frozen=True)
class SparseMatrix:
    """Row-major sparse matrix; only nonzero entries are stored."""

    nrows: int
    ncols: int
    rows: tuple = field(default=())  # tuple of (row, ((col, value), ...)) sorted

    @staticmethod
    def from_dict(nrows: int, ncols: int, entries: Mapping[tuple[int, int], object]) -> "SparseMatrix":
        by_row: dict[int, dict[int, object]] = {}
        for (r, c), v in entries.items():
            if not (0 <= r < nrows and 0 <= c < ncols):
                raise IndexError(f"entry ({r}, {c}) outside {nrows}x{ncols}")
            if v != 0:
                by_row.setdefault(r, {})[c] = v
        return SparseMatrix(nrows, ncols, _freeze(by_row))

    @staticmethod
    def from_rows(rows: Sequence[Sequence[object]], ncols: int | None = None) -> "SparseMatrix":
        ncols = len(rows[0]) if ncols is None else ncols
        entries = {(r, c): v for r, row in enumerate(rows) for c, v in enumerate(row)}
        return SparseMatrix.from_dict(len(rows), ncols, entries)

    @staticmethod
    def identity(n: int, one) -> "SparseMatrix":
        return SparseMatrix(n, n, tuple((i, ((i, one),)) for i in range(n)))

    def row_dicts(self) -> dict[int, dict[int, object]]:
        return {r: dict(entries) for r, entries in self.rows}

    def entries(self) -> dict[tuple[int, int], object]:
        return {(r, c): v for r, row in self.rows for c, v in row}

    def to_dense(self, zero=0) -> list[list[object]]:
        out = [[zero] * self.ncols for _ in range(self.nrows)]
        for r, row in self.rows:
            for c, v in row:
                out[r][c] = v
        return out

    def __matmul__(self, other: "SparseMatrix") -> "SparseMatrix":
        if self.ncols != other.nrows:
            raise ValueError("dimension mismatch in product")
        right = other.row_dicts()
        acc: dict[int, dict[int, object]] = {}
        for r, row in self.rows:
            target = {}
            for k, a in row:
                for c, b in right.get(k, {}).items():
                    target[c] = target.get(c, 0) + a * b
            acc[r] = target
        return SparseMatrix(self.nrows, other.ncols, _freeze(acc))

    def apply(self, column: Sequence[object], zero=0) -> list[object]:
        if len(column) != self.ncols:
            raise ValueError("dimension mismatch in matrix-vector product")
        out = [zero] * self.nrows
        for r, row in self.rows:
            s = zero
            for c, v in row:
                s = s + v * column[c]
            out[r] = s
        return out

    def transpose(self) -> "SparseMatrix":
        return SparseMatrix.from_dict(self.ncols, self.nrows, {(c, r): v for (r, c), v in self.entries().items()})


def _freeze(by_row: Mapping[int, Mapping[int, object]]) -> tuple:
    out = []
    for r in sorted(by_row):
        row = tuple(sorted((c, v) for c, v in by_row[r].items() if v != 0))
        if row:
            out.append((r, row))
    return tuple(out)


@dataclass(frozen=True)
class RrefResult:
    R: SparseMatrix
    pivot_cols: tuple[int, ...]
    basis_change: SparseMatrix


def _eliminate(rows: list[dict[int, object]], ncols: int, companions: list[dict[int, object]] | None):
    """In-place Gauss-Jordan elimination with the leftmost-column, lowest-row rule.

    ``companions`` (if given) receives the same row operations.  Returns the
    pivot columns; after the call the first ``len(pivots)`` rows are the
    reduced pivot rows in pivot order and the remaining rows are zero.
    """
    pivots: list[int] = []
    n = len(rows)
    top = 0
    col_index: dict[int, set[int]] = {}
    for i, row in enumerate(rows):
        for c in row:
            col_index.setdefault(c, set()).add(i)
    for col in sorted(col_index):
        if top == n:
            break
        candidates = [i for i in col_index.get(col, ()) if i >= top and rows[i].get(col, 0) != 0]
        if not candidates:
            continue
        piv = min(candidates)
        if piv != top:
            rows[piv], rows[top] = rows[top], rows[piv]
            if companions is not None:
                companions[piv], companions[top] = companions[top], companions[piv]
            for c in rows[piv]:
                col_index.setdefault(c, set()).add(piv)
            for c in rows[top]:
                col_index.setdefault(c, set()).add(top)
        prow = rows[top]
        inv = 1 / prow[col]
        if prow[col] != 1:
            for c in list(prow):
                prow[c] = prow[c] * inv
            if companions is not None:
                comp = companions[top]
                for c in list(comp):
                    comp[c] = comp[c] * inv
        for i in sorted(col_index.get(col, ())):
            if i == top:
                continue
            row = rows[i]
            factor = row.get(col, 0)
            if factor == 0:
                continue
            for c, v in prow.items():
                nv = row.get(c, 0) - factor * v
                if nv == 0:
                    row.pop(c, None)
                else:
                    if c not in row:
                        col_index.setdefault(c, set()).add(i)
                    row[c] = nv
            if companions is not None:
                comp = companions[i]
                for c, v in companions[top].items():
                    nv = comp.get(c, 0) - factor * v
                    if nv == 0:
                        comp.pop(c, None)
                    else:
                        comp[c] = nv
        pivots.append(col)
        top += 1
    return pivots


def rref(M: SparseMatrix, one=None) -> RrefResult:
    """Reduced row echelon form with a deterministic pivot rule.

    Columns are scanned left to right; the pivot is the lowest-index row (among
    the rows not yet used) with a nonzero entry.  ``basis_change @ M == R``.
    """
    if one is None:
        one = next((v for _, row in M.rows for _, v in row), mpq(1))
        one = one * 0 + 1
    rows = [dict() for _ in range(M.nrows)]
    for r, row in M.rows:
        rows[r] = dict(row)
    comps = [{i: one} for i in range(M.nrows)]
    pivots = _eliminate(rows, M.ncols, comps)
    R = SparseMatrix(M.nrows, M.ncols, _freeze(dict(enumerate(rows))))
    T = SparseMatrix(M.nrows, M.nrows, _freeze(dict(enumerate(comps))))
    return RrefResult(R, tuple(pivots), T)


def solve(A: SparseMatrix, b: Sequence[object], zero=None) -> list[object] | None:
    """Canonical solution of ``A x = b`` (free variables zero) or ``None``."""
    if len(b) != A.nrows:
        raise ValueError("right-hand side has the wrong length")
    if zero is None:
        zero = _zero_like(A, b)
    rows = [dict() for _ in range(A.nrows)]
    for r, row in A.rows:
        rows[r] = dict(row)
    rhs = [({0: v} if v != 0 else {}) for v in b]
    pivots = _eliminate(rows, A.ncols, rhs)
    for i in range(len(pivots), A.nrows):
        if rhs[i].get(0, 0) != 0:
            return None
    x = [zero] * A.ncols
    for i, col in enumerate(pivots):
        x[col] = rhs[i].get(0, zero)
    return x


def solve_in_subspace(A: SparseMatrix, b: Sequence[object], S: Sequence[Sequence[object]], zero=None) -> list[object] | None:
    """Solve ``A x = b`` with ``x`` constrained to the span of the columns ``S``.

    The canonical solution of ``(A S) y = b`` is computed and ``x = S y``.
    """
    if zero is None:
        zero = _zero_like(A, b)
    for s in S:
        if len(s) != A.ncols:
            raise ValueError("spanning vector has the wrong height")
    if not S:
        return [zero] * A.ncols if all(v == 0 for v in b) else None
    Smat = SparseMatrix.from_dict(A.ncols, len(S), {(r, c): v for c, s in enumerate(S) for r, v in enumerate(s)})
    y = solve(A @ Smat, b, zero)
    if y is None:
        return None
    return Smat.apply(y, zero)


def _zero_like(A: SparseMatrix, b: Iterable[object]):
    for v in b:
        return v * 0
    for _, row in A.rows:
        for _, v in row:
            return v * 0
    return mpq(0)
