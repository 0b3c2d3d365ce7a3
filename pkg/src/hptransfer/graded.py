"""Graded spaces, dg quivers, Koszul signs and cohomology contractions.

Conventions: ``hom[(x, y)]`` is the space of morphisms written ``_x A _y``; a
tuple of objects ``(x1, ..., xn)`` indexes the ``n - 1`` factors
``hom[(x1, x2)], ..., hom[(x_{n-1}, x_n)]``.  Shifting by ``n`` reindexes
degrees: an element of degree ``k`` in ``V`` has degree ``k - n`` in ``V[n]``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

from .exactla import QQ, Field, SparseMatrix, rref, solve


class GradedError(ValueError):
    pass


@dataclass(frozen=True)
class GradedSpace:
    basis: tuple[tuple[str, int], ...] = ()

    def __post_init__(self):
        labels = [b[0] for b in self.basis]
        if len(set(labels)) != len(labels):
            raise GradedError("basis labels must be unique")

    @property
    def dim(self) -> int:
        return len(self.basis)

    @property
    def labels(self) -> tuple[str, ...]:
        return tuple(b[0] for b in self.basis)

    @property
    def degrees(self) -> tuple[int, ...]:
        return tuple(b[1] for b in self.basis)

    def index(self, label: str) -> int:
        for k, (lab, _) in enumerate(self.basis):
            if lab == label:
                return k
        raise GradedError(f"label {label!r} not in space")

    def degree(self, label: str) -> int:
        return self.basis[self.index(label)][1]

    def shift(self, n: int) -> "GradedSpace":
        return GradedSpace(tuple((lab, deg - n) for lab, deg in self.basis))

    def in_degree(self, n: int) -> list[int]:
        return [k for k, (_, deg) in enumerate(self.basis) if deg == n]


@dataclass(frozen=True)
class GradedMap:
    """Homogeneous linear map stored column-wise by basis index."""

    source: GradedSpace
    target: GradedSpace
    degree: int
    cols: tuple[tuple[tuple[int, object], ...], ...] = ()

    def __post_init__(self):
        if not self.cols:
            object.__setattr__(self, "cols", tuple(() for _ in range(self.source.dim)))
        if len(self.cols) != self.source.dim:
            raise GradedError("column count does not match source dimension")
        sdeg, tdeg = self.source.degrees, self.target.degrees
        for k, col in enumerate(self.cols):
            for j, v in col:
                if v == 0:
                    raise GradedError("stored entries must be nonzero")
                if tdeg[j] != sdeg[k] + self.degree:
                    raise GradedError(
                        f"entry {self.source.labels[k]} -> {self.target.labels[j]} breaks degree {self.degree}")

    @staticmethod
    def from_dict(source, target, degree, entries: Mapping[int, Mapping[int, object]]) -> "GradedMap":
        cols = []
        for k in range(source.dim):
            col = entries.get(k, {})
            cols.append(tuple(sorted((j, v) for j, v in col.items() if v != 0)))
        return GradedMap(source, target, degree, tuple(cols))

    @staticmethod
    def from_labels(source, target, degree, entries: Mapping[str, Iterable[tuple[str, object]]]) -> "GradedMap":
        d: dict[int, dict[int, object]] = {}
        for slab, images in entries.items():
            col = d.setdefault(source.index(slab), {})
            for tlab, v in images:
                j = target.index(tlab)
                col[j] = col.get(j, 0) + v
        return GradedMap.from_dict(source, target, degree, d)

    @staticmethod
    def zero(source, target, degree=0) -> "GradedMap":
        return GradedMap(source, target, degree)

    @staticmethod
    def identity(space, one) -> "GradedMap":
        return GradedMap(space, space, 0, tuple(((k, one),) for k in range(space.dim)))

    @property
    def entries(self) -> dict[str, list[tuple[str, object]]]:
        sl, tl = self.source.labels, self.target.labels
        return {sl[k]: [(tl[j], v) for j, v in col] for k, col in enumerate(self.cols) if col}

    def col(self, k: int) -> dict[int, object]:
        return dict(self.cols[k])

    def as_dict(self) -> dict[int, dict[int, object]]:
        return {k: dict(col) for k, col in enumerate(self.cols) if col}

    def is_zero(self) -> bool:
        return all(not c for c in self.cols)

    def apply_vec(self, vec: Mapping[int, object]) -> dict[int, object]:
        out: dict[int, object] = {}
        for k, a in vec.items():
            for j, v in self.cols[k]:
                out[j] = out.get(j, 0) + a * v
        return {j: v for j, v in out.items() if v != 0}

    def __matmul__(self, other: "GradedMap") -> "GradedMap":
        """Composition ``self o other``."""
        if other.target != self.source:
            raise GradedError("composition of incompatible maps")
        entries = {k: self.apply_vec(dict(col)) for k, col in enumerate(other.cols)}
        return GradedMap.from_dict(other.source, self.target, self.degree + other.degree, entries)

    def __add__(self, other: "GradedMap") -> "GradedMap":
        if (other.source, other.target) != (self.source, self.target):
            raise GradedError("sum of incompatible maps")
        if other.is_zero():
            return self
        if self.is_zero():
            return other
        if other.degree != self.degree:
            raise GradedError("sum of maps of different degree")
        entries = self.as_dict()
        for k, col in enumerate(other.cols):
            t = entries.setdefault(k, {})
            for j, v in col:
                t[j] = t.get(j, 0) + v
        return GradedMap.from_dict(self.source, self.target, self.degree, entries)

    def scale(self, c) -> "GradedMap":
        return GradedMap.from_dict(self.source, self.target, self.degree,
                                   {k: {j: c * v for j, v in col} for k, col in enumerate(self.cols)})

    def __neg__(self):
        return self.scale(-1)

    def __sub__(self, other):
        return self + (-other)

    def matrix(self) -> SparseMatrix:
        return SparseMatrix.from_dict(self.target.dim, self.source.dim,
                                      {(j, k): v for k, col in enumerate(self.cols) for j, v in col})

    def equals(self, other: "GradedMap") -> bool:
        return (self - other).is_zero() if (self.source, self.target) == (other.source, other.target) else False


# --- Koszul signs -------------------------------------------------------------

def koszul_sign(degrees: Sequence[int], sigma: Sequence[int]) -> int:
    """Sign of the permutation ``sigma`` acting on graded elements.

    ``sigma[k]`` is the new position of the element originally in slot ``k``;
    the sign is the product of ``(-1)^{|v_a||v_b|}`` over the pairs ``a < b``
    whose order is reversed.
    """
    if len(degrees) != len(sigma):
        raise GradedError("degree list and permutation differ in size")
    if sorted(sigma) != list(range(len(sigma))):
        raise GradedError("not a permutation")
    odd = 0
    n = len(sigma)
    for a in range(n):
        if degrees[a] % 2 == 0:
            continue
        for b in range(a + 1, n):
            if sigma[a] > sigma[b] and degrees[b] % 2:
                odd ^= 1
    return -1 if odd else 1


def reorder_sign(degrees: Sequence[int], order: Sequence[int]) -> int:
    """Sign for listing elements in the order ``order`` (``order[i]`` = old slot)."""
    sigma = [0] * len(order)
    for new, old in enumerate(order):
        sigma[old] = new
    return koszul_sign(degrees, sigma)


def tensor_map_apply(maps: Sequence[GradedMap], element: Sequence[str], coeff=1) -> dict[tuple[str, ...], object]:
    """Apply ``f_1 (x) ... (x) f_k`` to a tensor of basis elements.

    ``f_j`` picks up ``(-1)^{|f_j| (|v_1| + ... + |v_{j-1}|)}`` where the
    ``v_i`` are the arguments passed over.
    """
    if len(maps) != len(element):
        raise GradedError("arity mismatch")
    sign = 1
    passed = 0
    images: list[dict[int, object]] = []
    for f, lab in zip(maps, element):
        k = f.source.index(lab)
        if f.degree % 2 and passed % 2:
            sign = -sign
        passed += f.source.basis[k][1]
        images.append(f.col(k))
    out: dict[tuple[str, ...], object] = {(): coeff * sign}
    for f, img in zip(maps, images):
        nxt = {}
        for word, c in out.items():
            for j, v in img.items():
                nxt[word + (f.target.labels[j],)] = c * v
        out = nxt
    return {w: c for w, c in out.items() if c != 0}


# --- multilinear components --------------------------------------------------

@dataclass(frozen=True)
class MultiMap:
    """Homogeneous multilinear map between tensor products of graded spaces.

    ``data`` maps an input word (basis indices, one per input factor) to a
    dictionary from output words to nonzero coefficients.
    """

    ins: tuple[GradedSpace, ...]
    outs: tuple[GradedSpace, ...]
    degree: int
    data: Mapping[tuple[int, ...], Mapping[tuple[int, ...], object]] = field(default_factory=dict)

    def in_degree(self, word) -> int:
        return sum(sp.basis[k][1] for sp, k in zip(self.ins, word))

    def out_degree(self, word) -> int:
        return sum(sp.basis[k][1] for sp, k in zip(self.outs, word))

    def check_homogeneous(self) -> None:
        for iw, row in self.data.items():
            for ow, v in row.items():
                if v != 0 and self.out_degree(ow) != self.in_degree(iw) + self.degree:
                    raise GradedError(f"component entry {iw}->{ow} is not of degree {self.degree}")

    def is_zero(self) -> bool:
        return all(v == 0 for row in self.data.values() for v in row.values())


def add_into(acc: dict, word, row: Mapping, scale=1) -> None:
    target = acc.setdefault(word, {})
    for ow, v in row.items():
        nv = target.get(ow, 0) + scale * v
        if nv == 0:
            target.pop(ow, None)
        else:
            target[ow] = nv
    if not target:
        del acc[word]


def _apply_differential_word(word, degrees, diffs) -> list[tuple[tuple[int, ...], int, object]]:
    """Distribute degree-one maps over a word with Koszul signs."""
    out = []
    passed = 0
    for pos, k in enumerate(word):
        for j, v in diffs[pos].get(k, {}).items():
            sign = -1 if passed % 2 else 1
            out.append((word[:pos] + (j,) + word[pos + 1:], sign, v))
        passed += degrees[pos][k]
    return out


def tensor_differential(word, spaces: Sequence[GradedSpace], diffs: Sequence[GradedMap]) -> dict[tuple[int, ...], object]:
    degrees = [sp.degrees for sp in spaces]
    cols = [d.as_dict() for d in diffs]
    out: dict = {}
    for w, s, v in _apply_differential_word(tuple(word), degrees, cols):
        out[w] = out.get(w, 0) + s * v
    return {w: c for w, c in out.items() if c != 0}


def hom_complex_boundary(F: MultiMap, in_diffs: Sequence[GradedMap], out_diffs: Sequence[GradedMap],
                         degree: int | None = None) -> MultiMap:
    """``d_out o F - (-1)^{|F|} F o d_in`` with differentials distributed by Koszul."""
    deg = F.degree if degree is None else degree
    in_deg = [sp.degrees for sp in F.ins]
    out_deg = [sp.degrees for sp in F.outs]
    in_cols = [d.as_dict() for d in in_diffs]
    out_cols = [d.as_dict() for d in out_diffs]
    acc: dict = {}
    for iw, row in F.data.items():
        for ow, v in row.items():
            for w2, s, c in _apply_differential_word(ow, out_deg, out_cols):
                add_into(acc, iw, {w2: s * c * v})
    sign = -1 if deg % 2 else 1
    # F o d_in: for each target word iw, sum over words u with d_in(u) containing iw
    for u in _all_words(F.ins):
        for w2, s, c in _apply_differential_word(u, in_deg, in_cols):
            row = F.data.get(w2)
            if row:
                add_into(acc, u, row, -sign * s * c)
    return MultiMap(F.ins, F.outs, F.degree + 1, acc)


def _all_words(spaces: Sequence[GradedSpace]):
    words = [()]
    for sp in spaces:
        words = [w + (k,) for w in words for k in range(sp.dim)]
    return words


# --- dg quivers --------------------------------------------------------------

@dataclass(frozen=True)
class DgQuiver:
    objects: tuple
    hom: Mapping[tuple, GradedSpace]
    differential: Mapping[tuple, GradedMap]
    field: Field = QQ

    def __post_init__(self):
        for x in self.objects:
            for y in self.objects:
                if (x, y) not in self.hom:
                    raise GradedError(f"missing hom space ({x}, {y})")
                d = self.differential.get((x, y))
                if d is None:
                    raise GradedError(f"missing differential on ({x}, {y})")
                if d.degree != 1 or d.source != self.hom[(x, y)] or d.target != self.hom[(x, y)]:
                    raise GradedError(f"differential on ({x}, {y}) must be a degree one endomorphism")

    @staticmethod
    def graded(objects, hom, field: Field = QQ) -> "DgQuiver":
        """Quiver with zero differential."""
        return DgQuiver(tuple(objects), dict(hom),
                        {k: GradedMap.zero(v, v, 1) for k, v in hom.items()}, field)

    def pairs(self):
        return [(x, y) for x in self.objects for y in self.objects]

    def dim(self, x, y) -> int:
        return self.hom[(x, y)].dim

    def total_dim(self) -> int:
        return sum(sp.dim for sp in self.hom.values())

    def square_defects(self) -> list[tuple]:
        """``(x, y, degree)`` triples where ``d o d`` does not vanish."""
        bad = []
        for xy in self.pairs():
            d = self.differential[xy]
            sq = d @ d
            degs = sorted({self.hom[xy].basis[k][1] for k, col in enumerate(sq.cols) if col})
            bad.extend((xy[0], xy[1], n) for n in degs)
        return bad

    def is_dg(self) -> bool:
        return not self.square_defects()

    def with_differential(self, differential) -> "DgQuiver":
        return DgQuiver(self.objects, self.hom, dict(differential), self.field)


@dataclass(frozen=True)
class Contraction:
    """Chain data ``(i, p, h)`` between a dg quiver and a reduced one."""

    total: DgQuiver
    reduced: DgQuiver
    include: Mapping[tuple, GradedMap]
    project: Mapping[tuple, GradedMap]
    homotopy: Mapping[tuple, GradedMap]

    def violations(self) -> list[str]:
        """Names of the failing identities (empty when all hold exactly)."""
        bad = []
        one = self.total.field.one
        for xy in self.total.pairs():
            i, p, h = self.include[xy], self.project[xy], self.homotopy[xy]
            d = self.total.differential[xy]
            dh = self.reduced.differential[xy]
            idA = GradedMap.identity(self.total.hom[xy], one)
            idH = GradedMap.identity(self.reduced.hom[xy], one)
            checks = {
                "pi=id": (p @ i).equals(idH),
                "dh+hd=ip-id": (d @ h + h @ d).equals(i @ p - idA),
                "hi=0": (h @ i).is_zero(),
                "ph=0": (p @ h).is_zero(),
                "hh=0": (h @ h).is_zero(),
                "i chain": (d @ i).equals(i @ dh),
                "p chain": (p @ d).equals(dh @ p),
            }
            bad.extend(f"{name} on {xy}" for name, ok in checks.items() if not ok)
        return bad


def _kernel_basis(M: SparseMatrix, zero, one) -> list[list[object]]:
    """Canonical null space basis: one vector per free column, left to right."""
    res = rref(M, one)
    pivots = res.pivot_cols
    pivot_rows = dict(res.R.rows)
    basis = []
    pivset = set(pivots)
    for f in range(M.ncols):
        if f in pivset:
            continue
        v = [zero] * M.ncols
        v[f] = one
        for r, col in enumerate(pivots):
            entry = dict(pivot_rows.get(r, ())).get(f, zero)
            if entry != 0:
                v[col] = -entry
        basis.append(v)
    return basis


def cohomology_contraction(A: DgQuiver) -> Contraction:
    """Build ``(i, p, h)`` onto the cohomology with all side conditions.

    In every degree the space splits as boundaries, chosen cycle
    representatives and a complement mapped isomorphically onto the next
    boundaries; ``h`` sends the boundary ``d(c)`` to ``-c``.
    """
    bad = A.square_defects()
    if bad:
        raise GradedError(f"differential does not square to zero at {bad[0]}")
    F = A.field
    zero, one = F.zero, F.one
    red_hom, inc, proj, hom = {}, {}, {}, {}
    red_raw = {}
    for xy in A.pairs():
        V = A.hom[xy]
        dmap = A.differential[xy]
        degs = sorted(set(V.degrees))
        # decomposition data per degree, in global coordinates
        comp_cols: dict[int, list[int]] = {}  # complement basis (indices) per degree
        bnd: dict[int, list[tuple[int, dict[int, object]]]] = {}  # boundary d(e_c) keyed by preimage c
        for n in degs:
            src = V.in_degree(n)
            tgt = V.in_degree(n + 1)
            if not src or not tgt:
                comp_cols[n] = []
                continue
            M = SparseMatrix.from_dict(len(tgt), len(src), {
                (tgt.index(j), a): v for a, k in enumerate(src) for j, v in dmap.cols[k]})
            piv = rref(M, one).pivot_cols
            comp_cols[n] = [src[a] for a in piv]
            bnd.setdefault(n + 1, [])
            for a in piv:
                bnd[n + 1].append((src[a], dict(dmap.cols[src[a]])))
        reps: list[tuple[int, dict[int, object]]] = []  # (degree, vector)
        rep_labels = []
        for n in degs:
            idx = V.in_degree(n)
            tgt = V.in_degree(n + 1)
            M = SparseMatrix.from_dict(len(tgt), len(idx), {
                (tgt.index(j), a): v for a, k in enumerate(idx) for j, v in dmap.cols[k]})
            kern = _kernel_basis(M, zero, one) if idx else []
            chosen = [[vec.get(k, zero) for k in idx] for _, vec in bnd.get(n, [])]
            rank = len(chosen)
            for z in kern:
                trial = chosen + [z]
                T = SparseMatrix.from_dict(len(idx), len(trial),
                                           {(r, c): v for c, vec in enumerate(trial) for r, v in enumerate(vec)})
                if len(rref(T, one).pivot_cols) > rank:
                    chosen.append(z)
                    rank += 1
                    free = _free_index(z)
                    reps.append((n, {idx[a]: v for a, v in enumerate(z) if v != 0}))
                    rep_labels.append((f"H({V.labels[idx[free]]})", n))
        H = GradedSpace(tuple(rep_labels))
        red_hom[xy] = H
        # i : H -> V
        inc[xy] = GradedMap.from_dict(H, V, 0, {r: vec for r, (_, vec) in enumerate(reps)})
        # coordinates: basis of V given by boundaries, reps, complement in each degree
        p_entries: dict[int, dict[int, object]] = {}
        h_entries: dict[int, dict[int, object]] = {}
        for n in degs:
            idx = V.in_degree(n)
            cols = []  # (kind, payload, vector)
            for c, vec in bnd.get(n, []):
                cols.append(("b", c, vec))
            for r, (deg, vec) in enumerate(reps):
                if deg == n:
                    cols.append(("h", r, vec))
            for c in comp_cols.get(n, []):
                cols.append(("c", c, {c: one}))
            if len(cols) != len(idx):
                raise GradedError(f"internal decomposition failure on {xy} degree {n}")
            P = SparseMatrix.from_dict(len(idx), len(cols), {
                (idx.index(k), a): v for a, (_, _, vec) in enumerate(cols) for k, v in vec.items()})
            for a, k in enumerate(idx):
                e = [zero] * len(idx)
                e[a] = one
                coords = solve(P, e, zero)
                for (kind, payload, _), cval in zip(cols, coords):
                    if cval == 0:
                        continue
                    if kind == "h":
                        p_entries.setdefault(k, {})[payload] = p_entries.get(k, {}).get(payload, zero) + cval
                    elif kind == "b":
                        h_entries.setdefault(k, {})[payload] = h_entries.get(k, {}).get(payload, zero) - cval
        proj[xy] = GradedMap.from_dict(V, H, 0, p_entries)
        hom[xy] = GradedMap.from_dict(V, V, -1, h_entries)
    reduced = DgQuiver.graded(A.objects, red_hom, F)
    return Contraction(A, reduced, inc, proj, hom)


def _free_index(z) -> int:
    """Last nonzero coordinate of a canonical kernel vector (its free column)."""
    for a in range(len(z) - 1, -1, -1):
        if z[a] != 0:
            return a
    raise GradedError("zero kernel vector")
