"""A-infinity structures and morphisms on graded quivers.

All components act on shifted spaces: inputs are read in ``A[1]`` and outputs
in ``B[1]``, so a structure has degree 1 and a morphism degree 0.  A component
is stored as ``{input word: {output index: coefficient}}`` where an input word
lists basis indices of the hom spaces along the object tuple.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from itertools import combinations, product
from typing import Callable, Iterable, Mapping

from .exactla import SparseMatrix, solve
from .graded import DgQuiver, GradedMap, GradedSpace, MultiMap, add_into


class AinfError(ValueError):
    pass


def tuples_of(objects, length: int):
    return list(product(objects, repeat=length))


def sub_tuple(xs: tuple, i: int, j: int) -> tuple:
    """``xs[[i, j]]`` with 1-based inclusive bounds."""
    return xs[i - 1:j]


def corner_tuple(xs: tuple, cuts: Iterable[int], obj_map: Mapping | None = None) -> tuple:
    pts = (1, *cuts, len(xs))
    return tuple((obj_map[xs[c - 1]] if obj_map is not None else xs[c - 1]) for c in pts)


@dataclass
class HomCollection:
    """Truncated element of ``C(A, B)``: one multilinear map per object tuple."""

    source: DgQuiver
    target: DgQuiver
    obj_map: Mapping
    degree: int
    nmax: int
    comps: dict = field(default_factory=dict)

    def __post_init__(self):
        for xs in self.comps:
            if len(xs) < 2:
                raise AinfError("components indexed by tuples of length one (curvature) are not supported")
            if len(xs) > self.nmax:
                raise AinfError(f"component {xs} exceeds the truncation {self.nmax}")

    # --- degrees ----------------------------------------------------------
    def in_degrees(self, xs: tuple) -> list[tuple[int, ...]]:
        return [tuple(d - 1 for d in self.source.hom[(xs[k], xs[k + 1])].degrees) for k in range(len(xs) - 1)]

    def out_space(self, xs: tuple) -> GradedSpace:
        return self.target.hom[(self.obj_map[xs[0]], self.obj_map[xs[-1]])]

    def out_degrees(self, xs: tuple) -> tuple[int, ...]:
        return tuple(d - 1 for d in self.out_space(xs).degrees)

    def keys(self, length: int | None = None) -> list[tuple]:
        lengths = range(2, self.nmax + 1) if length is None else [length]
        return [xs for n in lengths for xs in tuples_of(self.source.objects, n)]

    # --- access -----------------------------------------------------------
    def row(self, xs: tuple, word: tuple) -> Mapping[int, object]:
        c = self.comps.get(xs)
        if not c:
            return {}
        return c.get(word, {})

    def component(self, xs: tuple) -> MultiMap:
        ins = tuple(self.source.hom[(xs[k], xs[k + 1])].shift(1) for k in range(len(xs) - 1))
        out = self.out_space(xs).shift(1)
        data = {w: {(o,): v for o, v in row.items()} for w, row in self.comps.get(xs, {}).items()}
        return MultiMap(ins, (out,), self.degree, data)

    def copy(self) -> "HomCollection":
        return replace(self, comps={k: {w: dict(r) for w, r in c.items()} for k, c in self.comps.items()})

    def like(self, degree: int | None = None, nmax: int | None = None) -> "HomCollection":
        return HomCollection(self.source, self.target, self.obj_map,
                             self.degree if degree is None else degree,
                             self.nmax if nmax is None else nmax, {})

    def set_component(self, xs: tuple, data: Mapping) -> None:
        clean = {}
        for w, row in data.items():
            r = {o: v for o, v in row.items() if v != 0}
            if r:
                clean[tuple(w)] = r
        if clean:
            self.comps[xs] = clean
        else:
            self.comps.pop(xs, None)

    def is_zero(self, upto: int | None = None) -> bool:
        return not self.nonzero_keys(upto)

    def nonzero_keys(self, upto: int | None = None) -> list[tuple]:
        return [k for k, c in self.comps.items() if c and (upto is None or len(k) <= upto)]

    def check_homogeneous(self) -> None:
        for xs, c in self.comps.items():
            ind = self.in_degrees(xs)
            outd = self.out_degrees(xs)
            for w, row in c.items():
                s = sum(ind[k][a] for k, a in enumerate(w))
                for o in row:
                    if outd[o] != s + self.degree:
                        raise AinfError(f"component {xs} is not homogeneous of degree {self.degree}")

    # --- linear structure ---------------------------------------------------
    def _combine(self, other: "HomCollection", scale) -> "HomCollection":
        out = self.copy()
        out.nmax = min(self.nmax, other.nmax)
        for xs, c in other.comps.items():
            tgt = out.comps.setdefault(xs, {})
            for w, row in c.items():
                add_into(tgt, w, row, scale)
            if not tgt:
                del out.comps[xs]
        out.comps = {k: v for k, v in out.comps.items() if len(k) <= out.nmax}
        return out

    def __add__(self, other):
        return self._combine(other, 1)

    def __sub__(self, other):
        return self._combine(other, -1)

    def scale(self, c) -> "HomCollection":
        out = self.like()
        for xs, comp in self.comps.items():
            out.set_component(xs, {w: {o: c * v for o, v in row.items()} for w, row in comp.items()})
        return out

    def equals(self, other: "HomCollection", upto: int | None = None) -> bool:
        return (self - other).is_zero(upto)

    def truncate(self, nmax: int) -> "HomCollection":
        out = self.copy()
        out.nmax = nmax
        out.comps = {k: v for k, v in out.comps.items() if len(k) <= nmax}
        return out


def all_words(in_dims: list[int]):
    return list(product(*[range(n) for n in in_dims]))


def _dims(quiver: DgQuiver, xs: tuple) -> list[int]:
    return [quiver.dim(xs[k], xs[k + 1]) for k in range(len(xs) - 1)]


def _parity_prefix(degs: list[tuple[int, ...]], word: tuple) -> list[int]:
    """Prefix sums of input degrees: ``out[k]`` = sum of the first ``k`` degrees."""
    acc = [0]
    for k, a in enumerate(word):
        acc.append(acc[-1] + degs[k][a])
    return acc


# --- structures from dg data --------------------------------------------------

def differential_structure(A: DgQuiver, nmax: int) -> HomCollection:
    """The structure whose only components are ``d[1]`` on each hom space."""
    m = HomCollection(A, A, {x: x for x in A.objects}, 1, nmax)
    for (x, y) in A.pairs():
        d = A.differential[(x, y)]
        m.set_component((x, y), {(k,): dict(col) for k, col in enumerate(d.cols) if col})
    return m


def chain_map_morphism(A: DgQuiver, B: DgQuiver, obj_map: Mapping, f: Mapping[tuple, GradedMap], nmax: int) -> HomCollection:
    F = HomCollection(A, B, dict(obj_map), 0, nmax)
    for (x, y) in A.pairs():
        g = f[(x, y)]
        F.set_component((x, y), {(k,): dict(col) for k, col in enumerate(g.cols) if col})
    return F


def arity_two_map(F: HomCollection, x, y) -> GradedMap:
    src = F.source.hom[(x, y)]
    tgt = F.target.hom[(F.obj_map[x], F.obj_map[y])]
    entries = {w[0]: dict(row) for w, row in F.comps.get((x, y), {}).items()}
    return GradedMap.from_dict(src.shift(1), tgt.shift(1), F.degree, entries)


# --- compositions ------------------------------------------------------------

def gerstenhaber_at(outer: HomCollection, inner: HomCollection, xs: tuple) -> dict:
    """Component of ``outer o_G inner`` at ``xs``."""
    n = len(xs)
    degs = outer_in_degrees(inner.source, xs)
    acc: dict = {}
    for i in range(1, n):
        for j in range(i + 1, n + 1):
            ic = inner.comps.get(xs[i - 1:j])
            if not ic:
                continue
            oc = outer.comps.get(xs[:i] + xs[j - 1:])
            if not oc:
                continue
            by_out: dict[int, list] = {}
            for w, row in ic.items():
                for b, v in row.items():
                    by_out.setdefault(b, []).append((w, v))
            p = i - 1
            for u, orow in oc.items():
                matches = by_out.get(u[p])
                if not matches:
                    continue
                pre = sum(degs[k][u[k]] for k in range(p))
                sgn = -1 if (inner.degree % 2 and pre % 2) else 1
                for w, v in matches:
                    add_into(acc, u[:p] + w + u[p + 1:], orow, sgn * v)
    return acc


def outer_in_degrees(quiver: DgQuiver, xs: tuple) -> list[tuple[int, ...]]:
    return [tuple(d - 1 for d in quiver.hom[(xs[k], xs[k + 1])].degrees) for k in range(len(xs) - 1)]


def gerstenhaber_compose(outer: HomCollection, inner: HomCollection) -> HomCollection:
    """``(outer o_G inner)^x = sum_{i<j} outer^{x<=i u x>=j} o (id (x) inner^{x[i,j]} (x) id)``."""
    if inner.target != outer.source:
        raise AinfError("inner collection must land in the source of the outer one")
    if any(inner.obj_map[x] != x for x in inner.source.objects):
        raise AinfError("inner collection must preserve objects")
    nmax = min(outer.nmax, inner.nmax)
    res = HomCollection(inner.source, outer.target, outer.obj_map, outer.degree + inner.degree, nmax)
    for n in range(2, nmax + 1):
        for xs in tuples_of(inner.source.objects, n):
            res.set_component(xs, gerstenhaber_at(outer, inner, xs))
    return res


def stasheff_defect(m: HomCollection) -> HomCollection:
    return gerstenhaber_compose(m, m)


@dataclass
class DefectReport:
    ok: bool
    failures: list = field(default_factory=list)  # (key, first offending input word)

    def __bool__(self):
        return self.ok


def report_zero(defect, upto: int | None = None) -> DefectReport:
    fails = []
    for key in sorted(defect.nonzero_keys(upto), key=lambda k: (len(k), repr(k))):
        word = min(defect.comps[key])
        fails.append((key, word))
    return DefectReport(not fails, fails)


def is_ainf(m: HomCollection) -> DefectReport:
    if m.degree != 1:
        raise AinfError("a structure has degree 1")
    return report_zero(stasheff_defect(m))


def block_at(outer: HomCollection, F: HomCollection, xs: tuple, special: HomCollection | None = None) -> dict:
    """``sum outer^{y}(C_1 (x) ... (x) C_k)`` over block splittings of ``xs``.

    Every block is filled by ``F``; with ``special`` given, exactly one block
    is filled by it instead.  Koszul signs are taken in shifted degrees.
    """
    n = len(xs)
    degs = outer_in_degrees(F.source, xs)
    obj_map = F.obj_map
    acc: dict = {}
    outer_comps = outer.comps

    def rec(pos, word, outs, corners, used, c, pre):
        if pos == n:
            if special is not None and not used:
                return
            oc = outer_comps.get(corners)
            if oc:
                row = oc.get(outs)
                if row:
                    add_into(acc, word, row, c)
            return
        for j in range(pos + 1, n + 1):
            key = xs[pos - 1:j]
            opts = [(F, used)]
            if special is not None and not used:
                opts.append((special, True))
            for coll, flag in opts:
                comp = coll.comps.get(key)
                if not comp:
                    continue
                odd = coll.degree % 2 and pre % 2
                for w, row in comp.items():
                    wdeg = sum(degs[pos - 1 + t][a] for t, a in enumerate(w))
                    for o, v in row.items():
                        rec(j, word + w, outs + (o,), corners + (obj_map[xs[j - 1]],), flag,
                            -c * v if odd else c * v, pre + wdeg)

    rec(1, (), (), (obj_map[xs[0]],), False, 1, 0)
    return acc


def _block_sum(outer: HomCollection, F: HomCollection, special: HomCollection | None = None) -> HomCollection:
    nmax = min(outer.nmax, F.nmax, special.nmax if special is not None else F.nmax)
    degree = outer.degree + F.degree + (special.degree if special is not None else 0)
    res = HomCollection(F.source, outer.target, dict(F.obj_map), degree, nmax)
    for n in range(2, nmax + 1):
        for xs in tuples_of(F.source.objects, n):
            res.set_component(xs, block_at(outer, F, xs, special))
    return res


def compose_M(mB: HomCollection, F: HomCollection) -> HomCollection:
    """``(mB o_M F)^x = sum mB^y (F (x) ... (x) F)`` over block splittings of ``x``."""
    if F.target != mB.source:
        raise AinfError("F must land in the quiver carrying mB")
    return _block_sum(mB, F)


def compose_morphisms(G: HomCollection, F: HomCollection) -> HomCollection:
    """Composite ``G o F`` of morphisms (block formula); object map ``G0 o F0``."""
    if F.target != G.source:
        raise AinfError("target of F must be the source of G")
    res = _block_sum(G, F)
    res.obj_map = {x: G.obj_map[F.obj_map[x]] for x in F.source.objects}
    return res


def compose_wrt(m: HomCollection, h: HomCollection, F: HomCollection) -> HomCollection:
    """Block sums with exactly one block filled by ``h`` and the others by ``F``."""
    if F.target != m.source or h.target != m.source:
        raise AinfError("h and F must land in the quiver carrying m")
    return _block_sum(m, F, special=h)


def mi_defect_at(F: HomCollection, mA: HomCollection, mB: HomCollection, xs: tuple) -> dict:
    acc = gerstenhaber_at(F, mA, xs)
    for w, row in block_at(mB, F, xs).items():
        add_into(acc, w, row, -1)
    return acc


def mi_defect(F: HomCollection, mA: HomCollection, mB: HomCollection) -> HomCollection:
    """``F o_G mA - mB o_M F``; zero iff ``F`` is a morphism up to truncation."""
    return gerstenhaber_compose(F, mA) - compose_M(mB, F)


def is_morphism(F, mA, mB) -> DefectReport:
    return report_zero(mi_defect(F, mA, mB))


def identity_morphism(A: DgQuiver, nmax: int) -> HomCollection:
    one = A.field.one
    F = HomCollection(A, A, {x: x for x in A.objects}, 0, nmax)
    for (x, y) in A.pairs():
        F.set_component((x, y), {(k,): {k: one} for k in range(A.dim(x, y))})
    return F


def hom_boundary(X: HomCollection, xs: tuple, dA: Mapping | None = None, dB: Mapping | None = None) -> dict:
    """Hom-complex differential of the component at ``xs``.

    ``dX = d_B o X - (-1)^{|X|} X o D`` where ``D`` distributes ``d_A`` over the
    shifted tensor factors with Koszul signs.  Returns the component data.
    """
    src, tgt = X.source, X.target
    dA = dA or {xy: src.differential[xy].as_dict() for xy in src.pairs()}
    dB = dB or {xy: tgt.differential[xy].as_dict() for xy in tgt.pairs()}
    comp = X.comps.get(xs, {})
    out_pair = (X.obj_map[xs[0]], X.obj_map[xs[-1]])
    acc: dict = {}
    dout = dB[out_pair]
    for w, row in comp.items():
        img = {}
        for o, v in row.items():
            for j, c in dout.get(o, {}).items():
                img[j] = img.get(j, 0) + v * c
        add_into(acc, w, img)
    sgn = -1 if X.degree % 2 else 1
    degs = X.in_degrees(xs)
    pairs = [(xs[k], xs[k + 1]) for k in range(len(xs) - 1)]
    for w in all_words(_dims(src, xs)):
        pre = 0
        for pos, a in enumerate(w):
            for b, c in dA[pairs[pos]].get(a, {}).items():
                w2 = w[:pos] + (b,) + w[pos + 1:]
                row = comp.get(w2)
                if row:
                    s = -1 if pre % 2 else 1
                    add_into(acc, w, row, -sgn * s * c)
            pre += degs[pos][a]
    return acc


def hom_complex_boundary_collection(X: HomCollection) -> HomCollection:
    out = X.like(degree=X.degree + 1)
    for xs in X.keys():
        out.set_component(xs, hom_boundary(X, xs))
    return out


# --- inversion ---------------------------------------------------------------

def _invert_graded(g: GradedMap) -> GradedMap:
    M = g.matrix()
    if g.source.dim != g.target.dim:
        raise AinfError("arity-two component is not invertible")
    one = None
    cols = {}
    for j in range(g.target.dim):
        e = [0] * g.target.dim
        e[j] = 1
        x = solve(M, e, 0 * 1)
        if x is None:
            raise AinfError("arity-two component is not invertible")
        cols[j] = {k: v for k, v in enumerate(x) if v != 0}
    inv = GradedMap.from_dict(g.target, g.source, -g.degree, cols)
    return inv


def invert_morphism(F: HomCollection, mA: HomCollection | None = None, mB: HomCollection | None = None) -> HomCollection:
    """Inverse of a morphism whose object map is bijective and whose arity-two parts are invertible."""
    objs_A, objs_B = F.source.objects, F.target.objects
    img = [F.obj_map[x] for x in objs_A]
    if sorted(map(repr, img)) != sorted(map(repr, objs_B)) or len(set(map(repr, img))) != len(img):
        raise AinfError("object map is not a bijection")
    inv_obj = {F.obj_map[x]: x for x in objs_A}
    G = HomCollection(F.target, F.source, inv_obj, F.degree, F.nmax)
    finv = {}
    field_ = F.source.field
    for (x, y) in F.source.pairs():
        g = arity_two_map(F, x, y)
        g = GradedMap(g.source, g.target, g.degree, tuple(tuple((j, field_(v)) for j, v in col) for col in g.cols))
        gi = _invert_graded(g)
        finv[(x, y)] = gi.as_dict()
        G.set_component((F.obj_map[x], F.obj_map[y]), {(k,): row for k, row in gi.as_dict().items()})
    for n in range(3, F.nmax + 1):
        for xs in tuples_of(objs_A, n):
            ys = tuple(F.obj_map[x] for x in xs)
            # (G o F)^{xs} with the top component of G still zero
            comp = block_at(G, F, xs)
            pairs = [(xs[k], xs[k + 1]) for k in range(n - 1)]
            top: dict = {}
            for bw in all_words(_dims(F.target, ys)):
                # pull back through f^{-1} (x) ... (x) f^{-1} (degree zero, no signs)
                pulled = {(): 1}
                for pos, b in enumerate(bw):
                    nxt = {}
                    for aw, c in pulled.items():
                        for a, v in finv[pairs[pos]].get(b, {}).items():
                            nxt[aw + (a,)] = c * v
                    pulled = nxt
                for aw, c in pulled.items():
                    row = comp.get(aw)
                    if row:
                        add_into(top, bw, row, -c)
            G.set_component(ys, top)
    return G


# --- transfer -----------------------------------------------------------------

class ObstructionError(AinfError):
    """An obstruction that should be a boundary is not (input is not a quasi-isomorphism)."""


def _unknowns(source: DgQuiver, target: DgQuiver, xs: tuple, out_pair: tuple, degree: int):
    """Basis of homogeneous maps ``A[1]^xs -> B[1]`` of the given degree."""
    in_degs = [tuple(d - 1 for d in source.hom[(xs[k], xs[k + 1])].degrees) for k in range(len(xs) - 1)]
    out_degs = [d - 1 for d in target.hom[out_pair].degrees]
    cells = []
    for w in all_words([len(t) for t in in_degs]):
        s = sum(in_degs[k][a] for k, a in enumerate(w)) + degree
        for o, od in enumerate(out_degs):
            if od == s:
                cells.append((w, o))
    return cells


class _System:
    """Accumulates linear equations whose unknowns are component entries."""

    def __init__(self, zero):
        self.rows: dict = {}
        self.rhs: dict = {}
        self.zero = zero

    def add(self, eq_key, col: int, value):
        r = self.rows.setdefault(eq_key, {})
        r[col] = r.get(col, 0) + value

    def set_rhs(self, eq_key, value):
        self.rhs[eq_key] = self.rhs.get(eq_key, 0) + value

    def solve(self, ncols: int):
        keys = sorted(set(self.rows) | set(self.rhs), key=repr)
        index = {k: i for i, k in enumerate(keys)}
        M = SparseMatrix.from_dict(len(keys), ncols, {(index[k], c): v for k, r in self.rows.items() for c, v in r.items()})
        b = [self.rhs.get(k, self.zero) for k in keys]
        return solve(M, b, self.zero)


def _as_collection_data(cells, values):
    data: dict = {}
    for (w, o), v in zip(cells, values):
        if v != 0:
            data.setdefault(w, {})[o] = v
    return data


def _probe(X: HomCollection, xs: tuple, cells, op: Callable[[HomCollection], dict]):
    """Columns of the linear map ``cell -> op(X with that cell set to 1)``."""
    one = X.source.field.one
    cols = []
    for w, o in cells:
        Y = X.like()
        Y.comps[xs] = {w: {o: one}}
        cols.append(op(Y))
    return cols


def _boundary_cols(src, tgt, obj_map, xs, cells, degree, one):
    """For each unknown cell ``(w, o)``, the hom-complex boundary of the elementary map.

    ``d(E) = d_B o E - (-1)^{|E|} E o D``; the second term is read off through
    the transpose of ``d_A`` so only words hitting ``w`` are visited.
    """
    out_pair = (obj_map[xs[0]], obj_map[xs[-1]])
    dout = tgt.differential[out_pair].as_dict()
    pairs = [(xs[k], xs[k + 1]) for k in range(len(xs) - 1)]
    transposed = []
    for pr in pairs:
        t: dict = {}
        for a, col in src.differential[pr].as_dict().items():
            for b, c in col.items():
                t.setdefault(b, []).append((a, c))
        transposed.append(t)
    degs = [tuple(d - 1 for d in src.hom[pr].degrees) for pr in pairs]
    sgn = -1 if degree % 2 else 1
    cols = []
    for w, o in cells:
        acc: dict = {}
        img = dout.get(o)
        if img:
            acc[w] = dict(img)
        pre = 0
        for pos, b in enumerate(w):
            s = -sgn * (-1 if pre % 2 else 1)
            for a, c in transposed[pos].get(b, ()):
                u = w[:pos] + (a,) + w[pos + 1:]
                add_into(acc, u, {o: one}, s * c)
            pre += degs[pos][b]
        cols.append(acc)
    return cols


def _postcompose(fmap: Mapping[int, Mapping[int, object]], data: Mapping) -> dict:
    out: dict = {}
    for w, row in data.items():
        img = {}
        for o, v in row.items():
            for j, c in fmap.get(o, {}).items():
                img[j] = img.get(j, 0) + v * c
        add_into(out, w, img)
    return out


def _precompose_tensor(fmaps: list, data: Mapping, in_dims: list[int]) -> dict:
    """``data o (f_1 (x) ... (x) f_k)`` for degree-zero maps ``f_i``."""
    out: dict = {}
    for w in all_words(in_dims):
        imgs = {(): 1}
        for pos, a in enumerate(w):
            nxt = {}
            for bw, c in imgs.items():
                for b, v in fmaps[pos].get(a, {}).items():
                    nxt[bw + (b,)] = c * v
            imgs = nxt
        for bw, c in imgs.items():
            row = data.get(bw)
            if row:
                add_into(out, w, row, c)
    return out


def _flatten(data: Mapping, tag=()) -> dict:
    return {(tag, w, o): v for w, row in data.items() for o, v in row.items() if v != 0}


def _solve_boundary(src, tgt, obj_map, xs, obstruction: Mapping, degree: int):
    """Canonical ``e`` (degree ``degree``) with ``d e = obstruction``; ``None`` if none exists."""
    one = src.field.one
    out_pair = (obj_map[xs[0]], obj_map[xs[-1]])
    cells = _unknowns(src, tgt, xs, out_pair, degree)
    sysm = _System(src.field.zero)
    for c, col in enumerate(_boundary_cols(src, tgt, obj_map, xs, cells, degree, one)):
        for key, v in _flatten(col).items():
            sysm.add(key, c, v)
    for key, v in _flatten(obstruction).items():
        sysm.set_rhs(key, v)
    sol = sysm.solve(len(cells))
    if sol is None:
        return None
    return _as_collection_data(cells, sol)


def _zero_structure(A: DgQuiver, nmax: int) -> HomCollection:
    return differential_structure(A, nmax)


def transfer_from_target(f: HomCollection, mB: HomCollection, contraction=None) -> tuple[HomCollection, HomCollection]:
    """Pull an A-infinity structure back along a quasi-isomorphism ``f : A -> B``.

    Returns ``(mA, F)`` with ``mA^{x,y} = d_A[1]``, ``F^{x,y} = f[1]``, the
    Stasheff identities for ``mA`` and the morphism identities for ``F``
    holding through ``mB.nmax``.  When ``contraction`` (a contraction of ``B``
    onto ``A`` with ``f = i`` and ``A`` minimal) is given, corrections use its
    homotopy instead of the linear solver.
    """
    A, B = f.source, f.target
    nmax = min(f.nmax, mB.nmax)
    mA = _zero_structure(A, nmax)
    F = f.truncate(nmax)
    F.nmax = nmax
    fmaps = {xy: {w[0]: dict(row) for w, row in f.comps.get(xy, {}).items()} for xy in A.pairs()}
    for n in range(3, nmax + 1):
        for xs in tuples_of(A.objects, n):
            mA.nmax = n
            o = gerstenhaber_at(mA, mA, xs)
            if o:
                e = _solve_boundary(A, A, mA.obj_map, xs, o, 1)
                if e is None:
                    raise ObstructionError(f"Stasheff obstruction at {xs} is not a boundary")
                cur = mA.comps.get(xs, {})
                new = {w: dict(r) for w, r in cur.items()}
                for w, row in e.items():
                    add_into(new, w, row, -1)
                mA.set_component(xs, new)
            delta = mi_defect_at(F, mA, mB, xs)
            if not delta:
                continue
            if contraction is not None:
                e1, e2 = _split_with_contraction(contraction, xs, delta)
            else:
                e1, e2 = _split_cycle_after(A, B, f.obj_map, xs, delta, fmaps, ObstructionError)
            cur = {w: dict(r) for w, r in mA.comps.get(xs, {}).items()}
            for w, row in e1.items():
                add_into(cur, w, row, -1)
            mA.set_component(xs, cur)
            curF = {w: dict(r) for w, r in F.comps.get(xs, {}).items()}
            for w, row in e2.items():
                add_into(curF, w, row, 1)
            F.set_component(xs, curF)
    mA.nmax = nmax
    return mA, F


def _split_with_contraction(C, xs, delta):
    """``delta = i o e1 + d e2`` via ``e1 = p delta`` and ``e2 = -h delta``."""
    out_pair = (xs[0], xs[-1])
    p = C.project[out_pair].as_dict()
    h = C.homotopy[out_pair].as_dict()
    e1 = _postcompose(p, delta)
    e2 = _postcompose(h, delta)
    e2 = {w: {o: -v for o, v in row.items()} for w, row in e2.items()}
    return e1, e2


def _split_cycle_after(A, B, obj_map, xs, delta, fmaps, error):
    """Solve ``delta = f o e1 + d e2`` with ``d e1 = 0`` (canonical solution)."""
    one = A.field.one
    out_A = (xs[0], xs[-1])
    out_B = (obj_map[xs[0]], obj_map[xs[-1]])
    cells1 = _unknowns(A, A, xs, out_A, 1)
    cells2 = _unknowns(A, B, xs, out_B, 0)
    sysm = _System(A.field.zero)
    bcols1 = _boundary_cols(A, A, {x: x for x in A.objects}, xs, cells1, 1, one)
    fo = fmaps[out_A]
    for c, (w, o) in enumerate(cells1):
        for j, v in fo.get(o, {}).items():
            sysm.add(("mi", w, j), c, v)
        for key, v in _flatten(bcols1[c], "cyc").items():
            sysm.add(key, c, v)
    bcols2 = _boundary_cols(A, B, obj_map, xs, cells2, 0, one)
    for c, col in enumerate(bcols2):
        for (_, w, j), v in _flatten(col).items():
            sysm.add(("mi", w, j), len(cells1) + c, v)
    for (_, w, j), v in _flatten(delta).items():
        sysm.set_rhs(("mi", w, j), v)
    sol = sysm.solve(len(cells1) + len(cells2))
    if sol is None:
        raise error(f"morphism obstruction at {xs} cannot be split")
    return _as_collection_data(cells1, sol[:len(cells1)]), _as_collection_data(cells2, sol[len(cells1):])


def transfer_to_target(f: HomCollection, mA: HomCollection) -> tuple[HomCollection, HomCollection]:
    """Push an A-infinity structure forward along a quasi-isomorphism ``f : A -> B``.

    Requires a bijective object map.  Returns ``(mB, F)`` with the Stasheff
    identities for ``mB`` and the morphism identities for ``F`` holding
    through ``min(f.nmax, mA.nmax)``.
    """
    A, B = f.source, f.target
    img = [f.obj_map[x] for x in A.objects]
    if len(set(map(repr, img))) != len(img) or len(img) != len(B.objects):
        raise AinfError("transfer to the target needs a bijective object map")
    nmax = min(f.nmax, mA.nmax)
    mB = _zero_structure(B, nmax)
    F = f.truncate(nmax)
    F.nmax = nmax
    fmaps = {xy: {w[0]: dict(row) for w, row in f.comps.get(xy, {}).items()} for xy in A.pairs()}
    for n in range(3, nmax + 1):
        for xs in tuples_of(A.objects, n):
            ys = tuple(f.obj_map[x] for x in xs)
            mB.nmax = n
            o = gerstenhaber_at(mB, mB, ys)
            if o:
                e = _solve_boundary(B, B, mB.obj_map, ys, o, 1)
                if e is None:
                    raise ObstructionError(f"Stasheff obstruction at {ys} is not a boundary")
                cur = {w: dict(r) for w, r in mB.comps.get(ys, {}).items()}
                for w, row in e.items():
                    add_into(cur, w, row, -1)
                mB.set_component(ys, cur)
            delta = mi_defect_at(F, mA, mB, xs)
            delta = {w: {o: -v for o, v in r.items()} for w, r in delta.items()}
            if not delta:
                continue
            e1, e2 = _split_cycle_before(A, B, f.obj_map, xs, ys, delta, fmaps)
            cur = {w: dict(r) for w, r in mB.comps.get(ys, {}).items()}
            for w, row in e1.items():
                add_into(cur, w, row, -1)
            mB.set_component(ys, cur)
            curF = {w: dict(r) for w, r in F.comps.get(xs, {}).items()}
            for w, row in e2.items():
                add_into(curF, w, row, -1)
            F.set_component(xs, curF)
    mB.nmax = nmax
    return mB, F


def _split_cycle_before(A, B, obj_map, xs, ys, delta, fmaps):
    """Solve ``delta = e1 o f^{(x)} + d e2`` with ``d e1 = 0``."""
    one = A.field.one
    cells1 = _unknowns(B, B, ys, (ys[0], ys[-1]), 1)
    cells2 = _unknowns(A, B, xs, (ys[0], ys[-1]), 0)
    sysm = _System(A.field.zero)
    bcols1 = _boundary_cols(B, B, {y: y for y in B.objects}, ys, cells1, 1, one)
    pairs = [(xs[k], xs[k + 1]) for k in range(len(xs) - 1)]
    in_dims = _dims(A, xs)
    flist = [fmaps[p] for p in pairs]
    ftrans = []
    for fm in flist:
        t: dict = {}
        for a, col in fm.items():
            for b, v in col.items():
                t.setdefault(b, []).append((a, v))
        ftrans.append(t)
    for c, (w, o) in enumerate(cells1):
        pulled = {(): one}
        for pos, b in enumerate(w):
            pulled = {u + (a,): cu * v for u, cu in pulled.items() for a, v in ftrans[pos].get(b, ())}
        for u, v in pulled.items():
            sysm.add(("mi", u, o), c, v)
        for key, v in _flatten(bcols1[c], "cyc").items():
            sysm.add(key, c, v)
    bcols2 = _boundary_cols(A, B, obj_map, xs, cells2, 0, one)
    for c, col in enumerate(bcols2):
        for key, v in _flatten(col).items():
            sysm.add(("mi",) + key[1:], len(cells1) + c, v)
    for key, v in _flatten(delta).items():
        sysm.set_rhs(("mi",) + key[1:], v)
    sol = sysm.solve(len(cells1) + len(cells2))
    if sol is None:
        raise ObstructionError(f"morphism obstruction at {xs} cannot be split")
    return _as_collection_data(cells1, sol[:len(cells1)]), _as_collection_data(cells2, sol[len(cells1):])


def dg_category_structure(A: DgQuiver, product: Mapping[tuple, Mapping], nmax: int) -> HomCollection:
    """Structure of a dg category: ``d[1]`` plus the shifted composition.

    ``product[(x, y, z)]`` maps index pairs ``(a, b)`` (``a`` in ``hom(x, y)``,
    ``b`` in ``hom(y, z)``) to ``{c: coefficient}`` in ``hom(x, z)``.  The
    shifted binary component is ``sa (x) sb -> (-1)^{|a|} s(ab)``.
    """
    m = differential_structure(A, nmax)
    if nmax < 3:
        return m
    for (x, y, z), table in product.items():
        degs = A.hom[(x, y)].degrees
        data: dict = {}
        for (a, b), row in table.items():
            sgn = -1 if degs[a] % 2 else 1
            add_into(data, (a, b), row, sgn)
        cur = m.comps.get((x, y, z), {})
        for w, row in cur.items():
            add_into(data, w, row)
        m.set_component((x, y, z), data)
    return m


def transport_structure(F: HomCollection, mA: HomCollection) -> HomCollection:
    """The structure ``mB`` on the target making an invertible ``F`` a morphism.

    Needs a bijective object map and invertible arity-two components; the top
    component at each step is read off from ``mB^{F0 x}(f (x) ... (x) f)``.
    """
    A, B = F.source, F.target
    nmax = min(F.nmax, mA.nmax)
    G = invert_morphism(F.truncate(2))
    finv = {xy: {w[0]: dict(r) for w, r in G.comps.get((F.obj_map[xy[0]], F.obj_map[xy[1]]), {}).items()}
            for xy in A.pairs()}
    mB = HomCollection(B, B, {y: y for y in B.objects}, 1, nmax)
    for n in range(2, nmax + 1):
        mB.nmax = n
        for xs in tuples_of(A.objects, n):
            ys = tuple(F.obj_map[x] for x in xs)
            delta = mi_defect_at(F, mA, mB, xs)
            if not delta:
                continue
            # mB^{ys} o f^{(x)} must absorb delta: mB^{ys} = delta o (f^{-1})^{(x)}
            pairs = [(xs[k], xs[k + 1]) for k in range(n - 1)]
            add = _precompose_tensor([finv[p] for p in pairs], delta, _dims(B, ys))
            cur = {w: dict(r) for w, r in mB.comps.get(ys, {}).items()}
            for w, row in add.items():
                add_into(cur, w, row)
            mB.set_component(ys, cur)
    return mB


# --- cohomology level ---------------------------------------------------------

def minimal_model(A: DgQuiver, mA: HomCollection, contraction=None):
    """``(H, mH, P)``: transfer along the projection onto cohomology."""
    from .graded import cohomology_contraction
    C = contraction or cohomology_contraction(A)
    ident = {x: x for x in A.objects}
    p = chain_map_morphism(A, C.reduced, ident, C.project, mA.nmax)
    mH, P = transfer_to_target(p, mA)
    return C.reduced, mH, P


@dataclass
class CohomologyTransfer:
    """Both transferred structures on ``H(A)`` with their comparison morphisms."""

    contraction: object
    m_i: HomCollection  # structure pulled back along i
    I: HomCollection    # (H(A), m_i) -> (A, mA)
    m_p: HomCollection  # structure pushed forward along p
    P: HomCollection    # (A, mA) -> (H(A), m_p)


def cohomology_transfers(A: DgQuiver, mA: HomCollection, contraction=None) -> CohomologyTransfer:
    from .graded import cohomology_contraction
    C = contraction or cohomology_contraction(A)
    ident = {x: x for x in A.objects}
    i = chain_map_morphism(C.reduced, A, ident, C.include, mA.nmax)
    p = chain_map_morphism(A, C.reduced, ident, C.project, mA.nmax)
    m_i, I = transfer_from_target(i, mA, contraction=C)
    m_p, P = transfer_to_target(p, mA)
    return CohomologyTransfer(C, m_i, I, m_p, P)


@dataclass
class InducedMorphism:
    morphism: HomCollection        # H(F) : (H(A), m_i) -> (H(B), m_p)
    source: CohomologyTransfer
    target: CohomologyTransfer


def induced_on_cohomology(F: HomCollection, mA: HomCollection, mB: HomCollection,
                          source: CohomologyTransfer | None = None,
                          target: CohomologyTransfer | None = None) -> InducedMorphism:
    """``H(F) = P_B o F o I_A`` between the transferred structures."""
    source = source or cohomology_transfers(F.source, mA)
    target = target or cohomology_transfers(F.target, mB)
    HF = compose_morphisms(target.P, compose_morphisms(F, source.I))
    return InducedMorphism(HF, source, target)


@dataclass
class QuasiInverse:
    G: HomCollection               # (B, mB) -> (A, mA)
    HF: HomCollection              # (H(A), m_iA) -> (H(B), m_pB)
    HG: HomCollection              # (H(B), m_pB) -> (H(A), m_iA)
    I_B: HomCollection             # normalized so that P_B o I_B = id
    P_A: HomCollection             # normalized so that P_A o I_A = id
    induced: InducedMorphism


def quasi_inverse(F: HomCollection, mA: HomCollection, mB: HomCollection) -> QuasiInverse:
    """Quasi-inverse ``G = I_A o K o P_B`` with ``K`` the inverse of ``H(F)``.

    ``H(G)`` is taken with respect to ``P_A`` and ``I_B`` corrected by the
    inverses of the comparison isomorphisms ``P o I`` on each side, so both
    composites with ``H(F)`` are identities on the nose.
    """
    ind = induced_on_cohomology(F, mA, mB)
    sA, sB = ind.source, ind.target
    K = invert_morphism(ind.morphism)
    G = compose_morphisms(sA.I, compose_morphisms(K, sB.P))
    phiA = compose_morphisms(sA.P, sA.I)   # (H(A), m_i) -> (H(A), m_p)
    phiB = compose_morphisms(sB.P, sB.I)
    P_A = compose_morphisms(invert_morphism(phiA), sA.P)
    I_B = compose_morphisms(sB.I, invert_morphism(phiB))
    HG = compose_morphisms(P_A, compose_morphisms(G, I_B))
    return QuasiInverse(G, ind.morphism, HG, I_B, P_A, ind)
