"""Multi-output collections indexed by tuples of object tuples, and the cyclic action.

A component at ``xx = (x^1, ..., x^n)`` takes the inputs of every group in
order (``A[1]`` degrees) and returns ``n`` outputs read in ``B[-d]``: output
``i < n`` lies in ``hom(F0 lt x^i, F0 rt x^{i+1})`` and the last one in
``hom(F0 lt x^n, F0 rt x^1)``.  Stored as ``{input word: {output word: c}}``.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from itertools import product
from typing import Mapping

from .graded import DgQuiver, add_into, koszul_sign


class MultiError(ValueError):
    pass


STRUCTURE, MORPHISM = "structure", "morphism"


def size(key: tuple) -> int:
    return sum(len(g) for g in key)


def length(key: tuple) -> int:
    return len(key)


def key_ok(key: tuple) -> bool:
    if not key or any(len(g) < 1 for g in key):
        return False
    return not (len(key) == 1 and len(key[0]) < 2)


def rotate_key(key: tuple, r: int) -> tuple:
    r %= len(key)
    return key[r:] + key[:r]


def all_keys(objects, lmax: int, nmax: int, min_stage=None):
    """Every admissible key with ``lg <= lmax`` and ``N <= nmax``, ordered by ``(lg, N)``."""
    out = []
    for n in range(1, lmax + 1):
        for total in range(max(n, 2), nmax + 1):
            for lens in _compositions(total, n):
                if n == 1 and lens[0] < 2:
                    continue
                for objs in product(objects, repeat=total):
                    key, k = [], 0
                    for ln in lens:
                        key.append(tuple(objs[k:k + ln]))
                        k += ln
                    out.append(tuple(key))
    return out


def _compositions(total: int, parts: int):
    if parts == 1:
        yield (total,)
        return
    for first in range(1, total - parts + 2):
        for rest in _compositions(total - first, parts - 1):
            yield (first,) + rest


def output_pairs(key: tuple) -> list[tuple]:
    n = len(key)
    return [(key[i][0], key[(i + 1) % n][-1]) for i in range(n)]


def input_pairs(key: tuple) -> list[tuple]:
    return [(g[k], g[k + 1]) for g in key for k in range(len(g) - 1)]


def group_offsets(key: tuple) -> list[int]:
    offs, k = [], 0
    for g in key:
        offs.append(k)
        k += len(g) - 1
    return offs


@dataclass
class MultiCollection:
    """Truncated element of ``Multi_d(A, B)``.

    ``role`` says whether the collection is structure-shaped (one quiver) or
    morphism-shaped; ``weight`` is its degree after the ``[d+1]`` shift and
    defaults to 1 for structures and 0 for morphisms.
    """

    source: DgQuiver
    target: DgQuiver
    obj_map: Mapping
    d: int
    role: str
    lmax: int
    nmax: int
    comps: dict = field(default_factory=dict)
    weight: int | None = None

    def __post_init__(self):
        if self.role not in (STRUCTURE, MORPHISM):
            raise MultiError(f"unknown role {self.role!r}")
        if self.weight is None:
            self.weight = 1 if self.role == STRUCTURE else 0
        for key in self.comps:
            self._check_key(key)

    def _check_key(self, key):
        if not key_ok(key):
            raise MultiError(f"inadmissible index {key!r} (curved or empty components are not supported)")
        if len(key) > self.lmax or size(key) > self.nmax:
            raise MultiError(f"index {key!r} exceeds the truncation ({self.lmax}, {self.nmax})")

    @property
    def is_structure(self) -> bool:
        return self.role == STRUCTURE

    # degrees
    def in_degrees(self, key) -> list[tuple[int, ...]]:
        return [tuple(d - 1 for d in self.source.hom[p].degrees) for p in input_pairs(key)]

    def out_spaces(self, key):
        return [self.target.hom[(self.obj_map[a], self.obj_map[b])] for a, b in output_pairs(key)]

    def out_degrees(self, key) -> list[tuple[int, ...]]:
        return [tuple(g + self.d for g in sp.degrees) for sp in self.out_spaces(key)]

    def map_degree(self) -> int:
        """Degree of a component as a map into the outputs read in ``B[-d]``."""
        return self.weight + self.d + 1

    def keys(self):
        return all_keys(self.source.objects, self.lmax, self.nmax)

    # construction helpers
    def like(self, weight: int | None = None, lmax=None, nmax=None, role=None, source=None, target=None,
             obj_map=None) -> "MultiCollection":
        return MultiCollection(self.source if source is None else source,
                               self.target if target is None else target,
                               self.obj_map if obj_map is None else obj_map, self.d,
                               self.role if role is None else role,
                               self.lmax if lmax is None else lmax, self.nmax if nmax is None else nmax, {},
                               self.weight if weight is None else weight)

    def copy(self) -> "MultiCollection":
        return replace(self, comps={k: {w: dict(r) for w, r in c.items()} for k, c in self.comps.items()})

    def set_component(self, key, data: Mapping) -> None:
        clean = {}
        for w, row in data.items():
            r = {o: v for o, v in row.items() if v != 0}
            if r:
                clean[tuple(w)] = r
        if clean:
            self._check_key(key)
            self.comps[key] = clean
        else:
            self.comps.pop(key, None)

    def row(self, key, word) -> Mapping:
        c = self.comps.get(key)
        return c.get(word, {}) if c else {}

    def truncate(self, lmax: int, nmax: int) -> "MultiCollection":
        out = self.copy()
        out.lmax, out.nmax = lmax, nmax
        out.comps = {k: v for k, v in out.comps.items() if len(k) <= lmax and size(k) <= nmax}
        return out

    def nonzero_keys(self) -> list:
        return [k for k, c in self.comps.items() if c]

    def is_zero(self) -> bool:
        return not self.nonzero_keys()

    def check_homogeneous(self) -> None:
        for key, comp in self.comps.items():
            ind, outd = self.in_degrees(key), self.out_degrees(key)
            for w, row in comp.items():
                s = sum(ind[k][a] for k, a in enumerate(w))
                for ow in row:
                    if sum(outd[k][b] for k, b in enumerate(ow)) - s != self.map_degree():
                        raise MultiError(f"component {key!r} is not homogeneous")

    # linear structure
    def _combine(self, other: "MultiCollection", scale) -> "MultiCollection":
        out = self.copy()
        out.lmax, out.nmax = min(self.lmax, other.lmax), min(self.nmax, other.nmax)
        for key, c in other.comps.items():
            tgt = out.comps.setdefault(key, {})
            for w, row in c.items():
                add_into(tgt, w, row, scale)
            if not tgt:
                del out.comps[key]
        out.comps = {k: v for k, v in out.comps.items() if len(k) <= out.lmax and size(k) <= out.nmax}
        return out

    def __add__(self, other):
        return self._combine(other, 1)

    def __sub__(self, other):
        return self._combine(other, -1)

    def scale(self, c) -> "MultiCollection":
        out = self.like()
        for key, comp in self.comps.items():
            out.set_component(key, {w: {o: c * v for o, v in r.items()} for w, r in comp.items()})
        return out

    def equals(self, other: "MultiCollection") -> bool:
        return (self - other).is_zero()

    def restrict(self, pred) -> "MultiCollection":
        out = self.like()
        out.comps = {k: {w: dict(r) for w, r in c.items()} for k, c in self.comps.items() if pred(k)}
        return out


# --- cyclic action --------------------------------------------------------------

def rotate_component(F: MultiCollection, key: tuple, r: int) -> dict:
    """``(rho_r F)^key``: read ``F`` at the key rotated by ``r`` groups, with Koszul signs."""
    n = len(key)
    r %= n
    if r == 0:
        return {w: dict(row) for w, row in F.comps.get(key, {}).items()}
    rkey = rotate_key(key, r)
    comp = F.comps.get(rkey)
    if not comp:
        return {}
    offs = group_offsets(key)
    sizes = [len(g) - 1 for g in key]
    in_deg = F.in_degrees(key)
    out_deg = F.out_degrees(key)
    # input positions of key, listed in rotated order
    order = [offs[(i + r) % n] + t for i in range(n) for t in range(sizes[(i + r) % n])]
    out_order = [(i + r) % n for i in range(n)]
    res: dict = {}
    for rw, row in comp.items():
        # rw is indexed in rotated order; build the word in key order
        w = [None] * len(order)
        for pos, src in enumerate(order):
            w[src] = rw[pos]
        w = tuple(w)
        s_in = koszul_sign([in_deg[src][w[src]] for src in range(len(w))], _inverse_positions(order))
        for ro, c in row.items():
            o = [None] * n
            for pos, src in enumerate(out_order):
                o[src] = ro[pos]
            o = tuple(o)
            s_out = koszul_sign([out_deg[out_order[pos]][ro[pos]] for pos in range(n)], out_order)
            add_into(res, w, {o: s_in * s_out * c})
    return res


def _inverse_positions(order):
    """``sigma`` for ``koszul_sign`` moving key-order slots to their rotated positions."""
    inv = [0] * len(order)
    for pos, src in enumerate(order):
        inv[src] = pos
    return inv


def cyclic_action(F: MultiCollection, r: int = 1) -> MultiCollection:
    out = F.like()
    for key in set(F.comps) | {rotate_key(k, -r) for k in F.comps}:
        out.set_component(key, rotate_component(F, key, r))
    return out


def invariance_defects(F: MultiCollection) -> list:
    bad = []
    for key in sorted(F.comps, key=repr):
        n = len(key)
        if n == 1:
            continue
        rot = rotate_component(F, key, 1)
        diff = {w: dict(r) for w, r in rot.items()}
        for w, row in F.comps.get(key, {}).items():
            add_into(diff, w, row, -1)
        if diff:
            bad.append((key, min(diff)))
    for key in F.comps:
        rk = rotate_key(key, 1)
        if rk not in F.comps and F.comps[key] and len(key) > 1:
            bad.append((rk, None))
    return bad


def is_cyclically_invariant(F: MultiCollection) -> bool:
    return not invariance_defects(F)


def symmetrize(F: MultiCollection) -> MultiCollection:
    """Average over the cyclic orbit of each index."""
    field_ = F.source.field
    out = F.like()
    keys = set()
    for k in F.comps:
        keys.update(rotate_key(k, r) for r in range(len(k)))
    for key in keys:
        n = len(key)
        if field_.characteristic() and n % field_.characteristic() == 0:
            raise MultiError(f"cannot average over C_{n} in characteristic {field_.characteristic()}")
        inv = field_.one / field_(n)
        acc: dict = {}
        for r in range(n):
            for w, row in rotate_component(F, key, r).items():
                add_into(acc, w, row, inv)
        out.set_component(key, acc)
    return out
