"""d-pre-Calabi-Yau structures and morphisms on finite graded quivers."""

from __future__ import annotations

from collections import defaultdict
from dataclasses import dataclass
from typing import Iterable, Mapping

from itertools import product

from .ainfty import (HomCollection, chain_map_morphism, invert_morphism, transfer_from_target, transfer_to_target,
                     transport_structure)
from .exactla import SparseMatrix, solve_in_subspace
from .diagrams import DiagramDatum, Edge, accumulate, evaluate, make_datum
from .graded import DgQuiver, add_into, cohomology_contraction
from .multi import (MORPHISM, STRUCTURE, MultiCollection, MultiError, all_keys, is_cyclically_invariant,
                    output_pairs, rotate_key, size, symmetrize)


class PcyError(ValueError):
    pass


# --- diagram families -----------------------------------------------------------------

class _Index:
    """Keys of one filling indexed by the object pairs of their ports."""

    def __init__(self, keys: Iterable[tuple]):
        self.keys = list(keys)
        self.by_last = defaultdict(list)
        self.slot0 = defaultdict(list)
        for k in self.keys:
            self.by_last[output_pairs(k)[-1]].append(k)
            g = k[0]
            for p in range(len(g) - 1):
                self.slot0[(g[p], g[p + 1])].append((k, p))


def _slots(key):
    return [(g, p) for g, grp in enumerate(key) for p in range(len(grp) - 1)]


def _slot_pair(key, g, p):
    return key[g][p], key[g][p + 1]


class _Grower:
    """Depth-first growth of disc trees from a root under per-family attachment rules.

    A task is ``("feed", j, g, p, roles)`` (slot filled by a new disc through
    its last output), ``("consume", j, o, roles)`` (output feeds a new disc at
    a slot of its first group) or ``("one", alternatives)`` where exactly one
    of the listed feed/consume tasks is performed.
    """

    def __init__(self, index: Mapping[str, _Index], lmax, nmax, spawn, quota=None):
        self.index, self.lmax, self.nmax, self.spawn = index, lmax, nmax, spawn
        self.quota = quota or {}

    def _ok_quota(self, roles, final):
        for r, (lo, hi) in self.quota.items():
            c = roles.count(r)
            if c > hi or (final and c < lo):
                return False
        return True

    def grow(self, roles, keys, edges, tasks, N, L):
        if N > self.nmax or L > self.lmax or not self._ok_quota(roles, False):
            return
        if not tasks:
            if self._ok_quota(roles, True):
                yield list(roles), list(keys), list(edges)
            return
        task, rest = tasks[0], tasks[1:]
        alternatives = task[1] if task[0] == "one" else [task]
        for t in alternatives:
            for role, key, edge, via in self._choices(keys, t):
                j = len(keys)
                e = Edge(j, edge[1], edge[2], edge[3], edge[4]) if edge[0] == "new" else \
                    Edge(edge[1], edge[2], j, edge[3], edge[4])
                new_tasks = self.spawn(role, key, j, via)
                yield from self.grow(roles + [role], keys + [key], edges + [e], new_tasks + rest,
                                     N + size(key) - 2, L + len(key) - 1)

    def _choices(self, keys, t):
        if t[0] == "feed":
            _, j, g, p, roles = t
            pair = _slot_pair(keys[j], g, p)
            for r in roles:
                for k in self.index[r].by_last.get(pair, ()):
                    yield r, k, ("new", len(k) - 1, j, g, p), ("out", len(k) - 1)
        else:
            _, j, o, roles = t
            pair = output_pairs(keys[j])[o]
            for r in roles:
                for k, p in self.index[r].slot0.get(pair, ()):
                    yield r, k, ("old", j, o, 0, p), ("slot", 0, p)


def _finish(found, root, precedence) -> list[DiagramDatum]:
    out = []
    for roles, keys, edges in found:
        rank = {r: i for i, r in enumerate(precedence)}
        order = sorted(range(len(keys)), key=lambda j: (rank[roles[j]], j))
        out.append(make_datum(roles, keys, edges, root, len(keys[root]) - 1, order))
    return out


def necklace_diagrams(Mkeys, Nkeys, lmax, nmax) -> list[DiagramDatum]:
    """Two discs, an output of ``N`` glued into an input of ``M``; the distinguished output on either."""
    iM, iN = _Index(Mkeys), _Index(Nkeys)
    out = []
    for kM in iM.keys:
        for g, p in _slots(kM):
            for kN in iN.by_last.get(_slot_pair(kM, g, p), ()):
                if size(kM) + size(kN) - 2 <= nmax and len(kM) + len(kN) - 1 <= lmax:
                    out.append(make_datum(("M", "N"), (kM, kN), [Edge(1, len(kN) - 1, 0, g, p)], 0, len(kM) - 1))
    for kN in iN.keys:
        ops = output_pairs(kN)
        for a in range(len(kN) - 1):
            for kM, p in iM.slot0.get(ops[a], ()):
                if size(kM) + size(kN) - 2 <= nmax and len(kM) + len(kN) - 1 <= lmax:
                    out.append(make_datum(("M", "N"), (kM, kN), [Edge(1, a, 0, 0, p)], 1, len(kN) - 1))
    return out


def multinec_diagrams(index, lmax, nmax, center="A", ring=("F",), quota=None, precedence=None):
    """Central disc whose outputs each feed a distinct ring disc; the distinguished output on a ring disc."""

    def spawn(role, key, j, via):
        if role == center:
            return [("consume", j, o, ring) for o in range(len(key)) if ("out", o) != via]
        return []

    gr = _Grower(index, lmax, nmax, spawn, quota)
    found = []
    for r in ring:
        for k in index[r].keys:
            tasks = [("one", [("feed", 0, g, p, (center,)) for g, p in _slots(k)])]
            found.extend(gr.grow([r], [k], [], tasks, size(k), len(k)))
    return _finish(found, 0, precedence or tuple(ring) + (center,))


def pre_diagrams(index, lmax, nmax, center="B", feeders=("F",), quota=None, precedence=None):
    """Central disc whose inputs are all fed by distinct discs; the distinguished output anywhere."""

    def spawn(role, key, j, via):
        if role == center:
            return [("feed", j, g, p, feeders) for g, p in _slots(key) if ("slot", g, p) != via]
        return []

    gr = _Grower(index, lmax, nmax, spawn, quota)
    found = []
    for k in index[center].keys:
        found.extend(gr.grow([center], [k], [], spawn(center, k, 0, None), size(k), len(k)))
    for r in feeders:
        for k in index[r].keys:
            tasks = [("one", [("consume", 0, o, (center,)) for o in range(len(k) - 1)])]
            found.extend(gr.grow([r], [k], [], tasks, size(k), len(k)))
    return _finish(found, 0, precedence or (center,) + tuple(feeders))


def composition_diagrams(index, lmax, nmax):
    """Bipartite trees: every ``F`` output feeds a ``G`` input and every ``G`` input is fed by an ``F``."""

    def spawn(role, key, j, via):
        if role == "G":
            return [("feed", j, g, p, ("F",)) for g, p in _slots(key) if ("slot", g, p) != via]
        return [("consume", j, o, ("G",)) for o in range(len(key)) if ("out", o) != via]

    gr = _Grower(index, lmax, nmax, spawn)
    found = []
    for k in index["G"].keys:
        found.extend(gr.grow(["G"], [k], [], spawn("G", k, 0, None), size(k), len(k)))
    return _finish(found, 0, ("G", "F"))


# --- evaluation of families --------------------------------------------------------------

def _collect(result: MultiCollection, diagrams, fillings, keys=None) -> MultiCollection:
    acc = defaultdict(dict)
    for D in diagrams:
        if keys is not None and D.boundary not in keys:
            continue
        accumulate(acc[D.boundary], evaluate(D, fillings, result.d))
    for k, v in acc.items():
        result.set_component(k, v)
    return result


def _bounds(*colls):
    return min(c.lmax for c in colls), min(c.nmax for c in colls)


def _check_d(*colls):
    if len({c.d for c in colls}) != 1:
        raise PcyError("collections with different d")


def necklace_compose(M: MultiCollection, N: MultiCollection, keys=None) -> MultiCollection:
    """``M o_nec N``: an output of ``N`` glued into an input of ``M``."""
    _check_d(M, N)
    if M.source is not N.source:
        raise PcyError("necklace product needs collections on the same quiver")
    lmax, nmax = _bounds(M, N)
    res = M.like(weight=M.weight + N.weight, lmax=lmax, nmax=nmax)
    diags = necklace_diagrams(M.nonzero_keys(), N.nonzero_keys(), lmax, nmax)
    return _collect(res, diags, {"M": M, "N": N}, keys)


def mc_defect(M: MultiCollection, keys=None) -> MultiCollection:
    return necklace_compose(M, M, keys)


def necklace_bracket(M: MultiCollection, N: MultiCollection) -> MultiCollection:
    sign = -1 if (M.weight * N.weight) % 2 else 1
    return necklace_compose(M, N) - necklace_compose(N, M).scale(sign)


def multinec_compose(F: MultiCollection, MA: MultiCollection, keys=None) -> MultiCollection:
    """Central ``MA`` disc with every output feeding an ``F`` disc."""
    _check_d(F, MA)
    lmax, nmax = _bounds(F, MA)
    res = F.like(weight=F.weight + MA.weight, lmax=lmax, nmax=nmax)
    idx = {"A": _Index(MA.nonzero_keys()), "F": _Index(F.nonzero_keys())}
    return _collect(res, multinec_diagrams(idx, lmax, nmax), {"A": MA, "F": F}, keys)


def pre_compose(MB: MultiCollection, F: MultiCollection, keys=None) -> MultiCollection:
    """Central ``MB`` disc with every input fed by an ``F`` disc."""
    _check_d(F, MB)
    lmax, nmax = _bounds(F, MB)
    res = F.like(weight=F.weight + MB.weight, lmax=lmax, nmax=nmax)
    idx = {"B": _Index(MB.nonzero_keys()), "F": _Index(F.nonzero_keys())}
    return _collect(res, pre_diagrams(idx, lmax, nmax), {"B": MB, "F": F}, keys)


def pcy_mi_defect(F, MA, MB, keys=None) -> MultiCollection:
    return multinec_compose(F, MA, keys) - pre_compose(MB, F, keys)


def lower_compose(M: MultiCollection, H: MultiCollection, F: MultiCollection, keys=None) -> MultiCollection:
    """Pre-shaped diagrams around ``M`` with exactly one feeder filled by ``H``, the others by ``F``."""
    _check_d(M, H, F)
    lmax, nmax = _bounds(M, H, F)
    res = F.like(weight=M.weight + H.weight + F.weight, lmax=lmax, nmax=nmax)
    idx = {"B": _Index(M.nonzero_keys()), "F": _Index(F.nonzero_keys()), "H": _Index(H.nonzero_keys())}
    diags = pre_diagrams(idx, lmax, nmax, feeders=("F", "H"), quota={"H": (1, 1)}, precedence=("B", "H", "F"))
    return _collect(res, diags, {"B": M, "F": F, "H": H}, keys)


def upper_compose(H: MultiCollection, Mp: MultiCollection, F: MultiCollection, keys=None) -> MultiCollection:
    """Multinec-shaped diagrams around ``Mp`` with exactly one ring disc filled by ``H``, the others by ``F``."""
    _check_d(Mp, H, F)
    lmax, nmax = _bounds(Mp, H, F)
    res = F.like(weight=Mp.weight + H.weight + F.weight, lmax=lmax, nmax=nmax)
    idx = {"A": _Index(Mp.nonzero_keys()), "F": _Index(F.nonzero_keys()), "H": _Index(H.nonzero_keys())}
    diags = multinec_diagrams(idx, lmax, nmax, ring=("F", "H"), quota={"H": (1, 1)}, precedence=("H", "F", "A"))
    return _collect(res, diags, {"A": Mp, "F": F, "H": H}, keys)


def compose_pcy(G: MultiCollection, F: MultiCollection, keys=None) -> MultiCollection:
    """``G o F`` summed over bipartite trees of ``F`` and ``G`` discs."""
    _check_d(G, F)
    if F.target is not G.source:
        raise PcyError("target of F differs from source of G")
    lmax, nmax = _bounds(F, G)
    om = {x: G.obj_map[F.obj_map[x]] for x in F.source.objects}
    res = F.like(weight=F.weight + G.weight, lmax=lmax, nmax=nmax, target=G.target, obj_map=om)
    idx = {"G": _Index(G.nonzero_keys()), "F": _Index(F.nonzero_keys())}
    return _collect(res, composition_diagrams(idx, lmax, nmax), {"G": G, "F": F}, keys)


# --- single-group part ------------------------------------------------------------------

def embed_ainf(m: HomCollection, d: int, lmax: int = 1, role: str | None = None) -> MultiCollection:
    """Place every component of ``m`` at the one-group index ``(xs,)``."""
    if role is None:
        role = STRUCTURE if m.degree == 1 and m.source is m.target else MORPHISM
    out = MultiCollection(m.source, m.target, dict(m.obj_map), d, role, lmax, m.nmax, {}, m.degree)
    for xs, comp in m.comps.items():
        out.set_component((tuple(xs),), {w: {(o,): v for o, v in row.items()} for w, row in comp.items()})
    return out


def restrict_to_ainf(M: MultiCollection) -> HomCollection:
    out = HomCollection(M.source, M.target, dict(M.obj_map), M.weight, M.nmax)
    for key, comp in M.comps.items():
        if len(key) == 1:
            out.set_component(key[0], {w: {o[0]: v for o, v in row.items()} for w, row in comp.items()})
    return out


def identity_pcy(A: DgQuiver, d: int, lmax: int, nmax: int) -> MultiCollection:
    """Identity morphism: the identity on each ``(x, y)`` and zero elsewhere."""
    one = A.field.one
    out = MultiCollection(A, A, {x: x for x in A.objects}, d, MORPHISM, lmax, nmax, {})
    for (x, y) in A.pairs():
        if A.dim(x, y):
            out.set_component(((x, y),), {(k,): {(k,): one} for k in range(A.dim(x, y))})
    return out


# --- linear algebra on one stage ------------------------------------------------------------

class PcyObstructionError(PcyError):
    pass


def stage_keys(objects, L: int, N: int) -> list:
    return [k for k in all_keys(objects, L, N) if len(k) == L and size(k) == N]


def orbits(keys) -> list[list]:
    """Cyclic orbits among ``keys``, each listed from its smallest member."""
    seen, out = set(), []
    for k in sorted(keys, key=repr):
        if k in seen:
            continue
        orb = sorted({rotate_key(k, r) for r in range(len(k))}, key=repr)
        seen.update(orb)
        out.append(orb)
    return out


def cells(C: MultiCollection, key) -> list[tuple]:
    """Basis of homogeneous component entries of ``C`` at ``key``."""
    ind, outd = C.in_degrees(key), C.out_degrees(key)
    res = []
    for w in product(*[range(len(t)) for t in ind]):
        s = sum(ind[k][a] for k, a in enumerate(w)) + C.map_degree()
        for o in product(*[range(len(t)) for t in outd]):
            if sum(outd[k][b] for k, b in enumerate(o)) == s:
                res.append((w, o))
    return res


def _flat(C: MultiCollection, tag, keys) -> dict:
    out = {}
    for k in keys:
        for w, row in C.comps.get(k, {}).items():
            for o, v in row.items():
                out[(tag, k, w, o)] = v
    return out


class _StageSystem:
    """Unknown components on one orbit, constrained to the cyclic-invariant subspace."""

    def __init__(self, field):
        self.field = field
        self.blocks = []     # (name, template, keys, cells)

    def add_block(self, name, template: MultiCollection, keys):
        cl = [(k, w, o) for k in keys for (w, o) in cells(template, k)]
        self.blocks.append((name, template, keys, cl))

    def elementary(self, b, idx) -> MultiCollection:
        name, tpl, keys, cl = self.blocks[b]
        k, w, o = cl[idx]
        X = tpl.like()
        X.comps[k] = {w: {o: self.field.one}}
        return X

    def solve(self, linear, constant: Mapping) -> dict:
        """Find unknowns with ``linear(name, X)`` summed over blocks equal to ``-constant``.

        ``linear(name, X)`` returns a flat ``{equation coordinate: value}`` dict.
        """
        cols, spans, offset = [], [], 0
        for b, (name, tpl, keys, cl) in enumerate(self.blocks):
            for idx in range(len(cl)):
                cols.append(linear(name, self.elementary(b, idx)))
            pos = {c: offset + i for i, c in enumerate(cl)}
            rep = keys[0]
            for i, (k, w, o) in enumerate(cl):
                if k != rep:
                    continue
                sym = symmetrize(self.elementary(b, i))
                vec = {}
                for kk, comp in sym.comps.items():
                    for ww, row in comp.items():
                        for oo, v in row.items():
                            vec[pos[(kk, ww, oo)]] = v
                spans.append(vec)
            offset += len(cl)
        ncols = offset
        if ncols == 0:
            if any(v != 0 for v in constant.values()):
                return None
            return {name: {} for name, *_ in self.blocks}
        rows = sorted(set(constant) | {r for c in cols for r in c}, key=repr)
        ridx = {r: i for i, r in enumerate(rows)}
        zero = self.field.zero
        A = SparseMatrix.from_dict(len(rows), ncols, {(ridx[r], c): v for c, col in enumerate(cols)
                                                        for r, v in col.items() if v != 0})
        b = [-constant.get(r, zero) for r in rows]
        S = []
        for vec in spans:
            dense = [zero] * ncols
            for i, v in vec.items():
                dense[i] = v
            S.append(dense)
        x = solve_in_subspace(A, b, S, zero)
        if x is None:
            return None
        out, offset = {}, 0
        for name, tpl, keys, cl in self.blocks:
            data = {}
            for i, (k, w, o) in enumerate(cl):
                v = x[offset + i]
                if v != 0:
                    data.setdefault(k, {}).setdefault(w, {})[o] = v
            out[name] = data
            offset += len(cl)
        return out


def _low_part(C: MultiCollection) -> MultiCollection:
    """Components at the ``(x, y)`` indices only."""
    return C.restrict(lambda k: len(k) == 1 and len(k[0]) == 2)


def _with(C: MultiCollection, data: Mapping, scale=1) -> MultiCollection:
    out = C.copy()
    for k, comp in data.items():
        cur = {w: dict(r) for w, r in out.comps.get(k, {}).items()}
        for w, row in comp.items():
            add_into(cur, w, row, scale)
        out.set_component(k, cur)
    return out


def _stages(lmax, nmax):
    for L in range(2, lmax + 1):
        for N in range(max(L, 2), nmax + 1):
            yield L, N


# --- transfers ------------------------------------------------------------------------------

def _as_hom(f, nmax) -> HomCollection:
    if isinstance(f, MultiCollection):
        return restrict_to_ainf(_low_part(f))
    return f


def transfer_pcy_from_target(f, MB: MultiCollection):
    """Pull a pre-CY structure back along a quasi-isomorphism ``f : A -> B``.

    Returns ``(MA, F)`` with ``MA`` cyclically invariant, satisfying the
    Maurer-Cartan identities, and ``F`` a pre-CY morphism extending ``f``,
    all through ``(MB.lmax, MB.nmax)``.
    """
    fh = _as_hom(f, MB.nmax)
    A, B, d = fh.source, fh.target, MB.d
    if B is not MB.source:
        raise PcyError("f must land in the quiver carrying MB")
    lmax, nmax = MB.lmax, MB.nmax
    mA, F1 = transfer_from_target(fh, restrict_to_ainf(MB).truncate(nmax))
    MA = embed_ainf(mA, d, lmax, STRUCTURE)
    F = embed_ainf(F1, d, lmax, MORPHISM)
    MA.weight, F.weight = 1, 0
    MB1, Flow = _low_part(MB), _low_part(F)
    field = A.field
    for L, N in _stages(lmax, nmax):
        for orb in orbits(stage_keys(A.objects, L, N)):
            MAlow = _low_part(MA)
            mc = _flat(mc_defect(MA, keys=set(orb)), "mc", orb)
            mi = _flat(pcy_mi_defect(F, MA, MB, keys=set(orb)), "mi", orb)
            if not mc and not mi:
                continue

            def linear(name, X):
                if name == "M":
                    s = _flat(necklace_compose(MAlow, X, keys=set(orb)) + necklace_compose(X, MAlow, keys=set(orb)),
                              "mc", orb)
                    s.update(_flat(multinec_compose(Flow, X, keys=set(orb)), "mi", orb))
                    return s
                return _flat(upper_compose(X, MAlow, Flow, keys=set(orb))
                             - lower_compose(MB1, X, Flow, keys=set(orb)), "mi", orb)

            system = _StageSystem(field)
            system.add_block("M", MA.like(), orb)
            system.add_block("F", F.like(), orb)
            sol = system.solve(linear, {**mc, **mi})
            if sol is None:
                raise PcyObstructionError(f"obstruction on the orbit of {orb[0]!r} cannot be removed; "
                                          "is f a quasi-isomorphism?")
            MA = _with(MA, sol["M"])
            F = _with(F, sol["F"])
    return MA, F


def transfer_pcy_to_target(f, MA: MultiCollection):
    """Push a pre-CY structure forward along a quasi-isomorphism ``f : A -> B`` (bijective on objects).

    Returns ``(MB, F)``.
    """
    fh = _as_hom(f, MA.nmax)
    A, B, d = fh.source, fh.target, MA.d
    if A is not MA.source:
        raise PcyError("f must start at the quiver carrying MA")
    om = fh.obj_map
    img = [om[x] for x in A.objects]
    if len(set(img)) != len(img) or set(img) != set(B.objects):
        raise PcyError("transfer to the target needs a bijective object map")
    lmax, nmax = MA.lmax, MA.nmax
    mB, F1 = transfer_to_target(fh, restrict_to_ainf(MA).truncate(nmax))
    MB = embed_ainf(mB, d, lmax, STRUCTURE)
    F = embed_ainf(F1, d, lmax, MORPHISM)
    MB.weight, F.weight = 1, 0
    MA1, Flow = _low_part(MA), _low_part(F)
    field = A.field
    for L, N in _stages(lmax, nmax):
        for orb in orbits(stage_keys(A.objects, L, N)):
            borb = [tuple(tuple(om[x] for x in g) for g in k) for k in orb]
            MBlow = _low_part(MB)
            mc = _flat(mc_defect(MB, keys=set(borb)), "mc", borb)
            mi = _flat(pcy_mi_defect(F, MA, MB, keys=set(orb)), "mi", orb)
            if not mc and not mi:
                continue

            def linear(name, X):
                if name == "M":
                    s = _flat(necklace_compose(MBlow, X, keys=set(borb)) + necklace_compose(X, MBlow, keys=set(borb)),
                              "mc", borb)
                    s.update({k: -v for k, v in _flat(pre_compose(X, Flow, keys=set(orb)), "mi", orb).items()})
                    return s
                return _flat(upper_compose(X, MA1, Flow, keys=set(orb))
                             - lower_compose(MBlow, X, Flow, keys=set(orb)), "mi", orb)

            system = _StageSystem(field)
            system.add_block("M", MB.like(), borb)
            system.add_block("F", F.like(), orb)
            sol = system.solve(linear, {**mc, **mi})
            if sol is None:
                raise PcyObstructionError(f"obstruction on the orbit of {orb[0]!r} cannot be removed; "
                                          "is f a quasi-isomorphism?")
            MB = _with(MB, sol["M"])
            F = _with(F, sol["F"])
    return MB, F


def transport_pcy(F: MultiCollection, MA: MultiCollection) -> MultiCollection:
    """The structure on the target making an invertible ``F`` a pre-CY morphism out of ``MA``."""
    A, B, om = F.source, F.target, F.obj_map
    img = [om[x] for x in A.objects]
    if len(set(img)) != len(img) or set(img) != set(B.objects):
        raise PcyError("transport needs a bijective object map")
    lmax, nmax = min(F.lmax, MA.lmax), min(F.nmax, MA.nmax)
    mB = transport_structure(restrict_to_ainf(F).truncate(nmax), restrict_to_ainf(MA).truncate(nmax))
    MB = embed_ainf(mB, MA.d, lmax, STRUCTURE)
    MB.weight = 1
    F = F.truncate(lmax, nmax)
    Flow = _low_part(F)
    for L, N in _stages(lmax, nmax):
        for orb in orbits(stage_keys(A.objects, L, N)):
            borb = [tuple(tuple(om[x] for x in g) for g in k) for k in orb]
            mi = _flat(pcy_mi_defect(F, MA, MB, keys=set(orb)), "mi", orb)
            if not mi:
                continue
            system = _StageSystem(A.field)
            system.add_block("M", MB.like(), borb)
            sol = system.solve(lambda name, X: {k: -v for k, v in
                                                _flat(pre_compose(X, Flow, keys=set(orb)), "mi", orb).items()}, mi)
            if sol is None:
                raise PcyObstructionError("cannot transport along F; is it invertible and cyclically invariant?")
            MB = _with(MB, sol["M"])
    return MB


# --- inversion and cohomology -------------------------------------------------------------

def invert_pcy(F: MultiCollection, MA: MultiCollection | None = None, MB: MultiCollection | None = None
               ) -> MultiCollection:
    """Inverse of a pre-CY morphism with bijective object map and invertible ``(x, y)`` parts.

    Component by component, ``G`` is chosen so that ``G o F`` vanishes away
    from the ``(x, y)`` indices; the only diagram seeing the new component
    precomposes it with invertible ``(x, y)`` parts of ``F``.
    """
    g = invert_morphism(restrict_to_ainf(F).truncate(F.nmax))
    G = embed_ainf(g, F.d, F.lmax, MORPHISM)
    om = F.obj_map
    Flow = _low_part(F)
    for L, N in _stages(F.lmax, F.nmax):
        for orb in orbits(stage_keys(F.source.objects, L, N)):
            rest = _flat(compose_pcy(G, F, keys=set(orb)), "c", orb)
            if not rest:
                continue
            borb = [tuple(tuple(om[x] for x in grp) for grp in k) for k in orb]
            system = _StageSystem(F.source.field)
            system.add_block("G", G.like(), borb)
            sol = system.solve(lambda name, X: _flat(compose_pcy(X, Flow, keys=set(orb)), "c", orb), rest)
            if sol is None:
                raise PcyError("morphism is not invertible (is it cyclically invariant?)")
            G = _with(G, sol["G"])
    return G


def _chain_maps(A: DgQuiver, C, nmax):
    ident = {x: x for x in A.objects}
    i = chain_map_morphism(C.reduced, A, ident, C.include, nmax)
    p = chain_map_morphism(A, C.reduced, ident, C.project, nmax)
    return i, p


def pcy_minimal_model(A: DgQuiver, MA: MultiCollection, contraction=None):
    """``(H, MH, P)``: the structure pushed onto cohomology with the comparison morphism."""
    C = contraction or cohomology_contraction(A)
    _, p = _chain_maps(A, C, MA.nmax)
    MH, P = transfer_pcy_to_target(p, MA)
    return C.reduced, MH, P


@dataclass
class PcyCohomologyTransfer:
    """Both transferred pre-CY structures on ``H(A)`` with their comparison morphisms."""

    contraction: object
    M_i: MultiCollection   # pulled back along i
    I: MultiCollection     # (H(A), M_i) -> (A, MA)
    M_p: MultiCollection   # pushed forward along p
    P: MultiCollection     # (A, MA) -> (H(A), M_p)


def pcy_cohomology_transfers(A: DgQuiver, MA: MultiCollection, contraction=None) -> PcyCohomologyTransfer:
    C = contraction or cohomology_contraction(A)
    i, p = _chain_maps(A, C, MA.nmax)
    M_i, I = transfer_pcy_from_target(i, MA)
    M_p, P = transfer_pcy_to_target(p, MA)
    return PcyCohomologyTransfer(C, M_i, I, M_p, P)


@dataclass
class PcyInducedMorphism:
    morphism: MultiCollection      # H(F) : (H(A), M_i) -> (H(B), M_p)
    source: PcyCohomologyTransfer
    target: PcyCohomologyTransfer


def pcy_induced_on_cohomology(F: MultiCollection, MA: MultiCollection, MB: MultiCollection,
                              source: PcyCohomologyTransfer | None = None,
                              target: PcyCohomologyTransfer | None = None) -> PcyInducedMorphism:
    """``H(F) = P_B o F o I_A``."""
    source = source or pcy_cohomology_transfers(F.source, MA)
    target = target or pcy_cohomology_transfers(F.target, MB)
    HF = compose_pcy(target.P, compose_pcy(F, source.I))
    return PcyInducedMorphism(HF, source, target)


@dataclass
class PcyQuasiInverse:
    G: MultiCollection             # (B, MB) -> (A, MA)
    HF: MultiCollection
    HG: MultiCollection
    I_B: MultiCollection           # normalized so that P_B o I_B = id
    P_A: MultiCollection           # normalized so that P_A o I_A = id
    induced: PcyInducedMorphism


def pcy_quasi_inverse(F: MultiCollection, MA: MultiCollection, MB: MultiCollection) -> PcyQuasiInverse:
    """Quasi-inverse ``G = I_A o K o P_B`` with ``K`` the inverse of ``H(F)``.

    ``H(G)`` uses ``P_A`` and ``I_B`` corrected by the inverses of ``P o I`` on
    each side, which makes both composites with ``H(F)`` identities.
    """
    ind = pcy_induced_on_cohomology(F, MA, MB)
    sA, sB = ind.source, ind.target
    K = invert_pcy(ind.morphism)
    G = compose_pcy(sA.I, compose_pcy(K, sB.P))
    P_A = compose_pcy(invert_pcy(compose_pcy(sA.P, sA.I)), sA.P)
    I_B = compose_pcy(sB.I, invert_pcy(compose_pcy(sB.P, sB.I)))
    HG = compose_pcy(P_A, compose_pcy(G, I_B))
    return PcyQuasiInverse(G, ind.morphism, HG, I_B, P_A, ind)


def family_diagrams(M, N, F, G, H) -> list:
    """Every diagram family used above, enumerated for the given fillings.

    Returns ``(name, diagrams, fillings)`` triples; ``M``, ``N`` are
    structures and ``F``, ``G``, ``H`` morphisms on one quiver.
    """
    lmax, nmax = _bounds(M, N, F, G, H)
    ix = {k: _Index(v.nonzero_keys()) for k, v in {"M": M, "N": N, "F": F, "G": G, "H": H}.items()}
    return [
        ("necklace", necklace_diagrams(ix["M"].keys, ix["N"].keys, lmax, nmax), {"M": M, "N": N}),
        ("multinec", multinec_diagrams({"A": ix["M"], "F": ix["F"]}, lmax, nmax), {"A": M, "F": F}),
        ("pre", pre_diagrams({"B": ix["N"], "F": ix["F"]}, lmax, nmax), {"B": N, "F": F}),
        ("lower", pre_diagrams({"B": ix["N"], "F": ix["F"], "H": ix["H"]}, lmax, nmax, feeders=("F", "H"),
                               quota={"H": (1, 1)}, precedence=("B", "H", "F")), {"B": N, "F": F, "H": H}),
        ("upper", multinec_diagrams({"A": ix["M"], "F": ix["F"], "H": ix["H"]}, lmax, nmax, ring=("F", "H"),
                                    quota={"H": (1, 1)}, precedence=("H", "F", "A")), {"A": M, "F": F, "H": H}),
        ("composition", composition_diagrams({"G": ix["G"], "F": ix["F"]}, lmax, nmax), {"G": G, "F": F}),
    ]
