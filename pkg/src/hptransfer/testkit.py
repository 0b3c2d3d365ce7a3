"""Random generators, the element-wise diagram oracle and the identity suites."""

from __future__ import annotations

import random
from dataclasses import dataclass, field, replace
from fractions import Fraction
from itertools import product

from .exactla import QQ, Field
from .graded import DgQuiver, GradedMap, GradedSpace, add_into


@dataclass(frozen=True)
class GenParams:
    object_count: int = 2
    max_dim: int = 2
    min_dim: int = 0
    degree_window: tuple[int, int] = (-1, 1)
    density: Fraction = Fraction(1, 2)
    seed: int = 0
    field: Field = QQ
    coeff_range: int = 3


def _rng(p: GenParams, salt: str = "") -> random.Random:
    return random.Random(f"{p.seed}:{salt}")


def _coeff(rng: random.Random, p: GenParams):
    while True:
        c = rng.randint(-p.coeff_range, p.coeff_range)
        v = p.field(c)
        if v != 0:
            return v


def _hit(rng: random.Random, density) -> bool:
    density = Fraction(density)
    if density <= 0:
        return False
    return rng.randrange(density.denominator) < density.numerator


def random_graded_quiver(p: GenParams) -> tuple[tuple, dict]:
    rng = _rng(p, "spaces")
    objects = tuple(f"x{k}" for k in range(p.object_count))
    lo, hi = p.degree_window
    hom = {}
    for x in objects:
        for y in objects:
            n = rng.randint(min(p.min_dim, p.max_dim), p.max_dim) if p.max_dim > 0 else 0
            degs = sorted(rng.randint(lo, hi) for _ in range(n))
            hom[(x, y)] = GradedSpace(tuple((f"{x}{y}_{k}", g) for k, g in enumerate(degs)))
    return objects, hom


def random_dg_quiver(p: GenParams, square_zero: bool = True) -> DgQuiver:
    """Random dg quiver.

    With ``square_zero`` the differential is a disjoint matching of basis
    vectors in consecutive degrees conjugated by a random unitriangular
    degree-preserving change of basis, so ``d o d = 0`` holds by construction.
    Without it, ``d`` is an arbitrary strictly upper-triangular degree-one map.
    """
    objects, hom = random_graded_quiver(p)
    rng = _rng(p, "differential")
    F = p.field
    diffs = {}
    for xy, V in hom.items():
        n = V.dim
        degs = V.degrees
        if not square_zero:
            ent = {}
            for k in range(n):
                for j in range(k + 1, n):
                    if degs[j] == degs[k] + 1 and _hit(rng, p.density):
                        ent.setdefault(k, {})[j] = _coeff(rng, p)
            diffs[xy] = GradedMap.from_dict(V, V, 1, ent)
            continue
        # matching: pair some basis vectors of degree n with some of degree n+1
        used = set()
        pairs = []
        for k in range(n):
            if k in used or not _hit(rng, p.density):
                continue
            targets = [j for j in range(n) if degs[j] == degs[k] + 1 and j not in used and j != k]
            if targets:
                j = rng.choice(targets)
                used.update((k, j))
                pairs.append((k, j))
        # unitriangular g within each degree (upper triangular in basis order)
        g = {k: {k: F.one} for k in range(n)}
        for k in range(n):
            for j in range(k):
                if degs[j] == degs[k] and _hit(rng, p.density):
                    g[k][j] = _coeff(rng, p)
        G = GradedMap.from_dict(V, V, 0, g)
        ginv = _unitriangular_inverse(G, F)
        D0 = GradedMap.from_dict(V, V, 1, {k: {j: F.one} for k, j in pairs})
        diffs[xy] = G @ D0 @ ginv
    return DgQuiver(objects, hom, diffs, F)


def _unitriangular_inverse(G: GradedMap, F: Field) -> GradedMap:
    # G = I + N with N strictly upper triangular; inverse = sum (-N)^k
    n = G.source.dim
    ident = GradedMap.identity(G.source, F.one)
    N = G - ident
    term = ident
    acc = ident
    for _ in range(n):
        term = (term @ N).scale(F(-1))
        if term.is_zero():
            break
        acc = acc + term
    return acc


def random_hom_collection(A: DgQuiver, B: DgQuiver, obj_map, degree: int, nmax: int, p: GenParams,
                          salt: str = "hom", min_length: int = 2):
    """Degree-homogeneous random components at every tuple of length ``min_length..nmax``."""
    from .ainfty import HomCollection, _unknowns, tuples_of
    rng = _rng(p, salt)
    C = HomCollection(A, B, dict(obj_map), degree, nmax)
    for n in range(min_length, nmax + 1):
        for xs in tuples_of(A.objects, n):
            out = (obj_map[xs[0]], obj_map[xs[-1]])
            data = {}
            for w, o in _unknowns(A, B, xs, out, degree):
                if _hit(rng, p.density):
                    data.setdefault(w, {})[o] = _coeff(rng, p)
            C.set_component(xs, data)
    return C


def matrix_dg_category(p: GenParams, points: int = 4):
    """Dg category of upper-triangular matrices with an inner differential.

    Points ``0..points-1`` carry random degrees and are dealt to objects; the
    hom space ``hom(x, y)`` is spanned by ``E_ij`` with ``i`` in ``x``, ``j`` in
    ``y`` and ``i <= j``, of degree ``g_j - g_i``; composition is matrix
    multiplication and ``d = [D, -]`` for a square-zero ``D`` inside objects.
    Returns ``(quiver, product)`` in the form taken by ``dg_category_structure``.
    """
    rng = _rng(p, "matrix")
    F = p.field
    objects = tuple(f"x{k}" for k in range(p.object_count))
    lo, hi = p.degree_window
    g = [rng.randint(lo, hi) for _ in range(points)]
    owner = [objects[rng.randrange(len(objects))] for _ in range(points)]
    # D: within-object entries i<j with g_j = g_i + 1, no composable pair
    D = {}
    heads, tails = set(), set()
    for i in range(points):
        for j in range(i + 1, points):
            if owner[i] == owner[j] and g[j] == g[i] + 1 and i not in tails and j not in heads \
                    and i not in heads and j not in tails and _hit(rng, p.density):
                D[(i, j)] = _coeff(rng, p)
                heads.add(i)
                tails.add(j)
    hom, index = {}, {}
    for x in objects:
        for y in objects:
            basis = [(i, j) for i in range(points) for j in range(i, points) if owner[i] == x and owner[j] == y]
            hom[(x, y)] = GradedSpace(tuple((f"E{i}{j}", g[j] - g[i]) for i, j in basis))
            index[(x, y)] = {e: k for k, e in enumerate(basis)}
    inv = {xy: {k: e for e, k in idx.items()} for xy, idx in index.items()}
    diffs = {}
    for xy, V in hom.items():
        ent: dict = {}
        for k, (i, j) in inv[xy].items():
            deg = g[j] - g[i]
            col: dict = {}
            for (a, b), c in D.items():
                if b == i:  # D E_ij = c E_aj
                    col[index[xy][(a, j)]] = col.get(index[xy][(a, j)], 0) + c
                if a == j:  # E_ij D = c E_ib
                    s = -1 if deg % 2 else 1
                    col[index[xy][(i, b)]] = col.get(index[xy][(i, b)], 0) - s * c
            col = {t: F(v) for t, v in col.items() if v != 0}
            if col:
                ent[k] = col
        diffs[xy] = GradedMap.from_dict(V, V, 1, ent)
    product = {}
    for x in objects:
        for y in objects:
            for z in objects:
                table = {}
                for a, (i, j) in inv[(x, y)].items():
                    for b, (j2, k) in inv[(y, z)].items():
                        if j == j2:
                            table[(a, b)] = {index[(x, z)][(i, k)]: F.one}
                if table:
                    product[(x, y, z)] = table
    return DgQuiver(objects, hom, diffs, F), product


def random_multi_collection(A: DgQuiver, B: DgQuiver, obj_map, d: int, role: str, lmax: int, nmax: int,
                            p: GenParams, salt: str = "multi", min_size: int = 2, weight: int | None = None,
                            invariant: bool = True):
    """Random homogeneous element of ``Multi_d(A, B)``, averaged over rotations when ``invariant``."""
    from .multi import MultiCollection, all_keys, size, symmetrize
    from .precy import cells
    rng = _rng(p, salt)
    C = MultiCollection(A, B, dict(obj_map), d, role, lmax, nmax, {}, weight)
    for key in all_keys(A.objects, lmax, nmax):
        if size(key) < min_size:
            continue
        data = {}
        for w, o in cells(C, key):
            if _hit(rng, p.density):
                data.setdefault(w, {})[o] = _coeff(rng, p)
        C.set_component(key, data)
    return symmetrize(C) if invariant else C


def random_collection(kind: str, role: str, p: GenParams, nmax: int, lmax: int = 1, *, d: int = 0,
                      source: DgQuiver | None = None, target: DgQuiver | None = None, obj_map=None,
                      salt: str = "collection"):
    """Random ``Hom`` or ``Multi`` collection of the given role on random (or given) quivers."""
    A = source if source is not None else random_dg_quiver(p)
    if target is None:
        target = A if role == "structure" else random_dg_quiver(replace(p, seed=p.seed + 1_000_003))
    B = target
    if obj_map is None:
        obj_map = {x: B.objects[k % len(B.objects)] for k, x in enumerate(A.objects)} if B.objects else {}
    if kind == "hom":
        degree = 1 if role == "structure" else 0
        return random_hom_collection(A, B, obj_map, degree, nmax, p, salt=salt)
    if kind == "multi":
        return random_multi_collection(A, B, obj_map, d, role, lmax, nmax, p, salt=salt)
    raise ValueError(f"unknown collection kind {kind!r}")


# --- element-wise diagram oracle -------------------------------------------------------------

def _bubble_sign(degrees: list[int], perm_target: list[int]) -> int:
    """Sign of sorting a sequence into ``perm_target`` order by adjacent swaps."""
    seq = list(zip(perm_target, degrees))
    sign = 1
    for i in range(len(seq)):
        for j in range(len(seq) - 1 - i):
            if seq[j][0] > seq[j + 1][0]:
                if seq[j][1] % 2 and seq[j + 1][1] % 2:
                    sign = -sign
                seq[j], seq[j + 1] = seq[j + 1], seq[j]
    return sign


def _move_to_end(tape: list, item) -> int:
    """Carry ``item`` to the right end of ``tape`` one transposition at a time."""
    sign = 1
    i = tape.index(item)
    while i < len(tape) - 1:
        if item[1] % 2 and tape[i + 1][1] % 2:
            sign = -sign
        tape[i], tape[i + 1] = tape[i + 1], tape[i]
        i += 1
    return sign


def reference_eval(datum, fillings, d: int | None = None) -> dict:
    """Slow evaluation of a glued diagram, one basis input at a time.

    Elements travel along the arrows and every step past another element is
    an explicit transposition; discs fire as soon as all their inputs are
    present, latest formal position first among the ready ones.
    """
    from .diagrams import DiagramError
    from .multi import group_offsets, output_pairs
    colls = [fillings[r] for r in datum.roles]
    if d is None:
        d = colls[0].d
    keys = datum.keys
    nslots = [sum(len(g) - 1 for g in k) for k in keys]
    feed = {}
    for e in datum.edges:
        kd = keys[e.dst]
        if output_pairs(keys[e.src])[e.out] != (kd[e.group][e.pos], kd[e.group][e.pos + 1]):
            raise DiagramError(f"arrow {e} joins different objects")
        feed[(e.dst, group_offsets(kd)[e.group] + e.pos)] = (e.src, e.out)
    external = {js: p for p, js in enumerate(datum.inputs)}
    for j in range(len(keys)):
        for s in range(nslots[j]):
            if ((j, s) in feed) == ((j, s) in external):
                raise DiagramError(f"slot {s} of disc {j} is not fed exactly once")
    # firing order: a topological order preferring the latest formal position
    rank = {j: r for r, j in enumerate(datum.order)}
    waiting = {j: {feed[(j, s)][0] for s in range(nslots[j]) if (j, s) in feed} for j in range(len(keys))}
    fired: list[int] = []
    while len(fired) < len(keys):
        ready = [j for j in waiting if j not in fired and waiting[j] <= set(fired)]
        fired.append(max(ready, key=lambda j: rank[j]))
    internal = {(e.src, e.out) for e in datum.edges}

    # sign of moving the formal operations into the reversed firing order
    kinds = [c.role for c in colls]
    owner = _arrow_owners(datum, kinds)
    op_deg = {}
    applied = []
    for j in fired:
        applied.append(("D", j))
        op_deg[("D", j)] = colls[j].weight + d + 1
        for o in sorted(o for (a, o) in internal if a == j):
            applied.append(("S", j, o))
            op_deg[("S", j, o)] = d + 1
    target = {op: k for k, op in enumerate(reversed(applied))}
    formal = []
    for j in datum.order:
        outgoing = sorted((e for e in datum.edges if owner[e] == j and e.src == j), key=lambda e: e.out,
                          reverse=True)
        incoming = sorted((e for e in datum.edges if owner[e] == j and e.dst == j), key=lambda e: (e.group, e.pos))
        formal += [("S", e.src, e.out) for e in outgoing] + [("D", j)] + [("S", e.src, e.out) for e in incoming]
    eps = _bubble_sign([op_deg[op] for op in formal], [target[op] for op in formal])

    in_deg = [colls[j].in_degrees(k) for j, k in enumerate(keys)]
    out_deg = [colls[j].out_degrees(k) for j, k in enumerate(keys)]
    comps = [colls[j].comps.get(k, {}) for j, k in enumerate(keys)]
    dims = [len(in_deg[j][s]) for (j, s) in datum.inputs]
    result: dict = {}
    for word in product(*[range(n) for n in dims]):
        # tape entries: (name, degree, basis index)
        start = [(("in", p), in_deg[j][s][word[p]], word[p]) for p, (j, s) in enumerate(datum.inputs)]
        states = [(start, 1)]
        for j in fired:
            nxt = []
            for tape, c in states:
                tape = list(tape)
                where = {t[0]: t for t in tape}
                need = [where[("out",) + feed[(j, s)]] if (j, s) in feed else where[("in", external[(j, s)])]
                        for s in range(nslots[j])]
                sign = 1
                for t in need:
                    sign *= _move_to_end(tape, t)
                rest = tape[:len(tape) - len(need)]
                if (colls[j].weight + d + 1) % 2 and sum(t[1] for t in rest) % 2:
                    sign = -sign
                row = comps[j].get(tuple(t[2] for t in need), {})
                for ow, v in row.items():
                    s2 = sign
                    new = list(rest)
                    for o, b in enumerate(ow):
                        deg = out_deg[j][o][b]
                        if (j, o) in internal:
                            if (d + 1) % 2 and sum(t[1] for t in new) % 2:
                                s2 = -s2
                            deg -= d + 1
                        new.append((("out", j, o), deg, b))
                    nxt.append((new, c * s2 * v))
            states = nxt
        for tape, c in states:
            goal = {("out",) + jo: k for k, jo in enumerate(datum.outputs)}
            s = _bubble_sign([t[1] for t in tape], [goal[t[0]] for t in tape])
            outw = tuple(t[2] for t in sorted(tape, key=lambda t: goal[t[0]]))
            add_into(result, word, {outw: eps * s * c})
    return result


def _arrow_owners(datum, kinds) -> dict:
    # which end of each internal arrow carries the degree shift
    parent = {}
    frontier = [datum.root]
    seen = {datum.root}
    while frontier:
        a = frontier.pop()
        for e in datum.edges:
            for u, v in ((e.src, e.dst), (e.dst, e.src)):
                if v == a and u not in seen:
                    seen.add(u)
                    parent[u] = e
                    frontier.append(u)
    owner = {}
    for e in datum.edges:
        ms, md = kinds[e.src] == "morphism", kinds[e.dst] == "morphism"
        if ms and md:
            owner[e] = e.src if parent.get(e.src) == e else e.dst
        elif ms or md:
            owner[e] = e.src if ms else e.dst
        else:
            owner[e] = e.src
    return owner


def oracle_mismatches(seeds: int = 20, lmax: int = 3, nmax: int = 4, d_values=(0, 1), params: GenParams | None = None):
    """Diagrams on which the fast evaluator and ``reference_eval`` disagree, with the count compared."""
    from .diagrams import evaluate
    from . import precy
    base = params or GenParams(object_count=2, max_dim=2, density=Fraction(2, 3))
    bad, count = [], 0
    for seed in range(seeds):
        p = replace(base, seed=seed)
        d = d_values[seed % len(d_values)]
        A = random_dg_quiver(p)
        ident = {x: x for x in A.objects}
        M = random_multi_collection(A, A, ident, d, "structure", lmax, nmax, p, salt="M", min_size=1)
        N = random_multi_collection(A, A, ident, d, "structure", lmax, nmax, p, salt="N", min_size=1)
        F = random_multi_collection(A, A, ident, d, "morphism", lmax, nmax, p, salt="F", min_size=1)
        G = random_multi_collection(A, A, ident, d, "morphism", lmax, nmax, p, salt="G", min_size=1)
        H = random_multi_collection(A, A, ident, d, "morphism", lmax, nmax, p, salt="H", min_size=1, weight=1)
        for name, diagrams, fill in precy.family_diagrams(M, N, F, G, H):
            for D in diagrams:
                count += 1
                fast = evaluate(D, fill, d)
                slow = reference_eval(D, fill, d)
                diff = {w: dict(r) for w, r in fast.items()}
                for w, row in slow.items():
                    add_into(diff, w, row, -1)
                if diff:
                    bad.append((seed, name, D.boundary, min(diff)))
    return bad, count


# --- classical arity-three transfer -----------------------------------------------------------

def tree_formula_m3(C, product, xs: tuple, word: tuple) -> dict:
    """``p m2 (h m2 (x) id - id (x) h m2) i^{(x)3}`` on one basis word of ``H``, read in shifted degrees.

    ``product`` is the composition table of the dg category (``(x, y, z) -> {(a, b): {c: coeff}}``);
    the value is the unshifted formula times the suspension sign ``(-1)^{|b|}`` of the middle input.
    """
    x, y, z, w = xs
    H = C.reduced

    def mul(a, b, u, v, c):
        out: dict = {}
        table = product.get((a, b, c), {})
        for i, ci in u.items():
            for j, cj in v.items():
                for k, ck in table.get((i, j), {}).items():
                    out[k] = out.get(k, 0) + ci * cj * ck
        return {k: v for k, v in out.items() if v != 0}

    degs = [H.hom[(xs[k], xs[k + 1])].degrees[word[k]] for k in range(3)]
    ia = C.include[(x, y)].apply_vec({word[0]: 1})
    ib = C.include[(y, z)].apply_vec({word[1]: 1})
    ic = C.include[(z, w)].apply_vec({word[2]: 1})
    left = mul(x, z, C.homotopy[(x, z)].apply_vec(mul(x, y, ia, ib, z)), ic, w)
    right = mul(x, y, ia, C.homotopy[(y, w)].apply_vec(mul(y, z, ib, ic, w)), w)
    s = -1 if degs[0] % 2 else 1
    tot = dict(left)
    for k, v in right.items():
        tot[k] = tot.get(k, 0) - s * v
    val = C.project[(x, w)].apply_vec({k: v for k, v in tot.items() if v != 0})
    sign = -1 if degs[1] % 2 else 1
    return {k: sign * v for k, v in val.items() if v != 0}


# --- identity suites ---------------------------------------------------------------------------

@dataclass
class SuiteReport:
    checked: int = 0
    failures: list = field(default_factory=list)   # (seed, identity, index, basis input)

    @property
    def ok(self) -> bool:
        return not self.failures


def _first_difference(lhs, rhs):
    diff = lhs - rhs
    keys = sorted(diff.nonzero_keys(), key=lambda k: (len(k), repr(k)))
    if not keys:
        return None
    return keys[0], min(diff.comps[keys[0]])


def gauge_ainf(A: DgQuiver, nmax: int, p: GenParams, salt: str = "gauge"):
    """Invertible morphism ``A -> A``: the identity plus random components of arity at least two."""
    from .ainfty import identity_morphism
    ident = {x: x for x in A.objects}
    return identity_morphism(A, nmax) + random_hom_collection(A, A, ident, 0, nmax, p, salt=salt, min_length=3)


def gauge_pcy(A: DgQuiver, d: int, lmax: int, nmax: int, p: GenParams, salt: str = "gauge"):
    """Invariant invertible pre-CY morphism ``A -> A``: the identity plus random higher components."""
    from .precy import identity_pcy
    ident = {x: x for x in A.objects}
    return identity_pcy(A, d, lmax, nmax) + random_multi_collection(A, A, ident, d, "morphism", lmax, nmax, p,
                                                                     salt=salt, min_size=3)


def random_ainf_structure(A: DgQuiver, nmax: int, p: GenParams, base=None, salt: str = "gauge"):
    """A-infinity structure with nonzero higher components: ``base`` (default ``d[1]``) moved by a gauge."""
    from .ainfty import differential_structure, transport_structure
    base = differential_structure(A, nmax) if base is None else base
    return transport_structure(gauge_ainf(A, nmax, p, salt), base)


def random_pcy_structure(A: DgQuiver, d: int, lmax: int, nmax: int, p: GenParams, base=None, salt: str = "gauge"):
    """Pre-CY structure with components of every length: ``base`` (default ``d[1]``) moved by a gauge."""
    from .ainfty import differential_structure
    from .precy import embed_ainf, transport_pcy
    base = embed_ainf(differential_structure(A, nmax), d, lmax, "structure") if base is None else base
    return transport_pcy(gauge_pcy(A, d, lmax, nmax, p, salt), base)


SUITE_PARAMS = GenParams(object_count=2, min_dim=2, max_dim=3, density=Fraction(3, 4))


def ainf_identity_checks(seed: int, nmax: int = 5, params: GenParams | None = None) -> list:
    from .ainfty import compose_M, compose_wrt, gerstenhaber_compose as gc
    p = replace(params or SUITE_PARAMS, seed=seed)
    A = random_dg_quiver(replace(p, seed=2 * seed))
    B = random_dg_quiver(replace(p, seed=2 * seed + 1))
    ident = {x: x for x in A.objects}
    mA = random_hom_collection(A, A, ident, 1, nmax, p, salt="mA")
    F = random_hom_collection(A, B, ident, 0, nmax, p, salt="F")
    mB = random_ainf_structure(B, nmax, p)
    mm = gc(mA, mA)
    X = gc(F, mA) - compose_M(mB, F)
    return [
        ("associativity-mA", gc(mA, mm), gc(mm, mA)),
        ("associativity-F-mB", gc(compose_M(mB, F), mA), compose_wrt(mB, gc(F, mA), F)),
        ("second-identity", gc(F, mm), gc(X, mA) + compose_wrt(mB, X, F)),
    ]


def pcy_identity_checks(seed: int, lmax: int = 3, nmax: int = 4, d: int | None = None,
                        params: GenParams | None = None) -> list:
    from . import precy as pc
    p = replace(params or SUITE_PARAMS, seed=seed)
    if d is None:
        d = (-1, 0, 1, 2)[seed % 4]
    A = random_dg_quiver(replace(p, seed=2 * seed))
    B = random_dg_quiver(replace(p, seed=2 * seed + 1))
    ident = {x: x for x in A.objects}
    MA = random_multi_collection(A, A, ident, d, "structure", lmax, nmax, p, salt="MA", min_size=2)
    F = random_multi_collection(A, B, ident, d, "morphism", lmax, nmax, p, salt="F", min_size=2)
    MB = random_pcy_structure(B, d, lmax, nmax, p)
    nec, mn, pre = pc.necklace_compose, pc.multinec_compose, pc.pre_compose
    MM = pc.mc_defect(MA)
    X = mn(F, MA) - pre(MB, F)
    return [
        ("associativity-MA", nec(MA, MM), nec(MM, MA)),
        ("associativity-F-MB", pc.upper_compose(pre(MB, F), MA, F), pc.lower_compose(MB, mn(F, MA), F)),
        ("associativity-F-MA", pc.upper_compose(mn(F, MA), MA, F), mn(F, MM)),
        ("second-identity-pcy", mn(F, MM), pc.upper_compose(X, MA, F) + pc.lower_compose(MB, X, F)),
    ]


def run_identity_suite(seeds: int, nmax_ainf: int = 5, lmax: int = 3, nmax: int = 4, pcy: bool = True,
                       ainf: bool = True, params: GenParams | None = None, first_seed: int = 0) -> SuiteReport:
    """Check the associativity identities and their corollaries on random inputs, exactly."""
    rep = SuiteReport()
    for seed in range(first_seed, first_seed + seeds):
        checks = []
        if ainf:
            checks += ainf_identity_checks(seed, nmax_ainf, params)
        if pcy:
            checks += pcy_identity_checks(seed, lmax, nmax, params=params)
        for name, lhs, rhs in checks:
            rep.checked += 1
            bad = _first_difference(lhs, rhs)
            if bad is not None:
                rep.failures.append((seed, name) + bad)
    return rep
