"""Glued disc diagrams: boundary types, enumeration and evaluation.

A diagram is a planar tree of discs.  Each disc carries a component of some
``MultiCollection`` at a key; an internal arrow glues one output of a disc to
one input slot of another.  Boundaries are merged in the geometric cyclic
order (groups in decreasing index, objects within a group left to right),
where gluing is plain substitution of the slot by the opened boundary of the
other disc.

Evaluation follows the data flow: discs are applied once all their inputs
exist, every internal arrow carries ``s^{d+1}`` turning a ``B[-d]`` output into
a ``B[1]`` input, and all signs are Koszul signs of the elementary moves.  The
result is then multiplied by the sign reordering the operations from the
formal order of the defining formula into the order of application.
"""

from __future__ import annotations

from dataclasses import dataclass
from itertools import product
from typing import Mapping, Sequence

from .graded import add_into, koszul_sign
from .multi import MultiCollection, group_offsets, input_pairs, length, output_pairs, size


class DiagramError(ValueError):
    pass


@dataclass(frozen=True)
class Edge:
    """Output ``out`` of disc ``src`` feeds slot ``pos`` of group ``group`` of disc ``dst``."""

    src: int
    out: int
    dst: int
    group: int
    pos: int


@dataclass(frozen=True)
class DiagramDatum:
    roles: tuple          # role name per disc
    keys: tuple           # key per disc
    edges: tuple          # Edge, ...
    root: int             # disc carrying the distinguished (last) boundary output
    bold: int             # its output index
    order: tuple          # formal order of the discs
    boundary: tuple = ()
    inputs: tuple = ()    # boundary input position -> (disc, flat slot)
    outputs: tuple = ()   # boundary output position -> (disc, output)

    @property
    def N(self) -> int:
        return size(self.boundary)

    @property
    def L(self) -> int:
        return length(self.boundary)


# --- boundary ---------------------------------------------------------------------

def _disc_cycle(j: int, key: tuple) -> list:
    n = len(key)
    seq = []
    for i in range(n - 1, -1, -1):
        g = key[i]
        for k, obj in enumerate(g):
            seq.append(("o", obj))
            if k < len(g) - 1:
                seq.append(("s", j, i, k))
        seq.append(("t", j, (i - 1) % n))
    return seq


def boundary_of(keys: Sequence[tuple], edges: Sequence[Edge], root: int, bold: int):
    """Boundary key, input map and output map of a glued tree of discs."""
    cycles = {j: _disc_cycle(j, k) for j, k in enumerate(keys)}
    owner = {j: j for j in range(len(keys))}

    def find(j):
        while owner[j] != j:
            j = owner[j]
        return j

    for e in edges:
        ks, kd = keys[e.src], keys[e.dst]
        if output_pairs(ks)[e.out] != (kd[e.group][e.pos], kd[e.group][e.pos + 1]):
            raise DiagramError(f"objects do not match along {e}")
        a, b = find(e.dst), find(e.src)
        if a == b:
            raise DiagramError("gluing creates a cycle")
        host, guest = cycles[a], cycles.pop(b)
        t = guest.index(("t", e.src, e.out))
        opened = guest[t + 1:] + guest[:t]
        s = host.index(("s", e.dst, e.group, e.pos))
        if host[s - 1] != opened[0] or host[s + 1] != opened[-1]:
            raise DiagramError("junction objects differ")
        cycles[a] = host[:s] + opened[1:-1] + host[s + 1:]
        owner[b] = a
    if len(cycles) != 1:
        raise DiagramError("diagram is not connected")
    (seq,) = cycles.values()
    t = seq.index(("t", root, bold))
    seq = seq[t + 1:] + seq[:t + 1]
    groups, outs, cur = [], [], []
    for item in seq:
        if item[0] == "t":
            groups.append(cur)
            outs.append((item[1], item[2]))
            cur = []
        else:
            cur.append(item)
    n = len(groups)
    # geometric group k has type index n-1-k; the output after it has type index n-2-k
    tgroups = [None] * n
    touts = [None] * n
    for k in range(n):
        tgroups[n - 1 - k] = groups[k]
        touts[(n - 2 - k) % n] = outs[k]
    key, inputs = [], []
    offs = {j: group_offsets(k) for j, k in enumerate(keys)}
    for g in tgroups:
        key.append(tuple(it[1] for it in g if it[0] == "o"))
        for it in g:
            if it[0] == "s":
                _, j, gi, pos = it
                inputs.append((j, offs[j][gi] + pos))
    return tuple(key), tuple(inputs), tuple(touts)


def make_datum(roles, keys, edges, root, bold, order=None) -> DiagramDatum:
    keys = tuple(tuple(tuple(g) for g in k) for k in keys)
    edges = tuple(edges)
    bkey, ins, outs = boundary_of(keys, edges, root, bold)
    order = tuple(range(len(keys))) if order is None else tuple(order)
    return DiagramDatum(tuple(roles), keys, edges, root, bold, order, bkey, ins, outs)


# --- sign conventions ---------------------------------------------------------------

def _time_order(D: DiagramDatum) -> list[int]:
    preds = {j: set() for j in range(len(D.keys))}
    for e in D.edges:
        preds[e.dst].add(e.src)
    done, seq = set(), []
    rank = {j: r for r, j in enumerate(D.order)}
    while len(seq) < len(D.keys):
        ready = [j for j in preds if j not in done and preds[j] <= done]
        j = min(ready, key=lambda x: rank[x])
        seq.append(j)
        done.add(j)
    return seq


def _internal_outputs(D: DiagramDatum, j: int) -> list[int]:
    return sorted(e.out for e in D.edges if e.src == j)


def _rootward_edges(D: DiagramDatum) -> dict[int, Edge]:
    adj = {j: [] for j in range(len(D.keys))}
    for e in D.edges:
        adj[e.src].append((e.dst, e))
        adj[e.dst].append((e.src, e))
    seen, stack, up = {D.root}, [D.root], {}
    while stack:
        a = stack.pop()
        for b, e in adj[a]:
            if b not in seen:
                seen.add(b)
                up[b] = e
                stack.append(b)
    return up


def edge_owner(D: DiagramDatum, kinds: Sequence[str]) -> dict:
    """The disc whose operation carries the shift on each internal arrow.

    A morphism-shaped end owns it when there is exactly one; between two
    morphisms the end farther from the root owns it; between two structures
    the source does.
    """
    up = _rootward_edges(D)
    owner = {}
    for e in D.edges:
        ms, md = kinds[e.src] == "morphism", kinds[e.dst] == "morphism"
        if ms != md:
            owner[e] = e.src if ms else e.dst
        elif ms:
            owner[e] = e.src if up.get(e.src) == e else e.dst
        else:
            owner[e] = e.src
    return owner


def formal_ops(D: DiagramDatum, kinds: Sequence[str]) -> list:
    """Operations in formal order: each disc with the shifts it owns (outgoing before, incoming after)."""
    owner = edge_owner(D, kinds)
    formal = []
    for j in D.order:
        mine = [e for e in D.edges if owner[e] == j]
        formal.extend(("S", e.src, e.out) for e in sorted((e for e in mine if e.src == j), key=lambda e: -e.out))
        formal.append(("D", j))
        formal.extend(("S", e.src, e.out) for e in sorted((e for e in mine if e.dst == j), key=lambda e: (e.group, e.pos)))
    return formal


def formal_sign(D: DiagramDatum, weights: Sequence[int], d: int, kinds: Sequence[str]) -> int:
    """Sign carrying the formal order of operations to the reversed order of application."""
    ops = []
    for j in _time_order(D):
        ops.append(("D", j))
        ops.extend(("S", j, o) for o in _internal_outputs(D, j))
    rev = ops[::-1]
    deg = {op: (weights[op[1]] + d + 1) if op[0] == "D" else (d + 1) for op in ops}
    formal = formal_ops(D, kinds)
    pos = {op: k for k, op in enumerate(rev)}
    return koszul_sign([deg[op] for op in formal], [pos[op] for op in formal])


# --- evaluation -----------------------------------------------------------------------

def evaluate(D: DiagramDatum, fillings: Mapping[str, MultiCollection], d: int) -> dict:
    """Component of the diagram at its boundary: ``{input word: {output word: c}}``."""
    colls = [fillings[r] for r in D.roles]
    comps = []
    for j, key in enumerate(D.keys):
        c = colls[j].comps.get(key)
        if not c:
            return {}
        comps.append(c)
    weights = [c.weight for c in colls]
    eps = formal_sign(D, weights, d, [c.role for c in colls])
    time = _time_order(D)
    nin = [sum(len(g) - 1 for g in k) for k in D.keys]
    # where each disc input comes from
    feed = {}
    for e in D.edges:
        feed[(e.dst, group_offsets(D.keys[e.dst])[e.group] + e.pos)] = (e.src, e.out)
    ext_of = {}
    for p, (j, s) in enumerate(D.inputs):
        ext_of[(j, s)] = p
    in_deg = [colls[j].in_degrees(k) for j, k in enumerate(D.keys)]
    out_deg = [colls[j].out_degrees(k) for j, k in enumerate(D.keys)]
    internal = {(e.src, e.out) for e in D.edges}
    result: dict = {}

    def rec(t, ext, vals, coeff):
        if t == len(time):
            word = tuple(ext[p] for p in range(len(D.inputs)))
            outw = tuple(vals[jo] for jo in D.outputs)
            s = _replay(D, time, word, vals, in_deg, out_deg, internal, weights, d)
            add_into(result, word, {outw: s * eps * coeff})
            return
        j = time[t]
        for w, row in comps[j].items():
            new_ext = dict(ext)
            ok = True
            for s_ in range(nin[j]):
                src = feed.get((j, s_))
                if src is not None:
                    if vals[src] != w[s_]:
                        ok = False
                        break
                else:
                    new_ext[ext_of[(j, s_)]] = w[s_]
            if not ok:
                continue
            for ow, c in row.items():
                nv = dict(vals)
                for o, b in enumerate(ow):
                    nv[(j, o)] = b
                rec(t + 1, new_ext, nv, coeff * c)

    rec(0, {}, {}, 1)
    return result


def _replay(D, time, word, vals, in_deg, out_deg, internal, weights, d) -> int:
    """Koszul sign of applying the discs in ``time`` order to the boundary word."""
    # tokens: ("e", p) boundary input, ("v", j, o) output of disc j
    toks = [("e", p) for p in range(len(word))]
    deg = {("e", p): in_deg[D.inputs[p][0]][D.inputs[p][1]][word[p]] for p in range(len(word))}
    feed = {}
    for e in D.edges:
        feed[(e.dst, group_offsets(D.keys[e.dst])[e.group] + e.pos)] = ("v", e.src, e.out)
    ext_of = {(j, s): ("e", p) for p, (j, s) in enumerate(D.inputs)}
    sign = 1
    for j in time:
        k = D.keys[j]
        need = [feed.get((j, s)) or ext_of[(j, s)] for s in range(sum(len(g) - 1 for g in k))]
        needset = set(need)
        others = [t for t in toks if t not in needset]
        new = others + need
        pos = {t: i for i, t in enumerate(new)}
        sign *= koszul_sign([deg[t] for t in toks], [pos[t] for t in toks])
        left = sum(deg[t] for t in others)
        if (weights[j] + d + 1) % 2 and left % 2:
            sign = -sign
        outs = [("v", j, o) for o in range(len(k))]
        for o, t in enumerate(outs):
            deg[t] = out_deg[j][o][vals[(j, o)]]
        toks = others + outs
        for o in range(len(k)):
            if (j, o) in internal:
                t = ("v", j, o)
                i = toks.index(t)
                if (d + 1) % 2 and sum(deg[x] for x in toks[:i]) % 2:
                    sign = -sign
                deg[t] -= d + 1
    final = [("v",) + jo for jo in D.outputs]
    pos = {t: i for i, t in enumerate(final)}
    sign *= koszul_sign([deg[t] for t in toks], [pos[t] for t in toks])
    return sign


def accumulate(target: dict, contrib: Mapping, scale=1) -> None:
    for w, row in contrib.items():
        add_into(target, w, row, scale)
