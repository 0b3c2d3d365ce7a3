"""Canonical text bundles holding quivers and collections.

A bundle is a JSON document with a schema tag, a field descriptor, named dg
quivers (hom bases with unshifted degrees and their differentials) and named
collections (components listed entry by entry with exact coefficients).
Serialization is canonical: equal bundles give identical text.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field as dc_field
from typing import Any

from .ainfty import AinfError, HomCollection
from .exactla import QQ, Field, field_from_descriptor
from .graded import DgQuiver, GradedError, GradedMap, GradedSpace
from .multi import MultiCollection, MultiError, invariance_defects

SCHEMA = "hptransfer-bundle/1"
TOOL = "hptransfer 0.1.0"


class BundleError(ValueError):
    """Malformed bundle; ``where`` names the offending field."""

    def __init__(self, where: str, message: str):
        super().__init__(f"{where}: {message}")
        self.where = where


@dataclass
class Bundle:
    field: Field = QQ
    quivers: dict[str, DgQuiver] = dc_field(default_factory=dict)
    collections: dict[str, HomCollection | MultiCollection] = dc_field(default_factory=dict)
    metadata: dict[str, Any] = dc_field(default_factory=dict)

    def quiver_name(self, Q: DgQuiver) -> str:
        for name, R in self.quivers.items():
            if R is Q:
                return name
        raise BundleError("quivers", "collection refers to a quiver missing from the bundle")

    def add_quiver(self, name: str, Q: DgQuiver) -> str:
        """Register ``Q`` under ``name`` unless it is already present; returns its name."""
        for n, R in self.quivers.items():
            if R is Q:
                return n
        self.quivers[name] = Q
        return name

    def add(self, name: str, C, source_name: str = "A", target_name: str = "B") -> None:
        src = self.add_quiver(source_name, C.source)
        if C.target is not C.source:
            self.add_quiver(target_name if target_name != src else target_name + "'", C.target)
        self.collections[name] = C

    def __eq__(self, other) -> bool:
        return isinstance(other, Bundle) and serialize(self) == serialize(other)


# --- writing ---------------------------------------------------------------------------------

def _quiver_doc(Q: DgQuiver, F: Field) -> dict:
    homs = []
    for x, y in Q.pairs():
        V = Q.hom[(x, y)]
        d = Q.differential[(x, y)]
        diff = sorted([[V.labels[k], V.labels[j], F.format(v)] for k, col in enumerate(d.cols) for j, v in col])
        homs.append({"source": x, "target": y, "basis": [[lab, deg] for lab, deg in V.basis], "differential": diff})
    return {"objects": list(Q.objects), "hom": homs}


def _collection_doc(b: Bundle, C) -> dict:
    F = b.field
    entries = []
    if isinstance(C, MultiCollection):
        doc = {"kind": "multi", "role": C.role, "d": C.d, "weight": C.weight, "max_length": C.lmax,
               "max_size": C.nmax}
        from .multi import input_pairs, output_pairs
        for key, comp in C.comps.items():
            ins = [C.source.hom[pr].labels for pr in input_pairs(key)]
            outs = [C.target.hom[(C.obj_map[a], C.obj_map[c])].labels for a, c in output_pairs(key)]
            for w, row in comp.items():
                for o, v in row.items():
                    entries.append({"index": [list(g) for g in key], "input": [ins[k][a] for k, a in enumerate(w)],
                                    "output": [outs[k][c] for k, c in enumerate(o)], "coeff": F.format(v)})
        entries.sort(key=lambda e: (sum(len(g) for g in e["index"]), len(e["index"]), e["index"], e["input"],
                                    e["output"]))
    else:
        doc = {"kind": "hom", "degree": C.degree, "max_size": C.nmax}
        for xs, comp in C.comps.items():
            ins = [C.source.hom[(xs[k], xs[k + 1])].labels for k in range(len(xs) - 1)]
            outl = C.out_space(xs).labels
            for w, row in comp.items():
                for o, v in row.items():
                    entries.append({"index": list(xs), "input": [ins[k][a] for k, a in enumerate(w)],
                                    "output": outl[o], "coeff": F.format(v)})
        entries.sort(key=lambda e: (len(e["index"]), e["index"], e["input"], e["output"]))
    doc.update({"source": b.quiver_name(C.source), "target": b.quiver_name(C.target),
                "object_map": [[x, C.obj_map[x]] for x in C.source.objects], "components": entries})
    return doc


def serialize(b: Bundle) -> str:
    doc = {
        "schema": SCHEMA,
        "field": b.field.name,
        "quivers": {name: _quiver_doc(Q, b.field) for name, Q in b.quivers.items()},
        "collections": {name: _collection_doc(b, C) for name, C in b.collections.items()},
        "metadata": dict(b.metadata, tool=b.metadata.get("tool", TOOL)),
    }
    return json.dumps(doc, indent=1, sort_keys=True, ensure_ascii=False) + "\n"


# --- reading ---------------------------------------------------------------------------------

def _need(doc, key, where, kind=None):
    if not isinstance(doc, dict) or key not in doc:
        raise BundleError(where, f"missing field {key!r}")
    val = doc[key]
    if kind is not None and not isinstance(val, kind):
        raise BundleError(f"{where}.{key}", f"expected {kind.__name__ if isinstance(kind, type) else kind}")
    return val


def _coeff(F: Field, text, where):
    if not isinstance(text, str):
        raise BundleError(where, "coefficients are written as strings")
    try:
        return F.parse(text)
    except (ValueError, ZeroDivisionError) as exc:
        raise BundleError(where, f"bad coefficient {text!r}") from exc


def _read_quiver(doc, F: Field, where) -> DgQuiver:
    objects = _need(doc, "objects", where, list)
    if any(not isinstance(x, str) for x in objects) or len(set(objects)) != len(objects):
        raise BundleError(f"{where}.objects", "objects must be distinct strings")
    hom, diffs = {}, {}
    for k, h in enumerate(_need(doc, "hom", where, list)):
        w = f"{where}.hom[{k}]"
        pair = (_need(h, "source", w, str), _need(h, "target", w, str))
        if pair[0] not in objects or pair[1] not in objects or pair in hom:
            raise BundleError(w, f"unknown or repeated pair {pair}")
        basis = _need(h, "basis", w, list)
        if any(not (isinstance(e, list) and len(e) == 2 and isinstance(e[0], str) and type(e[1]) is int)
               for e in basis):
            raise BundleError(f"{w}.basis", "entries are [label, integer degree]")
        try:
            V = GradedSpace(tuple((lab, deg) for lab, deg in basis))
        except GradedError as exc:
            raise BundleError(f"{w}.basis", str(exc)) from exc
        ent: dict = {}
        for i, e in enumerate(_need(h, "differential", w, list)):
            we = f"{w}.differential[{i}]"
            if not (isinstance(e, list) and len(e) == 3):
                raise BundleError(we, "entries are [source label, target label, coefficient]")
            try:
                a, c = V.index(e[0]), V.index(e[1])
            except GradedError as exc:
                raise BundleError(we, str(exc)) from exc
            if V.basis[c][1] != V.basis[a][1] + 1:
                raise BundleError(we, "differential is not of degree one")
            ent.setdefault(a, {})[c] = _coeff(F, e[2], we)
        hom[pair] = V
        diffs[pair] = GradedMap.from_dict(V, V, 1, ent)
    for x in objects:
        for y in objects:
            if (x, y) not in hom:
                raise BundleError(f"{where}.hom", f"missing hom space ({x}, {y})")
    return DgQuiver(tuple(objects), hom, diffs, F)


def _read_collection(doc, b: Bundle, where):
    kind = _need(doc, "kind", where, str)
    src = b.quivers.get(_need(doc, "source", where, str))
    tgt = b.quivers.get(_need(doc, "target", where, str))
    if src is None or tgt is None:
        raise BundleError(where, "unknown source or target quiver")
    pairs = _need(doc, "object_map", where, list)
    om = {}
    for e in pairs:
        if not (isinstance(e, list) and len(e) == 2) or e[0] not in src.objects or e[1] not in tgt.objects:
            raise BundleError(f"{where}.object_map", f"bad entry {e!r}")
        om[e[0]] = e[1]
    if set(om) != set(src.objects):
        raise BundleError(f"{where}.object_map", "every source object needs an image")
    nmax = _need(doc, "max_size", where, int)
    try:
        if kind == "hom":
            C = HomCollection(src, tgt, om, _need(doc, "degree", where, int), nmax)
        elif kind == "multi":
            role = _need(doc, "role", where, str)
            C = MultiCollection(src, tgt, om, _need(doc, "d", where, int), role, _need(doc, "max_length", where, int),
                                nmax, {}, _need(doc, "weight", where, int))
        else:
            raise BundleError(f"{where}.kind", f"unknown kind {kind!r}")
    except (AinfError, MultiError) as exc:
        raise BundleError(where, str(exc)) from exc
    data: dict = {}
    for i, e in enumerate(_need(doc, "components", where, list)):
        we = f"{where}.components[{i}]"
        idx = _need(e, "index", we, list)
        ins, out = _need(e, "input", we, list), _need(e, "output", we)
        try:
            if kind == "hom":
                key = tuple(idx)
                if len(key) < 2 or len(key) > nmax or any(x not in src.objects for x in key):
                    raise BundleError(f"{we}.index", f"bad index {idx!r}")
                spaces = [src.hom[(key[k], key[k + 1])] for k in range(len(key) - 1)]
                w = tuple(sp.index(lab) for sp, lab in zip(spaces, ins, strict=True))
                o = C.out_space(key).index(out)
                s = sum(d - 1 for sp, a in zip(spaces, w) for d in [sp.basis[a][1]])
                if C.out_space(key).basis[o][1] - 1 != s + C.degree:
                    raise BundleError(we, "entry is not degree-homogeneous")
            else:
                from .multi import input_pairs, key_ok, output_pairs
                key = tuple(tuple(g) for g in idx)
                if not key_ok(key) or any(x not in src.objects for g in key for x in g):
                    raise BundleError(f"{we}.index", f"bad index {idx!r}")
                C._check_key(key)
                spaces = [src.hom[pr] for pr in input_pairs(key)]
                osp = [tgt.hom[(om[a], om[c])] for a, c in output_pairs(key)]
                w = tuple(sp.index(lab) for sp, lab in zip(spaces, ins, strict=True))
                o = tuple(sp.index(lab) for sp, lab in zip(osp, out, strict=True))
                s = sum(sp.basis[a][1] - 1 for sp, a in zip(spaces, w))
                t = sum(sp.basis[c][1] + C.d for sp, c in zip(osp, o))
                if t - s != C.map_degree():
                    raise BundleError(we, "entry is not degree-homogeneous")
        except (GradedError, MultiError, ValueError, TypeError) as exc:
            if isinstance(exc, BundleError):
                raise
            raise BundleError(we, str(exc)) from exc
        row = data.setdefault(key, {}).setdefault(w, {})
        if o in row:
            raise BundleError(we, "repeated entry")
        row[o] = _coeff(b.field, _need(e, "coeff", we), f"{we}.coeff")
    for key, comp in data.items():
        C.set_component(key, comp)
    if kind == "multi":
        bad = invariance_defects(C)
        if bad:
            raise BundleError(f"{where}.components", f"not invariant under rotation at index {bad[0][0]!r}")
    return C


def parse(text: str) -> Bundle:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise BundleError(f"line {exc.lineno}", exc.msg) from exc
    if not isinstance(doc, dict):
        raise BundleError("document", "top level must be an object")
    if _need(doc, "schema", "document", str) != SCHEMA:
        raise BundleError("schema", f"unsupported schema {doc['schema']!r}")
    try:
        F = field_from_descriptor(_need(doc, "field", "document", str))
    except ValueError as exc:
        raise BundleError("field", str(exc)) from exc
    b = Bundle(F, {}, {}, dict(_need(doc, "metadata", "document", dict)))
    for name, q in _need(doc, "quivers", "document", dict).items():
        b.quivers[name] = _read_quiver(q, F, f"quivers.{name}")
    for name, c in _need(doc, "collections", "document", dict).items():
        b.collections[name] = _read_collection(c, b, f"collections.{name}")
    return b


def load(path: str) -> Bundle:
    with open(path, encoding="utf-8") as fh:
        return parse(fh.read())


def dump(b: Bundle, path: str) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(serialize(b))
