"""Command line interface: verification, transfer, inversion and composition on bundles.

Every command prints a JSON report on standard output and exits with 0 on
success, 1 when a mathematical check fails and 2 on unusable input.
"""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import replace
from fractions import Fraction

from . import ainfty as ai
from . import precy as pc
from .bundle import Bundle, BundleError, dump, load
from .exactla import field_from_descriptor
from .graded import cohomology_contraction
from .multi import MultiCollection, invariance_defects
from .testkit import (GenParams, gauge_ainf, gauge_pcy, random_ainf_structure, random_dg_quiver, random_hom_collection,
                      random_multi_collection, random_pcy_structure, run_identity_suite, SUITE_PARAMS)

OK, FAILED, BAD_INPUT = 0, 1, 2


class InputError(Exception):
    pass


# --- helpers ---------------------------------------------------------------------------------

def _open(args) -> Bundle:
    try:
        b = load(args.bundle)
    except OSError as exc:
        raise InputError(f"cannot read {args.bundle}: {exc.strerror}") from exc
    if args.field and field_from_descriptor(args.field).name != b.field.name:
        raise InputError(f"bundle is over {b.field.name}, not {args.field}")
    return b


def _pick(b: Bundle, name: str | None, what: str, pred):
    if name is not None:
        if name not in b.collections:
            raise InputError(f"no collection named {name!r}")
        C = b.collections[name]
        if not pred(C):
            raise InputError(f"collection {name!r} is not a {what}")
        return name, C
    found = [(n, C) for n, C in sorted(b.collections.items()) if pred(C)]
    if len(found) != 1:
        raise InputError(f"expected exactly one {what} in the bundle, found {len(found)}; name it explicitly")
    return found[0]


def _is_structure(C) -> bool:
    if isinstance(C, MultiCollection):
        return C.role == "structure" and C.weight == 1
    return C.degree == 1 and C.source is C.target


def _is_morphism(C) -> bool:
    if isinstance(C, MultiCollection):
        return C.role == "morphism" and C.weight == 0
    return C.degree == 0


def _structure_on(b: Bundle, name, Q, multi: bool):
    def pred(C):
        return _is_structure(C) and C.source is Q and isinstance(C, MultiCollection) == multi
    return _pick(b, name, f"structure on {b.quiver_name(Q)}", pred)[1]


def _trunc(C, args):
    if isinstance(C, MultiCollection):
        return C.truncate(min(C.lmax, args.max_length), min(C.nmax, args.max_size))
    return C.truncate(min(C.nmax, args.max_size))


def _fails(defect, limit=20) -> list:
    out = []
    for key in sorted(defect.nonzero_keys(), key=lambda k: (len(repr(k)), repr(k)))[:limit]:
        out.append({"index": _jsonable(key), "input": list(min(defect.comps[key]))})
    return out


def _jsonable(key):
    return [_jsonable(k) for k in key] if isinstance(key, tuple) else key


def _write(args, b: Bundle, report: dict) -> None:
    b.metadata.setdefault("command", args.command)
    if args.out:
        dump(b, args.out)
        report["out"] = args.out


# --- commands --------------------------------------------------------------------------------

def cmd_check_ainf(args):
    b = _open(args)
    _, m = _pick(b, args.structure, "A-infinity structure",
                 lambda C: not isinstance(C, MultiCollection) and _is_structure(C))
    defect = ai.stasheff_defect(_trunc(m, args))
    fails = _fails(defect)
    return (OK if not fails else FAILED), {"ok": not fails, "failures": fails}


def cmd_check_pcy(args):
    b = _open(args)
    _, M = _pick(b, args.structure, "pre-CY structure", lambda C: isinstance(C, MultiCollection) and _is_structure(C))
    M = _trunc(M, args)
    fails = _fails(pc.mc_defect(M))
    inv = [{"index": _jsonable(k), "input": None if w is None else list(w)} for k, w in invariance_defects(M)]
    ok = not fails and not inv
    return (OK if ok else FAILED), {"ok": ok, "failures": fails, "invariance_failures": inv}


def cmd_check_morphism(args):
    b = _open(args)
    _, F = _pick(b, args.morphism, "morphism", _is_morphism)
    multi = isinstance(F, MultiCollection)
    mA = _trunc(_structure_on(b, args.source_structure, F.source, multi), args)
    mB = _trunc(_structure_on(b, args.target_structure, F.target, multi), args)
    F = _trunc(F, args)
    defect = pc.pcy_mi_defect(F, mA, mB) if multi else ai.mi_defect(F, mA, mB)
    fails = _fails(defect)
    return (OK if not fails else FAILED), {"ok": not fails, "failures": fails}


def cmd_compose(args):
    b = _open(args)
    _, F = _pick(b, args.first, "morphism", _is_morphism)
    _, G = _pick(b, args.second, "morphism", _is_morphism)
    if isinstance(F, MultiCollection) != isinstance(G, MultiCollection):
        raise InputError("cannot compose an A-infinity morphism with a pre-CY one")
    if F.target is not G.source:
        raise InputError("the first morphism does not land where the second starts")
    F, G = _trunc(F, args), _trunc(G, args)
    GF = pc.compose_pcy(G, F) if isinstance(F, MultiCollection) else ai.compose_morphisms(G, F)
    out = Bundle(b.field, {}, {}, dict(b.metadata))
    out.add_quiver(b.quiver_name(F.source), F.source)
    out.add_quiver(b.quiver_name(G.source), G.source)
    out.add_quiver(b.quiver_name(G.target), G.target)
    out.collections[args.name] = GF
    _write(args, out, rep := {"ok": True, "components": len(GF.nonzero_keys())})
    return OK, rep


def cmd_invert(args):
    b = _open(args)
    _, F = _pick(b, args.morphism, "morphism", _is_morphism)
    F = _trunc(F, args)
    try:
        G = pc.invert_pcy(F) if isinstance(F, MultiCollection) else ai.invert_morphism(F)
    except (ai.AinfError, pc.PcyError) as exc:
        return FAILED, {"ok": False, "error": str(exc)}
    out = Bundle(b.field, {}, {}, dict(b.metadata))
    out.add_quiver(b.quiver_name(F.source), F.source)
    out.add_quiver(b.quiver_name(F.target), F.target)
    out.collections[args.name] = G
    _write(args, out, rep := {"ok": True})
    return OK, rep


def _chain_map(b: Bundle, name):
    _, f = _pick(b, name, "chain map", lambda C: not isinstance(C, MultiCollection) and C.degree == 0)
    return f


def cmd_transfer(args):
    b = _open(args)
    f = _chain_map(b, args.map)
    multi = args.pcy
    out = Bundle(b.field, {}, {}, dict(b.metadata))
    out.add_quiver(b.quiver_name(f.source), f.source)
    out.add_quiver(b.quiver_name(f.target), f.target)
    if args.direction == "to-source":
        M = _trunc(_structure_on(b, args.structure, f.target, multi), args)
        if multi:
            MA, F = pc.transfer_pcy_from_target(f.truncate(M.nmax), M)
        else:
            MA, F = ai.transfer_from_target(f.truncate(M.nmax), M)
        out.collections.update({"M_source": MA, "M_target": M, "F": F})
    else:
        M = _trunc(_structure_on(b, args.structure, f.source, multi), args)
        if multi:
            MB, F = pc.transfer_pcy_to_target(f.truncate(M.nmax), M)
        else:
            MB, F = ai.transfer_to_target(f.truncate(M.nmax), M)
        out.collections.update({"M_source": M, "M_target": MB, "F": F})
    _write(args, out, rep := {"ok": True, "direction": args.direction})
    return OK, rep


def cmd_minimal_model(args):
    b = _open(args)
    _, M = _pick(b, args.structure, "structure",
                 lambda C: _is_structure(C) and isinstance(C, MultiCollection) == args.pcy)
    M = _trunc(M, args)
    A = M.source
    if args.pcy:
        H, MH, P = pc.pcy_minimal_model(A, M)
    else:
        H, MH, P = ai.minimal_model(A, M)
    out = Bundle(b.field, {}, {}, dict(b.metadata))
    out.add_quiver(b.quiver_name(A), A)
    out.add_quiver("H", H)
    out.collections.update({"M": M, "MH": MH, "P": P})
    _write(args, out, rep := {"ok": True, "cohomology_dims": {f"{x},{y}": H.dim(x, y) for x, y in H.pairs()}})
    return OK, rep


def cmd_quasi_inverse(args):
    b = _open(args)
    _, F = _pick(b, args.morphism, "morphism",
                 lambda C: _is_morphism(C) and isinstance(C, MultiCollection) == args.pcy)
    mA = _trunc(_structure_on(b, args.source_structure, F.source, args.pcy), args)
    mB = _trunc(_structure_on(b, args.target_structure, F.target, args.pcy), args)
    F = _trunc(F, args)
    if args.pcy:
        q = pc.pcy_quasi_inverse(F, mA, mB)
        HA, HB = q.induced.source.contraction.reduced, q.induced.target.contraction.reduced
        comp, ident = pc.compose_pcy, (lambda Q: pc.identity_pcy(Q, F.d, F.lmax, F.nmax))
    else:
        q = ai.quasi_inverse(F, mA, mB)
        HA, HB = q.induced.source.contraction.reduced, q.induced.target.contraction.reduced
        comp, ident = ai.compose_morphisms, (lambda Q: ai.identity_morphism(Q, F.nmax))
    left = comp(q.HG, q.HF).equals(ident(HA))
    right = comp(q.HF, q.HG).equals(ident(HB))
    out = Bundle(b.field, {}, {}, dict(b.metadata))
    out.add_quiver(b.quiver_name(F.source), F.source)
    out.add_quiver(b.quiver_name(F.target), F.target)
    out.add_quiver("HA", HA)
    out.add_quiver("HB", HB)
    out.collections.update({"G": q.G, "HF": q.HF, "HG": q.HG})
    ok = left and right
    _write(args, out, rep := {"ok": ok, "HG_HF_identity": left, "HF_HG_identity": right})
    return (OK if ok else FAILED), rep


def cmd_cohomology(args):
    b = _open(args)
    if args.quiver is None:
        if len(b.quivers) != 1:
            raise InputError("name the quiver with --quiver")
        name = next(iter(b.quivers))
    else:
        name = args.quiver
    if name not in b.quivers:
        raise InputError(f"no quiver named {name!r}")
    A = b.quivers[name]
    if not A.is_dg():
        return FAILED, {"ok": False, "square_defects": [list(t) for t in A.square_defects()]}
    C = cohomology_contraction(A)
    ident = {x: x for x in A.objects}
    out = Bundle(b.field, {}, {}, dict(b.metadata))
    out.add_quiver(name, A)
    out.add_quiver("H", C.reduced)
    out.collections["i"] = ai.chain_map_morphism(C.reduced, A, ident, C.include, 2)
    out.collections["p"] = ai.chain_map_morphism(A, C.reduced, ident, C.project, 2)
    h = ai.HomCollection(A, A, ident, -1, 2)
    for xy in A.pairs():
        h.set_component(xy, {(k,): dict(col) for k, col in enumerate(C.homotopy[xy].cols) if col})
    out.collections["h"] = h
    _write(args, out, rep := {"ok": True, "dims": {f"{x},{y}": C.reduced.dim(x, y) for x, y in A.pairs()}})
    return OK, rep


def _gen_params(args) -> GenParams:
    return GenParams(object_count=args.objects, max_dim=args.max_dim, min_dim=args.min_dim,
                     degree_window=(args.min_degree, args.max_degree), density=Fraction(args.density),
                     seed=args.seed, field=field_from_descriptor(args.field or "Q"))


def cmd_gen(args):
    p = _gen_params(args)
    N, L, d = args.max_size, args.max_length, args.d
    A = random_dg_quiver(p, square_zero=not args.not_dg)
    ident = {x: x for x in A.objects}
    b = Bundle(p.field, {"A": A}, {}, {"seed": args.seed, "generator": args.what})
    if args.what == "ainf":
        b.collections["m"] = random_ainf_structure(A, N, p)
    elif args.what == "pcy":
        b.collections["M"] = random_pcy_structure(A, d, L, N, p)
    elif args.what in ("ainf-iso", "pcy-iso"):
        if args.what == "ainf-iso":
            F = gauge_ainf(A, N, p, salt="iso")
            mA = random_ainf_structure(A, N, p)
            mB = ai.transport_structure(F, mA)
        else:
            F = gauge_pcy(A, d, L, N, p, salt="iso")
            mA = random_pcy_structure(A, d, L, N, p)
            mB = pc.transport_pcy(F, mA)
        # the target gets its own copy of the quiver so that source and target stay distinct
        B = replace(A)
        b.quivers["B"] = B
        b.collections.update({"mA": mA, "mB": _retarget(mB, B, B), "F": _retarget(F, A, B)})
    elif args.what == "collection":
        if args.kind == "hom":
            b.collections["C"] = random_hom_collection(A, A, ident, 1 if args.role == "structure" else 0, N, p)
        else:
            b.collections["C"] = random_multi_collection(A, A, ident, d, args.role, L, N, p, min_size=1)
    elif args.what != "quiver":
        raise InputError(f"unknown generator {args.what!r}")
    _write(args, b, rep := {"ok": True, "generated": args.what})
    if not args.out:
        from .bundle import serialize
        rep["bundle"] = json.loads(serialize(b))
    return OK, rep


def _retarget(C, source, target):
    out = C.copy()
    out.source, out.target = source, target
    return out


def cmd_suite(args):
    params = replace(SUITE_PARAMS, field=field_from_descriptor(args.field or "Q"))
    rep = run_identity_suite(args.seeds, nmax_ainf=max(args.max_size, 5) if args.ainf_size is None else args.ainf_size,
                             lmax=args.max_length, nmax=args.max_size, pcy=not args.ainf_only,
                             ainf=not args.pcy_only, params=params, first_seed=args.seed)
    fails = [{"seed": s, "identity": n, "index": _jsonable(k), "input": list(w)} for s, n, k, w in rep.failures]
    return (OK if rep.ok else FAILED), {"ok": rep.ok, "checked": rep.checked, "failures": fails}


# --- parser ----------------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--field", help="Q or Fp:<p>")
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--max-size", type=int, default=4)
    common.add_argument("--max-length", type=int, default=3)
    common.add_argument("--out", help="write the resulting bundle here")

    parser = argparse.ArgumentParser(prog="hptransfer", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    def cmd(name, func, bundle=True, **kw):
        sp = sub.add_parser(name, parents=[common], **kw)
        if bundle:
            sp.add_argument("bundle")
        sp.set_defaults(func=func)
        return sp

    cmd("check-ainf", cmd_check_ainf).add_argument("--structure")
    cmd("check-pcy", cmd_check_pcy).add_argument("--structure")
    sp = cmd("check-morphism", cmd_check_morphism)
    sp.add_argument("--morphism")
    sp.add_argument("--source-structure")
    sp.add_argument("--target-structure")
    sp = cmd("compose", cmd_compose)
    sp.add_argument("--first", required=True)
    sp.add_argument("--second", required=True)
    sp.add_argument("--name", default="composite")
    sp = cmd("invert", cmd_invert)
    sp.add_argument("--morphism")
    sp.add_argument("--name", default="inverse")
    sp = cmd("transfer", cmd_transfer)
    sp.add_argument("--direction", choices=["to-source", "to-target"], required=True)
    sp.add_argument("--map")
    sp.add_argument("--structure")
    sp.add_argument("--pcy", action="store_true")
    sp = cmd("minimal-model", cmd_minimal_model)
    sp.add_argument("--structure")
    sp.add_argument("--pcy", action="store_true")
    sp = cmd("quasi-inverse", cmd_quasi_inverse)
    sp.add_argument("--morphism")
    sp.add_argument("--source-structure")
    sp.add_argument("--target-structure")
    sp.add_argument("--pcy", action="store_true")
    cmd("cohomology", cmd_cohomology).add_argument("--quiver")
    sp = cmd("gen", cmd_gen, bundle=False)
    sp.add_argument("what", choices=["quiver", "ainf", "pcy", "ainf-iso", "pcy-iso", "collection"])
    sp.add_argument("--kind", choices=["hom", "multi"], default="multi")
    sp.add_argument("--role", choices=["structure", "morphism"], default="structure")
    sp.add_argument("--d", type=int, default=0)
    sp.add_argument("--objects", type=int, default=2)
    sp.add_argument("--min-dim", type=int, default=1)
    sp.add_argument("--max-dim", type=int, default=2)
    sp.add_argument("--min-degree", type=int, default=-1)
    sp.add_argument("--max-degree", type=int, default=1)
    sp.add_argument("--density", default="1/2")
    sp.add_argument("--not-dg", action="store_true", help="allow a differential that does not square to zero")
    sp = cmd("suite", cmd_suite, bundle=False)
    sp.add_argument("--seeds", type=int, default=100)
    sp.add_argument("--ainf-size", type=int, help="arity bound for the A-infinity identities (default 5)")
    group = sp.add_mutually_exclusive_group()
    group.add_argument("--ainf-only", action="store_true")
    group.add_argument("--pcy-only", action="store_true")
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    report = {"command": args.command}
    try:
        code, body = args.func(args)
    except (ai.ObstructionError, pc.PcyObstructionError) as exc:
        code, body = FAILED, {"ok": False, "error": str(exc)}
    except (InputError, ValueError) as exc:
        code, body = BAD_INPUT, {"ok": False, "error": str(exc)}
    report.update(body)
    print(json.dumps(report, sort_keys=True))
    return code


if __name__ == "__main__":
    sys.exit(main())
