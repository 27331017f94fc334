"""Command-line front end: ``xprod <subcommand> ...``.

Exit codes: 0 success or accept, 1 reject or nothing found, 2 usage error.
"""

from __future__ import annotations

import argparse
import json
import os
import random
import sys
from typing import Dict, List, Optional, Sequence

from . import circuits, problems, search, vonstaudt
from . import ringterms as rt
from .exactfield import (
    ParseError, ProjPoint, Tower, Vec3, extend_tower, format_scalar, join_towers,
    parse_projpoint, parse_scalar, parse_vec3, tower_of,
)
from .terms import (
    EvaluationError, constant_leaves, dag_size, eval_affine, eval_projective, parse_term,
    parse_terms, print_term,
)

FIELD_ENV = "XPROD_FIELD"


class UsageError(Exception):
    pass


# ---------------------------------------------------------------------------
# input helpers


def parse_field(tag: str) -> Tower:
    """``Q``, ``Qsqrt:D`` or ``Qsqrt:D1,D2,...`` (each radicand over the previous field)."""
    tag = tag.strip()
    if tag == "Q":
        return ()
    if not tag.startswith("Qsqrt:"):
        raise UsageError(f"bad field tag {tag!r}: expected Q or Qsqrt:D[,D...]")
    tower: Tower = ()
    for part in tag[len("Qsqrt:"):].split(","):
        try:
            d = parse_scalar(part.strip())
            tower = extend_tower(tower, d)
        except ValueError as exc:
            raise UsageError(f"bad field tag {tag!r}: {exc}") from None
    return tower


def _in_field(values, tower: Tower, what: str) -> None:
    for v in values:
        t = tower_of(v)
        try:
            ok = join_towers(tower, t) == tower
        except ValueError:
            ok = False
        if not ok:
            raise UsageError(f"{what} {format_scalar(v)} lies outside the chosen field")


def _read(path: str) -> str:
    if path == "-":
        return sys.stdin.read()
    with open(path) as fh:
        return fh.read()


def _load_json(path: str) -> dict:
    try:
        return json.loads(_read(path))
    except json.JSONDecodeError as exc:
        raise UsageError(f"{path}: invalid JSON: {exc}") from None


def _terms(args) -> list:
    if getattr(args, "term", None):
        return [parse_term(t) for t in args.term]
    if getattr(args, "term_file", None):
        return parse_terms(_read(args.term_file))
    return []


def _polys(args) -> List[rt.RingTerm]:
    if getattr(args, "poly", None):
        return [rt.parse_poly(p) for p in args.poly]
    if getattr(args, "poly_file", None):
        text = _read(args.poly_file)
        if args.poly_file.endswith(".json"):
            return rt.load_batch(json.loads(text))
        return [rt.parse_poly(line) for line in text.splitlines()
                if line.strip() and not line.strip().startswith("#")]
    return []


def _split_assign(item: str):
    name, sep, value = item.partition("=")
    if not sep or not name.strip():
        raise UsageError(f"bad assignment {item!r}: expected NAME=VALUE")
    return name.strip(), value.strip()


def _parse_value(text: str):
    if text.startswith("<"):
        return parse_projpoint(text)
    if text.startswith("["):
        return parse_vec3(text)
    return parse_scalar(text)


def _assignments(items: Sequence[str], tower: Tower) -> Dict[str, object]:
    out = {}
    for item in items or ():
        name, text = _split_assign(item)
        value = _parse_value(text)
        coords = [value] if not isinstance(value, (Vec3, ProjPoint)) else list(
            (value.rep if isinstance(value, ProjPoint) else value))
        _in_field(coords, tower, f"value of {name}")
        out[name] = value
    return out


class Output:
    def __init__(self, args):
        self.json = args.format == "json"
        self.path = args.output
        self.chunks: List[str] = []

    def emit(self, obj: dict, text: str) -> None:
        self.chunks.append(json.dumps(obj, indent=2, sort_keys=False) if self.json else text)

    def flush(self) -> None:
        data = "\n".join(self.chunks) + "\n"
        if self.path:
            with open(self.path, "w") as fh:
                fh.write(data)
        else:
            sys.stdout.write(data)


# ---------------------------------------------------------------------------
# subcommands


def cmd_parse(args, out: Output) -> int:
    terms, polys = _terms(args), _polys(args)
    if not terms and not polys:
        raise UsageError("give --term/--term-file or --poly/--poly-file")
    if terms:
        texts = [print_term(t) for t in terms]
        out.emit({"terms": texts}, "\n".join(texts))
    if polys:
        texts = [rt.print_poly(p) for p in polys]
        out.emit({"polys": texts}, "\n".join(texts))
    return 0


def cmd_eval(args, out: Output) -> int:
    tower = parse_field(args.field)
    assignment = _assignments(args.assign, tower)
    for t in _terms(args):
        if args.mode == "affine":
            a = {k: (v.rep if isinstance(v, ProjPoint) else v) for k, v in assignment.items()}
            text = str(eval_affine(t, a))
        else:
            a = {k: (v if isinstance(v, ProjPoint) else ProjPoint(v)) for k, v in assignment.items()}
            value = eval_projective(t, a)
            text = "undefined" if value is None else str(value)
        out.emit({"term": print_term(t), "mode": args.mode, "value": text}, text)
    for p in _polys(args):
        text = format_scalar(rt.eval_poly(p, assignment))
        out.emit({"poly": rt.print_poly(p), "value": text}, text)
    return 0


def _frame(args) -> vonstaudt.Frame:
    if args.frame == "standard":
        return vonstaudt.standard_frame()
    return vonstaudt.random_frame(random.Random(args.seed))


def cmd_compile(args, out: Output) -> int:
    polys = _polys(args)
    if not polys:
        raise UsageError("give --poly or --poly-file")
    variant = "constant-free" if args.constant_free else args.variant
    tower = parse_field(args.field)
    roots = {k: parse_scalar(v) for k, v in map(_split_assign, args.root or ())}
    _in_field(roots.values(), tower, "root")
    code = 0
    for p in polys:
        info = {"poly": rt.print_poly(p), "variant": variant, "poly_size": rt.description_size(p)}
        if variant == "term":
            frame = _frame(args)
            t = vonstaudt.compile_with_constants(p, frame)
            info.update(term=print_term(t), size=dag_size(t), constant_leaves=constant_leaves(t),
                        frame=[str(v) for v in frame.basis], seed=args.seed)
            out.emit(info, info["term"])
            continue
        if variant == "constant-free":
            inst = vonstaudt.compile_constant_free(p)
        else:
            inst = vonstaudt.compile_equation(p, _frame(args))
        info.update(inst.to_json())
        info.update(size=inst.size(), constant_leaves=constant_leaves(inst.lhs),
                    size_constant=vonstaudt.SIZE_CONSTANT)
        if inst.frame is not None:
            info["frame"] = [str(v) for v in inst.frame.basis]
            info["seed"] = args.seed
        text = f"{info['lhs']} = {info['rhs']}"
        if roots:
            try:
                w = vonstaudt.witness_from_root(roots, inst)
            except vonstaudt.NotARoot as exc:
                info["witness_error"] = str(exc)
                text += f"\nno witness: {exc}"
                code = 1
            else:
                info["witness"] = w.to_json()
                text += "\n" + "\n".join(f"{k} = {v}" for k, v in w.assignment.items())
        out.emit(info, text)
    return code


def cmd_pit(args, out: Output) -> int:
    targets = [("term", print_term(t), circuits.sos(circuits.coordinatize(t))) for t in _terms(args)]
    targets += [("poly", rt.print_poly(p), circuits.from_ring_term(p)) for p in _polys(args)]
    if not targets:
        raise UsageError("give --term/--term-file or --poly/--poly-file")
    for kind, text, c in targets:
        res = circuits.pit_random(c, args.error, args.seed, args.trials)
        obj = {kind: text, **res.to_json(), "seed": args.seed, "degree_bound": circuits.degree_bound(c),
               "nodes": c.node_count}
        if isinstance(res, circuits.ProbablyZero):
            line = f"probably_zero (error <= {res.error_bound})"
        else:
            line = "nonzero at " + ", ".join(f"{k}={v}" for k, v in obj["witness"].items())
        out.emit(obj, line)
    return 0


def _instance_from_args(args):
    """(problem instance, compiled XSAT instance or None)."""
    if args.instance:
        return problems.ProblemInstance.from_json(_load_json(args.instance)), None
    polys = _polys(args)
    if not polys:
        raise UsageError("give --instance or --poly")
    inst = vonstaudt.compile_constant_free(polys[0])
    return inst.to_problem(), inst


def cmd_search(args, out: Output) -> int:
    inst, compiled = _instance_from_args(args)
    fixed = {}
    if args.pin_frame:
        if compiled is None:
            raise UsageError("--pin-frame needs --poly")
        pts = vonstaudt.observation_points()
        fixed = {n: pts[k] for n, k in zip(compiled.frame_vars, ("A", "B", "C"))}
    try:
        cfg = search.SearchConfig(bound=args.bound, budget=args.budget, seed=args.seed,
                                  strategy=args.strategy, field_tag=args.field, fixed=fixed)
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    res = search.search(inst, cfg)
    obj = {**res.to_json(), "seed": args.seed, "strategy": args.strategy}
    text = f"{res.verdict} after {res.evaluations} evaluations (bound {res.bound})"
    if res.witness is not None:
        text += "\n" + "\n".join(f"{k} = {v}" for k, v in res.witness.assignment.items())
        if compiled is not None:
            roots = vonstaudt.root_from_witness(res.witness, compiled)
            obj["roots"] = {k: format_scalar(v) for k, v in roots.items()}
            text += "\nroot: " + ", ".join(f"{k} = {v}" for k, v in obj["roots"].items())
    out.emit(obj, text)
    return 0 if res.found else 1


def cmd_verify(args, out: Output) -> int:
    inst = problems.ProblemInstance.from_json(_load_json(args.instance))
    w = problems.Witness.from_json(_load_json(args.witness))
    _in_field([c for v in w.assignment.values()
               for c in (v.rep if isinstance(v, ProjPoint) else v)], parse_field(args.field),
              "coordinate")
    verdict = problems.verify_witness(inst, w)
    out.emit(verdict.to_json(), "Accept" if verdict else f"Reject: {verdict.reason}")
    return 0 if verdict else 1


def cmd_reduce(args, out: Output) -> int:
    obj = _load_json(args.instance)
    w = problems.Witness.from_json(_load_json(args.witness)) if args.witness else None
    result: dict = {"transport": args.transport}
    if args.transport in ("proj-to-affine", "nonequiv-to-nontriv", "nontriv-to-nonequiv"):
        inst = problems.ProblemInstance.from_json(obj)
    if args.transport == "nonequiv-to-nontriv":
        if inst.kind != "XNONEQUIV":
            raise UsageError("instance is not XNONEQUIV")
        red = problems.nonequiv_to_nontriv(*inst.terms)
        result["instance"] = red.to_json()
        if w is not None:
            result["witness"] = problems.nonequiv_witness_to_nontriv(w).to_json()
    elif args.transport == "nontriv-to-nonequiv":
        if inst.kind != "XNONTRIV":
            raise UsageError("instance is not XNONTRIV")
        red = problems.nontriv_to_nonequiv(inst.terms[0])
        if isinstance(red, problems.TrivialVariableCase):
            result["trivial"] = True
        else:
            result["instance"] = red.to_json()
            if w is not None:
                tw = problems.nontriv_witness_to_nonequiv(w)
                result["witness"] = None if tw is None else tw.to_json()
    elif args.transport == "proj-to-affine":
        red, fresh = problems.projective_to_affine_xsat(inst)
        result["instance"] = red.to_json()
        result["fresh_variable"] = fresh
        if w is not None:
            result["witness"] = problems.xsat_witness_to_affine(inst, w).to_json()
    else:
        inst = problems.ProblemInstance.from_json(obj)
        if w is None:
            raise UsageError("xuvec transport needs --witness")
        tr = problems.xuvec_from_nontriv(inst.terms[0], w)
        result["instance"] = problems.ProblemInstance(
            "XUVEC", "affine", inst.terms, inst.constants).to_json()
        result["witness"] = tr.witness.to_json()
        result["rotation"] = [str(r) for r in tr.rotation.rows]
        result["field"] = [format_scalar(d) for d in tr.tower]
    lines = [f"{k}: {json.dumps(v)}" for k, v in result.items()]
    out.emit(result, "\n".join(lines))
    return 0


def cmd_selftest(args, out: Output) -> int:
    reports = [vonstaudt.gadget_suite(args.frames, args.seed),
               vonstaudt.commutation_suite(args.terms, args.points, args.seed)]
    ok = all(r.ok for r in reports)
    obj = {"seed": args.seed, "passed": ok,
           "suites": [{"name": r.name, "cases": r.cases, "failures": r.failures[:20],
                       "undefined": r.undefined, "seconds": round(r.seconds, 3)} for r in reports]}
    out.emit(obj, "\n".join(r.line() for r in reports) + f"\nseed {args.seed}")
    return 0 if ok else 1


# ---------------------------------------------------------------------------
# argument parsing


def _common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--format", choices=("text", "json"), default="text")
    p.add_argument("--output", "-o", help="write results here instead of stdout")
    p.add_argument("--field", default=os.environ.get(FIELD_ENV, "Q"),
                   help=f"Q, Qsqrt:D or Qsqrt:D1,D2 (default from ${FIELD_ENV}, else Q)")


def _term_inputs(p: argparse.ArgumentParser) -> None:
    p.add_argument("--term", action="append", help="cross term (repeatable)")
    p.add_argument("--term-file", help=".xt file, one term per line")


def _poly_inputs(p: argparse.ArgumentParser) -> None:
    p.add_argument("--poly", action="append", help="ring term (repeatable)")
    p.add_argument("--poly-file", help=".poly file (one per line) or JSON batch")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="xprod", description="Cross-product terms toolkit.")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("parse", help="echo terms or polynomials in canonical form")
    _term_inputs(p)
    _poly_inputs(p)
    _common(p)

    p = sub.add_parser("eval", help="evaluate a term or polynomial")
    _term_inputs(p)
    _poly_inputs(p)
    p.add_argument("--assign", action="append", help="NAME=[a,b,c] | NAME=<a:b:c> | NAME=scalar")
    p.add_argument("--mode", choices=("affine", "projective"), default="affine")
    _common(p)

    p = sub.add_parser("compile", help="polynomial to cross-term equation")
    _poly_inputs(p)
    p.add_argument("--variant", choices=("term", "equation", "constant-free"),
                   default="constant-free")
    p.add_argument("--constant-free", action="store_true", help="same as --variant constant-free")
    p.add_argument("--frame", choices=("standard", "random"), default="standard")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--root", action="append", help="NAME=scalar; also emit the witness")
    _common(p)

    p = sub.add_parser("pit", help="randomized identity test")
    _term_inputs(p)
    _poly_inputs(p)
    p.add_argument("--error", type=int, default=20, help="error exponent k (bound 2^-k)")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--trials", type=int, default=8)
    _common(p)

    p = sub.add_parser("search", help="grid search for a witness")
    p.add_argument("--instance", help="instance JSON")
    _poly_inputs(p)
    p.add_argument("--bound", type=int, default=2)
    p.add_argument("--budget", type=int, default=10 ** 6)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--strategy", choices=search.STRATEGIES, default="exhaustive")
    p.add_argument("--pin-frame", action="store_true",
                   help="fix the frame variables of a compiled polynomial to the standard frame")
    _common(p)

    p = sub.add_parser("verify", help="check a witness against an instance")
    p.add_argument("--instance", required=True)
    p.add_argument("--witness", required=True)
    _common(p)

    p = sub.add_parser("reduce", help="transport an instance (and witness) between problems")
    p.add_argument("--transport", required=True,
                   choices=("nonequiv-to-nontriv", "nontriv-to-nonequiv", "proj-to-affine", "xuvec"))
    p.add_argument("--instance", required=True)
    p.add_argument("--witness")
    _common(p)

    p = sub.add_parser("selftest", help="run the gadget identity suites")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--frames", type=int, default=200)
    p.add_argument("--terms", type=int, default=100)
    p.add_argument("--points", type=int, default=5)
    _common(p)
    return ap


COMMANDS = {
    "parse": cmd_parse, "eval": cmd_eval, "compile": cmd_compile, "pit": cmd_pit,
    "search": cmd_search, "verify": cmd_verify, "reduce": cmd_reduce, "selftest": cmd_selftest,
}


def run(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    out = Output(args)
    try:
        if getattr(args, "error", 1) < 1:
            raise UsageError("--error must be at least 1")
        code = COMMANDS[args.command](args, out)
    except (UsageError, ParseError, EvaluationError, OSError, ValueError, KeyError) as exc:
        print(f"xprod {args.command}: {exc}", file=sys.stderr)
        return 2
    out.flush()
    return code


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
