"""Command-line front end.

Exit codes: 0 ok or match, 1 mismatch, 2 parse or sort error, 3 fuel
exhausted without a verdict.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

from . import __version__
from .fuzz import DIVERGE, MATCH, MISMATCH, GenConfig, compare, fuzz
from .languages import LANGUAGES, LanguageBundle, UnknownLanguage, load_language, run_case
from .ruledsl import check_strong_separation, derive_bigstep_rules, parse_ruleset
from .semantics import EvalResult, SemanticsError, big_step, multi_step, render_derivation, trace_lines
from .syntax import SyntaxFault

EXIT_OK, EXIT_MISMATCH, EXIT_PARSE, EXIT_FUEL = 0, 1, 2, 3
DEFAULT_FUEL = 10_000
SCHEMA_VERSION = 1


def default_fuel() -> int:
    raw = os.environ.get("SOSFORGE_FUEL")
    return int(raw) if raw else DEFAULT_FUEL


def load(arg: str) -> LanguageBundle:
    """A bundled language id, or a path to a rule file."""
    if arg in LANGUAGES:
        return load_language(arg)
    path = Path(arg)
    if path.is_file():
        rs = parse_ruleset(path.read_text(encoding="utf-8"))
        return LanguageBundle(rs.name, rs, notes=rs.notes)
    raise UnknownLanguage(arg)


def _emit(args, payload: dict, text: str) -> None:
    if args.format == "json":
        payload = {"schema": f"sosforge.{payload.pop('kind')}/{SCHEMA_VERSION}", **payload}
        print(json.dumps(payload, ensure_ascii=False, indent=2, sort_keys=False))
    else:
        print(text)


def _result_json(b: LanguageBundle, r: EvalResult) -> dict:
    return {
        "values": [b.show(v) for v in r.values],
        "converged": r.converged,
        "cyclic": r.cyclic,
        "fuel_used": r.fuel_used,
        "frontier": len(r.frontier),
        "stuck": sorted(b.show(s, max_size=200) for s in r.stuck),
    }


def _result_text(label: str, b: LanguageBundle, r: EvalResult) -> str:
    vals = "{" + ", ".join(b.show(v, max_size=200) for v in r.values) + "}"
    if r.converged:
        status = "diverges (cyclic, no value)" if r.diverged and r.cyclic else "converged"
    else:
        status = f"not converged (frontier {len(r.frontier)})"
    extra = f", stuck {len(r.stuck)}" if r.stuck else ""
    return f"{label}: {vals}  {status}, fuel {r.fuel_used}{extra}"


def cmd_eval(args) -> int:
    b = load(args.language)
    t = b.parse(args.term)
    fuel = args.fuel
    payload: dict = {"kind": "eval", "language": b.id, "term": b.show(t), "mode": args.mode, "fuel": fuel}
    lines = []
    if args.mode == "both":
        res = compare(b.ruleset, t, fuel)
        payload["small"] = _result_json(b, res.small)
        payload["big"] = _result_json(b, res.big)
        separated = check_strong_separation(b.ruleset).passed
        verdict = {MATCH: "MATCH", MISMATCH: "MISMATCH", DIVERGE: "UNKNOWN"}[res.verdict]
        payload["verdict"] = verdict
        payload["strongly_separated"] = separated
        lines += [_result_text("small", b, res.small), _result_text("big", b, res.big), verdict]
        if res.verdict == MISMATCH and not separated:
            lines.append("(expected: the rule set is not strongly separated)")
        _emit(args, payload, "\n".join(lines))
        if res.verdict == MISMATCH:
            return EXIT_MISMATCH if separated else EXIT_OK
        return EXIT_FUEL if res.verdict == DIVERGE else EXIT_OK
    run = multi_step if args.mode == "small" else big_step
    r = run(b.ruleset, t, fuel)
    payload[args.mode] = _result_json(b, r)
    _emit(args, payload, _result_text(args.mode, b, r))
    return EXIT_OK if r.converged else EXIT_FUEL


def cmd_trace(args) -> int:
    b = load(args.language)
    t = b.parse(args.term)
    if args.mode == "big":
        r = big_step(b.ruleset, t, args.fuel, record=True)
        tree = render_derivation(b.ruleset, r.derivation)
        payload = {"kind": "trace", "language": b.id, "term": b.show(t), "mode": "big", "result": _result_json(b, r)}
        payload["derivation"] = tree.splitlines()
        _emit(args, payload, tree + "\n" + _result_text("big", b, r))
    else:
        r = multi_step(b.ruleset, t, args.fuel, trace=True)
        steps = [
            {"term": b.show(rec.term), "rules": list(rec.rules), "successors": [b.show(s) for s in rec.successors]}
            for rec in r.trace
        ]
        payload = {"kind": "trace", "language": b.id, "term": b.show(t), "mode": "small", "steps": steps}
        payload["result"] = _result_json(b, r)
        text = "\n".join(trace_lines(b.ruleset, r.trace)) + "\n" + _result_text("small", b, r)
        _emit(args, payload, text.lstrip("\n"))
    return EXIT_OK if r.converged else EXIT_FUEL


def cmd_derive(args) -> int:
    b = load(args.language)
    rules = derive_bigstep_rules(b.ruleset, compact=args.compact)
    payload = {"kind": "bigstep", "language": b.id, "rules": [r.to_json(b.ruleset) for r in rules]}
    if args.full:
        text = [r.render_full(b.ruleset) + ("  (*)" if r.simplifiable else "") for r in rules]
    else:
        text = [r.render(b.ruleset) for r in rules]
    _emit(args, payload, "\n".join(text))
    return EXIT_OK


def cmd_check(args) -> int:
    b = load(args.language)
    rep = check_strong_separation(b.ruleset)
    _emit(args, {"kind": "check", **rep.to_json()}, rep.to_text())
    return EXIT_OK if rep.passed else EXIT_MISMATCH


def cmd_fuzz(args) -> int:
    b = load(args.language)
    ops = frozenset(args.ops.split(",")) if args.ops else None
    require = frozenset(args.require.split(",")) if args.require else frozenset()
    cfg = GenConfig(size=args.size, value_ratio=args.ratio, ops=ops, require=require)
    rep = fuzz(b.ruleset, args.count, args.size, args.fuel, args.seed, cfg)
    separated = check_strong_separation(b.ruleset).passed
    data = rep.to_json(b.ruleset)
    data.pop("schema")
    data["strongly_separated"] = separated
    lines = [
        f"{b.id}: {rep.count} terms, size <= {rep.size}, fuel {rep.fuel}, seed {rep.seed}",
        f"  match {rep.counts[MATCH]}, no value either way {rep.counts[DIVERGE]}, mismatch {rep.counts[MISMATCH]}",
        f"  largest fuel ratio between evaluators: {rep.fuel_ratio_max:.2f}",
    ]
    for cx in data["counterexamples"]:
        lines.append(f"  {cx['class']}: {cx['term']}  shrunk to {cx['shrunk']}: small {cx['small']} vs big {cx['big']}")
    _emit(args, {"kind": "fuzz", **data}, "\n".join(lines))
    return EXIT_MISMATCH if rep.counts[MISMATCH] and separated else EXIT_OK


def cmd_corpus(args) -> int:
    b = load(args.language)
    outcomes = [run_case(b, c, args.fuel) for c in b.corpus]
    payload = {
        "kind": "corpus",
        "language": b.id,
        "cases": [
            {"term": o.case.term, "provenance": o.case.provenance, "ok": o.ok, "problems": o.problems}
            for o in outcomes
        ],
    }
    lines = [f"{'ok  ' if o.ok else 'FAIL'} {o.case.term}  [{o.case.provenance}] {'; '.join(o.problems)}" for o in outcomes]
    _emit(args, payload, "\n".join(lines) or "(empty corpus)")
    return EXIT_OK if all(o.ok for o in outcomes) else EXIT_MISMATCH


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="sosforge", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=f"sosforge {__version__}")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, fuel: bool = True):
        sp.add_argument("language", help=f"one of {', '.join(LANGUAGES)}, or a rule file")
        sp.add_argument("--format", choices=("text", "json"), default="text")
        if fuel:
            sp.add_argument("--fuel", type=int, default=None, help="default 10000, or $SOSFORGE_FUEL")

    e = sub.add_parser("eval", help="evaluate a closed term")
    common(e)
    e.add_argument("term")
    e.add_argument("--mode", choices=("small", "big", "both"), default="both")
    e.set_defaults(func=cmd_eval)

    t = sub.add_parser("trace", help="small-step trace, or big-step derivation with --mode big")
    common(t)
    t.add_argument("term")
    t.add_argument("--mode", choices=("small", "big"), default="small")
    t.set_defaults(func=cmd_trace)

    d = sub.add_parser("derive-bigstep", help="print the derived big-step rules")
    common(d, fuel=False)
    d.add_argument("--compact", action="store_true", help="fold head-independent cases into one rule")
    d.add_argument("--full", action="store_true", help="keep the evaluation premise of rules marked (*)")
    d.set_defaults(func=cmd_derive)

    c = sub.add_parser("check", help="strong separation and totality")
    common(c, fuel=False)
    c.set_defaults(func=cmd_check)

    f = sub.add_parser("fuzz", help="differential test of the two evaluators")
    common(f)
    f.add_argument("--seed", type=int, required=True)
    f.add_argument("--size", type=int, default=15)
    f.add_argument("--count", type=int, default=1000)
    f.add_argument("--ratio", type=float, default=0.5, help="share of value formers at inner nodes")
    f.add_argument("--ops", help="comma-separated operators to generate from")
    f.add_argument("--require", help="comma-separated operators every term must contain")
    f.set_defaults(func=cmd_fuzz)

    k = sub.add_parser("corpus", help="run the regression corpus of a language")
    common(k)
    k.set_defaults(func=cmd_corpus)
    return p


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    if getattr(args, "fuel", None) is None and hasattr(args, "fuel"):
        args.fuel = default_fuel()
    if getattr(args, "fuel", 0) < 0:
        print("error: fuel must be non-negative", file=sys.stderr)
        return EXIT_PARSE
    try:
        return args.func(args)
    except (SyntaxFault, UnknownLanguage) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_PARSE
    except SemanticsError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_FUEL


if __name__ == "__main__":
    sys.exit(main())
