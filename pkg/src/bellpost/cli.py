"""Command-line front end.

Exit status: 0 on success, 1 when ``--strict`` is given and the verdict is
negative (not separated, proof failed, rule not all-but-one, unsafe or
violated), 2 on input errors.
"""

from __future__ import annotations

import argparse
import json
import sys
from fractions import Fraction

from . import inequality, scenario, scm, selection, suites
from .causal_graph import CausalGraph, GraphError, d_separated
from .inequality import BellFunctional, ResourceError, ShapeError
from .scm import Behavior, FiniteModel, ModelError
from .selection import SelectionError

SCHEMA_VERSION = 1


class InputError(Exception):
    pass


def _read_json(path: str):
    try:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise InputError(f"{path}: {exc.strerror}") from None
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise InputError(f"{path}:{exc.lineno}:{exc.colno}: {exc.msg}") from None


def _load(path: str, loader):
    data = _read_json(path)
    try:
        return loader(data)
    except (GraphError, ModelError, SelectionError, ShapeError, TypeError, AttributeError) as exc:
        raise InputError(f"{path}: {exc}") from None


def _load_functional(spec: str) -> BellFunctional:
    if spec == "chsh":
        return inequality.chsh()
    return _load(spec, BellFunctional.from_dict)


def _split(values) -> list[str]:
    out = []
    for v in values or []:
        out.extend(p for p in v.split(",") if p)
    return out


# --- commands: each returns (result dict, text, verdict ok) -------------


def cmd_dsep(args):
    graph = _load(args.graph, CausalGraph.from_dict)
    xs, ys, zs = _split(args.x), _split(args.y), _split(args.given)
    try:
        sep = d_separated(graph, xs, ys, zs)
    except GraphError as exc:
        raise InputError(str(exc)) from None
    result = {"x": xs, "y": ys, "given": zs, **sep.to_dict()}
    lines = [f"{','.join(xs)} vs {','.join(ys)} given {{{','.join(zs)}}}"]
    lines += scenario.verdict_lines(sep.verdicts) or ["    (no connecting path)"]
    lines.append("d-separated: " + ("yes" if sep.separated else "no"))
    return result, "\n".join(lines), sep.separated


def cmd_theorem(args):
    try:
        report = scenario.verify_theorem(args.parties)
    except GraphError as exc:
        raise InputError(str(exc)) from None
    result = {"proof": report.to_dict()}
    text = report.to_text()
    ok = report.overall
    if args.check_necessity:
        nec = scenario.verify_erasure_necessity(args.parties)
        result["necessity"] = nec.to_dict()
        text += "\n\n" + nec.to_text()
        ok = ok and nec.holds
    return result, text, ok


def _verdict_text(verdict) -> list[str]:
    lines = ["all-but-one: " + ("PASS" if verdict.holds else "FAIL")]
    if not verdict.holds:
        lines.append(f"  {verdict.total_violations} violating pair(s); first witnesses:")
        for k, u, v in verdict.violations:
            lines.append(f"    party {k}: K({_fmt_outcome(u)}) != K({_fmt_outcome(v)})")
    return lines


def cmd_rule(args):
    data = _read_json(args.rule)
    try:
        space, support, rule = selection.load_rule_file(data)
        if args.support:
            support = selection.parse_support(args.support, space)
        verdict = selection.check_all_but_one(rule, space, support, max_witnesses=args.max_witnesses)
    except SelectionError as exc:
        raise InputError(f"{args.rule}: {exc}") from None
    size = len(support) if support is not None else space.size
    result = {"rule": rule.source, "support_size": size, "all_but_one": verdict.to_dict()}
    text = "\n".join([f"rule: {rule.source}", f"support: {size} joint outcome(s)"] + _verdict_text(verdict))
    return result, text, verdict.holds


def _fmt_outcome(a) -> str:
    return "".join(a) if all(len(s) == 1 for s in a) else ",".join(a)


def _fmt_behavior(b: Behavior, title: str) -> list[str]:
    lines = [title]
    for x, row in b.table.items():
        entries = ", ".join(f"{_fmt_outcome(a)}:{p}" for a, p in row.items() if p)
        lines.append(f"  x={','.join(x)}: {entries}")
    return lines


def _safety_text(rep) -> list[str]:
    return [
        f"locality residual: {rep.locality_residual}",
        f"free-choice residual: {rep.free_choice_residual}",
        f"unconditioned locality residual: {rep.unconditioned_locality_residual}",
        "acceptance: " + ", ".join(f"{','.join(x)}:{p}" for x, p in rep.acceptance.items()),
        "safe: " + ("yes" if rep.safe else "no"),
    ]


def _run_model(model: FiniteModel, rule, functional):
    full = scm.behavior(model)
    post, rep = scm.postselect(model, rule)
    verdict = selection.check_all_but_one(rule, model.outcomes, scm.model_support(model))
    result = {
        "behavior": full.to_dict(),
        "postselected": post.to_dict(),
        "safety": rep.to_dict(),
        "all_but_one": verdict.to_dict(),
    }
    lines = _fmt_behavior(full, "behavior P(a|x):") + _fmt_behavior(post, "post-selected P(a|x,K=1):")
    lines += _verdict_text(verdict) + _safety_text(rep)
    ok = rep.safe and verdict.holds
    if functional is not None:
        vr = inequality.violation_report(functional, model, rule)
        result["inequality"] = vr.to_dict()
        lines += [
            f"{vr.functional}: I(P) = {vr.value_full}, I(P_K) = {vr.value_postselected}, I_L = {vr.local_bound}",
            "violation after selection: " + ("yes" if vr.violated else "no"),
        ]
        ok = ok and not vr.violated
    return result, "\n".join(lines), ok


def cmd_scm(args):
    model = _load(args.model, FiniteModel.from_dict)
    data = _read_json(args.rule)
    try:
        _, _, rule = selection.load_rule_file(data)
    except SelectionError as exc:
        raise InputError(f"{args.rule}: {exc}") from None
    functional = _load_functional(args.ineq) if args.ineq else None
    try:
        return _run_model(model, rule, functional)
    except (SelectionError, ShapeError) as exc:
        raise InputError(str(exc)) from None


def cmd_ineq(args):
    f = _load_functional(args.functional)
    if args.action == "bound":
        lb = inequality.local_bound(f, cap=args.cap)
        text = f"local bound: {lb.value} (over {lb.strategies_checked} deterministic strategies)\n"
        text += "maximiser: " + "; ".join(
            f"party {i + 1}: " + ", ".join(f"{x}->{a}" for x, a in zip(s, r))
            for i, (s, r) in enumerate(zip(lb.strategy.settings, lb.strategy.responses))
        )
        return lb.to_dict(), text, True
    if not args.behavior:
        raise InputError("ineq eval needs --behavior")
    b = _load(args.behavior, Behavior.from_dict)
    try:
        value = inequality.evaluate(f, b)
    except ShapeError as exc:
        raise InputError(str(exc)) from None
    return {"value": str(value)}, f"I(P) = {value}", True


def cmd_demo(args):
    if args.name == "berkson":
        _, s = scm.berkson_demo()
        lines = ["B, T independent fair bits; C = B or T", "P(B,T):"]
        lines += [f"  B={b} T={t}: {p}" for (b, t), p in s.unconditioned.items()]
        lines.append("P(B,T | C=1):")
        lines += [f"  B={b} T={t}: {p}" for (b, t), p in s.conditioned.items()]
        lines += [
            f"dependence gap max|P(b,t)-P(b)P(t)|: {s.gap_unconditioned} unconditioned, {s.gap_conditioned} given C=1",
            f"cov(B,T): {s.covariance_unconditioned} unconditioned, {s.covariance_conditioned} given C=1",
            f"mutual information (bits): {s.mutual_information_unconditioned:.6f} unconditioned, "
            f"{s.mutual_information_conditioned:.6f} given C=1",
        ]
        return s.to_dict(), "\n".join(lines), True
    if args.name == "prbox":
        model = scm.gisin_model()
        rule = scm.no_rejection_rule(model.outcomes)
    else:
        model = scm.conservation_bell_model()
        rule = selection.parse_rule(scm.CONSERVATION_RULE, model.outcomes)
    functional = _load_functional(args.ineq) if args.ineq else None
    result, text, ok = _run_model(model, rule, functional)
    result["model"] = model.to_dict()
    result["rule"] = rule.source
    return result, f"rule: {rule.source}\n" + text, ok


def cmd_fuzz(args):
    if args.suite == "dsep":
        r = suites.dsep_fuzz(args.seed, graphs=args.count)
        result = {"graphs": r.graphs, "queries": r.queries, "mismatches": len(r.mismatches)}
        text = f"{r.graphs} random DAGs, {r.queries} queries, {len(r.mismatches)} disagreement(s)"
        return result, text, r.ok
    if args.suite == "soundness":
        r = suites.soundness_suite(args.seed, count=args.count)
        result = {"models": r.models, "certified": r.certified, "failures": len(r.failures)}
        text = f"{r.models} models, {r.certified} certified independencies, {len(r.failures)} failure(s)"
        return result, text, r.ok
    cases = suites.safety_suite(args.seed, count=args.count)
    bad = [c for c in cases if not c.safe or (c.chsh_postselected is not None and c.chsh_postselected > c.chsh_bound)]
    result = {
        "cases": len(cases),
        "nontrivial_rules": sum(c.nontrivial for c in cases),
        "chsh_checked": sum(c.chsh_postselected is not None for c in cases),
        "failures": len(bad),
    }
    text = (f"{len(cases)} local models with all-but-one rules ({result['nontrivial_rules']} nontrivial); "
            f"CHSH checked on {result['chsh_checked']}; {len(bad)} failure(s)")
    return result, text, not bad


def _jsonable(obj):
    if isinstance(obj, Fraction):
        return str(obj)
    raise TypeError(f"cannot serialise {type(obj).__name__}")


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--format", choices=("text", "json"), default="text")
    common.add_argument("--seed", type=int, default=suites.DEFAULT_SEED,
                        help=f"seed for randomised suites (default {suites.DEFAULT_SEED})")
    common.add_argument("--output", "-o", help="write the report here instead of stdout")
    common.add_argument("--strict", action="store_true", help="exit 1 on a negative verdict")

    parser = argparse.ArgumentParser(prog="bellpost", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("dsep", parents=[common], help="d-separation query with path diagnostics")
    p.add_argument("--graph", required=True)
    p.add_argument("--x", nargs="+", required=True)
    p.add_argument("--y", nargs="+", required=True)
    p.add_argument("--given", nargs="*", default=[])
    p.set_defaults(func=cmd_dsep)

    p = sub.add_parser("theorem", parents=[common], help="mechanised all-but-one safety proof")
    p.add_argument("--parties", type=int, required=True)
    p.add_argument("--check-necessity", action="store_true")
    p.set_defaults(func=cmd_theorem)

    p = sub.add_parser("rule", parents=[common], help="all-but-one check of a rule file")
    p.add_argument("--rule", required=True)
    p.add_argument("--support", help="override: 'full', 'conservation:N=..,total=..'")
    p.add_argument("--max-witnesses", type=int, default=selection.DEFAULT_WITNESS_CAP)
    p.set_defaults(func=cmd_rule)

    p = sub.add_parser("scm", help="finite-model runs")
    scm_sub = p.add_subparsers(dest="action", required=True)
    q = scm_sub.add_parser("run", parents=[common])
    q.add_argument("--model", required=True)
    q.add_argument("--rule", required=True)
    q.add_argument("--ineq", help="'chsh' or a functional JSON file")
    q.set_defaults(func=cmd_scm)

    p = sub.add_parser("ineq", help="Bell functionals")
    ineq_sub = p.add_subparsers(dest="action", required=True)
    for action in ("bound", "eval"):
        q = ineq_sub.add_parser(action, parents=[common])
        q.add_argument("--functional", required=True, help="'chsh' or a functional JSON file")
        q.add_argument("--behavior")
        q.add_argument("--cap", type=int, default=inequality.DEFAULT_STRATEGY_CAP)
        q.set_defaults(func=cmd_ineq)

    p = sub.add_parser("demo", parents=[common], help="canonical demonstrations")
    p.add_argument("name", choices=("berkson", "prbox", "conservation"))
    p.add_argument("--ineq", help="'chsh' or a functional JSON file")
    p.set_defaults(func=cmd_demo)

    p = sub.add_parser("fuzz", parents=[common], help="seeded property suites")
    p.add_argument("suite", choices=("dsep", "safety", "soundness"))
    p.add_argument("--count", type=int, default=100)
    p.set_defaults(func=cmd_fuzz)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    command = args.command if args.command not in ("scm", "ineq") else f"{args.command} {args.action}"
    try:
        result, text, ok = args.func(args)
    except InputError as exc:
        print(f"bellpost: error: {exc}", file=sys.stderr)
        return 2
    except ResourceError as exc:
        print(f"bellpost: error: {exc}", file=sys.stderr)
        return 2
    if args.format == "json":
        out = json.dumps({"schema_version": SCHEMA_VERSION, "command": command, "result": result},
                         indent=2, default=_jsonable)
    else:
        out = text
    if args.output:
        with open(args.output, "w", encoding="utf-8") as fh:
            fh.write(out + "\n")
    else:
        print(out)
    if args.strict and not ok:
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
