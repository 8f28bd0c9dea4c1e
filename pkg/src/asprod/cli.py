"""Command-line front end.

Subcommands: `check` runs the full three-tier decision per definition,
`measure` prints drift measures, `simulate` prints Monte Carlo reports,
`ppda` exports the translated automata, `solve` prints equation-system
solutions and head classifications.

Exit codes for `check`: 0 all ASP, 1 some definition is not ASP, 2 some
verdict is Unknown, 3 input errors.  JSON reports are byte-deterministic for
fixed inputs, flags and seed; wall-clock timings appear only in the human-
readable output.
"""

from __future__ import annotations

import argparse
import json
import sys
import time
from concurrent.futures import ThreadPoolExecutor
from fractions import Fraction
from typing import Optional

from .decide import (
    AnalyzerConfig,
    AspResult,
    ExactAnalysis,
    Verdict,
    decide_asp,
    smt_solver_from_env,
)
from .eqsys import (
    AlmostSureReturn,
    SubReturn,
    Unknown,
    build_system,
    classify_heads,
    clean,
    kleene_solve,
    newton_solve,
)
from .measure import measure
from .ppda import export, translate
from .semantics import McReport, monte_carlo, parse_policy
from .syntax import ParseError, parse_file
from .terms import Definition

EXIT_OK = 0
EXIT_NOT_ASP = 1
EXIT_UNKNOWN = 2
EXIT_INPUT_ERROR = 3

_RESULT_TEXT = {
    AspResult.ASP: "ASP",
    AspResult.NOT_ASP: "NotASP",
    AspResult.UNKNOWN: "Unknown",
}

_TIER_TEXT = {
    "measure": "tier 1 (measure)",
    "exact": "tier 2 (exact)",
    "statistical_only": "tier 3 (statistical only)",
}


def frac_str(x: Fraction) -> str:
    return f"{x.numerator}/{x.denominator}"


def _load(paths: list[str]) -> tuple[list[tuple[str, Definition]], bool]:
    """Parse every file; report errors but keep the definitions that parse."""
    defs: list[tuple[str, Definition]] = []
    had_error = False
    for path in paths:
        try:
            with open(path, encoding="utf-8") as handle:
                text = handle.read()
        except OSError as exc:
            print(f"{path}: error: {exc.strerror or exc}", file=sys.stderr)
            had_error = True
            continue
        try:
            for d in parse_file(text):
                defs.append((path, d))
        except ParseError as exc:
            print(f"{path}:{exc.line}:{exc.col}: error: {exc.message}", file=sys.stderr)
            had_error = True
    return defs, had_error


def _config_from_args(args) -> AnalyzerConfig:
    smt = getattr(args, "smt_solver", None) or smt_solver_from_env()
    policy = None
    if getattr(args, "tree_policy", None):
        policy = parse_policy(args.tree_policy)
    return AnalyzerConfig(
        epsilon=args.epsilon,
        max_iter=args.max_iter,
        mc_runs=args.mc_runs,
        mc_horizon=args.mc_horizon,
        seed=args.seed,
        run_tier3=not getattr(args, "no_tier3", False),
        force_tier3=getattr(args, "force_tier3", False),
        smt_solver=smt,
        tree_policy=policy,
    )


# ---------------------------------------------------------------------------
# JSON rendering


def _class_json(cls) -> dict:
    if isinstance(cls, AlmostSureReturn):
        return {"class": "almost_sure_return"}
    if isinstance(cls, SubReturn):
        cert = None if cls.certificate is None else [frac_str(c) for c in cls.certificate]
        return {"class": "sub_return", "certificate": cert}
    assert isinstance(cls, Unknown)
    return {
        "class": "unknown",
        "kleene_lower": cls.kleene_lower,
        "iterations": cls.iterations,
    }


def _tier2_json(t2: ExactAnalysis) -> dict:
    chain = t2.chain
    names = chain.state_names
    heads = []
    for (q, x) in sorted(t2.classes):
        entry = {"state": names[q], "symbol": x}
        entry.update(_class_json(t2.classes[(q, x)]))
        heads.append(entry)
    edges = sorted((q, t) for q, targets in chain.edges.items() for t in targets)
    return {
        "verdict": t2.buchi.value,
        "heads": heads,
        "chain": {
            "initial": names[chain.initial],
            "nodes": [names[q] for q in chain.nodes],
            "output_nodes": sorted(names[q] for q in chain.output_nodes),
            "edges": [[names[a], names[b]] for a, b in edges],
            "diverge_sub": sorted(names[q] for q in chain.diverge_sub),
            "diverge_unknown": sorted(names[q] for q in chain.diverge_unknown),
        },
    }


def _mc_json(mc: McReport) -> dict:
    return {
        "runs": mc.runs,
        "horizon": mc.horizon,
        "seed": mc.seed,
        "mean_rate": mc.mean_rate,
        "tail_silence": mc.tail_silence,
        "cum_slope": mc.cum_slope,
        "hint": mc.hint.value,
        "total_outputs": int(sum(mc.output_counts)),
    }


def _verdict_json(d: Definition, v: Verdict) -> dict:
    return {
        "name": d.name,
        "kind": d.kind.value,
        "measure": frac_str(v.measure),
        "tier1": v.tier1.value,
        "tier": v.tier.value,
        "verdict": v.result.value,
        "tier2": _tier2_json(v.tier2) if v.tier2 is not None else None,
        "tier3": _mc_json(v.mc) if v.mc is not None else None,
    }


# ---------------------------------------------------------------------------
# subcommands


def cmd_check(args) -> int:
    defs, had_error = _load(args.files)
    config = _config_from_args(args)

    def analyze(item):
        path, d = item
        start = time.perf_counter()
        verdict = decide_asp(d, config)
        return path, d, verdict, time.perf_counter() - start

    if args.jobs > 1:
        with ThreadPoolExecutor(max_workers=args.jobs) as pool:
            results = list(pool.map(analyze, defs))
    else:
        results = [analyze(item) for item in defs]

    if args.json:
        doc = {"definitions": [_verdict_json(d, v) for _, d, v, _ in results]}
        print(json.dumps(doc, sort_keys=True, indent=2))
    else:
        for _, d, v, elapsed in results:
            line = (
                f"{d.name}: {_RESULT_TEXT[v.result]}  "
                f"[{_TIER_TEXT[v.tier.value]}]  measure={v.measure}"
            )
            if v.tier2 is not None:
                line += f"  exact={v.tier2.buchi.value}"
            if v.mc is not None:
                line += f"  mc_hint={v.mc.hint.value}"
            line += f"  ({elapsed * 1000:.0f} ms)"
            print(line)

    if had_error:
        return EXIT_INPUT_ERROR
    outcomes = {v.result for _, _, v, _ in results}
    if AspResult.NOT_ASP in outcomes:
        return EXIT_NOT_ASP
    if AspResult.UNKNOWN in outcomes:
        return EXIT_UNKNOWN
    return EXIT_OK


def cmd_measure(args) -> int:
    defs, had_error = _load(args.files)
    for _, d in defs:
        print(f"{d.name} {measure(d)}")
    return EXIT_INPUT_ERROR if had_error else EXIT_OK


def cmd_simulate(args) -> int:
    defs, had_error = _load(args.files)
    policy = parse_policy(args.tree_policy) if args.tree_policy else None
    reports = []
    for _, d in defs:
        mc = monte_carlo(d, args.mc_runs, args.mc_horizon, args.seed, policy=policy)
        reports.append((d, mc))
    if args.json:
        doc = {"simulations": [dict(_mc_json(mc), name=d.name) for d, mc in reports]}
        print(json.dumps(doc, sort_keys=True, indent=2))
    else:
        for d, mc in reports:
            print(
                f"{d.name}: runs={mc.runs} horizon={mc.horizon} seed={mc.seed} "
                f"mean_rate={mc.mean_rate:.6f} tail_silence={mc.tail_silence:.4f} "
                f"slope={mc.cum_slope:.6f} hint={mc.hint.value}"
            )
    return EXIT_INPUT_ERROR if had_error else EXIT_OK


def cmd_ppda(args) -> int:
    defs, had_error = _load(args.files)
    if args.format == "json":
        doc = {d.name: json.loads(export(translate(d), "json")) for _, d in defs}
        print(json.dumps(doc, sort_keys=True, indent=2))
    else:
        for _, d in defs:
            sys.stdout.write(export(translate(d), args.format))
    return EXIT_INPUT_ERROR if had_error else EXIT_OK


def cmd_solve(args) -> int:
    defs, had_error = _load(args.files)
    smt = args.smt_solver or smt_solver_from_env()
    for _, d in defs:
        system = build_system(translate(d))
        cleaned, _ = clean(system)
        kleene, iters = kleene_solve(cleaned, args.epsilon, args.max_iter)
        newton = newton_solve(cleaned, args.epsilon)
        classes = classify_heads(
            cleaned, epsilon=args.epsilon, max_iter=args.max_iter, smt_solver=smt
        )
        print(
            f"{d.name}: {len(system.variables)} variables, "
            f"{len(cleaned.variables)} surviving (kleene: {iters} iterations)"
        )
        for i in range(len(cleaned.variables)):
            print(
                f"  {cleaned.var_name(i)} kleene={kleene[i]:.9f} "
                f"newton={newton[i]:.12f}"
            )
        names = cleaned.state_names
        for (q, x) in sorted(classes):
            cls = classes[(q, x)]
            if isinstance(cls, AlmostSureReturn):
                text = "AlmostSureReturn"
            elif isinstance(cls, SubReturn):
                if cls.certificate is None:
                    text = "SubReturn (no certificate)"
                elif not cls.certificate:
                    text = "SubReturn (return probability 0)"
                else:
                    total = sum(
                        (
                            c
                            for c, key in zip(cls.certificate, cleaned.variables)
                            if (key[0], key[1]) == (q, x)
                        ),
                        Fraction(0),
                    )
                    text = f"SubReturn (certificate sum {frac_str(total)})"
            else:
                text = f"Unknown (kleene lower {cls.kleene_lower:.6f})"
            print(f"  head ({names[q]}, {x}): {text}")
    return EXIT_INPUT_ERROR if had_error else EXIT_OK


# ---------------------------------------------------------------------------
# argument parsing


def _add_common(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("files", nargs="+", help="definition files")


def _add_numeric(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--epsilon", type=float, default=1e-9)
    parser.add_argument("--max-iter", type=int, default=100_000)


def _add_mc(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--mc-runs", type=int, default=200)
    parser.add_argument("--mc-horizon", type=int, default=10_000)
    parser.add_argument("--seed", type=int, default=0xA5F)
    parser.add_argument(
        "--tree-policy",
        default=None,
        help="'uniform', a period like 'LR', or 'prefix|period'",
    )


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="asprod",
        description="Almost-sure-productivity analyzer for probabilistic "
        "stream and tree definitions",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_check = sub.add_parser("check", help="decide ASP per definition")
    _add_common(p_check)
    _add_numeric(p_check)
    _add_mc(p_check)
    p_check.add_argument("--json", action="store_true")
    p_check.add_argument("--no-tier3", action="store_true")
    p_check.add_argument("--force-tier3", action="store_true")
    p_check.add_argument("--smt-solver", default=None)
    p_check.add_argument("--jobs", type=int, default=1)
    p_check.set_defaults(func=cmd_check)

    p_measure = sub.add_parser("measure", help="print drift measures")
    _add_common(p_measure)
    p_measure.set_defaults(func=cmd_measure)

    p_sim = sub.add_parser("simulate", help="Monte Carlo evidence")
    _add_common(p_sim)
    _add_mc(p_sim)
    p_sim.add_argument("--json", action="store_true")
    p_sim.set_defaults(func=cmd_simulate)

    p_ppda = sub.add_parser("ppda", help="export translated automata")
    _add_common(p_ppda)
    p_ppda.add_argument("--format", choices=("json", "graphviz"), default="json")
    p_ppda.set_defaults(func=cmd_ppda)

    p_solve = sub.add_parser("solve", help="equation-system solutions")
    _add_common(p_solve)
    _add_numeric(p_solve)
    p_solve.add_argument("--smt-solver", default=None)
    p_solve.set_defaults(func=cmd_solve)

    return parser


def main(argv: Optional[list[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
