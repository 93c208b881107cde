"""Command-line interface.

Subcommands: certify, recertify, compare, plan, zeta, gamma-sweep. Each takes
a JSON config (--config) whose keys match ExperimentConfig; flags override
config values. Tabular results are CSV; --json mirrors them as JSON lines.
"""

from __future__ import annotations

import argparse
import sys

import numpy as np

from .errors import SmoothcertError
from .harness import (
    DEFAULT_GAMMA_GRID,
    ExperimentConfig,
    _write_rows,
    aoc_speedup,
    run_certify,
    run_compare,
    run_gamma_sweep,
    run_recertify,
    run_zeta_report,
    write_outcome_csv,
)
from .intervals import BoundMethod, ConfidenceBoundSpec
from .planner import PlanQuery, Side, required_samples, sample_curve


def _add_common(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--config", required=True, help="JSON experiment config")
    parser.add_argument("--cache", help="certification cache path")
    parser.add_argument("--seed", type=int, help="master seed override")
    parser.add_argument("--sigma", type=float, help="smoothing noise scale override")
    parser.add_argument("--alpha", type=float, help="original confidence override")
    parser.add_argument("--alpha-zeta", type=float, help="disagreement confidence override")
    parser.add_argument("--gamma", type=float, help="reuse threshold override")
    parser.add_argument("--workers", type=int, help="worker pool size (default: cores)")
    parser.add_argument("--output", help="result file (CSV unless --json)")
    parser.add_argument("--json", action="store_true", help="write JSON lines instead of CSV")


def _load_config(args) -> ExperimentConfig:
    return ExperimentConfig.from_file(
        args.config,
        cache_path=args.cache,
        seed=args.seed,
        sigma=args.sigma,
        alpha=args.alpha,
        alpha_zeta=getattr(args, "alpha_zeta", None),
        gamma=args.gamma,
        workers=args.workers,
        output=args.output,
        np_fractions=_parse_floats(getattr(args, "np_fractions", None)),
    )


def _parse_floats(text: str | None):
    if text is None:
        return None
    return tuple(float(tok) for tok in text.split(",") if tok)


def _cmd_certify(args) -> int:
    config = _load_config(args)
    run = run_certify(config)
    print(f"certified {sum(o.certified for o in run.outcomes)}/{len(run.outcomes)} inputs, ACR {run.acr:.6g}")
    if config.cache_path:
        print(f"cache written to {config.cache_path}")
    for index, message in run.failures:
        print(f"input {index} failed: {message}", file=sys.stderr)
    return 1 if run.failures else 0


def _cmd_recertify(args) -> int:
    config = _load_config(args)
    run = run_recertify(config, n_p=args.np)
    if config.output:
        write_outcome_csv(config.output, run, args.json)
    certified = sum(o.certified for o in run.outcomes)
    print(
        f"recertified {certified}/{len(run.outcomes)} inputs, ACR {run.acr:.6g}, "
        f"mean {np.mean([o.elapsed for o in run.outcomes]) * 1e3:.3g} ms/input"
    )
    return 0


def _cmd_compare(args) -> int:
    config = _load_config(args)
    rows = run_compare(config)
    if config.output:
        _write_rows(config.output, [r.as_dict() for r in rows], args.json)
    speedup = aoc_speedup(rows)
    for row in rows:
        print(
            f"n_p={row.n_p}: ACR {row.acr_irs:.6g} vs {row.acr_baseline:.6g}, "
            f"time {row.mean_time_irs * 1e3:.3g} vs {row.mean_time_baseline * 1e3:.3g} ms/input"
        )
    if speedup is None:
        print("speedup: incomparable (ACR ranges do not overlap)")
    else:
        print(f"speedup (area ratio over common ACR range): {speedup:.3f}x")
    return 0


def _cmd_plan(args) -> int:
    method = BoundMethod(args.method)
    side = Side(args.side)
    chis = _parse_floats(args.chi)
    if args.p is not None:
        spec = ConfidenceBoundSpec(method=method, alpha=args.alpha)
        for chi in chis:
            result = required_samples(PlanQuery(p_true=args.p, chi=chi, spec=spec, side=side))
            print(f"method={method.value} p={args.p} chi={chi}: n={result.n_required}")
        return 0
    lo, hi, step = (float(t) for t in args.p_grid.split(":"))
    grid = []
    p = lo
    while p <= hi + 1e-12:
        grid.append(round(p, 10))
        p += step
    rows = sample_curve(method, list(chis), args.alpha, grid, side)
    if args.output:
        _write_rows(args.output, rows, args.json)
        print(f"{len(rows)} rows written to {args.output}")
    else:
        for row in rows:
            print(",".join(str(row[k]) for k in ("method", "alpha", "chi", "p", "n_required")))
    return 0


def _cmd_zeta(args) -> int:
    config = _load_config(args)
    rows = run_zeta_report(config, n_p=args.np)
    if config.output:
        _write_rows(config.output, rows, args.json)
    zetas = [float(r["zeta"]) for r in rows]
    if zetas:
        print(f"mean zeta over {len(zetas)} inputs at n_p={args.np}: {sum(zetas)/len(zetas):.6g}")
    else:
        print("no certified records in cache")
    return 0


def _cmd_gamma_sweep(args) -> int:
    config = _load_config(args)
    gammas = _parse_floats(args.gammas) or DEFAULT_GAMMA_GRID
    rows = run_gamma_sweep(config, gammas, n_p=args.np)
    if config.output:
        _write_rows(config.output, rows, args.json)
    for row in rows:
        print(f"gamma={row['gamma']}: ACR {row['acr']}")
    return 0


def main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(
        prog="smoothcert",
        description="Randomized-smoothing certification with incremental recertification",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("certify", help="certify an input set and write the cache")
    _add_common(p)
    p.set_defaults(fn=_cmd_certify)

    p = sub.add_parser("recertify", help="recertify a modified classifier from cache")
    _add_common(p)
    p.add_argument("--np", type=int, help="sample budget per input")
    p.add_argument("--np-fractions", help="comma-separated fractions of n")
    p.set_defaults(fn=_cmd_recertify)

    p = sub.add_parser("compare", help="incremental vs from-scratch comparison sweep")
    _add_common(p)
    p.add_argument("--np-fractions", help="comma-separated fractions of n")
    p.set_defaults(fn=_cmd_compare)

    p = sub.add_parser("plan", help="sample counts needed for a target error")
    p.add_argument("--method", default="clopper-pearson",
                   choices=[m.value for m in BoundMethod])
    p.add_argument("--alpha", type=float, default=0.01)
    p.add_argument("--chi", default="0.005", help="comma-separated target errors")
    p.add_argument("--side", default="lower", choices=[s.value for s in Side])
    p.add_argument("--p", type=float, help="single hypothesized proportion")
    p.add_argument("--p-grid", default="0.02:0.98:0.02", help="lo:hi:step grid")
    p.add_argument("--output", help="CSV output path")
    p.add_argument("--json", action="store_true")
    p.set_defaults(fn=_cmd_plan)

    p = sub.add_parser("zeta", help="standalone disagreement-bound report")
    _add_common(p)
    p.add_argument("--np", type=int, default=1000, help="samples per estimate")
    p.set_defaults(fn=_cmd_zeta)

    p = sub.add_parser("gamma-sweep", help="ACR across reuse thresholds")
    _add_common(p)
    p.add_argument("--gammas", help="comma-separated thresholds")
    p.add_argument("--np", type=int, help="sample budget per input")
    p.set_defaults(fn=_cmd_gamma_sweep)

    args = parser.parse_args(argv)
    try:
        return args.fn(args)
    except SmoothcertError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
