"""Command-line entry points: simulation studies, scenario tables, MTD
curves, and the trial service.

All outputs are deterministic given --seed: JSON is written with sorted
keys and floats rounded to 6 significant digits, so study outputs can be
compared byte-for-byte.
"""

from __future__ import annotations

import argparse
import csv
import json
import math
import os
import sys

import numpy as np

from .model import DoseBounds, ModelParams, mtd_curve
from .inference import McmcConfig
from .engine import DesignConfig
from .simulation import Scenario, WorkingModel, make_grid_scenario, run_study

EXIT_USAGE = 2


def _sig6(value):
    """Round floats to 6 significant digits for stable output files."""
    if isinstance(value, float):
        if math.isnan(value):
            return None
        if value == 0.0 or not math.isfinite(value):
            return value
        return float(f"{value:.6g}")
    if isinstance(value, dict):
        return {k: _sig6(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_sig6(v) for v in value]
    return value


def _write_json(path: str, obj) -> None:
    with open(path, "w") as fh:
        json.dump(_sig6(obj), fh, sort_keys=True, indent=2)
        fh.write("\n")


def _fail(message: str) -> None:
    print(f"error: {message}", file=sys.stderr)
    sys.exit(EXIT_USAGE)


def cmd_simulate(args) -> None:
    if not os.path.exists(args.scenario):
        _fail(f"scenario file not found: {args.scenario}")
    try:
        scenario = Scenario.from_json(args.scenario)
    except (ValueError, KeyError, json.JSONDecodeError) as exc:
        _fail(f"bad scenario file: {exc}")
    if args.eta is not None:
        from dataclasses import replace
        scenario = replace(scenario, eta_true=args.eta)
    cfg_kwargs = dict(theta=args.theta, n_max=args.n_max,
                      cap_fraction=args.cap_fraction,
                      mcmc=McmcConfig(chain_length=args.chain_length,
                                      burn_in=args.burn_in))
    from .simulation import ProbTable
    if isinstance(scenario.truth, ProbTable):
        cfg_kwargs["x_grid"] = scenario.truth.x_levels
        cfg_kwargs["y_grid"] = scenario.truth.y_levels
    elif args.levels:
        table = make_grid_scenario(scenario.truth, args.levels,
                                   args.levels2 or args.levels)
        cfg_kwargs["x_grid"] = table.x_levels
        cfg_kwargs["y_grid"] = table.y_levels
    try:
        config = DesignConfig(**cfg_kwargs)
    except ValueError as exc:
        _fail(str(exc))
    os.makedirs(args.out, exist_ok=True)
    oc, results = run_study(scenario, config, m=args.replicates,
                            root_seed=args.seed, n_jobs=args.threads)
    _write_json(os.path.join(args.out, "operating_characteristics.json"),
                {"scenario": scenario.to_dict(), "seed": args.seed,
                 **oc.to_dict()})
    _write_safety_csv(os.path.join(args.out, "safety.csv"), scenario, oc)
    if oc.discrete_selection:
        _write_selection_csv(os.path.join(args.out, "selection.csv"),
                             scenario, oc)
    if args.traces:
        _write_json(os.path.join(args.out, "trials.json"), [
            {"n_treated": r.n_treated, "n_dlt": r.n_dlt,
             "stopped": r.stopped, "doses": [list(d) for d in r.doses],
             "recommended": [list(c) for c in r.estimate.combinations]
             if r.estimate.kind == "set" else None}
            for r in results])
    print(f"m={oc.m} avg%DLT={oc.avg_pct_dlt:.2f} "
          f">theta+.05={oc.pct_rate_gt_theta_p05:.2f}% "
          f">theta+.10={oc.pct_rate_gt_theta_p10:.2f}% "
          f"stopped={oc.pct_stopped:.2f}%")


def _write_safety_csv(path: str, scenario: Scenario, oc) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["scenario", "eta", "avg_pct_dlt",
                    "pct_rate_gt_theta_p05", "pct_rate_gt_theta_p10",
                    "pct_stopped"])
        w.writerow([scenario.label, f"{scenario.eta_true:.6g}",
                    f"{oc.avg_pct_dlt:.6g}",
                    f"{oc.pct_rate_gt_theta_p05:.6g}",
                    f"{oc.pct_rate_gt_theta_p10:.6g}",
                    f"{oc.pct_stopped:.6g}"])


def _write_selection_csv(path: str, scenario: Scenario, oc) -> None:
    sel = oc.discrete_selection
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["scenario", "eta", "pct_ge_25", "pct_ge_50",
                    "pct_ge_75", "pct_eq_100"])
        w.writerow([scenario.label, f"{scenario.eta_true:.6g}",
                    f"{sel['pct_ge_25']:.6g}", f"{sel['pct_ge_50']:.6g}",
                    f"{sel['pct_ge_75']:.6g}", f"{sel['pct_eq_100']:.6g}"])


def cmd_scenario_table(args) -> None:
    try:
        wm = WorkingModel(args.alpha, args.beta, args.gamma)
        table = make_grid_scenario(wm, args.levels,
                                   args.levels2 or args.levels)
    except ValueError as exc:
        _fail(str(exc))
    writer = csv.writer(sys.stdout if args.out is None
                        else open(args.out, "w", newline=""))
    writer.writerow(["x\\y"] + [f"{y:.6g}" for y in table.y_levels])
    for i, x in enumerate(table.x_levels):
        writer.writerow([f"{x:.6g}"] + [f"{p:.6g}" for p in table.probs[i]])


def cmd_mtd_curve(args) -> None:
    try:
        if not 0.0 < args.theta < 1.0:
            raise ValueError("theta must lie in (0, 1)")
        params = ModelParams(args.alpha, args.beta, args.gamma)
        curve = mtd_curve(params, args.theta, args.grid)
    except ValueError as exc:
        _fail(str(exc))
    writer = csv.writer(sys.stdout if args.out is None
                        else open(args.out, "w", newline=""))
    writer.writerow(["x", "y", "in_domain"])
    for x, y in zip(curve.xs, curve.ys):
        if math.isnan(y):
            writer.writerow([f"{x:.6g}", "", 0])
        else:
            writer.writerow([f"{x:.6g}", f"{y:.6g}", 1])


def cmd_serve(args) -> None:
    import uvicorn
    from .service import TrialStore, create_app
    store = TrialStore(args.data_dir)
    app = create_app(store)
    try:
        uvicorn.run(app, host=args.host, port=args.port, log_level="warning")
    except SystemExit:
        raise
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        sys.exit(1)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="combotox",
        description="Two-drug combination dose finding with partial "
                    "toxicity attribution")
    sub = parser.add_subparsers(dest="command", required=True)

    sim = sub.add_parser("simulate", help="run a replicated simulation study")
    sim.add_argument("--scenario", required=True, help="scenario JSON file")
    sim.add_argument("--eta", type=float, default=None,
                     help="override the scenario's attributable fraction")
    sim.add_argument("--replicates", type=int, default=200)
    sim.add_argument("--seed", type=int, default=0)
    sim.add_argument("--out", required=True, help="output directory")
    sim.add_argument("--theta", type=float, default=0.3)
    sim.add_argument("--n-max", type=int, default=40)
    sim.add_argument("--cap-fraction", type=float, default=0.2)
    sim.add_argument("--chain-length", type=int, default=12000)
    sim.add_argument("--burn-in", type=int, default=2000)
    sim.add_argument("--levels", type=int, default=None,
                     help="discrete levels per drug (working-model scenarios)")
    sim.add_argument("--levels2", type=int, default=None,
                     help="discrete levels for the second drug")
    sim.add_argument("--threads", type=int, default=1)
    sim.add_argument("--traces", action="store_true",
                     help="also write per-trial traces")
    sim.set_defaults(func=cmd_simulate)

    tab = sub.add_parser("scenario-table",
                         help="print a working-model probability grid")
    tab.add_argument("--alpha", type=float, required=True)
    tab.add_argument("--beta", type=float, required=True)
    tab.add_argument("--gamma", type=float, required=True)
    tab.add_argument("--levels", type=int, default=4)
    tab.add_argument("--levels2", type=int, default=None)
    tab.add_argument("--out", default=None)
    tab.set_defaults(func=cmd_scenario_table)

    cur = sub.add_parser("mtd-curve", help="sample the MTD contour")
    cur.add_argument("--alpha", type=float, required=True)
    cur.add_argument("--beta", type=float, required=True)
    cur.add_argument("--gamma", type=float, required=True)
    cur.add_argument("--theta", type=float, default=0.3)
    cur.add_argument("--grid", type=int, default=101)
    cur.add_argument("--out", default=None)
    cur.set_defaults(func=cmd_mtd_curve)

    srv = sub.add_parser("serve", help="run the trial-conduct service")
    srv.add_argument("--host", default="127.0.0.1")
    srv.add_argument("--port", type=int, default=8080)
    srv.add_argument("--data-dir",
                     default=os.environ.get("COMBOTOX_DATA_DIR", "./trials"))
    srv.set_defaults(func=cmd_serve)
    return parser


def main(argv: list[str] | None = None) -> None:
    parser = build_parser()
    args = parser.parse_args(argv)
    args.func(args)


if __name__ == "__main__":
    main()
