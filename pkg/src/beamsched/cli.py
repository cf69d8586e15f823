"""Command-line interface.

Subcommands:

- calibrate: write a threshold table (n,k,r,beta) or, with a users sweep, a
  threshold curve (K,beta,rho_dB).
- simulate: run the configured sweep and write the metrics CSV.
- verify: run the self-check suites and write a JSON report; exits 1 when a
  suite fails.
- sweep-figs: write the four report CSVs and, when the optional figgen
  package is installed, render the figures next to them.

Exit codes: 0 success, 1 failed checks, 2 configuration errors.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import sys
from pathlib import Path

from beamsched import __version__
from beamsched.calibration import CalibrationError, calibrate_thresholds
from beamsched.config import CalibrationSettings, ConfigError, RunConfig, load_config
from beamsched.experiments import (
    K_GRID_DEFAULT,
    load_or_calibrate,
    run_all_figures,
    run_sweep,
    sidecar_payload,
    sweep_networks,
    write_outcome_log,
    write_sidecar,
    write_threshold_sweep_csv,
)
from beamsched.verifysuite import KNOWN_FAULTS, run_suites


def _progress(msg: str) -> None:
    print(msg, file=sys.stderr)


def _apply_overrides(run_cfg: RunConfig, args) -> RunConfig:
    net = run_cfg.network
    if getattr(args, "seed", None) is not None:
        att = run_cfg.attenuation_spec.materialize(net.M, net.K, net.Q, args.seed, index=0)
        net = net.replace(seed=args.seed, attenuation=att)
    cal = run_cfg.calibration
    if getattr(args, "method", None):
        cal = dataclasses.replace(cal, method=args.method)
    return dataclasses.replace(run_cfg, network=net, calibration=cal)


def cmd_calibrate(args) -> int:
    run_cfg = _apply_overrides(load_config(args.config), args)
    out = Path(args.out)
    if run_cfg.sweep.kind == "users":
        rows = []
        for cfg in sweep_networks(run_cfg):
            table = calibrate_thresholds(cfg, run_cfg.calibration)
            if not cfg.attenuation.is_homogeneous:
                raise ConfigError(
                    "a threshold curve needs a homogeneous attenuation profile; "
                    "run calibrate without [sweep] to get the full per-user table"
                )
            rows.append((cfg.K, table.min_value, cfg.rho_db))
        write_threshold_sweep_csv(out, rows)
    elif run_cfg.sweep.kind != "none":
        raise ConfigError("calibrate supports only a users sweep or a single point")
    else:
        cfg = run_cfg.network
        table = load_or_calibrate(cfg, run_cfg.calibration, args.beta_cache)
        table.to_csv(out)
    write_sidecar(out, sidecar_payload("calibrate", run_cfg.network, run_cfg, 0))
    print("wrote %s" % out)
    return 0


def cmd_simulate(args) -> int:
    run_cfg = _apply_overrides(load_config(args.config), args)
    summaries = run_sweep(
        run_cfg,
        args.out,
        trials=args.trials,
        workers=args.workers,
        cache_prefix=args.beta_cache,
        progress=None if args.quiet else _progress,
    )
    if args.outcome_log:
        if run_cfg.sweep.kind != "none":
            raise ConfigError("--outcome-log is limited to single-point runs")
        cfg = run_cfg.network
        n = args.trials if args.trials is not None else run_cfg.sweep.trials
        table = load_or_calibrate(cfg, run_cfg.calibration, args.beta_cache)
        write_outcome_log(args.outcome_log, cfg, table, n)
    warn = [s for s in summaries if s.regime_warning]
    if warn:
        print(
            "warning: %d point(s) have thresholds below 1; single-candidacy "
            "guarantees do not apply there" % len(warn),
            file=sys.stderr,
        )
    print("wrote %s (%d points)" % (args.out, len(summaries)))
    return 0


def cmd_verify(args) -> int:
    report = run_suites(seed=args.seed if args.seed is not None else 20260816,
                        quick=args.quick, inject_fault=args.inject_fault)
    text = json.dumps(report, indent=2, sort_keys=True)
    if args.out:
        Path(args.out).write_text(text + "\n")
        print("wrote %s" % args.out)
    else:
        print(text)
    for suite in report["suites"]:
        status = "pass" if suite["passed"] else "FAIL"
        print("%-24s %s  statistic=%.6g threshold=%.6g"
              % (suite["name"], status, suite["statistic"], suite["threshold"]),
              file=sys.stderr)
    return 0 if report["passed"] else 1


def cmd_sweep_figs(args) -> int:
    k_grid = K_GRID_DEFAULT
    if args.users:
        k_grid = tuple(int(x) for x in args.users.split(","))
    paths = run_all_figures(
        args.out,
        trials=args.trials if args.trials is not None else 2000,
        workers=args.workers,
        seed=args.seed if args.seed is not None else 20260816,
        k_grid=k_grid,
        only=args.only,
        progress=None if args.quiet else _progress,
    )
    for p in paths:
        print("wrote %s" % p)
    if args.render:
        try:
            from figgen.render import render_report_dir
        except ImportError:
            print("figgen is not installed; skipping figure rendering", file=sys.stderr)
            return 0
        for fig_path in render_report_dir(args.out):
            print("wrote %s" % fig_path)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="beamsched",
        description="Monte-Carlo simulator for threshold-fed random beamforming",
    )
    parser.add_argument("--version", action="version", version="beamsched " + __version__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("calibrate", help="write a threshold table or curve")
    p.add_argument("--config", required=True, help="TOML run configuration")
    p.add_argument("--out", default="thresholds.csv")
    p.add_argument("--seed", type=int, default=None, help="override the config seed")
    p.add_argument("--method", choices=["auto", "empirical", "closed-form"], default=None)
    p.add_argument("--beta-cache", default=None, help="path prefix for cached threshold tables")
    p.set_defaults(func=cmd_calibrate)

    p = sub.add_parser("simulate", help="run the configured sweep")
    p.add_argument("--config", required=True)
    p.add_argument("--out", default="metrics.csv")
    p.add_argument("--trials", type=int, default=None, help="override sweep.trials")
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--method", choices=["auto", "empirical", "closed-form"], default=None)
    p.add_argument("--beta-cache", default=None)
    p.add_argument("--outcome-log", default=None, help="JSON-lines per-trial log (single point)")
    p.add_argument("--quiet", action="store_true")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("verify", help="run the self-check suites")
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--out", default=None, help="write the JSON report here")
    p.add_argument("--quick", action="store_true", help="smaller sample sizes")
    p.add_argument("--inject-fault", choices=list(KNOWN_FAULTS), default=None,
                   help="deliberately break a reference to prove failures are caught")
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("sweep-figs", help="write the report CSVs and figures")
    p.add_argument("--out", default="figures")
    p.add_argument("--trials", type=int, default=None)
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--only", choices=["thresholds", "rate", "feedback", "clustering"], default=None)
    p.add_argument("--users", default=None, help="comma-separated user grid override")
    p.add_argument("--render", action=argparse.BooleanOptionalAction, default=True)
    p.add_argument("--quiet", action="store_true")
    p.set_defaults(func=cmd_sweep_figs)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ConfigError, CalibrationError) as exc:
        print("error: %s" % exc, file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
