"""Sweep drivers and file output.

Output formats are part of the tool's contract:

- metrics CSV: one row per sweep point, CRLF line endings, header
  M,Q,N_t,N_r,K,rho_dB,mean_sum_rate,sum_rate_se,mean_fb_bits,fb_bits_se,
  chisq_p,ref_curve,lower_bound,trials,beta_min,regime_warning.
- threshold-sweep CSV: header K,beta,rho_dB.
- threshold-table CSV: header n,k,r,beta.
- every CSV gets a JSON sidecar <name>.meta.json with the tool version, the
  resolved configuration, and its hash.  No timestamps: reruns must be
  byte-identical, whatever the worker count.
- optional JSON-lines outcome log: one object per trial.

Floats are written with repr(), which round-trips exactly.
"""

from __future__ import annotations

import csv
import hashlib
import json
import multiprocessing
import sys
from pathlib import Path

import numpy as np

from beamsched import __version__
from beamsched.calibration import BetaTable, calibrate_thresholds
from beamsched.config import (
    DOMAIN_ANALYSIS,
    CalibrationSettings,
    ConfigError,
    NetworkConfig,
    RunConfig,
    make_stream,
)
from beamsched.metrics import PointSummary, fill_reference_curve
from beamsched.orderstats import rate_bounds
from beamsched.scheduler import TrialBatchStats, run_round, run_trials

METRICS_COLUMNS = [
    "M", "Q", "N_t", "N_r", "K", "rho_dB",
    "mean_sum_rate", "sum_rate_se", "mean_fb_bits", "fb_bits_se",
    "chisq_p", "ref_curve", "lower_bound",
    "trials", "beta_min", "regime_warning",
]

K_GRID_DEFAULT = (10, 31, 100, 316, 1000, 3162, 10000)
USERS_GRID_CLUSTERING = (60, 120, 240, 480, 960)


def _fmt(value) -> str:
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    return repr(float(value))


def _write_csv(path: Path, header: list[str], rows: list[list]) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\r\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow([_fmt(v) for v in row])


def write_sidecar(csv_path: Path, payload: dict) -> Path:
    meta = Path(str(csv_path) + ".meta.json")
    meta.write_text(json.dumps(payload, sort_keys=True, indent=2) + "\n")
    return meta


def sidecar_payload(command: str, cfg: NetworkConfig, run_cfg: RunConfig | None, trials: int) -> dict:
    payload = {
        "tool": "beamsched",
        "version": __version__,
        "command": command,
        "config_hash": cfg.config_hash(),
        "network": cfg.canonical_dict(),
        "trials": trials,
    }
    if run_cfg is not None:
        payload["calibration"] = {
            "method": run_cfg.calibration.method,
            "realizations": run_cfg.calibration.realizations,
            "tail_target": run_cfg.calibration.tail_target,
        }
        payload["sweep"] = {
            "kind": run_cfg.sweep.kind,
            "users": list(run_cfg.sweep.users),
            "rho_db": list(run_cfg.sweep.rho_db),
            "clusters": [list(p) for p in run_cfg.sweep.clusters],
            "total_users": run_cfg.sweep.total_users,
        }
    return payload


def write_metrics_csv(path: str | Path, summaries: list[PointSummary]) -> Path:
    rows = []
    for s in summaries:
        rows.append([
            s.M, s.Q, s.N_t, s.N_r, s.K, s.rho_db,
            s.mean_sum_rate, s.sum_rate_se, s.mean_fb_bits, s.fb_bits_se,
            s.chisq_p, s.ref_curve, s.lower_bound,
            s.trials, s.beta_min, s.regime_warning,
        ])
    path = Path(path)
    _write_csv(path, METRICS_COLUMNS, rows)
    return path


def write_threshold_sweep_csv(path: str | Path, rows: list[tuple[int, float, float]]) -> Path:
    path = Path(path)
    _write_csv(path, ["K", "beta", "rho_dB"], rows)
    return path


def sweep_networks(run_cfg: RunConfig) -> list[NetworkConfig]:
    """Expand the sweep section into concrete network configs, in order."""
    base = run_cfg.network
    sweep = run_cfg.sweep
    spec = run_cfg.attenuation_spec
    if sweep.kind == "none":
        return [base]
    nets = []
    if sweep.kind == "users":
        for idx, k in enumerate(sweep.users):
            att = spec.materialize(base.M, int(k), base.Q, base.seed, index=idx)
            nets.append(base.replace(K=int(k), attenuation=att))
    elif sweep.kind == "rho_db":
        for db in sweep.rho_db:
            nets.append(base.replace(rho=float(10.0 ** (db / 10.0))))
    else:
        for idx, (m, q) in enumerate(sweep.clusters):
            if sweep.total_users % m:
                raise ConfigError(
                    "sweep.total_users=%d not divisible by clusters M=%d" % (sweep.total_users, m)
                )
            k = sweep.total_users // m
            att = spec.materialize(m, k, q, base.seed, index=idx)
            nets.append(base.replace(M=m, Q=q, K=k, attenuation=att))
    return nets


# ---------------------------------------------------------------------------
# Threshold cache

def threshold_cache_key(cfg: NetworkConfig, settings: CalibrationSettings) -> str:
    blob = json.dumps(
        {
            "network": cfg.canonical_dict(),
            "method": settings.method,
            "realizations": settings.realizations,
            "tail_target": settings.tail_target,
        },
        sort_keys=True,
    ).encode()
    return hashlib.sha256(blob).hexdigest()[:16]


def load_or_calibrate(
    cfg: NetworkConfig,
    settings: CalibrationSettings,
    cache_prefix: str | None = None,
) -> BetaTable:
    """Calibrate, reusing a cached table when one matches this exact setup."""
    if not cache_prefix:
        return calibrate_thresholds(cfg, settings)
    key = threshold_cache_key(cfg, settings)
    path = Path("%s-%s.csv" % (cache_prefix, key))
    if path.exists():
        return BetaTable.from_csv(path, target=cfg.calibration_target, method="cache")
    table = calibrate_thresholds(cfg, settings)
    path.parent.mkdir(parents=True, exist_ok=True)
    table.to_csv(path)
    return table


# ---------------------------------------------------------------------------
# Trial execution

def _pool_job(args) -> TrialBatchStats:
    cfg, table_values, target, method, n, start = args
    table = BetaTable(values=table_values, target=target, method=method)
    return run_trials(cfg, table, n, start_trial=start)


def run_point_trials(
    cfg: NetworkConfig, thresholds: BetaTable, n_trials: int, workers: int = 1
) -> TrialBatchStats:
    """Run a point's trials, optionally across processes.

    Trials are split into contiguous index ranges and merged back in trial
    order; per-trial streams make the result identical for any worker count.
    """
    if workers <= 1 or n_trials < 2 * workers:
        return run_trials(cfg, thresholds, n_trials)
    bounds = np.linspace(0, n_trials, workers + 1).astype(int)
    jobs = [
        (cfg, thresholds.values, thresholds.target, thresholds.method,
         int(b - a), int(a))
        for a, b in zip(bounds[:-1], bounds[1:])
        if b > a
    ]
    ctx = multiprocessing.get_context("fork")
    with ctx.Pool(processes=workers) as pool:
        parts = pool.map(_pool_job, jobs)
    return TrialBatchStats.merge(parts)


def evaluate_point(
    cfg: NetworkConfig,
    settings: CalibrationSettings,
    n_trials: int,
    workers: int = 1,
    cache_prefix: str | None = None,
    point_index: int = 0,
    bound_samples: int = 20000,
) -> tuple[PointSummary, BetaTable]:
    """Calibrate, simulate, and summarize one sweep point."""
    thresholds = load_or_calibrate(cfg, settings, cache_prefix)
    batch = run_point_trials(cfg, thresholds, n_trials, workers)
    rng = make_stream(cfg.seed, DOMAIN_ANALYSIS, point_index)
    lower = 0.0
    for n in range(cfg.M):
        lower += rate_bounds(cfg, n, bound_samples, rng).lower
    summary = PointSummary.from_batch(cfg, batch, thresholds.min_value, lower)
    return summary, thresholds


def run_sweep(
    run_cfg: RunConfig,
    out_csv: str | Path,
    trials: int | None = None,
    workers: int = 1,
    cache_prefix: str | None = None,
    progress=None,
) -> list[PointSummary]:
    """Run every sweep point and write the metrics CSV plus sidecar."""
    nets = sweep_networks(run_cfg)
    n_trials = trials if trials is not None else run_cfg.sweep.trials
    summaries = []
    for idx, cfg in enumerate(nets):
        summary, _ = evaluate_point(
            cfg, run_cfg.calibration, n_trials, workers,
            cache_prefix=cache_prefix, point_index=idx,
        )
        summaries.append(summary)
        if progress:
            progress(
                "point %d/%d: M=%d Q=%d N_t=%d K=%d rho=%.1f dB rate=%.3f fb=%.2f"
                % (idx + 1, len(nets), cfg.M, cfg.Q, cfg.N_t, cfg.K,
                   cfg.rho_db, summary.mean_sum_rate, summary.mean_fb_bits)
            )
    fill_reference_curve(summaries)
    out_csv = Path(out_csv)
    write_metrics_csv(out_csv, summaries)
    write_sidecar(out_csv, sidecar_payload("simulate", run_cfg.network, run_cfg, n_trials))
    return summaries


def write_outcome_log(
    path: str | Path, cfg: NetworkConfig, thresholds: BetaTable, n_trials: int
) -> Path:
    """JSON-lines log: one object per trial with every served beam."""
    path = Path(path)
    with open(path, "w") as fh:
        for t in range(n_trials):
            out = run_round(cfg, thresholds, t)
            clusters = []
            for n in range(cfg.M):
                beams = []
                for b in range(cfg.beams_per_cluster):
                    if out.assigned_user[n, b] >= 0:
                        beams.append({
                            "beam": int(b),
                            "user": int(out.assigned_user[n, b]),
                            "antenna": int(out.assigned_antenna[n, b]),
                            "sinr": float(out.served_sinr[n, b]),
                            "rate": float(out.served_rate[n, b]),
                        })
                clusters.append({
                    "cluster": int(n),
                    "messages": int(out.messages[n]),
                    "feedback_bits": int(out.feedback_bits[n]),
                    "beams": beams,
                })
            rec = {"trial": int(t), "sum_rate": out.sum_rate, "clusters": clusters}
            fh.write(json.dumps(rec, sort_keys=True, separators=(",", ":")) + "\n")
    return path


# ---------------------------------------------------------------------------
# Report figures (written by `beamsched sweep-figs`)

def _homogeneous_cfg(M, Q, N_t, N_r, K, rho_db, seed) -> NetworkConfig:
    from beamsched.config import AttenuationProfile

    return NetworkConfig(
        M=M, Q=Q, N_t=N_t, N_r=N_r, K=K,
        rho=float(10.0 ** (rho_db / 10.0)),
        attenuation=AttenuationProfile.homogeneous(M, K, Q),
        seed=seed,
    )


def sweep_threshold_figure(out_dir: Path, seed: int, k_grid=K_GRID_DEFAULT) -> Path:
    """Threshold vs users at several SNRs (exact quantiles, no trials)."""
    rows = []
    for rho_db in (0.0, 5.0, 10.0):
        for k in k_grid:
            cfg = _homogeneous_cfg(3, 2, 2, 1, int(k), rho_db, seed)
            table = calibrate_thresholds(cfg, CalibrationSettings(method="closed-form"))
            rows.append((int(k), table.min_value, rho_db))
    path = Path(out_dir) / "thresholds.csv"
    write_threshold_sweep_csv(path, rows)
    write_sidecar(path, {
        "tool": "beamsched", "version": __version__, "command": "sweep-figs",
        "figure": "thresholds", "M": 3, "Q": 2, "N_t": 2, "N_r": 1,
        "rho_dB": [0.0, 5.0, 10.0], "K_grid": [int(k) for k in k_grid],
    })
    return path


def _figure_sweep(
    out_name: str,
    configs: list[NetworkConfig],
    trials: int,
    workers: int,
    out_dir: Path,
    progress=None,
) -> Path:
    summaries = []
    for idx, cfg in enumerate(configs):
        summary, _ = evaluate_point(
            cfg, CalibrationSettings(method="auto"), trials, workers, point_index=idx
        )
        summaries.append(summary)
        if progress:
            progress("%s %d/%d: M=%d Q=%d N_t=%d K=%d rate=%.3f fb=%.2f" % (
                out_name, idx + 1, len(configs), cfg.M, cfg.Q, cfg.N_t, cfg.K,
                summary.mean_sum_rate, summary.mean_fb_bits))
    fill_reference_curve(summaries)
    path = Path(out_dir) / out_name
    write_metrics_csv(path, summaries)
    write_sidecar(path, {
        "tool": "beamsched", "version": __version__, "command": "sweep-figs",
        "figure": out_name.removesuffix(".csv"), "trials": trials,
        "points": [s.K for s in summaries],
    })
    return path


def sweep_rate_figure(out_dir, trials, workers, seed, k_grid=K_GRID_DEFAULT, progress=None) -> Path:
    configs = [
        _homogeneous_cfg(M, 2, N_t, 1, int(k), 10.0, seed)
        for (M, N_t) in ((2, 3), (2, 2), (1, 3), (1, 2))
        for k in k_grid
    ]
    return _figure_sweep("rate_vs_users.csv", configs, trials, workers, Path(out_dir), progress)


def sweep_feedback_figure(out_dir, trials, workers, seed, k_grid=K_GRID_DEFAULT, progress=None) -> Path:
    configs = [
        _homogeneous_cfg(1, Q, N_t, 1, int(k), 10.0, seed)
        for (Q, N_t) in ((2, 4), (2, 3), (2, 2), (1, 3), (1, 2))
        for k in k_grid
    ]
    return _figure_sweep("feedback_vs_users.csv", configs, trials, workers, Path(out_dir), progress)


def sweep_clustering_figure(
    out_dir, trials, workers, seed, users_grid=USERS_GRID_CLUSTERING, progress=None
) -> Path:
    configs = []
    for n_t in (2, 4):
        for (m, q) in ((6, 1), (3, 2), (2, 3), (1, 6)):
            for total in users_grid:
                if total % m:
                    raise ConfigError("clustering grid user count %d not divisible by %d" % (total, m))
                configs.append(_homogeneous_cfg(m, q, n_t, 1, total // m, 10.0, seed))
    return _figure_sweep("clustering.csv", configs, trials, workers, Path(out_dir), progress)


def run_all_figures(
    out_dir: str | Path,
    trials: int = 2000,
    workers: int = 1,
    seed: int = 20260816,
    k_grid=K_GRID_DEFAULT,
    users_grid=USERS_GRID_CLUSTERING,
    only: str | None = None,
    progress=None,
) -> list[Path]:
    """Write the four report CSVs (threshold, rate, feedback, clustering)."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    paths = []
    if only in (None, "thresholds"):
        paths.append(sweep_threshold_figure(out, seed, k_grid))
    if only in (None, "rate"):
        paths.append(sweep_rate_figure(out, trials, workers, seed, k_grid, progress))
    if only in (None, "feedback"):
        paths.append(sweep_feedback_figure(out, trials, workers, seed, k_grid, progress))
    if only in (None, "clustering"):
        paths.append(sweep_clustering_figure(out, trials, workers, seed, users_grid, progress))
    return paths
