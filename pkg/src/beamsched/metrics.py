"""Summary statistics over trial batches: rate, feedback cost, fairness."""

from __future__ import annotations

import dataclasses

import numpy as np
from scipy import stats as spstats

from beamsched.config import NetworkConfig
from beamsched.scheduler import TrialBatchStats


def mean_and_se(x: np.ndarray) -> tuple[float, float]:
    """Sample mean and standard error over the first axis."""
    x = np.asarray(x, dtype=float)
    n = x.shape[0]
    se = float(x.std(ddof=1) / np.sqrt(n)) if n > 1 else float("nan")
    return float(x.mean()), se


def sum_rate_summary(batch: TrialBatchStats) -> tuple[float, float]:
    """Mean network sum rate (all clusters) and its standard error."""
    return mean_and_se(batch.sum_rate)


def feedback_summary(batch: TrialBatchStats) -> tuple[float, float]:
    """Mean per-cluster feedback bits per slot and its standard error.

    Clusters are averaged within each trial first, so the error bar reflects
    independent trials only.
    """
    per_trial = batch.feedback_bits.mean(axis=1)
    return mean_and_se(per_trial)


def candidate_count_summary(batch: TrialBatchStats) -> tuple[float, float]:
    """Mean candidates per beam and standard error (trials as the unit)."""
    per_trial = batch.candidate_counts.mean(axis=(1, 2))
    return mean_and_se(per_trial)


def fairness_pvalue(service_counts: np.ndarray) -> float:
    """Chi-square p-value against equal service frequency across users."""
    counts = np.asarray(service_counts).ravel()
    if counts.sum() == 0:
        return float("nan")
    return float(spstats.chisquare(counts).pvalue)


def reference_curve(K: int, N_r: int, total_beams: int, scale: float = 1.0) -> float:
    """The doubly logarithmic user-scaling reference, c * beams * log2(log2(K*N_r))."""
    pool = K * N_r
    if pool <= 2:
        return float("nan")
    return float(scale * total_beams * np.log2(np.log2(pool)))


@dataclasses.dataclass
class PointSummary:
    """One sweep point's row in the metrics table."""

    M: int
    Q: int
    N_t: int
    N_r: int
    K: int
    rho_db: float
    trials: int
    mean_sum_rate: float
    sum_rate_se: float
    mean_fb_bits: float
    fb_bits_se: float
    chisq_p: float
    lower_bound: float
    beta_min: float
    regime_warning: int
    ref_curve: float = float("nan")

    @classmethod
    def from_batch(
        cls,
        cfg: NetworkConfig,
        batch: TrialBatchStats,
        beta_min: float,
        lower_bound: float,
    ) -> "PointSummary":
        rate, rate_se = sum_rate_summary(batch)
        fb, fb_se = feedback_summary(batch)
        return cls(
            M=cfg.M,
            Q=cfg.Q,
            N_t=cfg.N_t,
            N_r=cfg.N_r,
            K=cfg.K,
            rho_db=cfg.rho_db,
            trials=batch.n_trials,
            mean_sum_rate=rate,
            sum_rate_se=rate_se,
            mean_fb_bits=fb,
            fb_bits_se=fb_se,
            chisq_p=fairness_pvalue(batch.service_counts),
            lower_bound=lower_bound,
            beta_min=beta_min,
            regime_warning=int(beta_min < 1.0),
        )


def fill_reference_curve(summaries: list[PointSummary]) -> None:
    """Set ref_curve on each row, anchored to the largest-K row.

    The scale is chosen so the reference passes through the measured rate at
    the largest user count (per (M, Q, N_t, N_r, rho) series).
    """
    groups: dict[tuple, list[PointSummary]] = {}
    for s in summaries:
        groups.setdefault((s.M, s.Q, s.N_t, s.N_r, s.rho_db), []).append(s)
    for series in groups.values():
        anchor = max(series, key=lambda s: s.K)
        base = reference_curve(anchor.K, anchor.N_r, anchor.M * anchor.Q * anchor.N_t)
        scale = anchor.mean_sum_rate / base if base and np.isfinite(base) else float("nan")
        for s in series:
            s.ref_curve = reference_curve(s.K, s.N_r, s.M * s.Q * s.N_t, scale)
