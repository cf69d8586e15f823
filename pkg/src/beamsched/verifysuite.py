"""Self-check suites behind the `verify` CLI command.

Each suite draws fresh streams from the analysis domain, computes one
statistic with a pass threshold, and reports a JSON-friendly record.  The
suites check the simulator against its own closed forms:

- the per-beam SINR matches the closed-form law under homogeneous attenuation
  (Kolmogorov-Smirnov distance),
- the attenuation-extremal surrogates sandwich the SINR entrywise and in
  user-sorted order,
- a calibrated threshold yields one candidate per beam on average, and the
  per-(antenna, beam) candidacy frequency is 1/(K*N_r),
- long-run service frequencies are uniform across users,
- order-statistic CDFs are monotone in the parent probability,
- the harmonic-number bracket contains the exact and simulated mean of the
  maximum of unit exponentials,
- per-trial feedback never exceeds the structural cap.

`inject_fault="swap-cdf-params"` deliberately mis-parameterizes the reference
CDF (scale and interference ratio trade places) so the first suite must fail;
it exists to prove the harness can catch a broken check.
"""

from __future__ import annotations

import dataclasses

import numpy as np
from scipy import stats as spstats

from beamsched.calibration import CalibrationSettings, calibrate_thresholds
from beamsched.channel import sample_batch_shared
from beamsched.config import (
    DOMAIN_ANALYSIS,
    AttenuationProfile,
    NetworkConfig,
    make_stream,
)
from beamsched.metrics import candidate_count_summary, fairness_pvalue
from beamsched.orderstats import (
    exponential_max_mean_bounds,
    harmonic_number,
    order_stat_cdf,
    verify_ordered_bounds,
)
from beamsched.scheduler import run_trials, worst_case_feedback_bits
from beamsched.sinr import SinrLaw, compute_tables, exact_sinr_law

FAULT_SWAP_CDF_PARAMS = "swap-cdf-params"
KNOWN_FAULTS = (FAULT_SWAP_CDF_PARAMS,)


@dataclasses.dataclass
class SuiteResult:
    name: str
    passed: bool
    statistic: float
    threshold: float
    detail: str = ""

    def as_dict(self) -> dict:
        return {
            "name": self.name,
            "passed": bool(self.passed),
            "statistic": float(self.statistic),
            "threshold": float(self.threshold),
            "detail": self.detail,
        }


def _homog(M, Q, N_t, N_r, K, rho, seed) -> NetworkConfig:
    return NetworkConfig(
        M=M, Q=Q, N_t=N_t, N_r=N_r, K=K, rho=rho,
        attenuation=AttenuationProfile.homogeneous(M, K, Q), seed=seed,
    )


def suite_sinr_law(seed: int, n_samples: int = 100_000, fault: str | None = None) -> SuiteResult:
    cfg = _homog(2, 2, 2, 1, 250, 10.0, seed)
    rng = make_stream(seed, DOMAIN_ANALYSIS, 10)
    per_real = cfg.M * cfg.K * cfg.N_r * cfg.Q * cfg.N_t
    n_real = max(1, int(np.ceil(n_samples / per_real)))
    samples = []
    left = n_real
    while left > 0:
        b = min(left, max(1, int(2e6 / (per_real * cfg.M * cfg.Q * cfg.N_t))))
        real = sample_batch_shared(cfg, rng, b)
        samples.append(compute_tables(cfg, real).sinr.ravel())
        left -= b
    samples = np.concatenate(samples)[:n_samples]
    law = exact_sinr_law(cfg)
    if fault == FAULT_SWAP_CDF_PARAMS:
        law = SinrLaw(
            rate_scale=law.interference_ratio if law.interference_ratio > 0 else 1.0,
            interference_ratio=law.rate_scale,
            n_interferers=law.n_interferers,
        )
    ks = float(spstats.kstest(samples, law.cdf).statistic)
    return SuiteResult(
        name="sinr_closed_form_ks",
        passed=ks < 0.01,
        statistic=ks,
        threshold=0.01,
        detail="%d samples, M=2 Q=2 N_t=2 rho=10" % len(samples),
    )


def suite_surrogate_sandwich(seed: int, n_real: int = 2000) -> SuiteResult:
    rng = make_stream(seed, DOMAIN_ANALYSIS, 11)
    att = AttenuationProfile.log_uniform_db(2, 50, 2, -10.0, 10.0, rng)
    cfg = NetworkConfig(M=2, Q=2, N_t=2, N_r=1, K=50, rho=10.0, attenuation=att, seed=seed)
    per_real = cfg.M * cfg.K * cfg.M * cfg.Q * cfg.N_r * cfg.N_t
    violations = 0
    left = n_real
    while left > 0:
        b = min(left, max(1, int(2e6 / per_real)))
        real = sample_batch_shared(cfg, rng, b)
        tables = compute_tables(cfg, real, with_bounds=True)
        entry, ranked = verify_ordered_bounds(tables.lower, tables.sinr, tables.upper)
        violations += entry + ranked
        left -= b
    return SuiteResult(
        name="surrogate_sandwich",
        passed=violations == 0,
        statistic=float(violations),
        threshold=0.0,
        detail="%d realizations, +/-10 dB attenuation spread" % n_real,
    )


def suite_candidate_mean(seed: int, n_trials: int = 2000) -> SuiteResult:
    cfg = _homog(1, 2, 2, 1, 100, 10.0, seed)
    table = calibrate_thresholds(cfg, CalibrationSettings(method="closed-form"))
    batch = run_trials(cfg, table, n_trials)
    mean, se = candidate_count_summary(batch)
    err = abs(mean - 1.0)
    tol = max(0.05, 5.0 * se)
    disjoint = int(batch.max_qualifying.max()) <= 1
    return SuiteResult(
        name="candidate_count_mean",
        passed=bool(err <= tol and disjoint),
        statistic=mean,
        threshold=tol,
        detail="target 1.0, K=100, max beams cleared by one antenna: %d"
        % int(batch.max_qualifying.max()),
    )


def suite_candidacy_frequency(seed: int, n_trials: int = 2000) -> SuiteResult:
    cfg = _homog(1, 2, 2, 2, 50, 10.0, seed)
    table = calibrate_thresholds(cfg, CalibrationSettings(method="closed-form"))
    batch = run_trials(cfg, table, n_trials)
    # Mean candidates per beam divided by the pool size (K * N_r antennas).
    freq = float(batch.candidate_counts.mean()) / (cfg.K * cfg.N_r)
    target = 1.0 / (cfg.K * cfg.N_r)
    return SuiteResult(
        name="candidacy_frequency",
        passed=abs(freq - target) <= 0.002,
        statistic=freq,
        threshold=0.002,
        detail="target %.4f at K=50 N_r=2" % target,
    )


def suite_service_uniformity(seed: int, n_trials: int = 4000) -> SuiteResult:
    cfg = _homog(1, 2, 2, 1, 10, 10.0, seed)
    table = calibrate_thresholds(cfg, CalibrationSettings(method="closed-form"))
    batch = run_trials(cfg, table, n_trials)
    p = fairness_pvalue(batch.service_counts)
    return SuiteResult(
        name="service_uniformity",
        passed=p > 1e-3,
        statistic=p,
        threshold=1e-3,
        detail="chi-square over %d service grants" % int(batch.service_counts.sum()),
    )


def suite_rank_monotonicity(seed: int, n_pairs: int = 50) -> SuiteResult:
    rng = make_stream(seed, DOMAIN_ANALYSIS, 12)
    grid = np.linspace(0.0, 1.0, 401)
    violations = 0
    for _ in range(n_pairs):
        n = int(rng.integers(2, 500))
        rank = int(rng.integers(1, n + 1))
        vals = order_stat_cdf(grid, n, rank)
        violations += int(np.sum(np.diff(vals) < -1e-12))
    return SuiteResult(
        name="rank_cdf_monotone",
        passed=violations == 0,
        statistic=float(violations),
        threshold=0.0,
        detail="%d random (draws, rank) pairs on a 401-point grid" % n_pairs,
    )


def suite_max_mean_bracket(seed: int, n_samples: int = 200_000) -> SuiteResult:
    rng = make_stream(seed, DOMAIN_ANALYSIS, 13)
    worst = 0.0
    ok = True
    for n in (1, 10, 100):
        lo, hi = exponential_max_mean_bounds(n)
        exact = harmonic_number(n)
        ok &= lo <= exact <= hi
        x = rng.exponential(size=(n_samples // 10, n)).max(axis=1) if n > 1 else rng.exponential(
            size=(n_samples, 1)
        ).max(axis=1)
        mean = float(x.mean())
        se = float(x.std(ddof=1) / np.sqrt(len(x)))
        dev = abs(mean - exact) / se
        worst = max(worst, dev)
        ok &= dev <= 4.0
    return SuiteResult(
        name="exp_max_mean_bracket",
        passed=bool(ok),
        statistic=worst,
        threshold=4.0,
        detail="bracket holds exactly; worst MC deviation in standard errors",
    )


def suite_feedback_cap(seed: int, n_trials: int = 500) -> SuiteResult:
    cfg = _homog(1, 1, 2, 3, 8, 10.0, seed)
    table = calibrate_thresholds(cfg, CalibrationSettings(method="closed-form"))
    batch = run_trials(cfg, table, n_trials)
    cap = worst_case_feedback_bits(cfg)
    worst = int(batch.feedback_bits.max())
    return SuiteResult(
        name="feedback_cap",
        passed=worst <= cap,
        statistic=float(worst),
        threshold=float(cap),
        detail="structural cap K*min(N_r, Q*N_t)*bits-per-message",
    )


def run_suites(
    seed: int = 20260816,
    quick: bool = False,
    inject_fault: str | None = None,
) -> dict:
    """Run every suite and return the JSON report."""
    if inject_fault is not None and inject_fault not in KNOWN_FAULTS:
        raise ValueError("unknown fault %r; known: %s" % (inject_fault, ", ".join(KNOWN_FAULTS)))
    scale = 0.1 if quick else 1.0
    results = [
        suite_sinr_law(seed, n_samples=int(100_000 * scale) or 1000, fault=inject_fault),
        suite_surrogate_sandwich(seed, n_real=int(2000 * scale) or 100),
        suite_candidate_mean(seed, n_trials=int(2000 * scale) or 200),
        suite_candidacy_frequency(seed, n_trials=int(2000 * scale) or 200),
        suite_service_uniformity(seed, n_trials=int(4000 * scale) or 400),
        suite_rank_monotonicity(seed),
        suite_max_mean_bracket(seed, n_samples=int(200_000 * scale) or 20_000),
        suite_feedback_cap(seed, n_trials=int(500 * scale) or 50),
    ]
    return {
        "seed": seed,
        "quick": quick,
        "inject_fault": inject_fault,
        "passed": all(r.passed for r in results),
        "suites": [r.as_dict() for r in results],
    }
