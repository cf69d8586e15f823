"""Threshold calibration.

Each user compares its per-beam SINR against a threshold calibrated so that a
single (user antenna, beam) pair clears it with probability 1/(K*N_r): the
threshold is the 1 - 1/(K*N_r) quantile of the per-beam SINR law.  With that
choice an average of one candidate shows up per beam regardless of K.

Two ways to get the quantile:

- closed form: exact for homogeneous attenuation, where the SINR law is known;
  solved by bisection with a doubling upper bracket.
- empirical: per-(cluster, user, station) sample quantiles from simulated SINR
  tables; the protocol when the law is unknown.  Homogeneous profiles pool all
  table entries (every marginal is identical), heterogeneous ones pool only
  across receive antennas, beams of the station, and realizations.

Thresholds below 1 are flagged, not rejected: the scheduler still runs, but
the single-candidacy guarantee (at most one beam above threshold per antenna)
only holds for thresholds >= 1.
"""

from __future__ import annotations

import dataclasses
from pathlib import Path

import numpy as np

from beamsched.channel import sample_batch_shared
from beamsched.config import CalibrationSettings, NetworkConfig
from beamsched.sinr import compute_tables, exact_sinr_law


class CalibrationError(RuntimeError):
    """Raised when a threshold table cannot be built as requested."""


@dataclasses.dataclass(frozen=True)
class BetaTable:
    """Per-(cluster, user, station) thresholds, shape (M, K, Q)."""

    values: np.ndarray
    target: float
    method: str

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        if v.ndim != 3:
            raise ValueError("threshold table must have shape (M, K, Q)")
        if not np.all(np.isfinite(v)) or np.any(v <= 0):
            raise ValueError("thresholds must be finite and > 0")
        v.setflags(write=False)
        object.__setattr__(self, "values", v)

    @property
    def min_value(self) -> float:
        return float(self.values.min())

    @property
    def regime_warning(self) -> bool:
        """True when any threshold is below 1 (single-candidacy not guaranteed)."""
        return bool(np.any(self.values < 1.0))

    def beam_matrix(self, N_t: int) -> np.ndarray:
        """Expand to per-beam thresholds, shape (M, K, Q*N_t).

        Beams of one station share the station's threshold; the beam index is
        r * N_t + l.
        """
        return np.repeat(self.values, N_t, axis=2)

    def to_csv(self, path: str | Path) -> None:
        M, K, Q = self.values.shape
        lines = ["n,k,r,beta"]
        for n in range(M):
            for k in range(K):
                for r in range(Q):
                    lines.append("%d,%d,%d,%s" % (n, k, r, repr(float(self.values[n, k, r]))))
        Path(path).write_text("\r\n".join(lines) + "\r\n")

    @classmethod
    def from_csv(cls, path: str | Path, target: float, method: str = "file") -> "BetaTable":
        raw = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
        if raw.shape[1] != 4:
            raise CalibrationError("threshold csv needs columns n,k,r,beta")
        n, k, r = (raw[:, i].astype(int) for i in range(3))
        shape = (n.max() + 1, k.max() + 1, r.max() + 1)
        vals = np.full(shape, np.nan)
        vals[n, k, r] = raw[:, 3]
        if np.any(np.isnan(vals)):
            raise CalibrationError("threshold csv does not cover every (n,k,r)")
        return cls(values=vals, target=target, method=method)


def analytic_single_beam_threshold(cfg: NetworkConfig) -> float:
    """Exact threshold for the interference-free single-beam network.

    With M = Q = N_t = 1 the SINR is exponential with scale rho * attenuation,
    so the 1 - 1/(K*N_r) quantile is rho * attenuation * ln(K*N_r).
    """
    if cfg.total_beams != 1:
        raise ValueError("analytic threshold requires M = Q = N_t = 1")
    if not cfg.attenuation.is_homogeneous:
        raise ValueError("analytic threshold requires homogeneous attenuation")
    gamma = float(cfg.attenuation.values.flat[0])
    return cfg.rho * gamma * float(np.log(cfg.K * cfg.N_r))


def _closed_form_table(cfg: NetworkConfig) -> BetaTable:
    if not cfg.attenuation.is_homogeneous:
        raise CalibrationError(
            "closed-form calibration requires a homogeneous attenuation profile; "
            "use method='empirical'"
        )
    beta = exact_sinr_law(cfg).quantile(cfg.calibration_target)
    values = np.full((cfg.M, cfg.K, cfg.Q), beta)
    return BetaTable(values=values, target=cfg.calibration_target, method="closed-form")


def _empirical_realization_count(cfg: NetworkConfig, settings: CalibrationSettings, pooled: bool) -> int:
    if settings.realizations:
        return settings.realizations
    # Size so the expected sample count above the target quantile is tail_target.
    if pooled:
        per_real = cfg.M * cfg.K * cfg.N_r * cfg.Q * cfg.N_t
    else:
        per_real = cfg.N_r * cfg.N_t
    need = settings.tail_target * cfg.K * cfg.N_r / per_real
    return int(np.ceil(need))


def _empirical_table(
    cfg: NetworkConfig, settings: CalibrationSettings, rng: np.random.Generator
) -> BetaTable:
    pooled = cfg.attenuation.is_homogeneous
    n_real = _empirical_realization_count(cfg, settings, pooled)
    per_pool = n_real * (cfg.M * cfg.K * cfg.N_r * cfg.Q * cfg.N_t if pooled else cfg.N_r * cfg.N_t)
    floor = 10 * cfg.K * cfg.N_r
    if per_pool < floor:
        raise CalibrationError(
            "cannot resolve the 1-1/(K*N_r) quantile for (n,k,r)=(0,0,0) and all "
            "other entries: %d pooled samples < %d required; raise realizations "
            "or tail_target" % (per_pool, floor)
        )

    # Chunk realizations so the SINR work arrays stay modest.
    per_real_elems = cfg.M * cfg.K * cfg.M * cfg.Q * cfg.N_r * cfg.N_t
    chunk = max(1, int(4e6 / max(per_real_elems, 1)))
    collected = []
    done = 0
    while done < n_real:
        b = min(chunk, n_real - done)
        real = sample_batch_shared(cfg, rng, b)
        tbl = compute_tables(cfg, real).sinr  # (b, M, K, N_r, Q, N_t)
        if pooled:
            collected.append(tbl.ravel())
        else:
            # (M, K, Q, b * N_r * N_t): pool antennas, beams, realizations.
            part = np.moveaxis(tbl, (1, 2, 4), (0, 1, 2)).reshape(cfg.M, cfg.K, cfg.Q, -1)
            collected.append(part)
        done += b

    target = cfg.calibration_target
    if pooled:
        samples = np.concatenate(collected)
        beta = float(np.quantile(samples, target, method="inverted_cdf"))
        values = np.full((cfg.M, cfg.K, cfg.Q), beta)
    else:
        samples = np.concatenate(collected, axis=-1)
        values = np.quantile(samples, target, axis=-1, method="inverted_cdf")
    return BetaTable(values=values, target=target, method="empirical")


def calibrate_thresholds(
    cfg: NetworkConfig,
    settings: CalibrationSettings | None = None,
    rng: np.random.Generator | None = None,
) -> BetaTable:
    """Build the threshold table for a network.

    Method "auto" picks closed form when the attenuation profile is
    homogeneous (the law is then exact) and the empirical protocol otherwise.
    """
    settings = settings or CalibrationSettings()
    if settings.method == "closed-form":
        return _closed_form_table(cfg)
    if settings.method == "empirical" or not cfg.attenuation.is_homogeneous:
        return _empirical_table(cfg, settings, rng or cfg.calibration_rng())
    return _closed_form_table(cfg)
