"""Order-statistic CDFs, selection-rank mixtures, and rate-bound integrals.

The scheduler hands each beam to a uniformly chosen candidate, so the served
SINR is not the maximum over users but a mixture of order statistics: with
probability q_j the served value is the j-th largest of the candidate pool
(j = 1 is the maximum), and q_0 is the chance the beam idles.  For candidate
counts distributed Binomial(N, 1/N) the mixture weights have an explicit form,
and the expected rate of a beam reduces to a one-dimensional integral against
the mixture CDF.  This module evaluates those pieces and the attenuation
sandwich that turns them into numeric bounds on the per-cluster rate.
"""

from __future__ import annotations

import dataclasses

import numpy as np
from scipy import special, stats

from beamsched.config import NetworkConfig

EULER_GAMMA = float(np.euler_gamma)


def order_stat_cdf(u, n_draws: int, rank: int):
    """CDF of the rank-th largest of n_draws iid draws, on the parent scale.

    u is the parent CDF evaluated at the point of interest; rank 1 is the
    maximum.  Equals sum_{i<rank} C(n,i) u^(n-i) (1-u)^i, computed through the
    regularized incomplete beta function, which carries the same numerically
    stable log-gamma evaluation and is exact at both endpoints.
    """
    if not 1 <= rank <= n_draws:
        raise ValueError("rank must be in 1..n_draws")
    u = np.asarray(u, dtype=float)
    if np.any(u < 0) or np.any(u > 1):
        raise ValueError("parent CDF values must lie in [0, 1]")
    return special.betainc(n_draws - rank + 1, rank, u)


def order_stat_parent_quantile(p, n_draws: int, rank: int):
    """Inverse of order_stat_cdf in u: parent-CDF value whose rank-CDF is p."""
    return special.betaincinv(n_draws - rank + 1, rank, p)


def harmonic_number(n: int) -> float:
    """H_n, the exact mean of the maximum of n unit exponentials."""
    return float(np.sum(1.0 / np.arange(1, n + 1)))


def exponential_max_mean_bounds(n: int) -> tuple[float, float]:
    """Two-sided bracket for E[max of n unit exponentials].

    ln n + gamma + 1/(2(n+1)) <= H_n <= ln n + gamma + 1/(2n); the bracket
    comes from the standard Euler-Maclaurin tail of the harmonic number.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    base = np.log(n) + EULER_GAMMA
    return float(base + 0.5 / (n + 1)), float(base + 0.5 / n)


def binomial_candidate_weights(n_candidates: int) -> np.ndarray:
    """Selection-rank weights when the pool size is Binomial(N, 1/N).

    Returns q of length N+1: q[0] is the idle probability (empty pool) and
    q[j] = sum_{b>=j} P(pool size = b)/b is the probability the served draw is
    the j-th largest.  The weights sum to one.
    """
    n = int(n_candidates)
    if n < 1:
        raise ValueError("n_candidates must be >= 1")
    b = np.arange(n + 1)
    pmf = stats.binom.pmf(b, n, 1.0 / n)
    ratio = pmf[1:] / b[1:]
    q = np.empty(n + 1)
    q[0] = pmf[0]
    q[1:] = np.cumsum(ratio[::-1])[::-1]
    return q


def mean_selected_rank(weights: np.ndarray) -> float:
    """sum_j j * q_j; equals (E[pool size] + 1 - q_0) / 2 for any pool law."""
    w = np.asarray(weights, dtype=float)
    return float(np.sum(np.arange(len(w)) * w))


def rank_mixture_cdf(weights: np.ndarray, u, n_draws: int | None = None):
    """Unnormalized mixture CDF sum_{j>=1} q_j G_(j)(u); total mass 1 - q[0]."""
    w = np.asarray(weights, dtype=float)
    n = int(n_draws) if n_draws is not None else len(w) - 1
    if len(w) - 1 > n:
        raise ValueError("weights assign mass to ranks beyond n_draws")
    u = np.asarray(u, dtype=float)
    out = np.zeros(np.broadcast(u, 0.0).shape)
    for j in range(1, len(w)):
        if w[j] != 0.0:
            out = out + w[j] * order_stat_cdf(u, n, j)
    return out


def sample_ranked_exponential(
    rng: np.random.Generator, n_draws: int, ranks: np.ndarray
) -> np.ndarray:
    """Draw the ranks[s]-th largest of n_draws unit exponentials, one per entry.

    Exact inverse-CDF sampling: a uniform is pushed through the inverse of the
    order-statistic CDF on the parent scale, then through the exponential
    quantile.  Cost is independent of n_draws.
    """
    u = rng.random(len(ranks))
    v = special.betaincinv(n_draws - ranks + 1, ranks, u)
    return -np.log1p(-v)


def scaling_integral(
    gain_scale: float,
    n_draws: int,
    weights: np.ndarray,
    n_samples: int,
    rng: np.random.Generator,
) -> tuple[float, float]:
    """Monte-Carlo estimate of E[log2(1 + a * X_(J))] and its standard error.

    X_(j) is the j-th largest of n_draws unit exponentials and J is drawn from
    the rank weights restricted to j >= 1 (renormalized): the expectation is
    conditional on the beam being served.
    """
    w = np.asarray(weights, dtype=float)
    if len(w) - 1 > n_draws:
        raise ValueError("weights assign mass to ranks beyond n_draws")
    active = w[1:].sum()
    if active <= 0:
        raise ValueError("weights carry no mass on ranks >= 1")
    probs = w[1:] / active
    ranks = rng.choice(np.arange(1, len(w)), size=n_samples, p=probs)
    x = sample_ranked_exponential(rng, n_draws, ranks)
    vals = np.log2(1.0 + gain_scale * x)
    mean = float(vals.mean())
    se = float(vals.std(ddof=1) / np.sqrt(n_samples))
    return mean, se


def scaling_integral_quadrature(
    gain_scale: float,
    n_draws: int,
    weights: np.ndarray,
    grid_points: int = 20001,
    x_max: float | None = None,
) -> float:
    """Deterministic cross-check of scaling_integral by trapezoid quadrature.

    Integration by parts turns the expectation into
    int_0^inf g'(x) (1 - G_mix(x)/mass) dx with g(x) = log2(1 + a x) and G_mix
    the rank-mixture CDF composed with the exponential parent.
    """
    w = np.asarray(weights, dtype=float)
    active = w[1:].sum()
    if x_max is None:
        x_max = np.log(n_draws) + 45.0
    x = np.linspace(0.0, x_max, grid_points)
    parent = -np.expm1(-x)
    mix = rank_mixture_cdf(w, parent, n_draws)
    integrand = (gain_scale / ((1.0 + gain_scale * x) * np.log(2.0))) * (1.0 - mix / active)
    return float(np.trapezoid(integrand, x))


@dataclasses.dataclass(frozen=True)
class RateBounds:
    """Numeric sandwich for the expected per-cluster sum rate."""

    lower: float
    upper: float
    gap_constant: float
    active_mass: float


def rate_gap_constant(cfg: NetworkConfig, n: int) -> float:
    """Worst-case rate give-up from replacing attenuations by their extremes.

    Per cluster: (beams) * log2((total_beams - 1) * rho * net_max * own_min + 1).
    """
    ext = cfg.attenuation.extremes(n)
    n_int = cfg.total_beams - 1
    return cfg.beams_per_cluster * float(
        np.log2(n_int * cfg.rho * ext.net_max * ext.own_min + 1.0)
    )


def rate_bounds(
    cfg: NetworkConfig,
    n: int,
    n_samples: int,
    rng: np.random.Generator,
) -> RateBounds:
    """Bounds on E[sum rate of cluster n] from the attenuation sandwich.

    The candidate pool per beam has size Binomial(K*N_r, 1/(K*N_r)); the
    expected rate of a served beam is the scaling integral at the extremal
    attenuations, the idle probability discounts the total, and the gap
    constant is subtracted on the lower side.
    """
    ext = cfg.attenuation.extremes(n)
    pool = cfg.K * cfg.N_r
    w = binomial_candidate_weights(pool)
    mass = 1.0 - w[0]
    low_mean, _ = scaling_integral(cfg.rho * ext.own_min, pool, w, n_samples, rng)
    up_mean, _ = scaling_integral(cfg.rho * ext.own_max, pool, w, n_samples, rng)
    beams = cfg.beams_per_cluster
    gap = rate_gap_constant(cfg, n)
    return RateBounds(
        lower=beams * mass * low_mean - gap,
        upper=beams * mass * up_mean,
        gap_constant=gap,
        active_mass=mass,
    )


def verify_ordered_bounds(
    lower: np.ndarray,
    sinr: np.ndarray,
    upper: np.ndarray,
    rel_slack: float = 1e-12,
) -> tuple[int, int]:
    """Count sandwich violations entrywise and on user-sorted columns.

    Tables are indexed [..., n, k, i, r, l] (a leading batch axis is fine).
    The sorted check orders each (cluster, antenna, beam) column over users
    and compares rank by rank, which is the form the order-statistic bounds
    take.  rel_slack absorbs floating-point rounding only.
    """
    if not (lower.shape == sinr.shape == upper.shape):
        raise ValueError("tables must share a shape")
    entry = int(np.sum(lower > sinr * (1.0 + rel_slack)))
    entry += int(np.sum(sinr > upper * (1.0 + rel_slack)))
    axis = lower.ndim - 4  # the user axis k in [..., n, k, i, r, l]
    ls = np.sort(lower, axis=axis)
    ss = np.sort(sinr, axis=axis)
    us = np.sort(upper, axis=axis)
    ranked = int(np.sum(ls > ss * (1.0 + rel_slack)))
    ranked += int(np.sum(ss > us * (1.0 + rel_slack)))
    return entry, ranked
