"""Per-beam SINR tables, attenuation-extremal surrogates, and closed-form laws.

For user (n, k), receive antenna i, and beam l of station (n, r), the SINR is
the attenuated power on that beam divided by the attenuated power of every
other beam in the network (same antenna) plus the inverse per-beam SNR.

Replacing the per-link attenuations by their extremes over the cluster gives
two surrogate tables that sandwich the SINR entrywise: the lower surrogate
scales the signal by the smallest in-cluster attenuation and all interference
by the largest network-wide one, the upper surrogate does the opposite.  Both
surrogates have an explicit CDF: an exponential numerator against a sum of
independent exponential interferers integrates to

    F(x) = 1 - exp(-x / rate_scale) / (ratio * x + 1) ** n_interferers

with rate_scale = rho * own-attenuation, ratio = cross/own attenuation, and
n_interferers = M*Q*N_t - 1.  Under a constant attenuation profile the two
surrogates and the SINR itself coincide and the law is exact.
"""

from __future__ import annotations

import dataclasses

import numpy as np

from beamsched.channel import ChannelRealization
from beamsched.config import NetworkConfig


@dataclasses.dataclass(frozen=True)
class SinrTables:
    """Per-beam SINR and optional surrogate bounds.

    Arrays are indexed [batch, n, k, i, r, l]: user (n, k), receive antenna i,
    beam l of station (n, r).  lower and upper are None unless requested.
    """

    sinr: np.ndarray
    lower: np.ndarray | None = None
    upper: np.ndarray | None = None


def _beam_gains(cfg: NetworkConfig, real: ChannelRealization) -> np.ndarray:
    """|h^H w|^2 for every (user antenna, beam) pair, without attenuation.

    Returns gains[b, n, k, m, r, i, l].
    """
    h = real.channels
    w = real.beams
    squeeze = h.ndim == 6
    if squeeze:
        h = h[None]
        w = w[None]
    hw = np.einsum("bnkmrit,bmrtl->bnkmril", h, w)
    g = np.abs(hw) ** 2
    return g[0] if squeeze else g


def compute_tables(
    cfg: NetworkConfig, real: ChannelRealization, with_bounds: bool = False
) -> SinrTables:
    """SINR table for one realization or a batch of them.

    A batch is detected from the channel tensor rank; single realizations come
    back without the batch axis.
    """
    gains = _beam_gains(cfg, real)
    squeeze = gains.ndim == 6
    if squeeze:
        gains = gains[None]

    att = cfg.attenuation.values  # (M, K, M, Q)
    powered = att[None, :, :, :, :, None, None] * gains
    total = powered.sum(axis=(3, 4, 6))  # [b, n, k, i]
    own = np.einsum("bnknril->bnkril", powered)
    own = np.moveaxis(own, 3, 4)  # [b, n, k, i, r, l]
    noise = 1.0 / cfg.rho
    sinr = own / (total[..., None, None] - own + noise)

    lower = upper = None
    if with_bounds:
        gtotal = gains.sum(axis=(3, 4, 6))
        gown = np.moveaxis(np.einsum("bnknril->bnkril", gains), 3, 4)
        ginterf = gtotal[..., None, None] - gown
        own_min = np.empty(cfg.M)
        own_max = np.empty(cfg.M)
        net_min = np.empty(cfg.M)
        net_max = np.empty(cfg.M)
        for n in range(cfg.M):
            ext = cfg.attenuation.extremes(n)
            own_min[n], own_max[n] = ext.own_min, ext.own_max
            net_min[n], net_max[n] = ext.net_min, ext.net_max
        bshape = (1, cfg.M, 1, 1, 1, 1)
        lower = (own_min.reshape(bshape) * gown) / (net_max.reshape(bshape) * ginterf + noise)
        upper = (own_max.reshape(bshape) * gown) / (net_min.reshape(bshape) * ginterf + noise)

    if squeeze:
        sinr = sinr[0]
        lower = None if lower is None else lower[0]
        upper = None if upper is None else upper[0]
    return SinrTables(sinr=sinr, lower=lower, upper=upper)


@dataclasses.dataclass(frozen=True)
class SinrLaw:
    """Closed-form distribution of a surrogate (or exact homogeneous) SINR."""

    rate_scale: float
    interference_ratio: float
    n_interferers: int

    def __post_init__(self):
        if self.rate_scale <= 0 or self.interference_ratio < 0 or self.n_interferers < 0:
            raise ValueError("SinrLaw parameters out of range")

    def cdf(self, x):
        x = np.asarray(x, dtype=float)
        out = -np.expm1(
            -x / self.rate_scale
            - self.n_interferers * np.log1p(self.interference_ratio * x)
        )
        return np.where(x > 0, out, 0.0)

    def sf(self, x):
        x = np.asarray(x, dtype=float)
        out = np.exp(
            -x / self.rate_scale
            - self.n_interferers * np.log1p(self.interference_ratio * x)
        )
        return np.where(x > 0, out, 1.0)

    def quantile(self, p: float) -> float:
        """Inverse CDF by bisection with a doubling upper bracket."""
        if not 0.0 < p < 1.0:
            raise ValueError("quantile level must be in (0, 1)")
        return bisect_quantile(self.cdf, p)


def bisect_quantile(cdf, p: float, lo: float = 0.0, hi: float = 1.0) -> float:
    """Smallest x with cdf(x) >= p, to relative width 1e-9."""
    while float(cdf(hi)) < p:
        lo = hi
        hi *= 2.0
        if hi > 1e30:
            raise ValueError("quantile bracket exceeded 1e30; CDF does not reach %g" % p)
    while (hi - lo) > 1e-9 * (1.0 + hi):
        mid = 0.5 * (lo + hi)
        if float(cdf(mid)) >= p:
            hi = mid
        else:
            lo = mid
    return 0.5 * (lo + hi)


def surrogate_laws(cfg: NetworkConfig, n: int) -> tuple[SinrLaw, SinrLaw]:
    """(lower, upper) surrogate laws for cluster n from attenuation extremes."""
    ext = cfg.attenuation.extremes(n)
    n_int = cfg.total_beams - 1
    lower = SinrLaw(
        rate_scale=cfg.rho * ext.own_min,
        interference_ratio=ext.net_max / ext.own_min,
        n_interferers=n_int,
    )
    upper = SinrLaw(
        rate_scale=cfg.rho * ext.own_max,
        interference_ratio=ext.net_min / ext.own_max,
        n_interferers=n_int,
    )
    return lower, upper


def exact_sinr_law(cfg: NetworkConfig) -> SinrLaw:
    """The exact per-beam SINR law, valid only for homogeneous attenuation."""
    if not cfg.attenuation.is_homogeneous:
        raise ValueError("exact_sinr_law requires a homogeneous attenuation profile")
    low, up = surrogate_laws(cfg, 0)
    assert low == up
    return low
