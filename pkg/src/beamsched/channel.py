"""Channel and beamformer sampling.

Channel entries are i.i.d. circularly symmetric complex Gaussian with unit
power: (x + iy)/sqrt(2) with x, y standard normal.  Beamformers are unitary
matrices drawn from the rotation-invariant (Haar) distribution, one per
station per slot; their columns are the beams.

Per-trial draw order is part of the reproducibility contract and must not
change: first the channel tensor, then the beamformers, then any scheduling
tie-break keys (drawn by the scheduler from the same generator).
"""

from __future__ import annotations

import dataclasses

import numpy as np

from beamsched.config import NetworkConfig


def complex_normal(rng: np.random.Generator, shape) -> np.ndarray:
    """Unit-power circularly symmetric complex Gaussian array."""
    return (rng.standard_normal(shape) + 1j * rng.standard_normal(shape)) / np.sqrt(2.0)


def sample_beamformers(rng: np.random.Generator, *batch_shape, n: int) -> np.ndarray:
    """Draw Haar-distributed n x n unitary matrices, one per batch index.

    QR of a complex Gaussian matrix alone is not Haar: numpy's QR leaves the
    diagonal phases of R unconstrained, which biases the factor.  Multiplying
    each column of Q by the phase of the matching diagonal entry of R removes
    the bias (this makes the decomposition unique with R's diagonal positive).
    """
    z = complex_normal(rng, (*batch_shape, n, n))
    q, r = np.linalg.qr(z)
    d = np.einsum("...ii->...i", r)
    return q * (d / np.abs(d))[..., None, :]


@dataclasses.dataclass(frozen=True)
class ChannelRealization:
    """One slot of the network.

    channels[n, k, m, r] is the N_r x N_t matrix from station (m, r) to user
    (n, k).  beams[m, r] is the N_t x N_t unitary whose columns are the beams
    station (m, r) transmits this slot.
    """

    channels: np.ndarray
    beams: np.ndarray


def sample_channels(cfg: NetworkConfig, rng: np.random.Generator) -> np.ndarray:
    shape = (cfg.M, cfg.K, cfg.M, cfg.Q, cfg.N_r, cfg.N_t)
    return complex_normal(rng, shape)


def sample_realization(cfg: NetworkConfig, rng: np.random.Generator) -> ChannelRealization:
    """Draw one slot. Channel first, beams second (fixed draw order)."""
    h = sample_channels(cfg, rng)
    w = sample_beamformers(rng, cfg.M, cfg.Q, n=cfg.N_t)
    return ChannelRealization(channels=h, beams=w)


def sample_batch_shared(cfg: NetworkConfig, rng: np.random.Generator, batch: int) -> ChannelRealization:
    """Draw `batch` slots from one generator, batch axis leading.

    Used where per-slot stream identity is not needed (calibration sampling,
    verification suites).  Trial runs instead draw each slot from its own
    stream via sample_realization so results are independent of batching.
    """
    shape = (batch, cfg.M, cfg.K, cfg.M, cfg.Q, cfg.N_r, cfg.N_t)
    h = complex_normal(rng, shape)
    w = sample_beamformers(rng, batch, cfg.M, cfg.Q, n=cfg.N_t)
    return ChannelRealization(channels=h, beams=w)
