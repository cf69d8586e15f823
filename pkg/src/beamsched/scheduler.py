"""Feedback and beam-assignment rounds.

Protocol per slot, per cluster:

1. Every user normalizes its per-beam SINR by its station threshold and finds
   the best (station, beam) pair per receive antenna (ties break to the lowest
   beam index).
2. An antenna whose best normalized value reaches 1 nominates that single
   beam.  Antennas below threshold stay silent.  Antennas of one user that
   nominate the same beam collapse into a single message carrying the
   strongest of them, so a user sends at most min(N_r, Q*N_t) messages of
   ceil(log2(Q*N_t)) bits each (zero bits when there is only one beam).
3. The candidates of each beam are the users that named it; the scheduler
   picks one uniformly at random.  Beams with no candidate idle.
4. A served beam carries log2(1 + SINR) with the raw (unnormalized) SINR of
   the chosen user's reported antenna.

Uniform selection is implemented with one random priority key per
(user, antenna), drawn once per slot: each beam serves the candidate whose
message carries the largest key.  Keys are exchangeable and independent of the
channel, so the winner is uniform on the candidate set, and the draw count per
slot is fixed, which keeps batched and one-at-a-time execution bit-identical.

All randomness of trial t comes from the (seed, trial-domain, t) stream, in
the fixed order: channels, beamformers, selection keys.
"""

from __future__ import annotations

import dataclasses

import numpy as np

from beamsched.calibration import BetaTable
from beamsched.channel import ChannelRealization, sample_channels, sample_beamformers
from beamsched.config import NetworkConfig
from beamsched.sinr import compute_tables


@dataclasses.dataclass(frozen=True)
class ScheduleOutcome:
    """One slot's assignments.  Beam index is station * N_t + beam-of-station.

    assigned_user / assigned_antenna hold -1 where the beam idles.
    """

    assigned_user: np.ndarray
    assigned_antenna: np.ndarray
    served_sinr: np.ndarray
    served_rate: np.ndarray
    candidate_counts: np.ndarray
    messages: np.ndarray
    feedback_bits: np.ndarray
    max_qualifying: int

    @property
    def sum_rate(self) -> float:
        return float(self.served_rate.sum())

    @property
    def cluster_rate(self) -> np.ndarray:
        return self.served_rate.sum(axis=1)


@dataclasses.dataclass
class TrialBatchStats:
    """Per-trial aggregates over a run; trial order matches the trial index."""

    sum_rate: np.ndarray  # (T,)
    cluster_rate: np.ndarray  # (T, M)
    messages: np.ndarray  # (T, M)
    feedback_bits: np.ndarray  # (T, M)
    candidate_counts: np.ndarray  # (T, M, Q*N_t)
    max_qualifying: np.ndarray  # (T,) most beams any antenna cleared
    service_counts: np.ndarray  # (M, K) times each user was served

    @property
    def n_trials(self) -> int:
        return len(self.sum_rate)

    @classmethod
    def merge(cls, parts: list["TrialBatchStats"]) -> "TrialBatchStats":
        return cls(
            sum_rate=np.concatenate([p.sum_rate for p in parts]),
            cluster_rate=np.concatenate([p.cluster_rate for p in parts]),
            messages=np.concatenate([p.messages for p in parts]),
            feedback_bits=np.concatenate([p.feedback_bits for p in parts]),
            candidate_counts=np.concatenate([p.candidate_counts for p in parts]),
            max_qualifying=np.concatenate([p.max_qualifying for p in parts]),
            service_counts=sum(p.service_counts for p in parts),
        )


def worst_case_feedback_bits(cfg: NetworkConfig) -> int:
    """Structural per-cluster cap when every antenna of every user qualifies.

    Each antenna nominates one beam and same-beam nominations of one user
    merge, so a user sends at most min(N_r, Q*N_t) messages.
    """
    return cfg.K * min(cfg.N_r, cfg.beams_per_cluster) * cfg.feedback_word_bits


def _batch_schedule(
    cfg: NetworkConfig,
    table: np.ndarray,
    keys: np.ndarray,
    beam_thresholds: np.ndarray,
):
    """Vectorized scheduling for a batch of SINR tables.

    table: (T, M, K, N_r, Q, N_t); keys: (T, M, K, N_r);
    beam_thresholds: (M, K, Q*N_t).  Returns the per-trial arrays.
    """
    T, M, K, I = table.shape[:4]
    B = cfg.beams_per_cluster
    flat = table.reshape(T, M, K, I, B)
    norm = flat / beam_thresholds[None, :, :, None, :]
    best = norm.argmax(axis=-1)
    val = np.take_along_axis(norm, best[..., None], -1)[..., 0]
    mask = val >= 1.0
    qual = (norm >= 1.0).sum(axis=-1)
    max_qual = qual.reshape(T, -1).max(axis=1) if qual.size else np.zeros(T, dtype=int)

    t_i, n_i, k_i, i_i = np.nonzero(mask)
    beam = best[t_i, n_i, k_i, i_i]

    # Antennas of one user that nominated the same beam merge into a single
    # message that reports the strongest of them.
    ugroup = ((t_i * M + n_i) * K + k_i) * B + beam
    order_u = np.lexsort((val[t_i, n_i, k_i, i_i], ugroup))
    u_sorted = ugroup[order_u]
    keep = np.empty(len(order_u), dtype=bool)
    if len(order_u):
        keep[:-1] = u_sorted[1:] != u_sorted[:-1]
        keep[-1] = True
    rep = order_u[keep]
    t_i, n_i, k_i, i_i = t_i[rep], n_i[rep], k_i[rep], i_i[rep]
    beam = beam[rep]

    messages = np.bincount(t_i * M + n_i, minlength=T * M).reshape(T, M)
    group = (t_i * M + n_i) * B + beam
    counts = np.bincount(group, minlength=T * M * B).reshape(T, M, B)

    # Largest key in each (trial, cluster, beam) group wins the beam.
    order = np.lexsort((keys[t_i, n_i, k_i, i_i], group))
    g_sorted = group[order]
    is_last = np.empty(len(order), dtype=bool)
    if len(order):
        is_last[:-1] = g_sorted[1:] != g_sorted[:-1]
        is_last[-1] = True
    w = order[is_last]

    raw = flat[t_i[w], n_i[w], k_i[w], i_i[w], beam[w]]
    rates = np.log2(1.0 + raw)
    winners = dict(
        trial=t_i[w], cluster=n_i[w], user=k_i[w], antenna=i_i[w], beam=beam[w],
        sinr=raw, rate=rates,
    )
    cluster_rate = np.bincount(t_i[w] * M + n_i[w], weights=rates, minlength=T * M)
    cluster_rate = cluster_rate.reshape(T, M)
    return counts, messages, max_qual, cluster_rate, winners


def schedule_realization(
    cfg: NetworkConfig,
    real: ChannelRealization,
    keys: np.ndarray,
    thresholds: BetaTable,
) -> ScheduleOutcome:
    """Run one slot and return the full assignment."""
    table = compute_tables(cfg, real).sinr[None]
    counts, messages, max_qual, cluster_rate, win = _batch_schedule(
        cfg, table, keys[None], thresholds.beam_matrix(cfg.N_t)
    )
    B = cfg.beams_per_cluster
    assigned_user = np.full((cfg.M, B), -1, dtype=int)
    assigned_antenna = np.full((cfg.M, B), -1, dtype=int)
    served_sinr = np.zeros((cfg.M, B))
    served_rate = np.zeros((cfg.M, B))
    assigned_user[win["cluster"], win["beam"]] = win["user"]
    assigned_antenna[win["cluster"], win["beam"]] = win["antenna"]
    served_sinr[win["cluster"], win["beam"]] = win["sinr"]
    served_rate[win["cluster"], win["beam"]] = win["rate"]
    return ScheduleOutcome(
        assigned_user=assigned_user,
        assigned_antenna=assigned_antenna,
        served_sinr=served_sinr,
        served_rate=served_rate,
        candidate_counts=counts[0],
        messages=messages[0],
        feedback_bits=messages[0] * cfg.feedback_word_bits,
        max_qualifying=int(max_qual[0]),
    )


def run_round(cfg: NetworkConfig, thresholds: BetaTable, trial: int) -> ScheduleOutcome:
    """Draw trial `trial` from its stream and schedule it."""
    rng = cfg.trial_rng(trial)
    h = sample_channels(cfg, rng)
    w = sample_beamformers(rng, cfg.M, cfg.Q, n=cfg.N_t)
    keys = rng.random((cfg.M, cfg.K, cfg.N_r))
    return schedule_realization(cfg, ChannelRealization(h, w), keys, thresholds)


def _trial_chunk(cfg: NetworkConfig, trials: range):
    """Sample a chunk of trials, each from its own stream."""
    T = len(trials)
    h = np.empty((T, cfg.M, cfg.K, cfg.M, cfg.Q, cfg.N_r, cfg.N_t), dtype=complex)
    w = np.empty((T, cfg.M, cfg.Q, cfg.N_t, cfg.N_t), dtype=complex)
    keys = np.empty((T, cfg.M, cfg.K, cfg.N_r))
    for j, t in enumerate(trials):
        rng = cfg.trial_rng(t)
        h[j] = sample_channels(cfg, rng)
        w[j] = sample_beamformers(rng, cfg.M, cfg.Q, n=cfg.N_t)
        keys[j] = rng.random((cfg.M, cfg.K, cfg.N_r))
    return ChannelRealization(h, w), keys


def run_trials(
    cfg: NetworkConfig,
    thresholds: BetaTable,
    n_trials: int,
    start_trial: int = 0,
) -> TrialBatchStats:
    """Run trials [start, start + n) and aggregate per-trial statistics.

    Work is chunked to bound memory; results are identical for any chunking
    because each trial has its own stream.
    """
    per_trial = cfg.M * cfg.K * cfg.M * cfg.Q * cfg.N_r * cfg.N_t
    chunk = max(1, int(4e6 / max(per_trial, 1)))
    beam_thr = thresholds.beam_matrix(cfg.N_t)
    parts = []
    service = np.zeros((cfg.M, cfg.K), dtype=np.int64)
    done = 0
    while done < n_trials:
        b = min(chunk, n_trials - done)
        trials = range(start_trial + done, start_trial + done + b)
        real, keys = _trial_chunk(cfg, trials)
        table = compute_tables(cfg, real).sinr
        counts, messages, max_qual, cluster_rate, win = _batch_schedule(
            cfg, table, keys, beam_thr
        )
        np.add.at(service, (win["cluster"], win["user"]), 1)
        parts.append(
            TrialBatchStats(
                sum_rate=cluster_rate.sum(axis=1),
                cluster_rate=cluster_rate,
                messages=messages,
                feedback_bits=messages * cfg.feedback_word_bits,
                candidate_counts=counts,
                max_qualifying=max_qual,
                service_counts=np.zeros((cfg.M, cfg.K), dtype=np.int64),
            )
        )
        done += b
    merged = TrialBatchStats.merge(parts)
    merged.service_counts = service
    return merged
