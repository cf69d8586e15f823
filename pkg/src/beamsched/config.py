"""Network description, attenuation profiles, and the seeding policy.

All public entry points take signal-to-noise ratios in dB and convert to linear
scale here, at the boundary.  Everything downstream of this module works with
linear quantities only.

Randomness is organized as one master seed plus named Philox streams.  A stream
is identified by (seed, domain, index); the same triple always yields the same
generator, independent of how many other streams were opened before it.  Trial
streams use the trial index, so running trials in any batch size, order, or
process count reproduces identical realizations.
"""

from __future__ import annotations

import dataclasses
import hashlib
import json
from pathlib import Path

import numpy as np

try:
    import tomllib
except ImportError:  # Python 3.10
    import tomli as tomllib

# Stream domains.  Keep these stable: changing them silently changes every result.
DOMAIN_ATTENUATION = 0
DOMAIN_CALIBRATION = 1
DOMAIN_TRIAL = 2
DOMAIN_ANALYSIS = 3

DEFAULT_SEED = 20260816


class ConfigError(ValueError):
    """Raised when a configuration value is missing, malformed, or inconsistent."""


def make_stream(seed: int, domain: int, index: int = 0) -> np.random.Generator:
    """Return the Philox generator for stream (seed, domain, index)."""
    ss = np.random.SeedSequence(entropy=int(seed), spawn_key=(int(domain), int(index)))
    return np.random.Generator(np.random.Philox(ss))


@dataclasses.dataclass(frozen=True)
class AttenuationExtremes:
    """Attenuation extremes seen from one serving cluster.

    own_min and own_max range over the cluster's own users and stations;
    net_min and net_max additionally range over every interfering cluster.
    net_min <= own_min <= own_max <= net_max always holds.
    """

    own_min: float
    own_max: float
    net_min: float
    net_max: float


@dataclasses.dataclass(frozen=True)
class AttenuationProfile:
    """Large-scale attenuation between every (cluster, user) pair and station.

    values[n, k, m, r] is the power attenuation from station r of cluster m to
    user k of cluster n.  Entries are linear and strictly positive.
    """

    values: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        if v.ndim != 4 or v.shape[0] != v.shape[2]:
            raise ConfigError(
                "attenuation values must have shape (M, K, M, Q), got %r" % (v.shape,)
            )
        if not np.all(np.isfinite(v)) or np.any(v <= 0.0):
            raise ConfigError("attenuation values must be finite and > 0")
        v.setflags(write=False)
        object.__setattr__(self, "values", v)

    @property
    def is_homogeneous(self) -> bool:
        return bool(np.all(self.values == self.values.flat[0]))

    @classmethod
    def homogeneous(cls, M: int, K: int, Q: int, value: float = 1.0) -> "AttenuationProfile":
        return cls(np.full((M, K, M, Q), float(value)))

    @classmethod
    def log_uniform_db(
        cls, M: int, K: int, Q: int, low_db: float, high_db: float, rng: np.random.Generator
    ) -> "AttenuationProfile":
        """Draw each entry independently, uniform in dB over [low_db, high_db]."""
        if high_db < low_db:
            raise ConfigError("attenuation spread_db must satisfy low <= high")
        db = rng.uniform(low_db, high_db, size=(M, K, M, Q))
        return cls(10.0 ** (db / 10.0))

    @classmethod
    def from_csv(cls, path: str | Path, M: int, K: int, Q: int) -> "AttenuationProfile":
        """Load a flat table with columns n,k,m,r,value covering every index."""
        raw = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
        if raw.shape[1] != 5:
            raise ConfigError("attenuation csv needs columns n,k,m,r,value")
        vals = np.full((M, K, M, Q), np.nan)
        n, k, m, r = (raw[:, i].astype(int) for i in range(4))
        try:
            vals[n, k, m, r] = raw[:, 4]
        except IndexError as exc:
            raise ConfigError("attenuation csv index out of range: %s" % exc) from None
        if np.any(np.isnan(vals)):
            raise ConfigError("attenuation csv does not cover every (n,k,m,r) entry")
        return cls(vals)

    def extremes(self, n: int) -> AttenuationExtremes:
        own = self.values[n, :, n, :]
        net = self.values[n]
        return AttenuationExtremes(
            own_min=float(own.min()),
            own_max=float(own.max()),
            net_min=float(net.min()),
            net_max=float(net.max()),
        )


@dataclasses.dataclass(frozen=True)
class AttenuationSpec:
    """Recipe for building an AttenuationProfile at any network size.

    kind is one of "homogeneous", "spread_db", or "csv".  Sweeps that change the
    network size rebuild the profile from this recipe; the spread_db kind draws
    from the (seed, attenuation, point_index) stream so each sweep point gets a
    reproducible, independent profile.
    """

    kind: str = "homogeneous"
    value: float = 1.0
    low_db: float = 0.0
    high_db: float = 0.0
    path: str = ""

    def materialize(self, M: int, K: int, Q: int, seed: int, index: int = 0) -> AttenuationProfile:
        if self.kind == "homogeneous":
            return AttenuationProfile.homogeneous(M, K, Q, self.value)
        if self.kind == "spread_db":
            rng = make_stream(seed, DOMAIN_ATTENUATION, index)
            return AttenuationProfile.log_uniform_db(M, K, Q, self.low_db, self.high_db, rng)
        if self.kind == "csv":
            return AttenuationProfile.from_csv(self.path, M, K, Q)
        raise ConfigError("unknown attenuation kind %r" % self.kind)


@dataclasses.dataclass(frozen=True)
class NetworkConfig:
    """One concrete network: sizes, SNR, attenuation, and the master seed.

    M      cooperating clusters
    Q      stations per cluster
    N_t    transmit antennas per station (also beams per station)
    N_r    receive antennas per user
    K      users per cluster
    rho    per-beam transmit SNR, linear
    """

    M: int
    Q: int
    N_t: int
    N_r: int
    K: int
    rho: float
    attenuation: AttenuationProfile
    seed: int = DEFAULT_SEED

    def __post_init__(self):
        for name in ("M", "Q", "N_t", "N_r", "K"):
            val = getattr(self, name)
            if not isinstance(val, (int, np.integer)) or val < 1:
                raise ConfigError("network.%s must be a positive integer, got %r" % (name, val))
        if not (self.rho > 0.0 and np.isfinite(self.rho)):
            raise ConfigError("network.rho must be finite and > 0, got %r" % self.rho)
        expect = (self.M, self.K, self.M, self.Q)
        if self.attenuation.values.shape != expect:
            raise ConfigError(
                "attenuation shape %r does not match network sizes %r"
                % (self.attenuation.values.shape, expect)
            )

    @property
    def rho_db(self) -> float:
        return 10.0 * float(np.log10(self.rho))

    @property
    def beams_per_cluster(self) -> int:
        return self.Q * self.N_t

    @property
    def total_beams(self) -> int:
        return self.M * self.Q * self.N_t

    @property
    def feedback_word_bits(self) -> int:
        """Bits per feedback message: index of one beam out of Q*N_t."""
        return int(np.ceil(np.log2(self.beams_per_cluster))) if self.beams_per_cluster > 1 else 0

    @property
    def calibration_target(self) -> float:
        """Quantile level the threshold is calibrated to: 1 - 1/(K*N_r)."""
        return 1.0 - 1.0 / (self.K * self.N_r)

    def trial_rng(self, trial: int) -> np.random.Generator:
        return make_stream(self.seed, DOMAIN_TRIAL, trial)

    def calibration_rng(self, index: int = 0) -> np.random.Generator:
        return make_stream(self.seed, DOMAIN_CALIBRATION, index)

    def replace(self, **kw) -> "NetworkConfig":
        return dataclasses.replace(self, **kw)

    def canonical_dict(self) -> dict:
        att = self.attenuation.values
        return {
            "M": self.M,
            "Q": self.Q,
            "N_t": self.N_t,
            "N_r": self.N_r,
            "K": self.K,
            "rho": self.rho,
            "seed": self.seed,
            "attenuation_sha256": hashlib.sha256(np.ascontiguousarray(att).tobytes()).hexdigest(),
        }

    def config_hash(self) -> str:
        blob = json.dumps(self.canonical_dict(), sort_keys=True).encode()
        return hashlib.sha256(blob).hexdigest()


@dataclasses.dataclass(frozen=True)
class CalibrationSettings:
    """How thresholds are computed.

    method "auto" uses the exact closed-form quantile when the attenuation is
    homogeneous and the empirical per-user quantile otherwise; "closed-form" and
    "empirical" force one path.  realizations == 0 sizes the empirical sample
    automatically from tail_target (expected samples above the target quantile).
    """

    method: str = "auto"
    realizations: int = 0
    tail_target: int = 2000

    def __post_init__(self):
        if self.method not in ("auto", "empirical", "closed-form"):
            raise ConfigError(
                "calibration.method must be auto, empirical, or closed-form, got %r" % self.method
            )
        if self.realizations < 0 or self.tail_target < 1:
            raise ConfigError("calibration sizes must be positive")


@dataclasses.dataclass(frozen=True)
class SweepSettings:
    """Optional sweep over users, SNR, or cluster shape.

    At most one of users / rho_db / clusters may be set.  A clusters sweep keeps
    total stations M*Q and total users M*K fixed while reshaping the network;
    total_users must then be divisible by each M.
    """

    users: tuple = ()
    rho_db: tuple = ()
    clusters: tuple = ()
    total_users: int = 0
    trials: int = 2000

    def __post_init__(self):
        active = [bool(self.users), bool(self.rho_db), bool(self.clusters)]
        if sum(active) > 1:
            raise ConfigError("sweep may set only one of users, rho_db, clusters")
        if self.clusters and self.total_users < 1:
            raise ConfigError("sweep.total_users is required for a clusters sweep")
        if self.trials < 1:
            raise ConfigError("sweep.trials must be >= 1")

    @property
    def kind(self) -> str:
        if self.users:
            return "users"
        if self.rho_db:
            return "rho_db"
        if self.clusters:
            return "clusters"
        return "none"


@dataclasses.dataclass(frozen=True)
class RunConfig:
    """Everything a CLI run needs: base network, attenuation recipe, settings."""

    network: NetworkConfig
    attenuation_spec: AttenuationSpec
    calibration: CalibrationSettings
    sweep: SweepSettings


def _require(section: dict, key: str, where: str):
    if key not in section:
        raise ConfigError("missing required field %s.%s" % (where, key))
    return section[key]


def parse_config(doc: dict) -> RunConfig:
    """Build a RunConfig from a parsed TOML document."""
    if "network" not in doc:
        raise ConfigError("missing required section [network]")
    net = doc["network"]
    for key in net:
        if key not in ("M", "Q", "N_t", "N_r", "K", "rho_db", "seed"):
            raise ConfigError("unknown field network.%s" % key)
    M = _require(net, "M", "network")
    Q = _require(net, "Q", "network")
    N_t = _require(net, "N_t", "network")
    N_r = _require(net, "N_r", "network")
    K = _require(net, "K", "network")
    rho_db = _require(net, "rho_db", "network")
    if not isinstance(rho_db, (int, float)) or isinstance(rho_db, bool):
        raise ConfigError("network.rho_db must be a number, got %r" % rho_db)
    seed = net.get("seed", DEFAULT_SEED)

    att = doc.get("attenuation", {})
    for key in att:
        if key not in ("value", "spread_db", "csv"):
            raise ConfigError("unknown field attenuation.%s" % key)
    if sum(k in att for k in ("value", "spread_db", "csv")) > 1:
        raise ConfigError("attenuation accepts only one of value, spread_db, csv")
    if "spread_db" in att:
        pair = att["spread_db"]
        if not (isinstance(pair, list) and len(pair) == 2):
            raise ConfigError("attenuation.spread_db must be a [low, high] pair in dB")
        spec = AttenuationSpec(kind="spread_db", low_db=float(pair[0]), high_db=float(pair[1]))
    elif "csv" in att:
        spec = AttenuationSpec(kind="csv", path=str(att["csv"]))
    else:
        spec = AttenuationSpec(kind="homogeneous", value=float(att.get("value", 1.0)))

    cal = doc.get("calibration", {})
    for key in cal:
        if key not in ("method", "realizations", "tail_target"):
            raise ConfigError("unknown field calibration.%s" % key)
    calibration = CalibrationSettings(
        method=cal.get("method", "auto"),
        realizations=int(cal.get("realizations", 0)),
        tail_target=int(cal.get("tail_target", 2000)),
    )

    sw = doc.get("sweep", {})
    for key in sw:
        if key not in ("users", "rho_db", "clusters", "total_users", "trials"):
            raise ConfigError("unknown field sweep.%s" % key)
    clusters = tuple(tuple(int(x) for x in pair) for pair in sw.get("clusters", []))
    for pair in clusters:
        if len(pair) != 2:
            raise ConfigError("sweep.clusters entries must be [M, Q] pairs")
    sweep = SweepSettings(
        users=tuple(int(x) for x in sw.get("users", [])),
        rho_db=tuple(float(x) for x in sw.get("rho_db", [])),
        clusters=clusters,
        total_users=int(sw.get("total_users", 0)),
        trials=int(sw.get("trials", 2000)),
    )

    try:
        intM, intQ, intK = int(M), int(Q), int(K)
        profile = spec.materialize(intM, intK, intQ, int(seed), index=0)
        network = NetworkConfig(
            M=intM,
            Q=intQ,
            N_t=int(N_t),
            N_r=int(N_r),
            K=intK,
            rho=float(10.0 ** (float(rho_db) / 10.0)),
            attenuation=profile,
            seed=int(seed),
        )
    except (TypeError, ValueError) as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigError("invalid network field: %s" % exc) from None
    return RunConfig(network=network, attenuation_spec=spec, calibration=calibration, sweep=sweep)


def load_config(path: str | Path) -> RunConfig:
    """Parse a TOML run configuration from disk."""
    try:
        with open(path, "rb") as fh:
            doc = tomllib.load(fh)
    except FileNotFoundError:
        raise ConfigError("config file not found: %s" % path) from None
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError("config file %s is not valid TOML: %s" % (path, exc)) from None
    return parse_config(doc)
