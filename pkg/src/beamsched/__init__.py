"""Monte-Carlo simulator for threshold-fed random beamforming in clustered downlinks.

The library models a network of cooperating base-station clusters that serve
single- or multi-antenna users through randomly drawn unitary beams.  Users
compare their per-beam SINR against a calibrated threshold, feed back the index
of at most one beam per receive antenna, and the scheduler assigns each beam to
a uniformly chosen candidate.  Modules:

- config: network description, attenuation profiles, seeding policy
- channel: channel and beamformer sampling
- sinr: SINR tables, attenuation-extremal surrogates, closed-form laws
- calibration: threshold tables (empirical and closed form)
- scheduler: feedback and assignment rounds, batched trial runner
- metrics: sum rate, feedback cost, fairness, scaling reports
- orderstats: order-statistic CDFs, rank mixtures, rate-bound integrals
- experiments: sweep drivers and delimited/JSON output
- verifysuite: self-check suites behind the `verify` CLI command
"""

from beamsched.config import AttenuationProfile, NetworkConfig, load_config

__all__ = ["AttenuationProfile", "NetworkConfig", "load_config"]

__version__ = "0.1.0"
