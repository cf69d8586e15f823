import numpy as np
import pytest
from scipy import stats

from beamsched.channel import ChannelRealization, sample_batch_shared
from beamsched.config import AttenuationProfile, NetworkConfig
from beamsched.orderstats import verify_ordered_bounds
from beamsched.sinr import (
    SinrLaw,
    bisect_quantile,
    compute_tables,
    exact_sinr_law,
    surrogate_laws,
)


def homog_cfg(**kw):
    args = dict(M=1, Q=1, N_t=2, N_r=1, K=1, rho=10.0, seed=0)
    args.update(kw)
    att = AttenuationProfile.homogeneous(args["M"], args["K"], args["Q"])
    return NetworkConfig(attenuation=att, **args)


def test_single_user_two_beam_hand_values():
    """One user, two orthogonal beams, rho = 10.

    A channel aligned with beam 1 sees no interference: SINR = 1 / (1/rho) = 10.
    A channel spread equally over both beams sees one unit of interference:
    SINR = 1 / (1 + 1/rho) = 10/11.
    """
    cfg = homog_cfg()
    beams = np.eye(2, dtype=complex).reshape(1, 1, 2, 2)

    aligned = np.zeros((1, 1, 1, 1, 1, 2), dtype=complex)
    aligned[..., 0] = 1.0
    t = compute_tables(cfg, ChannelRealization(aligned, beams)).sinr
    assert t.shape == (1, 1, 1, 1, 2)
    assert t[0, 0, 0, 0, 0] == pytest.approx(10.0, rel=1e-12)
    assert t[0, 0, 0, 0, 1] == pytest.approx(0.0, abs=1e-15)

    spread = np.ones((1, 1, 1, 1, 1, 2), dtype=complex)
    t = compute_tables(cfg, ChannelRealization(spread, beams)).sinr
    assert t[0, 0, 0, 0, 0] == pytest.approx(1.0 / 1.1, rel=1e-12)
    assert t[0, 0, 0, 0, 1] == pytest.approx(1.0 / 1.1, rel=1e-12)


def test_cross_cluster_attenuation_enters_interference():
    # Two one-station clusters, single antenna each, all-ones channels.
    # Own link attenuation 2.0, cross link 0.5, rho = 4:
    # SINR = 2 / (0.5 + 1/4) = 8/3.
    att = np.empty((2, 1, 2, 1))
    att[0, 0, 0, 0] = 2.0
    att[0, 0, 1, 0] = 0.5
    att[1, 0, 1, 0] = 2.0
    att[1, 0, 0, 0] = 0.5
    cfg = NetworkConfig(M=2, Q=1, N_t=1, N_r=1, K=1, rho=4.0,
                        attenuation=AttenuationProfile(att), seed=0)
    h = np.ones((2, 1, 2, 1, 1, 1), dtype=complex)
    w = np.ones((2, 1, 1, 1), dtype=complex)
    t = compute_tables(cfg, ChannelRealization(h, w)).sinr
    assert t[0, 0, 0, 0, 0] == pytest.approx(8.0 / 3.0, rel=1e-12)
    assert t[1, 0, 0, 0, 0] == pytest.approx(8.0 / 3.0, rel=1e-12)


def test_homogeneous_surrogates_coincide_with_sinr():
    cfg = homog_cfg(M=2, Q=2, N_t=2, N_r=2, K=3)
    real = sample_batch_shared(cfg, np.random.default_rng(1), 4)
    tables = compute_tables(cfg, real, with_bounds=True)
    assert np.allclose(tables.lower, tables.sinr, rtol=1e-12)
    assert np.allclose(tables.upper, tables.sinr, rtol=1e-12)


def test_heterogeneous_sandwich_holds():
    rng = np.random.default_rng(2)
    att = AttenuationProfile.log_uniform_db(2, 6, 2, -10.0, 10.0, rng)
    cfg = NetworkConfig(M=2, Q=2, N_t=2, N_r=2, K=6, rho=10.0, attenuation=att, seed=0)
    real = sample_batch_shared(cfg, rng, 50)
    tables = compute_tables(cfg, real, with_bounds=True)
    entry, ranked = verify_ordered_bounds(tables.lower, tables.sinr, tables.upper)
    assert entry == 0 and ranked == 0


def test_ordered_bound_check_detects_planted_violation():
    rng = np.random.default_rng(3)
    shape = (2, 5, 1, 1, 2)
    sinr = rng.random(shape) + 0.5
    lower = sinr * 0.9
    upper = sinr * 1.1
    entry, ranked = verify_ordered_bounds(lower, sinr, upper)
    assert entry == 0 and ranked == 0
    lower_bad = lower.copy()
    lower_bad[0, 2, 0, 0, 1] = sinr[0, 2, 0, 0, 1] * 1.5  # above the value it bounds
    entry, ranked = verify_ordered_bounds(lower_bad, sinr, upper)
    assert entry >= 1
    with pytest.raises(ValueError):
        verify_ordered_bounds(lower[:1], sinr, upper)


def test_batch_matches_single_realizations():
    cfg = homog_cfg(M=2, Q=1, N_t=2, N_r=1, K=3)
    real = sample_batch_shared(cfg, np.random.default_rng(4), 5)
    batch = compute_tables(cfg, real).sinr
    for b in range(5):
        one = compute_tables(
            cfg, ChannelRealization(real.channels[b], real.beams[b])
        ).sinr
        assert np.array_equal(one, batch[b])


def test_law_median_of_pure_exponential():
    # No interferers: the law is exponential with the rate scale,
    # so the median is scale * ln 2.
    law = SinrLaw(rate_scale=10.0, interference_ratio=0.0, n_interferers=0)
    assert law.quantile(0.5) == pytest.approx(10.0 * np.log(2.0), rel=1e-7)


def test_law_cdf_properties():
    law = SinrLaw(rate_scale=10.0, interference_ratio=1.0, n_interferers=7)
    x = np.linspace(0.0, 50.0, 301)
    c = law.cdf(x)
    assert c[0] == 0.0
    assert np.all(np.diff(c) > 0)
    assert c[-1] < 1.0 and law.cdf(1e6) > 1.0 - 1e-10
    assert np.allclose(law.cdf(x) + law.sf(x), 1.0)
    for p in (0.25, 0.9, 0.999):
        assert law.cdf(law.quantile(p)) == pytest.approx(p, abs=1e-7)


def test_bisect_quantile_doubles_bracket():
    law = SinrLaw(rate_scale=5000.0, interference_ratio=0.0, n_interferers=0)
    q = bisect_quantile(law.cdf, 0.999)
    assert q == pytest.approx(5000.0 * np.log(1000.0), rel=1e-6)


def test_exact_law_requires_homogeneity():
    rng = np.random.default_rng(5)
    att = AttenuationProfile.log_uniform_db(1, 3, 1, -3.0, 3.0, rng)
    cfg = NetworkConfig(M=1, Q=1, N_t=2, N_r=1, K=3, rho=10.0, attenuation=att, seed=0)
    with pytest.raises(ValueError):
        exact_sinr_law(cfg)
    lo, hi = surrogate_laws(cfg, 0)
    assert lo.rate_scale < hi.rate_scale
    assert lo.interference_ratio > hi.interference_ratio


def test_homogeneous_samples_match_exact_law():
    cfg = homog_cfg(M=2, Q=2, N_t=2, N_r=1, K=40, rho=10.0)
    real = sample_batch_shared(cfg, np.random.default_rng(6), 40)
    samples = compute_tables(cfg, real).sinr.ravel()
    ks = stats.kstest(samples, exact_sinr_law(cfg).cdf).statistic
    assert ks < 0.02
