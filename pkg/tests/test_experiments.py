import json

import numpy as np
import pytest

from beamsched.calibration import calibrate_thresholds
from beamsched.config import (
    AttenuationProfile,
    AttenuationSpec,
    CalibrationSettings,
    ConfigError,
    NetworkConfig,
    RunConfig,
    SweepSettings,
)
from beamsched.experiments import (
    METRICS_COLUMNS,
    evaluate_point,
    load_or_calibrate,
    run_all_figures,
    run_point_trials,
    run_sweep,
    sweep_networks,
    threshold_cache_key,
    write_outcome_log,
)
from beamsched.scheduler import run_trials


def make_run_cfg(sweep=None, K=12, M=1, Q=2, seed=5):
    att_spec = AttenuationSpec()
    att = att_spec.materialize(M, K, Q, seed)
    net = NetworkConfig(M=M, Q=Q, N_t=2, N_r=1, K=K, rho=10.0, attenuation=att, seed=seed)
    return RunConfig(
        network=net,
        attenuation_spec=att_spec,
        calibration=CalibrationSettings(),
        sweep=sweep or SweepSettings(trials=25),
    )


def test_sweep_networks_users():
    run = make_run_cfg(SweepSettings(users=(5, 9), trials=10))
    nets = sweep_networks(run)
    assert [n.K for n in nets] == [5, 9]
    assert nets[0].attenuation.values.shape == (1, 5, 1, 2)


def test_sweep_networks_rho():
    run = make_run_cfg(SweepSettings(rho_db=(0.0, 10.0), trials=10))
    nets = sweep_networks(run)
    assert [round(n.rho_db, 6) for n in nets] == [0.0, 10.0]
    assert all(n.K == 12 for n in nets)


def test_sweep_networks_clusters():
    run = make_run_cfg(SweepSettings(clusters=((2, 1), (1, 2)), total_users=24, trials=10))
    nets = sweep_networks(run)
    assert [(n.M, n.Q, n.K) for n in nets] == [(2, 1, 12), (1, 2, 24)]
    bad = make_run_cfg(SweepSettings(clusters=((5, 1),), total_users=24, trials=10))
    with pytest.raises(ConfigError, match="divisible"):
        sweep_networks(bad)


def test_run_point_trials_worker_count_is_invisible(tmp_path):
    run = make_run_cfg()
    cfg = run.network
    table = calibrate_thresholds(cfg)
    solo = run_point_trials(cfg, table, 30, workers=1)
    duo = run_point_trials(cfg, table, 30, workers=2)
    assert np.array_equal(solo.sum_rate, duo.sum_rate)
    assert np.array_equal(solo.feedback_bits, duo.feedback_bits)
    assert np.array_equal(solo.service_counts, duo.service_counts)
    assert np.array_equal(solo.candidate_counts, duo.candidate_counts)


def test_metrics_csv_and_sidecar_are_stable(tmp_path):
    run = make_run_cfg(SweepSettings(users=(6, 12), trials=20))
    out1 = tmp_path / "a.csv"
    out2 = tmp_path / "b.csv"
    run_sweep(run, out1, workers=1)
    run_sweep(run, out2, workers=2)
    assert out1.read_bytes() == out2.read_bytes()
    header = out1.read_text().splitlines()[0]
    assert header.split(",") == METRICS_COLUMNS
    assert b"\r\n" in out1.read_bytes()

    meta = json.loads((tmp_path / "a.csv.meta.json").read_text())
    assert meta["config_hash"] == run.network.config_hash()
    assert meta["version"]
    assert "timestamp" not in json.dumps(meta).lower()

    # rows parse and round-trip as floats
    rows = out1.read_text().splitlines()[1:]
    first = dict(zip(METRICS_COLUMNS, rows[0].split(",")))
    assert int(first["K"]) == 6
    assert float(first["mean_sum_rate"]) > 0


def test_evaluate_point_summary_fields():
    run = make_run_cfg()
    summary, table = evaluate_point(run.network, run.calibration, 25)
    assert summary.trials == 25
    assert summary.beta_min == pytest.approx(table.min_value)
    assert summary.mean_fb_bits >= 0
    assert np.isfinite(summary.lower_bound)


def test_threshold_cache_roundtrip(tmp_path):
    run = make_run_cfg()
    cfg = run.network
    settings = CalibrationSettings()
    prefix = str(tmp_path / "beta")
    t1 = load_or_calibrate(cfg, settings, prefix)
    key = threshold_cache_key(cfg, settings)
    cached = tmp_path / ("beta-%s.csv" % key)
    assert cached.exists()
    # poison the cache: a reload must come from the file, proving reuse
    text = cached.read_text().replace(repr(float(t1.values[0, 0, 0])), "123.0", 1)
    cached.write_text(text)
    t2 = load_or_calibrate(cfg, settings, prefix)
    assert t2.values[0, 0, 0] == 123.0
    # a different network misses the cache
    other = cfg.replace(K=cfg.K + 1, attenuation=AttenuationProfile.homogeneous(1, cfg.K + 1, 2))
    assert threshold_cache_key(other, settings) != key


def test_outcome_log_contents(tmp_path):
    run = make_run_cfg()
    cfg = run.network
    table = calibrate_thresholds(cfg)
    path = tmp_path / "out.jsonl"
    write_outcome_log(path, cfg, table, 6)
    lines = path.read_text().splitlines()
    assert len(lines) == 6
    batch = run_trials(cfg, table, 6)
    for t, line in enumerate(lines):
        rec = json.loads(line)
        assert rec["trial"] == t
        assert rec["sum_rate"] == pytest.approx(batch.sum_rate[t])
        bits = sum(c["feedback_bits"] for c in rec["clusters"])
        assert bits == batch.feedback_bits[t].sum()
        for c in rec["clusters"]:
            for beam in c["beams"]:
                assert beam["rate"] == pytest.approx(np.log2(1 + beam["sinr"]))


def test_report_figures_write_expected_files(tmp_path):
    paths = run_all_figures(tmp_path, trials=8, seed=3, k_grid=(5, 10), users_grid=(12, 24))
    names = sorted(p.name for p in paths)
    assert names == [
        "clustering.csv", "feedback_vs_users.csv", "rate_vs_users.csv", "thresholds.csv",
    ]
    thr = (tmp_path / "thresholds.csv").read_text().splitlines()
    assert thr[0] == "K,beta,rho_dB"
    assert len(thr) == 1 + 3 * 2  # three SNRs, two user counts
    rate = (tmp_path / "rate_vs_users.csv").read_text().splitlines()
    assert rate[0].split(",") == METRICS_COLUMNS
    assert len(rate) == 1 + 4 * 2  # four (M, N_t) series
    fb = (tmp_path / "feedback_vs_users.csv").read_text().splitlines()
    assert len(fb) == 1 + 5 * 2  # five (Q, N_t) series
    cl = (tmp_path / "clustering.csv").read_text().splitlines()
    assert len(cl) == 1 + 2 * 4 * 2  # two N_t, four clusterings, two user totals
    for p in paths:
        assert json.loads((tmp_path / (p.name + ".meta.json")).read_text())


def test_report_figures_only_filter(tmp_path):
    paths = run_all_figures(tmp_path, trials=5, seed=1, k_grid=(4,), only="thresholds")
    assert [p.name for p in paths] == ["thresholds.csv"]
