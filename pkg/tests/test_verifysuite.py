import pytest

from beamsched.verifysuite import (
    run_suites,
    suite_feedback_cap,
    suite_rank_monotonicity,
    suite_sinr_law,
)


def test_quick_report_structure_and_pass():
    report = run_suites(seed=123, quick=True)
    assert report["passed"] is True
    assert len(report["suites"]) == 8
    for suite in report["suites"]:
        assert set(suite) == {"name", "passed", "statistic", "threshold", "detail"}
        assert suite["passed"] is True


def test_fault_injection_breaks_exactly_the_law_suite():
    good = suite_sinr_law(7, n_samples=20000)
    bad = suite_sinr_law(7, n_samples=20000, fault="swap-cdf-params")
    assert good.passed and not bad.passed
    assert bad.statistic > 10 * good.statistic


def test_unknown_fault_is_rejected():
    with pytest.raises(ValueError, match="unknown fault"):
        run_suites(seed=1, quick=True, inject_fault="no-such-fault")


def test_individual_suites_run_standalone():
    assert suite_rank_monotonicity(3).passed
    assert suite_feedback_cap(3, n_trials=40).passed
