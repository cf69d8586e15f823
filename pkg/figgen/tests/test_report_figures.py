"""Acceptance gate for the figure package.

The simulator is driven through its public command line only; the figures
are then rebuilt from the CSVs alone and checked for completeness, correct
limit lines, and byte-stable reruns.
"""

import math
import subprocess
import sys

import matplotlib.pyplot as plt
import pytest

from figgen.render import FigureSpec, build_figure, render_report_dir
from figgen.schema import REPORT_FILES, read_table


@pytest.fixture(scope="module")
def report_dir(tmp_path_factory):
    out = tmp_path_factory.mktemp("report")
    cmd = [
        sys.executable, "-m", "beamsched.cli", "sweep-figs",
        "--out", str(out), "--trials", "25", "--users", "12,24",
        "--seed", "20260816", "--no-render", "--quiet",
    ]
    proc = subprocess.run(cmd, capture_output=True, text=True, timeout=900)
    assert proc.returncode == 0, proc.stderr
    return out


def test_A12_report_csvs_render_to_stable_figures_with_limit_lines(report_dir):
    # all four kinds render without error, beside their CSVs
    first = render_report_dir(report_dir)
    assert sorted(path.name for path in first) == [
        "clustering.png",
        "feedback_vs_users.png",
        "rate_vs_users.png",
        "thresholds.png",
    ]
    blobs = {path.name: path.read_bytes() for path in first}
    for blob in blobs.values():
        assert blob.startswith(b"\x89PNG")

    # rerunning over the same CSVs reproduces every byte
    second = render_report_dir(report_dir)
    for path in second:
        assert path.read_bytes() == blobs[path.name]

    # the feedback figure carries one limit line per series, at the
    # beams-times-word-bits level for that series
    csv_path = report_dir / REPORT_FILES["feedback"]
    table = read_table(csv_path, "feedback")
    expected = set()
    for q, n_t in zip(table["Q"], table["N_t"]):
        beams = int(q) * int(n_t)
        expected.add(float(beams * math.ceil(math.log2(beams))))
    assert len(expected) >= 2
    fig = build_figure(
        FigureSpec(csv_path=str(csv_path), kind="feedback", out_path="unused.png")
    )
    levels = set()
    for line in fig.axes[0].get_lines():
        ys = [float(y) for y in line.get_ydata()]
        if len(ys) >= 2 and len(set(ys)) == 1:
            levels.add(ys[0])
    plt.close(fig)
    assert expected <= levels
