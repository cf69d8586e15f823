"""CSV schemas for the four report figures.

The simulator writes delimited tables; each figure kind reads one.  The
header is validated before any data is parsed, and problems are reported by
column name so the caller can see exactly what the file lacks.
"""

from __future__ import annotations

import csv
from pathlib import Path

import numpy as np

KINDS = ("thresholds", "rate", "feedback", "clustering")

# Columns each kind consumes; extra columns are allowed and ignored.
REQUIRED_COLUMNS = {
    "thresholds": ("K", "beta", "rho_dB"),
    "rate": (
        "M", "Q", "N_t", "N_r", "K", "rho_dB",
        "mean_sum_rate", "sum_rate_se", "ref_curve",
    ),
    "feedback": (
        "M", "Q", "N_t", "N_r", "K", "rho_dB",
        "mean_fb_bits", "fb_bits_se",
    ),
    "clustering": (
        "M", "Q", "N_t", "N_r", "K", "rho_dB",
        "mean_sum_rate", "sum_rate_se",
    ),
}

# File names the simulator's report directory uses, keyed by figure kind.
REPORT_FILES = {
    "thresholds": "thresholds.csv",
    "rate": "rate_vs_users.csv",
    "feedback": "feedback_vs_users.csv",
    "clustering": "clustering.csv",
}


class SchemaError(ValueError):
    """The CSV cannot feed the requested figure kind."""


def read_table(path: str | Path, kind: str) -> dict[str, np.ndarray]:
    """Load the columns `kind` needs as float arrays keyed by column name."""
    if kind not in REQUIRED_COLUMNS:
        raise SchemaError(
            "unknown figure kind %r; expected one of %s" % (kind, ", ".join(KINDS))
        )
    path = Path(path)
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        header = reader.fieldnames or []
        missing = [c for c in REQUIRED_COLUMNS[kind] if c not in header]
        if missing:
            raise SchemaError("%s is missing columns: %s" % (path.name, ", ".join(missing)))
        rows = list(reader)
    if not rows:
        raise SchemaError("%s has no data rows" % path.name)
    table = {}
    for col in REQUIRED_COLUMNS[kind]:
        try:
            table[col] = np.array([float(row[col]) for row in rows])
        except (TypeError, ValueError):
            raise SchemaError(
                "%s column %s has non-numeric entries" % (path.name, col)
            ) from None
    return table
