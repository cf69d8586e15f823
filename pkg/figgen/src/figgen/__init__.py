"""Report-figure rendering for beamsched sweep CSVs.

The package consumes the simulator's delimited output files only; it never
imports the simulator.  See figgen.schema for the expected columns and
figgen.render for the figure builders.
"""

from figgen.render import FigureSpec, build_figure, render, render_report_dir
from figgen.schema import KINDS, REQUIRED_COLUMNS, SchemaError

__version__ = "0.1.0"

__all__ = [
    "FigureSpec",
    "KINDS",
    "REQUIRED_COLUMNS",
    "SchemaError",
    "build_figure",
    "render",
    "render_report_dir",
    "__version__",
]
