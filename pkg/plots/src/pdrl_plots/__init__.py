"""Comparison-figure rendering for pdrl training CSVs."""
from .comparison import PlotSpec, SchemaError, aggregate, build_figure, read_rows, render_comparison

__version__ = "0.1.0"
