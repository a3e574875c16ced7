"""Offline figure rendering for the simulator's CSV artifacts."""

from .render import PlotJob, SchemaError, render_heatmap, render_price_series

__all__ = ["PlotJob", "SchemaError", "render_heatmap", "render_price_series"]
__version__ = "0.1.0"
