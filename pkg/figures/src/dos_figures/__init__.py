"""Figure rendering for dos-lab sweep outputs."""

from .render import FigureSpec, curve_bands, load_table, render

__version__ = "0.1.0"

__all__ = ["FigureSpec", "curve_bands", "load_table", "render"]
