"""Figure rendering for catrepeater sweep outputs."""

from .figures import FigureSpec, SchemaError, plot_fig2, plot_fig3, render

__all__ = ["FigureSpec", "SchemaError", "plot_fig2", "plot_fig3", "render"]
__version__ = "0.1.0"
