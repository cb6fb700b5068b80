"""Figure replicas rendered from wfhsim CSV/JSON artifacts."""

from .render import FigureSpec, MissingInput, SchemaError, build_figure, render

__version__ = "0.1.0"

__all__ = ["FigureSpec", "MissingInput", "SchemaError", "build_figure", "render", "__version__"]
