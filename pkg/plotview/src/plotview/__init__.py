"""Static figures from front-propagation run directories (CSV snapshots)."""

__version__ = "0.1.0"

from .io import RunData, load_run, read_csv
from .render import PlotJob, RenderResult, render

__all__ = ["PlotJob", "RenderResult", "RunData", "load_run", "read_csv", "render"]
