"""Figure rendering for fedcomp experiment logs.

Consumes the fixed CSV schema written by the fedcomp harness and renders
objective-gap (or Lyapunov / ergodic-metric) curves against communication
cost on a log-scale y axis.
"""

from .plotting import PlotSpec, SchemaError, build_figure, load_curve, render

__all__ = ["PlotSpec", "SchemaError", "build_figure", "load_curve", "render"]
__version__ = "0.1.0"
