"""Figure rendering for blocksparse experiment outputs."""

__version__ = "0.1.0"

from .render import (  # noqa: F401
    plot_recovery,
    plot_recovery_extremal,
    plot_regression,
    render,
    render_metrics_table,
)
from .schema import SchemaError, read_metrics, read_summary  # noqa: F401
