"""CDFG passes: overhead removal and optimization undoing."""

from .base import PassReport, PassStats
from .constprop import propagate_constants
from .pipeline import DEFAULT_ORDER, PassConfig, run_pipeline
from .promote import ShiftAdd, csd_expand, promote_strength
from .reroll import reroll_loops
from .stack import remove_stack_ops
from .widths import reduce_operator_sizes

__all__ = [
    "DEFAULT_ORDER", "PassConfig", "PassReport", "PassStats", "ShiftAdd", "csd_expand",
    "promote_strength", "propagate_constants", "reduce_operator_sizes", "remove_stack_ops",
    "reroll_loops", "run_pipeline",
]
