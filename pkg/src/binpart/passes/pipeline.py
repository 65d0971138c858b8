"""Pass configuration and the default optimization pipeline."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

from ..errors import ConfigError
from .base import Graphs, PassReport
from .constprop import propagate_constants
from .promote import promote_strength
from .reroll import reroll_loops
from .stack import remove_stack_ops
from .widths import reduce_operator_sizes

DEFAULT_ORDER = (
    "propagate_constants", "remove_stack_ops", "propagate_constants",
    "reroll_loops", "promote_strength", "reduce_operator_sizes",
)


@dataclass
class PassConfig:
    order: tuple[str, ...] = DEFAULT_ORDER
    size_iterations: int = 64
    reroll_max_factor: int = 8
    promote_max_chain: int = 8
    verify: bool = True

    def __post_init__(self):
        self.order = tuple(self.order)
        unknown = [p for p in self.order if p not in PASSES]
        if unknown:
            raise ConfigError(f"unknown passes: {', '.join(unknown)}")
        if min(self.size_iterations, self.reroll_max_factor, self.promote_max_chain) <= 0:
            raise ConfigError("pass caps must be positive")

    @classmethod
    def parse(cls, text: str | None, **kw) -> "PassConfig":
        """``None`` keeps the default order, ``""`` disables every pass, else a comma list."""
        if text is None:
            return cls(**kw)
        return cls(order=tuple(p.strip() for p in text.split(",") if p.strip()), **kw)


def _run_one(name: str, g: Graphs, cfg: PassConfig):
    if name == "reroll_loops":
        return reroll_loops(g, max_factor=cfg.reroll_max_factor)
    if name == "promote_strength":
        return promote_strength(g, max_chain=cfg.promote_max_chain)
    return PASSES[name](g)


PASSES: dict[str, Callable] = {
    "propagate_constants": propagate_constants,
    "remove_stack_ops": remove_stack_ops,
    "reroll_loops": reroll_loops,
    "promote_strength": promote_strength,
    "reduce_operator_sizes": reduce_operator_sizes,
}


def run_pipeline(g: Graphs, config: PassConfig | None = None,
                 on_stage: Callable[[str, Graphs], None] | None = None) -> tuple[Graphs, PassReport]:
    """Apply the configured passes in order, checking well-formedness after each.

    ``on_stage(name, graph)`` is called after every stage, which is how the
    tests run the execution oracle at each stage boundary.
    """
    config = config or PassConfig()
    report = PassReport()
    for name in config.order:
        g, st = _run_one(name, g, config)
        if config.verify:
            g.verify()
        report.stages.append(st)
        if on_stage is not None:
            on_stage(name, g)
    return g, report
