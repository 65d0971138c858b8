"""Functional-unit classes, counts and latencies."""

from __future__ import annotations

from dataclasses import dataclass, field, replace

from ..decompiler.ir import COMPARES, SHIFTS
from ..errors import ConfigError

CLASSES = ("adder", "multiplier", "shifter", "logic", "comparator", "memory_port")

_UNIT = {"add": "adder", "sub": "adder", "mul": "multiplier", "load": "memory_port", "store": "memory_port",
         "and": "logic", "or": "logic", "xor": "logic", "nor": "logic", "copy": "logic"}
_UNIT.update({k: "shifter" for k in SHIFTS})
_UNIT.update({k: "comparator" for k in COMPARES})

# nodes that occupy no functional unit and no control step
FREE = frozenset({"phi", "param", "const", "branch_cond", "jump", "return"})


def unit_class(kind: str) -> str | None:
    return _UNIT.get(kind)


@dataclass(frozen=True)
class ResourceSet:
    adder: int = 2
    multiplier: int = 1
    shifter: int = 1
    logic: int = 2
    comparator: int = 1
    memory_port: int = 1
    latency: dict = field(default_factory=lambda: {"multiplier": 2}, hash=False, compare=False)

    def __post_init__(self):
        for c in CLASSES:
            if getattr(self, c) < 0:
                raise ConfigError(f"resource count for {c} must be >= 0")
        if self.memory_port > 1:
            raise ConfigError("the FPGA memory is single-port, memory_port must be 0 or 1")
        for c, v in self.latency.items():
            if c not in CLASSES or v < 1:
                raise ConfigError(f"bad latency {c}={v}")

    def count(self, cls: str) -> int:
        return getattr(self, cls)

    def lat(self, cls: str) -> int:
        return self.latency.get(cls, 1)

    def op_latency(self, kind: str) -> int:
        cls = unit_class(kind)
        return self.lat(cls) if cls else 0

    def with_(self, **changes) -> "ResourceSet":
        return replace(self, **changes)

    def describe(self) -> str:
        return " ".join(f"{c}={self.count(c)}" for c in CLASSES)

    @classmethod
    def parse(cls, text: str) -> "ResourceSet":
        """``adder=2,multiplier=0`` style overrides of the defaults."""
        kw = {}
        for part in filter(None, (p.strip() for p in text.split(","))):
            k, _, v = (s.strip() for s in part.partition("="))
            if k not in CLASSES:
                raise ConfigError(f"unknown unit class {k!r}")
            try:
                kw[k] = int(v)
            except ValueError:
                raise ConfigError(f"unit count for {k} must be an integer") from None
        return cls(**kw)
