"""CPU + FPGA platform model and its ``key = value`` configuration file."""

from __future__ import annotations

from dataclasses import asdict, dataclass, fields, replace

from ..errors import ConfigError


@dataclass(frozen=True)
class PlatformModel:
    cpu_clock_hz: float = 200e6
    fpga_clock_hz: float = 100e6
    area_capacity_gates: float = 30_000
    comm_cycles_per_invocation: float = 100     # CPU cycles per hardware invocation
    cpu_active_w: float = 0.5
    fpga_active_w: float = 0.8
    idle_w: float = 0.05

    def __post_init__(self):
        for f in fields(self):
            v = getattr(self, f.name)
            # capacity 0 and free communication are legal corner cases
            if v < 0 or (v == 0 and f.name not in ("area_capacity_gates", "comm_cycles_per_invocation")):
                raise ConfigError(f"platform {f.name} must be positive, got {v}")

    def with_(self, **changes) -> "PlatformModel":
        return replace(self, **changes)

    def to_text(self) -> str:
        return "".join(f"{k} = {_fmt(v)}\n" for k, v in asdict(self).items())


def _fmt(v: float) -> str:
    return str(int(v)) if float(v).is_integer() else repr(float(v))


def parse_platform(text: str) -> PlatformModel:
    """Read ``key = value`` lines; ``#`` starts a comment; unknown keys are errors."""
    known = {f.name for f in fields(PlatformModel)}
    values: dict[str, float] = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, val = (s.strip() for s in line.partition("="))
        if not sep or key not in known:
            raise ConfigError(f"platform line {lineno}: cannot use {raw.strip()!r}")
        try:
            values[key] = float(val)
        except ValueError:
            raise ConfigError(f"platform line {lineno}: {key} needs a number, got {val!r}") from None
    return PlatformModel(**values)


def load_platform(path) -> PlatformModel:
    with open(path) as f:
        return parse_platform(f.read())
