"""Bundled benchmark programs, each aimed at one mechanism of the flow.

Every program ``name`` ships as ``name.s`` with a default input vector in
``name.in`` (one decimal word per line, possibly empty).
"""

from __future__ import annotations

from functools import lru_cache
from importlib import resources

from ..asm import assemble
from ..isa import ProgramImage
from ..simulator import read_inputs

# programs whose decompilation is expected to fail
NEGATIVE = ("jump_table",)


def _files():
    return resources.files(__name__)


def names(include_negative: bool = True) -> list[str]:
    out = sorted(p.name[:-2] for p in _files().iterdir() if p.name.endswith(".s"))
    return out if include_negative else [n for n in out if n not in NEGATIVE]


def source(name: str) -> str:
    return (_files() / f"{name}.s").read_text()


def inputs(name: str) -> list[int]:
    f = _files() / f"{name}.in"
    return read_inputs(f.read_text()) if f.is_file() else []


@lru_cache(maxsize=None)
def image(name: str) -> ProgramImage:
    return assemble(source(name))
