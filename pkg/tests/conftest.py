from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import pytest

from binpart import corpus
from binpart.decompiler import decompile
from binpart.partition import PlatformModel, enumerate_regions, partition
from binpart.passes import run_pipeline
from binpart.simulator import profile_run

PROGRAMS = corpus.names(include_negative=False)


@dataclass
class Prepared:
    name: str
    image: object
    inputs: list
    sim: object
    profile: object
    raw: object          # CdfgProgram straight out of the decompiler
    program: object      # after the default pass pipeline
    report: object
    regions: list
    partition: object


@lru_cache(maxsize=None)
def prepared(name: str) -> Prepared:
    image = corpus.image(name)
    inputs = corpus.inputs(name)
    sim, prof = profile_run(image, inputs)
    raw = decompile(image)
    program, report = run_pipeline(raw.copy())
    regions = enumerate_regions(program, prof)
    part = partition(regions, prof, PlatformModel())
    return Prepared(name, image, inputs, sim, prof, raw, program, report, regions, part)


@pytest.fixture(params=PROGRAMS)
def prog(request) -> Prepared:
    return prepared(request.param)
