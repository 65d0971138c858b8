"""Binary to CDFG decompilation: parsing, CFG, dominators, structure, SSA."""

from ..isa import ProgramImage
from .cdfg import Block, Cdfg, CdfgProgram, build_cdfg
from .cfg import Cfg, Graph, build_cfg, find_leaders
from .dominators import EXIT, DomTree, compute_dominators, compute_postdominators
from .dump import dump_cdfg, dump_program
from .execute import CdfgMachine, execute_cdfg
from .ir import Imm, IrOp, Reg
from .parse import parse_binary
from .structure import Induction, Region, StructureTree, recover_structures


def decompile(image: ProgramImage, strict: bool = True) -> CdfgProgram:
    """parse_binary -> build_cfg -> build_cdfg in one call."""
    cfg = build_cfg(parse_binary(image), image, strict=strict)
    return build_cdfg(cfg, image)


__all__ = [
    "Block", "Cdfg", "CdfgMachine", "CdfgProgram", "Cfg", "DomTree", "EXIT", "Graph", "Imm",
    "Induction", "IrOp", "Reg", "Region", "StructureTree", "build_cdfg", "build_cfg",
    "compute_dominators", "compute_postdominators", "decompile", "dump_cdfg", "dump_program",
    "execute_cdfg", "find_leaders", "parse_binary", "recover_structures",
]
