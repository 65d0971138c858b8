"""Exception hierarchy shared by every stage of the toolchain.

Each error carries the name of the stage that raised it and a stable
process exit code, which the command-line driver reports verbatim.
"""


class BinpartError(Exception):
    stage = "toolchain"
    exit_code = 1


# isa / assembler / container

class IsaError(BinpartError):
    stage = "isa"
    exit_code = 3


class UnknownOpcode(IsaError):
    def __init__(self, word: int, address: int):
        super().__init__(f"unknown opcode 0x{word:08x} at 0x{address:08x}")
        self.word = word
        self.address = address


class FieldOutOfRange(IsaError):
    pass


class ImageError(IsaError):
    stage = "image"


class BadMagic(ImageError):
    pass


class TruncatedImage(ImageError):
    pass


class VersionMismatch(ImageError):
    pass


class AssemblyError(BinpartError):
    stage = "asm"
    exit_code = 2

    def __init__(self, message: str, line: int | None = None):
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
        self.line = line


class AsmSyntaxError(AssemblyError):
    pass


class UndefinedLabel(AssemblyError):
    pass


class DuplicateLabel(AssemblyError):
    pass


class BranchOutOfRange(AssemblyError):
    pass


class UndefinedEntry(AssemblyError):
    pass


# simulator

class SimulationError(BinpartError):
    stage = "run"
    exit_code = 4


class UnalignedAccess(SimulationError):
    pass


class PcOutOfRange(SimulationError):
    pass


class InputExhausted(SimulationError):
    pass


class BadSyscall(SimulationError):
    pass


# decompiler

class DecompileError(BinpartError):
    stage = "decomp"
    exit_code = 6


class IndirectJump(DecompileError):
    exit_code = 5

    def __init__(self, address: int, procedure: int | None = None):
        msg = f"indirect jump at 0x{address:08x}"
        if procedure is not None:
            msg += f" in procedure 0x{procedure:08x}"
        super().__init__(msg)
        self.address = address
        self.procedure = procedure


class UnresolvedSyscall(DecompileError):
    def __init__(self, address: int):
        super().__init__(f"syscall at 0x{address:08x} has no statically known service number")
        self.address = address


class UnreachableBlock(DecompileError):
    pass


class MalformedCdfg(DecompileError):
    pass


class CdfgExecutionError(DecompileError):
    pass


class MemoryFault(CdfgExecutionError):
    pass


# partitioner / synthesizer / report

class PartitionError(BinpartError):
    stage = "partition"
    exit_code = 7


class EmptyProfile(PartitionError):
    pass


class SynthesisError(BinpartError):
    stage = "synth"
    exit_code = 8


class NoFeasibleImpl(SynthesisError):
    pass


class UnsynthesizableRegion(SynthesisError):
    pass


class MaxCyclesExceeded(SynthesisError):
    pass


class ReportError(BinpartError):
    stage = "report"
    exit_code = 9


class MissingHwCycles(ReportError):
    def __init__(self, region: str):
        super().__init__(f"no measured hardware cycles for region {region}")
        self.region = region


class ConfigError(BinpartError):
    stage = "config"
    exit_code = 10
