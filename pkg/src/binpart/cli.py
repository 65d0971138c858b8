"""Batch command-line driver: ``binpart <command> ...``.

Exit codes are stable: 0 ok, 1 usage, 2 assembly, 3 isa/image, 4 simulation,
5 indirect jump, 6 other decompilation, 7 partition, 8 synthesis, 9 report,
10 configuration, 11 file i/o.
"""

from __future__ import annotations

import argparse
import os
import sys
from pathlib import Path

from . import corpus
from .asm import assemble
from .decompiler import decompile, dump_program
from .errors import BinpartError, ConfigError, SimulationError
from .flow import run_flow
from .isa import ProgramImage, load_image, save_image
from .partition import PlatformModel, enumerate_regions, load_platform, partition
from .passes import PassConfig, run_pipeline
from .report import parse_sweep, render_report, render_sweep, sweep
from .simulator import ExitReason, Profile, profile_run, read_inputs, run
from .synth import ResourceSet

EXIT_USAGE = 1
EXIT_IO = 11

EXIT_CODES = {
    "ok": 0, "usage": EXIT_USAGE, "asm": 2, "isa": 3, "run": 4, "indirect-jump": 5, "decomp": 6,
    "partition": 7, "synth": 8, "report": 9, "config": 10, "io": EXIT_IO,
}


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def load_program(path: str) -> ProgramImage:
    """An image file, an assembly source (``.s``) or a bundled program (``corpus:NAME``)."""
    if path.startswith("corpus:"):
        name = path[len("corpus:"):]
        if name not in corpus.names():
            raise ConfigError(f"no bundled program {name!r}")
        return corpus.image(name)
    p = Path(path)
    if p.suffix == ".s":
        return assemble(p.read_text())
    return load_image(p.read_bytes())


def image_name(path: str) -> str:
    return path[len("corpus:"):] if path.startswith("corpus:") else Path(path).stem


def _inputs(args) -> list[int]:
    if args.inputs:
        return read_inputs(Path(args.inputs).read_text())
    if args.image.startswith("corpus:"):
        return corpus.inputs(args.image[len("corpus:"):])
    return []


def _profile(path: str) -> Profile:
    try:
        return Profile.from_text(Path(path).read_text())
    except ValueError as exc:
        raise ConfigError(str(exc)) from None


def _platform(args) -> PlatformModel:
    return load_platform(args.platform) if args.platform else PlatformModel()


def _pass_config(args) -> PassConfig:
    if getattr(args, "no_passes", False):
        return PassConfig.parse("")
    return PassConfig.parse(getattr(args, "passes", None))


def _write(text: str, out: str | None) -> None:
    if out:
        Path(out).write_text(text)
    else:
        sys.stdout.write(text)


# -- commands ----------------------------------------------------------------------

def cmd_asm(args) -> int:
    image = assemble(Path(args.source).read_text())
    Path(args.output).write_bytes(save_image(image))
    print(f"{args.output}: {len(image.text)} words text, {len(image.data)} bytes data")
    return 0


def _check_run(res) -> None:
    if res.exit_reason == ExitReason.FAULT:
        raise SimulationError(res.fault)
    if res.exit_reason == ExitReason.MAX_STEPS:
        raise SimulationError(f"no halt within {res.steps} steps")


def cmd_run(args) -> int:
    res = run(load_program(args.image), _inputs(args), args.max_steps)
    for v in res.outputs:
        print(v)
    print(f"cycles {res.total_cycles}", file=sys.stderr)
    _check_run(res)
    return 0


def cmd_profile(args) -> int:
    res, prof = profile_run(load_program(args.image), _inputs(args), args.max_steps)
    _check_run(res)
    _write(prof.to_text(), args.out)
    return 0


def cmd_decomp(args) -> int:
    program, report = run_pipeline(decompile(load_program(args.image)), _pass_config(args))
    _write(dump_program(program), args.dump_cdfg)
    text = report.summary() + report.dump()
    if args.report:
        Path(args.report).write_text(text)
    else:
        sys.stderr.write(text)
    return 0


def cmd_partition(args) -> int:
    image = load_program(args.image)
    prof = _profile(args.profile) if args.profile else profile_run(image, _inputs(args), args.max_steps)[1]
    program, _ = run_pipeline(decompile(image), _pass_config(args))
    result = partition(enumerate_regions(program, prof), prof, _platform(args))
    _write(result.to_text(), args.out)
    return 0


def _flow(args):
    image = load_program(args.image)
    resources = ResourceSet.parse(args.resources) if args.resources else None
    prof = _profile(args.profile) if args.profile else None
    return run_flow(image, _inputs(args), _platform(args), resources, _pass_config(args), prof,
                    image_name(args.image), args.max_steps)


def cmd_synth(args) -> int:
    fr = _flow(args)
    out = Path(args.output)
    out.mkdir(parents=True, exist_ok=True)
    for s in fr.synth:
        stem = f"{fr.image_name}_{s.id}"
        (out / f"{stem}.vhd").write_text(s.vhdl)
        (out / f"{stem}.sched").write_text(s.schedule.dump())
        print(f"{stem}.vhd states={len(s.design.states)} registers={len(s.design.registers)} "
              f"steps={s.schedule.total_steps}")
    if not fr.synth:
        print("no hardware regions selected")
    return 0


def cmd_report(args) -> int:
    fr = _flow(args)
    text = render_report(fr.metrics, fr.partition, fr.pass_report)
    if args.sweep:
        key, values = parse_sweep(args.sweep)
        m = fr.metrics
        hw = {r.id: r.hw_cycles for r in m.regions}
        calls = {r.id: r.invocations for r in m.regions}
        text += "\n" + render_sweep(key, sweep(fr.profile, fr.partition, hw, calls, fr.metrics.platform, key, values))
    _write(text, args.out)
    return 0


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="binpart", description="Binary-level hardware/software partitioning toolchain.")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def image_cmd(name, help_, inputs=True):
        c = sub.add_parser(name, help=help_)
        c.add_argument("image", help="image file, .s source, or corpus:NAME")
        if inputs:
            c.add_argument("--inputs", help="input words, one per line")
            c.add_argument("--max-steps", type=int, default=1_000_000)
        return c

    c = sub.add_parser("asm", help="assemble a source file into an image")
    c.add_argument("source")
    c.add_argument("-o", "--output", required=True)
    c.set_defaults(fn=cmd_asm)

    c = image_cmd("run", "simulate and print the outputs")
    c.set_defaults(fn=cmd_run)

    c = image_cmd("profile", "simulate and write the block profile")
    c.add_argument("-o", "--out")
    c.set_defaults(fn=cmd_profile)

    def passes(c):
        g = c.add_mutually_exclusive_group()
        g.add_argument("--no-passes", action="store_true")
        g.add_argument("--passes", help="comma-separated pass order")

    c = image_cmd("decomp", "decompile and optimize, dump the CDFG", inputs=False)
    c.add_argument("--dump-cdfg", help="CDFG dump file (default stdout)")
    c.add_argument("--report", help="pass report file (default stderr)")
    passes(c)
    c.set_defaults(fn=cmd_decomp)

    for name, fn, help_ in (("partition", cmd_partition, "write the partition report"),
                            ("synth", cmd_synth, "synthesize hardware regions to VHDL"),
                            ("report", cmd_report, "full flow and metrics report")):
        c = image_cmd(name, help_)
        c.add_argument("--profile", help="profile file (default: profile the inputs)")
        c.add_argument("--platform", help="platform file (default: built-in model)")
        passes(c)
        if name != "partition":
            c.add_argument("--resources", help="unit counts, e.g. adder=2,multiplier=0")
        if name == "synth":
            c.add_argument("-o", "--output", required=True, help="output directory")
        else:
            c.add_argument("--out", help="output file (default stdout)")
        if name == "report":
            c.add_argument("--sweep", help="key=v1,v2,... platform sweep, e.g. cpu_clock_hz=40e6,200e6,400e6")
        c.set_defaults(fn=fn)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.fn(args)
    except BinpartError as exc:
        print(f"binpart: {exc.stage} error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return exc.exit_code
    except OSError as exc:
        print(f"binpart: io error: {exc}", file=sys.stderr)
        return EXIT_IO
    except BrokenPipeError:      # pragma: no cover
        os._exit(0)


if __name__ == "__main__":
    sys.exit(main())
