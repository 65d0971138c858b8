"""Rewrite the golden files: ``python tests/regen_golden.py``.

Run only after a deliberate change to the emitted VHDL, CDFG dumps or reports,
and review the diff before keeping it.
"""

from pathlib import Path

from binpart import corpus
from binpart.decompiler import dump_program
from binpart.flow import run_flow
from binpart.report import render_report

GOLDEN = Path(corpus.__file__).parent / "golden"


def golden_files() -> dict[str, str]:
    out = {}
    for name in corpus.names(include_negative=False):
        fr = run_flow(corpus.image(name), corpus.inputs(name), image_name=name)
        out.update(fr.vhdl_files())
        out[f"{name}.cdfg"] = dump_program(fr.program)
        out[f"{name}.report"] = render_report(fr.metrics, fr.partition, fr.pass_report)
    return out


def main():
    GOLDEN.mkdir(exist_ok=True)
    for old in GOLDEN.iterdir():
        old.unlink()
    for fname, text in sorted(golden_files().items()):
        (GOLDEN / fname).write_text(text)
        print(fname)


if __name__ == "__main__":
    main()
