import subprocess
import sys

import pytest

from binpart import corpus
from binpart.cli import EXIT_CODES, main
from binpart.decompiler import decompile, dump_program
from binpart.flow import run_flow
from binpart.partition import PlatformModel, enumerate_regions, partition
from binpart.passes import run_pipeline
from binpart.report import render_report
from binpart.simulator import Profile


def write_src(tmp_path, name):
    p = tmp_path / f"{name}.s"
    p.write_text(corpus.source(name))
    return p


def test_asm_then_run(tmp_path, capsys):
    s = write_src(tmp_path, "const_print")
    img = tmp_path / "cp.img"
    assert main(["asm", str(s), "-o", str(img)]) == 0
    capsys.readouterr()
    assert main(["run", str(img)]) == 0
    out = capsys.readouterr()
    assert out.out == "7\n" and out.err.startswith("cycles ")


def test_run_with_inputs_file(tmp_path, capsys):
    inp = tmp_path / "in.txt"
    inp.write_text("10\n")
    assert main(["run", "corpus:sum_loop", "--inputs", str(inp)]) == 0
    assert capsys.readouterr().out.split() == [str(sum(i * i for i in range(10)))]


def test_assembly_error(tmp_path, capsys):
    s = tmp_path / "bad.s"
    s.write_text("main: frobnicate $1\n")
    assert main(["asm", str(s), "-o", str(tmp_path / "x")]) == EXIT_CODES["asm"] == 2
    assert "asm error" in capsys.readouterr().err


def test_bad_image(tmp_path, capsys):
    p = tmp_path / "junk.img"
    p.write_bytes(b"not an image")
    assert main(["run", str(p)]) == EXIT_CODES["isa"]


def test_indirect_jump_exit_code(capsys):
    assert main(["decomp", "corpus:jump_table"]) == EXIT_CODES["indirect-jump"] == 5
    err = capsys.readouterr().err
    assert "IndirectJump" in err and "decomp" in err


def test_run_out_of_steps(capsys):
    assert main(["run", "corpus:sum_loop", "--max-steps", "5"]) == EXIT_CODES["run"]


def test_usage_and_io_errors(tmp_path, capsys):
    with pytest.raises(SystemExit) as e:
        main(["frobnicate"])
    assert e.value.code == EXIT_CODES["usage"]
    with pytest.raises(SystemExit) as e:
        main(["decomp", "corpus:fir", "--no-passes", "--passes", "x"])
    assert e.value.code == 1
    assert main(["run", str(tmp_path / "missing.img")]) == EXIT_CODES["io"]
    assert main(["run", "corpus:nope"]) == EXIT_CODES["config"]


def test_config_errors(tmp_path, capsys):
    plat = tmp_path / "p.cfg"
    plat.write_text("cpu_clock_hz = -5\n")
    assert main(["partition", "corpus:fir", "--platform", str(plat)]) == EXIT_CODES["config"]
    assert main(["report", "corpus:fir", "--sweep", "bogus=1"]) == EXIT_CODES["config"]
    assert main(["decomp", "corpus:fir", "--passes", "nonsense"]) == EXIT_CODES["config"]
    assert main(["synth", "corpus:fir", "-o", str(tmp_path), "--resources", "memory_port=2"]) == 10


def test_decomp_writes_dump_and_report(tmp_path, capsys):
    dump, rep = tmp_path / "d.cdfg", tmp_path / "r.txt"
    assert main(["decomp", "corpus:mul_const", "--dump-cdfg", str(dump), "--report", str(rep)]) == 0
    prog, report = run_pipeline(decompile(corpus.image("mul_const")))
    assert dump.read_text() == dump_program(prog)
    assert "promote-mul-10" in rep.read_text()
    assert main(["decomp", "corpus:mul_const", "--no-passes", "--dump-cdfg", str(dump)]) == 0
    assert dump.read_text() == dump_program(decompile(corpus.image("mul_const")))


def test_profile_then_partition(tmp_path, capsys):
    prof = tmp_path / "p.prof"
    assert main(["profile", "corpus:dot_product", "-o", str(prof)]) == 0
    p = Profile.from_text(prof.read_text())
    out = tmp_path / "part.txt"
    assert main(["partition", "corpus:dot_product", "--profile", str(prof), "--out", str(out)]) == 0
    prog, _ = run_pipeline(decompile(corpus.image("dot_product")))
    expect = partition(enumerate_regions(prog, p), p, PlatformModel()).to_text()
    assert out.read_text() == expect
    assert out.read_text().startswith("hw loop_0040001c Step1Hot")


def test_synth_writes_vhdl_and_schedules(tmp_path, capsys):
    assert main(["synth", "corpus:alias_pair", "-o", str(tmp_path / "hw")]) == 0
    names = sorted(p.name for p in (tmp_path / "hw").iterdir())
    assert names == ["alias_pair_loop_00400024.sched", "alias_pair_loop_00400024.vhd",
                     "alias_pair_loop_00400048.sched", "alias_pair_loop_00400048.vhd"]
    sched = (tmp_path / "hw" / "alias_pair_loop_00400024.sched").read_text()
    assert all(line.startswith(("# block", "step ")) for line in sched.splitlines())


def test_report_equals_manual_chain(tmp_path, capsys):
    prof, plat, out = tmp_path / "p.prof", tmp_path / "plat.cfg", tmp_path / "rep.txt"
    plat.write_text(PlatformModel(cpu_clock_hz=100e6).to_text())
    assert main(["profile", "corpus:fir", "-o", str(prof)]) == 0
    assert main(["report", "corpus:fir", "--profile", str(prof), "--platform", str(plat), "--out", str(out)]) == 0
    fr = run_flow(corpus.image("fir"), corpus.inputs("fir"), PlatformModel(cpu_clock_hz=100e6),
                  profile=Profile.from_text(prof.read_text()), image_name="fir")
    assert out.read_text() == render_report(fr.metrics, fr.partition, fr.pass_report)


def test_report_sweep_decreases(capsys):
    assert main(["report", "corpus:sum_loop", "--sweep", "cpu_clock_hz=40e6,200e6,400e6"]) == 0
    lines = capsys.readouterr().out.splitlines()
    rows = [l.split() for l in lines if l.startswith("cpu_clock_hz=")]
    speed = [float(r[1]) for r in rows]
    assert len(speed) == 3 and speed[0] > speed[1] > speed[2]


def test_commands_are_deterministic(capsys):
    main(["report", "corpus:nested_loops"])
    a = capsys.readouterr().out
    main(["report", "corpus:nested_loops"])
    assert capsys.readouterr().out == a


def test_console_entry_points(tmp_path):
    r = subprocess.run([sys.executable, "-m", "binpart", "run", "corpus:const_print"],
                       capture_output=True, text=True)
    assert r.returncode == 0 and r.stdout == "7\n"
    r = subprocess.run([sys.executable, "-m", "binpart", "decomp", "corpus:jump_table"],
                       capture_output=True, text=True)
    assert r.returncode == 5
