import re
from pathlib import Path

import pytest

from sigma16forge.asm import OBJ_HEADER, assemble
from sigma16forge.cli import main
from sigma16forge.netlist import import_netlist, stats

PROGRAMS = Path(__file__).resolve().parent.parent / "programs"

LEA_TRAP = "    lea R1,$00ab[R0]\n    trap R0,R0,R0\n"


@pytest.fixture(scope="module")
def sort_obj(tmp_path_factory):
    out = tmp_path_factory.mktemp("obj") / "insertion_sort.obj.txt"
    code = main(["asm", str(PROGRAMS / "insertion_sort.asm.txt"),
                 "-o", str(out)])
    assert code == 0
    return out


@pytest.fixture(scope="module")
def jumpf_obj(tmp_path_factory):
    out = tmp_path_factory.mktemp("obj") / "jumpf_demo.obj.txt"
    assert main(["asm", str(PROGRAMS / "jumpf_demo.asm.txt"),
                 "-o", str(out)]) == 0
    return out


def write(tmp_path, name, text):
    path = tmp_path / name
    path.write_text(text)
    return str(path)


def test_asm_writes_object_and_listing(tmp_path, capsys):
    src = write(tmp_path, "t.asm.txt", LEA_TRAP)
    obj = tmp_path / "t.obj.txt"
    lst = tmp_path / "t.lst.txt"
    assert main(["asm", src, "-o", str(obj), "--listing", str(lst)]) == 0
    assert obj.read_text().startswith(OBJ_HEADER)
    listing = lst.read_text()
    assert "0000 f100 00ab" in listing
    assert "0002 d000" in listing
    assert capsys.readouterr().err == ""


def test_asm_defaults_to_stdout(tmp_path, capsys):
    src = write(tmp_path, "t.asm.txt", LEA_TRAP)
    assert main(["asm", src]) == 0
    assert capsys.readouterr().out.startswith(OBJ_HEADER)


def test_asm_diagnostics_fail_with_location(tmp_path, capsys):
    src = write(tmp_path, "bad.asm.txt",
                "    lea R1,nowhere[R0]\n    trap R0,R0,R0\n")
    assert main(["asm", src]) == 1
    err = capsys.readouterr().err
    assert f"{src}:1:" in err
    assert "nowhere" in err


def test_emulate_runs_and_dumps_memory(sort_obj, capsys):
    res = assemble((PROGRAMS / "insertion_sort.asm.txt").read_text())
    arr = res.symbols["arr"]
    code = main(["emulate", str(sort_obj), "--dump", f"{arr:#x}:10"])
    out = capsys.readouterr().out
    assert code == 0
    assert "halted at pc=" in out
    values = [int(line.split()[1], 16) for line in out.splitlines()
              if re.fullmatch(r"[0-9a-f]{4}  [0-9a-f]{4}", line)]
    assert values == sorted(values) and len(values) == 10


def test_emulate_trace_lines(tmp_path, jumpf_obj, capsys):
    assert main(["emulate", str(jumpf_obj), "--trace"]) == 0
    out = capsys.readouterr().out
    assert out.count("EXEC\t") == 9
    assert "jumpf R6,$0011[R0]" in out


def test_emulate_budget_exhaustion(tmp_path, sort_obj, capsys):
    assert main(["emulate", str(sort_obj), "--max-steps", "5"]) == 1
    err = capsys.readouterr().err
    assert "did not halt within 5 steps" in err


def test_m1_runs_small_program(tmp_path, capsys):
    src = write(tmp_path, "t.asm.txt", LEA_TRAP)
    obj = tmp_path / "t.obj.txt"
    assert main(["asm", src, "-o", str(obj)]) == 0
    assert main(["m1", str(obj)]) == 0
    out = capsys.readouterr().out
    assert "Executed instruction:  lea" in out
    assert "Executed instruction:  trap" in out
    match = re.search(r"halted after (\d+) cycles", out)
    # 1 reset cycle, 3 dma cycles, then 4 states for lea and 3 for trap.
    assert match and int(match.group(1)) == 11


def test_m1_driver_output_matches_golden(tmp_path, jumpf_obj, capsys):
    out = tmp_path / "driver.txt"
    code = main(["m1", str(jumpf_obj), "--driver-output", str(out)])
    assert code == 0
    golden = (PROGRAMS / "golden" / "jumpf_demo_driver.txt").read_text()
    text = out.read_text()
    assert text == golden
    assert text.count("Clock cycle ") == 54
    capsys.readouterr()


def test_m1_budget_exhaustion(tmp_path, jumpf_obj, capsys):
    assert main(["m1", str(jumpf_obj), "--max-cycles", "25"]) == 1
    assert "cycle budget exhausted after 25 cycles" in \
        capsys.readouterr().err


def test_verify_corpus_program(jumpf_obj, capsys):
    assert main(["verify", str(jumpf_obj)]) == 0
    assert "equivalent: 9 instructions" in capsys.readouterr().out


def test_verify_refuses_mul(tmp_path, capsys):
    src = write(tmp_path, "m.asm.txt",
                "    lea R1,3[R0]\n    mul R2,R1,R1\n    trap R0,R0,R0\n")
    obj = tmp_path / "m.obj.txt"
    assert main(["asm", src, "-o", str(obj)]) == 0
    assert main(["verify", str(obj)]) == 1
    assert "refused" in capsys.readouterr().out


def test_netlist_round_trip_preserves_stats(tmp_path, capsys):
    out = tmp_path / "m1.netlist.txt"
    assert main(["netlist", "m1", "-o", str(out)]) == 0
    from sigma16forge.m1 import build_m1
    direct = stats(build_m1().nl)
    rebuilt = stats(import_netlist(out.read_text()))
    assert rebuilt == direct
    capsys.readouterr()


def test_stats_m1(capsys):
    assert main(["stats", "m1"]) == 0
    out = capsys.readouterr().out
    assert "dff_count = 329" in out
    assert re.search(r"components = \d{4}", out)
    assert re.search(r"comb_depth = \d+", out)


def parse_vcd(text):
    ids = {}
    for match in re.finditer(r"\$var wire 1 (\S+) (\S+) \$end", text):
        ids[match.group(1)] = match.group(2)
    body = text.split("$enddefinitions $end", 1)[1]
    changes: dict[int, dict[str, int]] = {}
    time = 0
    for tok in body.split():
        if tok in ("$dumpvars", "$end"):
            continue
        if tok.startswith("#"):
            time = int(tok[1:])
            continue
        changes.setdefault(time, {})[ids[tok[1:]]] = int(tok[0])
    return ids, changes


def replay_vcd(text, ncycles):
    ids, changes = parse_vcd(text)
    streams = {n: [] for n in ids.values()}
    current = dict.fromkeys(ids.values(), None)
    for t in range(ncycles):
        current.update(changes.get(t, {}))
        for n in streams:
            assert current[n] is not None, "signal undefined at t=0"
            streams[n].append(current[n])
    return streams


def test_vcd_traffic_v1(tmp_path, capsys):
    out = tmp_path / "t.vcd"
    assert main(["vcd", "traffic-v1", "-o", str(out), "--cycles", "30"]) == 0
    streams = replay_vcd(out.read_text(), 30)
    assert set(streams) == {"green", "amber", "red"}
    period = "gggarrrra"
    for t in range(1, 30):
        phase = period[(t - 1) % 9]
        assert streams["green"][t] == (phase == "g"), t
        assert streams["amber"][t] == (phase == "a"), t
        assert streams["red"][t] == (phase == "r"), t
    assert streams["green"][0] == streams["red"][0] == 0
    capsys.readouterr()


def test_vcd_control_file_circuit(tmp_path, capsys):
    alg = write(tmp_path, "blink.ctl.txt", "\n".join([
        "control blink",
        "signals on",
        "init dark",
        "",
        "state dark:",
        "  next lit",
        "",
        "state lit:",
        "  assert on",
        "  next dark",
    ]) + "\n")
    assert main(["vcd", alg, "--cycles", "8"]) == 0
    streams = replay_vcd(capsys.readouterr().out, 8)
    assert streams["on"] == [0, 0, 1, 0, 1, 0, 1, 0]


def test_unknown_circuit_is_usage_error(capsys):
    assert main(["stats", "no-such-circuit"]) == 2
    err = capsys.readouterr().err
    assert "unknown circuit" in err and "traffic-v1" in err


def test_missing_file_is_usage_error(capsys):
    assert main(["emulate", "/nonexistent/x.obj.txt"]) == 2
    assert "cannot read" in capsys.readouterr().err


def test_malformed_object_is_domain_error(tmp_path, capsys):
    bad = write(tmp_path, "bad.obj.txt", "not an object module\n")
    assert main(["emulate", bad]) == 1
    assert "missing header" in capsys.readouterr().err


def test_bad_span_is_usage_error(tmp_path, jumpf_obj, capsys):
    assert main(["emulate", str(jumpf_obj), "--dump", "zap"]) == 2
    assert "bad memory span" in capsys.readouterr().err


def test_unknown_subcommand_exits_2():
    with pytest.raises(SystemExit) as exc:
        main(["frobnicate"])
    assert exc.value.code == 2
