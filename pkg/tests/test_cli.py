import subprocess
import sys
from pathlib import Path

import pytest

from clnrd.cli import main
from clnrd.io import DATA

EX1, EX2 = str(DATA / "example1.json"), str(DATA / "example2.json")
DEMOS = Path(__file__).resolve().parents[1] / "demos" / "problems"


def run(capsys, *argv):
    code = main(list(argv))
    return code, capsys.readouterr()


def test_classify_exit_codes(capsys):
    code, out = run(capsys, "classify", "--instance", EX2, "--relation", "cln", "--given", "X1", "--restarts", "2")
    assert code == 0 and out.out.startswith("relation,given,verdict,margin\r\ncln,X1,CLN,")
    code, out = run(capsys, "classify", "--instance", EX2, "--relation", "stochastic")
    assert code == 1 and ",fails," in out.out
    code, out = run(capsys, "classify", "--instance", EX1, "--relation", "less-noisy", "--restarts", "2")
    assert code == 1 and "NotCLN" in out.out


def test_solve_rd_matched_rate(capsys):
    code, out = run(capsys, "solve", "rd", "--instance", EX2, "--d2", "0", "--restarts", "2")
    lines = out.out.splitlines()
    assert code == 0 and lines[0] == "d2,lower_bits,upper_bits,gap_bits,cln_margin"
    assert lines[1].startswith("0,1.7295739")


def test_solve_sr_both_kinds(capsys):
    code, out = run(capsys, "solve", "sr", "--instance", str(DEMOS / "degraded_triple.json"), "--d3", "0.1",
                    "--restarts", "2")
    assert code == 0 and out.out.splitlines()[1].startswith("exact,")
    code, out = run(capsys, "solve", "sr", "--scalable", "--instance", str(DEMOS / "scalable_pair.json"),
                    "--restarts", "2")
    assert code == 0 and out.out.splitlines()[1].startswith("scalable-case-i,")


def test_verify_identities_table(capsys):
    code, out = run(capsys, "verify-identities", "--trials", "6", "--letterization-trials", "2")
    rows = out.out.splitlines()
    assert code == 0 and len(rows) == 5 and all(r.endswith(",true") for r in rows[1:])


def test_usage_and_validation_codes(capsys, tmp_path):
    assert run(capsys, "solve", "sr", "--instance", EX2)[0] == 2          # sr needs --d3
    bad = tmp_path / "bad.json"
    bad.write_text('{"factored": ["X pmf [0.5, 0.6]"], "distortions": ["hamming", "hamming"]}')
    code, out = run(capsys, "classify", "--instance", str(bad))
    assert code == 3 and "error:" in out.err
    for argv in (["reproduce", "example3"], ["verify-identities", "--restarts", "0"]):
        with pytest.raises(SystemExit) as e:
            main(argv)
        assert e.value.code == 2


def test_out_and_record_files(tmp_path, capsys):
    out, rec = tmp_path / "s.csv", tmp_path / "r.json"
    code, printed = run(capsys, "sweep", "--instance", EX2, "--d2", "0,0.1", "--no-upper", "--restarts", "2",
                        "--out", str(out), "--record", str(rec))
    assert code == 0 and printed.out == ""
    assert out.read_bytes().startswith(b"d2,lower_bits,upper_bits,gap_bits,cln_margin\r\n")
    assert '"wall_time"' in rec.read_text() and "wall" not in out.read_text()


def test_module_entry_point():
    res = subprocess.run([sys.executable, "-m", "clnrd", "reproduce", "example2", "--restarts", "2"],
                         capture_output=True, text=True, timeout=120)
    assert res.returncode == 0 and res.stdout.strip().endswith("PASS example2")
