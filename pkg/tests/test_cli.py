import json
import subprocess
import sys

import pytest

from qkccs import states
from qkccs.cli import main

import oracles as O


def run(capsys, *argv):
    code = main(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


def parse_tables(text):
    """Split scan output into {(k, qbar): [row dicts]} plus crossing markers."""
    tables, crossings, key, header = {}, {}, None, None
    for line in text.splitlines():
        if line.startswith("# k="):
            fields = dict(item.split("=") for item in line[2:].split())
            key = (int(fields["k"]), int(fields["qbar"]))
            tables[key], header = [], None
        elif line.startswith("# crossing_g0"):
            crossings[key] = float(line.split("x=")[1])
        elif header is None:
            header = line.split(",")
        else:
            tables[key].append(dict(zip(header, map(float, line.split(",")))))
    return tables, crossings


def test_state_command_writes_file(tmp_path, monkeypatch, capsys):
    monkeypatch.chdir(tmp_path)
    code, out, _ = run(capsys, "state", "--k", "3", "--qbar", "2", "--xi", "0.7", "--q", "0.9")
    assert code == 0
    assert "charge-check: pass" in out
    state, par = states.read_state(tmp_path / "state_k3_qbar2_j0.txt")
    assert (par.k, par.qbar, par.j) == (3, 2, 0)
    assert state.norm() == pytest.approx(1.0, abs=1e-12)


def test_state_command_degenerate(tmp_path, monkeypatch, capsys):
    monkeypatch.chdir(tmp_path)
    code, _, err = run(capsys, "state", "--k", "2", "--qbar", "0", "--xi", "0", "--j", "1")
    assert code == 2
    assert "error" in err


def test_state_command_negative_charge(tmp_path, capsys):
    out_file = tmp_path / "s.txt"
    code, out, _ = run(capsys, "state", "--k", "1", "--qbar", "-3", "--xi", "0.5", "--q", "0.8", "--out", str(out_file))
    assert code == 0
    diff = float(next(line for line in out.splitlines() if line.startswith("<N1>-<N2>")).split(":")[1])
    assert diff == pytest.approx(-3.0, abs=1e-12)


def test_verify_all(capsys):
    code, out, _ = run(capsys, "verify", "--suite", "all", "--q", "0.9")
    assert "summary:" in out
    assert code == 0


def test_verify_moments_q08(capsys):
    code, out, _ = run(capsys, "verify", "--suite", "moments", "--q", "0.8", "--pmax", "4", "--numax", "4")
    lines = [line for line in out.splitlines() if line.startswith(("PASS", "FAIL"))]
    assert len(lines) == 25
    assert all(line.startswith("PASS") for line in lines)
    assert code == 0


def test_verify_dalgebra_rows(capsys):
    code, out, _ = run(capsys, "verify", "--suite", "dalgebra", "--k", "4", "--qbar", "-2", "--xi", "0.6")
    assert code == 0
    rows = [line for line in out.splitlines() if "[negative]" in line or "[positive]" in line]
    assert len(rows) == 6
    assert all(line.startswith("PASS") for line in rows)


def test_verify_json_report(tmp_path, capsys):
    path = tmp_path / "report.json"
    code, _, _ = run(capsys, "verify", "--suite", "algebra", "--q", "0.8", "--json", str(path))
    assert code == 0
    report = json.loads(path.read_text())
    assert report and all(item["passed"] for item in report)


def test_verify_failure_exit_code(capsys):
    code, out, _ = run(capsys, "verify", "--suite", "algebra", "--q", "0.5", "--nmax", "40", "--tol", "1e-30")
    assert code == 1
    assert "FAIL" in out


def test_config_file_supplies_options(tmp_path, capsys):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"suite": "algebra", "q": 0.8, "nmax": 12}))
    code, out, _ = run(capsys, "--config", str(cfg), "verify")
    assert code == 0
    assert "q=0.8" in out


def test_scan_fig1a(capsys):
    code, out, _ = run(capsys, "scan", "--fig1a")
    assert code == 0
    tables, crossings = parse_tables(out)
    assert set(tables) == {(k, s * 2) for k in (3, 4, 5) for s in (1, -1)}
    for rows in tables.values():
        assert all(r["g_0"] > 1 for r in rows if r["x"] <= 1)
    assert set(crossings) == set(tables)


def test_scan_fig1b_crossings(capsys):
    code, out, _ = run(capsys, "scan", "--fig1b")
    assert code == 0
    tables, crossings = parse_tables(out)
    assert set(crossings) == {(k, s * 3) for k in (3, 4, 5) for s in (1, -1)}
    assert all(x > 1 for x in crossings.values())


def test_scan_undeformed_matches_classical(capsys):
    code, out, _ = run(capsys, "scan", "--k", "3", "--qbar", "2", "--q", "1.0", "--xs", "0.5,1,2")
    assert code == 0
    (rows,) = parse_tables(out)[0].values()
    for r in rows:
        s = [O.classical_norm_series(3, 2, j, r["x"]) for j in range(3)]
        for j in range(3):
            want = float(s[j] * s[(j - 2) % 3] / s[(j - 1) % 3] ** 2)
            assert r[f"g_{j}"] == pytest.approx(want, rel=1e-12)


def test_scan_writes_file(tmp_path, capsys):
    path = tmp_path / "scan.csv"
    code, out, _ = run(capsys, "scan", "--xs", "0.5,1", "--out", str(path))
    assert code == 0 and out == ""
    assert path.read_text().startswith("# k=3 qbar=2 q=0.9")


def test_scan_bad_grid(capsys):
    code, _, err = run(capsys, "scan", "--xs", "1,0.5")
    assert code == 2
    assert "increasing" in err


def test_scan_non_convergence(capsys):
    code, out, _ = run(capsys, "scan", "--k", "3", "--qbar", "2", "--q", "1.0", "--xs", "0.5,1e12")
    assert code == 3
    assert "# convergence-failure x=1000000000000.0" in out


def test_argparse_error_exit(capsys):
    code, _, err = run(capsys, "state", "--k", "notanint")
    assert code == 2
    assert "invalid int value" in err


def test_module_entry_point():
    proc = subprocess.run([sys.executable, "-m", "qkccs", "--help"], capture_output=True, text=True)
    assert proc.returncode == 0
    assert "scan" in proc.stdout
