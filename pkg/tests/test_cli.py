import csv
import io
import json
import math
import subprocess
import sys
from pathlib import Path

import pytest

from noondistill.cli import main, parse_angle, parse_number

GOLDEN = Path(__file__).parent / "golden"
CASES = json.loads((GOLDEN / "cases.json").read_text())


def run(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def rows(text):
    return list(csv.DictReader(io.StringIO(text)))


class TestAngles:
    @pytest.mark.parametrize("text, value", [
        ("pi/14", math.pi / 14), ("3pi/4", 3 * math.pi / 4), ("-pi/2", -math.pi / 2),
        ("pi", math.pi), ("2pi", 2 * math.pi), ("0.7", 0.7), ("-1e-3", -1e-3),
    ])
    def test_parse(self, text, value):
        assert parse_angle(text) == value

    def test_numbers(self):
        assert parse_number("3/4") == 0.75
        assert parse_number("0.31") == 0.31

    @pytest.mark.parametrize("bad", ["pie/2", "pi/0", "", "x"])
    def test_bad_angle(self, capsys, bad):
        assert run(capsys, "tables", "--rho", "0.3", "--phi", bad)[0] == 2


class TestTables:
    def test_eraser_coincidence_row(self, capsys):
        code, out, err = run(capsys, "tables", "--rho", "0.3", "--phi", "0.7")
        assert code == 0 and err == ""
        row = next(r for r in rows(out) if (r["table"], r["m"], r["n"]) == ("II", "1", "1"))
        assert float(row["probability"]) == pytest.approx(0.09 * math.cos(0.7) ** 2, abs=1e-12)
        assert float(row["formula_value"]) == pytest.approx(float(row["probability"]), abs=1e-12)

    def test_no_reflection(self, capsys):
        out = run(capsys, "tables", "--rho", "0")[1]
        table_one = [r for r in rows(out) if r["table"] == "I"]
        assert len(table_one) == 1
        assert float(table_one[0]["probability"]) == pytest.approx(1.0, abs=1e-12)

    def test_quarter_phase(self, capsys):
        out = run(capsys, "tables", "--rho", "0.5", "--phi", "pi/4")[1]
        for r in rows(out):
            if r["table"] == "II" and (r["m"], r["n"]) in (("0", "2"), ("2", "0")):
                assert float(r["probability"]) == pytest.approx(0.0625, abs=1e-12)

    def test_invalid_rho(self, capsys):
        code, out, err = run(capsys, "tables", "--rho", "1.5")
        assert code == 2 and out == "" and "error" in err


class TestCascade:
    def test_worked_example(self, capsys):
        code, out, _ = run(capsys, "cascade", "--N", "7", "--phi", "pi/14", "--uniform-rho", "0.31")
        assert code == 0
        assert json.loads(out)["analytics"]["p_cond"] == pytest.approx(0.50, abs=0.01)

    def test_optimal_even(self, capsys):
        data = json.loads(run(capsys, "cascade", "--N", "4", "--optimal")[1])
        assert data["analytics"]["p_success"] == pytest.approx(0.09375, abs=1e-15)
        assert data["optimal"]["p_max_exact"] == "3/32"

    def test_nothing_reflected(self, capsys):
        out = run(capsys, "cascade", "--N", "3", "--uniform-rho", "0", "--format", "csv")[1]
        assert float(rows(out)[0]["p_success"]) == 0.0

    def test_schedule(self, capsys):
        out = run(capsys, "cascade", "--N", "5", "--schedule", "2/3,2/5", "--format", "csv")[1]
        r = rows(out)[0]
        assert float(r["p_success"]) == pytest.approx(120 / 3125, rel=1e-14)
        assert float(r["rho_1_nearest_output"]) == pytest.approx(2 / 3)

    @pytest.mark.parametrize("argv", [
        ["cascade", "--N", "4", "--parity", "odd", "--optimal"],
        ["cascade", "--N", "5", "--schedule", "0.5"],
        ["cascade", "--N", "5"],
        ["cascade", "--N", "5", "--optimal", "--uniform-rho", "0.3"],
        ["cascade", "--N", "1", "--optimal"],
        ["cascade", "--N", "5", "--uniform-rho", "-0.1"],
        ["cascade", "--N", "5", "--optimal", "--simulate", "--shots", "0"],
        ["resolving", "--N", "4"],
        ["sweep", "--N-min", "3", "--N-max", "21"],
        ["critical-rho", "--N", "7", "--target", "1.0"],
        ["nonsense"],
        [],
    ])
    def test_usage_errors(self, capsys, argv):
        code, out, err = run(capsys, *argv)
        assert code == 2 and out == "" and err


class TestResolving:
    def test_four(self, capsys):
        data = json.loads(run(capsys, "resolving", "--N", "4", "--rho", "0.75")[1])
        assert data["p_success"] == pytest.approx(0.421875, abs=1e-15)

    def test_optimize(self, capsys):
        data = json.loads(run(capsys, "resolving", "--N", "5", "--optimize")[1])
        assert data["rho"] == pytest.approx(0.8) and data["p_success"] == pytest.approx(0.4096, abs=1e-15)

    def test_full_reflection(self, capsys):
        assert json.loads(run(capsys, "resolving", "--N", "2", "--rho", "1")[1])["p_success"] == 0.0


class TestSweep:
    def test_ten(self, capsys):
        r = rows(run(capsys, "sweep", "--N-min", "2", "--N-max", "10")[1])
        assert len(r) == 9
        assert float(r[-1]["resolving_max"]) == pytest.approx(0.9**9, abs=1e-15)
        seven = next(x for x in r if x["N"] == "7")
        assert float(seven["coincidence_max"]) == pytest.approx(0.00612, abs=5e-6)

    def test_single_point(self, capsys):
        r = rows(run(capsys, "sweep", "--N-min", "2", "--N-max", "2")[1])
        assert [(x["coincidence_max"], x["resolving_max"]) for x in r] == [("0.5", "0.5")]

    def test_full_precision(self, capsys):
        r = rows(run(capsys, "sweep", "--N-min", "3", "--N-max", "3")[1])
        assert float(r[0]["coincidence_max"]) == 2 / 9


class TestCriticalRho:
    def test_values(self, capsys):
        half = json.loads(run(capsys, "critical-rho", "--N", "7", "--phi", "pi/14", "--target", "0.5")[1])
        ninety = json.loads(run(capsys, "critical-rho", "--N", "7", "--phi", "pi/14", "--target", "0.9")[1])
        assert round(half["rho_c"], 2) == 0.31 and round(ninety["rho_c"], 2) == 0.06

    def test_three(self, capsys):
        data = json.loads(run(capsys, "critical-rho", "--N", "3", "--phi", "0.4", "--target", "0.9")[1])
        assert data["rho_c"] == pytest.approx(2 / 11, abs=1e-12)


class TestSimulate:
    def test_repeat_identical(self, capsys):
        argv = ["simulate", "--N", "5", "--rho", "0.4", "--shots", "50000", "--seed", "17"]
        assert run(capsys, *argv)[1] == run(capsys, *argv)[1]

    def test_shards(self, capsys):
        argv = ["simulate", "--N", "5", "--rho", "0.4", "--shots", "50000", "--seed", "17"]
        one = json.loads(run(capsys, *argv)[1])
        four_a = run(capsys, *argv, "--shards", "4")[1]
        four_b = run(capsys, *argv, "--shards", "4")[1]
        assert four_a == four_b
        four = json.loads(four_a)
        for key in ("accepted", "correct", "efficiency_hat", "fidelity_hat"):
            assert one["simulation"][key] == four["simulation"][key]

    def test_resolving_needs_rho(self, capsys):
        assert run(capsys, "simulate", "--protocol", "resolving", "--N", "4")[0] == 2


class TestConfigAndOut:
    def test_config(self, capsys, tmp_path):
        cfg = tmp_path / "run.json"
        cfg.write_text(json.dumps({"N": 4, "rho": 0.75}))
        data = json.loads(run(capsys, "resolving", "--config", str(cfg))[1])
        assert data["p_success"] == pytest.approx(27 / 64)

    def test_flag_overrides_config(self, capsys, tmp_path):
        cfg = tmp_path / "run.json"
        cfg.write_text(json.dumps({"N": 4, "rho": 0.75}))
        data = json.loads(run(capsys, "resolving", "--config", str(cfg), "--rho", "0.5")[1])
        assert data["rho"] == 0.5

    def test_config_schedule_and_flags(self, capsys, tmp_path):
        cfg = tmp_path / "run.json"
        cfg.write_text(json.dumps({"N": 5, "phi": "pi/14", "schedule": [0.3, 0.3], "format": "csv"}))
        r = rows(run(capsys, "cascade", "--config", str(cfg))[1])
        assert r[0]["N"] == "5"

    def test_bad_config(self, capsys, tmp_path):
        cfg = tmp_path / "run.json"
        cfg.write_text("[1, 2]")
        assert run(capsys, "resolving", "--config", str(cfg))[0] == 2
        assert run(capsys, "resolving", "--config", str(tmp_path / "missing.json"))[0] == 2

    def test_out(self, capsys, tmp_path):
        path = tmp_path / "sweep.csv"
        code, out, _ = run(capsys, "sweep", "--N-max", "4", "--out", str(path))
        assert code == 0 and out == ""
        assert path.read_text().startswith("N,coincidence_max,resolving_max\n")


@pytest.mark.parametrize("name", sorted(CASES))
def test_golden(capsys, name):
    code, out, err = run(capsys, *CASES[name])
    assert code == 0, err
    assert out == (GOLDEN / name).read_text()


def test_module_entry_point():
    proc = subprocess.run([sys.executable, "-m", "noondistill", "sweep", "--N-max", "3"],
                          capture_output=True, text=True, check=False)
    assert proc.returncode == 0
    assert proc.stdout.splitlines()[0] == "N,coincidence_max,resolving_max"
