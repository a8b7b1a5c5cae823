import json
import math
import subprocess
import sys

import numpy as np
import pytest

from convexroof.cli import (
    main,
    parse_complex,
    parse_fraction,
    rows_to_csv,
)
from convexroof.models import bell_state

LN2 = math.log(2.0)


def run_cli(capsys, argv):
    code = main(argv)
    captured = capsys.readouterr()
    return code, captured.out, captured.err


def write_bell_json(path):
    psi = bell_state("phi_plus")
    rho = np.outer(psi, psi.conj())
    entries = [[float(z.real), float(z.imag)] for z in rho.reshape(-1)]
    path.write_text(json.dumps({"dimA": 2, "dimB": 2, "matrix": entries}))
    return path


def mask_wall_ms(csv_text):
    """Blank the wall-clock column; it is the one legitimately varying field."""
    lines = csv_text.strip().split("\n")
    header = lines[0].split(",")
    idx = header.index("wall_ms")
    out = []
    for line in lines:
        fields = line.split(",")
        fields[idx] = "-"
        out.append(",".join(fields))
    return "\n".join(out)


class TestParsers:
    def test_fractions(self):
        assert parse_fraction("1/3") == pytest.approx(1.0 / 3.0)
        assert parse_fraction("0.25") == 0.25
        assert parse_fraction("2e-3") == 0.002

    def test_complex(self):
        assert parse_complex("1/3") == complex(1.0 / 3.0)
        assert parse_complex("0.1+0.2j") == complex(0.1, 0.2)


class TestEof:
    def test_rho1_json_record(self, capsys):
        code, out, _ = run_cli(
            capsys,
            ["eof", "--model", "rho1", "--b", "1/3", "--x", "1/3",
             "--iters", "64", "--seed", "7"],
        )
        assert code == 0
        record = json.loads(out)
        for key in ("eof", "eof_de", "k", "rank", "seed", "generations", "wall_ms"):
            assert key in record
        assert record["rank"] == 2
        assert record["k"] == 2
        assert record["seed"] == 7
        assert record["generations"] == 64
        assert record["eof"] <= record["eof_de"] + 1e-12
        assert record["eof"] == pytest.approx(0.381264053728103, abs=1e-6)

    def test_bell_input_file(self, capsys, tmp_path):
        path = write_bell_json(tmp_path / "bell.json")
        code, out, _ = run_cli(capsys, ["eof", "--input", str(path), "--iters", "8"])
        assert code == 0
        record = json.loads(out)
        assert record["rank"] == 1
        assert record["eof"] == pytest.approx(LN2, abs=1e-9)

    def test_log_base_two(self, capsys, tmp_path):
        path = write_bell_json(tmp_path / "bell.json")
        code, out, _ = run_cli(
            capsys,
            ["eof", "--input", str(path), "--iters", "8", "--log-base", "2"],
        )
        assert code == 0
        assert json.loads(out)["eof"] == pytest.approx(1.0, abs=1e-9)

    def test_time_flag_on_rho2(self, capsys):
        code, out, _ = run_cli(
            capsys,
            ["eof", "--model", "rho2", "--c", "0.7", "--omega", "1", "--t", "2.0",
             "--iters", "128", "--refine-iters", "120", "--seed", "6"],
        )
        assert code == 0
        record = json.loads(out)
        assert record["rank"] == 4
        assert record["eof"] == pytest.approx(record["oracle"], abs=1e-6)

    def test_bad_input_exits_2(self, capsys, tmp_path):
        path = tmp_path / "broken.json"
        path.write_text("{not json")
        code, _, err = run_cli(capsys, ["eof", "--input", str(path)])
        assert code == 2
        assert "error" in err

    def test_bad_matrix_reports_position(self, capsys, tmp_path):
        entries = [[1.0, 0.0]] * 16
        entries[9] = [None, 0.0]
        path = tmp_path / "bad.json"
        path.write_text(json.dumps({"dimA": 2, "dimB": 2, "matrix": entries}))
        code, _, err = run_cli(capsys, ["eof", "--input", str(path)])
        assert code == 2
        assert "row 2, col 1" in err

    def test_invalid_model_choice_exits_2(self, capsys):
        with pytest.raises(SystemExit) as excinfo:
            main(["eof", "--model", "nonsense"])
        assert excinfo.value.code == 2


class TestSweep:
    BASE = [
        "sweep", "--model", "rho2", "--c", "0.7", "--omega", "1",
        "--iters", "32", "--refine-iters", "40", "--points", "5", "--seed", "9",
    ]

    def test_csv_structure(self, capsys, tmp_path):
        out_path = tmp_path / "sweep.csv"
        code, _, _ = run_cli(capsys, self.BASE + ["--out", str(out_path)])
        assert code == 0
        lines = out_path.read_text().strip().split("\n")
        assert lines[0] == "param,eof_de,eof_refined,oracle,wall_ms,seed,generations"
        assert len(lines) == 6
        params = [float(line.split(",")[0]) for line in lines[1:]]
        assert params == sorted(params)
        for line in lines[1:]:
            fields = line.split(",")
            assert float(fields[2]) <= float(fields[1]) + 1e-12  # refined <= DE
            assert float(fields[3]) >= 0.0  # oracle column present for rho2
        # figure rendered next to the CSV
        assert (tmp_path / "sweep.png").exists()
        assert (tmp_path / "sweep.png").stat().st_size > 0

    def test_no_plot(self, capsys, tmp_path):
        out_path = tmp_path / "sweep.csv"
        code, _, _ = run_cli(capsys, self.BASE + ["--out", str(out_path), "--no-plot"])
        assert code == 0
        assert not (tmp_path / "sweep.png").exists()

    def test_stdout_when_no_out(self, capsys):
        code, out, _ = run_cli(capsys, self.BASE)
        assert code == 0
        assert out.startswith("param,eof_de,eof_refined")

    def test_reruns_are_identical(self, capsys, tmp_path):
        a, b = tmp_path / "a.csv", tmp_path / "b.csv"
        run_cli(capsys, self.BASE + ["--out", str(a), "--no-plot"])
        run_cli(capsys, self.BASE + ["--out", str(b), "--no-plot"])
        assert mask_wall_ms(a.read_text()) == mask_wall_ms(b.read_text())

    def test_worker_count_does_not_change_output(self, capsys, tmp_path):
        a, b = tmp_path / "w1.csv", tmp_path / "w2.csv"
        run_cli(capsys, self.BASE + ["--out", str(a), "--no-plot", "--workers", "1"])
        run_cli(capsys, self.BASE + ["--out", str(b), "--no-plot", "--workers", "2"])
        assert mask_wall_ms(a.read_text()) == mask_wall_ms(b.read_text())

    def test_json_format(self, capsys):
        code, out, _ = run_cli(capsys, self.BASE + ["--format", "json"])
        assert code == 0
        rows = json.loads(out)
        assert len(rows) == 5
        assert {"param", "eof_de", "eof_refined", "oracle"} <= set(rows[0])

    def test_partial_failure_exits_4(self, capsys, tmp_path):
        out_path = tmp_path / "partial.csv"
        code, _, err = run_cli(
            capsys,
            ["sweep", "--model", "gibbs", "--K", "1", "--Omega", "5",
             "--from", "-0.5", "--to", "0.5", "--points", "3",
             "--iters", "16", "--no-refine", "--out", str(out_path), "--no-plot"],
        )
        assert code == 4
        assert "failed" in err
        lines = out_path.read_text().strip().split("\n")
        assert len(lines) == 4
        assert "nan" in lines[1]  # T <= 0 rows recorded as NaN
        assert "nan" not in lines[3]

    def test_unsweepable_model_exits_2(self, capsys):
        code, _, err = run_cli(capsys, ["sweep", "--model", "sep1", "--points", "3"])
        assert code == 2
        assert "not sweepable" in err


class TestSweepK:
    def test_rows_and_plot(self, capsys, tmp_path):
        out_path = tmp_path / "ks.csv"
        code, _, err = run_cli(
            capsys,
            ["sweep-k", "--model", "sep1", "--kmax", "3", "--iters", "64",
             "--refine-iters", "40", "--seed", "3", "--out", str(out_path)],
        )
        assert code == 0
        lines = out_path.read_text().strip().split("\n")
        assert lines[0].startswith("k,eof_de,eof_refined")
        assert [line.split(",")[0] for line in lines[1:]] == ["2", "3"]
        assert "best k" in err
        assert (tmp_path / "ks.png").exists()

    def test_requires_kmax(self, capsys):
        code, _, err = run_cli(capsys, ["sweep-k", "--model", "sep1", "--iters", "8"])
        assert code == 2
        assert "kmax" in err


class TestBenchHyper:
    def test_grid_csv(self, capsys, tmp_path):
        out_path = tmp_path / "bench.csv"
        code, _, _ = run_cli(
            capsys,
            ["bench-hyper", "--model", "rho1", "--b", "1/3", "--x", "1/3",
             "--F", "0.1,0.5", "--CR", "0.5,0.9", "--budgets", "16,32",
             "--seed", "2", "--out", str(out_path)],
        )
        assert code == 0
        lines = out_path.read_text().strip().split("\n")
        assert lines[0] == "F,CR,iters,eof_de,error,wall_ms,seed"
        assert len(lines) == 9  # 2 F x 2 CR x 2 budgets
        assert (tmp_path / "bench.png").exists()

    def test_degenerate_weight_row(self, capsys):
        # F = 0 collapses mutation: the run completes and reports honestly
        code, out, _ = run_cli(
            capsys,
            ["bench-hyper", "--model", "rho1", "--F", "0", "--CR", "0.9",
             "--budgets", "16", "--seed", "4"],
        )
        assert code == 0
        assert out.startswith("F,CR,iters")


class TestConfigFile:
    def test_precedence(self, capsys, tmp_path):
        config = tmp_path / "run.conf"
        config.write_text("iters = 16\nseed = 11  # comment\nnpop = 6\n")
        code, out, _ = run_cli(
            capsys,
            ["eof", "--model", "sep1", "--config", str(config), "--iters", "8",
             "--no-refine"],
        )
        assert code == 0
        record = json.loads(out)
        assert record["generations"] == 8  # CLI wins over config
        assert record["seed"] == 11  # config wins over default

    def test_unknown_key_rejected(self, capsys, tmp_path):
        config = tmp_path / "run.conf"
        config.write_text("bogus = 1\n")
        code, _, err = run_cli(
            capsys, ["eof", "--model", "sep1", "--config", str(config)]
        )
        assert code == 2
        assert "bogus" in err


class TestCsvFormatting:
    def test_full_precision_and_empty_oracle(self):
        rows = [
            {"param": 1.0 / 3.0, "eof_de": 0.1, "eof_refined": 0.1,
             "oracle": None, "wall_ms": 1.5, "seed": 3, "generations": 4}
        ]
        text = rows_to_csv(
            rows, ["param", "eof_de", "eof_refined", "oracle", "wall_ms", "seed", "generations"]
        )
        line = text.strip().split("\n")[1]
        assert line.split(",")[0] == "0.33333333333333331"
        assert line.split(",")[3] == ""


class TestEntryPoint:
    def test_module_invocation(self):
        result = subprocess.run(
            [sys.executable, "-m", "convexroof", "eof", "--model", "sep1",
             "--iters", "8", "--npop", "6", "--no-refine"],
            capture_output=True,
            text=True,
        )
        assert result.returncode == 0
        assert json.loads(result.stdout)["rank"] == 2
