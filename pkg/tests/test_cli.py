"""Command-line surface checks via main(argv)."""

import json

import pytest

from gibbsratio.cli import main


def run_cli(capsys, *argv):
    code = main(list(argv))
    captured = capsys.readouterr()
    return code, captured.out, captured.err


class TestEstimate:
    def test_single_record_to_stdout(self, capsys):
        code, out, err = run_cli(
            capsys, "estimate", "--model", "twolevel", "--q", "3",
            "--eps", "1.0", "--d", "4", "--r", "6", "--m", "2", "--seed", "1",
        )
        assert code == 0
        record = json.loads(out.strip())
        assert record["seed"] == 0
        assert record["q_true"] == pytest.approx(3.0, abs=1e-9)
        assert "success" in record
        summary = json.loads(err[: err.rindex("}") + 1])
        assert summary["trials"] == 1

    def test_record_to_file(self, tmp_path, capsys):
        out_path = tmp_path / "rec.ndjson"
        code, out, _ = run_cli(
            capsys, "estimate", "--model", "singleton", "--out", str(out_path),
        )
        assert code == 0 and out == ""
        record = json.loads(out_path.read_text())
        assert record["q_hat"] == pytest.approx(5.0, abs=1e-9)


class TestTrials:
    def test_batch_ndjson(self, capsys):
        code, out, err = run_cli(
            capsys, "trials", "--model", "twolevel", "--q", "3", "--eps", "1.0",
            "--d", "4", "--r", "6", "--m", "2", "--trials", "5", "--seed", "2",
        )
        assert code == 0
        lines = out.strip().split("\n")
        assert len(lines) == 5
        assert all("q_hat" in json.loads(line) for line in lines)

    def test_batch_csv_with_timing(self, tmp_path, capsys):
        out_path = tmp_path / "rec.csv"
        code, _, _ = run_cli(
            capsys, "trials", "--model", "twolevel", "--q", "2", "--eps", "1.0",
            "--d", "2", "--r", "4", "--m", "1.5", "--trials", "3", "--seed", "3",
            "--format", "csv", "--timing", "--out", str(out_path),
        )
        assert code == 0
        lines = out_path.read_text().strip().split("\n")
        assert lines[0].endswith(",wall_time")
        assert len(lines) == 4

    def test_determinism_across_invocations(self, tmp_path, capsys):
        args = (
            "trials", "--model", "twolevel", "--q", "2", "--eps", "1.0",
            "--d", "2", "--r", "4", "--m", "1.5", "--trials", "4", "--seed", "9",
        )
        _, out_a, _ = run_cli(capsys, *args)
        _, out_b, _ = run_cli(capsys, *args)
        assert out_a == out_b

    def test_corruption_flags(self, capsys):
        code, out, err = run_cli(
            capsys, "trials", "--model", "twolevel", "--q", "2", "--eps", "1.0",
            "--d", "2", "--r", "4", "--m", "1.5", "--trials", "2", "--seed", "4",
            "--tv-budget", "0.01", "--corruption-mode", "adversarial_max_h",
        )
        assert code == 0
        summary = json.loads(err[: err.rindex("}") + 1])
        assert summary["corruption_mode"] == "adversarial_max_h"


class TestSchedule:
    def test_diagnostics_payload(self, capsys):
        code, out, _ = run_cli(
            capsys, "schedule", "--model", "twolevel", "--q", "3", "--eps", "1.0",
            "--d", "4", "--r", "6", "--m", "2", "--seed", "5",
        )
        assert code == 0
        payload = json.loads(out)
        assert payload["betas"][0] == 0.0
        assert payload["ell"] == len(payload["betas"]) - 1
        assert payload["delta"] == pytest.approx(sum(payload["per_interval_delta"]), abs=1e-12)
        assert payload["good"] == (payload["delta"] <= payload["delta_threshold"])
        assert payload["oracle_calls"] >= payload["k"]


class TestTau:
    def test_table_lines(self, capsys):
        code, out, _ = run_cli(capsys, "tau", "--d", "1", "64")
        assert code == 0
        lines = out.strip().split("\n")
        assert "9.90" in lines[1]
        assert "1.53" in lines[2]


class TestLowerbound:
    def test_grid_parameters(self, capsys):
        code, out, _ = run_cli(capsys, "lowerbound", "--n-factors", "16", "--m-grid", "2")
        assert code == 0
        assert "PASS" in out and "FAIL" not in out

    def test_target_parameters(self, capsys):
        code, out, _ = run_cli(capsys, "lowerbound", "--q-bar", "85", "--n", "12")
        assert code == 0
        assert "N=16 m=2" in out


class TestSuite:
    def test_tau_table(self, capsys):
        code, out, _ = run_cli(capsys, "suite", "tau_table")
        assert code == 0
        assert out.startswith("suite tau_table: PASS")

    def test_accounting(self, capsys):
        code, out, _ = run_cli(capsys, "suite", "accounting")
        assert code == 0

    def test_graph_model_end_to_end(self, tmp_path, capsys):
        graph = tmp_path / "square.txt"
        graph.write_text("0 1\n1 2\n2 3\n3 0\n")
        code, out, _ = run_cli(
            capsys, "estimate", "--model", "ising", "--graph", str(graph),
            "--eps", "1.0", "--d", "2", "--r", "4", "--m", "1.0", "--seed", "6",
        )
        assert code == 0
        record = json.loads(out.strip())
        assert record["success"] in (True, False)
