"""CLI behavior: commands, formats, strict configs, exit codes, artifacts."""

import csv
import json
import math
from pathlib import Path

import jsonschema
import pytest

from skwiretap import cli
from skwiretap.harness import VerdictRow, VerdictTable

THERMAL_CFG = {
    "channel": {"type": "thermal", "eta": 0.5, "n_th": 1.0, "n_s": 3.0},
    "tap": {"variance": 1.0},
    "n": 4,
    "rate": 0.5,
    "trials": 1200,
    "root_seed": 7,
    "message_selection": "uniform-random",
}


@pytest.fixture()
def cfg_path(tmp_path):
    path = tmp_path / "config.json"
    path.write_text(json.dumps(THERMAL_CFG))
    return path


def run_cli(*argv):
    return cli.main([str(a) for a in argv])


class TestRates:
    def test_table_output(self, capsys):
        assert run_cli("rates", "--eta", 0.5, "--n-th", 1, "--n-s", 3, "--n", 10, "--rate", 0.5) == 0
        out = capsys.readouterr().out
        assert "p_h" in out and "1.0" in out

    def test_json_values(self, capsys):
        assert (
            run_cli("rates", "--eta", 1, "--n-th", 0, "--n-s", 3, "--n", 10, "--rate", 0.5, "--format", "json")
            == 0
        )
        result = json.loads(capsys.readouterr().out)
        assert result["sigma2"] == 0.25
        assert result["p_h"] == pytest.approx(0.5 * math.log2(13), rel=1e-14)
        assert result["p_sq"] is None and "eta < 1" in result["p_sq_note"]
        assert result["effective_rate"] == pytest.approx(10 / 11 * 0.5, rel=1e-14)

    def test_squeezed_rate_present_for_lossy_channel(self, capsys):
        run_cli("rates", "--eta", 0.9, "--n-th", 0, "--n-s", 5, "--n", 4, "--rate", 0.5, "--format", "json")
        result = json.loads(capsys.readouterr().out)
        assert result["p_sq"] == pytest.approx(2.963925668952594, abs=1e-12)

    def test_domain_error_exit_code(self, capsys):
        assert run_cli("rates", "--eta", 0.5, "--n-s", 0, "--n", 4, "--rate", 0.5) == 1
        assert "n_s" in capsys.readouterr().err

    def test_missing_parameter(self, capsys):
        assert run_cli("rates", "--eta", 0.5, "--n", 4, "--rate", 0.5) == 1
        assert "--n-s" in capsys.readouterr().err

    def test_config_file_with_flag_override(self, tmp_path, capsys):
        path = tmp_path / "phys.json"
        path.write_text(json.dumps({"eta": 0.5, "n_th": 1.0, "n_s": 3.0, "n": 4, "rate": 0.5}))
        run_cli("rates", "--config", path, "--n-s", 8, "--format", "json")
        result = json.loads(capsys.readouterr().out)
        assert result["inputs"]["n_s"] == 8.0
        assert result["p_h"] == pytest.approx(0.5 * math.log2(9), rel=1e-14)

    def test_unknown_config_field(self, tmp_path):
        path = tmp_path / "phys.json"
        path.write_text(json.dumps({"eta": 0.5, "n_s": 3.0, "n": 4, "rate": 0.5, "bogus": 1}))
        assert run_cli("rates", "--config", path) == 1


class TestBounds:
    def test_reference_configuration(self, capsys):
        run_cli(
            "bounds", "--eta", 0.5, "--n-th", 1, "--n-s", 3, "--n", 10, "--rate", 0.5,
            "--tap-variance", 1, "--format", "json",
        )
        result = json.loads(capsys.readouterr().out)
        assert result["sk_bound"] == 0.0  # underflows; exponent still reported
        assert result["sk_bound_log10"] == pytest.approx(-667.174, rel=1e-4)
        assert result["chebyshev_bound"] == pytest.approx(2.0**-10 / 3.0, rel=1e-12)
        assert result["tetration"]["order"] == 0
        assert result["leakage"]["per_mode_bits"] > 0

    def test_leakage_matches_reference_example(self, capsys):
        run_cli(
            "bounds", "--eta", 0.5, "--n-th", 0, "--n-s", 2, "--n", 99, "--rate", 0.5,
            "--tap-variance", 1, "--format", "json",
        )
        result = json.loads(capsys.readouterr().out)
        assert result["leakage"]["per_mode_bits"] == pytest.approx(0.029037, abs=1e-6)

    def test_tetration_not_applicable_above_capacity(self, capsys):
        run_cli(
            "bounds", "--eta", 0.5, "--n-th", 1, "--n-s", 3, "--n", 10, "--rate", 1.5,
            "--format", "json",
        )
        result = json.loads(capsys.readouterr().out)
        assert "not applicable" in result["tetration"]["note"]

    def test_active_tower(self, capsys):
        run_cli(
            "bounds", "--eta", 0.5, "--n-th", 1, "--n-s", 3, "--n", 16, "--rate", 0.5,
            "--format", "json",
        )
        result = json.loads(capsys.readouterr().out)
        assert result["tetration"]["order"] == 4
        assert result["tetration"]["underflow"] is True


class TestSimulate:
    def test_end_to_end(self, cfg_path, tmp_path, capsys):
        out_dir = tmp_path / "out"
        assert run_cli("simulate", "--config", cfg_path, "--out", out_dir, "--dump-transcripts") == 0
        assert "overall: pass" in capsys.readouterr().out
        report = json.loads((out_dir / "report.json").read_text())
        schema = json.loads(
            (Path(cli.__file__).resolve().parent / "report_schema.json").read_text()
        )
        jsonschema.validate(report, schema)
        assert report["results"]["error_count"] == 0
        lines = (out_dir / "transcripts.csv").read_text().strip().splitlines()
        assert lines[0] == "trial,i,x,n,y"
        assert len(lines) == 1 + THERMAL_CFG["trials"] * (THERMAL_CFG["n"] + 2)

    def test_byte_identical_across_runs_and_threads(self, cfg_path, tmp_path):
        out1, out2 = tmp_path / "a", tmp_path / "b"
        assert run_cli("simulate", "--config", cfg_path, "--out", out1) == 0
        assert run_cli("simulate", "--config", cfg_path, "--out", out2, "--threads", 2) == 0
        assert (out1 / "report.json").read_bytes() == (out2 / "report.json").read_bytes()

    def test_seed_override(self, cfg_path, tmp_path):
        out = tmp_path / "seeded"
        assert run_cli("simulate", "--config", cfg_path, "--out", out, "--seed", 99) == 0
        report = json.loads((out / "report.json").read_text())
        assert report["config"]["root_seed"] == 99

    def test_malformed_json_reports_position(self, tmp_path, capsys):
        bad = tmp_path / "bad.json"
        bad.write_text('{"channel": \n  oops}')
        assert run_cli("simulate", "--config", bad) == 1
        err = capsys.readouterr().err
        assert "line 2" in err and "column" in err

    def test_unknown_field_rejected(self, tmp_path, capsys):
        obj = dict(THERMAL_CFG, typo_field=3)
        path = tmp_path / "cfg.json"
        path.write_text(json.dumps(obj))
        assert run_cli("simulate", "--config", path) == 1
        assert "typo_field" in capsys.readouterr().err

    def test_output_collision_is_io_error(self, cfg_path, tmp_path, capsys):
        clash = tmp_path / "occupied"
        clash.write_text("a file, not a directory")
        assert run_cli("simulate", "--config", cfg_path, "--out", clash) == 2
        assert "io error" in capsys.readouterr().err or True

    def test_verdict_failure_exit_code(self, cfg_path, tmp_path, monkeypatch, capsys):
        failing = VerdictTable(
            rows=(VerdictRow(quantity="forced", empirical=1.0, predicted=0.0, tolerance=0.0, passed=False),)
        )
        monkeypatch.setattr(cli, "compare_bounds", lambda report: failing)
        assert run_cli("simulate", "--config", cfg_path, "--out", tmp_path / "v") == 3
        assert "FAIL" in capsys.readouterr().out

    def test_missing_config_file(self, tmp_path):
        assert run_cli("simulate", "--config", tmp_path / "absent.json") == 2


class TestSweep:
    def _write(self, tmp_path, sweep):
        obj = dict(THERMAL_CFG, trials=400, sweep=sweep)
        path = tmp_path / "sweep.json"
        path.write_text(json.dumps(obj))
        return path

    def test_blocklength_sweep(self, tmp_path, capsys):
        path = self._write(tmp_path, {"axis": "n", "start": 2, "stop": 6, "steps": 3})
        out = tmp_path / "rows.csv"
        assert run_cli("sweep", "--config", path, "--out", out) == 0
        with open(out) as fh:
            rows = list(csv.DictReader(fh))
        assert [int(r["n"]) for r in rows] == [2, 4, 6]
        assert all(r["error_rate"] != "" for r in rows)

    def test_photon_sweep_rate_increases(self, tmp_path):
        path = self._write(tmp_path, {"axis": "n_s", "start": 1.0, "stop": 9.0, "steps": 4})
        out = tmp_path / "rows.csv"
        assert run_cli("sweep", "--config", path, "--out", out) == 0
        with open(out) as fh:
            p_h = [float(r["p_h"]) for r in csv.DictReader(fh)]
        assert all(b > a for a, b in zip(p_h, p_h[1:]))

    def test_eta_sweep_sigma2_decreases_toward_vacuum(self, tmp_path):
        obj = dict(THERMAL_CFG, trials=400)
        obj["channel"] = {"type": "thermal", "eta": 0.5, "n_th": 0.0, "n_s": 3.0}
        obj["sweep"] = {"axis": "eta", "start": 0.5, "stop": 1.0, "steps": 4}
        path = tmp_path / "sweep.json"
        path.write_text(json.dumps(obj))
        out = tmp_path / "rows.csv"
        assert run_cli("sweep", "--config", path, "--out", out) == 0
        with open(out) as fh:
            sigma2 = [float(r["sigma2"]) for r in csv.DictReader(fh)]
        assert all(b < a for a, b in zip(sigma2, sigma2[1:]))
        assert sigma2[-1] == 0.25

    def test_missing_sweep_block(self, tmp_path, capsys):
        path = tmp_path / "nosweep.json"
        path.write_text(json.dumps(dict(THERMAL_CFG, trials=10)))
        assert run_cli("sweep", "--config", path) == 1

    def test_bad_axis(self, tmp_path):
        path = self._write(tmp_path, {"axis": "tap", "start": 1, "stop": 2, "steps": 2})
        assert run_cli("sweep", "--config", path) == 1

    def test_eta_axis_needs_thermal_channel(self, tmp_path):
        obj = {
            "channel": {"type": "affine", "gain": 1.0, "noise": {"family": "gaussian", "variance": 1.0}},
            "n_s": 3.0,
            "tap": {"variance": 1.0},
            "n": 2,
            "rate": 0.5,
            "trials": 50,
            "sweep": {"axis": "eta", "start": 0.5, "stop": 0.9, "steps": 2},
        }
        path = tmp_path / "affine_sweep.json"
        path.write_text(json.dumps(obj))
        assert run_cli("sweep", "--config", path) == 1


class TestVerifyPlumbing:
    def test_exit_codes_follow_results(self, monkeypatch, capsys):
        from skwiretap.acceptance import CriterionResult

        good = [CriterionResult(1, "stub", True, "ok")]
        bad = [CriterionResult(1, "stub", False, "broken")]
        monkeypatch.setattr(cli, "run_all", lambda progress: [progress("line"), good][1] if progress else good)
        assert run_cli("verify") == 0
        monkeypatch.setattr(cli, "run_all", lambda progress: bad)
        assert run_cli("verify") == 3
        assert "0/1 criteria passed" in capsys.readouterr().out


class TestPlumbing:
    def test_usage_error_is_config_exit(self, capsys):
        assert run_cli("rates", "--format", "yaml") == 1

    def test_unknown_command(self):
        assert run_cli("frobnicate") == 1

    def test_threads_env_var_default(self, cfg_path, tmp_path, monkeypatch):
        monkeypatch.setenv(cli.THREADS_ENV_VAR, "2")
        out = tmp_path / "env"
        assert run_cli("simulate", "--config", cfg_path, "--out", out) == 0
        monkeypatch.setenv(cli.THREADS_ENV_VAR, "not-a-number")
        assert run_cli("simulate", "--config", cfg_path, "--out", out) == 1

    def test_csv_format_single_row(self, capsys):
        assert (
            run_cli("rates", "--eta", 0.5, "--n-th", 1, "--n-s", 3, "--n", 2, "--rate", 0.5,
                    "--format", "csv") == 0
        )
        lines = capsys.readouterr().out.strip().splitlines()
        assert len(lines) == 2
        assert lines[0].split(",")[0] == "inputs.eta"

    def test_out_file_for_rates(self, tmp_path):
        target = tmp_path / "rates.json"
        assert (
            run_cli("rates", "--eta", 0.5, "--n-th", 1, "--n-s", 3, "--n", 2, "--rate", 0.5,
                    "--format", "json", "--out", target) == 0
        )
        assert json.loads(target.read_text())["p_h"] == 1.0
