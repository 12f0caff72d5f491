"""
Tests for the command line: exit codes, error reports and the Excel report.
"""

import json
import math

import pytest
from click.testing import CliRunner
from openpyxl import load_workbook

import report
from app import EXIT_CONFIG, EXIT_OK, EXIT_PARTIAL, cli


@pytest.fixture
def runner():
    return CliRunner()


def write_config(path, **raw):
    path.write_text(json.dumps(raw))
    return path


SMALL_SCAN = {"experiment": "ceff_scan", "grids": {"L": [8, 10, 12], "W": [0.5]}}


# ═══════════════════════════════════════════════════════════════════
# run
# ═══════════════════════════════════════════════════════════════════


class TestRun:

    def test_success(self, runner, tmp_path):
        cfg = write_config(tmp_path / "scan.json", **SMALL_SCAN)
        out = tmp_path / "out"
        result = runner.invoke(cli, ["run", str(cfg), "-o", str(out), "--no-progress"])
        assert result.exit_code == EXIT_OK, result.output
        assert "=== ceff_scan (gaussian) ===" in result.output
        assert (out / "ceff_scan.csv").exists()
        assert (out / "ceff_scan.manifest.json").exists()

    def test_invalid_json(self, runner, tmp_path):
        cfg = tmp_path / "broken.json"
        cfg.write_text('{"experiment": "ceff_scan",')
        result = runner.invoke(cli, ["run", str(cfg), "-o", str(tmp_path)])
        assert result.exit_code == EXIT_CONFIG
        report_ = json.loads(result.stderr)
        assert report_["error"] == "ConfigError"
        assert "line" in report_["details"]

    def test_invalid_config(self, runner, tmp_path):
        cfg = write_config(tmp_path / "bad.json", experiment="ee_scan", engine="gaussian",
                           grids={"L": [8], "W": [0.5], "delta": [0.4]})
        result = runner.invoke(cli, ["run", str(cfg), "-o", str(tmp_path / "out")])
        assert result.exit_code == EXIT_CONFIG
        assert "engine" in json.loads(result.stderr)["details"]
        assert not (tmp_path / "out").exists()

    def test_partial_failure(self, runner, tmp_path):
        cfg = write_config(tmp_path / "ring.json", experiment="ceff_scan",
                           model={"boundary": "periodic"}, grids={"L": [6, 8, 10, 14], "W": [0.5]})
        result = runner.invoke(cli, ["run", str(cfg), "-o", str(tmp_path / "out"), "--no-progress"])
        assert result.exit_code == EXIT_PARTIAL
        assert "Grid errors: 2" in result.output

    def test_plot_scripts(self, runner, tmp_path):
        cfg = write_config(tmp_path / "scan.json", **SMALL_SCAN)
        out = tmp_path / "out"
        result = runner.invoke(cli, ["run", str(cfg), "-o", str(out), "--emit-plot-script",
                                     "--no-progress", "-w", "2"])
        assert result.exit_code == EXIT_OK
        assert (out / "ceff_scan.plot.py").exists()
        assert (out / "ceff_scan.entropy.plot.py").exists()

    def test_output_key_overrides_option(self, runner, tmp_path):
        cfg = write_config(tmp_path / "scan.json", output=str(tmp_path / "from_config"), **SMALL_SCAN)
        result = runner.invoke(cli, ["run", str(cfg), "-o", str(tmp_path / "ignored"), "--no-progress"])
        assert result.exit_code == EXIT_OK
        assert (tmp_path / "from_config" / "ceff_scan.csv").exists()
        assert not (tmp_path / "ignored").exists()

    def test_missing_file(self, runner, tmp_path):
        result = runner.invoke(cli, ["run", str(tmp_path / "nope.json")])
        assert result.exit_code == 2


# ═══════════════════════════════════════════════════════════════════
# report
# ═══════════════════════════════════════════════════════════════════


class TestReport:

    def test_workbook(self, runner, tmp_path):
        cfg = write_config(tmp_path / "scan.json", **SMALL_SCAN)
        out = tmp_path / "out"
        runner.invoke(cli, ["run", str(cfg), "-o", str(out), "--no-progress"])
        xlsx = tmp_path / "report.xlsx"
        result = runner.invoke(cli, ["report", str(out), "-o", str(xlsx)])
        assert result.exit_code == 0, result.output
        assert "Tables:  2" in result.output
        wb = load_workbook(xlsx)
        assert wb.sheetnames == ["Overview", "ceff_scan", "ceff_scan.entropy"]
        assert wb["Overview"].cell(row=4, column=1).value == "File"
        assert wb["ceff_scan.entropy"].cell(row=1, column=3).value == "S_half"

    def test_default_name(self, tmp_path):
        path, summaries = report.build_report(tmp_path)
        assert path.parent == tmp_path
        assert path.name.startswith("report_") and path.suffix == ".xlsx"
        assert summaries == []


class TestSummaries:

    def test_failed_checks(self, tmp_path):
        summary = report.summarize(tmp_path / "oracle_check.csv", {"experiment": "oracle_check"},
                                   ["kind", "passed", "error"],
                                   [["bond_xx", "true", ""], ["bond_xx", "false", ""]])
        assert summary.failed_checks == 1
        assert not summary.passed

    def test_rel_dev_threshold(self, tmp_path):
        columns = ["W", "rel_dev", "error"]
        good = report.summarize(tmp_path / "a.csv", {}, columns, [["0.5", "0.01", ""], ["1", "nan", ""]])
        bad = report.summarize(tmp_path / "b.csv", {}, columns, [["0.5", "0.2", ""]])
        assert good.worst_rel_dev == 0.01 and good.passed
        assert not bad.passed

    def test_cell_values(self):
        assert report.cell_value("12") == 12
        assert report.cell_value("1.5e-06") == pytest.approx(1.5e-6)
        assert report.cell_value("true") is True
        assert report.cell_value("nan") == "nan"
        assert report.cell_value("FitError: x") == "FitError: x"

    def test_fills(self):
        assert report.rel_dev_fill(0.01) is report.GREEN_FILL
        assert report.rel_dev_fill(0.04) is report.YELLOW_FILL
        assert report.rel_dev_fill(0.5) is report.RED_FILL
        assert report.rel_dev_fill(math.nan) is report.GRAY_FILL

    def test_sheet_titles_are_unique(self, tmp_path):
        wb = report.Workbook()
        long = tmp_path / ("x" * 40 + ".csv")
        first = report._sheet_title(wb, long)
        wb.create_sheet(first)
        second = report._sheet_title(wb, long)
        assert len(first) == 31 and len(second) == 31
        assert first != second
