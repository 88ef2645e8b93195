"""End-to-end tests for the wigner-flow command line."""
import json
import math

import pytest

import app.main as cli
from app.core.export import read_field_file, read_orbit_file, read_thermo_csv
from app.core.oracle import SuiteResult
from app.models import CheckReport


@pytest.fixture(autouse=True)
def _settings(small_settings):
    return small_settings


def test_classical_writes_orbits(tmp_path):
    out = tmp_path / "orbits.json"
    code = cli.main(["classical", "--nu2", "2", "--energies", "0.5,1.5", "3.5", "--out", str(out)])
    assert code == cli.EXIT_OK
    document = read_orbit_file(out)
    assert [o.branch for o in document.orbits] == ["open", "closed_positive", "empty"]
    assert document.orbits[1].polyline


def test_td_field_writes_every_field(tmp_path):
    out = tmp_path / "td.json"
    assert cli.main(["td-field", "--beta", "1", "--out", str(out)]) == cli.EXIT_OK
    records = read_field_file(out)
    assert [r.field_name for r in records] == [
        "w0", "w_st2", "current", "current_classical", "div_J", "div_w", "reversal_x", "reversal_k",
    ]
    assert all(r.grid.n_x == 33 and r.grid.periodic == (True, True) for r in records)
    assert records[2].vector_values is not None
    assert records[0].params.beta == 1.0 and records[0].params.nu2 == 1.0


def test_gaussian_field_respects_grid_option(tmp_path):
    out = tmp_path / "gaussian.json"
    assert cli.main(["gaussian-field", "--gamma", "1", "--nu2", "2", "--grid", "17", "--out", str(out)]) == cli.EXIT_OK
    records = read_field_file(out)
    assert [r.field_name for r in records] == ["g_gamma", "current", "div_J", "w", "div_w"]
    assert records[0].grid.n_x == 17
    assert records[0].params.gamma == 1.0


def test_td_thermo_single_file(tmp_path):
    out = tmp_path / "thermo.csv"
    assert cli.main(["td-thermo", "--beta-min", "0.1", "--beta-max", "1", "--steps", "4", "--out", str(out)]) == 0
    data = read_thermo_csv(out)
    assert len(data["beta"]) == 4
    assert data["beta"][-1] == 1.0


def test_td_thermo_one_file_per_strength(tmp_path):
    out = tmp_path / "thermo.csv"
    code = cli.main([
        "td-thermo", "--beta-min", "0.1", "--beta-max", "1", "--steps", "3", "--nu2", "1", "2", "--out", str(out),
    ])
    assert code == cli.EXIT_OK
    assert not out.exists()
    assert (tmp_path / "thermo_nu2=1.csv").exists()
    assert (tmp_path / "thermo_nu2=2.csv").exists()


def test_td_thermo_outside_correction_regime(tmp_path):
    out = tmp_path / "thermo.csv"
    args = ["td-thermo", "--beta-min", "0.5", "--beta-max", "5", "--steps", "2", "--nu2", "2", "--out", str(out)]
    assert cli.main(args) == cli.EXIT_OK
    data = read_thermo_csv(out)
    assert math.isnan(data["z_q"][1]) and not math.isnan(data["z_cl"][1])
    assert cli.main(args + ["--strict"]) == cli.EXIT_USAGE


@pytest.mark.parametrize(
    "argv",
    [
        [],
        ["classical", "--nu2", "-1", "--energies", "1", "--out", "x.json"],
        ["classical", "--nu2", "1", "--energies", "one", "--out", "x.json"],
        ["td-field", "--beta", "0", "--out", "x.json"],
        ["td-thermo", "--beta-min", "2", "--beta-max", "1", "--out", "x.csv"],
        ["td-thermo", "--beta-min", "0.1", "--beta-max", "1", "--steps", "1", "--out", "x.csv"],
        ["gaussian-field", "--gamma", "5", "--out", "x.json"],
        ["gaussian-field", "--gamma", "1", "--grid", "4", "--out", "x.json"],
        ["--log-level", "loud", "gaussian-field", "--gamma", "1", "--out", "x.json"],
    ],
)
def test_bad_input_exits_with_usage_status(argv, tmp_path, monkeypatch, capsys):
    monkeypatch.chdir(tmp_path)
    assert cli.main(argv) == cli.EXIT_USAGE
    assert "wigner-flow: error" in capsys.readouterr().err
    assert not list(tmp_path.iterdir())


def test_unknown_configured_log_level_is_a_usage_error(tmp_path, monkeypatch, capsys):
    monkeypatch.chdir(tmp_path)
    monkeypatch.setenv("WIGNER_FLOW_LOG_LEVEL", "chatty")
    cli.get_settings.cache_clear()
    assert cli.main(["gaussian-field", "--gamma", "1", "--out", "x.json"]) == cli.EXIT_USAGE
    assert "unknown log level" in capsys.readouterr().err
    assert not list(tmp_path.iterdir())


class _CannedSuite:
    reports = []

    def __init__(self, grid_points=None):
        self.grid_points = grid_points

    def run(self):
        return SuiteResult(reports=list(self.reports), elapsed_ms=1)


@pytest.mark.parametrize("failing, expected", [(False, cli.EXIT_OK), (True, cli.EXIT_FAILED)])
def test_verify_exit_status_and_report(failing, expected, tmp_path, monkeypatch, capsys):
    reports = [CheckReport.build("quadrature_vs_bessel", 1e-14, 1e-8, "relative")]
    if failing:
        reports.append(CheckReport.build("erf_consistency", 1e-3, 1e-6))
    monkeypatch.setattr(_CannedSuite, "reports", reports)
    monkeypatch.setattr(cli, "VerificationSuite", _CannedSuite)

    out = tmp_path / "report.json"
    assert cli.main(["verify", "--json", str(out)]) == expected
    lines = capsys.readouterr().out.splitlines()
    assert lines[0].startswith("PASS  quadrature_vs_bessel")
    assert lines[-1].startswith("FAIL" if failing else "PASS")
    assert len(json.loads(out.read_text())) == len(reports)


def test_verify_report_to_stdout(monkeypatch, capsys):
    monkeypatch.setattr(_CannedSuite, "reports", [CheckReport.build("gaussian_purity", 0.0, 1e-8, "relative")])
    monkeypatch.setattr(cli, "VerificationSuite", _CannedSuite)
    assert cli.main(["verify", "--json", "-"]) == cli.EXIT_OK
    out = capsys.readouterr().out
    payload = json.loads(out[out.index("["):])
    assert payload[0]["name"] == "gaussian_purity"


@pytest.mark.parametrize(
    "argv",
    [
        ["classical", "--nu2", "0.5", "--energies", "1.2", "-1.2"],
        ["td-field", "--beta", "0.5"],
        ["gaussian-field", "--gamma", "1.5", "--grid", "17"],
        ["td-thermo", "--beta-min", "0.2", "--beta-max", "1", "--steps", "3"],
    ],
)
def test_repeated_runs_write_identical_bytes(tmp_path, argv):
    first, second = tmp_path / "first.out", tmp_path / "second.out"
    assert cli.main(argv + ["--out", str(first)]) == cli.EXIT_OK
    assert cli.main(argv + ["--out", str(second)]) == cli.EXIT_OK
    assert first.read_bytes() == second.read_bytes()
