import json
import math

import pytest
from dotenv import load_dotenv
from typer.testing import CliRunner

from cuspkit.cli.config import CuspkitEnvConfig
from cuspkit.cli.csv_io import HASH_PREFIX, format_cell, parse_cell, read_csv, write_csv
from cuspkit.cli.main import app
from cuspkit.cli.run_config import RunCommand, RunConfig
from cuspkit.cli.runner import EXIT_INVALID, EXIT_NONPHYSICAL, EXIT_NUMERICAL, EXIT_OK, run
from cuspkit.potential import PotentialModel
from cuspkit.serialization import ModelCatalog

runner = CliRunner()

ATTRACTIVE_VDW = {"terms": [{"strength": -1.0, "exponent": 6.0}]}
COULOMB = {"terms": [{"strength": -2.0, "exponent": 1.0}]}
SMALL_GRID = {"r_max": 3.0, "n_log": 60, "n_lin": 120}


@pytest.fixture(scope="module", autouse=True)
def load_env():
    load_dotenv(override=True)


def test_env_config(monkeypatch):
    monkeypatch.setenv("CUSPKIT_THREADS", "3")
    monkeypatch.setenv("CUSPKIT_SEED", "")
    monkeypatch.setenv("CUSPKIT_LOG_OUTPUT", "both")
    env = CuspkitEnvConfig()
    assert env.threads == 3
    assert env.seed is None
    assert env.log_output == "both"
    monkeypatch.setenv("CUSPKIT_SEED", "12345")
    assert CuspkitEnvConfig().seed == 12345


def write_config(tmp_path, name="run.json", **fields):
    path = tmp_path / name
    path.write_text(json.dumps({"version": 1, **fields}))
    return path


def invoke(config_path, output, *extra):
    return runner.invoke(app, ["run", "--config", str(config_path), "--output", str(output), *extra])


@pytest.mark.smoke
def test_classify_nonphysical_potential(tmp_path):
    config = write_config(tmp_path, command="classify", potential=ATTRACTIVE_VDW)
    result = invoke(config, tmp_path / "out")
    assert result.exit_code == EXIT_OK
    assert "NONPHYSICAL-aVdW" in result.stdout
    digest, columns, rows = read_csv(tmp_path / "out" / "classify.csv")
    assert columns[0] == "tag"
    assert rows[0]["tag"] == "NONPHYSICAL-aVdW"
    assert rows[0]["dominant_alpha"] == 6.0
    assert digest == RunConfig.from_file(config).digest()


@pytest.mark.smoke
@pytest.mark.parametrize("command, output", [
    ("solve", "solve.csv"),
    ("rigidity-check", "rigidity_check.csv"),
    ("energy-series", "energy_series.csv"),
])
def test_solve_type_nonphysical_exits_3(tmp_path, command, output):
    assert RunCommand(command).is_solve_type
    config = write_config(tmp_path, command=command, potential=ATTRACTIVE_VDW, energies=[0.0], radii=[1.0])
    result = invoke(config, tmp_path / "out")
    assert result.exit_code == EXIT_NONPHYSICAL
    assert not (tmp_path / "out" / output).exists()


def test_cusp_eval_is_not_solve_type():
    assert not RunCommand.cusp_eval.is_solve_type
    assert not RunCommand.classify.is_solve_type


@pytest.mark.parametrize("fields", [
    {"command": "classify", "potential": COULOMB, "colour": "red"},
    {"command": "solve", "potential": COULOMB},
    {"command": "cusp-eval", "potential": COULOMB, "radii": [0.5, -1.0]},
    {"command": "classify"},
    {"command": "unknown", "potential": COULOMB},
])
def test_invalid_configs_exit_2(tmp_path, fields):
    result = invoke(write_config(tmp_path, **fields), tmp_path / "out")
    assert result.exit_code == EXIT_INVALID


def test_missing_and_malformed_configs(tmp_path):
    assert invoke(tmp_path / "absent.json", tmp_path / "out").exit_code == EXIT_INVALID
    broken = tmp_path / "broken.json"
    broken.write_text("{\"version\": 1,")
    assert invoke(broken, tmp_path / "out").exit_code == EXIT_INVALID
    unsupported = write_config(tmp_path, command="classify", potential_file="model.txt")
    assert invoke(unsupported, tmp_path / "out").exit_code == EXIT_INVALID


def test_numerical_failure_exits_4(tmp_path):
    stiff = {"terms": [{"strength": 1.0, "exponent": 6.0}, {"strength": 0.5, "exponent": 5.9}]}
    config = write_config(tmp_path, command="solve", potential=stiff, energies=[0.0], grid=SMALL_GRID)
    result = invoke(config, tmp_path / "out")
    assert result.exit_code == EXIT_NUMERICAL


@pytest.mark.smoke
def test_cusp_eval_wronskian(tmp_path):
    config = write_config(tmp_path, command="cusp-eval", potential=COULOMB, l=1, radii=[0.05, 0.5, 2.0])
    assert invoke(config, tmp_path / "out").exit_code == EXIT_OK
    _, columns, rows = read_csv(tmp_path / "out" / "cusp_eval.csv")
    assert "wronskian" in columns
    assert [row["r"] for row in rows] == [0.05, 0.5, 2.0]
    for row in rows:
        assert row["wronskian"] == pytest.approx(2.0 / math.pi, rel=1e-8)


def test_rigidity_check_on_free_particle(tmp_path):
    config = write_config(tmp_path, command="rigidity-check", potential={}, energies=[1.0],
                          radii=[0.5, 1.0, 2.0], grid=SMALL_GRID)
    result = invoke(config, tmp_path / "out")
    assert result.exit_code == EXIT_OK
    assert result.stdout.startswith("max relative residual")
    _, _, rows = read_csv(tmp_path / "out" / "rigidity_check.csv")
    assert len(rows) == 3
    assert max(row["max_residual"] for row in rows) < 1e-5
    assert rows[1]["rigidity"] == pytest.approx(1.0 / rows[1]["prob_integral"])
    assert all(row["d_eps_refined"] == pytest.approx(row["d_eps"] / 2.0) for row in rows)


@pytest.mark.slow
def test_solve_is_deterministic_across_threads(tmp_path):
    config = write_config(tmp_path, command="solve", potential=COULOMB, energies=[-1.0, 0.5, 2.0], grid=SMALL_GRID)
    assert invoke(config, tmp_path / "a", "--threads", "1").exit_code == EXIT_OK
    assert invoke(config, tmp_path / "b", "--threads", "3").exit_code == EXIT_OK
    first = (tmp_path / "a" / "solve.csv").read_bytes()
    assert first == (tmp_path / "b" / "solve.csv").read_bytes()
    assert b"\r\n" not in first
    _, columns, rows = read_csv(tmp_path / "a" / "solve.csv")
    assert columns == ["energy", "r", "u", "du", "L", "R"]
    assert len(rows) == 3 * (60 + 120)


def test_energy_series_from_catalog(tmp_path):
    ModelCatalog(models={"coulomb": PotentialModel.power(-2.0, 1.0)}).save_to_yaml(tmp_path / "models.yaml")
    config = write_config(tmp_path, command="energy-series", potential_file="models.yaml",
                          potential_name="coulomb", j_max=3, grid=SMALL_GRID)
    result = invoke(config, tmp_path / "out")
    assert result.exit_code == EXIT_OK
    _, columns, rows = read_csv(tmp_path / "out" / "energy_series.csv")
    assert columns == ["r", "f_cp", "x1", "x2", "x3"]
    assert len(rows) == 60 + 120 + 1


@pytest.mark.slow
def test_separability_run(tmp_path):
    particles = {
        "masses": [1.0, 1.0, 1.0],
        "positions": [[0.0, 0.0, -0.5], [0.0, 0.0, 0.5], [1.0, 0.0, 4.0]],
        "default_potential": {"terms": [{"strength": 1.0, "exponent": 1.0}]},
    }
    config = write_config(tmp_path, command="separability",
                          separability={"particles": particles, "density": 0.01, "samples": 3000})
    result = invoke(config, tmp_path / "out", "--seed", "7")
    assert result.exit_code == EXIT_OK
    assert "order 2" in result.stdout
    _, _, summary = read_csv(tmp_path / "out" / "separability.csv")
    assert summary[0]["order"] == 2
    assert summary[0]["density_radius_estimate"] == pytest.approx(summary[0]["density_radius"], rel=0.05)
    _, _, sweep = read_csv(tmp_path / "out" / "separability_sweep.csv")
    assert len(sweep) == 21


def test_validate_prints_digest(tmp_path):
    config = write_config(tmp_path, command="classify", potential=COULOMB)
    result = runner.invoke(app, ["validate", "--config", str(config)])
    assert result.exit_code == EXIT_OK
    assert result.stdout.strip() == f"classify config_sha256={RunConfig.from_file(config).digest()}"


def test_run_returns_outcome_without_cli(tmp_path):
    config = RunConfig(version=1, command="classify", potential=PotentialModel.power(0.75, 2.0))
    outcome = run(config, output_dir=tmp_path)
    assert outcome.exit_code == EXIT_OK
    assert outcome.summary == "SR-alCD"
    assert outcome.outputs == [tmp_path / "classify.csv"]


def test_csv_cells(tmp_path):
    assert format_cell(0.1) == "0.10000000000000001"
    assert format_cell(-math.inf) == "-inf"
    assert format_cell(True) == "true"
    assert format_cell(None) == ""
    assert parse_cell("0.10000000000000001") == 0.1
    assert parse_cell("-inf") == -math.inf
    assert parse_cell("7") == 7
    assert parse_cell("GC") == "GC"
    path = write_csv(tmp_path / "t.csv", ["a", "b"], [{"a": 1.5}], "abc")
    assert path.read_text().splitlines() == [f"{HASH_PREFIX}abc", "a,b", "1.5,"]
    assert read_csv(path) == ("abc", ["a", "b"], [{"a": 1.5, "b": None}])
