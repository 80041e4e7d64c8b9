import json

import jsonschema
import pytest

from pulseqml.cli import EXIT_CONFIG, EXIT_IO, EXIT_NUMERICAL, load_schema, main, results_payload
from pulseqml.pulse import HamiltonianSpec
from pulseqml.pulse.calibration import nominal_calibration

SMALL = {
    "simulate": {"model": {"n_qubits": 2, "n_layers": 2, "ansatz": "HEA"}, "x": [0.1, 0.7]},
    "coefficients": {"model": {"n_qubits": 2, "n_layers": 1, "ansatz": "SEA"}},
    "fcc": {"model": {"n_qubits": 2, "n_layers": 1, "ansatz": "HEA"}, "samples": 40},
    "expressibility": {"model": {"n_qubits": 2, "n_layers": 1, "ansatz": "SEA"}, "pairs": 200},
    "entanglement": {"model": {"n_qubits": 3, "n_layers": 1, "ansatz": "HEA"}, "samples": 20, "measure": "ce"},
    "qoc": {"gates": ["RZ", "CZ"], "optimizer": {"total_steps": 20, "warmup_steps": 2}, "stage": {"grid_points_per_param": 2, "refine_steps": 2, "n_restarts": 2}},
    "pulse-sim": {"model": {"n_qubits": 2, "n_layers": 1, "ansatz": "HEA"}},
    "dataset": {"model": {"n_qubits": 2, "n_layers": 1}, "n_points": 10},
    "draw": {"model": {"n_qubits": 3, "n_layers": 1, "ansatz": "SEA"}},
    "bench": {"samples": 5, "bench": {"qubits": [2, 3], "layers": [1], "repeats": 1, "ansatze": ["HEA"]}},
}


@pytest.fixture(scope="module")
def nominal_cal(tmp_path_factory):
    path = tmp_path_factory.mktemp("cal") / "nominal.json"
    nominal_calibration(HamiltonianSpec()).save(path)
    return str(path)


def _run(tmp_path, command, cfg, *flags, name="out.json"):
    cfg_path = tmp_path / f"{name}.cfg"
    cfg_path.write_text(json.dumps(cfg))
    out = tmp_path / name
    code = main([command, "--config", str(cfg_path), "--out", str(out), *flags])
    return code, (json.loads(out.read_text()) if code == 0 else None)


@pytest.mark.parametrize("command", sorted(SMALL))
def test_every_command_is_schema_valid_and_reproducible(tmp_path, command, nominal_cal):
    cfg = dict(SMALL[command])
    if command == "pulse-sim":
        cfg["calibration"] = nominal_cal
    code, report = _run(tmp_path, command, cfg, "--seed", "4")
    assert code == 0
    jsonschema.validate(report, load_schema("report"))
    assert report["command"] == command and report["seed"] == 4
    # the echoed config alone must reproduce the results
    code, again = _run(tmp_path, command, report["config"], name="again.json")
    assert code == 0
    assert results_payload(again) == results_payload(report)


def test_flags_override_file_config(tmp_path):
    code, report = _run(tmp_path, "simulate", SMALL["simulate"], "--qubits", "3", "--ansatz", "SEA", "--mode", "probs")
    assert code == 0
    assert report["config"]["model"]["n_qubits"] == 3 and report["config"]["model"]["ansatz"] == "SEA"
    assert report["config"]["mode"] == "probs"


def test_seed_changes_random_results(tmp_path):
    a = _run(tmp_path, "fcc", SMALL["fcc"], "--seed", "1", name="a.json")[1]
    b = _run(tmp_path, "fcc", SMALL["fcc"], "--seed", "2", name="b.json")[1]
    assert results_payload(a) != results_payload(b)


def test_reserved_ansatz_is_a_config_error(tmp_path):
    assert _run(tmp_path, "draw", {"model": {"n_qubits": 2, "ansatz": "C20"}})[0] == EXIT_CONFIG


def test_missing_calibration_is_a_config_error(tmp_path):
    assert _run(tmp_path, "pulse-sim", SMALL["pulse-sim"])[0] == EXIT_CONFIG


def test_schema_violation_is_a_config_error(tmp_path):
    assert _run(tmp_path, "simulate", {"model": {"n_qubits": 40}})[0] == EXIT_CONFIG


def test_incommensurate_spectrum_is_a_numerical_error(tmp_path):
    cfg = {"model": {"n_qubits": 1, "ansatz": "NEA", "encoding": {"scheme": "custom", "prefactors": [2**0.5]}}}
    assert _run(tmp_path, "coefficients", cfg)[0] == EXIT_NUMERICAL


def test_unwritable_output_is_an_io_error(tmp_path):
    cfg = tmp_path / "c.json"
    cfg.write_text("{}")
    assert main(["draw", "--config", str(cfg), "--out", str(tmp_path / "missing" / "x.json")]) == EXIT_IO
    assert main(["draw", "--config", str(tmp_path / "nope.json")]) == EXIT_IO


def test_stdout_report(capsys):
    assert main(["draw", "--qubits", "2"]) == 0
    report = json.loads(capsys.readouterr().out)
    assert report["command"] == "draw" and report["results"]["text"]
