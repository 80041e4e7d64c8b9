"""Command-line front end: ``pulseqml <command> [--config FILE] [flags]``."""

from __future__ import annotations

import argparse
import copy
import json
import platform
import sys
import time
from importlib import resources
from pathlib import Path

import numpy as np

from . import __version__

SCHEMA_VERSION = "1.0"
COMMANDS = ("simulate", "coefficients", "fcc", "expressibility", "entanglement", "qoc", "pulse-sim", "dataset", "draw", "bench")

EXIT_OK, EXIT_CONFIG, EXIT_NUMERICAL, EXIT_IO = 0, 2, 3, 4


class ConfigError(ValueError):
    pass


DEFAULTS = {
    "model": {"n_qubits": 1, "n_layers": 1, "ansatz": "HEA", "encoding": {"scheme": "hamming"}},
    "seed": 0,
    "params": "uniform",
    "x": [0.0],
    "mode": "expval",
    "shots": None,
    "noise": None,
    "calibration": None,
    "bins": 75,
    "pairs": 10_000,
    "samples": None,
    "measure": "mw",
    "ce_subset": None,
    "normalized": False,
    "gates": ["RX", "RY", "RZ", "CZ"],
    "envelope": "gaussian",
    "optimizer": {},
    "stage": {},
    "circuit": None,
    "binding": "shared",
    "n_points": 100,
    "bench": {"qubits": [2, 3, 4, 5, 6], "layers": [1, 3], "repeats": 3, "ansatze": ["NEA", "HEA", "SEA"]},
}

SAMPLE_DEFAULTS = {"fcc": 10_000, "entanglement": 1000, "bench": 50}


def load_schema(name: str) -> dict:
    return json.loads(resources.files("pulseqml").joinpath(f"schemas/{name}.schema.json").read_text())


def _validate(instance, schema_name: str):
    import jsonschema

    try:
        jsonschema.validate(instance, load_schema(schema_name))
    except jsonschema.ValidationError as err:
        raise ConfigError(f"{schema_name}: {err.message}") from None


def _merge(base: dict, override: dict) -> dict:
    out = copy.deepcopy(base)
    for k, v in override.items():
        if isinstance(v, dict) and isinstance(out.get(k), dict):
            out[k] = _merge(out[k], v)
        else:
            out[k] = v
    return out


def resolve_config(command: str, file_cfg: dict, args: argparse.Namespace) -> dict:
    cfg = _merge(DEFAULTS, file_cfg)
    m = cfg["model"]
    if args.qubits is not None:
        m["n_qubits"] = args.qubits
    if args.layers is not None:
        m["n_layers"] = args.layers
    if args.ansatz is not None:
        m["ansatz"] = args.ansatz
    if args.encoding is not None:
        enc = m.get("encoding", {})
        m["encoding"] = dict(enc if isinstance(enc, dict) else {"scheme": enc}, scheme=args.encoding)
    if isinstance(m.get("encoding"), str):
        m["encoding"] = {"scheme": m["encoding"]}
    # rotation gate of the encoding: RY for the fcc protocol, RX otherwise
    m.setdefault("encoding", {}).setdefault("gate", "RY" if command == "fcc" else "RX")
    for flag in ("seed", "measure", "noise", "shots", "calibration", "bins", "pairs", "samples", "mode", "params"):
        v = getattr(args, flag)
        if v is not None:
            cfg[flag] = v
    if cfg["samples"] is None:
        cfg["samples"] = SAMPLE_DEFAULTS.get(command, 1000)
    cfg["command"] = command
    _validate(cfg, "config")
    return cfg


# --------------------------------------------------------------------------
# commands
# --------------------------------------------------------------------------


def _model(cfg):
    from .ansatz import UnknownAnsatzError
    from .model import Model

    try:
        return Model.from_dict(cfg["model"])
    except UnknownAnsatzError as err:
        raise ConfigError(str(err.args[0])) from None
    except (ValueError, KeyError, TypeError) as err:
        raise ConfigError(f"invalid model description: {err}") from None


def _params(model, cfg, streams):
    from .core import make_rng
    from .model import init_params

    p = cfg["params"]
    if isinstance(p, str):
        streams.append([cfg["seed"], "params"])
        try:
            return init_params(p, model.param_shape, make_rng(cfg["seed"], "params"))
        except ValueError as err:
            raise ConfigError(str(err)) from None
    arr = np.asarray(p, dtype=float)
    if arr.shape != model.param_shape:
        raise ConfigError(f"params must have shape {list(model.param_shape)}")
    return arr


def _inputs(model, cfg):
    x = np.asarray(cfg["x"], dtype=float)
    if x.ndim <= 1:
        x = x.reshape(-1, model.n_features) if model.n_features > 1 else x.reshape(-1, 1)
    if x.shape[1] != model.n_features:
        raise ConfigError(f"each input needs {model.n_features} feature(s)")
    return x


def _calibration(cfg, required=True):
    from .pulse.calibration import CalibrationResult, nominal_calibration

    path = cfg.get("calibration")
    if path is None:
        if required:
            raise ConfigError("this command needs --calibration PATH")
        return nominal_calibration()
    data = json.loads(Path(path).read_text())
    _validate(data, "calibration")
    return CalibrationResult.from_dict(data)


def cmd_simulate(cfg, streams):
    from .model import ExecutionRequest, batch_forward

    model = _model(cfg)
    theta = _params(model, cfg, streams)
    X = _inputs(model, cfg)
    cal = _calibration(cfg) if cfg["calibration"] else None
    if cfg["shots"]:
        streams.append([cfg["seed"], "shots", "<input>", "<param>"])
    try:
        req = ExecutionRequest(cfg["mode"], cfg["shots"], cfg["noise"], analytic=cfg["shots"] is None, calibration=cal, seed=cfg["seed"])
    except ValueError as err:
        raise ConfigError(str(err)) from None
    out = batch_forward(model, X, theta[None], req)[:, 0]
    res = {"mode": cfg["mode"], "x": X.tolist(), "theta": theta.tolist()}
    if cfg["mode"] == "expval":
        res["expval"] = [float(v) for v in out]
    elif cfg["mode"] in ("state", "density"):
        res[cfg["mode"]] = {"re": out.real.tolist(), "im": out.imag.tolist()}
    else:
        res["probs"] = out.tolist()
    return res


def cmd_coefficients(cfg, streams):
    from .fourier import fft_coefficients

    model = _model(cfg)
    theta = _params(model, cfg, streams)
    c = fft_coefficients(model, theta)
    return {**c.to_dict(), "theta": theta.tolist()}


def cmd_fcc(cfg, streams):
    from .core import make_rng
    from .fourier import fcc, fingerprint
    from .state_metrics import sample_thetas

    model = _model(cfg)
    streams.append([cfg["seed"], "fcc"])
    thetas = sample_thetas(model, int(cfg["samples"]), make_rng(cfg["seed"], "fcc"))
    fp = fingerprint(model, thetas)
    return {
        "frequencies": [[str(w) for w in v] for v in fp.frequencies],
        "fcc": fcc(fp, cfg["normalized"]),
        "normalized": cfg["normalized"],
        "fingerprint": {"abs": fp.to_dict()["abs"]},
        "n_samples": int(cfg["samples"]),
    }


def cmd_expressibility(cfg, streams):
    from .state_metrics import ExpressibilityConfig, expressibility_kl

    model = _model(cfg)
    streams.append([cfg["seed"], "expressibility"])
    ecfg = ExpressibilityConfig(int(cfg["pairs"]), int(cfg["bins"]), int(cfg["seed"]))
    return {"kl": expressibility_kl(model, ecfg), "n_pairs": ecfg.n_pairs, "n_bins": ecfg.n_bins, "seed": ecfg.seed}


def cmd_entanglement(cfg, streams):
    from .state_metrics import EntanglementConfig, entangling_capability

    model = _model(cfg)
    try:
        sub = tuple(cfg["ce_subset"]) if cfg["ce_subset"] is not None else None
        ecfg = EntanglementConfig(cfg["measure"], int(cfg["samples"]), cfg["noise"], cfg["shots"], sub, int(cfg["seed"]))
    except ValueError as err:
        raise ConfigError(str(err)) from None
    streams.append([cfg["seed"], "entanglement"])
    if ecfg.shots:
        streams.append([cfg["seed"], "entanglement", "shots", ecfg.measure])
    mean, std, vals = entangling_capability(model, ecfg)
    return {
        "measure": ecfg.measure,
        "mean": mean,
        "std": std,
        "n_samples": ecfg.n_samples,
        "noise_p": ecfg.noise_p,
        "seed": ecfg.seed,
        "per_sample": vals.tolist(),
    }


def cmd_qoc(cfg, streams):
    from .pulse.hamiltonian import HamiltonianSpec
    from .qoc import CostSpec, OptimizerConfig, StageConfig, calibrate, evaluate_calibration

    try:
        opt = OptimizerConfig(**cfg["optimizer"])
        stage = StageConfig(**cfg["stage"])
        h = HamiltonianSpec.from_dict(cfg.get("hamiltonian", {}))
    except (TypeError, ValueError) as err:
        raise ConfigError(str(err)) from None
    for g in cfg["gates"]:
        if stage.n_restarts > 1:
            streams.append([cfg["seed"], "qoc", g, "restart", "1..n"])
    cal, results = calibrate(tuple(cfg["gates"]), h, CostSpec(), opt, stage, int(cfg["seed"]), cfg["envelope"])
    if cfg["calibration"]:
        cal.save(cfg["calibration"])
    return {
        "calibration": cal.to_dict(),
        "report": evaluate_calibration(cal, tuple(cfg["gates"])),
        "costs": {g: {"best": r.cost, "grid": r.grid_cost, "restarts": r.restart_costs} for g, r in results.items()},
    }


def cmd_pulse_sim(cfg, streams):
    from .core import Operation, run_statevector
    from .pulse.evolve import evolve_array
    from .pulse.schedule import non_basis_count, schedule_circuit

    cal = _calibration(cfg)
    if cfg["circuit"] is not None:
        n = int(cfg["model"]["n_qubits"])
        try:
            ops = [Operation(g["name"].upper(), tuple(g["wires"]), g.get("param")) for g in cfg["circuit"]]
        except (KeyError, TypeError) as err:
            raise ConfigError(f"invalid circuit description: {err}") from None
    else:
        model = _model(cfg)
        n = model.n_qubits
        theta = _params(model, cfg, streams)
        ops = model.circuit(_inputs(model, cfg)[0], theta)
    sched = schedule_circuit(ops, n, cal, cfg["binding"])
    psi0 = np.zeros((1, 2**n), dtype=complex)
    psi0[0, 0] = 1
    pulsed = evolve_array(sched, psi0, cal.hamiltonian.with_qubits(n))[0]
    ideal = run_statevector(ops, n)[0]
    infid = float(max(0.0, 1 - abs(np.vdot(ideal, pulsed)) ** 2))
    return {
        "infidelity": infid,
        "non_basis_gates": non_basis_count(ops),
        "schedule": sched.to_dict(),
        "state": {"re": pulsed.real.tolist(), "im": pulsed.imag.tolist()},
    }


def cmd_dataset(cfg, streams):
    from .core import make_rng
    from .fourier import generate_dataset

    model = _model(cfg)
    streams.append([cfg["seed"], "dataset"])
    ds = generate_dataset(model, int(cfg["n_points"]), make_rng(cfg["seed"], "dataset"))
    return ds.to_dict()


def cmd_draw(cfg, streams):
    from .drawing import draw_text

    model = _model(cfg)
    return {"text": draw_text(model.circuit(), model.n_qubits)}


def cmd_bench(cfg, streams, timings):
    from .bench import BenchConfig, run_bench

    b = cfg["bench"]
    try:
        q = b["qubits"]
        qubits = tuple(range(q[0], q[1] + 1)) if len(q) == 2 and b.get("range", True) else tuple(q)
        bcfg = BenchConfig(qubits, tuple(b["layers"]), tuple(b["ansatze"]), int(cfg["samples"]), int(b["repeats"]), int(cfg["seed"]))
    except (KeyError, TypeError, ValueError) as err:
        raise ConfigError(f"invalid bench config: {err}") from None
    rows = run_bench(bcfg)
    timings["points"] = rows
    return {"points": [{k: r[k] for k in ("metric", "n_qubits", "n_layers")} | ({"error": r["error"]} if "error" in r else {}) for r in rows]}


HANDLERS = {
    "simulate": cmd_simulate,
    "coefficients": cmd_coefficients,
    "fcc": cmd_fcc,
    "expressibility": cmd_expressibility,
    "entanglement": cmd_entanglement,
    "qoc": cmd_qoc,
    "pulse-sim": cmd_pulse_sim,
    "dataset": cmd_dataset,
    "draw": cmd_draw,
}


def versions() -> dict:
    import scipy

    return {"pulseqml": __version__, "numpy": np.__version__, "scipy": scipy.__version__, "python": platform.python_version()}


def run(command: str, cfg: dict) -> dict:
    """Execute a resolved config and return the report dict."""
    streams: list = []
    timings: dict = {}
    t0 = time.perf_counter()
    if command == "bench":
        results = cmd_bench(cfg, streams, timings)
    else:
        results = HANDLERS[command](cfg, streams)
    timings["wall_s"] = time.perf_counter() - t0
    return {
        "schema_version": SCHEMA_VERSION,
        "command": command,
        "config": cfg,
        "seed": cfg["seed"],
        "streams": streams,
        "results": results,
        "timings": timings,
        "versions": versions(),
    }


def results_payload(report: dict) -> str:
    """Canonical serialization of the deterministic part of a report."""
    return json.dumps(report["results"], sort_keys=True)


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="pulseqml", description=__doc__)
    p.add_argument("command", choices=COMMANDS)
    p.add_argument("--config", type=Path)
    p.add_argument("--seed", type=int)
    p.add_argument("--out", type=Path)
    p.add_argument("--qubits", type=int)
    p.add_argument("--layers", type=int)
    p.add_argument("--ansatz")
    p.add_argument("--encoding", choices=("hamming", "binary", "ternary"))
    p.add_argument("--measure", choices=("mw", "bm", "ef", "ce"))
    p.add_argument("--noise", type=float)
    p.add_argument("--shots", type=int)
    p.add_argument("--calibration")
    p.add_argument("--bins", type=int)
    p.add_argument("--pairs", type=int)
    p.add_argument("--samples", type=int)
    p.add_argument("--mode", choices=("expval", "density", "state", "probs"))
    p.add_argument("--params", choices=("zeros", "pi", "uniform"))
    return p


def main(argv=None) -> int:
    from .fourier import IncommensurateSpectrumError
    from .pulse.calibration import UncalibratedGateError
    from .pulse.evolve import IntegrationError

    args = build_parser().parse_args(argv)
    try:
        file_cfg = json.loads(args.config.read_text()) if args.config else {}
        if not isinstance(file_cfg, dict):
            raise ConfigError("config file must hold a JSON object")
        file_cfg.pop("command", None)
        cfg = resolve_config(args.command, file_cfg, args)
        report = run(args.command, cfg)
        text = json.dumps(report, indent=2, sort_keys=True)
        if args.out:
            args.out.write_text(text + "\n")
        else:
            sys.stdout.write(text + "\n")
    except (IntegrationError, FloatingPointError, IncommensurateSpectrumError, np.linalg.LinAlgError) as err:
        print(f"numerical failure: {err}", file=sys.stderr)
        return EXIT_NUMERICAL
    except (ConfigError, UncalibratedGateError, json.JSONDecodeError, ValueError, KeyError) as err:
        print(f"config error: {err}", file=sys.stderr)
        return EXIT_CONFIG
    except OSError as err:
        print(f"I/O failure: {err}", file=sys.stderr)
        return EXIT_IO
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
