"""End-to-end acceptance checks. Each test records one PASS/FAIL line."""

import itertools
import json
import time
from fractions import Fraction

import numpy as np
import pytest
from scipy.stats import spearmanr

from conftest import random_circuit, random_state, record_criterion
from pulseqml.core import DensityMatrix, StateVector, circuit_gates, full_circuit_unitary, make_rng, run_statevector
from pulseqml.fourier import evaluate_series, fft_coefficients
from pulseqml.model import EncodingStrategy, Model, batch_forward, init_params, spectrum
from pulseqml.state_metrics import (
    EntanglementConfig,
    ExpressibilityConfig,
    bell_measurement_batch,
    concentratable,
    entangling_capability,
    entanglement_of_formation,
    expressibility_kl,
    meyer_wallach,
    meyer_wallach_batch,
)

pytestmark = pytest.mark.slow


def _brute_force(prefactors) -> set[Fraction]:
    sums = {sum(s * Fraction(a) / 2 for s, a in zip(signs, prefactors)) for signs in itertools.product((-1, 1), repeat=len(prefactors))}
    return {a - b for a in sums for b in sums}


def test_simulator_matches_full_unitary():
    rng = make_rng(0, "acceptance", "oracle")
    t0 = time.perf_counter()
    worst = 0.0
    for _ in range(200):
        n = int(rng.integers(1, 7))
        ops = random_circuit(rng, n, int(rng.integers(1, 21)))
        psi = run_statevector(ops, n)[0]
        ref = full_circuit_unitary(circuit_gates(ops), n).matrix[:, 0]
        worst = max(worst, float(np.abs(psi - ref).max()))
    dt = time.perf_counter() - t0
    ok = worst <= 1e-10 and dt < 30
    record_criterion(1, "statevector vs full unitary", ok, f"max err {worst:.1e}, {dt:.1f} s")
    assert ok


def test_fourier_exactness():
    t0 = time.perf_counter()
    c = fft_coefficients(Model(1, 1, "IDLE"), np.zeros(Model(1, 1, "IDLE").param_shape)).flat()
    anchor = max(abs(c[1]), abs(c[0] - 0.5), abs(c[2] - 0.5))
    rng = make_rng(0, "acceptance", "fourier")
    worst = 0.0
    for _ in range(50):
        n, L = int(rng.integers(1, 5)), int(rng.integers(1, 4))
        name = "NEA" if n == 1 else str(rng.choice(["NEA", "HEA", "SEA"]))
        m = Model(n, L, name, EncodingStrategy("hamming", str(rng.choice(["RX", "RY"]))))
        th = init_params("uniform", m.param_shape, rng)
        x = rng.uniform(-2 * np.pi, 2 * np.pi, size=50)
        got = evaluate_series(fft_coefficients(m, th), x[:, None])
        worst = max(worst, float(np.abs(got - batch_forward(m, x, th)[:, 0]).max()))
    dt = time.perf_counter() - t0
    ok = anchor <= 1e-10 and worst <= 1e-8 and dt < 60
    record_criterion(2, "Fourier coefficients exact", ok, f"anchor err {anchor:.1e}, round trip {worst:.1e}, {dt:.1f} s")
    assert ok


def test_spectrum_counts():
    bad = []
    for n in range(1, 5):
        for L in range(1, 4):
            f = spectrum(Model(n, L, "HEA" if n > 1 else "NEA")).frequencies[0]
            if len(f) != 2 * n * L + 1 or set(f) != _brute_force([1] * (n * L)):
                bad.append(("hamming", n, L))
        f = spectrum(Model(n, 1, "NEA", EncodingStrategy("ternary"))).frequencies[0]
        if len(f) != 3**n or set(f) != _brute_force([3**i for i in range(n)]):
            bad.append(("ternary", n))
    record_criterion(3, "spectrum sizes", not bad, f"mismatches {bad}" if bad else "all exact")
    assert not bad


def test_entanglement_gold_values():
    e = np.eye(8)
    checks = {
        "MW(Bell)": (meyer_wallach(StateVector(2, np.array([1, 0, 0, 1]) / np.sqrt(2))), 1.0),
        "MW(01)": (meyer_wallach(StateVector(2, [0, 1, 0, 0])), 0.0),
        "MW(W3)": (meyer_wallach(StateVector(3, (e[1] + e[2] + e[4]) / np.sqrt(3))), 8 / 9),
        "CE(Bell)": (concentratable(StateVector(2, np.array([1, 0, 0, 1]) / np.sqrt(2))), 0.25),
        "CE(GHZ3)": (concentratable(StateVector(3, (e[0] + e[7]) / np.sqrt(2))), 0.375),
        "EF(I/4)": (entanglement_of_formation(DensityMatrix(2, np.eye(4) / 4)), 0.0),
    }
    gold = max(abs(a - b) for a, b in checks.values())
    rng = make_rng(0, "acceptance", "bm")
    psi = np.stack([random_state(rng, 3) for _ in range(100)])
    bm = float(np.abs(bell_measurement_batch(psi, 3) - meyer_wallach_batch(psi, 3)).max())
    ok = gold <= 1e-9 and bm <= 1e-10
    record_criterion(4, "entanglement gold values", ok, f"gold err {gold:.1e}, BM-MW {bm:.1e}")
    assert ok


def test_expressibility_anchor():
    t0 = time.perf_counter()
    idle = expressibility_kl(Model(1, 1, "IDLE"), ExpressibilityConfig(10_000, 75, seed=0))
    cfg = ExpressibilityConfig(10_000, 75, seed=0)
    sea = expressibility_kl(Model(4, 1, "SEA"), cfg)
    nea = expressibility_kl(Model(4, 1, "NEA"), cfg)
    dt = time.perf_counter() - t0
    ok = abs(idle - np.log(75)) <= 1e-6 and sea < nea and dt < 120
    record_criterion(5, "expressibility anchor", ok, f"idle {idle:.6f}, SEA {sea:.4f} < NEA {nea:.4f}, {dt:.1f} s")
    assert ok


@pytest.fixture(scope="module")
def fresh_calibration():
    from pulseqml.qoc import calibrate

    t0 = time.perf_counter()
    cal, results = calibrate(seed=0)
    return cal, results, time.perf_counter() - t0


def test_qoc_convergence(fresh_calibration):
    from pulseqml.qoc import evaluate_calibration

    cal, _, dt = fresh_calibration
    rep = evaluate_calibration(cal)
    limits = {"RX": 1e-6, "RY": 1e-6, "RZ": 1e-10, "CZ": 1e-5}
    vals = {g: rep[g]["d_abs_mean"] for g in limits}
    ok = all(vals[g] <= limits[g] for g in limits) and dt < 600
    record_criterion(6, "QOC convergence", ok, ", ".join(f"{g} {v:.1e}" for g, v in vals.items()) + f", {dt:.0f} s")
    assert ok


def test_infidelity_accumulation(fresh_calibration):
    from pulseqml.pulse import circuit_infidelity, non_basis_count

    cal = fresh_calibration[0]
    t0 = time.perf_counter()
    rows = []
    for name in ("C1", "NEA", "HEA", "SEA"):
        for L in (1, 2, 3, 4):
            m = Model(3, L, name)
            rng = make_rng(0, "infidelity", name, L)
            th = init_params("uniform", m.param_shape, rng)
            ops = m.circuit(rng.uniform(0, 2 * np.pi, size=1), th)
            rows.append((name, non_basis_count(ops), circuit_infidelity(ops, 3, cal)))
    dt = time.perf_counter() - t0
    basis_worst = max(r[2] for r in rows if r[0] in ("C1", "NEA"))
    rho = float(spearmanr([r[1] for r in rows], [r[2] for r in rows]).statistic)
    ok = basis_worst <= 1e-6 and rho > 0.8 and dt < 600
    record_criterion(7, "infidelity accumulation", ok, f"basis-only max {basis_worst:.1e}, spearman {rho:.3f}, {dt:.0f} s")
    assert ok


def test_qoc_gradient_check():
    from pulseqml.qoc import GateProtocol, cost, gradient

    worst, n_bad, n_all, tiny = {}, 0, 0, np.inf
    for g in ("RX", "RY", "RZ", "CZ"):
        # tight integrator tolerances so the 1e-5 difference quotient is not dominated by solver noise
        proto = GateProtocol(g, rtol=1e-13, atol=1e-13) if g in ("RX", "RY") else GateProtocol(g)
        rng = make_rng(0, "acceptance", "gradient", g)
        w = 0.0
        for _ in range(10):
            p = proto.space.lower + rng.uniform(0.05, 0.95, size=len(proto.space.names)) * (proto.space.upper - proto.space.lower)
            an = gradient(p, proto)
            for i in range(len(p)):
                e = np.zeros_like(p)
                e[i] = 1e-5 * proto.space.unit[i]
                fd = (cost(p + e, proto) - cost(p - e, proto)) / (2 * e[i])
                rel = abs(an[i] - fd) / abs(fd)
                w = max(w, rel)
                n_all += 1
                if rel > 1e-3:
                    n_bad += 1
                    tiny = min(tiny, abs(an[i]))
        worst[g] = w
    ok = all(v <= 1e-3 for v in worst.values())
    detail = ", ".join(f"{g} {v:.1e}" for g, v in worst.items()) + f"; {n_bad}/{n_all} coordinates over"
    if n_bad:
        detail += f", smallest such |grad| {tiny:.1e}"
    record_criterion(8, "QOC gradient check", ok, detail)
    assert ok


def test_noise_direction_and_rank_order():
    means = {}
    for name in ("NEA", "HEA", "SEA"):
        m = Model(4, 1, name)
        for measure in ("mw", "bm", "ef", "ce"):
            means[name, measure] = entangling_capability(m, EntanglementConfig(measure, 200, seed=0))[0]
        for measure in ("bm", "ce"):
            means[name, measure, "noisy"] = entangling_capability(m, EntanglementConfig(measure, 200, noise_p=0.01, seed=0))[0]
    direction = all(means[a, k, "noisy"] >= means[a, k] - 1e-3 for a in ("NEA", "HEA", "SEA") for k in ("bm", "ce"))
    order = all(means["NEA", k] < means["HEA", k] <= means["SEA", k] for k in ("mw", "bm", "ef", "ce"))
    ok = direction and order
    detail = ", ".join(f"{k}: " + "/".join(f"{means[a, k]:.3f}" for a in ("NEA", "HEA", "SEA")) for k in ("mw", "bm", "ef", "ce"))
    record_criterion(9, "noise direction and rank order", ok, detail)
    assert ok


def test_cli_determinism(tmp_path):
    from test_cli import SMALL

    from pulseqml.cli import main, results_payload
    from pulseqml.pulse import HamiltonianSpec
    from pulseqml.pulse.calibration import nominal_calibration

    cal = tmp_path / "cal.json"
    nominal_calibration(HamiltonianSpec()).save(cal)
    mismatched = []
    for command, cfg in SMALL.items():
        cfg = dict(cfg, calibration=str(cal)) if command == "pulse-sim" else cfg
        first, second, echoed = (tmp_path / f"{command}-{k}.json" for k in ("a", "b", "cfg"))
        src = tmp_path / f"{command}-src.json"
        src.write_text(json.dumps(cfg))
        assert main([command, "--config", str(src), "--seed", "7", "--out", str(first)]) == 0
        report = json.loads(first.read_text())
        echoed.write_text(json.dumps(report["config"]))
        assert main([command, "--config", str(echoed), "--out", str(second)]) == 0
        if results_payload(report) != results_payload(json.loads(second.read_text())):
            mismatched.append(command)
    ok = not mismatched
    record_criterion(10, "CLI determinism", ok, f"mismatched {mismatched}" if mismatched else f"{len(SMALL)} commands identical")
    assert ok


def test_scaling_benchmark():
    from pulseqml.bench import BenchConfig, run_bench

    t0 = time.perf_counter()
    rows = run_bench(BenchConfig(qubits=(2, 3, 4, 5, 6), layers=(1, 3), samples=50, repeats=3, seed=0))
    dt = time.perf_counter() - t0
    t = {(r["metric"], r["n_qubits"], r["n_layers"]): r["mean_s"] for r in rows}
    mono = all(t[m, n, L] < t[m, n + 1, L] for m in ("expressibility", "fcc") for L in (1, 3) for n in range(2, 6))
    layers = all(t["fcc", n, 3] > t["fcc", n, 1] for n in range(2, 7))
    ok = mono and layers and dt < 900
    detail = "fcc L=1 " + "/".join(f"{t['fcc', n, 1] * 1e3:.1f}" for n in range(2, 7)) + " ms"
    record_criterion(11, "scaling benchmark", ok, f"{detail}, monotone {mono}, L3>L1 {layers}, {dt:.0f} s")
    assert ok
