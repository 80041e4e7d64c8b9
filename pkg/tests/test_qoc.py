import json
from importlib import resources

import jsonschema
import numpy as np
import pytest
from scipy.stats import spearmanr

from pulseqml.core import make_rng
from pulseqml.model import Model, init_params
from pulseqml.pulse import HamiltonianSpec, Schedule, basis_pulse, circuit_infidelity, evolve_array, non_basis_count
from pulseqml.ansatz import REGISTRY
from pulseqml.pulse.schedule import _Builder
from pulseqml.qoc import (
    CostSpec,
    GateProtocol,
    OptimizerConfig,
    StageConfig,
    adam_run,
    calibrate,
    config_hash,
    cost,
    evaluate,
    evaluate_calibration,
    gate_metrics,
    gradient,
    optimize_gate,
)

FAST_OPT = OptimizerConfig(total_steps=30, warmup_steps=5)
FAST_STAGE = StageConfig(grid_points_per_param=2, refine_steps=3, n_restarts=3)


def central_difference(proto, p, spec=CostSpec(), h=1e-5):
    p = np.asarray(p, dtype=float)
    out = np.zeros_like(p)
    for i in range(len(p)):
        step = h * proto.space.unit[i]
        e = np.zeros_like(p)
        e[i] = step
        out[i] = (cost(p + e, proto, spec) - cost(p - e, proto, spec)) / (2 * step)
    return out


def test_lr_schedule_closed_form():
    opt = OptimizerConfig(base_lr=0.1, warmup_steps=10, total_steps=110, lr_floor=0.2)
    assert opt.lr(0) == 0.0
    assert opt.lr(5) == pytest.approx(0.05)
    assert opt.lr(10) == pytest.approx(0.1)
    assert opt.lr(110) == pytest.approx(0.1 * 0.2)
    for t in (20, 60, 95):
        expected = 0.1 * (0.2 + 0.8 * 0.5 * (1 + np.cos(np.pi * (t - 10) / 100)))
        assert opt.lr(t) == pytest.approx(expected)
    assert OptimizerConfig(warmup_steps=0).lr(0) == pytest.approx(0.05)


def test_config_validation():
    with pytest.raises(ValueError):
        OptimizerConfig(warmup_steps=10, total_steps=5)
    with pytest.raises(ValueError):
        OptimizerConfig(beta1=1.0)
    with pytest.raises(ValueError):
        StageConfig(n_restarts=0)
    with pytest.raises(ValueError):
        CostSpec(w_dur=-1.0)
    with pytest.raises(ValueError):
        GateProtocol("CX")
    with pytest.raises(ValueError):
        GateProtocol("RX", HamiltonianSpec(frame="lab"))
    with pytest.raises(ValueError):
        GateProtocol("RX", bounds={"sigma": (0.0, 1.0)}).space


def test_protocol_targets():
    p = GateProtocol("CZ")
    psi0, tgt = p.initial_states(), p.target_states()
    assert psi0.shape == (20, 4)
    assert np.allclose(np.linalg.norm(psi0, axis=1), 1)
    # CZ flips the sign of |11> only
    assert np.allclose(tgt[:, :3], psi0[:, :3]) and np.allclose(tgt[:, 3], -psi0[:, 3])
    assert GateProtocol("RX").angles[-1] == pytest.approx(2 * np.pi)


@pytest.mark.parametrize("gate", ["RX", "RY", "RZ", "CZ"])
def test_protocol_states_agree_with_schedule_engine(gate):
    proto = GateProtocol(gate)
    rng = make_rng(0, "agree", gate)
    p = proto.space.lower + rng.uniform(size=len(proto.space.names)) * (proto.space.upper - proto.space.lower)
    ev = evaluate(proto, p, want_grad=False)
    cal = proto.calibration(p)
    h = proto.h.with_qubits(2 if gate == "CZ" else 1)
    wires = (0, 1) if gate == "CZ" else (0,)
    z = []
    for th, psi0, tgt in zip(proto.angles, proto.initial_states(), proto.target_states()):
        spec = basis_pulse(gate, wires, th, cal, h)
        b = _Builder(len(wires), h)
        b.place(spec)
        sched = Schedule(len(wires), tuple(b.segments), tuple(b.virtual), b.phase, spec.duration)
        out = evolve_array(sched, psi0[None], h)[0]
        z.append(np.vdot(tgt, out))
    assert np.allclose(ev.overlaps, z, atol=1e-8)


@pytest.mark.parametrize("kind", ["gaussian", "drag", "hyperbolic_secant", "rectangle", "raised_cosine"])
@pytest.mark.parametrize("gate", ["RX", "RY"])
def test_rotation_gradient_matches_finite_differences(gate, kind):
    proto = GateProtocol(gate, envelope_kind=kind, beta=0.2, rtol=1e-13, atol=1e-13)
    rng = make_rng(1, "fd", gate, kind)
    for _ in range(2):
        p = proto.space.lower + rng.uniform(0.1, 0.9, size=3) * (proto.space.upper - proto.space.lower)
        g = gradient(p, proto)
        fd = central_difference(proto, p, h=1e-4)  # smaller steps hit cost roundoff on the tiny width term
        assert np.allclose(g, fd, rtol=1e-3, atol=1e-9)


@pytest.mark.parametrize("gate", ["RZ", "CZ"])
def test_free_evolution_gradient_matches_finite_differences(gate):
    proto = GateProtocol(gate)
    rng = make_rng(2, "fd", gate)
    for _ in range(5):
        p = proto.space.lower + rng.uniform(0.05, 0.95) * (proto.space.upper - proto.space.lower)
        assert np.allclose(gradient(p, proto), central_difference(proto, p), rtol=1e-3, atol=1e-12)


def test_nominal_free_evolution_is_exact():
    h = HamiltonianSpec()
    ev = evaluate(GateProtocol("RZ"), [1 / h.omega_q], want_grad=False)
    assert gate_metrics(ev.overlaps)["d_abs_mean"] < 1e-14
    assert gate_metrics(ev.overlaps)["d_phase_mean"] < 1e-12
    ev = evaluate(GateProtocol("CZ"), [np.pi / (2 * h.J)], want_grad=False)
    assert gate_metrics(ev.overlaps)["d_abs_mean"] < 1e-14


def test_custom_cost_term_enters_cost_and_gradient():
    proto = GateProtocol("CZ")
    term = ("duration_sq", 1e-3, lambda d: (d["duration"] ** 2, {"duration": 2 * d["duration"]}))
    spec = CostSpec(custom_terms=(term,))
    p = np.array([0.6])
    assert cost(p, proto, spec) == pytest.approx(cost(p, proto) + 1e-3 * 0.36)
    assert np.allclose(gradient(p, proto, spec), central_difference(proto, p, spec), rtol=1e-4)


def test_adam_converges_on_cz_duration():
    proto = GateProtocol("CZ")
    tr = adam_run(proto, CostSpec(), np.array([0.6]), 300, OptimizerConfig(total_steps=300, warmup_steps=10).lr, OptimizerConfig())
    assert abs(tr.best_params[0] - np.pi / 2 / np.pi) < 1e-3
    assert tr.best_cost <= min(tr.costs)


def test_optimize_gate_is_deterministic_and_bookkeeping_is_monotone():
    proto = GateProtocol("RZ")
    a = optimize_gate(proto, CostSpec(), FAST_OPT, FAST_STAGE, seed=3)
    b = optimize_gate(proto, CostSpec(), FAST_OPT, FAST_STAGE, seed=3)
    assert a.params == b.params
    assert a.cost <= min(a.restart_final_costs)
    assert a.cost <= min(a.restart_costs)
    assert len(a.restart_costs) == FAST_STAGE.n_restarts


def test_restart_streams_depend_on_seed():
    proto = GateProtocol("CZ")
    a = optimize_gate(proto, CostSpec(), FAST_OPT, FAST_STAGE, seed=1)
    b = optimize_gate(proto, CostSpec(), FAST_OPT, FAST_STAGE, seed=2)
    assert a.restart_final_costs[0] == b.restart_final_costs[0]
    assert a.restart_final_costs[1:] != b.restart_final_costs[1:]


def test_calibrate_writes_schema_valid_file(tmp_path):
    cal, results = calibrate(("RZ", "CZ"), opt=FAST_OPT, stage=FAST_STAGE, seed=0)
    path = tmp_path / "cal.json"
    cal.save(path)
    schema = json.loads(resources.files("pulseqml").joinpath("schemas/calibration.schema.json").read_text())
    jsonschema.validate(json.loads(path.read_text()), schema)
    assert cal.config_hash == config_hash(CostSpec(), FAST_OPT, FAST_STAGE, cal.hamiltonian.to_dict(), "gaussian")
    report = evaluate_calibration(cal, ("RZ", "CZ"))
    for g in ("RZ", "CZ"):
        assert report[g]["d_abs_mean"] == pytest.approx(results[g].metrics["d_abs_mean"], abs=1e-9)


def test_width_duration_trade_off_in_default_calibration(default_calibration):
    # the default weights favour short windows: the optimizer moves to the smallest sigma
    rx = default_calibration["RX"].params
    assert rx["sigma"] == pytest.approx(0.2, abs=1e-6)
    assert 1.0 <= rx["duration"] <= 5.0


@pytest.mark.slow
def test_registry_infidelity_correlates_positively_with_non_basis_count(default_calibration):
    counts, infid = [], []
    for name in REGISTRY.names():
        for n in (2, 3, 4):
            for L in (1, 2, 3, 4):
                m = Model(n, L, name)
                rng = make_rng(0, "registry", name, n, L)
                ops = m.circuit(rng.uniform(0, 2 * np.pi, 1), init_params("uniform", m.param_shape, rng))
                counts.append(non_basis_count(ops))
                infid.append(circuit_infidelity(ops, n, default_calibration))
    assert spearmanr(counts, infid).statistic > 0
