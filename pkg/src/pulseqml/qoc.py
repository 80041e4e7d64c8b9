"""Two-stage quantum optimal control of the basis-gate pulses."""

from __future__ import annotations

import hashlib
import itertools
import json
from dataclasses import asdict, dataclass, field
from typing import Callable, Sequence

import numpy as np
from scipy.integrate import solve_ivp

from .core import H as HADAMARD
from .core import PAULI, make_rng, ry, rx, rz
from .pulse.calibration import ROTATION_BOUNDS, CalibrationResult, GateCalibration
from .pulse.envelopes import Envelope, envelope_derivatives, unit_area
from .pulse.evolve import ATOL, RTOL, IntegrationError, evolve_array
from .pulse.graph import BASIS_GATES
from .pulse.hamiltonian import HamiltonianSpec, z_diagonal
from .pulse.schedule import AXIS_PHASE, Schedule, basis_pulse

N_ANGLES = 20
CZ_MATRIX = np.diag([1, 1, 1, -1]).astype(complex)


# --------------------------------------------------------------------------
# configuration
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class CostSpec:
    w_abs: float = (1 - 2e-8) / 2
    w_phase: float = (1 - 2e-8) / 2
    w_width: float = 5e-9
    w_dur: float = 15e-9
    # (name, weight, evaluator(params dict) -> (value, {param: d value}))
    custom_terms: tuple = ()

    def __post_init__(self):
        if min(self.w_abs, self.w_phase, self.w_width, self.w_dur) < 0:
            raise ValueError("cost weights must be non-negative")
        for term in self.custom_terms:
            if term[1] < 0:
                raise ValueError("cost weights must be non-negative")


@dataclass(frozen=True)
class OptimizerConfig:
    base_lr: float = 0.05
    warmup_steps: int = 50
    total_steps: int = 1000
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    weight_decay: float = 1e-4
    lr_floor: float = 0.0

    def __post_init__(self):
        if not (0 < self.beta1 < 1 and 0 < self.beta2 < 1):
            raise ValueError("Adam betas must lie in (0, 1)")
        if not 0 <= self.warmup_steps < self.total_steps:
            raise ValueError("warmup_steps must be smaller than total_steps")
        if self.base_lr <= 0:
            raise ValueError("base_lr must be positive")

    def lr(self, t: int) -> float:
        """Linear warmup to ``base_lr`` then cosine decay to ``base_lr * lr_floor``."""
        if self.warmup_steps > 0 and t < self.warmup_steps:
            return self.base_lr * t / self.warmup_steps
        progress = min(1.0, (t - self.warmup_steps) / (self.total_steps - self.warmup_steps))
        decay = self.lr_floor + (1 - self.lr_floor) * 0.5 * (1 + np.cos(np.pi * progress))
        return self.base_lr * decay


@dataclass(frozen=True)
class StageConfig:
    grid_points_per_param: int = 5
    refine_steps: int = 10
    n_restarts: int = 5
    perturb_sigma: float = 0.1

    def __post_init__(self):
        if self.grid_points_per_param < 1:
            raise ValueError("grid needs at least one point per parameter")
        if self.n_restarts < 1:
            raise ValueError("n_restarts must be >= 1")
        if self.perturb_sigma <= 0:
            raise ValueError("perturb_sigma must be positive")
        if self.refine_steps < 0:
            raise ValueError("refine_steps must be >= 0")


# --------------------------------------------------------------------------
# protocols
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class ParamSpace:
    names: tuple[str, ...]
    lower: np.ndarray
    upper: np.ndarray
    unit: np.ndarray  # optimizer works on p / unit

    def clip(self, p: np.ndarray) -> np.ndarray:
        return np.clip(p, self.lower, self.upper)

    def grid(self, points: int) -> list[np.ndarray]:
        axes = [np.linspace(lo, hi, points) if points > 1 else np.array([(lo + hi) / 2]) for lo, hi in zip(self.lower, self.upper)]
        return [np.array(c) for c in itertools.product(*axes)]

    def to_dict(self, p) -> dict:
        return {k: float(v) for k, v in zip(self.names, p)}


@dataclass(frozen=True)
class GateProtocol:
    """Target gate, its angle sweep and the optimizer's parameter box."""

    gate: str
    h: HamiltonianSpec = field(default_factory=HamiltonianSpec)
    envelope_kind: str = "gaussian"
    angles: tuple[float, ...] = tuple(np.linspace(0, 2 * np.pi, N_ANGLES))
    bounds: dict | None = None
    beta: float = 0.0
    nu: float = 1.0
    rtol: float = RTOL
    atol: float = ATOL

    def __post_init__(self):
        if self.gate not in BASIS_GATES:
            raise ValueError(f"QOC protocols exist for {BASIS_GATES}, not {self.gate!r}")
        if self.h.frame != "rwa":
            raise ValueError("QOC runs in the rotating frame")
        if len(self.angles) != N_ANGLES:
            raise ValueError(f"protocols use exactly {N_ANGLES} angle samples")

    @property
    def space(self) -> ParamSpace:
        if self.gate in AXIS_PHASE:
            b = dict(ROTATION_BOUNDS, **(self.bounds or {}))
            names = ("A_scale", "sigma", "duration")
            unit = np.ones(3)
        elif self.gate == "RZ":
            w = self.h.omega(0)
            b = {"duration_scale": (0.5 / w, 1.5 / w), **(self.bounds or {})}
            names = ("duration_scale",)
            unit = np.array([1 / w])
        else:
            t0 = np.pi / (2 * abs(self.h.J))
            b = {"duration": (0.5 * t0, 1.5 * t0), **(self.bounds or {})}
            names = ("duration",)
            unit = np.array([t0])
        lo = np.array([b[k][0] for k in names], dtype=float)
        hi = np.array([b[k][1] for k in names], dtype=float)
        if np.any(lo > hi) or (self.gate in AXIS_PHASE and lo[1] <= 0) or np.any(lo <= 0):
            raise ValueError("invalid parameter box")
        return ParamSpace(names, lo, hi, unit)

    def calibration(self, p) -> GateCalibration:
        params = self.space.to_dict(p)
        if self.gate in AXIS_PHASE:
            if self.envelope_kind == "drag":
                params["beta"] = self.beta
                params["nu"] = self.nu
            return GateCalibration(self.envelope_kind, params)
        return GateCalibration(None, params)

    def initial_states(self) -> np.ndarray:
        th = np.asarray(self.angles)
        if self.gate == "CZ":
            # ideal RY(theta) on the control, H on the target, from |00>
            ctrl = ry(th)[:, :, 0]  # (B, 2)
            tgt = HADAMARD[:, 0]
            return np.einsum("bi,j->bij", ctrl, tgt).reshape(len(th), 4)
        psi = np.zeros((len(th), 2), dtype=complex)
        psi[:, 0] = 1
        return psi

    def target_states(self) -> np.ndarray:
        th = np.asarray(self.angles)
        psi0 = self.initial_states()
        if self.gate == "CZ":
            return psi0 @ CZ_MATRIX.T
        u = {"RX": rx, "RY": ry, "RZ": rz}[self.gate](th)
        return np.einsum("bij,bj->bi", u, psi0)


# --------------------------------------------------------------------------
# pulse evolution with forward sensitivities
# --------------------------------------------------------------------------


def _rotation_states(proto: GateProtocol, p: np.ndarray, want_grad: bool):
    """States after the RX/RY pulse and their derivatives wrt (A_scale, sigma, duration).

    Solves ``i d/dt psi_b = a_b e(t) M psi_b`` for all angles at once,
    together with the sensitivity equations. Support edges of
    rectangle-type envelopes add jump terms; the window end adds
    ``-i H(T) psi(T)`` to the duration derivative.
    """
    a_scale, sigma, T = (float(v) for v in p)
    th = np.asarray(proto.angles)
    kind = proto.envelope_kind
    phi = AXIS_PHASE[proto.gate]
    M = 0.5 * (np.cos(phi) * PAULI["X"] + np.sin(phi) * PAULI["Y"])
    area = unit_area(kind, sigma)
    a = th * a_scale / area  # (B,)
    env = Envelope(kind, 1.0, sigma, T / 2, proto.beta, proto.nu)
    b = len(th)
    psi = np.zeros((b, 2), dtype=complex)
    psi[:, 0] = 1
    n_p = 3 if want_grad else 0
    sens = np.zeros((n_p, b, 2), dtype=complex)

    def pack(psi, sens):
        return np.concatenate([psi.ravel(), sens.ravel()])

    def unpack(y):
        return y[: 2 * b].reshape(b, 2), y[2 * b :].reshape(n_p, b, 2)

    mi = -1j * M.T
    a_rows = np.stack([a / a_scale, a, 0.5 * a])  # dH/dp per unit shape derivative

    def rhs(t, y):
        # with A = 1 the d/dA term is the envelope value itself
        e, e_s, e_c = envelope_derivatives(env, t)
        v = y.reshape(1 + n_p, b, 2) @ mi  # -i M applied to psi and every sensitivity
        out = (a * e)[None, :, None] * v
        if n_p:
            shape_d = np.array([e, e_s - e / sigma, e_c])
            out[1:] += (a_rows * shape_d[:, None])[:, :, None] * v[0][None]
        return out.ravel()

    pts = [0.0, T]
    edges = []
    height = 1.0 if kind == "rectangle" else 0.0  # envelope value at the support edge
    if env.has_support:
        lo, hi = env.support()
        for edge, d_sigma, sign in ((lo, -0.5, 1), (hi, 0.5, -1)):
            if 0 < edge < T:
                pts.append(edge)
                edges.append((edge, d_sigma, sign))
    pts = sorted(pts)
    y = pack(psi, sens)
    max_step = max(sigma / 2, 1e-3)
    for t0, t1 in zip(pts[:-1], pts[1:]):
        for edge, d_sigma, sign in edges:
            if abs(edge - t0) < 1e-15 and n_p:
                # sign = +1 entering the support (H jumps on), -1 leaving
                ps, ss = unpack(y)
                jump = -sign * height * a[:, None] * (ps @ M.T)  # H_left - H_right
                dbdp = np.array([0.0, d_sigma, 0.5])
                ss = ss + dbdp[:, None, None] * (-1j) * jump[None]
                y = pack(ps, ss)
        if t1 <= t0:
            continue
        sol = solve_ivp(rhs, (t0, t1), y, method="DOP853", rtol=proto.rtol, atol=proto.atol, max_step=max_step)
        if sol.status != 0:
            raise IntegrationError(f"{proto.gate} pulse integration failed: {sol.message}", float(sol.t[-1]))
        y = sol.y[:, -1]
    psi, sens = unpack(y)
    if n_p:
        e_end = float(np.asarray(env.value(T - 1e-15 if env.has_support else T)))
        sens = sens.copy()
        sens[2] += -1j * (a * e_end)[:, None] * (psi @ M.T)
    return psi, sens


def _free_states(proto: GateProtocol, p: np.ndarray, want_grad: bool):
    """RZ/CZ states by exact free evolution through the schedule engine."""
    th = np.asarray(proto.angles)
    psi0 = proto.initial_states()
    cal = proto.calibration(p)
    h = proto.h
    if proto.gate == "RZ":
        out = np.empty_like(psi0)
        for i, t in enumerate(th):
            spec = basis_pulse("RZ", (0,), t, cal, h)
            out[i] = evolve_array(Schedule(1, spec.segments), psi0[i : i + 1], h)[0]
        # d/d scale: duration_b = (theta_b mod 4pi) * scale, generator (omega/2) Z
        gen = 0.5 * h.omega(0) * z_diagonal((0,), 1)
        dur_factor = np.mod(th, 4 * np.pi)
        sens = (-1j * gen[None, :] * out * dur_factor[:, None])[None] if want_grad else None
        return out, sens
    h2 = h.with_qubits(2)
    spec = basis_pulse("CZ", (0, 1), None, cal, h2)
    from .pulse.schedule import VirtualPhase

    virtual = tuple(VirtualPhase(spec.free_evolution.duration, q, ph) for q, ph in spec.free_evolution.virtual_phases)
    sched = Schedule(2, spec.segments, virtual, spec.global_phase)
    out = evolve_array(sched, psi0, h2)
    gen = 0.5 * h.J * z_diagonal((0, 1), 2)
    sens = (-1j * gen[None, :] * out)[None] if want_grad else None  # diagonal, commutes with the phase corrections
    return out, sens


def protocol_states(proto: GateProtocol, p, want_grad: bool = False):
    p = np.asarray(p, dtype=float)
    if proto.gate in AXIS_PHASE:
        return _rotation_states(proto, p, want_grad)
    return _free_states(proto, p, want_grad)


# --------------------------------------------------------------------------
# cost and gradient
# --------------------------------------------------------------------------


@dataclass
class Evaluation:
    cost: float
    grad: np.ndarray | None
    overlaps: np.ndarray


def _penalties(proto: GateProtocol, p: np.ndarray):
    """(width, duration) penalty values and their parameter gradients."""
    names = proto.space.names
    n = len(names)
    g_w, g_d = np.zeros(n), np.zeros(n)
    if proto.gate in AXIS_PHASE:
        width, dur = p[1], p[2]
        g_w[1] = 1.0
        g_d[2] = 1.0
    elif proto.gate == "RZ":
        width = 0.0
        factor = float(np.mean(np.mod(np.asarray(proto.angles), 4 * np.pi)))
        dur = factor * p[0]
        g_d[0] = factor
    else:
        width, dur = 0.0, p[0]
        g_d[0] = 1.0
    return width, g_w, dur, g_d


def evaluate(proto: GateProtocol, p, spec: CostSpec = CostSpec(), want_grad: bool = True) -> Evaluation:
    """Mixed-objective cost over the protocol's angle samples.

    Per angle ``w_abs (1 - |z|^2) + w_phase (1 - cos arg z)`` with
    ``z = <target|pulse>``, averaged, plus ``w_width * sigma + w_dur * T``.
    """
    p = np.asarray(p, dtype=float)
    psi, sens = protocol_states(proto, p, want_grad)
    tgt = proto.target_states()
    z = np.einsum("bi,bi->b", tgt.conj(), psi)
    absz2 = np.abs(z) ** 2
    argz = np.angle(z)
    fid = spec.w_abs * (1 - absz2) + spec.w_phase * (1 - np.cos(argz))
    width, g_w, dur, g_d = _penalties(proto, p)
    cost = float(np.mean(fid) + spec.w_width * width + spec.w_dur * dur)
    grad = None
    if want_grad:
        dz = np.einsum("bi,kbi->kb", tgt.conj(), sens)
        safe = np.where(np.abs(z) > 1e-12, z, 1.0)
        d_abs = 2 * np.real(np.conj(z)[None] * dz)
        d_arg = np.where(np.abs(z) > 1e-12, np.imag(dz / safe[None]), 0.0)
        d_fid = -spec.w_abs * d_abs + spec.w_phase * np.sin(argz)[None] * d_arg
        grad = np.mean(d_fid, axis=1) + spec.w_width * g_w + spec.w_dur * g_d
    params = proto.space.to_dict(p)
    for _name, weight, fn in spec.custom_terms:
        val, dv = fn(params)
        cost += weight * float(val)
        if grad is not None:
            grad = grad + weight * np.array([dv.get(k, 0.0) for k in proto.space.names])
    if not np.isfinite(cost) or (grad is not None and not np.all(np.isfinite(grad))):
        raise FloatingPointError(f"non-finite cost at {params}")
    return Evaluation(cost, grad, z)


def cost(p, proto: GateProtocol, spec: CostSpec = CostSpec()) -> float:
    return evaluate(proto, p, spec, want_grad=False).cost


def gradient(p, proto: GateProtocol, spec: CostSpec = CostSpec()) -> np.ndarray:
    return evaluate(proto, p, spec, want_grad=True).grad


def gate_metrics(z: np.ndarray) -> dict:
    d_abs = np.clip(1 - np.abs(z) ** 2, 0.0, None)
    d_phase = np.abs(np.angle(z))
    return {
        "d_abs_mean": float(np.mean(d_abs)),
        "d_abs_std": float(np.std(d_abs)),
        "d_phase_mean": float(np.mean(d_phase)),
        "d_phase_std": float(np.std(d_phase)),
    }


# --------------------------------------------------------------------------
# optimizers
# --------------------------------------------------------------------------


@dataclass
class Trace:
    costs: list = field(default_factory=list)
    best_cost: float = np.inf
    best_params: np.ndarray | None = None
    final_cost: float = np.inf
    diverged: bool = False


def adam_run(
    proto: GateProtocol,
    spec: CostSpec,
    p0: np.ndarray,
    steps: int,
    lr: Callable[[int], float],
    opt: OptimizerConfig,
) -> Trace:
    """Projected AdamW in the protocol's normalized coordinates.

    Every evaluated point is a candidate; the best one is kept.
    """
    space = proto.space
    u = np.asarray(p0, dtype=float) / space.unit
    lo, hi = space.lower / space.unit, space.upper / space.unit
    m = np.zeros_like(u)
    v = np.zeros_like(u)
    tr = Trace()
    for t in range(steps + 1):
        p = u * space.unit
        try:
            ev = evaluate(proto, p, spec)
        except (FloatingPointError, IntegrationError):
            tr.diverged = True
            break
        tr.costs.append(ev.cost)
        tr.final_cost = ev.cost
        if ev.cost < tr.best_cost:
            tr.best_cost, tr.best_params = ev.cost, p.copy()
        if t == steps:
            break
        g = ev.grad * space.unit
        m = opt.beta1 * m + (1 - opt.beta1) * g
        v = opt.beta2 * v + (1 - opt.beta2) * g**2
        mh = m / (1 - opt.beta1 ** (t + 1))
        vh = v / (1 - opt.beta2 ** (t + 1))
        step = lr(t + 1)
        u = u - step * (mh / (np.sqrt(vh) + opt.eps) + opt.weight_decay * u)
        u = np.clip(u, lo, hi)
    return tr


def grid_scan(proto: GateProtocol, spec: CostSpec, stage: StageConfig, opt: OptimizerConfig = OptimizerConfig()) -> tuple[np.ndarray, float]:
    """Stage 1: refine every grid point with a few Adam steps and keep the best."""
    grid = proto.space.grid(stage.grid_points_per_param)
    if not grid:
        raise ValueError("empty grid")
    best = (np.inf, -1, None)
    for i, p0 in enumerate(grid):
        tr = adam_run(proto, spec, p0, stage.refine_steps, lambda _t: opt.base_lr, opt)
        if tr.best_params is not None and (tr.best_cost, i) < best[:2]:
            best = (tr.best_cost, i, tr.best_params)
    if best[2] is None:
        raise FloatingPointError("every grid candidate diverged")
    return best[2], best[0]


@dataclass
class GateResult:
    gate: str
    params: dict
    cost: float
    metrics: dict
    restart_costs: list
    restart_final_costs: list
    grid_cost: float
    calibration: GateCalibration


def optimize_gate(
    proto: GateProtocol,
    spec: CostSpec = CostSpec(),
    opt: OptimizerConfig = OptimizerConfig(),
    stage: StageConfig = StageConfig(),
    seed: int = 0,
) -> GateResult:
    """Grid scan, then ``n_restarts`` scheduled AdamW runs; the best point wins.

    Restart 0 starts at the grid winner, later ones at the winner plus
    Gaussian noise (in normalized units) from their own random streams.
    """
    space = proto.space
    start, grid_cost = grid_scan(proto, spec, stage, opt)
    best = (np.inf, -1, None)
    best_costs, final_costs = [], []
    for r in range(stage.n_restarts):
        p0 = start.copy()
        if r > 0:
            rng = make_rng(seed, "qoc", proto.gate, "restart", r)
            p0 = space.clip(p0 + rng.normal(0.0, stage.perturb_sigma, size=p0.shape) * space.unit)
        tr = adam_run(proto, spec, p0, opt.total_steps, opt.lr, opt)
        best_costs.append(float(tr.best_cost))
        final_costs.append(float(tr.final_cost))
        if tr.best_params is not None and (tr.best_cost, r) < best[:2]:
            best = (tr.best_cost, r, tr.best_params)
    if best[2] is None:
        raise FloatingPointError(f"all restarts diverged for {proto.gate}: {best_costs}")
    p = best[2]
    ev = evaluate(proto, p, spec, want_grad=False)
    metrics = gate_metrics(ev.overlaps)
    cal = proto.calibration(p)
    cal = GateCalibration(cal.envelope_kind, cal.params, metrics)
    return GateResult(proto.gate, space.to_dict(p), float(best[0]), metrics, best_costs, final_costs, float(grid_cost), cal)


def config_hash(*configs) -> str:
    payload = json.dumps([asdict(c) if hasattr(c, "__dataclass_fields__") else c for c in configs], sort_keys=True, default=str)
    return hashlib.sha256(payload.encode()).hexdigest()[:16]


def calibrate(
    gates: Sequence[str] = BASIS_GATES,
    h: HamiltonianSpec | None = None,
    spec: CostSpec = CostSpec(),
    opt: OptimizerConfig = OptimizerConfig(),
    stage: StageConfig = StageConfig(),
    seed: int = 0,
    envelope_kind: str = "gaussian",
) -> tuple[CalibrationResult, dict[str, GateResult]]:
    h = h or HamiltonianSpec()
    results = {}
    for g in gates:
        proto = GateProtocol(g, h, envelope_kind)
        results[g] = optimize_gate(proto, spec, opt, stage, seed)
    cal = CalibrationResult(
        HamiltonianSpec(1, h.omega_q, h.J, h.frame),
        {g: r.calibration for g, r in results.items()},
        seed,
        config_hash(spec if not spec.custom_terms else "custom", opt, stage, h.to_dict(), envelope_kind),
    )
    return cal, results


def evaluate_calibration(calibration: CalibrationResult, gates: Sequence[str] = BASIS_GATES) -> dict:
    """Table-style report: per gate, mean/std of 1-|z|^2 and |arg z| over the sweep.

    States are produced by the general schedule evolution, independent of
    the optimizer's sensitivity integrator.
    """
    report = {}
    h = calibration.hamiltonian
    for g in gates:
        cal = calibration[g]
        proto = GateProtocol(g, h, cal.envelope_kind or "gaussian")
        psi0 = proto.initial_states()
        n = 2 if g == "CZ" else 1
        hn = h.with_qubits(n)
        out = np.empty_like(psi0)
        for i, th in enumerate(proto.angles):
            spec = basis_pulse(g, (0, 1) if g == "CZ" else (0,), None if g == "CZ" else th, cal, hn)
            from .pulse.schedule import VirtualPhase

            fe = spec.free_evolution
            virtual = tuple(VirtualPhase(fe.duration, q, ph) for q, ph in fe.virtual_phases) if fe else ()
            out[i] = evolve_array(Schedule(n, spec.segments, virtual, spec.global_phase), psi0[i : i + 1], hn)[0]
        z = np.einsum("bi,bi->b", proto.target_states().conj(), out)
        report[g] = gate_metrics(z)
    return report
