"""Pulse-level gate realizations and circuit-to-schedule compilation."""

from __future__ import annotations

import json
from dataclasses import dataclass, field, replace
from typing import Sequence

import numpy as np

from ..core import Operation
from .calibration import CalibrationResult, GateCalibration, UncalibratedGateError
from .envelopes import Envelope, unit_area
from .graph import DEFAULT_GRAPH, PulseGraph, expand_composed
from .hamiltonian import Carrier, HamiltonianSpec

# carrier phase per drive axis; with H = (E/2)(cos phi X + sin phi Y) this
# gives exactly exp(-i theta A / 2)
AXIS_PHASE = {"RX": 0.0, "RY": np.pi / 2}
SEGMENT_KINDS = ("drive", "free_z", "zz")


@dataclass(frozen=True)
class Segment:
    """One control window.

    ``drive`` carries an envelope and carrier; ``free_z`` switches on the
    qubit's ``(omega_q/2) Z`` term; ``zz`` switches on the pair coupling.
    """

    channel: tuple[int, ...]
    kind: str
    t_start: float
    t_end: float
    envelope: Envelope | None = None
    carrier: Carrier | None = None
    gate: str | None = None

    def __post_init__(self):
        if self.kind not in SEGMENT_KINDS:
            raise ValueError(f"unknown segment kind {self.kind!r}")
        if self.t_end < self.t_start:
            raise ValueError("segment ends before it starts")

    @property
    def duration(self) -> float:
        return self.t_end - self.t_start

    def shifted(self, dt: float) -> "Segment":
        env = self.envelope.shifted(dt) if self.envelope is not None else None
        return replace(self, t_start=self.t_start + dt, t_end=self.t_end + dt, envelope=env)

    def to_dict(self) -> dict:
        d = {
            "channel": "-".join(f"q{c}" for c in self.channel),
            "kind": self.envelope.kind if self.envelope is not None else self.kind,
            "params": self.envelope.to_dict() if self.envelope is not None else {},
            "t_start": self.t_start,
            "t_end": self.t_end,
            "carrier": self.carrier.to_dict() if self.carrier is not None else None,
        }
        if self.gate is not None:
            d["gate"] = self.gate
        return d


@dataclass(frozen=True)
class VirtualPhase:
    """Instantaneous (exact) ``RZ(phi)`` applied at time ``t``."""

    t: float
    qubit: int
    phi: float

    def to_dict(self) -> dict:
        return {"t": self.t, "qubit": self.qubit, "phi": self.phi}


@dataclass(frozen=True)
class FreeEvolution:
    duration: float
    virtual_phases: tuple[tuple[int, float], ...] = ()


@dataclass(frozen=True)
class PulseGateSpec:
    """Gate realization in local time ``[0, duration]``."""

    gate: str
    wires: tuple[int, ...]
    segments: tuple[Segment, ...] = ()
    free_evolution: FreeEvolution | None = None
    global_phase: float = 0.0

    @property
    def duration(self) -> float:
        ends = [s.t_end for s in self.segments]
        if self.free_evolution is not None:
            ends.append(self.free_evolution.duration)
        return max(ends, default=0.0)


@dataclass(frozen=True)
class Schedule:
    n_qubits: int
    segments: tuple[Segment, ...] = ()
    virtual: tuple[VirtualPhase, ...] = ()
    global_phase: float = 0.0
    duration: float | None = None

    def __post_init__(self):
        end = max((s.t_end for s in self.segments), default=0.0)
        end = max([end] + [v.t for v in self.virtual])
        if self.duration is None:
            object.__setattr__(self, "duration", float(end))
        elif self.duration < end - 1e-12:
            raise ValueError("schedule duration shorter than its last segment")
        for s in self.segments:
            if any(not 0 <= c < self.n_qubits for c in s.channel):
                raise ValueError(f"segment channel {s.channel} out of range")

    def channel_segments(self, q: int) -> list[Segment]:
        return sorted((s for s in self.segments if q in s.channel), key=lambda s: s.t_start)

    def overlaps(self) -> bool:
        for q in range(self.n_qubits):
            segs = self.channel_segments(q)
            for a, b in zip(segs, segs[1:]):
                if b.t_start < a.t_end - 1e-12:
                    return True
        return False

    def total_width(self) -> float:
        return sum(s.envelope.sigma for s in self.segments if s.envelope is not None)

    def virtual_totals(self) -> dict[int, float]:
        out = {q: 0.0 for q in range(self.n_qubits)}
        for v in self.virtual:
            out[v.qubit] += v.phi
        return out

    def to_dict(self) -> dict:
        return {
            "duration": self.duration,
            "n_qubits": self.n_qubits,
            "segments": [s.to_dict() for s in self.segments],
            "virtual_phases": [v.to_dict() for v in self.virtual],
            "virtual_totals": {f"q{q}": p for q, p in self.virtual_totals().items()},
            "global_phase": self.global_phase,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)


# --------------------------------------------------------------------------
# basis gates
# --------------------------------------------------------------------------


def rotation_gate(name: str, theta: float, qubit: int, cal: GateCalibration, h: HamiltonianSpec) -> PulseGateSpec:
    """RX/RY as one resonant pulse whose amplitude is linear in ``theta``."""
    p = cal.params
    kind = cal.envelope_kind or "gaussian"
    sigma, T = float(p["sigma"]), float(p["duration"])
    amp = theta * float(p["A_scale"]) / unit_area(kind, sigma)
    env = Envelope(kind, amp, sigma, T / 2, float(p.get("beta", 0.0)), float(p.get("nu", 1.0)))
    seg = Segment((qubit,), "drive", 0.0, T, env, Carrier(h.omega(qubit), AXIS_PHASE[name]), name)
    return PulseGateSpec(name, (qubit,), (seg,))


def free_evolution_gate(kind: str, h: HamiltonianSpec, theta: float | None = None, wires=(0, 1), cal: GateCalibration | None = None) -> PulseGateSpec:
    """RZ(theta) or CZ realized without any drive.

    RZ evolves under ``(omega_q/2) Z`` for ``(theta mod 4 pi) * duration_scale``
    (nominally ``1/omega_q``). CZ evolves under ``(J/2) Z Z`` for
    ``duration`` (nominally ``pi/(2J)``) followed by virtual ``RZ(-pi/2)``
    on both qubits; this equals ``diag(1, 1, 1, -1)`` times ``e^{i pi/4}``,
    which ``global_phase`` removes.
    """
    if kind == "RZ":
        q = wires[0]
        if h.omega(q) <= 0:
            raise ValueError("RZ by free evolution needs omega_q > 0")
        scale = float(cal.params["duration_scale"]) if cal is not None else 1.0 / h.omega(q)
        t = float(np.mod(theta, 4 * np.pi)) * scale
        segs = (Segment((q,), "free_z", 0.0, t, gate="RZ"),) if t > 0 else ()
        return PulseGateSpec("RZ", (q,), segs, FreeEvolution(t))
    if kind == "CZ":
        if h.J == 0:
            raise ValueError("CZ by free evolution needs a nonzero coupling J")
        a, b = wires
        t = float(cal.params["duration"]) if cal is not None else np.pi / (2 * abs(h.J))
        phase = -np.pi / 2 if h.J > 0 else np.pi / 2
        seg = Segment((a, b), "zz", 0.0, t, gate="CZ")
        return PulseGateSpec("CZ", (a, b), (seg,), FreeEvolution(t, ((a, phase), (b, phase))), -np.sign(h.J) * np.pi / 4)
    raise ValueError(f"free evolution realizes RZ or CZ, not {kind!r}")


def basis_pulse(name: str, wires, theta, cal: GateCalibration, h: HamiltonianSpec) -> PulseGateSpec:
    if name in AXIS_PHASE:
        return rotation_gate(name, float(theta), wires[0], cal, h)
    if name == "RZ":
        return free_evolution_gate("RZ", h, float(theta), wires, cal)
    if name == "CZ":
        return free_evolution_gate("CZ", h, None, wires, cal)
    raise ValueError(f"{name!r} is not a basis gate")


# --------------------------------------------------------------------------
# circuits
# --------------------------------------------------------------------------


def _resolve(block: str, leaf_gate: str, calibration: CalibrationResult, overrides) -> GateCalibration:
    if overrides and block in overrides:
        o = overrides[block]
        return o if isinstance(o, GateCalibration) else GateCalibration(calibration[leaf_gate].envelope_kind, dict(o))
    return calibration[leaf_gate]


@dataclass
class _Builder:
    n: int
    h: HamiltonianSpec
    segments: list = field(default_factory=list)
    virtual: list = field(default_factory=list)
    phase: float = 0.0

    def __post_init__(self):
        self.ready = [0.0] * self.n

    def place(self, spec: PulseGateSpec):
        t0 = max(self.ready[w] for w in spec.wires)
        for s in spec.segments:
            if s.duration > 0:
                self.segments.append(s.shifted(t0))
        if spec.free_evolution is not None:
            for q, phi in spec.free_evolution.virtual_phases:
                self.virtual.append(VirtualPhase(t0 + spec.free_evolution.duration, q, phi))
        self.phase += spec.global_phase
        end = t0 + spec.duration
        for w in spec.wires:
            self.ready[w] = end


def schedule_circuit(
    ops: Sequence[Operation],
    n_qubits: int,
    calibration: CalibrationResult,
    binding: str = "shared",
    overrides: dict | None = None,
    graph: PulseGraph = DEFAULT_GRAPH,
    h: HamiltonianSpec | None = None,
) -> Schedule:
    """As-soon-as-possible layout: each gate starts once all its wires are free.

    ``overrides`` maps a binding block (a basis-gate name for ``shared``,
    the per-instance key for ``expanded``) to replacement parameters.
    """
    h = (h or calibration.hamiltonian).with_qubits(n_qubits)
    b = _Builder(n_qubits, h)
    for i, op in enumerate(ops):
        if any(not 0 <= w < n_qubits for w in op.wires):
            raise ValueError(f"gate {op.name} wires {op.wires} out of range")
        if op.name not in graph:
            raise UncalibratedGateError(f"gate {op.name!r} has no pulse realization")
        param = None if op.param is None else float(np.asarray(op.param))
        expansion = expand_composed(op.name, graph, binding, op.wires, param)
        for leaf, block in zip(expansion.leaves, expansion.blocks):
            key = block if binding == "shared" else f"{i}:{block}"
            cal = _resolve(key, leaf.gate, calibration, overrides)
            b.place(basis_pulse(leaf.gate, leaf.wires, leaf.param, cal, h))
    segs = tuple(sorted(b.segments, key=lambda s: (s.t_start, s.channel)))
    return Schedule(n_qubits, segs, tuple(b.virtual), b.phase)


def non_basis_count(ops: Sequence[Operation]) -> int:
    from .graph import BASIS_GATES

    return sum(1 for op in ops if op.name not in BASIS_GATES)
