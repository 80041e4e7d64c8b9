"""Time evolution of schedules under the Schrödinger equation."""

from __future__ import annotations

import numpy as np
from scipy.integrate import solve_ivp

from ..core import StateVector
from .envelopes import envelope_value
from .hamiltonian import HamiltonianSpec, drive_operator, z_diagonal
from .schedule import Schedule

RTOL = 1e-10
ATOL = 1e-10


class IntegrationError(RuntimeError):
    def __init__(self, message: str, t: float | None = None):
        super().__init__(message if t is None else f"{message} (at t = {t:.6g})")
        self.t = t


def breakpoints(schedule: Schedule) -> np.ndarray:
    """Every time at which the Hamiltonian may change discontinuously."""
    pts = {0.0, float(schedule.duration)}
    for s in schedule.segments:
        pts.update((s.t_start, s.t_end))
        if s.envelope is not None and s.envelope.has_support:
            for p in s.envelope.support():
                if s.t_start < p < s.t_end:
                    pts.add(float(p))
    pts.update(v.t for v in schedule.virtual)
    return np.array(sorted(pts))


def _static_diagonal(active, h: HamiltonianSpec, n: int) -> np.ndarray:
    d = np.zeros(2**n)
    if h.frame == "lab":
        for q in range(n):
            d += 0.5 * h.omega(q) * z_diagonal((q,), n)
    for s in active:
        if s.kind == "free_z" and h.frame == "rwa":
            q = s.channel[0]
            d += 0.5 * h.omega(q) * z_diagonal((q,), n)
        elif s.kind == "zz":
            d += 0.5 * h.J * z_diagonal(s.channel, n)
    return d


def _rz_diagonal(q: int, phi: float, n: int) -> np.ndarray:
    return np.exp(-0.5j * phi * z_diagonal((q,), n))


def _drive_terms(drives, h: HamiltonianSpec, n: int):
    terms = []
    for s in drives:
        q = s.channel[0]
        m = drive_operator(q, s.carrier.phi, n, h.frame)
        terms.append((s.envelope, s.carrier, m))
    return terms


def _coefficient(env, carrier, t, frame):
    e = envelope_value(env, t)
    if frame == "lab":
        return e * np.cos(carrier.omega * t + carrier.phi)
    return e


def evolve_array(schedule: Schedule, psi: np.ndarray, h: HamiltonianSpec, rtol: float = RTOL, atol: float = ATOL, norm_tol: float | None = None) -> np.ndarray:
    """Evolve a batch of states ``psi`` (B, 2^n) through ``schedule``.

    Windows without drives are propagated exactly (the static Hamiltonian
    is diagonal); driven windows are integrated with DOP853. Virtual
    phases are exact instantaneous Z rotations.
    """
    if rtol <= 0 or atol <= 0:
        raise ValueError("rtol and atol must be positive")
    n = schedule.n_qubits
    h = h.with_qubits(n) if h.n_qubits != n else h
    y = np.array(psi, dtype=complex).reshape(-1, 2**n).T.copy()  # (2^n, B)
    b = y.shape[1]
    norm0 = np.linalg.norm(y, axis=0)
    events = sorted(schedule.virtual, key=lambda v: v.t)
    ev = 0
    pts = breakpoints(schedule)
    for t0, t1 in zip(pts[:-1], pts[1:]):
        while ev < len(events) and events[ev].t <= t0 + 1e-15:
            y = _rz_diagonal(events[ev].qubit, events[ev].phi, n)[:, None] * y
            ev += 1
        if t1 - t0 <= 0:
            continue
        mid = 0.5 * (t0 + t1)
        active = [s for s in schedule.segments if s.t_start <= mid <= s.t_end]
        diag = _static_diagonal(active, h, n)
        drives = [s for s in active if s.kind == "drive"]
        if not drives:
            y = np.exp(-1j * diag * (t1 - t0))[:, None] * y
            continue
        terms = _drive_terms(drives, h, n)
        frame = h.frame

        def rhs(t, flat, terms=terms, diag=diag):
            Y = flat.reshape(2**n, b)
            out = diag[:, None] * Y
            for env, car, m in terms:
                out = out + _coefficient(env, car, t, frame) * (m @ Y)
            return (-1j * out).ravel()

        max_step = min(min(s.envelope.sigma for s in drives) / 2, t1 - t0)
        if frame == "lab":
            max_step = min(max_step, 0.5 / max(s.carrier.omega for s in drives if s.carrier))
        sol = solve_ivp(rhs, (t0, t1), y.ravel(), method="DOP853", rtol=rtol, atol=atol, max_step=max_step)
        if sol.status != 0:
            raise IntegrationError(f"integration failed: {sol.message}", float(sol.t[-1]))
        y = sol.y[:, -1].reshape(2**n, b)
    while ev < len(events):
        y = _rz_diagonal(events[ev].qubit, events[ev].phi, n)[:, None] * y
        ev += 1
    y = y * np.exp(1j * schedule.global_phase)
    drift = np.max(np.abs(np.linalg.norm(y, axis=0) - norm0))
    tol = norm_tol if norm_tol is not None else max(1e-6, 10 * atol)
    if drift > tol:
        raise IntegrationError(f"norm drift {drift:.3g} exceeds {tol:.3g}", float(schedule.duration))
    return y.T


def evolve_schedule(schedule: Schedule, psi0: StateVector, h: HamiltonianSpec, rtol: float = RTOL, atol: float = ATOL) -> StateVector:
    """Solve ``i d/dt psi = H(t) psi`` over ``[0, schedule.duration]``."""
    if psi0.n_qubits != schedule.n_qubits:
        raise ValueError("state and schedule qubit counts differ")
    out = evolve_array(schedule, psi0.amplitudes[None], h, rtol, atol)
    return StateVector(schedule.n_qubits, out[0])


def lab_to_rotating(psi: np.ndarray, t: float, h: HamiltonianSpec) -> np.ndarray:
    """Undo the static ``(omega_q/2) Z`` rotation accumulated over ``t``."""
    psi = np.asarray(psi, dtype=complex)
    n = h.n_qubits
    d = np.zeros(2**n)
    for q in range(n):
        d += 0.5 * h.omega(q) * z_diagonal((q,), n)
    return psi * np.exp(1j * d * t)
