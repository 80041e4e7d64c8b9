"""Circuit and model execution at pulse level."""

from __future__ import annotations

from typing import Sequence

import numpy as np

from ..core import Operation, run_statevector
from .calibration import CalibrationResult
from .evolve import ATOL, RTOL, evolve_array
from .schedule import schedule_circuit


def pulse_state(ops: Sequence[Operation], n: int, calibration: CalibrationResult, binding: str = "shared", rtol: float = RTOL, atol: float = ATOL) -> np.ndarray:
    """Final state of ``ops`` on ``|0..0>`` simulated through its pulse schedule."""
    sched = schedule_circuit(ops, n, calibration, binding)
    psi0 = np.zeros((1, 2**n), dtype=complex)
    psi0[0, 0] = 1
    return evolve_array(sched, psi0, calibration.hamiltonian.with_qubits(n), rtol, atol)[0]


def circuit_infidelity(ops: Sequence[Operation], n: int, calibration: CalibrationResult, binding: str = "shared", rtol: float = RTOL, atol: float = ATOL) -> float:
    """``1 - |<psi_unitary|psi_pulse>|^2`` starting from ``|0..0>``."""
    ideal = run_statevector(ops, n)[0]
    pulsed = pulse_state(ops, n, calibration, binding, rtol, atol)
    return float(max(0.0, 1 - abs(np.vdot(ideal, pulsed)) ** 2))


def pulse_batch_forward(model, X: np.ndarray, thetas: np.ndarray, req) -> np.ndarray:
    """Model evaluation where every circuit runs through its pulse schedule."""
    from ..core import expval_batch
    from ..model import _marginal
    from ..core import make_rng, sample_outcomes

    if req.noisy:
        raise ValueError("pulse-level execution does not model depolarizing noise")
    cal = req.calibration
    if not isinstance(cal, CalibrationResult):
        cal = CalibrationResult.from_dict(cal) if isinstance(cal, dict) else CalibrationResult.load(cal)
    n = model.n_qubits
    m, p = X.shape[0], thetas.shape[0]
    states = np.empty((m, p, 2**n), dtype=complex)
    for i in range(m):
        for j in range(p):
            states[i, j] = pulse_state(model.circuit(X[i], thetas[j]), n, cal)
    flat = states.reshape(m * p, 2**n)
    if req.mode == "state":
        out = flat
    elif req.mode == "density":
        out = np.einsum("bi,bj->bij", flat, flat.conj())
    elif req.mode == "expval":
        out = expval_batch(flat, model.observable, n)
    else:
        probs = _marginal(np.abs(flat) ** 2, req.qubits, n)
        if req.shots is not None:
            for k in range(m * p):
                rng = make_rng(req.seed, "shots", *divmod(k, p))
                probs[k] = sample_outcomes(probs[k] / probs[k].sum(), req.shots, rng) / req.shots
        out = probs
    return out.reshape((m, p) + out.shape[1:])
