"""Static and drive Hamiltonian terms."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..core import PAULI, GateMatrix, embed

DEFAULT_OMEGA_Q = 10 * np.pi
DEFAULT_J = np.pi
FRAMES = ("rwa", "lab")


@dataclass(frozen=True)
class Carrier:
    omega: float
    phi: float = 0.0

    def __post_init__(self):
        if self.omega < 0:
            raise ValueError(f"carrier frequency must be >= 0, got {self.omega}")

    def to_dict(self) -> dict:
        return {"omega": self.omega, "phi": self.phi}


@dataclass(frozen=True)
class HamiltonianSpec:
    """Qubit frequencies, ZZ coupling strength and simulation frame.

    In the ``rwa`` frame the drive on qubit ``q`` is ``(E/2)(cos phi X + sin phi Y)``
    and the ``(omega_q/2) Z`` term is only switched on inside RZ windows. In
    the ``lab`` frame the static term is always on and the drive is
    ``E cos(omega_c t + phi) X``. The ``(J/2) Z Z`` coupling is active only
    inside CZ windows in both frames.
    """

    n_qubits: int = 1
    omega_q: float | tuple[float, ...] = DEFAULT_OMEGA_Q
    J: float = DEFAULT_J
    frame: str = "rwa"

    def __post_init__(self):
        if self.frame not in FRAMES:
            raise ValueError(f"frame must be one of {FRAMES}, got {self.frame!r}")
        w = self.omega_q
        if not np.isscalar(w) and len(w) != self.n_qubits:
            raise ValueError("omega_q needs one value per qubit")

    def omega(self, q: int) -> float:
        w = self.omega_q
        return float(w) if np.isscalar(w) else float(w[q])

    def with_qubits(self, n: int) -> "HamiltonianSpec":
        w = self.omega_q if np.isscalar(self.omega_q) else tuple(self.omega_q)[:n]
        return HamiltonianSpec(n, w, self.J, self.frame)

    def to_dict(self) -> dict:
        w = self.omega_q if np.isscalar(self.omega_q) else list(self.omega_q)
        return {"omega_q": float(w) if np.isscalar(w) else w, "J": self.J, "frame": self.frame}

    @classmethod
    def from_dict(cls, d: dict, n_qubits: int = 1) -> "HamiltonianSpec":
        w = d.get("omega_q", DEFAULT_OMEGA_Q)
        return cls(n_qubits, w if np.isscalar(w) else tuple(w), d.get("J", DEFAULT_J), d.get("frame", "rwa"))


def local_operator(matrix: np.ndarray, wires, n: int) -> np.ndarray:
    return embed(GateMatrix(tuple(wires), matrix), n)


def z_diagonal(wires, n: int) -> np.ndarray:
    """Diagonal of ``Z_w1 Z_w2 ...`` on ``n`` qubits."""
    idx = np.arange(2**n)
    out = np.ones(2**n)
    for w in wires:
        out = out * (1 - 2 * ((idx >> (n - 1 - w)) & 1))
    return out


def drive_operator(q: int, phi: float, n: int, frame: str) -> np.ndarray:
    if frame == "rwa":
        m = 0.5 * (np.cos(phi) * PAULI["X"] + np.sin(phi) * PAULI["Y"])
    else:
        m = PAULI["X"]
    return local_operator(m, (q,), n)
