"""Per-gate pulse parameters (the calibration file)."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy.integrate import quad

from .envelopes import Envelope, unit_area
from .hamiltonian import HamiltonianSpec

SCHEMA_VERSION = "1.0"

# default box for rotation pulses; the CZ and RZ boxes depend on J and omega_q
ROTATION_BOUNDS = {"A_scale": (0.5, 1.5), "sigma": (0.2, 1.0), "duration": (1.0, 5.0)}


class UncalibratedGateError(KeyError):
    pass


@dataclass(frozen=True)
class GateCalibration:
    envelope_kind: str | None
    params: dict
    metrics: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        d = {"params": {k: float(v) for k, v in self.params.items()}}
        if self.envelope_kind is not None:
            d["envelope_kind"] = self.envelope_kind
        if self.metrics:
            d["metrics"] = {k: float(v) for k, v in self.metrics.items()}
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "GateCalibration":
        return cls(d.get("envelope_kind"), dict(d["params"]), dict(d.get("metrics", {})))


@dataclass(frozen=True)
class CalibrationResult:
    hamiltonian: HamiltonianSpec
    gates: dict[str, GateCalibration]
    seed: int | None = None
    config_hash: str | None = None

    def __getitem__(self, gate: str) -> GateCalibration:
        try:
            return self.gates[gate]
        except KeyError:
            raise UncalibratedGateError(f"no calibration for gate {gate!r}") from None

    def to_dict(self) -> dict:
        d = {
            "schema_version": SCHEMA_VERSION,
            "hamiltonian": self.hamiltonian.to_dict(),
            "gates": {g: c.to_dict() for g, c in sorted(self.gates.items())},
            "seed": self.seed,
        }
        if self.config_hash is not None:
            d["config_hash"] = self.config_hash
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "CalibrationResult":
        h = HamiltonianSpec.from_dict(d.get("hamiltonian", {}))
        gates = {g: GateCalibration.from_dict(c) for g, c in d["gates"].items()}
        return cls(h, gates, d.get("seed"), d.get("config_hash"))

    def save(self, path) -> None:
        Path(path).write_text(json.dumps(self.to_dict(), indent=2, sort_keys=True))

    @classmethod
    def load(cls, path) -> "CalibrationResult":
        return cls.from_dict(json.loads(Path(path).read_text()))


def window_area_fraction(kind: str, sigma: float, duration: float, beta: float = 0.0, nu: float = 1.0) -> float:
    """Share of the envelope's full area that falls inside ``[0, duration]``."""
    env = Envelope(kind, 1.0, sigma, duration / 2, beta, nu)
    points = [p for p in env.support() if 0 < p < duration] if env.has_support else None
    val, _ = quad(env.value, 0.0, duration, points=points, epsabs=1e-14, epsrel=1e-13, limit=200)
    return val / unit_area(kind, sigma)


def nominal_calibration(h: HamiltonianSpec | None = None, kind: str = "gaussian", sigma: float = 0.2, duration: float = 1.0, beta: float = 0.0) -> CalibrationResult:
    """Calibration built from the area theorem alone (no optimization).

    The amplitude scale compensates the envelope area cut off by the finite
    window, so in the rotating frame the rotation angle is exact.
    """
    h = h or HamiltonianSpec()
    a_scale = 1.0 / window_area_fraction(kind, sigma, duration, beta)
    rot = {"A_scale": a_scale, "sigma": sigma, "duration": duration}
    if kind == "drag":
        rot["beta"] = beta
    gates = {
        "RX": GateCalibration(kind, dict(rot)),
        "RY": GateCalibration(kind, dict(rot)),
        "RZ": GateCalibration(None, {"duration_scale": 1.0 / h.omega(0)}),
        "CZ": GateCalibration(None, {"duration": np.pi / (2 * h.J)}),
    }
    return CalibrationResult(h, gates)
