"""Pulse-level gate realization and simulation."""

from .calibration import CalibrationResult, GateCalibration, UncalibratedGateError, nominal_calibration, window_area_fraction
from .envelopes import KINDS, Envelope, envelope_derivatives, envelope_value, unit_area
from .evolve import IntegrationError, breakpoints, evolve_array, evolve_schedule, lab_to_rotating
from .graph import BASIS_GATES, DEFAULT_GRAPH, LEAF_PARAMS, PulseGraph, expand_composed, pulse_param_count
from .hamiltonian import Carrier, HamiltonianSpec
from .schedule import PulseGateSpec, Schedule, Segment, VirtualPhase, basis_pulse, free_evolution_gate, non_basis_count, rotation_gate, schedule_circuit
from .simulate import circuit_infidelity, pulse_state

__all__ = [
    "BASIS_GATES", "CalibrationResult", "Carrier", "DEFAULT_GRAPH", "Envelope", "GateCalibration",
    "HamiltonianSpec", "IntegrationError", "KINDS", "LEAF_PARAMS", "PulseGateSpec", "PulseGraph",
    "Schedule", "Segment", "UncalibratedGateError", "VirtualPhase", "basis_pulse", "breakpoints", "circuit_infidelity",
    "envelope_derivatives", "envelope_value", "evolve_array", "evolve_schedule", "expand_composed",
    "free_evolution_gate", "lab_to_rotating", "nominal_calibration", "non_basis_count", "pulse_param_count",
    "pulse_state", "rotation_gate", "schedule_circuit", "unit_area", "window_area_fraction",
]  # fmt: skip
