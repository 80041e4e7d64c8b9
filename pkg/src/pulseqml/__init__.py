"""Quantum Fourier models at gate and pulse level."""

__version__ = "0.1.0"
