"""Pulse envelope shapes with analytic parameter derivatives."""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

KINDS = ("gaussian", "rectangle", "raised_cosine", "drag", "hyperbolic_secant")
SQRT_2PI = np.sqrt(2 * np.pi)


@dataclass(frozen=True)
class Envelope:
    """``A * shape((t - t_c) / sigma)``; ``beta`` and ``nu`` only matter for DRAG."""

    kind: str = "gaussian"
    A: float = 1.0
    sigma: float = 1.0
    t_c: float = 0.0
    beta: float = 0.0
    nu: float = 1.0

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown envelope kind {self.kind!r}; expected one of {KINDS}")
        if not self.sigma > 0:
            raise ValueError(f"sigma must be positive, got {self.sigma}")

    def shifted(self, dt: float) -> "Envelope":
        return replace(self, t_c=self.t_c + dt)

    def scaled(self, amplitude: float) -> "Envelope":
        return replace(self, A=amplitude)

    @property
    def has_support(self) -> bool:
        return self.kind in ("rectangle", "raised_cosine")

    def support(self) -> tuple[float, float]:
        if self.has_support:
            return (self.t_c - self.sigma / 2, self.t_c + self.sigma / 2)
        return (-np.inf, np.inf)

    def value(self, t):
        return envelope_value(self, t)

    def to_dict(self) -> dict:
        d = {"A": self.A, "sigma": self.sigma, "t_c": self.t_c}
        if self.kind == "drag":
            d["beta"] = self.beta
            d["nu"] = self.nu
        return d


def unit_area(kind: str, sigma: float) -> float:
    """Integral over all time of the envelope with ``A = 1`` (linear in sigma)."""
    if kind in ("gaussian", "drag"):
        return SQRT_2PI * sigma
    if kind == "rectangle":
        return sigma
    if kind == "raised_cosine":
        return 2 * sigma / np.pi
    if kind == "hyperbolic_secant":
        return np.pi * sigma
    raise ValueError(f"unknown envelope kind {kind!r}")


def _sech(u):
    # overflow-free 1/cosh
    e = np.exp(-np.abs(u))
    return 2 * e / (1 + e * e)


def _inside(u):
    return np.abs(u) <= 0.5


def envelope_value(env: Envelope, t):
    t = np.asarray(t, dtype=float)
    d = t - env.t_c
    u = d / env.sigma
    k = env.kind
    if k == "gaussian":
        return env.A * np.exp(-0.5 * u**2)
    if k == "rectangle":
        return np.where(_inside(u), env.A, 0.0)
    if k == "raised_cosine":
        return np.where(_inside(u), env.A * np.cos(np.pi * u), 0.0)
    if k == "drag":
        return env.A * np.exp(-0.5 * u**2) * (1 - env.nu * env.beta * d / env.sigma**2)
    return env.A * _sech(u)


def envelope_derivatives(env: Envelope, t):
    """``(d/dA, d/dsigma, d/dt_c)`` of the envelope at ``t``.

    Support edges of rectangle/raised-cosine are not included; they enter
    as jump terms at the breakpoints.
    """
    t = np.asarray(t, dtype=float)
    d = t - env.t_c
    s = env.sigma
    u = d / s
    k = env.kind
    A = env.A
    if k == "gaussian":
        g = np.exp(-0.5 * u**2)
        return g, A * g * u**2 / s, A * g * u / s
    if k == "rectangle":
        ins = np.where(_inside(u), 1.0, 0.0)
        return ins, np.zeros_like(u), np.zeros_like(u)
    if k == "raised_cosine":
        ins = _inside(u)
        c = np.where(ins, np.cos(np.pi * u), 0.0)
        sn = np.where(ins, np.sin(np.pi * u), 0.0)
        return c, A * sn * np.pi * u / s, A * sn * np.pi / s
    if k == "drag":
        g = np.exp(-0.5 * u**2)
        nb = env.nu * env.beta
        h = 1 - nb * d / s**2
        dg_ds, dg_dc = g * u**2 / s, g * u / s
        dh_ds, dh_dc = 2 * nb * d / s**3, nb / s**2
        return g * h, A * (dg_ds * h + g * dh_ds), A * (dg_dc * h + g * dh_dc)
    sh = _sech(u)
    th = np.tanh(u)
    return sh, A * th * u * sh / s, A * th * sh / s
