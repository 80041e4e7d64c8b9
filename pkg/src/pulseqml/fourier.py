"""Fourier coefficients, fingerprints, FCC and Fourier-series datasets."""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .model import ExecutionRequest, Model, Spectrum, batch_forward, minkowski_spectrum, spectrum


class IncommensurateSpectrumError(ValueError):
    pass


@dataclass(frozen=True)
class CoefficientSet:
    """Complex coefficients on the tensor grid of per-dimension frequencies.

    ``coefficients`` has one axis per feature dimension; entry ``[k1, k2, ...]``
    belongs to frequency vector ``(f1[k1], f2[k2], ...)``. ``period`` is the
    common period of the series in every dimension.
    """

    frequencies: tuple[tuple[Fraction, ...], ...]
    coefficients: np.ndarray
    period: tuple[float, ...] | None = None

    def __post_init__(self):
        shape = tuple(len(f) for f in self.frequencies)
        c = np.asarray(self.coefficients, dtype=complex).reshape(shape)
        object.__setattr__(self, "coefficients", c)

    @property
    def n_features(self) -> int:
        return len(self.frequencies)

    def frequency_vectors(self) -> list[tuple[Fraction, ...]]:
        import itertools

        return list(itertools.product(*self.frequencies))

    def flat(self) -> np.ndarray:
        return self.coefficients.reshape(-1)

    def hermitian_error(self) -> float:
        """Max ``|c_{-w} - conj(c_w)|``; requires symmetric frequency sets."""
        c = self.coefficients
        flipped = c[tuple(slice(None, None, -1) for _ in range(c.ndim))]
        return float(np.max(np.abs(flipped - c.conj()))) if c.size else 0.0

    def to_dict(self) -> dict:
        return {
            "frequencies": [[str(w) for w in f] for f in self.frequencies],
            "coefficients": [
                {"omega": [str(w) for w in omega], "re": float(v.real), "im": float(v.imag)}
                for omega, v in zip(self.frequency_vectors(), self.flat())
            ],
        }


def _dimension_grid(freqs: tuple[Fraction, ...]) -> tuple[int, int, float]:
    """(q, n_points, period) for a rational frequency set ``k/q``."""
    q = 1
    for w in freqs:
        if w.denominator > 10**6:
            raise IncommensurateSpectrumError("frequencies are not on a rational grid; FFT extraction would be approximate")
        q = q * w.denominator // math.gcd(q, w.denominator)
    k_max = int(max(abs(w) * q for w in freqs))
    return q, 2 * k_max + 1, 2 * np.pi * q


def _check_rational(model: Model):
    for factors in model.encoding_prefactors():
        for a in factors:
            if a.denominator > 10**6:
                raise IncommensurateSpectrumError(
                    f"encoding prefactor {float(a)} does not give a commensurate frequency grid; refusing an approximate FFT"
                )


def sampling_grid(model: Model) -> tuple[list[np.ndarray], list[int], list[int]]:
    spec = spectrum(model)
    axes, sizes, qs = [], [], []
    for f in spec.frequencies:
        q, n_pts, period = _dimension_grid(f)
        axes.append(np.arange(n_pts) * period / n_pts)
        sizes.append(n_pts)
        qs.append(q)
    return axes, sizes, qs


def fft_coefficients_batch(model: Model, thetas, request: ExecutionRequest | None = None) -> tuple[Spectrum, np.ndarray]:
    """Coefficients for every parameter set; returns (spectrum, (P, |f1|, |f2|, ...))."""
    _check_rational(model)
    spec = spectrum(model)
    thetas = np.asarray(thetas, dtype=float)
    if thetas.ndim == 2:
        thetas = thetas[None]
    axes, sizes, qs = sampling_grid(model)
    mesh = np.meshgrid(*axes, indexing="ij")
    X = np.stack([m.reshape(-1) for m in mesh], axis=1)
    req = request or ExecutionRequest("expval")
    vals = batch_forward(model, X, thetas, req)  # (N, P)
    vals = vals.T.reshape((thetas.shape[0],) + tuple(sizes))
    fhat = np.fft.fftn(vals, axes=tuple(range(1, 1 + len(sizes)))) / np.prod(sizes)
    # pick each spectrum frequency (k/q) -> FFT bin k mod N
    idx = []
    for f, q, n in zip(spec.frequencies, qs, sizes):
        idx.append(np.array([int(w * q) % n for w in f]))
    out = fhat[(slice(None),) + np.ix_(*idx)]
    return spec, out


def fft_coefficients(model: Model, theta, request: ExecutionRequest | None = None) -> CoefficientSet:
    """Exact coefficients of the band-limited model output via the DFT.

    Each dimension is sampled at ``2*k_max + 1`` equidistant points over
    one period starting at ``x = 0``; the normalization is ``1/N`` so
    that ``c_0`` is the grid mean.
    """
    spec, c = fft_coefficients_batch(model, np.asarray(theta)[None], request)
    period = tuple(_dimension_grid(f)[2] for f in spec.frequencies)
    return CoefficientSet(spec.frequencies, c[0], period)


def evaluate_series(coeffs: CoefficientSet, x, atol: float = 1e-9) -> np.ndarray | float:
    """Real value of ``sum_w c_w exp(i w.x)`` at one point or a batch (M, D)."""
    if coeffs.hermitian_error() > atol:
        raise ValueError("coefficients are not Hermitian-symmetric; the series would not be real")
    x = np.asarray(x, dtype=float)
    single = x.ndim <= 1 and (x.ndim == 0 or x.shape[0] == coeffs.n_features)
    pts = x.reshape(-1, coeffs.n_features)
    omegas = np.array([[float(w) for w in v] for v in coeffs.frequency_vectors()])  # (K, D)
    phase = np.exp(1j * pts @ omegas.T)  # (M, K)
    vals = (phase @ coeffs.flat()).real
    return float(vals[0]) if single else vals


# --------------------------------------------------------------------------
# fingerprint and FCC
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class Fingerprint:
    frequencies: list[tuple[Fraction, ...]]
    r: np.ndarray

    def to_dict(self) -> dict:
        return {
            "frequencies": [[str(w) for w in v] for v in self.frequencies],
            "abs": np.abs(self.r).reshape(-1).tolist(),
            "size": len(self.frequencies),
        }


def correlation_matrix(samples: np.ndarray, var_tol: float = 1e-24) -> np.ndarray:
    """Complex Pearson correlation between columns of ``samples`` (S, K).

    ``r[i, j] = sum (c_i - mean_i) conj(c_j - mean_j) / sqrt(var_i var_j)``.
    Columns with zero variance get ``r = 0`` off the diagonal and 1 on it.
    """
    c = np.asarray(samples, dtype=complex)
    if c.shape[0] < 1:
        raise ValueError("need at least one sample")
    d = c - c.mean(axis=0, keepdims=True)
    cov = d.T @ d.conj()
    var = np.real(np.einsum("sk,sk->k", d, d.conj()))
    live = var > var_tol * max(1.0, float(var.max(initial=0.0)))
    denom = np.sqrt(np.outer(np.where(live, var, 1.0), np.where(live, var, 1.0)))
    r = np.where(np.outer(live, live), cov / denom, 0.0)
    np.fill_diagonal(r, 1.0)
    return r


def fingerprint(model: Model, thetas, request: ExecutionRequest | None = None) -> Fingerprint:
    thetas = np.asarray(thetas, dtype=float)
    if thetas.ndim != 3 or thetas.shape[0] < 1:
        raise ValueError("fingerprint needs a non-empty stack of parameter sets (S, L+1, K)")
    if thetas.shape[0] < 2:
        raise ValueError("fingerprint needs at least two parameter sets")
    spec, c = fft_coefficients_batch(model, thetas, request)
    flat = c.reshape(c.shape[0], -1)
    return Fingerprint(spec.frequency_vectors(), correlation_matrix(flat))


def fcc(fp: Fingerprint, normalized: bool = False) -> float:
    """Mean |r| with the ``1/|Omega|`` prefactor (``1/|Omega|^2`` if normalized)."""
    k = fp.r.shape[0]
    total = float(np.sum(np.abs(fp.r)))
    return total / (k * k if normalized else k)


# --------------------------------------------------------------------------
# datasets
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class FourierDataset:
    coefficients: CoefficientSet
    x: np.ndarray
    y: np.ndarray

    def to_dict(self) -> dict:
        return {**self.coefficients.to_dict(), "x": self.x.tolist(), "y": self.y.tolist()}


def _unit_disc(rng: np.random.Generator, size) -> np.ndarray:
    r = np.sqrt(rng.uniform(0.0, 1.0, size))
    phi = rng.uniform(0.0, 2 * np.pi, size)
    return r * np.exp(1j * phi)


def random_coefficients(spec: Spectrum, rng: np.random.Generator) -> CoefficientSet:
    """Uniform draws on the unit disc for the non-negative half of the spectrum.

    The mirrored half is the conjugate; ``c_0`` keeps only its real part.
    """
    shape = tuple(len(f) for f in spec.frequencies)
    total = int(np.prod(shape))
    draws = _unit_disc(rng, total)
    c = draws.reshape(shape)
    flipped = c[tuple(slice(None, None, -1) for _ in shape)]
    # the first half in C order is the mirror of the second half; keep the
    # second (non-negative leading frequency) and conjugate it
    flat = c.reshape(-1).copy()
    fl = flipped.reshape(-1)
    half = total // 2
    flat[:half] = fl[:half].conj()
    flat[half] = flat[half].real
    return CoefficientSet(spec.frequencies, flat.reshape(shape))


def generate_dataset(model_or_spectrum, n_points: int, rng: np.random.Generator, domain=(0.0, 2 * np.pi)) -> FourierDataset:
    """Random Fourier series on the model's spectrum sampled at equidistant points."""
    if n_points < 1:
        raise ValueError("n_points must be >= 1")
    spec = spectrum(model_or_spectrum) if isinstance(model_or_spectrum, Model) else model_or_spectrum
    coeffs = random_coefficients(spec, rng)
    lo, hi = domain
    axis = np.linspace(lo, hi, n_points)
    if spec.n_features == 1:
        x = axis[:, None]
    else:
        mesh = np.meshgrid(*([axis] * spec.n_features), indexing="ij")
        x = np.stack([m.reshape(-1) for m in mesh], axis=1)
    y = evaluate_series(coeffs, x)
    return FourierDataset(coeffs, x, np.atleast_1d(y))


def spectrum_from_prefactors(prefactors) -> Spectrum:
    return minkowski_spectrum([[Fraction(a) for a in prefactors]])
