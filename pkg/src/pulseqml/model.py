"""Data re-uploading quantum Fourier models."""

from __future__ import annotations

import itertools
from collections import Counter
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

import numpy as np

from .ansatz import Ansatz, get_ansatz
from .core import (
    DensityMatrix,
    Observable,
    Operation,
    StateVector,
    expval_batch,
    expval_density_batch,
    make_rng,
    run_density,
    run_statevector,
    sample_outcomes,
)

MODES = ("expval", "density", "state", "probs")
CHUNK = 1 << 14


def _prefactors(scheme: str, n: int, custom=None) -> tuple[float, ...]:
    if scheme == "hamming":
        return (1.0,) * n
    if scheme == "binary":
        return tuple(float(2**i) for i in range(n))
    if scheme == "ternary":
        return tuple(float(3**i) for i in range(n))
    if scheme == "custom":
        if custom is None or len(custom) != n:
            raise ValueError("custom encoding needs one prefactor per qubit")
        return tuple(float(c) for c in custom)
    raise ValueError(f"unknown encoding scheme {scheme!r}")


@dataclass(frozen=True)
class EncodingStrategy:
    scheme: str = "hamming"
    gate: str = "RX"
    prefactors: tuple[float, ...] | None = None
    feature_assignment: tuple[int, ...] | None = None

    def __post_init__(self):
        if self.gate.upper() not in ("RX", "RY", "RZ"):
            raise ValueError(f"encoding gate must be RX, RY or RZ, got {self.gate!r}")
        object.__setattr__(self, "gate", self.gate.upper())

    def factors(self, n: int) -> tuple[float, ...]:
        return _prefactors(self.scheme, n, self.prefactors)

    def features(self, n: int, n_features: int) -> tuple[int, ...]:
        if self.feature_assignment is not None:
            fa = tuple(int(f) for f in self.feature_assignment)
            if len(fa) != n or any(not 0 <= f < n_features for f in fa):
                raise ValueError("feature_assignment needs one feature index in [0, D) per qubit")
            return fa
        return tuple(q % n_features for q in range(n))

    def operations(self, n: int, n_features: int, x) -> list[Operation]:
        """Encoding layer; ``x`` is (D,) or a batch (B, D)."""
        x = None if x is None else np.asarray(x, dtype=float)
        ops = []
        for q, (a, d) in enumerate(zip(self.factors(n), self.features(n, n_features))):
            value = None if x is None else a * x[..., d]
            label = f"x{d}" if a == 1 else f"{a:g}·x{d}"
            ops.append(Operation(self.gate, (q,), value, label, encoding=(d, a)))
        return ops

    def to_dict(self) -> dict:
        d = {"scheme": self.scheme, "gate": self.gate}
        if self.prefactors is not None:
            d["prefactors"] = list(self.prefactors)
        if self.feature_assignment is not None:
            d["feature_assignment"] = list(self.feature_assignment)
        return d


@dataclass(frozen=True)
class Spectrum:
    """Frequencies per feature dimension with their multiplicities."""

    frequencies: tuple[tuple[Fraction, ...], ...]
    degeneracies: tuple[tuple[int, ...], ...]

    @property
    def n_features(self) -> int:
        return len(self.frequencies)

    def frequency_vectors(self) -> list[tuple[Fraction, ...]]:
        """Cartesian product of the per-dimension sets, lexicographic."""
        return list(itertools.product(*self.frequencies))

    def __len__(self) -> int:
        return int(np.prod([len(f) for f in self.frequencies]))


def minkowski_spectrum(prefactor_lists: Sequence[Sequence[Fraction]]) -> Spectrum:
    """Per dimension, the Minkowski sum of ``{-a, 0, a}`` over its encoding gates."""
    freqs, degs = [], []
    for factors in prefactor_lists:
        counts = Counter({Fraction(0): 1})
        for a in factors:
            nxt = Counter()
            for w, c in counts.items():
                for delta in (-a, Fraction(0), a):
                    nxt[w + delta] += c
            counts = nxt
        keys = sorted(counts)
        freqs.append(tuple(keys))
        degs.append(tuple(counts[k] for k in keys))
    return Spectrum(tuple(freqs), tuple(degs))


def _as_fraction(a: float) -> Fraction:
    f = Fraction(a).limit_denominator(10**6)
    if abs(float(f) - a) > 1e-12:
        return Fraction(a)
    return f


@dataclass(frozen=True)
class Model:
    """``W(L+1) S(L)(x) W(L) ... S(1)(x) W(1) |0>`` measured with ``observable``."""

    n_qubits: int
    n_layers: int
    ansatz: Ansatz | str = "HEA"
    encoding: EncodingStrategy = field(default_factory=EncodingStrategy)
    reuploading: tuple[bool, ...] | None = None
    observable: Observable | None = None
    n_features: int = 1

    def __post_init__(self):
        if self.n_qubits < 1 or self.n_layers < 1:
            raise ValueError("n_qubits and n_layers must be >= 1")
        object.__setattr__(self, "ansatz", get_ansatz(self.ansatz))
        mask = (True,) * self.n_layers if self.reuploading is None else tuple(bool(m) for m in self.reuploading)
        if len(mask) != self.n_layers or not any(mask):
            raise ValueError("reuploading mask needs one entry per layer and at least one True")
        object.__setattr__(self, "reuploading", mask)
        obs = self.observable if self.observable is not None else Observable("Z", (0,))
        if any(not 0 <= w < self.n_qubits for w in obs.wires):
            raise ValueError("observable wires out of range")
        object.__setattr__(self, "observable", obs)
        self.encoding.features(self.n_qubits, self.n_features)

    @property
    def K(self) -> int:
        return self.ansatz.params_per_layer(self.n_qubits)

    @property
    def param_shape(self) -> tuple[int, int]:
        return (self.n_layers + 1, self.K)

    def circuit(self, x=None, theta=None) -> list[Operation]:
        """Operations for input ``x`` and parameters ``theta``.

        Both may carry a leading batch axis of equal length; ``None`` gives a
        symbolic circuit (drawing, gate counting).
        """
        if theta is not None:
            theta = np.asarray(theta, dtype=float)
            if theta.shape[-2:] != self.param_shape:
                raise ValueError(f"theta must have shape {self.param_shape}, got {theta.shape}")
        if x is not None:
            x = np.asarray(x, dtype=float)
            if x.shape[-1] != self.n_features:
                raise ValueError(f"x must have {self.n_features} feature(s), got shape {x.shape}")
        ops: list[Operation] = []
        for layer in range(self.n_layers + 1):
            w = None if theta is None else theta[..., layer, :]
            ops.extend(self.ansatz.layer_operations(self.n_qubits, w, layer))
            if layer < self.n_layers and self.reuploading[layer]:
                ops.extend(self.encoding.operations(self.n_qubits, self.n_features, x))
        return ops

    def encoding_prefactors(self) -> list[list[Fraction]]:
        per_dim: list[list[Fraction]] = [[] for _ in range(self.n_features)]
        factors = self.encoding.factors(self.n_qubits)
        features = self.encoding.features(self.n_qubits, self.n_features)
        for layer in range(self.n_layers):
            if self.reuploading[layer]:
                for a, d in zip(factors, features):
                    per_dim[d].append(_as_fraction(a))
        return per_dim

    def to_dict(self) -> dict:
        return {
            "n_qubits": self.n_qubits,
            "n_layers": self.n_layers,
            "ansatz": self.ansatz.name,
            "encoding": self.encoding.to_dict(),
            "reuploading": list(self.reuploading),
            "observable": self.observable.to_dict(),
            "n_features": self.n_features,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "Model":
        ansatz = d.get("ansatz", "HEA")
        if isinstance(ansatz, list):
            from .ansatz import ansatz_from_blocks

            ansatz = ansatz_from_blocks("CUSTOM", ansatz)
        enc = d.get("encoding", {})
        if isinstance(enc, str):
            enc = {"scheme": enc}
        encoding = EncodingStrategy(
            enc.get("scheme", "hamming"),
            enc.get("gate", "RX"),
            tuple(enc["prefactors"]) if enc.get("prefactors") is not None else None,
            tuple(enc["feature_assignment"]) if enc.get("feature_assignment") is not None else None,
        )
        re = d.get("reuploading")
        if isinstance(re, bool):
            re = (re,) * int(d["n_layers"]) if re else (True,) + (False,) * (int(d["n_layers"]) - 1)
        obs = d.get("observable")
        if isinstance(obs, str):
            obs = Observable(obs, (0,))
        elif isinstance(obs, dict):
            obs = Observable(obs.get("pauli", "Z"), tuple(obs.get("wires", (0,))))
        return cls(
            int(d["n_qubits"]),
            int(d["n_layers"]),
            ansatz,
            encoding,
            tuple(re) if re is not None else None,
            obs,
            int(d.get("n_features", 1)),
        )


def spectrum(model: Model) -> Spectrum:
    return minkowski_spectrum(model.encoding_prefactors())


# --------------------------------------------------------------------------
# parameters
# --------------------------------------------------------------------------


def init_params(strategy: str, shape, rng: np.random.Generator | None = None, lo: float = 0.0, hi: float = 2 * np.pi) -> np.ndarray:
    """``"zeros"``, ``"pi"`` or ``"uniform"`` (on ``[lo, hi)``) parameters."""
    if strategy == "zeros":
        return np.zeros(shape)
    if strategy == "pi":
        return np.full(shape, np.pi)
    if strategy == "uniform":
        if not lo < hi:
            raise ValueError(f"invalid range [{lo}, {hi})")
        if rng is None:
            raise ValueError("uniform initialisation needs an rng")
        return rng.uniform(lo, hi, size=shape)
    raise ValueError(f"unknown init strategy {strategy!r}")


# --------------------------------------------------------------------------
# execution
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class ExecutionRequest:
    mode: str = "expval"
    shots: int | None = None
    noise_p: float | None = None
    analytic: bool = False
    qubits: tuple[int, ...] | None = None
    calibration: object = None
    seed: int = 0

    def __post_init__(self):
        if self.mode not in MODES:
            raise ValueError(f"mode must be one of {MODES}, got {self.mode!r}")
        if self.mode == "probs" and self.shots is None and not self.analytic:
            raise ValueError("probs mode needs shots or analytic=True")
        if self.noise_p is not None and not 0 <= self.noise_p <= 1:
            raise ValueError("noise_p must lie in [0, 1]")
        if self.shots is not None and self.shots < 1:
            raise ValueError("shots must be >= 1")

    @property
    def noisy(self) -> bool:
        return self.noise_p is not None


def _marginal(probs: np.ndarray, qubits, n: int) -> np.ndarray:
    if qubits is None:
        return probs
    qubits = list(qubits)
    b = probs.shape[0]
    t = probs.reshape((b,) + (2,) * n)
    drop = tuple(1 + q for q in range(n) if q not in qubits)
    t = t.sum(axis=drop)
    kept = sorted(qubits)
    t = np.moveaxis(t, [1 + kept.index(q) for q in qubits], list(range(1, 1 + len(qubits))))
    return t.reshape(b, -1)


def _simulate_chunk(model: Model, X: np.ndarray, TH: np.ndarray, req: ExecutionRequest):
    b = X.shape[0]
    ops = model.circuit(X, TH)
    n = model.n_qubits
    if req.noisy:
        rho = run_density(ops, n, b, req.noise_p)
        return rho, True
    return run_statevector(ops, n, b), False


def _outputs(model: Model, raw: np.ndarray, dense: bool, req: ExecutionRequest, slot_keys) -> np.ndarray:
    n = model.n_qubits
    if req.mode == "expval":
        if model.observable.is_identity:
            return np.ones(raw.shape[0])
        if dense:
            return expval_density_batch(raw, model.observable, n)
        return expval_batch(raw, model.observable, n)
    if req.mode == "state":
        if dense:
            raise ValueError("state mode is unavailable on the noisy (density) path")
        return raw
    if req.mode == "density":
        if dense:
            return raw
        return np.einsum("bi,bj->bij", raw, raw.conj())
    probs = np.clip(np.einsum("bii->bi", raw).real, 0, None) if dense else np.abs(raw) ** 2
    probs = _marginal(probs, req.qubits, n)
    if req.shots is None:
        return probs
    out = np.empty_like(probs)
    for i, key in enumerate(slot_keys):
        rng = make_rng(req.seed, "shots", *key)
        p = probs[i] / probs[i].sum()
        out[i] = sample_outcomes(p, req.shots, rng) / req.shots
    return out


def _request(request: ExecutionRequest | None, kwargs) -> ExecutionRequest:
    if request is None:
        return ExecutionRequest(**kwargs)
    if kwargs:
        raise TypeError("pass either an ExecutionRequest or keyword options, not both")
    return request


def batch_forward(model: Model, X, thetas, request: ExecutionRequest | None = None, **kwargs) -> np.ndarray:
    """Evaluate every (input, parameter set) combination.

    Returns an array with leading axes ``(M, P)``; trailing axes depend on
    the mode (scalar for ``expval``, ``(2^n,)`` for ``state``/``probs``,
    ``(2^n, 2^n)`` for ``density``).
    """
    req = _request(request, kwargs)
    X = np.asarray(X, dtype=float)
    if X.ndim == 1:
        X = X.reshape(-1, model.n_features) if model.n_features > 1 else X[:, None]
    if X.ndim != 2 or X.shape[1] != model.n_features:
        raise ValueError(f"inputs must have {model.n_features} feature(s) each")
    thetas = np.asarray(thetas, dtype=float)
    if thetas.ndim == 2:
        thetas = thetas[None]
    if thetas.shape[1:] != model.param_shape:
        raise ValueError(f"each parameter set must have shape {model.param_shape}")
    m, p = X.shape[0], thetas.shape[0]
    if m == 0 or p == 0:
        raise ValueError("batches must be non-empty")
    if req.calibration is not None:
        from .pulse.simulate import pulse_batch_forward

        return pulse_batch_forward(model, X, thetas, req)

    ii, jj = np.divmod(np.arange(m * p), p)
    results = []
    for start in range(0, m * p, CHUNK):
        sl = slice(start, start + CHUNK)
        raw, dense = _simulate_chunk(model, X[ii[sl]], thetas[jj[sl]], req)
        keys = list(zip(ii[sl].tolist(), jj[sl].tolist()))
        results.append(_outputs(model, raw, dense, req, keys))
    out = np.concatenate(results, axis=0)
    return out.reshape((m, p) + out.shape[1:])


def forward(model: Model, x, theta, request: ExecutionRequest | None = None, **kwargs):
    """Single evaluation; returns a float, ``StateVector``, ``DensityMatrix`` or vector."""
    req = _request(request, kwargs)
    x = np.atleast_1d(np.asarray(x, dtype=float))
    theta = np.asarray(theta, dtype=float)
    if theta.shape != model.param_shape:
        raise ValueError(f"theta must have shape {model.param_shape}, got {theta.shape}")
    if x.shape != (model.n_features,):
        raise ValueError(f"x must have {model.n_features} feature(s)")
    out = batch_forward(model, x[None], theta[None], req)[0, 0]
    if req.mode == "expval":
        return float(out)
    if req.mode == "state":
        return StateVector(model.n_qubits, out)
    if req.mode == "density":
        return DensityMatrix(model.n_qubits, out)
    return out
