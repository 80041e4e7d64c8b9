"""Expressibility and entangling-capability measures."""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .core import (
    CX,
    H,
    DensityMatrix,
    StateVector,
    apply_matrix,
    apply_matrix_density,
    eigendecompose,
    make_rng,
    partial_trace_array,
    purity_array,
    reduced_from_states,
)
from .model import ExecutionRequest, Model, batch_forward

MEASURES = ("mw", "bm", "ef", "ce")
EIG_CUTOFF = 1e-12
MAX_CE_SUBSET = 12


@dataclass(frozen=True)
class ExpressibilityConfig:
    n_pairs: int = 10_000
    n_bins: int = 75
    seed: int = 0

    def __post_init__(self):
        if self.n_pairs < 1:
            raise ValueError("n_pairs must be >= 1")
        if self.n_bins < 2:
            raise ValueError("n_bins must be >= 2")


@dataclass(frozen=True)
class EntanglementConfig:
    measure: str = "mw"
    n_samples: int = 1000
    noise_p: float | None = None
    shots: int | None = None
    ce_subset: tuple[int, ...] | None = None
    seed: int = 0

    def __post_init__(self):
        if self.measure not in MEASURES:
            raise ValueError(f"measure must be one of {MEASURES}, got {self.measure!r}")
        if self.n_samples < 1:
            raise ValueError("n_samples must be >= 1")
        if self.measure == "mw" and self.noise_p:
            raise ValueError("Meyer-Wallach needs pure states; use bm, ef or ce with noise")
        if self.shots is not None and self.measure not in ("bm", "ce"):
            raise ValueError("shot estimates exist for bm and ce only")


# --------------------------------------------------------------------------
# expressibility
# --------------------------------------------------------------------------


def haar_bin_probabilities(n_qubits: int, n_bins: int) -> np.ndarray:
    """Haar fidelity mass per uniform bin: ``(1-lo)^(N-1) - (1-hi)^(N-1)``."""
    if n_qubits < 1:
        raise ValueError("n_qubits must be >= 1")
    dim = 2**n_qubits
    edges = np.linspace(0.0, 1.0, n_bins + 1)
    cdf_tail = (1 - edges) ** (dim - 1)
    return cdf_tail[:-1] - cdf_tail[1:]


def kl_divergence(p: np.ndarray, q: np.ndarray) -> float:
    p = np.asarray(p, dtype=float)
    q = np.asarray(q, dtype=float)
    mask = p > 0
    if np.any(q[mask] <= 0):
        raise ValueError("reference distribution has an empty bin where samples landed")
    return float(np.sum(p[mask] * np.log(p[mask] / q[mask])))


def fidelity_histogram(fid: np.ndarray, n_bins: int) -> np.ndarray:
    counts, _ = np.histogram(np.clip(fid, 0.0, 1.0), bins=n_bins, range=(0.0, 1.0))
    return counts / counts.sum()


def model_states(model: Model, thetas: np.ndarray, x: float = 0.0) -> np.ndarray:
    X = np.full((1, model.n_features), x)
    return batch_forward(model, X, thetas, ExecutionRequest("state"))[0]


def sample_thetas(model: Model, count: int, rng: np.random.Generator) -> np.ndarray:
    return rng.uniform(0.0, 2 * np.pi, size=(count,) + model.param_shape)


def pair_fidelities(model: Model, cfg: ExpressibilityConfig) -> np.ndarray:
    rng = make_rng(cfg.seed, "expressibility")
    thetas = sample_thetas(model, 2 * cfg.n_pairs, rng)
    psi = model_states(model, thetas)
    a, b = psi[0::2], psi[1::2]
    return np.abs(np.einsum("bi,bi->b", a.conj(), b)) ** 2


def expressibility_kl(model: Model, cfg: ExpressibilityConfig = ExpressibilityConfig()) -> float:
    """KL divergence between the sampled pair-fidelity histogram and Haar."""
    fid = pair_fidelities(model, cfg)
    return kl_divergence(fidelity_histogram(fid, cfg.n_bins), haar_bin_probabilities(model.n_qubits, cfg.n_bins))


# --------------------------------------------------------------------------
# entanglement measures (batched arrays)
# --------------------------------------------------------------------------


def _as_states(state) -> tuple[np.ndarray, int]:
    if isinstance(state, StateVector):
        return state.amplitudes[None], state.n_qubits
    raise TypeError("expected a StateVector")


def single_qubit_purities(psi: np.ndarray, n: int) -> np.ndarray:
    """(B, n) purities of every one-qubit marginal of pure states."""
    return np.stack([purity_array(reduced_from_states(psi, [k], n)) for k in range(n)], axis=1)


def meyer_wallach_batch(psi: np.ndarray, n: int) -> np.ndarray:
    if n < 2:
        raise ValueError("Meyer-Wallach needs at least 2 qubits")
    return 2 * (1 - single_qubit_purities(psi, n).mean(axis=1))


def meyer_wallach(state: StateVector) -> float:
    psi, n = _as_states(state)
    return float(meyer_wallach_batch(psi, n)[0])


def bell_register_probabilities(batch, n: int, dense: bool) -> np.ndarray:
    """Outcome probabilities of the doubled register after CNOT(k -> n+k), H(k).

    ``batch`` holds pure states (B, 2^n) or densities (B, 2^n, 2^n); the
    register is prepared in two copies of the state.
    """
    m = 2 * n
    if dense and batch.shape[0] > 8:
        return np.concatenate([bell_register_probabilities(batch[i : i + 8], n, True) for i in range(0, batch.shape[0], 8)])
    if dense:
        rho2 = np.einsum("bij,bkl->bikjl", batch, batch).reshape(batch.shape[0], 4**n, 4**n)
        for k in range(n):
            rho2 = apply_matrix_density(rho2, CX, (k, n + k), m)
            rho2 = apply_matrix_density(rho2, H, (k,), m)
        return np.clip(np.einsum("bii->bi", rho2).real, 0.0, None)
    psi2 = np.einsum("bi,bj->bij", batch, batch).reshape(batch.shape[0], 4**n)
    for k in range(n):
        psi2 = apply_matrix(psi2, CX, (k, n + k), m)
        psi2 = apply_matrix(psi2, H, (k,), m)
    return np.abs(psi2) ** 2


def _pair_parities(n: int) -> np.ndarray:
    """(4^n, n) indicator of outcome 11 on each (k, n+k) pair."""
    idx = np.arange(4**n)
    m = 2 * n
    bit = lambda q: (idx >> (m - 1 - q)) & 1  # noqa: E731
    return np.stack([bit(k) & bit(n + k) for k in range(n)], axis=1)


def _sample_probs(probs: np.ndarray, shots: int, rng: np.random.Generator) -> np.ndarray:
    out = np.empty_like(probs)
    for i, p in enumerate(probs):
        out[i] = rng.multinomial(shots, p / p.sum()) / shots
    return out


def bell_purities(batch, n: int, dense: bool, shots: int | None = None, rng=None) -> np.ndarray:
    """(B, n) one-qubit purities from ``1 - 2 P_odd`` on each copy pair."""
    probs = bell_register_probabilities(batch, n, dense)
    if shots is not None:
        if rng is None:
            raise ValueError("shot estimates need an rng")
        probs = _sample_probs(probs, shots, rng)
    p_odd = probs @ _pair_parities(n)
    return 1 - 2 * p_odd


def bell_measurement_batch(batch, n: int, dense: bool = False, shots: int | None = None, rng=None) -> np.ndarray:
    if n < 2:
        raise ValueError("the Bell-measurement estimator needs at least 2 qubits")
    return 2 * (1 - bell_purities(batch, n, dense, shots, rng).mean(axis=1))


def bell_measurement_entanglement(state, shots: int | None = None, rng: np.random.Generator | None = None, exact: bool | None = None) -> float:
    """Meyer-Wallach value estimated from two-copy parity measurements."""
    if exact is False and shots is None:
        raise ValueError("shot mode needs a shot count")
    if isinstance(state, DensityMatrix):
        arr, n, dense = state.matrix[None], state.n_qubits, True
    else:
        arr, n = _as_states(state)
        dense = False
    return float(bell_measurement_batch(arr, n, dense, shots, rng)[0])


def entanglement_of_formation(rho: DensityMatrix, atol: float = 1e-10) -> float:
    """``sum_i lambda_i MW(v_i)`` over the eigendecomposition (an upper bound)."""
    if rho.n_qubits < 2:
        raise ValueError("entanglement of formation needs at least 2 qubits")
    evals, states = eigendecompose(rho, atol)
    if evals.min() < -atol:
        raise ValueError("density matrix is not positive semidefinite")
    keep = [i for i, lam in enumerate(evals) if lam > EIG_CUTOFF]
    if not keep:
        return 0.0
    psi = np.stack([states[i].amplitudes for i in keep])
    return float(np.dot(evals[keep], meyer_wallach_batch(psi, rho.n_qubits)))


def _subsets(s: Sequence[int]) -> Iterable[tuple[int, ...]]:
    return itertools.chain.from_iterable(itertools.combinations(s, r) for r in range(len(s) + 1))


def _check_subset(subset, n: int) -> tuple[int, ...]:
    s = tuple(sorted(set(int(q) for q in subset)))
    if not s:
        raise ValueError("subset must be non-empty")
    if any(not 0 <= q < n for q in s):
        raise ValueError(f"subset {s} out of range for {n} qubits")
    if len(s) > MAX_CE_SUBSET:
        raise ValueError(f"power-set enumeration limited to {MAX_CE_SUBSET} qubits")
    return s


def concentratable_batch(batch, n: int, subset, dense: bool = False, shots: int | None = None, rng=None) -> np.ndarray:
    s = _check_subset(subset, n)
    if shots is not None:
        # purity of alpha = E[prod_{k in alpha} (-1)^(b_k c_k)] over two-copy outcomes
        probs = _sample_probs(bell_register_probabilities(batch, n, dense), shots, rng)
        signs = 1 - 2 * _pair_parities(n)
        total = np.zeros(probs.shape[0])
        for alpha in _subsets(s):
            total += probs @ np.prod(signs[:, list(alpha)], axis=1) if alpha else 1.0
        return 1 - total / 2 ** len(s)
    total = np.zeros(batch.shape[0])
    for alpha in _subsets(s):
        if not alpha:
            total += 1.0
        elif dense:
            total += purity_array(partial_trace_array(batch, alpha, n))
        else:
            total += purity_array(reduced_from_states(batch, alpha, n))
    return 1 - total / 2 ** len(s)


def concentratable(state, subset=None, shots: int | None = None, rng=None) -> float:
    """``1 - 2^-|s| sum_{alpha in P(s)} Tr[rho_alpha^2]`` (empty set counts 1)."""
    if isinstance(state, DensityMatrix):
        arr, n, dense = state.matrix[None], state.n_qubits, True
    else:
        arr, n = _as_states(state)
        dense = False
    subset = range(n) if subset is None else subset
    return float(concentratable_batch(arr, n, subset, dense, shots, rng)[0])


# --------------------------------------------------------------------------
# sampling protocol
# --------------------------------------------------------------------------


def _measure_values(model: Model, cfg: EntanglementConfig, thetas: np.ndarray, rng) -> np.ndarray:
    n = model.n_qubits
    X = np.zeros((1, model.n_features))
    noisy = bool(cfg.noise_p)
    if cfg.measure == "mw":
        psi = batch_forward(model, X, thetas, ExecutionRequest("state"))[0]
        return meyer_wallach_batch(psi, n)
    if noisy or cfg.measure == "ef":
        req = ExecutionRequest("density", noise_p=cfg.noise_p if noisy else None)
        rho = batch_forward(model, X, thetas, req)[0]
        dense = True
        batch = rho
    else:
        batch = batch_forward(model, X, thetas, ExecutionRequest("state"))[0]
        dense = False
    if cfg.measure == "ef":
        return np.array([entanglement_of_formation(DensityMatrix(n, r)) for r in batch])
    if cfg.measure == "bm":
        return bell_measurement_batch(batch, n, dense, cfg.shots, rng)
    subset = cfg.ce_subset if cfg.ce_subset is not None else range(n)
    return concentratable_batch(batch, n, subset, dense, cfg.shots, rng)


def entangling_capability(model: Model, cfg: EntanglementConfig = EntanglementConfig(), chunk: int = 256) -> tuple[float, float, np.ndarray]:
    """(mean, std, per-sample values) over uniform parameters at ``x = 0``.

    Parameter draws come from the stream ``(seed, "entanglement")`` so all
    measures see the same samples; shot noise has its own stream.
    """
    rng = make_rng(cfg.seed, "entanglement")
    thetas = sample_thetas(model, cfg.n_samples, rng)
    shot_rng = make_rng(cfg.seed, "entanglement", "shots", cfg.measure)
    vals = np.concatenate([_measure_values(model, cfg, thetas[i : i + chunk], shot_rng) for i in range(0, len(thetas), chunk)])
    return float(math.fsum(vals) / len(vals)), float(np.std(vals)), vals
