"""Dense statevector / density-matrix kernel.

Conventions used everywhere in the package:

* qubit 0 is the most significant bit of a basis index,
* ``R_A(phi) = exp(-i phi A / 2)`` for ``A`` in ``{X, Y, Z}``,
* every batched array carries its batch axis first.
"""

from __future__ import annotations

import zlib
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

ATOL = 1e-10
MAX_ORACLE_QUBITS = 10

I2 = np.eye(2, dtype=complex)
X = np.array([[0, 1], [1, 0]], dtype=complex)
Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
Z = np.array([[1, 0], [0, -1]], dtype=complex)
H = np.array([[1, 1], [1, -1]], dtype=complex) / np.sqrt(2)
PAULI = {"I": I2, "X": X, "Y": Y, "Z": Z}


# --------------------------------------------------------------------------
# random streams
# --------------------------------------------------------------------------


def _label_key(label) -> int:
    if isinstance(label, (int, np.integer)):
        return int(label)
    return zlib.crc32(str(label).encode())


def make_rng(seed: int, *labels) -> np.random.Generator:
    """Counter-based (Philox) generator for the stream ``(seed, *labels)``.

    Streams with different labels are statistically independent, and the
    same labels always reproduce the same stream, so work can be split
    across workers without sharing state.
    """
    ss = np.random.SeedSequence(int(seed), spawn_key=tuple(_label_key(lb) for lb in labels))
    return np.random.Generator(np.random.Philox(ss))


# --------------------------------------------------------------------------
# gate matrices
# --------------------------------------------------------------------------


def _rot(pauli: np.ndarray, phi) -> np.ndarray:
    phi = np.asarray(phi, dtype=float)
    c = np.cos(phi / 2)[..., None, None]
    s = np.sin(phi / 2)[..., None, None]
    return c * I2 - 1j * s * pauli


def rx(phi) -> np.ndarray:
    return _rot(X, phi)


def ry(phi) -> np.ndarray:
    return _rot(Y, phi)


def rz(phi) -> np.ndarray:
    return _rot(Z, phi)


def _controlled(u: np.ndarray) -> np.ndarray:
    out = np.zeros(u.shape[:-2] + (4, 4), dtype=complex)
    out[..., 0, 0] = 1
    out[..., 1, 1] = 1
    out[..., 2:, 2:] = u
    return out


CX = _controlled(X)
CZ = _controlled(Z)

PARAMETRIC_GATES = {"RX": rx, "RY": ry, "RZ": rz}
CONTROLLED_ROTATIONS = {"CRX": rx, "CRY": ry, "CRZ": rz}
FIXED_GATES = {"H": H, "X": X, "Y": Y, "Z": Z, "CX": CX, "CZ": CZ}
GATE_ARITY = {
    "RX": 1, "RY": 1, "RZ": 1, "H": 1, "X": 1, "Y": 1, "Z": 1,
    "CX": 2, "CZ": 2, "CRX": 2, "CRY": 2, "CRZ": 2,
}  # fmt: skip


def is_parametric(name: str) -> bool:
    return name in PARAMETRIC_GATES or name in CONTROLLED_ROTATIONS


def gate_matrix(name: str, param=None) -> np.ndarray:
    """Matrix of a named gate; ``param`` may be an array for a batch."""
    if name in PARAMETRIC_GATES:
        return PARAMETRIC_GATES[name](param)
    if name in CONTROLLED_ROTATIONS:
        return _controlled(CONTROLLED_ROTATIONS[name](param))
    if name in FIXED_GATES:
        return FIXED_GATES[name]
    raise KeyError(f"unknown gate {name!r}")


# --------------------------------------------------------------------------
# value types
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class GateMatrix:
    """A unitary acting on an ordered tuple of wires.

    ``matrix`` is ``(2^k, 2^k)`` or batched ``(B, 2^k, 2^k)``.
    """

    wires: tuple[int, ...]
    matrix: np.ndarray

    def __post_init__(self):
        wires = tuple(int(w) for w in self.wires)
        object.__setattr__(self, "wires", wires)
        m = np.asarray(self.matrix, dtype=complex)
        object.__setattr__(self, "matrix", m)
        if len(set(wires)) != len(wires):
            raise ValueError(f"gate wires must be distinct, got {wires}")
        d = 2 ** len(wires)
        if m.shape[-2:] != (d, d):
            raise ValueError(f"matrix shape {m.shape} does not match {len(wires)} wire(s)")

    def is_unitary(self, atol: float = ATOL) -> bool:
        m = self.matrix
        prod = m @ np.conj(np.swapaxes(m, -1, -2))
        return bool(np.allclose(prod, np.eye(m.shape[-1]), atol=atol))


@dataclass(frozen=True)
class Operation:
    """A named gate instance inside a circuit.

    ``param`` is a float, an array (batched circuits) or ``None``; ``label``
    is what drawings print inside the box (e.g. ``"θ3"`` or ``"x0"``).
    """

    name: str
    wires: tuple[int, ...]
    param: object = None
    label: str | None = None
    # set for encoding gates: (feature index, prefactor)
    encoding: tuple[int, float] | None = None

    def gate(self) -> GateMatrix:
        return GateMatrix(self.wires, gate_matrix(self.name, self.param))


def circuit_gates(ops: Iterable[Operation]) -> list[GateMatrix]:
    return [op.gate() for op in ops]


@dataclass(frozen=True)
class StateVector:
    n_qubits: int
    amplitudes: np.ndarray

    def __post_init__(self):
        amps = np.asarray(self.amplitudes, dtype=complex).reshape(-1)
        object.__setattr__(self, "amplitudes", amps)
        if amps.size != 2**self.n_qubits:
            raise ValueError(f"expected {2 ** self.n_qubits} amplitudes, got {amps.size}")

    @classmethod
    def zero(cls, n_qubits: int) -> "StateVector":
        amps = np.zeros(2**n_qubits, dtype=complex)
        amps[0] = 1
        return cls(n_qubits, amps)

    @property
    def norm(self) -> float:
        return float(np.linalg.norm(self.amplitudes))

    def probabilities(self) -> np.ndarray:
        return np.abs(self.amplitudes) ** 2

    def to_density(self) -> "DensityMatrix":
        a = self.amplitudes
        return DensityMatrix(self.n_qubits, np.outer(a, a.conj()))


@dataclass(frozen=True)
class DensityMatrix:
    n_qubits: int
    matrix: np.ndarray

    def __post_init__(self):
        m = np.asarray(self.matrix, dtype=complex)
        object.__setattr__(self, "matrix", m)
        d = 2**self.n_qubits
        if m.shape != (d, d):
            raise ValueError(f"expected a {d}x{d} matrix, got {m.shape}")

    @property
    def trace(self) -> float:
        return float(np.trace(self.matrix).real)

    def is_valid(self, atol: float = ATOL) -> bool:
        m = self.matrix
        if not np.allclose(m, m.conj().T, atol=atol):
            return False
        if abs(np.trace(m) - 1) > atol:
            return False
        return bool(np.linalg.eigvalsh(m).min() >= -atol)

    def probabilities(self) -> np.ndarray:
        return np.clip(np.diagonal(self.matrix).real, 0.0, None)


@dataclass(frozen=True)
class Observable:
    """Tensor product of Pauli labels on ``wires`` (identity elsewhere)."""

    pauli: str = "Z"
    wires: tuple[int, ...] = (0,)

    def __post_init__(self):
        pauli = self.pauli.upper()
        wires = tuple(int(w) for w in self.wires)
        if len(pauli) == 1 and len(wires) > 1:
            pauli = pauli * len(wires)
        if len(pauli) != len(wires):
            raise ValueError("one Pauli label per target wire is required")
        if any(p not in PAULI for p in pauli):
            raise ValueError(f"Pauli labels must be in IXYZ, got {pauli!r}")
        object.__setattr__(self, "pauli", pauli)
        object.__setattr__(self, "wires", wires)

    @property
    def is_identity(self) -> bool:
        return set(self.pauli) <= {"I"}

    def matrix(self, n_qubits: int) -> np.ndarray:
        """Full ``2^n x 2^n`` matrix (oracle and small-system use)."""
        factors = [I2] * n_qubits
        for p, w in zip(self.pauli, self.wires):
            factors[w] = PAULI[p]
        out = np.ones((1, 1), dtype=complex)
        for f in factors:
            out = np.kron(out, f)
        return out

    def to_dict(self) -> dict:
        return {"pauli": self.pauli, "wires": list(self.wires)}


# --------------------------------------------------------------------------
# batched kernels (arrays, batch axis first)
# --------------------------------------------------------------------------


def apply_matrix(psi: np.ndarray, u: np.ndarray, wires: Sequence[int], n: int) -> np.ndarray:
    """Apply ``u`` on ``wires`` of a batch of ``n``-qubit vectors ``psi`` (B, 2^n).

    ``u`` is ``(d, d)`` or ``(B, d, d)``.
    """
    b = psi.shape[0]
    k = len(wires)
    t = psi.reshape((b,) + (2,) * n)
    axes = [1 + w for w in wires]
    t = np.moveaxis(t, axes, list(range(1, 1 + k)))
    shape = t.shape
    t = t.reshape(b, 2**k, -1)
    t = u @ t
    t = t.reshape(shape)
    t = np.moveaxis(t, list(range(1, 1 + k)), axes)
    return t.reshape(b, 2**n)


def apply_matrix_density(rho: np.ndarray, u: np.ndarray, wires: Sequence[int], n: int) -> np.ndarray:
    """``u rho u^dagger`` for a batch of densities ``rho`` (B, 2^n, 2^n)."""
    b = rho.shape[0]
    flat = rho.reshape(b, 4**n)
    flat = apply_matrix(flat, u, wires, 2 * n)
    flat = apply_matrix(flat, np.conj(u), [w + n for w in wires], 2 * n)
    return flat.reshape(b, 2**n, 2**n)


def apply_pauli_string(psi: np.ndarray, obs: Observable, n: int) -> np.ndarray:
    out = psi
    for p, w in zip(obs.pauli, obs.wires):
        if p != "I":
            out = apply_matrix(out, PAULI[p], [w], n)
    return out


def expval_batch(psi: np.ndarray, obs: Observable, n: int) -> np.ndarray:
    return np.einsum("bi,bi->b", psi.conj(), apply_pauli_string(psi, obs, n)).real


def expval_density_batch(rho: np.ndarray, obs: Observable, n: int) -> np.ndarray:
    b = rho.shape[0]
    # Tr[rho M] = sum_i (M rho)_ii ; apply M on the row index of every column
    cols = np.swapaxes(rho, 1, 2).reshape(b * 2**n, 2**n)
    mr = apply_pauli_string(cols, obs, n).reshape(b, 2**n, 2**n)
    # mr[b, j, :] = M @ rho[b, :, j]
    return np.einsum("bjj->b", mr).real


def depolarize_batch(rho: np.ndarray, p: float, qubits: Iterable[int], n: int) -> np.ndarray:
    out = rho
    for q in qubits:
        twirl = sum(apply_matrix_density(out, P, [q], n) for P in (X, Y, Z))
        out = (1 - p) * out + (p / 3) * twirl
    return out


def partial_trace_array(rho: np.ndarray, keep: Sequence[int], n: int) -> np.ndarray:
    """Reduced densities of a batch ``rho`` (B, 2^n, 2^n) onto ``keep`` (order kept)."""
    keep = list(keep)
    b = rho.shape[0]
    drop = [q for q in range(n) if q not in keep]
    t = rho.reshape((b,) + (2,) * (2 * n))
    perm = [0] + [1 + q for q in keep] + [1 + q for q in drop] + [1 + n + q for q in keep] + [1 + n + q for q in drop]
    t = t.transpose(perm)
    dk, dd = 2 ** len(keep), 2 ** len(drop)
    t = t.reshape(b, dk, dd, dk, dd)
    return np.einsum("bidjd->bij", t)


def reduced_from_states(psi: np.ndarray, keep: Sequence[int], n: int) -> np.ndarray:
    """Reduced densities straight from pure states (B, 2^n), never forming rho."""
    keep = list(keep)
    b = psi.shape[0]
    drop = [q for q in range(n) if q not in keep]
    t = psi.reshape((b,) + (2,) * n).transpose([0] + [1 + q for q in keep] + [1 + q for q in drop])
    t = t.reshape(b, 2 ** len(keep), 2 ** len(drop))
    return t @ np.conj(np.swapaxes(t, 1, 2))


def purity_array(rho: np.ndarray) -> np.ndarray:
    return np.einsum("bij,bji->b", rho, rho).real


# --------------------------------------------------------------------------
# public single-state operations
# --------------------------------------------------------------------------


def _check_wires(wires: Sequence[int], n: int) -> None:
    for w in wires:
        if not 0 <= w < n:
            raise ValueError(f"wire {w} out of range for {n} qubit(s)")


def apply_unitary(state, gate: GateMatrix):
    """Return ``U|psi>`` or ``U rho U^dagger`` as the same state kind."""
    n = state.n_qubits
    _check_wires(gate.wires, n)
    if gate.matrix.ndim != 2:
        raise ValueError("apply_unitary takes a single (unbatched) gate")
    if isinstance(state, StateVector):
        out = apply_matrix(state.amplitudes[None], gate.matrix, gate.wires, n)[0]
        return StateVector(n, out)
    if isinstance(state, DensityMatrix):
        out = apply_matrix_density(state.matrix[None], gate.matrix, gate.wires, n)[0]
        return DensityMatrix(n, out)
    raise TypeError(f"unsupported state type {type(state).__name__}")


def expectation(state, obs: Observable, atol: float = 1e-8) -> float:
    n = state.n_qubits
    _check_wires(obs.wires, n)
    if isinstance(state, StateVector):
        if abs(state.norm - 1) > atol:
            raise ValueError(f"state is not normalized (norm {state.norm})")
        return float(expval_batch(state.amplitudes[None], obs, n)[0])
    if abs(state.trace - 1) > atol:
        raise ValueError(f"density matrix trace {state.trace} != 1")
    return float(expval_density_batch(state.matrix[None], obs, n)[0])


def partial_trace(rho: DensityMatrix, keep: Iterable[int]) -> DensityMatrix:
    keep = sorted(set(int(q) for q in keep))
    if not keep:
        raise ValueError("keep set must be non-empty")
    _check_wires(keep, rho.n_qubits)
    out = partial_trace_array(rho.matrix[None], keep, rho.n_qubits)[0]
    return DensityMatrix(len(keep), out)


def purity(rho: DensityMatrix) -> float:
    return float(purity_array(rho.matrix[None])[0])


def depolarize(rho: DensityMatrix, p: float, qubits: Iterable[int]) -> DensityMatrix:
    """Single-qubit depolarizing channel ``(1-p) rho + p/3 sum_P P rho P`` per qubit."""
    if not 0.0 <= p <= 1.0:
        raise ValueError(f"depolarizing probability must lie in [0, 1], got {p}")
    qubits = list(qubits)
    _check_wires(qubits, rho.n_qubits)
    out = depolarize_batch(rho.matrix[None], p, qubits, rho.n_qubits)[0]
    return DensityMatrix(rho.n_qubits, out)


def _fix_phase(v: np.ndarray, tol: float = 1e-12) -> np.ndarray:
    idx = np.flatnonzero(np.abs(v) > tol)
    if idx.size == 0:
        return v
    a = v[idx[0]]
    return v * (abs(a) / a)


def eigendecompose(rho: DensityMatrix, atol: float = ATOL, tie_tol: float = 1e-10):
    """Eigenvalues (descending) and eigenstates of a density matrix.

    Each eigenvector's first non-negligible amplitude is made real and
    positive; within a group of tied eigenvalues vectors are ordered
    lexicographically by their (real, imag) amplitudes, descending.
    """
    m = rho.matrix
    if not np.allclose(m, m.conj().T, atol=atol):
        raise ValueError("density matrix is not Hermitian")
    w, v = np.linalg.eigh(m)
    vecs = [_fix_phase(v[:, i]) for i in range(v.shape[1])]

    def key(i):
        amps = vecs[i]
        lex = tuple(x for a in amps for x in (-round(a.real, 12), -round(a.imag, 12)))
        return lex

    order = sorted(range(len(w)), key=lambda i: -w[i])
    # reorder inside tied groups
    out, i = [], 0
    while i < len(order):
        j = i + 1
        while j < len(order) and abs(w[order[j]] - w[order[i]]) <= tie_tol:
            j += 1
        out.extend(sorted(order[i:j], key=key))
        i = j
    evals = np.array([w[i] for i in out])
    evals[np.abs(evals) < atol] = np.abs(evals[np.abs(evals) < atol])
    states = [StateVector(rho.n_qubits, vecs[i]) for i in out]
    return evals, states


def sample_outcomes(probs, shots: int, rng: np.random.Generator, atol: float = 1e-8) -> np.ndarray:
    """Multinomial counts for ``shots`` draws from ``probs``."""
    p = np.asarray(probs, dtype=float)
    if shots < 1:
        raise ValueError("shots must be >= 1")
    if p.min() < -atol:
        raise ValueError("negative probabilities")
    if abs(p.sum() - 1) > atol:
        raise ValueError(f"probabilities sum to {p.sum()}, not 1")
    p = np.clip(p, 0.0, None)
    return rng.multinomial(shots, p / p.sum())


def embed(gate: GateMatrix, n: int) -> np.ndarray:
    """Full ``2^n x 2^n`` matrix of ``gate`` by explicit basis-index bookkeeping."""
    wires = gate.wires
    k = len(wires)
    dim = 2**n
    idx = np.arange(dim)
    bits = (idx[:, None] >> (n - 1 - np.arange(n))) & 1  # (dim, n), qubit 0 = MSB
    sub = np.zeros(dim, dtype=int)
    for w in wires:
        sub = (sub << 1) | bits[:, w]
    others = np.ones(n, dtype=bool)
    others[list(wires)] = False
    rest = bits[:, others] @ (1 << np.arange(others.sum())[::-1]) if others.any() else np.zeros(dim, int)
    same_rest = rest[:, None] == rest[None, :]
    full = gate.matrix[sub[:, None], sub[None, :]]
    return np.where(same_rest, full, 0).astype(complex) if k else np.eye(dim, dtype=complex)


def full_circuit_unitary(gates: Sequence[GateMatrix], n_qubits: int) -> GateMatrix:
    """Brute-force product of embedded gate matrices in application order."""
    if n_qubits > MAX_ORACLE_QUBITS:
        raise ValueError(f"oracle mode supports at most {MAX_ORACLE_QUBITS} qubits")
    u = np.eye(2**n_qubits, dtype=complex)
    for g in gates:
        _check_wires(g.wires, n_qubits)
        u = embed(g, n_qubits) @ u
    return GateMatrix(tuple(range(n_qubits)), u)


# --------------------------------------------------------------------------
# circuit runners
# --------------------------------------------------------------------------


def _param_batch(param, b: int):
    if param is None:
        return None
    a = np.asarray(param, dtype=float)
    return a if a.ndim == 0 else a.reshape(b)


def run_statevector(ops: Sequence[Operation], n: int, batch: int = 1, psi0: np.ndarray | None = None) -> np.ndarray:
    """Simulate ``ops`` on ``batch`` copies of ``|0..0>``; returns (B, 2^n)."""
    if psi0 is None:
        psi = np.zeros((batch, 2**n), dtype=complex)
        psi[:, 0] = 1
    else:
        psi = np.array(psi0, dtype=complex).reshape(batch, 2**n)
    for op in ops:
        _check_wires(op.wires, n)
        u = gate_matrix(op.name, _param_batch(op.param, batch))
        psi = apply_matrix(psi, u, op.wires, n)
    return psi


def run_density(ops: Sequence[Operation], n: int, batch: int = 1, noise_p: float = 0.0) -> np.ndarray:
    """Density-path simulation; depolarizes every touched wire after each gate."""
    if not 0.0 <= noise_p <= 1.0:
        raise ValueError(f"noise probability must lie in [0, 1], got {noise_p}")
    rho = np.zeros((batch, 2**n, 2**n), dtype=complex)
    rho[:, 0, 0] = 1
    for op in ops:
        _check_wires(op.wires, n)
        u = gate_matrix(op.name, _param_batch(op.param, batch))
        rho = apply_matrix_density(rho, u, op.wires, n)
        if noise_p > 0:
            rho = depolarize_batch(rho, noise_p, op.wires, n)
    return rho


@dataclass
class Circuit:
    """Plain container used by drawing and the CLI."""

    n_qubits: int
    operations: list[Operation] = field(default_factory=list)
