"""Composable ansätze: blocks of gates laid out on a topology."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from importlib import resources
from typing import Sequence

import numpy as np

from .core import GATE_ARITY, GateMatrix, Operation, is_parametric

SINGLE_QUBIT_GATES = {"RX", "RY", "RZ", "H", "X"}
ENTANGLERS = {"CZ", "CX", "CRX", "CRY", "CRZ"}
RESERVED_NAMES = {"C20"}


class UnknownAnsatzError(KeyError):
    pass


def resolve_topology(kind: str, n_qubits: int, pairs: Sequence[tuple[int, int]] | None = None) -> list[tuple[int, int]]:
    """Ordered (control, target) pairs for a named topology."""
    n = n_qubits
    if kind == "custom":
        if pairs is None:
            raise ValueError("custom topology needs explicit pairs")
        out = [(int(a), int(b)) for a, b in pairs]
        for a, b in out:
            if a == b or not (0 <= a < n and 0 <= b < n):
                raise ValueError(f"invalid pair {(a, b)} for {n} qubits")
        return out
    if n < 2:
        raise ValueError(f"topology {kind!r} needs at least 2 qubits, got {n}")
    if kind == "linear":
        return [(i, i + 1) for i in range(n - 1)]
    if kind == "linear_reverse":
        return [(i + 1, i) for i in reversed(range(n - 1))]
    if kind == "ring":
        return [(i, i + 1) for i in range(n - 1)] + [(n - 1, 0)]
    if kind == "ring_reverse":
        return [(i, (i + 1) % n) for i in [n - 1] + list(range(n - 1))][::-1]
    if kind == "ring_skip":
        return [(i, (i - 1) % n) for i in [n - 1] + list(range(n - 1))]
    if kind == "all_to_all":
        return [(i, j) for i in range(n) for j in range(i + 1, n)]
    if kind == "all_ordered":
        return [(i, j) for i in reversed(range(n)) for j in reversed(range(n)) if i != j]
    if kind == "pairs_even":
        return [(i + 1, i) for i in range(0, n - 1, 2)]
    if kind == "pairs_odd":
        return [(i + 1, i) for i in range(1, n - 1, 2)]
    raise ValueError(f"unknown topology {kind!r}")


@dataclass(frozen=True)
class Topology:
    kind: str = "linear"
    pairs: tuple[tuple[int, int], ...] | None = None

    def resolve(self, n_qubits: int) -> list[tuple[int, int]]:
        return resolve_topology(self.kind, n_qubits, self.pairs)


@dataclass(frozen=True)
class Block:
    """Single-qubit gate columns followed by an optional entangler layer.

    ``qubits`` restricts the single-qubit columns: ``"all"`` (default),
    ``"inner"`` (all but the first and last wire) or an explicit list.
    """

    gates: tuple[str, ...] = ()
    entangler: str | None = None
    topology: Topology = field(default_factory=Topology)
    qubits: object = "all"

    def __post_init__(self):
        object.__setattr__(self, "gates", tuple(g.upper() for g in self.gates))
        for g in self.gates:
            if g not in SINGLE_QUBIT_GATES:
                raise ValueError(f"unsupported single-qubit gate {g!r}")
        if self.entangler is not None:
            ent = self.entangler.upper()
            if ent not in ENTANGLERS:
                raise ValueError(f"unsupported entangler {self.entangler!r}")
            object.__setattr__(self, "entangler", ent)

    def wires(self, n: int) -> list[int]:
        if self.qubits == "all":
            return list(range(n))
        if self.qubits == "inner":
            return list(range(1, n - 1))
        return [int(q) for q in self.qubits if int(q) < n]

    def pairs(self, n: int) -> list[tuple[int, int]]:
        if self.entangler is None:
            return []
        if n < 2 and self.topology.kind != "custom":
            return []
        return self.topology.resolve(n)

    def n_params(self, n: int) -> int:
        k = sum(1 for g in self.gates if is_parametric(g)) * len(self.wires(n))
        if self.entangler is not None and is_parametric(self.entangler):
            k += len(self.pairs(n))
        return k

    @classmethod
    def from_dict(cls, d: dict) -> "Block":
        topo = d.get("topology", "linear")
        if isinstance(topo, dict):
            pairs = topo.get("pairs")
            topo = Topology(topo.get("kind", "custom"), tuple(map(tuple, pairs)) if pairs else None)
        else:
            topo = Topology(topo)
        return cls(tuple(d.get("gates", ())), d.get("entangler"), topo, d.get("qubits", "all"))


@dataclass(frozen=True)
class Ansatz:
    name: str
    blocks: tuple[Block, ...]

    def params_per_layer(self, n_qubits: int) -> int:
        return sum(b.n_params(n_qubits) for b in self.blocks)

    def layer_operations(self, n_qubits: int, params=None, layer: int = 0) -> list[Operation]:
        """Operations of one variational layer.

        ``params`` has ``K`` entries on its last axis (or is ``None`` for a
        symbolic layer); a batched ``(..., K)`` array yields batched ops.
        Labels are global parameter indices ``layer * K + k``.
        """
        k_total = self.params_per_layer(n_qubits)
        if params is not None:
            params = np.asarray(params, dtype=float)
            if params.shape[-1] != k_total:
                raise ValueError(f"{self.name} needs {k_total} parameters per layer on {n_qubits} qubits, got {params.shape[-1]}")
        ops: list[Operation] = []
        k = 0

        def take():
            nonlocal k
            idx = k
            k += 1
            value = None if params is None else params[..., idx]
            return value, f"θ{layer * k_total + idx}"

        for block in self.blocks:
            for q in block.wires(n_qubits):
                for g in block.gates:
                    if is_parametric(g):
                        value, label = take()
                        ops.append(Operation(g, (q,), value, label))
                    else:
                        ops.append(Operation(g, (q,)))
            for c, t in block.pairs(n_qubits):
                if is_parametric(block.entangler):
                    value, label = take()
                    ops.append(Operation(block.entangler, (c, t), value, label))
                else:
                    ops.append(Operation(block.entangler, (c, t)))
        return ops

    def to_dict(self) -> list[dict]:
        out = []
        for b in self.blocks:
            d = {"gates": list(b.gates)}
            if b.entangler:
                d["entangler"] = b.entangler
                if b.topology.kind == "custom":
                    d["topology"] = {"kind": "custom", "pairs": [list(p) for p in b.topology.pairs]}
                else:
                    d["topology"] = b.topology.kind
            if b.qubits != "all":
                d["qubits"] = b.qubits
            out.append(d)
        return out


def ansatz_from_blocks(name: str, blocks: Sequence[dict]) -> Ansatz:
    """Build an ansatz from a JSON-style list of ``{gates, entangler, topology}``."""
    return Ansatz(name, tuple(Block.from_dict(b) for b in blocks))


class AnsatzRegistry:
    """Name -> ansatz lookup. Immutable once built; extend via :meth:`with_ansatz`."""

    def __init__(self, table: dict[str, Ansatz]):
        self._table = dict(table)

    @classmethod
    def builtin(cls) -> "AnsatzRegistry":
        raw = json.loads(resources.files("pulseqml").joinpath("data/ansatze.json").read_text())
        return cls({name: ansatz_from_blocks(name, blocks) for name, blocks in raw.items()})

    def names(self) -> list[str]:
        return list(self._table)

    def __contains__(self, name: str) -> bool:
        return name.upper() in self._table

    def get(self, name: str) -> Ansatz:
        key = name.upper()
        if key in RESERVED_NAMES:
            raise UnknownAnsatzError(f"ansatz name {name!r} is reserved but has no definition")
        try:
            return self._table[key]
        except KeyError:
            raise UnknownAnsatzError(f"unknown ansatz {name!r}") from None

    def with_ansatz(self, ansatz: Ansatz) -> "AnsatzRegistry":
        table = dict(self._table)
        table[ansatz.name.upper()] = ansatz
        return AnsatzRegistry(table)


REGISTRY = AnsatzRegistry.builtin()


def get_ansatz(name_or_ansatz) -> Ansatz:
    if isinstance(name_or_ansatz, Ansatz):
        return name_or_ansatz
    return REGISTRY.get(name_or_ansatz)


def instantiate_ansatz(name, n_qubits: int, layer_params) -> list[GateMatrix]:
    """Gate sequence realizing one variational layer."""
    ansatz = get_ansatz(name)
    params = np.asarray(layer_params, dtype=float).reshape(-1)
    return [op.gate() for op in ansatz.layer_operations(n_qubits, params)]


def param_shape(name, n_qubits: int, n_layers: int) -> tuple[int, int]:
    if n_qubits < 1 or n_layers < 1:
        raise ValueError("n_qubits and n_layers must be >= 1")
    return (n_layers + 1, get_ansatz(name).params_per_layer(n_qubits))


def count_gates(ops: Sequence[Operation], names: set[str] | None = None) -> int:
    if names is None:
        return len(ops)
    return sum(1 for op in ops if op.name in names)


def validate_arity(ops: Sequence[Operation]) -> None:
    for op in ops:
        if GATE_ARITY[op.name] != len(op.wires):
            raise ValueError(f"{op.name} acts on {GATE_ARITY[op.name]} wire(s), got {op.wires}")
