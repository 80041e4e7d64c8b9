"""Composed-gate DAG over the pulse-native basis {RX, RY, RZ, CZ}."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np

BASIS_GATES = ("RX", "RY", "RZ", "CZ")
BINDINGS = ("shared", "expanded")

# free pulse parameters per basis leaf
LEAF_PARAMS = {
    "RX": ("A_scale", "sigma", "duration"),
    "RY": ("A_scale", "sigma", "duration"),
    "RZ": ("duration_scale",),
    "CZ": ("duration",),
}


@dataclass(frozen=True)
class Child:
    """One edge: child gate on a subset of the parent's local wires."""

    gate: str
    wires: tuple[int, ...]
    param: Callable[[float | None], float | None] | None = None

    def child_param(self, theta):
        return None if self.param is None else self.param(theta)


def _const(v):
    return lambda _theta: v


def _half(sign):
    return lambda theta: None if theta is None else sign * theta / 2


def _same(theta):
    return theta


def default_edges() -> dict[str, tuple[Child, ...]]:
    return {
        "H": (Child("RZ", (0,), _const(np.pi / 2)), Child("RX", (0,), _const(np.pi / 2)), Child("RZ", (0,), _const(np.pi / 2))),
        "X": (Child("RX", (0,), _const(np.pi)),),
        "CX": (Child("H", (1,)), Child("CZ", (0, 1)), Child("H", (1,))),
        "CRY": (Child("RY", (1,), _half(1)), Child("CX", (0, 1)), Child("RY", (1,), _half(-1)), Child("CX", (0, 1))),
        "CRZ": (Child("RZ", (1,), _half(1)), Child("CX", (0, 1)), Child("RZ", (1,), _half(-1)), Child("CX", (0, 1))),
        "CRX": (Child("H", (1,)), Child("CRZ", (0, 1), _same), Child("H", (1,))),
    }


@dataclass(frozen=True)
class Leaf:
    gate: str
    wires: tuple[int, ...]
    param: float | None
    path: str  # position in the expansion tree, e.g. "1.0" (second child, first grandchild)


@dataclass
class PulseGraph:
    """Parent gate -> ordered children; leaves are the basis gates."""

    edges: dict[str, tuple[Child, ...]] = field(default_factory=default_edges)

    def __post_init__(self):
        self._check_acyclic()

    def nodes(self) -> list[str]:
        return list(BASIS_GATES) + [g for g in self.edges if g not in BASIS_GATES]

    def __contains__(self, gate: str) -> bool:
        return gate in BASIS_GATES or gate in self.edges

    def _check_acyclic(self):
        state: dict[str, int] = {}

        def visit(g):
            if state.get(g) == 1:
                raise ValueError(f"cycle in pulse graph through {g!r}")
            if state.get(g) == 2 or g in BASIS_GATES:
                return
            if g not in self.edges:
                raise ValueError(f"gate {g!r} is neither basis nor composed")
            state[g] = 1
            for c in self.edges[g]:
                visit(c.gate)
            state[g] = 2

        for g in self.edges:
            visit(g)

    def children(self, gate: str) -> tuple[Child, ...]:
        if gate in BASIS_GATES:
            return ()
        try:
            return self.edges[gate]
        except KeyError:
            raise KeyError(f"gate {gate!r} is not in the pulse graph") from None

    def multiplicity(self, gate: str) -> dict[str, int]:
        """How many times each basis leaf occurs in the full expansion."""
        out: dict[str, int] = {}
        for leaf in self.leaves(gate, tuple(range(2 if gate.startswith("C") else 1)), None):
            out[leaf.gate] = out.get(leaf.gate, 0) + 1
        return out

    def leaves(self, gate: str, wires: tuple[int, ...], theta, path: str = "") -> list[Leaf]:
        if gate in BASIS_GATES:
            return [Leaf(gate, tuple(wires), theta, path or "0")]
        if gate not in self.edges:
            raise KeyError(f"gate {gate!r} is not in the pulse graph")
        out: list[Leaf] = []
        for i, child in enumerate(self.edges[gate]):
            cw = tuple(wires[w] for w in child.wires)
            sub = f"{path}.{i}" if path else str(i)
            out.extend(self.leaves(child.gate, cw, child.child_param(theta), sub))
        return out


DEFAULT_GRAPH = PulseGraph()


@dataclass(frozen=True)
class Binding:
    """Leaf sequence of one gate plus the parameter block each leaf reads."""

    gate: str
    leaves: tuple[Leaf, ...]
    blocks: tuple[str, ...]

    @property
    def table(self) -> dict[str, list[int]]:
        out: dict[str, list[int]] = {}
        for i, b in enumerate(self.blocks):
            out.setdefault(b, []).append(i)
        return out


def expand_composed(gate: str, graph: PulseGraph = DEFAULT_GRAPH, binding: str = "shared", wires=None, theta=None) -> Binding:
    """Basis-leaf sequence for ``gate`` in execution order.

    With ``shared`` binding every leaf of the same basis type reads one
    parameter block; with ``expanded`` each leaf instance has its own.
    """
    if binding not in BINDINGS:
        raise ValueError(f"binding must be one of {BINDINGS}")
    if gate not in graph:
        raise KeyError(f"gate {gate!r} is not in the pulse graph")
    if wires is None:
        wires = (0, 1) if gate.startswith("C") else (0,)
    leaves = tuple(graph.leaves(gate, tuple(wires), theta))
    if binding == "shared":
        blocks = tuple(leaf.gate for leaf in leaves)
    else:
        blocks = tuple(f"{gate}/{leaf.path}:{leaf.gate}" for leaf in leaves)
    return Binding(gate, leaves, blocks)


def pulse_param_count(gate: str, binding: str = "shared", graph: PulseGraph = DEFAULT_GRAPH) -> int:
    b = expand_composed(gate, graph, binding)
    first = {}
    for block, leaf in zip(b.blocks, b.leaves):
        first.setdefault(block, leaf.gate)
    return sum(len(LEAF_PARAMS[g]) for g in first.values())
