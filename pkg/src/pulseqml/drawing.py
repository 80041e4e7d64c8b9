"""Fixed-width text drawings of circuits."""

from __future__ import annotations

from typing import Sequence

from .core import Circuit, Operation

_TARGET = {"CX": "X", "CZ": "●"}


def _box(op: Operation, name: str) -> str:
    if op.label is not None:
        return f"{name}({op.label})"
    if op.param is not None:
        try:
            return f"{name}({float(op.param):.2f})"
        except TypeError:
            return f"{name}(·)"
    return name


def _columns(ops: Sequence[Operation], n: int) -> list[list[Operation]]:
    # an op goes into the first column after every column touching its span
    level = [0] * n
    columns: list[list[Operation]] = []
    for op in ops:
        lo, hi = min(op.wires), max(op.wires)
        c = max(level[lo : hi + 1])
        if c == len(columns):
            columns.append([])
        columns[c].append(op)
        for w in range(lo, hi + 1):
            level[w] = c + 1
    return columns


def draw_text(circuit: Circuit | Sequence[Operation], n_qubits: int | None = None) -> str:
    """Render a circuit as one text row per wire.

    Two-qubit gates mark the control with ``●`` and join the rows with a
    vertical connector.
    """
    if isinstance(circuit, Circuit):
        ops, n = circuit.operations, circuit.n_qubits
    else:
        ops, n = list(circuit), n_qubits
    if n is None:
        n = 1 + max((max(op.wires) for op in ops), default=0)

    prefix = [f"q{q}: " for q in range(n)]
    width0 = max(len(p) for p in prefix)
    rows = [p.ljust(width0) + "─" for p in prefix]
    for column in _columns(ops, n):
        cells = {}
        for op in column:
            if len(op.wires) == 1:
                cells[op.wires[0]] = _box(op, op.name)
                continue
            c, t = op.wires
            cells[c] = "●"
            cells[t] = _TARGET.get(op.name) or _box(op, op.name[1:])
            for w in range(min(c, t) + 1, max(c, t)):
                cells[w] = "┼"
        width = max(len(s) for s in cells.values())
        for q in range(n):
            cell = cells.get(q, "")
            fill = "─" * (width - len(cell))
            left = fill[: len(fill) // 2]
            right = fill[len(fill) // 2 :]
            rows[q] += "─" + left + cell + right + "─"
    return "\n".join(r + "─" for r in rows)
