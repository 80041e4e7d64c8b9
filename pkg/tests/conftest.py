import json
import os
from pathlib import Path

import numpy as np
import pytest
from hypothesis import settings

from pulseqml.core import GATE_ARITY, Operation, is_parametric

settings.register_profile("default", max_examples=40, deadline=None)
settings.load_profile(os.environ.get("HYPOTHESIS_PROFILE", "default"))

CACHE_DIR = Path(__file__).resolve().parent.parent / ".cache"


def random_circuit(rng: np.random.Generator, n: int, depth: int, names=None) -> list[Operation]:
    names = names or [g for g in GATE_ARITY if GATE_ARITY[g] <= n]
    ops = []
    for _ in range(depth):
        name = names[rng.integers(len(names))]
        wires = tuple(int(w) for w in rng.choice(n, size=GATE_ARITY[name], replace=False))
        param = float(rng.uniform(0, 2 * np.pi)) if is_parametric(name) else None
        ops.append(Operation(name, wires, param))
    return ops


def random_state(rng: np.random.Generator, n: int) -> np.ndarray:
    v = rng.normal(size=2**n) + 1j * rng.normal(size=2**n)
    return v / np.linalg.norm(v)


@pytest.fixture(scope="session")
def default_calibration():
    """Default-config QOC calibration, computed once and cached on disk by config hash."""
    from pulseqml.pulse import CalibrationResult
    from pulseqml.qoc import CostSpec, OptimizerConfig, StageConfig, calibrate, config_hash
    from pulseqml.pulse import HamiltonianSpec

    h = HamiltonianSpec()
    key = config_hash(CostSpec(), OptimizerConfig(), StageConfig(), h.to_dict(), "gaussian")
    path = CACHE_DIR / f"calibration-{key}.json"
    if path.exists():
        cal = CalibrationResult.load(path)
        if cal.config_hash == key:
            return cal
    cal, _ = calibrate(seed=0)
    CACHE_DIR.mkdir(exist_ok=True)
    cal.save(path)
    return cal


ACCEPTANCE_LINES: dict[int, str] = {}


def record_criterion(number: int, title: str, ok: bool, detail: str = "") -> None:
    line = f"[{number:>2}] {'PASS' if ok else 'FAIL'}  {title}" + (f"  ({detail})" if detail else "")
    ACCEPTANCE_LINES[number] = line
    print(line)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for k in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(ACCEPTANCE_LINES[k])
