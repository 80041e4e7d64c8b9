"""Wall-clock scaling of the expressibility and FCC metrics."""

from __future__ import annotations

import time
from dataclasses import dataclass

import numpy as np

from .fourier import fcc, fingerprint
from .model import EncodingStrategy, Model
from .core import make_rng
from .state_metrics import ExpressibilityConfig, expressibility_kl, sample_thetas


@dataclass(frozen=True)
class BenchConfig:
    qubits: tuple[int, ...] = (2, 3, 4, 5, 6)
    layers: tuple[int, ...] = (1, 3)
    ansatze: tuple[str, ...] = ("NEA", "HEA", "SEA")
    samples: int = 50
    repeats: int = 3
    seed: int = 0

    def __post_init__(self):
        if self.repeats < 1 or self.samples < 2:
            raise ValueError("bench needs repeats >= 1 and samples >= 2")


def _time_expressibility(model: Model, cfg: BenchConfig) -> float:
    t = time.perf_counter()
    expressibility_kl(model, ExpressibilityConfig(cfg.samples, 75, cfg.seed))
    return time.perf_counter() - t


def _time_fcc(model: Model, cfg: BenchConfig) -> float:
    thetas = sample_thetas(model, cfg.samples, make_rng(cfg.seed, "bench", "fcc"))
    t = time.perf_counter()
    fcc(fingerprint(model, thetas))
    return time.perf_counter() - t


METRICS = {"expressibility": _time_expressibility, "fcc": _time_fcc}


def run_bench(cfg: BenchConfig = BenchConfig()) -> list[dict]:
    """Per (metric, n, L): mean and standard error over repeats of the
    ansatz-averaged wall-clock time. Failing points are reported, not fatal."""
    rows = []
    for metric, timer in METRICS.items():
        for n in cfg.qubits:
            for L in cfg.layers:
                row = {"metric": metric, "n_qubits": n, "n_layers": L}
                try:
                    models = [Model(n, L, a, EncodingStrategy("hamming", "RY")) for a in cfg.ansatze]
                    timer(models[0], cfg)  # warm-up
                    times = [float(np.mean([timer(m, cfg) for m in models])) for _ in range(cfg.repeats)]
                    row["mean_s"] = float(np.mean(times))
                    row["stderr_s"] = float(np.std(times, ddof=1) / np.sqrt(len(times))) if len(times) > 1 else 0.0
                except (MemoryError, ValueError) as err:
                    row["error"] = f"{type(err).__name__}: {err}"
                rows.append(row)
    return rows
