"""Pulse-level circuit infidelity versus non-basis gate count across ansätze and depth."""

import argparse
import time

import numpy as np
from scipy.stats import spearmanr

from pulseqml.core import make_rng
from pulseqml.model import Model, init_params
from pulseqml.pulse import CalibrationResult, circuit_infidelity, non_basis_count


def accumulation_grid(cal, ansatze=("C1", "NEA", "HEA", "SEA"), layers=(1, 2, 3, 4), n_qubits=3, seed=0):
    rows = []
    for name in ansatze:
        for L in layers:
            model = Model(n_qubits, L, name)
            rng = make_rng(seed, "infidelity", name, L)
            theta = init_params("uniform", model.param_shape, rng)
            x = rng.uniform(0, 2 * np.pi, size=1)
            ops = model.circuit(x, theta)
            rows.append({
                "ansatz": name,
                "n_layers": L,
                "non_basis": non_basis_count(ops),
                "infidelity": circuit_infidelity(ops, n_qubits, cal),
            })
    return rows


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("calibration")
    ap.add_argument("--qubits", type=int, default=3)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()
    cal = CalibrationResult.load(args.calibration)
    t0 = time.perf_counter()
    rows = accumulation_grid(cal, n_qubits=args.qubits, seed=args.seed)
    for r in rows:
        print(f"{r['ansatz']:<4} L={r['n_layers']}  non-basis={r['non_basis']:3d}  infidelity={r['infidelity']:.3e}")
    rho = spearmanr([r["non_basis"] for r in rows], [r["infidelity"] for r in rows]).statistic
    print(f"spearman={rho:.3f}  ({time.perf_counter() - t0:.1f} s)")


if __name__ == "__main__":
    main()
