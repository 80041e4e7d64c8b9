"""Entangling capability with and without depolarizing noise, per measure and ansatz."""

import argparse

from pulseqml.model import Model
from pulseqml.state_metrics import EntanglementConfig, entangling_capability


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--qubits", type=int, default=4)
    ap.add_argument("--layers", type=int, default=1)
    ap.add_argument("--samples", type=int, default=200)
    ap.add_argument("--noise", type=float, default=0.01)
    ap.add_argument("--ansatze", nargs="+", default=["NEA", "HEA", "SEA"])
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()
    print(f"{'ansatz':<6} {'measure':<7} {'clean':>8} {'noisy':>8}")
    for name in args.ansatze:
        m = Model(args.qubits, args.layers, name)
        for measure in ("mw", "bm", "ef", "ce"):
            clean = entangling_capability(m, EntanglementConfig(measure, args.samples, seed=args.seed))[0]
            # MW is only defined on pure states
            noisy = "" if measure == "mw" else f"{entangling_capability(m, EntanglementConfig(measure, args.samples, noise_p=args.noise, seed=args.seed))[0]:8.4f}"
            print(f"{name:<6} {measure:<7} {clean:8.4f} {noisy:>8}")


if __name__ == "__main__":
    main()
