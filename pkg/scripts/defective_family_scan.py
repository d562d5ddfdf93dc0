#!/usr/bin/env python3
"""Trace the defective one-parameter family: clustered companion eigenvalues,
the polynomial-exponential edge state, and the index by both routes.

This family's zero-energy companion matrix has a repeated defective eigenvalue
at -exp(-i theta)/2, so its edge state is not a combination of exponentials;
both counting routes must still give edge index +1 for every theta.

Usage: python scripts/defective_family_scan.py [--points 17]
"""

import argparse

import numpy as np

from chiraledge.companion import build_companion, decay_rate, propagate, spectral_split
from chiraledge.fixtures import defective
from chiraledge.halfspace import edge_modes_companion, edge_modes_truncated
from chiraledge.winding import full_winding


def run() -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--points", type=int, default=17)
    args = parser.parse_args()

    print(f"{'theta':>8} {'inner eig':>22} {'mult':>4} {'rate':>6} {'W':>3} {'trunc':>6} {'comp':>6}")
    ok = True
    for theta in np.linspace(-np.pi, np.pi, args.points):
        cm = defective(float(theta))
        comp = build_companion(cm.base, 0.0)
        split = spectral_split(comp)
        inner = min(split.eigenvalues, key=lambda c: abs(c[0]))
        mode = propagate(comp, [0, 0, 1, 0], steps=30, first_cell=0)
        rate = decay_rate(mode)
        winding = full_winding(cm).winding
        trunc = edge_modes_truncated(cm).edge_index
        companion = edge_modes_companion(cm).edge_index
        ok = ok and winding == trunc == companion == 1
        print(
            f"{theta:>8.3f} {inner[0].real:>10.6f}{inner[0].imag:>+10.6f}j {inner[1]:>4}"
            f" {rate:>6.3f} {winding:>3} {trunc:>6} {companion:>6}"
        )
    print("all theta give index +1 by both routes" if ok else "MISMATCH found")
    return 0 if ok else 1


if __name__ == "__main__":
    raise SystemExit(run())
