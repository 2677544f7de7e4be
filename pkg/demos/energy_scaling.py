"""Additive energy of n^theta against the N^(4 - theta) prediction.

Counts E*_{N,1} for a few N, subtracts the 2N^2 - N trivial solutions and
fits a slope in log-log space.

    python3 demos/energy_scaling.py
"""

from paircorr.energy import fit_scaling, gamma_scan
from paircorr.sequences import SequenceSpec, materialize

NS = [250, 500, 1000, 2000]

if __name__ == "__main__":
    for theta in (1.5, 1.8):
        pts = []
        for N in NS:
            curve = gamma_scan(materialize(SequenceSpec.power(theta), N), [1.0])
            pts.append((N, curve.totals[0]))
            print(f"theta={theta} N={N:5d} total={curve.totals[0]:>12d} nontrivial={curve.nontrivial[0]:>12d}")
        slope, _, _ = fit_scaling(pts)
        print(f"  fitted slope {slope:.3f}, predicted {4 - theta:.2f}\n")

    # halving gamma roughly halves the nontrivial part
    seq = materialize(SequenceSpec.power(1.5), 2000)
    curve = gamma_scan(seq, [2.0 ** -k for k in range(7)])
    for g, nt in zip(curve.gammas, curve.nontrivial):
        print(f"gamma={g:<9g} nontrivial={nt}")
