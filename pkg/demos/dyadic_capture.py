"""How often the 4/T bin constraint actually catches a dyadic solution.

For each mode the script bins the absolute differences of n^1.5, lists the
brute solutions of |j1 z_m - j2 z_n| < 1 and reports the share whose bins
pass the constraint, together with T times the worst gap seen.

    python3 demos/dyadic_capture.py
"""

from paircorr import dyadic
from paircorr.sequences import SequenceSpec, materialize

MODES = [("case1", {"eps": 0.1}), ("case2", {"beta": 0.5}), ("thm2", {"beta": 0.5, "eps": 0.1})]

if __name__ == "__main__":
    for N in (12, 20, 28):
        seq = materialize(SequenceSpec.power(1.5), N)
        z = dyadic.abs_differences(seq)
        for u in (1, 2, 3):
            for mode, kw in MODES:
                b = dyadic.build_binning(z, N, u, mode, **kw)
                passed, total, worst = dyadic.capture_rate(b, z)
                if total:
                    print(f"N={N:2d} u={u} {mode:5s} T={b.T:8.1f} captured {passed:5d}/{total:<5d} "
                          f"worst T*gap {worst:6.3f}")
