"""Watch R2(s) settle near 2s for x_n = n^1.5 while x_n = n never does.

    python3 demos/pair_correlation_tour.py
"""

from paircorr.sequences import SequenceSpec
from paircorr.variance import convergence_experiment

S = [0.5, 1.0, 2.0]
NS = [1000, 4000, 16000, 64000]


def show(title, spec):
    table = convergence_experiment(spec, S, NS, "uniform:1:2", seed=2024, n_alphas=8)
    print(title)
    print(f"  {'N':>6}  " + "  ".join(f"dev(s={s:g})" for s in S))
    for N in NS:
        devs = "  ".join(f"{table.mean_deviation(N, s):10.4f}" for s in S)
        print(f"  {N:>6}  {devs}")


if __name__ == "__main__":
    show("x_n = n^1.5 (mean |R2/2s - 1| over 8 alphas)", SequenceSpec.power(1.5))
    show("x_n = n (three-gap structure, no convergence)", SequenceSpec.power(1))
