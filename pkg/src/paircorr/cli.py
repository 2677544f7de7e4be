"""Command-line front end. Every run can write a JSON manifest next to its
output; ``paircorr replay`` re-executes one.

Exit codes: 0 ok, 1 internal check failed, 2 bad arguments, 3 guard exceeded.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
import time
from datetime import datetime, timezone

import numpy as np

from . import __version__, circle, dyadic, energy, selberg, variance, verify
from .errors import (CheckFailed, GuardExceeded, MemoryBudgetExceeded, PairCorrError,
                     QuadratureDivergence)
from .parallel import set_default_workers
from .seeding import substream
from .sequences import SequenceSpec, materialize

MANIFEST_V = 1
OPEN_PROBLEMS = {"1": "power:0.5", "2": "n_plus_log_n", "3": "n_log_n"}


class UsageError(Exception):
    pass


def _floats(text: str) -> list[float]:
    try:
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from None


def _ints(text: str) -> list[int]:
    try:
        return [int(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from None


def _csv(header, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([repr(v) if isinstance(v, float) else v for v in row])
    return buf.getvalue()


# --------------------------------------------------------------------------
# subcommands; each returns (text output, results dict)


def cmd_paircorr(a, spec):
    seq = materialize(spec, a.N)
    alphas = a.alpha if a.alpha else list(variance.draw_alphas(a.alpha_sampler, a.alphas, a.seed))
    fn = circle.pair_correlation_brute if a.brute else circle.pair_correlation
    parts = []
    for i, al in enumerate(alphas):
        parts.append(fn(seq, float(al), a.s).to_csv(header=(i == 0)))
    return "".join(parts), {"alphas": [float(v) for v in alphas]}


def cmd_energy(a, spec):
    seq = materialize(spec, a.N)
    rows = []
    for g in a.gamma:
        total = energy.energy_brute(seq, g) if a.brute else energy.energy_fast(
            seq, g, mem_budget=a.mem_budget, chunked=a.chunked)
        triv = energy.trivial_count(seq.N)
        rows.append((seq.N, g, total, triv, total - triv))
    return _csv(["N", "gamma", "total", "trivial", "nontrivial"], rows), {}


def cmd_energy_scan(a, spec):
    seq = materialize(spec, a.N)
    gammas = a.gammas or [2.0 ** -k for k in range(7)]
    curve = energy.gamma_scan(seq, gammas, mem_budget=a.mem_budget, chunked=a.chunked,
                              rng=substream(a.seed, "perturb"))
    pts = [(g, nt) for g, nt in zip(curve.gammas, curve.nontrivial) if nt > 0]
    res = {"perturbed": curve.meta["perturbed"]}
    if len(pts) >= 3:
        res["gamma_slope"] = energy.fit_scaling(pts)[0]
    return curve.to_csv(), res


def cmd_scaling(a, spec):
    rows, perturbed = [], {}
    pert = substream(a.seed, "perturb")
    for N in a.Ns:
        curve = energy.gamma_scan(materialize(spec, N), [a.gamma[0]], mem_budget=a.mem_budget,
                                  chunked=a.chunked, rng=pert)
        rows.append((N, a.gamma[0], curve.totals[0], curve.nontrivial[0]))
        if curve.meta["perturbed"]:
            perturbed[str(N)] = curve.meta["perturbed"]
    slope, intercept, ssr = energy.fit_scaling([(r[0], r[2]) for r in rows])
    return (_csv(["N", "gamma", "total", "nontrivial"], rows),
            {"slope": slope, "intercept": intercept, "residual": ssr, "perturbed": perturbed})


def cmd_dyadic_count(a, spec):
    z = dyadic.abs_differences(materialize(spec, a.N))
    band = tuple(a.band) if a.band else None
    n = dyadic.count_dyadic_brute(z, a.u, band) if a.brute else dyadic.count_dyadic(z, a.u, band)
    return _csv(["N", "u", "count"], [(a.N, a.u, n)]), {"count": n}


def cmd_binning_diag(a, spec):
    seq = materialize(spec, a.N)
    z = dyadic.abs_differences(seq)
    b = dyadic.build_binning(z, seq.N, a.u, a.mode, beta=a.beta, eps=a.eps)
    quad, exact = dyadic.p_norm_quadrature(b)
    sa2 = sum(b.a2.values())
    ub = dyadic.dyadic_upper_bound(b)
    count = dyadic.count_dyadic(z, a.u, (b.z_lo, b.z_hi))
    logs = {
        "bilinear_rel": abs(quad - exact) / exact if exact else 0.0,
        "quad_over_T_sum_a2": quad / (b.T * sa2) if sa2 else 0.0,
        "count_over_upper_bound": count / ub if ub else 0.0,
    }
    if a.capture:
        passed, total, worst = dyadic.capture_rate(b, z)
        logs["capture"] = [passed, total]
        logs["max_constraint_gap_times_T"] = worst
    text = b.dump(max_ratio_logs=logs, p0_chain=dyadic.p0_chain(b, seq)) + "\n"
    return text, logs


def cmd_selberg_check(a, spec):
    rows, bad = [], 0
    for K in a.K:
        for s in a.s:
            for N in a.Ns:
                for sign in ("plus", "minus"):
                    rep = selberg.check_selberg(selberg.build_selberg(K, s, N, sign, check=False))
                    bad += not rep["ok"]
                    rows.append((K, s, N, sign, rep["sandwich_slack"], rep["mean_error"],
                                 rep["min_coeff_defect"], int(rep["ok"])))
    text = _csv(["K", "s", "N", "sign", "sandwich_slack", "mean_error", "min_coeff_defect", "ok"], rows)
    if bad:
        raise CheckFailed(f"{bad} Selberg polynomials failed their contracts")
    return text, {"checked": len(rows)}


def _poly(a, N):
    return selberg.build_selberg(a.r * N, a.s[0], N, a.sign)


def cmd_expectation(a, spec):
    seq = materialize(spec, a.N)
    rep = variance.expectation_mu(seq, _poly(a, seq.N), quad_nodes=a.quad_nodes, method=a.method)
    return rep.to_json() + "\n", {"diff": rep.diff}


def cmd_variance(a, spec):
    seq = materialize(spec, a.N)
    p = selberg.center(_poly(a, seq.N))
    rep = variance.variance_mc(seq, p, a.samples, a.seed)
    return rep.to_json() + "\n", {"variance": rep.variance_estimate, "se": rep.mc_std_error}


def cmd_converge(a, spec):
    table = variance.convergence_experiment(spec, a.s, a.Ns, a.alpha_sampler, a.seed, n_alphas=a.alphas)
    return table.summary_csv(), {"rows": len(table.rows)}


def cmd_verify(a, spec):
    checks = verify.run_suites(a.suite, a.seed)
    text = "".join(c.line() + "\n" for c in checks)
    failed = [c for c in checks if not c.ok and not c.info]
    if failed:
        sys.stdout.write(text)
        raise CheckFailed(f"{len(failed)} invariant checks failed")
    return text, {"checks": len(checks), "info": [c.line() for c in checks if c.info]}


def _resolve_spec(a):
    preset = getattr(a, "preset", None)
    if preset:
        kind, _, arg = preset.partition(":")
        if kind == "thm3":
            return SequenceSpec.parse(f"power:{arg or '1.5'}")
        if kind == "open-problem" and arg in OPEN_PROBLEMS:
            return SequenceSpec.parse(OPEN_PROBLEMS[arg])
        raise UsageError(f"unknown preset {preset!r}")
    if getattr(a, "seq", None) is None:
        return None
    return SequenceSpec.parse(a.seq)


# --------------------------------------------------------------------------
# parser


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--out", help="output file (default: stdout)")
    common.add_argument("--manifest", help="manifest path (default: <out>.manifest.json when --out is given)")
    common.add_argument("--threads", type=int, default=1)
    common.add_argument("--mem-budget", type=int, default=None, help="bytes before energy goes out of core")
    common.add_argument("--chunked", action="store_true", default=None, help="force the out-of-core energy path")

    seqp = argparse.ArgumentParser(add_help=False)
    seqp.add_argument("--seq", default="power:1.5", help="power:1.5, poly:0,1,1, lacunary:2, n_log_n, file:path ...")
    seqp.add_argument("--N", type=int, default=1000)

    polyp = argparse.ArgumentParser(add_help=False)
    polyp.add_argument("--r", type=int, default=1, choices=[1, 2, 4])
    polyp.add_argument("--s", type=_floats, default=[1.0])
    polyp.add_argument("--sign", choices=["plus", "minus"], default="plus")

    p = argparse.ArgumentParser(prog="paircorr", description="Pair correlation and additive energy toolkit.")
    p.add_argument("--version", action="version", version=f"paircorr {__version__}")
    sub = p.add_subparsers(dest="command", required=True)

    sp = sub.add_parser("paircorr", parents=[common, seqp], help="R2(s) for sampled or given alphas")
    sp.add_argument("--alpha", type=_floats, help="explicit alphas (overrides the sampler)")
    sp.add_argument("--alpha-sampler", default="uniform:1:2")
    sp.add_argument("--alphas", type=int, default=1)
    sp.add_argument("--s", type=_floats, default=[1.0])
    sp.add_argument("--brute", action="store_true")
    sp.set_defaults(fn=cmd_paircorr)

    sp = sub.add_parser("energy", parents=[common, seqp], help="E*_{N,gamma}")
    sp.add_argument("--gamma", type=_floats, default=[1.0])
    sp.add_argument("--brute", action="store_true")
    sp.set_defaults(fn=cmd_energy)

    sp = sub.add_parser("energy-scan", parents=[common, seqp], help="energy over a gamma grid")
    sp.add_argument("--gammas", type=_floats, default=None)
    sp.set_defaults(fn=cmd_energy_scan)

    sp = sub.add_parser("scaling", parents=[common, seqp], help="energy over N with a log-log fit")
    sp.add_argument("--Ns", type=_ints, default=[250, 500, 1000, 2000, 4000])
    sp.add_argument("--gamma", type=_floats, default=[1.0])
    sp.set_defaults(fn=cmd_scaling)

    sp = sub.add_parser("dyadic-count", parents=[common, seqp], help="dyadic solution count")
    sp.add_argument("--u", type=int, default=1)
    sp.add_argument("--band", type=_floats, default=None, help="lo,hi")
    sp.add_argument("--brute", action="store_true")
    sp.set_defaults(fn=cmd_dyadic_count)

    sp = sub.add_parser("binning-diag", parents=[common, seqp], help="geometric binning diagnostics (JSON)")
    sp.add_argument("--u", type=int, default=1)
    sp.add_argument("--mode", choices=["case1", "case2", "thm2"], default="case2")
    sp.add_argument("--beta", type=float, default=None)
    sp.add_argument("--eps", type=float, default=None)
    sp.add_argument("--capture", action="store_true", help="also enumerate solutions and test the bin constraint")
    sp.set_defaults(fn=cmd_binning_diag)

    sp = sub.add_parser("selberg-check", parents=[common], help="Selberg polynomial contracts")
    sp.add_argument("--K", type=_ints, default=[10, 100, 1000])
    sp.add_argument("--s", type=_floats, default=[0.5, 1.0, 3.0])
    sp.add_argument("--Ns", type=_ints, default=[10, 100])
    sp.set_defaults(fn=cmd_selberg_check)

    sp = sub.add_parser("expectation", parents=[common, seqp, polyp], help="mu-expectation of the pair sum")
    sp.add_argument("--method", choices=["auto", "spectral", "quadrature", "periodic"], default="auto")
    sp.add_argument("--quad-nodes", type=int, default=16)
    sp.set_defaults(fn=cmd_expectation)

    sp = sub.add_parser("variance", parents=[common, seqp, polyp], help="Monte Carlo variance of the pair sum")
    sp.add_argument("--samples", type=int, default=2000)
    sp.set_defaults(fn=cmd_variance)

    sp = sub.add_parser("converge", parents=[common, seqp], help="R2(s) deviation over N")
    sp.add_argument("--preset", help="thm3:THETA or open-problem:1|2|3")
    sp.add_argument("--Ns", type=_ints, default=[1000, 5000, 20000])
    sp.add_argument("--s", type=_floats, default=[0.5, 1.0, 2.0])
    sp.add_argument("--alpha-sampler", default="uniform:1:2")
    sp.add_argument("--alphas", type=int, default=10)
    sp.set_defaults(fn=cmd_converge)

    sp = sub.add_parser("verify", parents=[common], help="run invariant suites")
    sp.add_argument("--suite", nargs="+", default=["all"], choices=["all", *verify.SUITES])
    sp.set_defaults(fn=cmd_verify)

    sp = sub.add_parser("replay", help="re-run a manifest")
    sp.add_argument("manifest")
    sp.add_argument("--threads", type=int, default=None)
    sp.add_argument("--out", default=None)
    sp.set_defaults(fn=None)
    return p


_RUN_ONLY = {"--threads", "--out", "--manifest"}


def _strip_run_flags(argv):
    """argv without the flags that do not affect results."""
    out, skip = [], False
    for tok in argv:
        if skip:
            skip = False
            continue
        key = tok.split("=", 1)[0]
        if key in _RUN_ONLY:
            skip = "=" not in tok
            continue
        out.append(tok)
    return out


def _now():
    return datetime.now(timezone.utc).isoformat()


def _replay_argv(a):
    with open(a.manifest) as fh:
        m = json.load(fh)
    if m.get("manifest_v") != MANIFEST_V:
        raise UsageError(f"unsupported manifest version {m.get('manifest_v')!r}")
    argv = list(m["argv"])
    if a.threads is not None:
        argv += ["--threads", str(a.threads)]
    if a.out is not None:
        argv += ["--out", a.out]
    return argv


def _execute(argv):
    parser = build_parser()
    a = parser.parse_args(argv)
    if a.command == "replay":
        return _execute(_replay_argv(a))
    if a.threads < 1:
        raise UsageError("--threads must be >= 1")
    set_default_workers(a.threads)
    spec = _resolve_spec(a)
    started = _now()
    t0 = time.perf_counter()
    text, results = a.fn(a, spec)
    outputs = []
    if a.out:
        with open(a.out, "w", newline="") as fh:
            fh.write(text)
        outputs.append(a.out)
    else:
        sys.stdout.write(text)
    mpath = a.manifest or (a.out + ".manifest.json" if a.out else None)
    if mpath:
        params = {k: v for k, v in vars(a).items()
                  if k not in ("fn", "command", "seed", "out", "manifest", "threads", "seq")}
        manifest = {
            "manifest_v": MANIFEST_V,
            "tool_version": __version__,
            "command": a.command,
            "argv": _strip_run_flags(argv),
            "spec": spec.to_dict() if spec is not None else None,
            "params": params,
            "seed": a.seed,
            "threads": a.threads,
            "started": started,
            "finished": _now(),
            "elapsed_s": time.perf_counter() - t0,
            "outputs": outputs,
            "results": results,
        }
        with open(mpath, "w") as fh:
            json.dump(manifest, fh, indent=2, sort_keys=True, default=_jsonable)
            fh.write("\n")
    return 0


def _jsonable(v):
    if isinstance(v, (np.integer,)):
        return int(v)
    if isinstance(v, (np.floating,)):
        return float(v)
    if isinstance(v, float) and not math.isfinite(v):
        return None
    return str(v)


def run(argv=None) -> int:
    """Execute one command; returns the process exit code."""
    argv = list(sys.argv[1:] if argv is None else argv)
    try:
        return _execute(argv)
    except SystemExit as exc:  # argparse: 2 on bad usage, 0 on --help
        return int(exc.code or 0)
    except (GuardExceeded, MemoryBudgetExceeded) as exc:
        print(f"paircorr: guard exceeded: {exc}", file=sys.stderr)
        return 3
    except (CheckFailed, QuadratureDivergence) as exc:
        print(f"paircorr: check failed: {exc}", file=sys.stderr)
        return 1
    except (UsageError, PairCorrError, ValueError, OSError) as exc:
        print(f"paircorr: {exc}", file=sys.stderr)
        return 2


def main():
    sys.exit(run())
