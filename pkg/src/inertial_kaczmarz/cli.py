"""Command-line entry point: ``kaczmarz {gen,solve,bounds,bench,sweep}``.

Exit codes: 0 success (``solve``: converged), 1 error, 2 usage error or, for
``solve``, iteration budget exhausted.
"""
from __future__ import annotations

import argparse
import csv
import io
import os
import sys
from pathlib import Path

from . import bench as bench_mod
from . import problems
from .errors import KaczmarzError
from .sampling import DEFAULT_SEED
from .solvers import SolverKind, StopRule, run
from .spectral import compute_profile, improvement_condition, rate_bounds

EXIT_OK, EXIT_ERROR, EXIT_BUDGET = 0, 1, 2
SEED_ENV = "KACZMARZ_SEED"


def _default_seed() -> int:
    raw = os.environ.get(SEED_ENV)
    if raw is None or not raw.strip():
        return DEFAULT_SEED
    try:
        return int(raw, 0)
    except ValueError:
        raise SystemExit(f"error: {SEED_ENV}={raw!r} is not an integer") from None


def _c_value(text: str) -> float:
    try:
        c = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a number: {text!r}") from None
    if not c < 1.0:
        raise argparse.ArgumentTypeError(f"c must be < 1, got {c}")
    return c


def _positive_int(text: str) -> int:
    try:
        n = int(float(text)) if "e" in text.lower() else int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not an integer: {text!r}") from None
    if n < 1:
        raise argparse.ArgumentTypeError(f"must be >= 1, got {n}")
    return n


def _positive_float(text: str) -> float:
    try:
        v = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a number: {text!r}") from None
    if not v > 0:
        raise argparse.ArgumentTypeError(f"must be > 0, got {v}")
    return v


def _algos(text: str) -> tuple:
    try:
        return tuple(SolverKind.parse(t.strip()) for t in text.split(",") if t.strip())
    except ValueError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from None


def build_parser(seed_default: int = DEFAULT_SEED) -> argparse.ArgumentParser:
    fmt = argparse.ArgumentDefaultsHelpFormatter
    p = argparse.ArgumentParser(prog="kaczmarz", description=__doc__.splitlines()[0], formatter_class=fmt)
    sub = p.add_subparsers(dest="command", required=True, metavar="COMMAND")

    g = sub.add_parser("gen", help="generate a random consistent system", formatter_class=fmt)
    g.add_argument("--rows", type=_positive_int, required=True, help="number of equations I")
    g.add_argument("--cols", type=_positive_int, required=True, help="number of unknowns J")
    g.add_argument("--c", type=_c_value, required=True, help="entries are uniform on [c, 1]")
    g.add_argument("--seed", type=int, default=seed_default, help=f"generator seed (env {SEED_ENV})")
    g.add_argument("--raw", action="store_true", help="skip row standardization")
    g.add_argument("--out", required=True, help="output prefix; writes <out>.manifest and four data files")

    s = sub.add_parser("solve", help="solve a saved system with one algorithm", formatter_class=fmt)
    s.add_argument("--problem", required=True, help="instance prefix or manifest path")
    s.add_argument("--algo", type=SolverKind.parse, required=True, choices=list(SolverKind),
                   metavar="{rk,tsk,airk,mirk}", help="algorithm to run")
    s.add_argument("--seed", type=int, default=seed_default, help=f"sampling seed (env {SEED_ENV})")
    s.add_argument("--diag", action="store_true", help="record per-step diagnostics (slower)")
    s.add_argument("--rse-tol", type=_positive_float, default=1e-6, help="stop when the relative error is below this")
    s.add_argument("--max-iters", type=_positive_int, default=10_000_000, help="iteration budget")
    s.add_argument("--residual-stop", action="store_true",
                   help="stop on ||Ax-b||/||b|| instead of the relative solution error")
    s.add_argument("--trace-out", default=None, help="write the per-iteration trace CSV here")

    b = sub.add_parser("bounds", help="print spectral constants and rate bounds", formatter_class=fmt)
    b.add_argument("--problem", required=True, help="instance prefix or manifest path")
    b.add_argument("--csv", action="store_true", help="emit one CSV header and one row")

    for name, helptext in (("bench", "repeat trials and report mean IT, CPU and speed-up"),
                           ("sweep", "run the benchmark across values of c, I or J")):
        q = sub.add_parser(name, help=helptext, formatter_class=fmt)
        q.add_argument("--problem", default=None, help="saved instance (bench only); overrides the generator flags")
        q.add_argument("--rows", type=_positive_int, default=100, help="equations I of the generated instance")
        q.add_argument("--cols", type=_positive_int, default=300, help="unknowns J of the generated instance")
        q.add_argument("--c", type=_c_value, default=0.9, help="entries are uniform on [c, 1]")
        q.add_argument("--gen-seed", type=int, default=DEFAULT_SEED, help="seed of the generated instance")
        q.add_argument("--raw", action="store_true", help="skip row standardization")
        q.add_argument("--algos", type=_algos, default="tsk,mirk", help="comma-separated algorithms")
        q.add_argument("--trials", type=_positive_int, default=50, help="runs per algorithm")
        q.add_argument("--rse-tol", type=_positive_float, default=1e-6, help="relative error stop")
        q.add_argument("--max-iters", type=_positive_int, default=10_000_000, help="iteration budget per run")
        q.add_argument("--seed", type=int, default=seed_default, help=f"base seed of the trials (env {SEED_ENV})")
        q.add_argument("--parallel", action="store_true", help="run trials on a thread pool")
        q.add_argument("--out", default=None, help="summary CSV path")
        if name == "bench":
            q.add_argument("--trials-out", default=None, help="per-trial CSV path")
            q.add_argument("--trace-out", default=None, help="per-iteration trace CSV path")
        else:
            q.add_argument("--param", choices=sorted(bench_mod.SWEEP_PARAMS), required=True, help="parameter to vary")
            q.add_argument("--values", required=True, help="comma-separated values")
    return p


def _write(path, text: str) -> None:
    Path(path).write_text(text, encoding="utf-8", newline="\n")


def cmd_gen(a) -> int:
    spec = problems.GenSpec(a.rows, a.cols, a.c, a.seed, standardize=not a.raw)
    inst = problems.generate(spec)
    mpath = problems.save(inst, a.out)
    print(f"wrote {mpath} (checksum {problems.checksum(inst)})")
    return EXIT_OK


def cmd_solve(a) -> int:
    inst = problems.load(a.problem)
    stop = StopRule(rse_tol=a.rse_tol, max_iters=a.max_iters, reference=None if a.residual_stop else inst.x_dag,
                    use_residual=a.residual_stop)
    tr = run(a.algo, inst.A, inst.b, stop=stop, seed=a.seed, diagnostics=a.diag)
    if a.trace_out:
        _write(a.trace_out, tr.to_csv())
    print(f"algorithm: {tr.kind.value}")
    print(f"status: {tr.status}")
    print(f"iterations: {tr.iterations}")
    print(f"{tr.metric}: {float(tr.values[-1]):.6g}")
    print(f"seconds: {tr.cpu_seconds:.6g}")
    if a.diag:
        worst = max((v for d in tr.diagnostics for v in d.identity_residuals.values()), default=0.0)
        print(f"max_identity_residual: {worst:.3e}")
        print(f"fallbacks: {tr.fallbacks}")
    if tr.status == "converged":
        return EXIT_OK
    return EXIT_BUDGET if tr.status == "max-iters" else EXIT_ERROR


def bounds_fields(inst) -> dict:
    prof = compute_profile(inst.A)
    rates = rate_bounds(prof)
    out = dict(prof.as_dict())
    out.update(rates.as_dict())
    cond = prof.rank >= 2 and improvement_condition(prof.rank, prof.rows)
    out["rank_condition"] = "true" if cond else "false"
    holds = cond and rates.airk_factor <= rates.tsk_factor + 1e-14
    out["theorem32"] = "holds" if holds else "fails"
    return out


def cmd_bounds(a) -> int:
    fields = bounds_fields(problems.load(a.problem))
    if a.csv:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(fields.keys())
        w.writerow(repr(v) if isinstance(v, float) else v for v in fields.values())
        sys.stdout.write(buf.getvalue())
    else:
        for k, v in fields.items():
            print(f"{k}: {v!r}" if isinstance(v, float) else f"{k}: {v}")
    return EXIT_OK


def _bench_spec(a) -> bench_mod.BenchSpec:
    problem = a.problem if getattr(a, "problem", None) else problems.GenSpec(
        a.rows, a.cols, a.c, a.gen_seed, standardize=not a.raw)
    return bench_mod.BenchSpec(problem=problem, algorithms=a.algos, trials=a.trials, rse_tol=a.rse_tol,
                               max_iters=a.max_iters, base_seed=a.seed, parallel=a.parallel,
                               keep_traces=bool(getattr(a, "trace_out", None)))


def cmd_bench(a) -> int:
    rep = bench_mod.run_bench(_bench_spec(a))
    print(rep.table())
    if rep.speedup is not None:
        print(f"speedup (TSK/MIRK): {rep.speedup:.4f}")
    if a.out:
        _write(a.out, rep.summary_csv())
    if a.trials_out:
        _write(a.trials_out, rep.trials_csv())
    if a.trace_out:
        bench_mod.trace_export(rep, a.trace_out)
    return EXIT_OK


def cmd_sweep(a) -> int:
    if a.problem:
        raise KaczmarzError("sweep regenerates the instance for every value; --problem is not supported")
    values = [t.strip() for t in a.values.split(",") if t.strip()]
    if a.param == "c":
        parsed = [_c_value(v) for v in values]
    else:
        parsed = [_positive_int(v) for v in values]
    rep = bench_mod.sweep(a.param, parsed, _bench_spec(a))
    text = rep.csv()
    sys.stdout.write(text)
    if a.out:
        _write(a.out, text)
    return EXIT_OK


COMMANDS = {"gen": cmd_gen, "solve": cmd_solve, "bounds": cmd_bounds, "bench": cmd_bench, "sweep": cmd_sweep}


def main(argv=None) -> int:
    parser = build_parser(_default_seed())
    a = parser.parse_args(argv)
    try:
        return COMMANDS[a.command](a)
    except (KaczmarzError, OSError, ValueError, argparse.ArgumentTypeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
