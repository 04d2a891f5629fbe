"""Repeated-trial benchmarks: mean iteration counts, mean solve times, speed-up, traces and sweeps."""
from __future__ import annotations

import csv
import io
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Optional, Sequence, Union

import numpy as np

from .problems import GenSpec, ProblemInstance, generate, load
from .sampling import DEFAULT_SEED, derive_seed
from .solvers import RunTrace, SolverKind, StopRule, run

SUMMARY_COLUMNS = ["algorithm", "mean_it", "mean_cpu_s", "trials", "nonconverged", "speedup_vs_tsk", "parallel_caveat"]
TRACE_COLUMNS = ["algorithm", "trial", "k", "rse", "seconds"]
TRIAL_COLUMNS = ["algorithm", "trial", "seed", "it", "cpu_s", "status"]
# Allowed growth of ||x_k - x_dag|| between consecutive iterates, relative to ||x_0 - x_dag||.
MONOTONE_SLACK = 1e-10


def _g(v: float) -> str:
    return "%.9g" % v


@dataclass(frozen=True)
class BenchSpec:
    problem: Union[GenSpec, str, Path]
    algorithms: tuple = (SolverKind.TSK, SolverKind.MIRK)
    trials: int = 50
    rse_tol: float = 1e-6
    max_iters: int = 10_000_000
    base_seed: int = DEFAULT_SEED
    parallel: bool = False
    keep_traces: bool = False

    def __post_init__(self):
        algs = tuple(SolverKind.parse(a) for a in self.algorithms)
        if not algs:
            raise ValueError("at least one algorithm is required")
        if len(set(algs)) != len(algs):
            raise ValueError("algorithms must be distinct")
        if int(self.trials) < 1:
            raise ValueError("trials must be >= 1")
        object.__setattr__(self, "algorithms", algs)


@dataclass(frozen=True)
class TrialRecord:
    algorithm: SolverKind
    trial: int
    seed: int
    iterations: int
    cpu_s: float
    status: str


@dataclass(frozen=True)
class AlgorithmSummary:
    algorithm: SolverKind
    mean_it: float
    mean_cpu_s: float
    trials: int
    nonconverged: int


@dataclass
class BenchReport:
    spec: BenchSpec
    summaries: dict
    records: list
    speedup: Optional[float]
    traces: dict = field(default_factory=dict)

    @property
    def parallel_caveat(self) -> bool:
        return self.spec.parallel

    def summary_csv(self) -> str:
        return _csv([SUMMARY_COLUMNS] + self._summary_rows())

    def trials_csv(self) -> str:
        rows = [TRIAL_COLUMNS]
        for r in self.records:
            rows.append([r.algorithm.value, r.trial, r.seed, r.iterations, _g(r.cpu_s), r.status])
        return _csv(rows)

    def _summary_rows(self) -> list:
        tsk = self.summaries.get(SolverKind.TSK)
        show = self.speedup is not None
        rows = []
        for alg in self.spec.algorithms:
            s = self.summaries[alg]
            sp = ""
            if show and s.mean_cpu_s > 0 and np.isfinite(s.mean_cpu_s):
                sp = _g(tsk.mean_cpu_s / s.mean_cpu_s)
            rows.append([alg.value, _g(s.mean_it), _g(s.mean_cpu_s), s.trials, s.nonconverged, sp,
                         str(self.parallel_caveat).lower()])
        return rows

    def table(self) -> str:
        """Fixed-width text rendering of the summary."""
        lines = [f"{'algorithm':<9} {'mean_it':>14} {'mean_cpu_s':>14} {'trials':>6} {'nonconv':>7} {'speedup':>9}"]
        for row in self._summary_rows():
            lines.append(f"{row[0]:<9} {row[1]:>14} {row[2]:>14} {row[3]:>6} {row[4]:>7} {row[5] or '-':>9}")
        if self.parallel_caveat:
            lines.append("note: trials ran concurrently; per-thread CPU times still share caches and memory bandwidth")
        return "\n".join(lines)


def _csv(rows) -> str:
    buf = io.StringIO()
    csv.writer(buf, lineterminator="\n").writerows(rows)
    return buf.getvalue()


def resolve_problem(problem) -> ProblemInstance:
    if isinstance(problem, ProblemInstance):
        return problem
    if isinstance(problem, GenSpec):
        return generate(problem)
    return load(problem)


def warm_up(instance: ProblemInstance, algorithms) -> None:
    """Compile the solver loops so the first timed trial does not pay for it."""
    for alg in algorithms:
        run(alg, instance.A, instance.b, stop=StopRule(max_iters=2, reference=instance.x_dag), seed=0)


def run_bench(spec: BenchSpec, instance: ProblemInstance | None = None) -> BenchReport:
    """Run every algorithm ``spec.trials`` times on one shared instance.

    Trial ``t`` uses seed ``derive_seed(base_seed, t)`` for every algorithm,
    and the algorithms are interleaved within a trial so slow drift in
    machine speed affects them alike.
    """
    inst = instance if instance is not None else resolve_problem(spec.problem)
    warm_up(inst, spec.algorithms)
    stop = StopRule(rse_tol=spec.rse_tol, max_iters=spec.max_iters, reference=inst.x_dag)

    def one(t: int) -> list:
        seed = derive_seed(spec.base_seed, t)
        out = []
        for alg in spec.algorithms:
            out.append((t, alg, seed, run(alg, inst.A, inst.b, stop=stop, seed=seed)))
        return out

    if spec.parallel:
        with ThreadPoolExecutor() as pool:
            results = [r for batch in pool.map(one, range(spec.trials)) for r in batch]
    else:
        results = [r for t in range(spec.trials) for r in one(t)]

    records, traces = [], {}
    for t, alg, seed, tr in sorted(results, key=lambda r: (r[0], spec.algorithms.index(r[1]))):
        records.append(TrialRecord(alg, t, seed, tr.iterations, tr.cpu_seconds, tr.status))
        if spec.keep_traces:
            traces[(alg, t)] = tr

    summaries = {}
    for alg in spec.algorithms:
        done = [r for r in records if r.algorithm is alg and r.status == "converged"]
        failed = sum(1 for r in records if r.algorithm is alg and r.status != "converged")
        if failed:
            warnings.warn(f"{alg.value}: {failed} of {spec.trials} trials did not converge; "
                          "they are excluded from the means", RuntimeWarning, stacklevel=2)
        summaries[alg] = AlgorithmSummary(
            algorithm=alg,
            mean_it=float(np.mean([r.iterations for r in done])) if done else float("nan"),
            mean_cpu_s=float(np.mean([r.cpu_s for r in done])) if done else float("nan"),
            trials=len(done),
            nonconverged=failed,
        )

    speedup = None
    if SolverKind.TSK in summaries and SolverKind.MIRK in summaries:
        speedup = summaries[SolverKind.TSK].mean_cpu_s / summaries[SolverKind.MIRK].mean_cpu_s
    return BenchReport(spec=spec, summaries=summaries, records=records, speedup=speedup, traces=traces)


# ---------------------------------------------------------------------------
# Traces
# ---------------------------------------------------------------------------

def check_monotone(trace: RunTrace, slack: float = MONOTONE_SLACK) -> None:
    dist = np.sqrt(trace.rse)
    growth = np.diff(dist)
    limit = slack * dist[0]
    if growth.size and growth.max() > limit:
        k = int(np.argmax(growth)) + 1
        raise ValueError(f"{trace.kind.value}: error grew at k={k} by {growth.max():.3e}")


def trace_rows(traces) -> list:
    """Rows of the trace CSV, ordered by (algorithm, trial, k).

    ``traces`` is a :class:`BenchReport`, a single :class:`RunTrace`, or a
    mapping ``(algorithm, trial) -> RunTrace``.
    """
    if isinstance(traces, BenchReport):
        if not traces.traces:
            raise ValueError("bench was run without keep_traces=True")
        order = {a: n for n, a in enumerate(traces.spec.algorithms)}
        items = sorted(traces.traces.items(), key=lambda kv: (order[kv[0][0]], kv[0][1]))
    elif isinstance(traces, RunTrace):
        items = [((traces.kind, 0), traces)]
    else:
        items = sorted(traces.items(), key=lambda kv: (SolverKind.parse(kv[0][0]).value, kv[0][1]))
    rows = []
    for (alg, trial), tr in items:
        check_monotone(tr)
        name = SolverKind.parse(alg).value
        for k in range(tr.values.size):
            rows.append([name, trial, k, repr(float(tr.rse[k])), _g(tr.seconds[k])])
    return rows


def trace_export(traces, path) -> Path:
    """Write ``algorithm,trial,k,rse,seconds`` for every recorded iterate, ``k = 0`` included."""
    path = Path(path)
    path.write_text(_csv([TRACE_COLUMNS] + trace_rows(traces)), encoding="utf-8", newline="\n")
    return path


# ---------------------------------------------------------------------------
# Sweeps
# ---------------------------------------------------------------------------

SWEEP_PARAMS = {"c": "c", "I": "rows", "J": "cols"}


@dataclass
class SweepReport:
    param: str
    values: list
    reports: list

    def csv(self) -> str:
        rows = [["sweep_param", "sweep_value"] + SUMMARY_COLUMNS]
        for value, rep in zip(self.values, self.reports):
            for row in rep._summary_rows():
                rows.append([self.param, _g(value)] + row)
        return _csv(rows)

    def speedups(self) -> list:
        return [r.speedup for r in self.reports]


def sweep(param: str, values: Sequence, fixed: BenchSpec) -> SweepReport:
    """One :func:`run_bench` per value of ``c``, ``I`` or ``J``, other settings taken from ``fixed``."""
    if param not in SWEEP_PARAMS:
        raise ValueError(f"sweep parameter must be one of {sorted(SWEEP_PARAMS)}, got {param!r}")
    values = list(values)
    if not values:
        raise ValueError("sweep needs at least one value")
    if not isinstance(fixed.problem, GenSpec):
        raise ValueError("sweeps regenerate the problem and need a GenSpec, not a file")
    reports = []
    for v in values:
        v = float(v) if param == "c" else int(v)
        gen = replace(fixed.problem, **{SWEEP_PARAMS[param]: v})
        reports.append(run_bench(replace(fixed, problem=gen)))
    return SweepReport(param=param, values=values, reports=reports)
