import numpy as np
import pytest

from inertial_kaczmarz.bench import (
    SUMMARY_COLUMNS,
    BenchSpec,
    check_monotone,
    run_bench,
    sweep,
    trace_export,
)
from inertial_kaczmarz.linalg import DenseMatrix
from inertial_kaczmarz.problems import GenSpec, ProblemInstance
from inertial_kaczmarz.solvers import RunTrace, SolverKind, StopRule

ALL = tuple(SolverKind)
SMALL = GenSpec(30, 12, 0.5, 1)


def identity_instance(n=10):
    A = DenseMatrix(np.eye(n))
    b = np.arange(1.0, n + 1)
    return ProblemInstance(A=A, b=b, x_star=b.copy(), x_dag=b.copy(), spec=GenSpec(n, n, 0.0, 0))


def test_identity_bench():
    rep = run_bench(BenchSpec(problem=SMALL, algorithms=ALL, trials=1), instance=identity_instance())
    assert all(r.iterations <= 30 and r.status == "converged" for r in rep.records)
    assert rep.speedup is not None and rep.speedup > 0


def test_summary_schema_and_speedup():
    rep = run_bench(BenchSpec(problem=SMALL, algorithms=("tsk", "mirk", "rk"), trials=3))
    lines = rep.summary_csv().splitlines()
    assert lines[0].split(",") == SUMMARY_COLUMNS
    assert [ln.split(",")[0] for ln in lines[1:]] == ["tsk", "mirk", "rk"]
    tsk, mirk = rep.summaries[SolverKind.TSK], rep.summaries[SolverKind.MIRK]
    assert rep.speedup == pytest.approx(tsk.mean_cpu_s / mirk.mean_cpu_s)
    mirk_row = lines[2].split(",")
    assert float(mirk_row[5]) == pytest.approx(rep.speedup, rel=1e-8)
    assert mirk_row[6] == "false"
    assert len(rep.records) == 9


def test_speedup_absent_without_both():
    rep = run_bench(BenchSpec(problem=SMALL, algorithms=("rk",), trials=1))
    assert rep.speedup is None
    assert rep.summary_csv().splitlines()[1].split(",")[5] == ""


def test_iteration_counts_reproducible():
    spec = BenchSpec(problem=SMALL, algorithms=ALL, trials=4)
    a, b = run_bench(spec), run_bench(spec)
    assert [r.iterations for r in a.records] == [r.iterations for r in b.records]
    assert [r.seed for r in a.records] == [r.seed for r in b.records]


def test_parallel_matches_serial_iterations():
    serial = run_bench(BenchSpec(problem=SMALL, trials=4))
    par = run_bench(BenchSpec(problem=SMALL, trials=4, parallel=True))
    assert [r.iterations for r in serial.records] == [r.iterations for r in par.records]
    assert par.parallel_caveat and "true" in par.summary_csv()


def test_nonconverged_trials_excluded():
    with pytest.warns(RuntimeWarning, match="did not converge"):
        rep = run_bench(BenchSpec(problem=GenSpec(50, 20, 0.9, 42), algorithms=("rk", "mirk"), trials=2,
                                  max_iters=1000))
    s = rep.summaries[SolverKind.RK]
    assert s.nonconverged == 2 and s.trials == 0 and np.isnan(s.mean_it)
    assert rep.summaries[SolverKind.MIRK].nonconverged == 0


@pytest.mark.filterwarnings("ignore:.*did not converge")
def test_trace_export(tmp_path):
    spec = BenchSpec(problem=SMALL, algorithms=("tsk", "mirk"), trials=1, max_iters=99, keep_traces=True)
    rep = run_bench(spec)
    path = trace_export(rep, tmp_path / "t.csv")
    lines = path.read_text().splitlines()
    assert lines[0] == "algorithm,trial,k,rse,seconds"
    # 99 steps plus the starting point per algorithm
    assert len(lines) == 1 + 200
    assert [ln.split(",")[0] for ln in lines[1:]] == ["tsk"] * 100 + ["mirk"] * 100
    first = path.read_bytes()
    assert trace_export(rep, tmp_path / "t.csv").read_bytes() == first


def test_trace_export_rejects_growth():
    bad = RunTrace(kind=SolverKind.RK, seed=0, metric="rse", values=np.array([1.0, 0.5, 0.6]),
                   seconds=np.zeros(3), status="max-iters", x=np.zeros(2))
    with pytest.raises(ValueError, match="grew"):
        check_monotone(bad)


def test_sweep_single_value_matches_bench():
    spec = BenchSpec(problem=SMALL, trials=2)
    sw = sweep("c", [0.5], spec)
    rep = run_bench(spec)
    assert [r.iterations for r in sw.reports[0].records] == [r.iterations for r in rep.records]
    lines = sw.csv().splitlines()
    assert lines[0].startswith("sweep_param,sweep_value,algorithm")
    assert lines[1].startswith("c,0.5,tsk")


def test_sweep_over_columns():
    sw = sweep("J", [8, 16], BenchSpec(problem=SMALL, trials=1))
    assert [r.spec.problem.cols for r in sw.reports] == [8, 16]
    with pytest.raises(ValueError):
        sweep("K", [1], BenchSpec(problem=SMALL))
    with pytest.raises(ValueError):
        sweep("c", [], BenchSpec(problem=SMALL))


def test_spec_validation():
    with pytest.raises(ValueError):
        BenchSpec(problem=SMALL, algorithms=())
    with pytest.raises(ValueError):
        BenchSpec(problem=SMALL, trials=0)
    with pytest.raises(ValueError):
        BenchSpec(problem=SMALL, algorithms=("tsk", "tsk"))
