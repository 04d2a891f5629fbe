"""Common run loop, stop rules and traces."""
from __future__ import annotations

import csv
import io
import time
import warnings
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from ..errors import DimensionError
from ..linalg import DenseMatrix, as_vector
from ..sampling import DEFAULT_SEED, RngStream, RowSampler
from ..spectral import min_norm_solution, row_space_defect
from . import _kernels
from .steps import STEP_FUNCTIONS, SolverKind, SolverState, StepDiagnostics, require_standardized

CHUNK = 1024


@dataclass(frozen=True)
class StopRule:
    """Stop once the monitored statistic is at most ``rse_tol`` or after ``max_iters`` steps.

    The statistic is the relative solution error ``||x - x_dag||**2 / ||x_dag||**2``
    against ``reference`` (computed from the system when omitted). With
    ``use_residual=True`` it is ``||Ax - b|| / ||b||`` instead and no
    reference is needed.
    """

    rse_tol: float = 1e-6
    max_iters: int = 10_000_000
    reference: Optional[np.ndarray] = None
    use_residual: bool = False

    def __post_init__(self):
        if not self.rse_tol > 0:
            raise ValueError("rse_tol must be positive")
        if int(self.max_iters) < 1:
            raise ValueError("max_iters must be at least 1")


@dataclass
class RunTrace:
    kind: SolverKind
    seed: int
    metric: str
    values: np.ndarray
    seconds: np.ndarray
    status: str
    x: np.ndarray
    diagnostics: Optional[list] = None
    fallbacks: int = 0
    stop: StopRule = field(default_factory=StopRule)

    @property
    def iterations(self) -> int:
        """Number of step calls performed (IT)."""
        return int(self.values.size - 1)

    @property
    def k(self) -> np.ndarray:
        return np.arange(self.values.size)

    @property
    def rse(self) -> np.ndarray:
        if self.metric != "rse":
            raise AttributeError("this run was stopped on the residual; no RSE was recorded")
        return self.values

    @property
    def cpu_seconds(self) -> float:
        """CPU time of the calling thread spent in the iteration loop."""
        return float(self.seconds[-1])

    @property
    def converged(self) -> bool:
        return self.status == "converged"

    def to_csv(self) -> str:
        """CSV with columns ``k,<metric>,seconds`` plus diagnostic fields when recorded."""
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        diag_cols = ["residual_used", "mu", "inertial_coeff", "fallback"] if self.diagnostics else []
        id_names = sorted({n for d in self.diagnostics or () for n in d.identity_residuals})
        w.writerow(["k", self.metric, "seconds"] + diag_cols + [f"id_{n}" for n in id_names])
        for k in range(self.values.size):
            row = [k, repr(float(self.values[k])), repr(float(self.seconds[k]))]
            if diag_cols:
                if k == 0:
                    row += [""] * (len(diag_cols) + len(id_names))
                else:
                    d = self.diagnostics[k - 1]
                    row += [repr(d.residual_used), repr(d.mu), repr(d.inertial_coeff), int(d.fallback)]
                    row += [repr(d.identity_residuals[n]) if n in d.identity_residuals else "" for n in id_names]
            w.writerow(row)
        return buf.getvalue()


def _prepare(kind, A, b, x0, stop):
    if not isinstance(A, DenseMatrix):
        A = DenseMatrix(A)
    b = as_vector(b, "b")
    if b.shape != (A.rows,):
        raise DimensionError(f"expected right-hand side of length {A.rows}, got shape {b.shape}")
    if kind is SolverKind.TSK:
        require_standardized(A)
    if kind is not SolverKind.RK and A.rows < 2:
        raise DimensionError(f"{kind.value} needs at least two rows")
    if x0 is None:
        x0 = np.zeros(A.cols)
    else:
        x0 = as_vector(x0, "x0").copy()
        if x0.shape != (A.cols,):
            raise DimensionError(f"expected x0 of length {A.cols}, got shape {x0.shape}")
        if row_space_defect(A, x0) > 1e-8 * (1.0 + np.linalg.norm(x0)):
            warnings.warn("x0 is not in the row space of A; iterates converge to a solution other "
                          "than the minimum-norm one", RuntimeWarning, stacklevel=3)
    if stop.use_residual:
        ref = None
        scale = float(np.linalg.norm(b))
        metric = "residual"
    else:
        ref = min_norm_solution(A, b) if stop.reference is None else as_vector(stop.reference, "reference")
        if ref.shape != (A.cols,):
            raise DimensionError(f"reference has shape {ref.shape}, expected ({A.cols},)")
        scale = float(ref @ ref)
        metric = "rse"
    if scale == 0.0:
        # x_dag = 0 (b = 0): fall back to the absolute error
        scale = 1.0
    return A, b, x0, ref, scale, metric


def run(kind, A, b, x0=None, stop: StopRule | None = None, seed: int = DEFAULT_SEED,
        diagnostics: bool = False, rng: RngStream | None = None) -> RunTrace:
    """Iterate one algorithm from ``x0`` (default zero) until ``stop`` fires.

    With ``diagnostics=False`` the compiled loop runs; with ``True`` the
    reference step functions run and each step's :class:`StepDiagnostics`
    is kept. Both paths consume the same random stream and produce the same
    iterates up to rounding. ``seconds`` is thread CPU time, so runs on
    other threads or processes do not inflate it; the fast path records it
    per block of steps and interpolates within a block.
    """
    kind = SolverKind.parse(kind)
    stop = stop or StopRule()
    A, b, x0, ref, scale, metric = _prepare(kind, A, b, x0, stop)
    rng = rng or RngStream(seed)
    sampler = RowSampler(A)
    if diagnostics:
        return _run_reference(kind, A, b, x0, ref, scale, metric, stop, rng, sampler)
    return _run_fast(kind, A, b, x0, ref, scale, metric, stop, rng, sampler)


def _stat(A, b, x, ref, scale):
    if ref is not None:
        d = x - ref
        return float(d @ d) / scale
    r = A.data @ x - b
    return float(np.sqrt(r @ r)) / scale


def _run_reference(kind, A, b, x0, ref, scale, metric, stop, rng, sampler) -> RunTrace:
    step = STEP_FUNCTIONS[kind]
    state = SolverState(x=x0, rng=rng)
    values = [_stat(A, b, x0, ref, scale)]
    seconds = [0.0]
    diags: list[StepDiagnostics] = []
    extra = {"check": False} if kind is SolverKind.TSK else {}
    status = "converged" if values[0] <= stop.rse_tol else None
    t0 = time.thread_time()
    while status is None:
        state, d = step(state, A, b, sampler, reference=ref, **extra)
        diags.append(d)
        values.append(_stat(A, b, state.x, ref, scale))
        seconds.append(time.thread_time() - t0)
        if not np.isfinite(values[-1]):
            status = "error"
        elif values[-1] <= stop.rse_tol:
            status = "converged"
        elif state.k >= stop.max_iters:
            status = "max-iters"
    return RunTrace(kind=kind, seed=rng.seed, metric=metric, values=np.array(values), seconds=np.array(seconds),
                    status=status, x=state.x, diagnostics=diags, fallbacks=sum(d.fallback for d in diags), stop=stop)


def _run_fast(kind, A, b, x0, ref, scale, metric, stop, rng, sampler) -> RunTrace:
    loop = _kernels.LOOPS[kind.value]
    data, w = A.data, A.row_sq_norms
    cum, total = sampler.cumulative, sampler.total
    mode = _kernels.MODE_RSE if ref is not None else _kernels.MODE_RESIDUAL
    xd = ref if ref is not None else np.zeros(A.cols)
    x = np.array(x0, dtype=np.float64, order="C")
    y = np.empty_like(x)
    v = np.empty_like(x)
    out = np.empty(CHUNK)
    tol = float(stop.rse_tol)
    max_iters = int(stop.max_iters)

    first = float(_kernels.stop_stat(mode, data, b, x, xd, scale))
    values = [np.array([first])]
    seconds = [np.zeros(1)]
    k, prev = 0, -1
    status = "converged" if first <= tol else None
    t0 = time.thread_time()
    t_prev = 0.0
    while status is None:
        u, pos = rng.reserve(2 * CHUNK + 64)
        kmax = min(max_iters, k + CHUNK)
        done, k_new, pos, prev, n = loop(data, b, w, cum, total, xd, scale, mode, tol,
                                         x, y, v, u, pos, k, kmax, prev, out)
        rng.commit(pos)
        t_now = time.thread_time() - t0
        if n:
            values.append(out[:n].copy())
            seconds.append(t_prev + (t_now - t_prev) * np.arange(1, n + 1) / n)
        t_prev = t_now
        k = k_new
        if n and not np.isfinite(out[n - 1]):
            status = "error"
        elif done:
            status = "converged"
        elif k >= max_iters:
            status = "max-iters"
    return RunTrace(kind=kind, seed=rng.seed, metric=metric, values=np.concatenate(values),
                    seconds=np.concatenate(seconds), status=status, x=x, stop=stop)
