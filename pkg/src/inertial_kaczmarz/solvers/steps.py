"""Reference single-step implementations of the four row-action methods.

These are written for clarity and instrumentation, one numpy expression per
line of the algorithm. The compiled loops in :mod:`._kernels` perform the
same steps on the same random indices and are checked against these.

Every step function takes the current :class:`SolverState` and returns the
next one; the state's RNG stream is advanced in place. Passing ``pair=`` or
``row=`` bypasses sampling, which is how tests pin a particular index.
When a ``reference`` solution is supplied, the step also reports how far the
exact per-step distance identities are from holding.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field, replace
from typing import Optional

import numpy as np

from ..errors import StandardizationError
from ..linalg import DenseMatrix
from ..sampling import RngStream, RowSampler, sample_excluding, sample_pair, sample_row

# Relative floor on 1 - cos^2 below which two rows are treated as parallel
# and the inertial coefficient is dropped.
EPS_PARALLEL = 1e-12
STANDARDIZED_TOL = 1e-10
_TINY = np.finfo(float).tiny


class SolverKind(str, enum.Enum):
    RK = "rk"
    TSK = "tsk"
    AIRK = "airk"
    MIRK = "mirk"

    @classmethod
    def parse(cls, value) -> "SolverKind":
        if isinstance(value, cls):
            return value
        try:
            return cls(str(value).lower())
        except ValueError:
            raise ValueError(f"unknown algorithm {value!r}; choose from {[k.value for k in cls]}") from None


@dataclass
class SolverState:
    """Iterate, previous row (MIRK only), iteration counter and RNG stream."""

    x: np.ndarray
    k: int = 0
    rng: RngStream = field(default_factory=RngStream)
    prev_row: Optional[int] = None


@dataclass
class StepDiagnostics:
    rows: tuple
    residual_used: float
    mu: float
    inertial_coeff: float
    fallback: bool = False
    identity_residuals: dict = field(default_factory=dict)


def require_standardized(A: DenseMatrix, tol: float = STANDARDIZED_TOL) -> None:
    dev = float(np.max(np.abs(np.sqrt(A.row_sq_norms) - 1.0)))
    if dev > tol:
        raise StandardizationError(
            f"two-subspace Kaczmarz requires a standardized matrix (unit-norm rows); "
            f"max | ||A_i|| - 1 | = {dev:.3e}"
        )


def _project(x, a, bi, wi):
    return x - ((a @ x - bi) / wi) * a


def _rel(lhs: float, rhs: float, scale: float) -> float:
    return float(abs(lhs - rhs) / max(scale, _TINY))


def _sq(v) -> float:
    return float(v @ v)


# ---------------------------------------------------------------------------
# Randomized Kaczmarz
# ---------------------------------------------------------------------------

def rk_step(state: SolverState, A: DenseMatrix, b, sampler: RowSampler, row: int | None = None,
            reference=None):
    """One randomized Kaczmarz step: project onto a row drawn with probability ``w_i / ||A||_F**2``.

    Returns ``(next_state, diagnostics)``.
    """
    i = sample_row(sampler, state.rng) if row is None else row
    a, wi = A.data[i], A.row_sq_norms[i]
    x = state.x
    r = float(a @ x - b[i])
    x_new = x - (r / wi) * a
    diag = StepDiagnostics(rows=(i,), residual_used=r, mu=0.0, inertial_coeff=0.0)
    if reference is not None:
        d0 = _sq(x - reference)
        diag.identity_residuals["x_distance_drop"] = _rel(_sq(x_new - reference), d0 - r * r / wi, d0)
        diag.identity_residuals["x_step_length"] = _rel(_sq(x_new - x), r * r / wi, d0)
    return replace(state, x=x_new, k=state.k + 1), diag


# ---------------------------------------------------------------------------
# Two-subspace Kaczmarz
# ---------------------------------------------------------------------------

def tsk_step(state: SolverState, A: DenseMatrix, b, sampler: RowSampler, pair: tuple | None = None,
             reference=None, check: bool = True):
    """One two-subspace Kaczmarz step on a standardized system.

    With the pair ``(s, r)`` (``s`` is projected first):

    * ``mu = <a_r, a_s>``
    * ``y = x + (b_s - <x, a_s>) a_s``
    * ``v = (a_r - mu a_s) / sqrt(1 - mu**2)``, a unit vector orthogonal to ``a_s``
    * ``beta = (b_r - mu b_s) / sqrt(1 - mu**2)``
    * ``x_new = y + (beta - <y, v>) v``

    Near-parallel pairs (``1 - mu**2 < EPS_PARALLEL``) fall back to a plain
    projection onto ``a_r``.
    """
    if check:
        require_standardized(A)
    s, r_ = sample_pair(sampler, state.rng) if pair is None else pair
    a_s, a_r = A.data[s], A.data[r_]
    x = state.x
    mu = float(a_r @ a_s)
    res_s = float(x @ a_s - b[s])
    y = x + (b[s] - x @ a_s) * a_s
    one_m = 1.0 - mu * mu
    if one_m < EPS_PARALLEL:
        x_new = y + (b[r_] - y @ a_r) * a_r
        fallback = True
    else:
        sq = math.sqrt(one_m)
        v = (a_r - mu * a_s) / sq
        beta = (b[r_] - mu * b[s]) / sq
        x_new = y + (beta - y @ v) * v
        fallback = False
    coeff = 0.0 if fallback else float(a_r @ y - b[r_]) * mu / one_m
    diag = StepDiagnostics(rows=(s, r_), residual_used=res_s, mu=mu, inertial_coeff=coeff, fallback=fallback)
    if reference is not None:
        diag.identity_residuals.update(_pair_identities(x, y, x_new, a_s, a_r, 1.0, 1.0,
                                                        res_s, float(a_r @ y - b[r_]), mu, fallback, reference))
    return replace(state, x=x_new, k=state.k + 1), diag


# ---------------------------------------------------------------------------
# Alternated inertial randomized Kaczmarz
# ---------------------------------------------------------------------------

def airk_coefficient(res_i: float, mu: float, wj: float, wi: float) -> tuple[float, bool]:
    """Optimal inertial weight ``res_i * mu / (wj wi - mu**2)``, or ``(0, True)`` for parallel rows."""
    den = wj * wi - mu * mu
    if den < EPS_PARALLEL * wj * wi:
        return 0.0, True
    return res_i * mu / den, False


def airk_step(state: SolverState, A: DenseMatrix, b, sampler: RowSampler, pair: tuple | None = None,
              reference=None, beta: float | None = None):
    """One alternated inertial step.

    ``y = P_j x``, then ``x_new = P_i(y + beta A_j)`` with the optimal
    ``beta = (A_i y - b_i) <A_j, A_i> / (||A_j||**2 ||A_i||**2 - <A_j, A_i>**2)``.
    A fixed ``beta`` may be passed to evaluate the map at other weights.
    """
    j, i = sample_pair(sampler, state.rng) if pair is None else pair
    aj, ai = A.data[j], A.data[i]
    wj, wi = A.row_sq_norms[j], A.row_sq_norms[i]
    x = state.x
    res_j = float(aj @ x - b[j])
    y = x - (res_j / wj) * aj
    res_i = float(ai @ y - b[i])
    mu = float(aj @ ai)
    opt, fallback = airk_coefficient(res_i, mu, wj, wi)
    coeff = opt if beta is None else float(beta)
    x_new = _project(y + coeff * aj, ai, b[i], wi)
    diag = StepDiagnostics(rows=(j, i), residual_used=res_i, mu=mu, inertial_coeff=coeff, fallback=fallback)
    if reference is not None:
        diag.identity_residuals.update(_pair_identities(x, y, x_new, aj, ai, wj, wi, res_j, res_i, mu,
                                                        fallback, reference))
    return replace(state, x=x_new, k=state.k + 1), diag


def _pair_identities(x, y, x_new, aj, ai, wj, wi, res_j, res_i, mu, fallback, ref) -> dict:
    d0 = _sq(x - ref)
    out = {
        "y_distance_drop": _rel(_sq(y - ref), d0 - res_j * res_j / wj, d0),
        "y_step_length": _rel(math.sqrt(_sq(y - x)), abs(res_j) / math.sqrt(wj), math.sqrt(d0)),
        "y_orthogonality": float(abs(aj @ (y - ref)) / max(math.sqrt(wj * d0), _TINY)),
    }
    if not fallback:
        gain = res_i * res_i / wi / (1.0 - mu * mu / (wj * wi))
        out["x_distance_drop"] = _rel(_sq(x_new - ref), _sq(y - ref) - gain, d0)
        out["x_step_length"] = _rel(_sq(x_new - y), gain, d0)
    return out


# ---------------------------------------------------------------------------
# Multi-step inertial randomized Kaczmarz
# ---------------------------------------------------------------------------

def mirk_step(state: SolverState, A: DenseMatrix, b, sampler: RowSampler, row: int | None = None,
              reference=None, gamma: float | None = None):
    """One multi-step inertial step in the two-stage form.

    The first call (no previous row) is a plain projection onto a row drawn
    with probability ``w_i / ||A||_F**2``. Later calls draw ``i`` different
    from the previous row ``p`` and set

    * ``gamma = (A_i x - b_i) <A_p, A_i> / (||A_p||**2 ||A_i||**2 - <A_p, A_i>**2)``
    * ``w = x + gamma A_p``
    * ``x_new = P_i w``

    A fixed ``gamma`` may be passed to evaluate the map at other weights.
    """
    x = state.x
    p = state.prev_row
    if p is None:
        i = sample_row(sampler, state.rng) if row is None else row
        ai, wi = A.data[i], A.row_sq_norms[i]
        r = float(ai @ x - b[i])
        x_new = x - (r / wi) * ai
        diag = StepDiagnostics(rows=(i,), residual_used=r, mu=0.0, inertial_coeff=0.0)
        if reference is not None:
            d0 = _sq(x - reference)
            diag.identity_residuals["x_distance_drop"] = _rel(_sq(x_new - reference), d0 - r * r / wi, d0)
            diag.identity_residuals["x_step_length"] = _rel(_sq(x_new - x), r * r / wi, d0)
        return replace(state, x=x_new, k=state.k + 1, prev_row=i), diag

    i = sample_excluding(sampler, p, state.rng) if row is None else row
    ap, ai = A.data[p], A.data[i]
    wp, wi = A.row_sq_norms[p], A.row_sq_norms[i]
    r = float(ai @ x - b[i])
    mu = float(ap @ ai)
    opt, fallback = airk_coefficient(r, mu, wp, wi)
    coeff = opt if gamma is None else float(gamma)
    w = x + coeff * ap
    x_new = _project(w, ai, b[i], wi)
    diag = StepDiagnostics(rows=(p, i), residual_used=r, mu=mu, inertial_coeff=coeff, fallback=fallback)
    if reference is not None:
        d0 = _sq(x - reference)
        res = diag.identity_residuals
        res["prev_orthogonality"] = float(abs(float(ap @ (x - reference))) / max(math.sqrt(wp * d0), _TINY))
        if not fallback:
            gain = r * r / wi / (1.0 - mu * mu / (wp * wi))
            res["x_distance_drop"] = _rel(_sq(x_new - reference), d0 - gain, d0)
            res["x_step_length"] = _rel(_sq(x_new - x), gain, d0)
    return replace(state, x=x_new, k=state.k + 1, prev_row=i), diag


def mirk_compact_update(x, a_prev, a_i, b_i: float) -> np.ndarray:
    """Single-expression MIRK update for unit-norm rows.

    ``x + (r mu / (1 - mu**2)) a_prev - (r / (1 - mu**2)) a_i`` with
    ``r = <a_i, x> - b_i`` and ``mu = <a_prev, a_i>``.
    """
    mu = float(a_prev @ a_i)
    r = float(a_i @ x - b_i)
    den = 1.0 - mu * mu
    return x + (r * mu / den) * a_prev - (r / den) * a_i


STEP_FUNCTIONS = {
    SolverKind.RK: rk_step,
    SolverKind.TSK: tsk_step,
    SolverKind.AIRK: airk_step,
    SolverKind.MIRK: mirk_step,
}
