"""Spectral and coherence constants of a system matrix, and the rate bounds built from them.

Everything here runs once per problem, never inside an iteration loop.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import asdict, dataclass

import numpy as np

from .errors import (
    CoherenceUndefinedError,
    ConditionInapplicableError,
    DimensionError,
    InconsistentSystemError,
    ParallelRowsError,
)
from .linalg import DenseMatrix, as_vector

RANK_RTOL = 1e-10
JACOBI_TOL = 1e-13
# Gram matrices larger than this go through conjugate gradients instead of eigh.
GRAM_LIMIT = 2000
PARALLEL_WARN = 1e-12


@dataclass(frozen=True)
class SpectralProfile:
    """Constants of ``A`` that enter the convergence-rate estimates.

    Attributes
    ----------
    rank : int
    lambda_min : float
        Smallest nonzero eigenvalue of ``A^T A``.
    fro_sq : float
        ``||A||_F**2``.
    alpha_f : float
        ``max_i (||A||_F**2 - ||A_i||**2)``.
    upsilon : float
        ``sum over ordered pairs j != i of ||A_j||**2 ||A_i||**2``.
    delta, delta_cap : float
        Minimum and maximum absolute cosine between distinct rows.
    d_const : float
        ``min(g(delta), g(delta_cap))`` with ``g(t) = t**2 (1 - t) / (1 + t)``.
    rows, cols : int
        Shape of the matrix the profile was computed from.
    """

    rank: int
    lambda_min: float
    fro_sq: float
    alpha_f: float
    upsilon: float
    delta: float
    delta_cap: float
    d_const: float
    rows: int
    cols: int

    def as_dict(self) -> dict:
        return asdict(self)


@dataclass(frozen=True)
class RateBounds:
    """Per-iteration contraction factors of the expected squared error.

    ``airk_factor`` is built as ``mirk_factor * rk_factor`` so that identity
    holds exactly.
    """

    rk_factor: float
    tsk_factor: float
    airk_factor: float
    mirk_factor: float

    def as_dict(self) -> dict:
        return asdict(self)


def _check_symmetric(M: np.ndarray) -> np.ndarray:
    M = np.asarray(M, dtype=np.float64)
    if M.ndim != 2 or M.shape[0] != M.shape[1]:
        raise DimensionError(f"expected a square matrix, got shape {M.shape}")
    scale = max(np.linalg.norm(M), np.finfo(float).tiny)
    if np.linalg.norm(M - M.T) > 1e-12 * scale:
        raise ValueError("matrix is not symmetric")
    return M


def jacobi_eigenvalues(M, tol: float = JACOBI_TOL, max_sweeps: int = 100) -> np.ndarray:
    """Eigenvalues of a symmetric matrix by cyclic Jacobi rotations.

    Sweeps over all ``(p, q)`` pairs in row order until the off-diagonal
    Frobenius norm drops below ``tol * ||M||_F``.
    """
    A = _check_symmetric(M).copy()
    n = A.shape[0]
    target = tol * np.linalg.norm(A)
    for _ in range(max_sweeps):
        off = np.linalg.norm(A - np.diag(np.diag(A)))
        if off <= target:
            break
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = A[p, q]
                if apq == 0.0:
                    continue
                tau = (A[q, q] - A[p, p]) / (2.0 * apq)
                t = (1.0 if tau >= 0 else -1.0) / (abs(tau) + math.sqrt(1.0 + tau * tau))
                c = 1.0 / math.sqrt(1.0 + t * t)
                s = t * c
                col_p = A[:, p].copy()
                col_q = A[:, q].copy()
                A[:, p] = c * col_p - s * col_q
                A[:, q] = s * col_p + c * col_q
                row_p = A[p, :].copy()
                row_q = A[q, :].copy()
                A[p, :] = c * row_p - s * row_q
                A[q, :] = s * row_p + c * row_q
                A[p, q] = A[q, p] = 0.0
    else:
        raise RuntimeError(f"Jacobi iteration did not converge in {max_sweeps} sweeps")
    return np.sort(np.diag(A))


def symmetric_eigenvalues(M, method: str = "lapack") -> np.ndarray:
    """All eigenvalues of a symmetric matrix in ascending order.

    ``method="lapack"`` delegates to :func:`numpy.linalg.eigvalsh`;
    ``method="jacobi"`` uses :func:`jacobi_eigenvalues`.
    """
    M = _check_symmetric(M)
    if method == "lapack":
        return np.linalg.eigvalsh(M)
    if method == "jacobi":
        return jacobi_eigenvalues(M)
    raise ValueError(f"unknown eigenvalue method {method!r}")


def _small_gram(data: np.ndarray) -> np.ndarray:
    I, J = data.shape
    return data @ data.T if I <= J else data.T @ data


def _d_term(t: float) -> float:
    return t * t * (1.0 - t) / (1.0 + t)


def coherence_bounds(A: DenseMatrix) -> tuple[float, float]:
    """Minimum and maximum ``|<A_i/||A_i||, A_j/||A_j||>|`` over ``i != j``."""
    if A.rows < 2:
        raise CoherenceUndefinedError("coherence needs at least two rows")
    N = A.data / np.sqrt(A.row_sq_norms)[:, None]
    C = np.abs(N @ N.T)
    iu = np.triu_indices(A.rows, k=1)
    vals = np.minimum(C[iu], 1.0)
    return float(vals.min()), float(vals.max())


def compute_profile(A: DenseMatrix, eig_method: str = "lapack") -> SpectralProfile:
    """Compute every constant of :class:`SpectralProfile` for ``A``."""
    if A.rows < 2:
        raise CoherenceUndefinedError("coherence needs at least two rows")
    eig = symmetric_eigenvalues(_small_gram(A.data), method=eig_method)
    top = float(eig[-1])
    nonzero = eig[eig > RANK_RTOL * top]
    rank = int(nonzero.size)
    lambda_min = float(nonzero[0])

    w = A.row_sq_norms
    fro_sq = float(np.sum(w))
    alpha_f = float(fro_sq - np.min(w))
    upsilon = float(fro_sq * fro_sq - np.sum(w * w))

    delta, delta_cap = coherence_bounds(A)
    if delta_cap >= 1.0 - PARALLEL_WARN:
        warnings.warn(
            f"some pair of rows is parallel (max coherence {delta_cap!r}); "
            "the two-subspace constant is degenerate",
            RuntimeWarning,
            stacklevel=2,
        )
    d_const = min(_d_term(delta), _d_term(delta_cap))
    return SpectralProfile(
        rank=rank,
        lambda_min=lambda_min,
        fro_sq=fro_sq,
        alpha_f=alpha_f,
        upsilon=upsilon,
        delta=delta,
        delta_cap=delta_cap,
        d_const=d_const,
        rows=A.rows,
        cols=A.cols,
    )


def rate_bounds(p: SpectralProfile) -> RateBounds:
    """Contraction factors for RK, TSK, AIRK and MIRK from a profile."""
    if p.delta >= 1.0:
        raise ParallelRowsError("delta = 1: every pair of rows is parallel")
    ratio = p.lambda_min / p.fro_sq
    rk = 1.0 - ratio
    tsk = rk * rk - ratio * p.d_const
    mirk = 1.0 - p.lambda_min / (p.alpha_f * (1.0 - p.delta * p.delta))
    return RateBounds(rk_factor=rk, tsk_factor=tsk, airk_factor=mirk * rk, mirk_factor=mirk)


def improvement_threshold(rank: int) -> float:
    """Largest row count for which the inertial bound is guaranteed to beat the two-subspace bound."""
    if rank < 2:
        raise ConditionInapplicableError(f"rank must be >= 2, got {rank}")
    s = math.sqrt(1.0 - 8.0 / (9.0 * rank))
    return 1.0 + 9.0 * (1.0 + s) ** 2 * rank * rank * (rank - 1) / 4.0


def improvement_condition(rank: int, rows: int) -> bool:
    """``2 <= rank <= rows <= improvement_threshold(rank)``."""
    return rank <= rows <= improvement_threshold(rank)


def improvement_margin(rank: int, rows: int, delta: float) -> float:
    """``(1 - 1/r)(1/(I - 1) + delta**2) - delta**2 (1 - delta)**2``.

    Nonnegative on ``[0, 1]`` whenever :func:`improvement_condition` holds,
    which is what makes the inertial bound the tighter one. The closed-form
    row limit is sufficient, not sharp: the margin stays nonnegative up to
    ``1 + (1 - 1/r) / -min_d [(1 - 1/r) d**2 - d**2 (1 - d)**2]`` rows,
    about three times :func:`improvement_threshold`.
    """
    return (1.0 - 1.0 / rank) * (1.0 / (rows - 1) + delta * delta) - delta * delta * (1.0 - delta) ** 2


def margin_minimizer(rank: int) -> float:
    """Location of the minimum of :func:`improvement_margin` over ``[0, 1]``."""
    return 2.0 / (3.0 * rank * (1.0 + math.sqrt(1.0 - 8.0 / (9.0 * rank))))


# ---------------------------------------------------------------------------
# Minimum-norm solution
# ---------------------------------------------------------------------------

def _pinv_gram_apply(G: np.ndarray, rhs: np.ndarray) -> np.ndarray:
    vals, vecs = np.linalg.eigh(G)
    keep = vals > RANK_RTOL * vals[-1]
    return vecs[:, keep] @ ((vecs[:, keep].T @ rhs) / vals[keep])


def _cg_min_norm(data: np.ndarray, b: np.ndarray, rtol: float = 1e-14, max_iter: int | None = None) -> np.ndarray:
    # CG on A A^T y = b started from 0; x = A^T y stays in the row space.
    I = data.shape[0]
    max_iter = max_iter or 10 * I
    y = np.zeros(I)
    r = b.copy()
    p = r.copy()
    rr = r @ r
    stop = (rtol * np.linalg.norm(b)) ** 2
    best = (rr, y.copy())
    for _ in range(max_iter):
        if rr <= stop:
            break
        Ap = data @ (data.T @ p)
        alpha = rr / (p @ Ap)
        y += alpha * p
        r -= alpha * Ap
        rr_new = r @ r
        if rr_new < best[0]:
            best = (rr_new, y.copy())
        p = r + (rr_new / rr) * p
        rr = rr_new
    return data.T @ best[1]


def row_space_defect(A: DenseMatrix, x) -> float:
    """Norm of the component of ``x`` orthogonal to the row space of ``A``."""
    data = A.data
    x = np.asarray(x, dtype=np.float64)
    if A.rows <= A.cols:
        proj = data.T @ _pinv_gram_apply(data @ data.T, data @ x)
    else:
        vals, vecs = np.linalg.eigh(data.T @ data)
        V = vecs[:, vals > RANK_RTOL * vals[-1]]
        proj = V @ (V.T @ x)
    return float(np.linalg.norm(x - proj))


def min_norm_solution(A: DenseMatrix, b, gram_limit: int = GRAM_LIMIT, check: bool = True) -> np.ndarray:
    """Minimum Euclidean norm solution of the consistent system ``Ax = b``.

    Uses the eigendecomposition of the smaller Gram matrix, followed by one
    step of iterative refinement. When that Gram matrix is larger than
    ``gram_limit`` the normal equations ``A A^T y = b`` are solved by
    conjugate gradients instead.

    Raises
    ------
    InconsistentSystemError
        If the computed solution leaves a residual above ``1e-8 (1 + ||b||)``.
    """
    b = as_vector(b, "b")
    if b.shape != (A.rows,):
        raise DimensionError(f"expected right-hand side of length {A.rows}, got shape {b.shape}")
    data = A.data
    I, J = data.shape

    if min(I, J) > gram_limit:
        x = _cg_min_norm(data, b)
    elif I <= J:
        G = data @ data.T
        x = data.T @ _pinv_gram_apply(G, b)
        x = x + data.T @ _pinv_gram_apply(G, b - data @ x)
    else:
        G = data.T @ data
        x = _pinv_gram_apply(G, data.T @ b)
        x = x + _pinv_gram_apply(G, data.T @ (b - data @ x))

    if check:
        res = float(np.linalg.norm(data @ x - b))
        if res > 1e-8 * (1.0 + float(np.linalg.norm(b))):
            raise InconsistentSystemError(f"system appears inconsistent: residual {res:.3e}")
    return x
