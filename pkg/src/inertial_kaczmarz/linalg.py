"""Dense row-major linear algebra used by every solver step.

Vectors are plain one-dimensional ``float64`` numpy arrays. The system
matrix is wrapped in :class:`DenseMatrix`, which caches the squared row
norms once so that sampling and projections never recompute them.

Row indices exposed to callers are 1-based (``row_view(A, 1)`` is the first
equation); everything internal is 0-based.
"""
from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Union

import numpy as np

from .errors import DegenerateHyperplaneError, DimensionError, MalformedFileError, ZeroRowError

PathLike = Union[str, Path]

# 17 significant digits round-trip every binary64 value exactly.
_FLOAT_FMT = "%.17g"


def as_vector(v, name: str = "vector") -> np.ndarray:
    """Validate and convert ``v`` to a finite, non-empty float64 vector."""
    arr = np.asarray(v, dtype=np.float64)
    if arr.ndim != 1:
        raise DimensionError(f"{name} must be one-dimensional, got shape {arr.shape}")
    if arr.size == 0:
        raise DimensionError(f"{name} must be non-empty")
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} contains NaN or Inf")
    return arr


class DenseMatrix:
    """Immutable row-major real matrix with cached squared row norms.

    Parameters
    ----------
    data : array_like, shape (I, J)
        Matrix entries. Copied; the stored array is read-only.

    Raises
    ------
    DimensionError
        If ``data`` is not a non-empty 2-D array.
    ZeroRowError
        If some row has zero norm (its sampling probability would vanish and
        its hyperplane would be degenerate).
    """

    __slots__ = ("_data", "_row_sq_norms")

    def __init__(self, data):
        arr = np.array(data, dtype=np.float64, order="C", copy=True)
        if arr.ndim != 2 or arr.shape[0] < 1 or arr.shape[1] < 1:
            raise DimensionError(f"matrix must be 2-D with I, J >= 1, got shape {arr.shape}")
        if not np.all(np.isfinite(arr)):
            raise ValueError("matrix contains NaN or Inf")
        norms = np.einsum("ij,ij->i", arr, arr)
        zero = np.flatnonzero(norms <= 0.0)
        if zero.size:
            raise ZeroRowError(f"row {int(zero[0]) + 1} is zero")
        arr.flags.writeable = False
        norms.flags.writeable = False
        self._data = arr
        self._row_sq_norms = norms

    @classmethod
    def from_rows(cls, rows: Iterable[Iterable[float]]) -> "DenseMatrix":
        return cls(np.array([list(r) for r in rows], dtype=np.float64))

    @property
    def data(self) -> np.ndarray:
        """Read-only ``(I, J)`` array."""
        return self._data

    @property
    def row_sq_norms(self) -> np.ndarray:
        """Read-only cached ``||A_i||**2`` for every row."""
        return self._row_sq_norms

    @property
    def rows(self) -> int:
        return self._data.shape[0]

    @property
    def cols(self) -> int:
        return self._data.shape[1]

    @property
    def shape(self) -> tuple[int, int]:
        return self._data.shape

    def is_standardized(self, tol: float = 1e-10) -> bool:
        """True when every row has unit Euclidean norm within ``tol``."""
        return bool(np.max(np.abs(np.sqrt(self._row_sq_norms) - 1.0)) <= tol)

    def matvec(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=np.float64)
        if x.shape != (self.cols,):
            raise DimensionError(f"expected vector of length {self.cols}, got shape {x.shape}")
        return self._data @ x

    def __array__(self, dtype=None, copy=None):
        if dtype is None:
            return self._data
        return self._data.astype(dtype)

    def __eq__(self, other) -> bool:
        if not isinstance(other, DenseMatrix):
            return NotImplemented
        return self.shape == other.shape and np.array_equal(self._data, other._data)

    def __hash__(self):
        return hash((self.shape, self._data.tobytes()))

    def __repr__(self) -> str:
        return f"DenseMatrix(rows={self.rows}, cols={self.cols})"


@dataclass(frozen=True)
class Hyperplane:
    """The set ``{x : <normal, x> = offset}``."""

    normal: np.ndarray
    offset: float

    def __post_init__(self):
        normal = as_vector(self.normal, "normal")
        if not np.any(normal):
            raise DegenerateHyperplaneError("hyperplane normal must be nonzero")
        object.__setattr__(self, "normal", normal)
        object.__setattr__(self, "offset", float(self.offset))


def dot(u, v) -> float:
    u = np.asarray(u, dtype=np.float64)
    v = np.asarray(v, dtype=np.float64)
    if u.shape != v.shape or u.ndim != 1:
        raise DimensionError(f"length mismatch: {u.shape} vs {v.shape}")
    return float(u @ v)


def row_view(A: DenseMatrix, i: int) -> np.ndarray:
    """Return row ``i`` (1-based) of ``A`` as a read-only view."""
    if not 1 <= i <= A.rows:
        raise IndexError(f"row index {i} out of range 1..{A.rows}")
    return A.data[i - 1]


def hyperplane(A: DenseMatrix, b, i: int) -> Hyperplane:
    """Hyperplane of equation ``i`` (1-based) of the system ``Ax = b``."""
    return Hyperplane(row_view(A, i), float(np.asarray(b)[i - 1]))


def project_hyperplane(u, h: Hyperplane) -> np.ndarray:
    """Orthogonal projection of ``u`` onto ``h``.

    Uses the closed form ``u - ((<u, v> - d) / ||v||**2) v``.
    """
    u = as_vector(u, "u")
    v = h.normal
    if u.shape != v.shape:
        raise DimensionError(f"length mismatch: {u.shape} vs {v.shape}")
    vv = float(v @ v)
    if vv == 0.0:
        raise DegenerateHyperplaneError("hyperplane normal must be nonzero")
    return u - ((float(u @ v) - h.offset) / vv) * v


def frobenius_sq(A: DenseMatrix) -> float:
    return float(np.sum(A.row_sq_norms))


def residual(A: DenseMatrix, x, b) -> np.ndarray:
    """Return ``Ax - b``."""
    b = np.asarray(b, dtype=np.float64)
    if b.shape != (A.rows,):
        raise DimensionError(f"expected right-hand side of length {A.rows}, got shape {b.shape}")
    return A.matvec(x) - b


# ---------------------------------------------------------------------------
# Text formats
# ---------------------------------------------------------------------------

def format_matrix(A) -> str:
    data = np.asarray(A, dtype=np.float64)
    lines = [f"{data.shape[0]} {data.shape[1]}"]
    lines.extend(" ".join(_FLOAT_FMT % v for v in row) for row in data)
    return "\n".join(lines) + "\n"


def format_vector(v) -> str:
    v = np.asarray(v, dtype=np.float64)
    return "\n".join([str(v.size)] + [_FLOAT_FMT % x for x in v]) + "\n"


def parse_matrix(text: str) -> DenseMatrix:
    lines = [ln for ln in text.split("\n") if ln.strip()]
    if not lines:
        raise MalformedFileError("empty matrix file")
    try:
        I, J = (int(t) for t in lines[0].split())
    except ValueError as exc:
        raise MalformedFileError(f"bad matrix header {lines[0]!r}") from exc
    if I < 1 or J < 1:
        raise MalformedFileError(f"bad matrix dimensions {I} x {J}")
    if len(lines) - 1 != I:
        raise MalformedFileError(f"expected {I} rows, found {len(lines) - 1}")
    rows = []
    for n, ln in enumerate(lines[1:], start=1):
        try:
            row = [float(t) for t in ln.split()]
        except ValueError as exc:
            raise MalformedFileError(f"non-numeric entry in row {n}") from exc
        if len(row) != J:
            raise MalformedFileError(f"row {n} has {len(row)} entries, expected {J}")
        rows.append(row)
    return DenseMatrix(np.array(rows))


def parse_vector(text: str) -> np.ndarray:
    lines = [ln for ln in text.split("\n") if ln.strip()]
    if not lines:
        raise MalformedFileError("empty vector file")
    try:
        n = int(lines[0])
    except ValueError as exc:
        raise MalformedFileError(f"bad vector header {lines[0]!r}") from exc
    if n < 1 or len(lines) - 1 != n:
        raise MalformedFileError(f"expected {n} entries, found {len(lines) - 1}")
    try:
        return np.array([float(ln) for ln in lines[1:]], dtype=np.float64)
    except ValueError as exc:
        raise MalformedFileError("non-numeric vector entry") from exc


def write_matrix(path: PathLike, A) -> None:
    Path(path).write_text(format_matrix(A), encoding="utf-8", newline="\n")


def read_matrix(path: PathLike) -> DenseMatrix:
    return parse_matrix(Path(path).read_text(encoding="utf-8"))


def write_vector(path: PathLike, v) -> None:
    Path(path).write_text(format_vector(v), encoding="utf-8", newline="\n")


def read_vector(path: PathLike) -> np.ndarray:
    return parse_vector(Path(path).read_text(encoding="utf-8"))
