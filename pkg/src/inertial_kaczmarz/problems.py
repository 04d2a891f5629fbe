"""Random consistent test systems with entries uniform on ``[c, 1]``.

A fixed :class:`GenSpec` always produces the same bytes: entries come from
numpy's PCG64 and the right-hand side and row norms are summed with
:func:`math.fsum`, so no BLAS reduction order leaks into the data.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from pathlib import Path

import numba as nb
import numpy as np

from .errors import ChecksumMismatchError, DimensionError, MalformedFileError, ZeroRowError
from .linalg import DenseMatrix, format_matrix, format_vector, parse_matrix, parse_vector
from .sampling import DEFAULT_SEED, MASK64, derive_seed
from .spectral import coherence_bounds, min_norm_solution


@dataclass(frozen=True)
class GenSpec:
    rows: int
    cols: int
    c: float
    seed: int = DEFAULT_SEED
    standardize: bool = True

    def __post_init__(self):
        if int(self.rows) < 2:
            raise ValueError(f"rows must be >= 2, got {self.rows}")
        if int(self.cols) < 1:
            raise ValueError(f"cols must be >= 1, got {self.cols}")
        if not float(self.c) < 1.0:
            raise ValueError(f"c must be < 1, got {self.c}")
        object.__setattr__(self, "rows", int(self.rows))
        object.__setattr__(self, "cols", int(self.cols))
        object.__setattr__(self, "c", float(self.c))
        object.__setattr__(self, "seed", int(self.seed) & MASK64)
        object.__setattr__(self, "standardize", bool(self.standardize))


@dataclass(frozen=True, eq=False)
class ProblemInstance:
    A: DenseMatrix
    b: np.ndarray
    x_star: np.ndarray
    x_dag: np.ndarray
    spec: GenSpec

    @property
    def standardized(self) -> bool:
        return self.spec.standardize


def _fsum_rows(M: np.ndarray, x: np.ndarray) -> np.ndarray:
    return np.array([math.fsum(row * x) for row in M])


def generate(spec: GenSpec) -> ProblemInstance:
    """Draw ``A`` with i.i.d. ``U[c, 1]`` entries and ``x*`` with ``U[0, 1]`` entries; set ``b = A x*``.

    With ``spec.standardize`` each equation is divided by the original
    row norm, which leaves the solution set unchanged.
    """
    gen = np.random.Generator(np.random.PCG64(spec.seed))
    A = spec.c + (1.0 - spec.c) * gen.random((spec.rows, spec.cols))
    x_star = gen.random(spec.cols)
    b = _fsum_rows(A, x_star)
    if spec.standardize:
        norms = np.sqrt(np.array([math.fsum(row * row) for row in A]))
        if np.any(norms == 0.0):
            raise ZeroRowError("generated a zero row")
        A = A / norms[:, None]
        b = b / norms
    M = DenseMatrix(A)
    return ProblemInstance(A=M, b=b, x_star=x_star, x_dag=min_norm_solution(M, b), spec=spec)


@dataclass(frozen=True)
class CoherenceRow:
    c: float
    mean_delta: float
    mean_delta_cap: float
    deltas: tuple
    delta_caps: tuple


def coherence_sweep(c_values, rows: int = 50, cols: int = 20, trials: int = 20,
                    seed: int = DEFAULT_SEED, standardize: bool = True) -> list[CoherenceRow]:
    """Mean minimum and maximum row coherence over ``trials`` instances for each ``c``.

    Trial ``t`` uses the same derived seed for every ``c`` value.
    """
    out = []
    for c in c_values:
        lo, hi = [], []
        for t in range(trials):
            spec = GenSpec(rows, cols, c, derive_seed(seed, t), standardize)
            gen = np.random.Generator(np.random.PCG64(spec.seed))
            A = DenseMatrix(spec.c + (1.0 - spec.c) * gen.random((rows, cols)))
            d, D = coherence_bounds(A)
            lo.append(d)
            hi.append(D)
        out.append(CoherenceRow(float(c), float(np.mean(lo)), float(np.mean(hi)), tuple(lo), tuple(hi)))
    return out


# ---------------------------------------------------------------------------
# Persistence
# ---------------------------------------------------------------------------

_FNV_OFFSET = np.uint64(0xCBF29CE484222325)
_FNV_PRIME = np.uint64(0x100000001B3)


@nb.njit(cache=True)
def _fnv1a_bytes(data, h):
    for byte in data:
        h = (h ^ np.uint64(byte)) * _FNV_PRIME
    return h


def fnv1a64(*chunks: bytes) -> int:
    """64-bit FNV-1a hash of the concatenation of ``chunks``."""
    h = _FNV_OFFSET
    for ch in chunks:
        h = np.uint64(int(_fnv1a_bytes(np.frombuffer(ch, dtype=np.uint8), h)) & MASK64)
    return int(h)


_SUFFIXES = {"A": ".A.txt", "b": ".b.txt", "xstar": ".xstar.txt", "xdag": ".xdag.txt"}


def _texts(p: ProblemInstance) -> dict:
    return {
        "A": format_matrix(p.A),
        "b": format_vector(p.b),
        "xstar": format_vector(p.x_star),
        "xdag": format_vector(p.x_dag),
    }


def _checksum(texts: dict) -> str:
    # x_dag comes out of LAPACK and may differ in the last bit across
    # platforms, so only the generated data is hashed.
    return f"{fnv1a64(*(texts[k].encode('utf-8') for k in ('A', 'b', 'xstar'))):016x}"


def checksum(p: ProblemInstance) -> str:
    return _checksum(_texts(p))


def save(p: ProblemInstance, path) -> Path:
    """Write ``<path>.manifest`` and the four data files next to it; return the manifest path."""
    base = Path(path)
    base.parent.mkdir(parents=True, exist_ok=True)
    texts = _texts(p)
    for key, suffix in _SUFFIXES.items():
        Path(str(base) + suffix).write_text(texts[key], encoding="utf-8", newline="\n")
    manifest = {
        "I": p.A.rows,
        "J": p.A.cols,
        "c": repr(p.spec.c),
        "seed": p.spec.seed,
        "standardized": str(p.spec.standardize).lower(),
        "checksum": _checksum(texts),
    }
    mpath = Path(str(base) + ".manifest")
    mpath.write_text("".join(f"{k}={v}\n" for k, v in manifest.items()), encoding="utf-8", newline="\n")
    return mpath


def _base_of(path) -> Path:
    s = str(path)
    return Path(s[: -len(".manifest")] if s.endswith(".manifest") else s)


def read_manifest(path) -> dict:
    mpath = Path(str(_base_of(path)) + ".manifest")
    fields = {}
    for n, line in enumerate(mpath.read_text(encoding="utf-8").splitlines(), start=1):
        if not line.strip():
            continue
        key, sep, value = line.partition("=")
        if not sep:
            raise MalformedFileError(f"{mpath}: line {n} is not key=value")
        fields[key.strip()] = value.strip()
    missing = {"I", "J", "c", "seed", "standardized", "checksum"} - fields.keys()
    if missing:
        raise MalformedFileError(f"{mpath}: missing keys {sorted(missing)}")
    try:
        return {
            "I": int(fields["I"]),
            "J": int(fields["J"]),
            "c": float(fields["c"]),
            "seed": int(fields["seed"]),
            "standardized": {"true": True, "false": False}[fields["standardized"].lower()],
            "checksum": fields["checksum"].lower(),
        }
    except (ValueError, KeyError) as exc:
        raise MalformedFileError(f"{mpath}: bad manifest value ({exc})") from exc


def load(path) -> ProblemInstance:
    """Read an instance written by :func:`save`. ``path`` may name the manifest or the common prefix."""
    base = _base_of(path)
    meta = read_manifest(base)
    texts = {k: Path(str(base) + s).read_text(encoding="utf-8") for k, s in _SUFFIXES.items()}
    A = parse_matrix(texts["A"])
    b = parse_vector(texts["b"])
    x_star = parse_vector(texts["xstar"])
    x_dag = parse_vector(texts["xdag"])
    if A.shape != (meta["I"], meta["J"]):
        raise DimensionError(f"manifest says {meta['I']}x{meta['J']}, matrix file is {A.rows}x{A.cols}")
    if b.size != A.rows or x_star.size != A.cols or x_dag.size != A.cols:
        raise DimensionError("vector lengths do not match the matrix")
    if _checksum(texts) != meta["checksum"]:
        raise ChecksumMismatchError(f"{base}: data files do not match the manifest checksum")
    spec = GenSpec(meta["I"], meta["J"], meta["c"], meta["seed"], meta["standardized"])
    return ProblemInstance(A=A, b=b, x_star=x_star, x_dag=x_dag, spec=spec)


def verify(path) -> ProblemInstance:
    """Load an instance and check it is exactly what its manifest parameters regenerate."""
    p = load(path)
    meta = read_manifest(path)
    fresh = generate(p.spec)
    if checksum(fresh) != meta["checksum"]:
        raise ChecksumMismatchError(f"{_base_of(path)}: manifest parameters regenerate a different instance")
    return p
