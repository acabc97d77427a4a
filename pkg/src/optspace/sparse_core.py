"""Sparse observed-matrix container, uniform sampling, trimming and
iterative spectral primitives.

Indices are 0-based everywhere inside the package. MatrixMarket files are
1-based; the conversion happens in :func:`read_mtx` / :func:`write_mtx` only.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property
from pathlib import Path

import numpy as np
import scipy.sparse as sp

from .errors import ConvergenceError, InvalidArgumentError

__all__ = [
    "ObservedMatrix",
    "TrimInfo",
    "SvdTriple",
    "sample_mask",
    "trim",
    "spectral_norm",
    "top_k_svd",
    "read_mtx",
    "write_mtx",
]


@dataclass(frozen=True, eq=False)
class ObservedMatrix:
    """Revealed entries of an ``m x n`` matrix in coordinate form.

    An entry listed with value 0 is *observed*; positions not listed are
    unobserved. Duplicate ``(i, j)`` couples are rejected.
    """

    m: int
    n: int
    rows: np.ndarray
    cols: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        rows = np.asarray(self.rows, dtype=np.int64).ravel()
        cols = np.asarray(self.cols, dtype=np.int64).ravel()
        values = np.asarray(self.values, dtype=float).ravel()
        if not (rows.shape == cols.shape == values.shape):
            raise InvalidArgumentError("rows, cols and values must have equal length")
        if self.m < 1 or self.n < 1:
            raise InvalidArgumentError(f"invalid shape ({self.m}, {self.n})")
        if rows.size:
            if rows.min() < 0 or rows.max() >= self.m or cols.min() < 0 or cols.max() >= self.n:
                raise InvalidArgumentError("entry index out of range")
            keys = rows * self.n + cols
            if np.unique(keys).size != keys.size:
                raise InvalidArgumentError("duplicate (i, j) couple in observations")
        for name, arr in (("rows", rows), ("cols", cols), ("values", values)):
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)

    @classmethod
    def from_dense(cls, N: np.ndarray, mask=None) -> ObservedMatrix:
        """Observe ``N`` on ``mask`` (boolean array, or an ``(rows, cols)`` pair).

        Without a mask every entry is observed.
        """
        N = np.asarray(N, dtype=float)
        m, n = N.shape
        if mask is None:
            rows, cols = np.divmod(np.arange(m * n), n)
        elif isinstance(mask, tuple):
            rows, cols = (np.asarray(a, dtype=np.int64) for a in mask)
        else:
            rows, cols = np.nonzero(np.asarray(mask, dtype=bool))
        return cls(m, n, rows, cols, N[rows, cols])

    @property
    def shape(self) -> tuple[int, int]:
        return (self.m, self.n)

    @property
    def nnz(self) -> int:
        """Size of the revealed set, ``|E|``."""
        return int(self.rows.size)

    @property
    def epsilon(self) -> float:
        """``|E| / sqrt(mn)``."""
        return self.nnz / np.sqrt(self.m * self.n)

    @property
    def alpha(self) -> float:
        return self.m / self.n

    def row_counts(self) -> np.ndarray:
        return np.bincount(self.rows, minlength=self.m)

    def col_counts(self) -> np.ndarray:
        return np.bincount(self.cols, minlength=self.n)

    @cached_property
    def _csr(self) -> sp.csr_matrix:
        return sp.csr_matrix((self.values, (self.rows, self.cols)), shape=self.shape)

    @cached_property
    def _csc(self) -> sp.csc_matrix:
        return self._csr.tocsc()

    def matvec(self, v: np.ndarray) -> np.ndarray:
        """``A @ v`` for a vector or an ``n x k`` block."""
        return self._csr @ v

    def rmatvec(self, u: np.ndarray) -> np.ndarray:
        """``A.T @ u`` for a vector or an ``m x k`` block."""
        return self._csc.T @ u

    def with_values(self, values: np.ndarray) -> ObservedMatrix:
        """Same revealed set, new values."""
        return ObservedMatrix(self.m, self.n, self.rows, self.cols, values)

    def subset(self, keep: np.ndarray) -> ObservedMatrix:
        keep = np.asarray(keep, dtype=bool)
        return ObservedMatrix(self.m, self.n, self.rows[keep], self.cols[keep], self.values[keep])

    def pattern(self) -> ObservedMatrix:
        """The 0/1 matrix of revealed positions."""
        return self.with_values(np.ones(self.nnz))

    def transpose(self) -> ObservedMatrix:
        return ObservedMatrix(self.n, self.m, self.cols, self.rows, self.values)

    def frobenius_norm(self) -> float:
        return float(np.linalg.norm(self.values))

    def to_dense(self) -> np.ndarray:
        """Materialize with zeros in unobserved positions."""
        A = np.zeros(self.shape)
        A[self.rows, self.cols] = self.values
        return A

    def to_scipy(self) -> sp.csr_matrix:
        return self._csr.copy()

    def same_entries(self, other: ObservedMatrix) -> bool:
        """True when both hold the same couples with the same values."""
        if self.shape != other.shape or self.nnz != other.nnz:
            return False
        a = np.lexsort((self.cols, self.rows))
        b = np.lexsort((other.cols, other.rows))
        return (
            np.array_equal(self.rows[a], other.rows[b])
            and np.array_equal(self.cols[a], other.cols[b])
            and np.array_equal(self.values[a], other.values[b])
        )


@dataclass(frozen=True)
class TrimInfo:
    kept_rows: np.ndarray
    kept_cols: np.ndarray
    row_threshold: float
    col_threshold: float

    @property
    def n_trimmed_rows(self) -> int:
        return int((~self.kept_rows).sum())

    @property
    def n_trimmed_cols(self) -> int:
        return int((~self.kept_cols).sum())


@dataclass(frozen=True)
class SvdTriple:
    """Leading singular triplets; ``converged`` is False only on partial results."""

    sigmas: np.ndarray
    left_vectors: np.ndarray
    right_vectors: np.ndarray
    iterations: int = 0
    converged: bool = True

    @property
    def k(self) -> int:
        return int(self.sigmas.size)

    def reconstruct(self) -> np.ndarray:
        return (self.left_vectors * self.sigmas) @ self.right_vectors.T


def sample_mask(m: int, n: int, target_size: int, seed=None) -> tuple[np.ndarray, np.ndarray]:
    """Draw ``target_size`` distinct couples uniformly among all subsets of that size.

    Returns ``(rows, cols)`` sorted in row-major order.
    """
    if target_size < 0 or target_size > m * n:
        raise InvalidArgumentError(f"target_size={target_size} outside [0, {m * n}]")
    rng = np.random.default_rng(seed)
    flat = np.sort(rng.choice(m * n, size=target_size, replace=False))
    rows, cols = np.divmod(flat, n)
    return rows.astype(np.int64), cols.astype(np.int64)


def trim(obs: ObservedMatrix) -> tuple[ObservedMatrix, TrimInfo]:
    """Zero out over-represented rows and columns.

    A row is over-represented when it holds strictly more than ``2|E|/m``
    revealed entries (columns: ``2|E|/n``). Counts and thresholds are taken
    on the input, once.
    """
    e = obs.nnz
    row_threshold = 2.0 * e / obs.m
    col_threshold = 2.0 * e / obs.n
    kept_rows = obs.row_counts() <= row_threshold
    kept_cols = obs.col_counts() <= col_threshold
    keep = kept_rows[obs.rows] & kept_cols[obs.cols]
    info = TrimInfo(kept_rows, kept_cols, row_threshold, col_threshold)
    return obs.subset(keep), info


def _max_iters(obs: ObservedMatrix, max_iters: int | None) -> int:
    # 10 sweeps per dimension, floored so tiny matrices still reach tight tolerances
    return max(10 * min(obs.m, obs.n), 1000) if max_iters is None else max_iters


def spectral_norm(obs: ObservedMatrix, tol: float = 1e-8, seed=0, max_iters: int | None = None,
                  block: int = 8) -> float:
    """Operator norm of the (zero-filled) observed matrix.

    Block power iteration on ``A^T A`` with ``block`` vectors. A single
    vector converges like ``(s2/s1)^2`` per sweep, which is hopeless when
    the top singular values cluster, as they do for noise matrices. The
    stop is on the Ritz residual, which bounds the error of the value.
    """
    if tol <= 0:
        raise InvalidArgumentError("tol must be positive")
    if obs.nnz == 0 or not np.any(obs.values):
        return 0.0
    try:
        svd = top_k_svd(obs, 1, tol=tol, seed=seed, max_iters=max_iters, oversample=max(block - 1, 0))
    except ConvergenceError as exc:
        raise ConvergenceError("power iteration did not converge", estimate=float(exc.estimate.sigmas[0])) from None
    return float(svd.sigmas[0])


def top_k_svd(obs: ObservedMatrix, k: int, tol: float = 1e-12, seed=0, max_iters: int | None = None,
              oversample: int = 5) -> SvdTriple:
    """Leading ``k`` singular triplets by block subspace iteration.

    The iterated block carries ``oversample`` extra columns and is
    re-orthonormalized each sweep; triplets are read off by Rayleigh-Ritz.
    Converged when every residual ``||A v - s u||`` and ``||A^T u - s v||`` is
    below ``tol * sigma_1``.
    """
    m, n = obs.shape
    if not 1 <= k <= min(m, n):
        raise InvalidArgumentError(f"k={k} outside [1, {min(m, n)}]")
    if obs.nnz == 0:
        zeros = np.zeros(k)
        return SvdTriple(zeros, np.eye(m, k), np.eye(n, k))
    p = min(k + oversample, min(m, n))
    rng = np.random.default_rng(seed)
    V, _ = np.linalg.qr(rng.standard_normal((n, p)))
    iters = _max_iters(obs, max_iters)
    result = None
    for it in range(1, iters + 1):
        U, _ = np.linalg.qr(obs.matvec(V))
        B = obs.rmatvec(U)  # n x p, equals (U^T A)^T
        V, _ = np.linalg.qr(B)
        # Rayleigh-Ritz on the current pair of subspaces
        small = U.T @ obs.matvec(V)
        a, s, bt = np.linalg.svd(small)
        Uk = U @ a[:, :k]
        Vk = V @ bt[:k].T
        sk = s[:k]
        res_left = np.linalg.norm(obs.matvec(Vk) - Uk * sk, axis=0)
        res_right = np.linalg.norm(obs.rmatvec(Uk) - Vk * sk, axis=0)
        result = SvdTriple(sk, Uk, Vk, iterations=it)
        scale = s[0] if s[0] > 0 else 1.0
        if max(res_left.max(), res_right.max()) <= tol * scale:
            return result
        V = V @ bt.T
    partial = SvdTriple(result.sigmas, result.left_vectors, result.right_vectors,
                        iterations=iters, converged=False)
    raise ConvergenceError("subspace iteration did not converge", estimate=partial)


_MTX_HEADER = "%%MatrixMarket matrix coordinate real general"


def read_mtx(path) -> ObservedMatrix:
    """Read a ``coordinate real general`` MatrixMarket file."""
    with open(path) as fh:
        header = fh.readline().strip()
        if header.lower().split() != _MTX_HEADER.lower().split():
            raise InvalidArgumentError(f"unsupported MatrixMarket header: {header!r}")
        line = fh.readline()
        while line.startswith("%") or not line.strip():
            line = fh.readline()
            if not line:
                raise InvalidArgumentError("missing size line")
        m, n, nnz = (int(tok) for tok in line.split())
        data = np.loadtxt(fh, ndmin=2, comments="%") if nnz else np.empty((0, 3))
    if data.shape[0] != nnz or (nnz and data.shape[1] != 3):
        raise InvalidArgumentError(f"expected {nnz} entries of 3 fields, got shape {data.shape}")
    rows = data[:, 0].astype(np.int64) - 1
    cols = data[:, 1].astype(np.int64) - 1
    return ObservedMatrix(m, n, rows, cols, data[:, 2])


def write_mtx(path, obs: ObservedMatrix) -> None:
    """Write entries 1-based with full float precision."""
    path = Path(path)
    with open(path, "w") as fh:
        fh.write(_MTX_HEADER + "\n")
        fh.write(f"{obs.m} {obs.n} {obs.nnz}\n")
        for i, j, v in zip(obs.rows, obs.cols, obs.values):
            fh.write(f"{i + 1} {j + 1} {float(v)!r}\n")
