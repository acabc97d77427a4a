"""Rank estimation and the rescaled rank-r projection used to start the descent."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DegenerateInputError, InvalidArgumentError, NoGapError
from .manifold import FactorPoint
from .sparse_core import ObservedMatrix, SvdTriple, top_k_svd

__all__ = ["RankRProjection", "rank_r_project", "estimate_rank", "initial_point"]


@dataclass(frozen=True)
class RankRProjection:
    """``X0 @ S0 @ Y0.T`` equals ``(mn/|E|) sum_{i<=r} sigma_i x_i y_i^T``.

    ``X0.T @ X0 = m I`` and ``Y0.T @ Y0 = n I``.
    """

    r: int
    scale: float
    X0: np.ndarray
    S0: np.ndarray
    Y0: np.ndarray

    def dense(self) -> np.ndarray:
        return self.X0 @ self.S0 @ self.Y0.T


def rank_r_project(trimmed: ObservedMatrix, r: int, e_size: int, svd: SvdTriple | None = None,
                   tol: float = 1e-12, seed=0) -> RankRProjection:
    """Rank-r projection of the trimmed matrix, rescaled by ``mn / e_size``.

    ``e_size`` is the size of the revealed set *before* trimming. A
    precomputed ``svd`` with at least ``r`` triplets may be passed in.
    """
    m, n = trimmed.shape
    if not 1 <= r <= min(m, n):
        raise InvalidArgumentError(f"r={r} outside [1, {min(m, n)}]")
    if trimmed.nnz == 0 or not np.any(trimmed.values):
        raise DegenerateInputError("trimmed matrix is empty")
    if e_size <= 0:
        raise InvalidArgumentError("e_size must be positive")
    if svd is None or svd.k < r:
        svd = top_k_svd(trimmed, r, tol=tol, seed=seed)
    scale = m * n / e_size
    X0 = np.sqrt(m) * svd.left_vectors[:, :r]
    Y0 = np.sqrt(n) * svd.right_vectors[:, :r]
    S0 = np.diag(scale * svd.sigmas[:r] / np.sqrt(m * n))
    return RankRProjection(r, scale, X0, S0, Y0)


def estimate_rank(sigmas, max_rank: int) -> int:
    """Index of the largest ratio between consecutive singular values.

    Returns the 1-based ``i <= max_rank`` maximizing ``sigmas[i-1] / sigmas[i]``;
    the first drop to zero counts as an infinite ratio. Ties go to the smaller i.
    """
    s = np.asarray(sigmas, dtype=float)
    if s.size < 2:
        raise InvalidArgumentError("need at least two singular values")
    if not 1 <= max_rank < s.size:
        raise InvalidArgumentError(f"max_rank={max_rank} must lie in [1, {s.size - 1}]")
    top = s.max()
    if top == 0.0 or np.ptp(s) <= 4 * np.finfo(float).eps * top:
        raise NoGapError("flat singular-value spectrum; supply the rank explicitly")
    best_i, best = 1, -1.0
    for i in range(1, max_rank + 1):
        hi, lo = s[i - 1], s[i]
        if lo == 0.0:
            ratio = np.inf if hi > 0.0 else 0.0
        else:
            ratio = hi / lo
        if ratio > best:
            best_i, best = i, ratio
    return best_i


def initial_point(proj: RankRProjection) -> FactorPoint:
    return FactorPoint(proj.X0, proj.Y0)
