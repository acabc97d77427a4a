"""Geometry of pairs of subspaces, G(m, r) x G(n, r).

A point is stored as ``(X, Y)`` with ``X.T @ X = m I`` and ``Y.T @ Y = n I``;
only the column spans matter. Tangent vectors ``(W, Q)`` satisfy
``X.T @ W = 0`` and ``Y.T @ Q = 0`` and have squared length
``||W||_F^2 / m + ||Q||_F^2 / n``, which is the squared arclength of the
geodesic they generate over unit time.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import CutLocusError, InvalidArgumentError

__all__ = [
    "FactorPoint",
    "TangentVector",
    "principal_angles",
    "distance",
    "project_tangent",
    "move",
    "geodesic_to",
]

RENORM_TOL = 1e-10
CUT_LOCUS_MARGIN = 1e-6


def _orthonormalize(A: np.ndarray) -> np.ndarray:
    Q, R = np.linalg.qr(A)
    # fix column signs so the factor stays close to A's own orientation
    signs = np.where(np.diag(R) < 0, -1.0, 1.0)
    return Q * signs


@dataclass(frozen=True)
class FactorPoint:
    X: np.ndarray
    Y: np.ndarray

    def __post_init__(self):
        X = np.asarray(self.X, dtype=float)
        Y = np.asarray(self.Y, dtype=float)
        if X.ndim != 2 or Y.ndim != 2 or X.shape[1] != Y.shape[1]:
            raise InvalidArgumentError(f"incompatible factor shapes {X.shape}, {Y.shape}")
        object.__setattr__(self, "X", X)
        object.__setattr__(self, "Y", Y)

    @classmethod
    def from_factors(cls, X, Y) -> FactorPoint:
        """Orthonormalize arbitrary full-rank factors and rescale to ``m I`` / ``n I``."""
        X = np.asarray(X, dtype=float)
        Y = np.asarray(Y, dtype=float)
        return cls(np.sqrt(X.shape[0]) * _orthonormalize(X), np.sqrt(Y.shape[0]) * _orthonormalize(Y))

    @classmethod
    def random(cls, m: int, n: int, r: int, seed=None) -> FactorPoint:
        rng = np.random.default_rng(seed)
        return cls.from_factors(rng.standard_normal((m, r)), rng.standard_normal((n, r)))

    @property
    def m(self) -> int:
        return self.X.shape[0]

    @property
    def n(self) -> int:
        return self.Y.shape[0]

    @property
    def r(self) -> int:
        return self.X.shape[1]

    def normalization_error(self) -> float:
        eye = np.eye(self.r)
        return max(np.abs(self.X.T @ self.X / self.m - eye).max(),
                   np.abs(self.Y.T @ self.Y / self.n - eye).max())

    def renormalized(self, tol: float = RENORM_TOL) -> FactorPoint:
        """Return self if within ``tol`` of the normalization, else a re-orthonormalized copy."""
        if self.normalization_error() <= tol:
            return self
        return FactorPoint.from_factors(self.X, self.Y)

    def rotated(self, A: np.ndarray, B: np.ndarray) -> FactorPoint:
        """Same subspaces, new bases ``(X A, Y B)``."""
        return FactorPoint(self.X @ A, self.Y @ B)


@dataclass(frozen=True)
class TangentVector:
    W: np.ndarray
    Q: np.ndarray

    def norm(self) -> float:
        m, n = self.W.shape[0], self.Q.shape[0]
        return float(np.sqrt(np.sum(self.W ** 2) / m + np.sum(self.Q ** 2) / n))

    def dot(self, other: TangentVector) -> float:
        """Plain Frobenius pairing ``<W, W'> + <Q, Q'>``.

        Paired with a gradient this yields the directional derivative.
        """
        return float(np.sum(self.W * other.W) + np.sum(self.Q * other.Q))

    def __mul__(self, c: float) -> TangentVector:
        return TangentVector(c * self.W, c * self.Q)

    __rmul__ = __mul__

    def __neg__(self) -> TangentVector:
        return TangentVector(-self.W, -self.Q)

    def __add__(self, other: TangentVector) -> TangentVector:
        return TangentVector(self.W + other.W, self.Q + other.Q)

    def tangency_error(self, p: FactorPoint) -> float:
        return max(np.abs(p.X.T @ self.W).max(initial=0.0) / p.m,
                   np.abs(p.Y.T @ self.Q).max(initial=0.0) / p.n)


def _check_same_space(p1: FactorPoint, p2: FactorPoint):
    if p1.X.shape != p2.X.shape or p1.Y.shape != p2.Y.shape:
        raise InvalidArgumentError(
            f"points live on different manifolds: {p1.X.shape}/{p1.Y.shape} vs {p2.X.shape}/{p2.Y.shape}")


def _angle_decomposition(A1: np.ndarray, A2: np.ndarray):
    """Principal angles and vectors between span(A1) and span(A2).

    Returns ``(theta, Ya, L)`` with ``theta`` ascending; ``Q1 @ Ya`` and the
    columns of ``L`` (unit, orthogonal to span(A1)) give the geodesic frame.
    Cosines and sines are computed separately so small angles keep full
    relative accuracy.
    """
    Q1 = A1 / np.sqrt(A1.shape[0])
    Q2 = A2 / np.sqrt(A2.shape[0])
    C = Q1.T @ Q2
    Ya, cos, Zbt = np.linalg.svd(C)
    P = (Q2 - Q1 @ C) @ Zbt.T
    sin = np.linalg.norm(P, axis=0)
    theta = np.arctan2(sin, np.clip(cos, 0.0, 1.0))
    with np.errstate(invalid="ignore", divide="ignore"):
        L = np.where(sin > 0, P / np.where(sin > 0, sin, 1.0), 0.0)
    return theta, Ya, L


def principal_angles(A1: np.ndarray, A2: np.ndarray) -> np.ndarray:
    """Principal angles between two normalized factors (``A.T @ A = rows * I``)."""
    return _angle_decomposition(A1, A2)[0]


def distance(p1: FactorPoint, p2: FactorPoint) -> float:
    """Geodesic distance: 2-norm of all principal angles on both factors."""
    _check_same_space(p1, p2)
    tx = principal_angles(p1.X, p2.X)
    ty = principal_angles(p1.Y, p2.Y)
    return float(np.sqrt(np.sum(tx ** 2) + np.sum(ty ** 2)))


def project_tangent(p: FactorPoint, ambient) -> TangentVector:
    """Remove the components of ``(A_X, A_Y)`` lying in the column spans of ``(X, Y)``."""
    AX, AY = ambient
    AX = np.asarray(AX, dtype=float)
    AY = np.asarray(AY, dtype=float)
    if AX.shape != p.X.shape or AY.shape != p.Y.shape:
        raise InvalidArgumentError("ambient direction shape does not match the point")
    W = AX - p.X @ (p.X.T @ AX) / p.m
    Q = AY - p.Y @ (p.Y.T @ AY) / p.n
    return TangentVector(W, Q)


def _geodesic_factor(A: np.ndarray, D: np.ndarray, t: float) -> np.ndarray:
    rows = A.shape[0]
    L, theta, Rt = np.linalg.svd(D / np.sqrt(rows), full_matrices=False)
    R = Rt.T
    Q0 = A / np.sqrt(rows)
    Qt = (Q0 @ R) * np.cos(t * theta) @ Rt + L * np.sin(t * theta) @ Rt
    return np.sqrt(rows) * Qt


def move(p: FactorPoint, w: TangentVector, t: float) -> FactorPoint:
    """Follow the geodesic from ``p`` with initial velocity ``w`` for time ``t``."""
    if w.W.shape != p.X.shape or w.Q.shape != p.Y.shape:
        raise InvalidArgumentError("tangent vector shape does not match the point")
    if t == 0.0:
        return p
    X = _geodesic_factor(p.X, w.W, t)
    Y = _geodesic_factor(p.Y, w.Q, t)
    return FactorPoint(X, Y).renormalized()


def _log_factor(A1: np.ndarray, A2: np.ndarray) -> np.ndarray:
    theta, Ya, L = _angle_decomposition(A1, A2)
    if theta.size and theta.max() >= np.pi / 2 - CUT_LOCUS_MARGIN:
        raise CutLocusError(f"principal angle {theta.max():.12f} at the cut locus")
    return np.sqrt(A1.shape[0]) * (L * theta) @ Ya.T


def geodesic_to(p_from: FactorPoint, p_to: FactorPoint) -> TangentVector:
    """Initial velocity of the unit-time geodesic from ``p_from`` to ``p_to``."""
    _check_same_space(p_from, p_to)
    return TangentVector(_log_factor(p_from.X, p_to.X), _log_factor(p_from.Y, p_to.Y))
