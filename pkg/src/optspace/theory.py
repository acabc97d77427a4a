"""Measured model quantities and the error-bound formulas they feed.

Numerical constants that are not pinned down analytically (``c``, ``c1``,
``c2``) are arguments defaulting to 1, meant to be fitted from experiments.
Inputs are arranged so that ``alpha = m / n >= 1``; :func:`measure_bound_inputs`
transposes when needed.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from typing import NamedTuple

import numpy as np

from .manifold import FactorPoint, distance
from .sparse_core import ObservedMatrix, spectral_norm, top_k_svd, trim

__all__ = [
    "BoundInputs",
    "incoherence",
    "measure_bound_inputs",
    "theorem1_rhs",
    "theorem2_rhs",
    "theorem2_sample_condition",
    "noise_bound_independent",
    "noise_bound_worstcase",
    "lemma1_deviation",
    "d_plus_minus",
    "candes_plan_rhs",
    "fit_loglog_slope",
]


@dataclass(frozen=True)
class BoundInputs:
    m: int
    n: int
    e_size: int
    r: int
    sigma_min: float = 1.0
    sigma_max: float = 1.0
    m_max: float = 1.0
    mu0: float = 1.0
    mu1: float = 1.0
    noise_operator_norm: float = 0.0
    noise_frobenius_norm: float = 0.0

    def __post_init__(self):
        if self.m < self.n:
            raise ValueError("arrange inputs so that m >= n (transpose the problem)")
        if self.sigma_min <= 0 or self.sigma_max < self.sigma_min:
            raise ValueError("need 0 < sigma_min <= sigma_max")

    @property
    def alpha(self) -> float:
        return self.m / self.n

    @property
    def epsilon(self) -> float:
        return self.e_size / np.sqrt(self.m * self.n)

    @property
    def kappa(self) -> float:
        return self.sigma_max / self.sigma_min

    def with_(self, **changes) -> BoundInputs:
        return replace(self, **changes)


def _normalize(A: np.ndarray) -> np.ndarray:
    rows = A.shape[0]
    if np.allclose(A.T @ A / rows, np.eye(A.shape[1]), atol=1e-6):
        return A
    Q, _ = np.linalg.qr(A)
    return np.sqrt(rows) * Q


def incoherence(U: np.ndarray, Sigma, V: np.ndarray) -> tuple[float, float]:
    """Smallest ``(mu0, mu1)`` for which the factorization is incoherent.

    ``U``, ``V`` are expected with ``U^T U = m I`` and ``V^T V = n I``;
    other full-rank factors are orthonormalized first (which is only
    meaningful for ``mu0``).
    """
    U = _normalize(np.asarray(U, dtype=float))
    V = _normalize(np.asarray(V, dtype=float))
    Sigma = np.asarray(Sigma, dtype=float).ravel()
    r = U.shape[1]
    row_norms = np.concatenate([np.sum(U ** 2, axis=1), np.sum(V ** 2, axis=1)])
    mu0 = row_norms.max() / r
    weights = Sigma / Sigma.max()
    mu1 = np.abs((U * weights) @ V.T).max() / np.sqrt(r)
    return float(mu0), float(mu1)


def measure_bound_inputs(M: np.ndarray, obs: ObservedMatrix, r: int, tol: float = 1e-8) -> BoundInputs:
    """Measure every :class:`BoundInputs` field for truth ``M`` and noisy observations ``obs``.

    The noise is ``obs.values - M[obs]``; its operator norm is taken after
    trimming. The problem is transposed first when ``m < n``.
    """
    M = np.asarray(M, dtype=float)
    if M.shape != obs.shape:
        raise ValueError(f"truth shape {M.shape} differs from observation shape {obs.shape}")
    if M.shape[0] < M.shape[1]:
        M = M.T
        obs = obs.transpose()
    m, n = M.shape
    Uf, s, Vt = np.linalg.svd(M, full_matrices=False)
    U = np.sqrt(m) * Uf[:, :r]
    V = np.sqrt(n) * Vt[:r].T
    Sigma = s[:r] / np.sqrt(m * n)
    mu0, mu1 = incoherence(U, Sigma, V)
    noise = obs.with_values(obs.values - M[obs.rows, obs.cols])
    trimmed_noise, _ = trim(noise)
    return BoundInputs(
        m=m, n=n, e_size=obs.nnz, r=r,
        sigma_min=float(Sigma[-1]), sigma_max=float(Sigma[0]),
        m_max=float(np.abs(M).max()), mu0=mu0, mu1=mu1,
        noise_operator_norm=spectral_norm(trimmed_noise, tol=tol),
        noise_frobenius_norm=noise.frobenius_norm(),
    )


def theorem1_rhs(b: BoundInputs, c1: float = 1.0, c2: float = 1.0) -> float:
    """Error bound for the rescaled rank-r projection (RMSE scale)."""
    a = b.alpha
    sampling = c1 * b.m_max * np.sqrt(b.n * b.r * a ** 1.5 / b.e_size)
    noise = c2 * (b.n * np.sqrt(b.r * a) / b.e_size) * b.noise_operator_norm
    return float(sampling + noise)


class Theorem2Value(NamedTuple):
    value: float
    valid_regime: bool


def theorem2_rhs(b: BoundInputs, c: float = 1.0) -> Theorem2Value:
    """RMSE bound after descent; valid only while below ``sigma_min``."""
    value = c * b.kappa ** 2 * (b.n * np.sqrt(b.alpha * b.r) / b.e_size) * b.noise_operator_norm
    return Theorem2Value(float(value), bool(value < b.sigma_min))


class SampleCondition(NamedTuple):
    required_e: float
    satisfied: bool


def theorem2_sample_condition(b: BoundInputs, c: float = 1.0) -> SampleCondition:
    a, r, k4 = b.alpha, b.r, b.kappa ** 4
    terms = (
        b.mu0 * r * np.sqrt(a) * np.log(b.n),
        b.mu0 ** 2 * r ** 2 * a * k4,
        b.mu1 ** 2 * r ** 2 * a * k4,
    )
    required = c * b.n * np.sqrt(a) * b.kappa ** 2 * max(terms)
    return SampleCondition(float(required), bool(b.e_size >= required))


def noise_bound_independent(sigma: float, b: BoundInputs, c: float = 1.0) -> float:
    """High-probability bound on the trimmed noise operator norm, sub-gaussian entries."""
    e = b.e_size
    return float(c * sigma * np.sqrt(np.sqrt(b.alpha) * e * np.log(e) / b.n))


def noise_bound_worstcase(z_max: float, b: BoundInputs) -> float:
    """Deterministic bound on the trimmed noise operator norm for ``|Z_ij| <= z_max``."""
    return float(2.0 * b.e_size * z_max / (b.n * np.sqrt(b.alpha)))


def lemma1_deviation(obs_trimmed: ObservedMatrix, true_sigmas, epsilon: float, tol: float = 1e-10) -> np.ndarray:
    """``|sigma_q / epsilon - Sigma_q|`` for q = 1..r+1, with ``Sigma_{r+1} = 0``.

    ``true_sigmas`` are in the ``U^T U = m I`` normalization, i.e. the plain
    singular values of M divided by ``sqrt(mn)``.
    """
    true = np.append(np.asarray(true_sigmas, dtype=float), 0.0)
    k = min(true.size, min(obs_trimmed.shape))
    measured = top_k_svd(obs_trimmed, k, tol=tol).sigmas
    return np.abs(measured / epsilon - true[:k])


def d_plus_minus(p: FactorPoint, u: FactorPoint, S: np.ndarray, Sigma) -> tuple[float, float]:
    Sigma = np.asarray(Sigma, dtype=float).ravel()
    d = distance(p, u)
    core = np.linalg.norm(np.asarray(S) - np.diag(Sigma)) ** 2
    d_minus = np.sqrt(Sigma.min() ** 2 * d ** 2 + core)
    d_plus = np.sqrt(Sigma.max() ** 2 * d ** 2 + core)
    return float(d_minus), float(d_plus)


def candes_plan_rhs(z_frobenius_observed: float, b: BoundInputs) -> float:
    """Nuclear-norm-relaxation error bound, for comparison."""
    z = z_frobenius_observed
    return float(7.0 * np.sqrt(b.n / b.e_size) * z + 2.0 / (b.n * np.sqrt(b.alpha)) * z)


def fit_loglog_slope(x, y) -> float:
    """Least-squares slope of ``log y`` against ``log x``."""
    lx = np.log(np.asarray(x, dtype=float))
    ly = np.log(np.asarray(y, dtype=float))
    return float(np.polyfit(lx, ly, 1)[0])
