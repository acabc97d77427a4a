"""Observed-entry cost, its Riemannian gradient and the descent driver.

The cost of a pair of subspaces is the least-squares misfit on the
revealed entries after minimizing over the r x r core ``S``; an optional
penalty keeps row norms of the factors below ``3 * mu0 * r``.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field, replace
from typing import NamedTuple

import numpy as np

from .errors import ConvergenceError, DegenerateInputError, InvalidArgumentError, RegularizerOverflowError
from .manifold import FactorPoint, TangentVector, move, project_tangent
from .sparse_core import ObservedMatrix, TrimInfo, top_k_svd, trim
from .spectral_init import RankRProjection, estimate_rank, initial_point, rank_r_project

__all__ = [
    "OptConfig",
    "IterRecord",
    "OptTrace",
    "CompletionResult",
    "solve_S",
    "cost",
    "gradient",
    "minimize",
    "optspace",
]

log = logging.getLogger(__name__)

_CHUNK = 1 << 16
_EXP_CAP = 700.0


@dataclass(frozen=True)
class OptConfig:
    """Descent settings.

    ``rho`` is the penalty weight; ``"auto"`` picks ``n * epsilon`` with
    ``n`` the smaller dimension. ``mu0=None`` means: measure it on the
    starting point. ``grad_tol=None`` means ``1e-8 * sqrt(mn) * rms(values)``.
    """

    rho: float | str = 0.0
    mu0: float | None = None
    grad_tol: float | None = None
    f_rel_tol: float = 1e-10
    max_iters: int = 500
    backtrack: float = 0.5
    sufficient_decrease: float = 1e-4
    initial_step: float = 1.0
    max_backtracks: int = 40
    seed: int = 0

    def __post_init__(self):
        if not 0.0 < self.backtrack < 1.0:
            raise InvalidArgumentError("backtrack factor must lie in (0, 1)")
        if self.f_rel_tol <= 0 or self.sufficient_decrease <= 0 or self.initial_step <= 0:
            raise InvalidArgumentError("tolerances and step sizes must be positive")
        if self.grad_tol is not None and self.grad_tol <= 0:
            raise InvalidArgumentError("grad_tol must be positive")
        if isinstance(self.rho, str):
            if self.rho != "auto":
                raise InvalidArgumentError(f"rho must be a number or 'auto', got {self.rho!r}")
        elif self.rho < 0:
            raise InvalidArgumentError("rho must be non-negative")
        if self.mu0 is not None and self.mu0 <= 0:
            raise InvalidArgumentError("mu0 must be positive")
        if self.max_iters < 0:
            raise InvalidArgumentError("max_iters must be non-negative")

    def resolved(self, obs: ObservedMatrix, p0: FactorPoint | None = None) -> OptConfig:
        """Fill in data-dependent defaults."""
        rho = self.rho
        if rho == "auto":
            rho = min(obs.m, obs.n) * obs.epsilon
        mu0 = self.mu0
        if mu0 is None and rho > 0:
            if p0 is None:
                raise InvalidArgumentError("mu0 is required when rho > 0 and no starting point is given")
            mu0 = _measured_mu0(p0)
        grad_tol = self.grad_tol
        if grad_tol is None:
            scale = np.sqrt(np.mean(obs.values ** 2)) if obs.nnz else 1.0
            grad_tol = 1e-8 * np.sqrt(obs.m * obs.n) * (scale if scale > 0 else 1.0)
        return replace(self, rho=float(rho), mu0=mu0, grad_tol=float(grad_tol))


def _measured_mu0(p: FactorPoint) -> float:
    rows = np.concatenate([np.sum(p.X ** 2, axis=1), np.sum(p.Y ** 2, axis=1)])
    return float(rows.max() / p.r)


class IterRecord(NamedTuple):
    iteration: int
    F: float
    F_reg: float
    grad_norm: float
    step: float
    moved: float


@dataclass
class OptTrace:
    records: list[IterRecord] = field(default_factory=list)
    reason: str = ""

    def append(self, rec: IterRecord):
        if self.records and rec.F_reg > self.records[-1].F_reg:
            raise AssertionError(
                f"penalized cost increased at iteration {rec.iteration}: "
                f"{self.records[-1].F_reg!r} -> {rec.F_reg!r}")
        self.records.append(rec)

    @property
    def iterations(self) -> int:
        """Accepted descent steps (the starting point is record 0)."""
        return max(len(self.records) - 1, 0)

    def costs(self) -> np.ndarray:
        return np.array([r.F_reg for r in self.records])

    def is_monotone(self) -> bool:
        c = self.costs()
        return bool(np.all(np.diff(c) <= 0))


@dataclass
class CompletionResult:
    point: FactorPoint
    S: np.ndarray
    trace: OptTrace
    trim_info: TrimInfo | None = None
    initial_rmse_vs_observed: float = float("nan")
    final_cost: float = float("nan")
    projection: RankRProjection | None = field(default=None, repr=False)

    @property
    def rank(self) -> int:
        return self.point.r

    @property
    def X(self) -> np.ndarray:
        return self.point.X

    @property
    def Y(self) -> np.ndarray:
        return self.point.Y

    def estimate(self) -> np.ndarray:
        """Dense ``X S Y^T``."""
        return self.point.X @ self.S @ self.point.Y.T

    def predict(self, rows, cols) -> np.ndarray:
        XS = self.point.X[np.asarray(rows)] @ self.S
        return np.einsum("kr,kr->k", XS, self.point.Y[np.asarray(cols)])


def _predict(X, S, Y, obs: ObservedMatrix) -> np.ndarray:
    return np.einsum("kr,kr->k", X[obs.rows] @ S, Y[obs.cols])


def solve_S(p: FactorPoint, obs: ObservedMatrix) -> np.ndarray:
    """Least-squares core: argmin_S 1/2 sum_E (N_ij - (X S Y^T)_ij)^2.

    Assembles the ``r^2 x r^2`` normal equations over the observed couples
    (fixed chunk order, so the result is deterministic) and takes the
    minimum-norm solution when they are singular.
    """
    r = p.r
    G = np.zeros((r * r, r * r))
    b = np.zeros(r * r)
    for start in range(0, obs.nnz, _CHUNK):
        sl = slice(start, start + _CHUNK)
        D = np.einsum("ka,kb->kab", p.X[obs.rows[sl]], p.Y[obs.cols[sl]]).reshape(-1, r * r)
        G += D.T @ D
        b += D.T @ obs.values[sl]
    s, *_ = np.linalg.lstsq(G, b, rcond=None)
    return s.reshape(r, r)


def _g1(z: np.ndarray) -> np.ndarray:
    out = np.zeros_like(z)
    over = z > 1.0
    if np.any(over):
        arg = (z[over] - 1.0) ** 2
        if arg.max() > _EXP_CAP:
            raise RegularizerOverflowError(
                f"row-norm penalty argument {arg.max():.1f} exceeds {_EXP_CAP}; "
                "rescale the factor rows or increase mu0")
        out[over] = np.expm1(arg)
    return out


def _g1_prime(z: np.ndarray) -> np.ndarray:
    out = np.zeros_like(z)
    over = z > 1.0
    if np.any(over):
        d = z[over] - 1.0
        if (d ** 2).max() > _EXP_CAP:
            raise RegularizerOverflowError("row-norm penalty derivative overflows; rescale rows")
        out[over] = 2.0 * d * np.exp(d ** 2)
    return out


def _row_z(A: np.ndarray, mu0: float) -> np.ndarray:
    return np.sum(A ** 2, axis=1) / (3.0 * mu0 * A.shape[1])


class _Eval(NamedTuple):
    F: float
    F_reg: float
    S: np.ndarray
    residual: np.ndarray  # (X S Y^T - N) on the observed couples


def _evaluate(p: FactorPoint, obs: ObservedMatrix, cfg: OptConfig) -> _Eval:
    S = solve_S(p, obs)
    residual = _predict(p.X, S, p.Y, obs) - obs.values
    F = 0.5 * float(residual @ residual)
    F_reg = F
    if cfg.rho:
        if cfg.mu0 is None:
            raise InvalidArgumentError("mu0 must be set when rho > 0 (see OptConfig.resolved)")
        penalty = _g1(_row_z(p.X, cfg.mu0)).sum() + _g1(_row_z(p.Y, cfg.mu0)).sum()
        F_reg = F + cfg.rho * float(penalty)
    return _Eval(F, F_reg, S, residual)


def cost(p: FactorPoint, obs: ObservedMatrix, cfg: OptConfig | None = None) -> tuple[float, float, np.ndarray]:
    """Return ``(F, F_reg, S)`` at ``p``."""
    ev = _evaluate(p, obs, cfg or OptConfig())
    return ev.F, ev.F_reg, ev.S


def _gradient_from(p: FactorPoint, obs: ObservedMatrix, cfg: OptConfig, ev: _Eval) -> TangentVector:
    r = p.r
    YSt = p.Y @ ev.S.T
    XS = p.X @ ev.S
    AX = np.empty_like(p.X)
    AY = np.empty_like(p.Y)
    for a in range(r):
        AX[:, a] = np.bincount(obs.rows, weights=ev.residual * YSt[obs.cols, a], minlength=p.m)
        AY[:, a] = np.bincount(obs.cols, weights=ev.residual * XS[obs.rows, a], minlength=p.n)
    if cfg.rho:
        c = 2.0 / (3.0 * cfg.mu0 * r)
        AX += cfg.rho * (_g1_prime(_row_z(p.X, cfg.mu0)) * c)[:, None] * p.X
        AY += cfg.rho * (_g1_prime(_row_z(p.Y, cfg.mu0)) * c)[:, None] * p.Y
    return project_tangent(p, (AX, AY))


def gradient(p: FactorPoint, obs: ObservedMatrix, cfg: OptConfig | None = None) -> TangentVector:
    """Riemannian gradient of the penalized cost.

    ``S`` is held at its inner minimizer, whose first-order sensitivity
    vanishes. Pair the result with a tangent ``w`` via ``TangentVector.dot``
    to get the derivative along the geodesic with initial velocity ``w``.
    """
    cfg = cfg or OptConfig()
    return _gradient_from(p, obs, cfg, _evaluate(p, obs, cfg))


def minimize(p0: FactorPoint, obs: ObservedMatrix, cfg: OptConfig | None = None) -> CompletionResult:
    """Geodesic gradient descent with Armijo backtracking on the penalized cost."""
    cfg = (cfg or OptConfig()).resolved(obs, p0)
    p = p0.renormalized()
    ev = _evaluate(p, obs, cfg)
    grad = _gradient_from(p, obs, cfg, ev)
    gnorm = grad.norm()
    trace = OptTrace()
    trace.append(IterRecord(0, ev.F, ev.F_reg, gnorm, 0.0, 0.0))
    initial_rmse = np.sqrt(2.0 * ev.F / obs.nnz) if obs.nnz else float("nan")

    reason = "max_iters"
    for k in range(1, cfg.max_iters + 1):
        if gnorm <= cfg.grad_tol:
            reason = "gradient"
            break
        direction = grad * (-1.0 / gnorm)
        slope = grad.dot(direction)  # directional derivative per unit arclength, < 0
        step = cfg.initial_step
        accepted = None
        for _ in range(cfg.max_backtracks + 1):
            cand = move(p, direction, step)
            cand_ev = _evaluate(cand, obs, cfg)
            if cand_ev.F_reg <= ev.F_reg + cfg.sufficient_decrease * step * slope:
                accepted = (cand, cand_ev)
                break
            step *= cfg.backtrack
        if accepted is None:
            reason = "stalled"
            break
        prev = ev.F_reg
        p, ev = accepted
        grad = _gradient_from(p, obs, cfg, ev)
        gnorm = grad.norm()
        trace.append(IterRecord(k, ev.F, ev.F_reg, gnorm, step, step))
        if prev - ev.F_reg <= cfg.f_rel_tol * prev:
            reason = "f_rel_tol"
            break
    else:
        if gnorm <= cfg.grad_tol:
            reason = "gradient"
    trace.reason = reason
    log.debug("descent stopped after %d steps: %s", trace.iterations, reason)
    return CompletionResult(p, ev.S, trace, initial_rmse_vs_observed=float(initial_rmse),
                            final_cost=ev.F_reg)


def optspace(obs: ObservedMatrix, r: int | None = None, cfg: OptConfig | None = None,
             max_scan: int = 20) -> CompletionResult:
    """Trim, project to rank r, then descend.

    Without ``r`` the rank is read off the largest gap among the leading
    ``max_scan`` singular values of the trimmed matrix.
    """
    if obs.nnz == 0:
        raise DegenerateInputError("no observed entries")
    cfg = cfg or OptConfig()
    trimmed, info = trim(obs)
    if trimmed.nnz == 0 or not np.any(trimmed.values):
        raise DegenerateInputError("nothing left after trimming")
    if r is None:
        K = min(max_scan, min(obs.shape))
        scan = _svd(trimmed, K, tol=1e-6, seed=cfg.seed)
        r = estimate_rank(scan.sigmas, max(1, min(min(obs.shape) // 2, K - 1)))
        log.info("estimated rank %d from %s", r, np.array2string(scan.sigmas[: r + 2], precision=4))
    svd = _svd(trimmed, r, tol=1e-10, seed=cfg.seed)
    proj = rank_r_project(trimmed, r, obs.nnz, svd=svd)
    result = minimize(initial_point(proj), obs, cfg)
    result.trim_info = info
    result.projection = proj
    return result


def _svd(obs, k, tol, seed):
    try:
        return top_k_svd(obs, k, tol=tol, seed=seed)
    except ConvergenceError as exc:
        log.warning("top-%d SVD hit its iteration cap; using the partial result", k)
        return exc.estimate
