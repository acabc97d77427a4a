"""Synthetic low-rank instances, noise models and reproducible experiment sweeps."""

from __future__ import annotations

import csv
import itertools
import logging
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, fields, replace
from pathlib import Path

import numpy as np

from .errors import InvalidArgumentError
from .optimizer import CompletionResult, OptConfig, optspace
from .sparse_core import ObservedMatrix, sample_mask, spectral_norm, trim
from .theory import incoherence

__all__ = [
    "NOISE_MODELS",
    "WORST_CASE_PATTERNS",
    "RESULT_COLUMNS",
    "SynthSpec",
    "TrialRecord",
    "gen_lowrank",
    "add_noise",
    "observe",
    "rmse",
    "run_trial",
    "run_experiment",
    "read_results",
    "load_sweep",
]

log = logging.getLogger(__name__)

NOISE_MODELS = ("none", "gaussian", "worst_case")
WORST_CASE_PATTERNS = ("uniform_random_sign", "adversarial_constant")

RESULT_COLUMNS = (
    "m", "n", "r", "e_size", "noise_model", "sigma", "seed", "rmse_spectral", "rmse_final",
    "iterations", "mu0", "mu1", "kappa", "znorm", "wall_ms", "status",
)


@dataclass(frozen=True)
class SynthSpec:
    """One synthetic instance: ``M = U~ V~^T`` plus noise, observed on ``e_size`` couples.

    ``factor_scale`` is the standard deviation of the Gaussian factor
    entries (default ``20 / sqrt(n)``). ``sigma`` is the Gaussian noise
    level, ``z_max`` the entrywise bound of worst-case noise.
    """

    m: int
    n: int
    r: int
    e_size: int
    noise_model: str = "none"
    sigma: float = 0.0
    z_max: float = 0.0
    pattern: str = "uniform_random_sign"
    factor_scale: float | None = None
    seed: int = 0

    def __post_init__(self):
        if not 1 <= self.r <= min(self.m, self.n):
            raise InvalidArgumentError(f"r={self.r} outside [1, {min(self.m, self.n)}]")
        if not 0 <= self.e_size <= self.m * self.n:
            raise InvalidArgumentError(f"e_size={self.e_size} outside [0, {self.m * self.n}]")
        if self.noise_model not in NOISE_MODELS:
            raise InvalidArgumentError(f"unknown noise model {self.noise_model!r}")
        if self.pattern not in WORST_CASE_PATTERNS:
            raise InvalidArgumentError(f"unknown worst-case pattern {self.pattern!r}")
        if self.sigma < 0 or self.z_max < 0:
            raise InvalidArgumentError("noise levels must be non-negative")

    @property
    def transposed(self) -> bool:
        """True when the theory quantities need the transpose (so that m >= n)."""
        return self.m < self.n

    @property
    def scale(self) -> float:
        return 20.0 / np.sqrt(self.n) if self.factor_scale is None else float(self.factor_scale)

    @property
    def noise_level(self) -> float:
        if self.noise_model == "gaussian":
            return self.sigma
        if self.noise_model == "worst_case":
            return self.z_max
        return 0.0

    @property
    def noise_label(self) -> str:
        if self.noise_model == "worst_case":
            return f"worst_case/{self.pattern}"
        return self.noise_model

    def _streams(self):
        factors, mask, noise = np.random.SeedSequence(self.seed).spawn(3)
        return factors, mask, noise


def gen_lowrank(spec: SynthSpec):
    """Return ``(M, U, Sigma, V)`` with ``M = U diag(Sigma) V^T``, ``U^T U = m I``, ``V^T V = n I``."""
    m, n, r = spec.m, spec.n, spec.r
    rng = np.random.default_rng(spec._streams()[0])
    Ut = spec.scale * rng.standard_normal((m, r))
    Vt = spec.scale * rng.standard_normal((n, r))
    M = Ut @ Vt.T
    Qu, Ru = np.linalg.qr(Ut)
    Qv, Rv = np.linalg.qr(Vt)
    a, s, bt = np.linalg.svd(Ru @ Rv.T)
    U = np.sqrt(m) * (Qu @ a)
    V = np.sqrt(n) * (Qv @ bt.T)
    Sigma = s / np.sqrt(m * n)
    return M, U, Sigma, V


def add_noise(M: np.ndarray, spec: SynthSpec) -> np.ndarray:
    """Dense ``N = M + Z`` for the spec's noise model."""
    rng = np.random.default_rng(spec._streams()[2])
    if spec.noise_model == "none":
        return np.array(M, dtype=float, copy=True)
    if spec.noise_model == "gaussian":
        return M + spec.sigma * rng.standard_normal(M.shape)
    if spec.pattern == "adversarial_constant":
        Z = np.full(M.shape, spec.z_max)
    else:
        Z = spec.z_max * rng.choice([-1.0, 1.0], size=M.shape)
    return M + Z


def observe(N: np.ndarray, spec: SynthSpec) -> ObservedMatrix:
    rows, cols = sample_mask(spec.m, spec.n, spec.e_size, spec._streams()[1])
    return ObservedMatrix.from_dense(N, (rows, cols))


def rmse(A: np.ndarray, B: np.ndarray) -> float:
    """``||A - B||_F / sqrt(mn)``."""
    A = np.asarray(A, dtype=float)
    B = np.asarray(B, dtype=float)
    if A.shape != B.shape:
        raise InvalidArgumentError(f"shape mismatch {A.shape} vs {B.shape}")
    return float(np.linalg.norm(A - B) / np.sqrt(A.size))


@dataclass
class TrialRecord:
    m: int
    n: int
    r: int
    e_size: int
    noise_model: str
    sigma: float
    seed: int
    rmse_spectral: float = float("nan")
    rmse_final: float = float("nan")
    iterations: int = 0
    mu0: float = float("nan")
    mu1: float = float("nan")
    kappa: float = float("nan")
    znorm: float = float("nan")
    wall_ms: float = 0.0
    status: str = "ok"

    def as_row(self) -> dict:
        return {k: (repr(float(v)) if isinstance(v, float) else v) for k, v in asdict(self).items()}

    @classmethod
    def from_row(cls, row: dict) -> TrialRecord:
        kwargs = {}
        for f in fields(cls):
            raw = row[f.name]
            kwargs[f.name] = raw if f.type == "str" else (int(raw) if f.type == "int" else float(raw))
        return cls(**kwargs)


def run_trial(spec: SynthSpec, cfg: OptConfig | None = None) -> tuple[TrialRecord, CompletionResult | None]:
    """Generate, observe, complete and score one instance.

    Failures are caught and reported in ``status``; the result is then None.
    """
    cfg = cfg or OptConfig()
    record = TrialRecord(spec.m, spec.n, spec.r, spec.e_size, spec.noise_label, spec.noise_level, spec.seed)
    start = time.perf_counter()
    result = None
    try:
        M, U, Sigma, V = gen_lowrank(spec)
        N = add_noise(M, spec)
        obs = observe(N, spec)
        record.mu0, record.mu1 = incoherence(U, Sigma, V)
        record.kappa = float(Sigma[0] / Sigma[-1])
        noise = obs.with_values(obs.values - M[obs.rows, obs.cols])
        record.znorm = spectral_norm(trim(noise)[0], tol=1e-6)
        result = optspace(obs, spec.r, cfg)
        record.rmse_spectral = rmse(result.projection.dense(), M)
        record.rmse_final = rmse(result.estimate(), M)
        record.iterations = result.trace.iterations
    except Exception as exc:  # recorded, the sweep keeps going
        log.warning("trial %s failed: %s", spec, exc)
        record.status = f"error: {type(exc).__name__}: {exc}".replace("\n", " ")
    record.wall_ms = (time.perf_counter() - start) * 1e3
    return record, result


def _trial_job(job):
    spec, cfg = job
    return run_trial(spec, cfg)[0]


def _expand(sweep, trials_per_point):
    jobs = []
    for point in sweep:
        spec, cfg = point if isinstance(point, tuple) else (point, None)
        for t in range(trials_per_point):
            jobs.append((replace(spec, seed=spec.seed + t), cfg))
    return jobs


def run_experiment(sweep, trials_per_point: int = 5, out=None, workers: int = 1) -> list[TrialRecord]:
    """Run every grid point ``trials_per_point`` times.

    ``sweep`` holds :class:`SynthSpec` items or ``(SynthSpec, OptConfig)``
    pairs. Trial ``t`` of a point uses seed ``spec.seed + t``. Rows go to
    ``out`` (CSV) as they finish, always in trial order.
    """
    jobs = _expand(sweep, trials_per_point)
    records = []
    fh = writer = None
    if out is not None:
        fh = open(out, "w", newline="")
        writer = csv.DictWriter(fh, fieldnames=RESULT_COLUMNS)
        writer.writeheader()
    try:
        if workers > 1:
            pool = ProcessPoolExecutor(max_workers=workers)
            stream = pool.map(_trial_job, jobs)
        else:
            pool = None
            stream = map(_trial_job, jobs)
        for rec in stream:
            records.append(rec)
            if writer is not None:
                writer.writerow(rec.as_row())
                fh.flush()
        if pool is not None:
            pool.shutdown()
    finally:
        if fh is not None:
            fh.close()
    return records


def read_results(path) -> list[TrialRecord]:
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        if tuple(reader.fieldnames or ()) != RESULT_COLUMNS:
            raise InvalidArgumentError(f"unexpected columns {reader.fieldnames}")
        return [TrialRecord.from_row(row) for row in reader]


_GRID_KEYS = ("m", "n", "r", "e_size", "e_per_n", "noise_model", "sigma", "z_max", "pattern",
              "factor_scale", "seed")


def load_sweep(path) -> tuple[list[tuple[SynthSpec, OptConfig]], int]:
    """Read a TOML sweep description.

    ::

        trials = 5
        [grid]
        m = [600]
        n = [600]
        r = [2]
        e_per_n = [20, 40, 80, 160]   # or e_size = [...]
        noise_model = ["gaussian"]
        sigma = [1.0]
        seed = [0]
        [optimizer]
        max_iters = 500

    Every grid entry is a list; the sweep is their Cartesian product.
    """
    try:
        import tomllib
    except ModuleNotFoundError:  # Python < 3.11
        import tomli as tomllib
    with open(Path(path), "rb") as fh:
        cfg = tomllib.load(fh)
    grid = dict(cfg.get("grid", {}))
    unknown = set(grid) - set(_GRID_KEYS)
    if unknown:
        raise InvalidArgumentError(f"unknown grid keys {sorted(unknown)}")
    if ("e_size" in grid) == ("e_per_n" in grid):
        raise InvalidArgumentError("give exactly one of e_size / e_per_n")
    for key in ("m", "n", "r"):
        if key not in grid:
            raise InvalidArgumentError(f"grid needs {key!r}")
    opt = OptConfig(**cfg.get("optimizer", {}))
    keys = list(grid)
    values = [v if isinstance(v, list) else [v] for v in grid.values()]
    points = []
    for combo in itertools.product(*values):
        kw = dict(zip(keys, combo))
        if "e_per_n" in kw:
            kw["e_size"] = int(round(kw.pop("e_per_n") * kw["n"]))
        points.append((SynthSpec(**kw), opt))
    return points, int(cfg.get("trials", 5))
