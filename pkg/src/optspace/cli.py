"""Command-line entry point: ``optspace {complete,experiment,bounds,rank}``."""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

import numpy as np
import scipy.io

from . import theory
from .errors import NoGapError
from .harness import load_sweep, run_experiment
from .optimizer import OptConfig, optspace
from .sparse_core import read_mtx, top_k_svd, trim
from .spectral_init import estimate_rank


def _rank_arg(value: str):
    if value == "auto":
        return None
    r = int(value)
    if r < 1:
        raise argparse.ArgumentTypeError("rank must be >= 1 or 'auto'")
    return r


def _rho_arg(value: str):
    return value if value == "auto" else float(value)


def _opt_config(args, **extra) -> OptConfig:
    kw = dict(seed=args.seed, **extra)
    if args.max_iters is not None:
        kw["max_iters"] = args.max_iters
    if args.tol is not None:
        kw["grad_tol"] = args.tol
    return OptConfig(**kw)


def _write_csv(path: Path, A: np.ndarray):
    np.savetxt(path, np.atleast_2d(A), delimiter=",", fmt="%.17g")


def cmd_complete(args) -> int:
    obs = read_mtx(args.input)
    result = optspace(obs, args.rank, _opt_config(args, rho=args.rho))
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    if args.format == "factors":
        _write_csv(out / "X.csv", result.X)
        _write_csv(out / "S.csv", result.S)
        _write_csv(out / "Y.csv", result.Y)
    else:
        _write_csv(out / "M_hat.csv", result.estimate())
    tr = result.trace
    print(f"rank,{result.rank}")
    print(f"iterations,{tr.iterations}")
    print(f"termination,{tr.reason}")
    print(f"final_cost,{float(result.final_cost)!r}")
    return 0


def cmd_experiment(args) -> int:
    points, trials = load_sweep(args.config)
    if args.max_iters is not None or args.tol is not None:
        points = [(spec, _opt_config(args, rho=cfg.rho, mu0=cfg.mu0, f_rel_tol=cfg.f_rel_tol)) for spec, cfg in points]
    records = run_experiment(points, trials, out=args.out, workers=args.threads)
    failed = sum(r.status != "ok" for r in records)
    print(f"{len(records)} trials written to {args.out} ({failed} failed)")
    return 0


def _read_truth(path) -> np.ndarray:
    T = scipy.io.mmread(path)
    return T.toarray() if hasattr(T, "toarray") else np.asarray(T, dtype=float)


def cmd_bounds(args) -> int:
    obs = read_mtx(args.input)
    M = _read_truth(args.truth)
    r = args.rank if args.rank is not None else int(np.linalg.matrix_rank(M))
    b = theory.measure_bound_inputs(M, obs, r)
    noise = obs.values - M[obs.rows, obs.cols]
    sigma_hat = float(np.sqrt(np.mean(noise ** 2))) if noise.size else 0.0
    z_max = float(np.abs(noise).max()) if noise.size else 0.0
    t2 = theory.theorem2_rhs(b, args.c)
    cond = theory.theorem2_sample_condition(b, args.c)
    rows = [
        ("m", b.m), ("n", b.n), ("alpha", b.alpha), ("e_size", b.e_size), ("epsilon", b.epsilon),
        ("r", b.r), ("sigma_min", b.sigma_min), ("sigma_max", b.sigma_max), ("kappa", b.kappa),
        ("m_max", b.m_max), ("mu0", b.mu0), ("mu1", b.mu1),
        ("noise_operator_norm", b.noise_operator_norm), ("noise_frobenius_norm", b.noise_frobenius_norm),
        ("noise_sigma_estimate", sigma_hat), ("noise_z_max", z_max),
        ("theorem1_rhs", theory.theorem1_rhs(b, args.c, args.c)),
        ("theorem2_rhs", t2.value), ("theorem2_valid_regime", t2.valid_regime),
        ("theorem2_required_e", cond.required_e), ("theorem2_sample_condition", cond.satisfied),
        ("noise_bound_independent", theory.noise_bound_independent(sigma_hat, b, args.c)),
        ("noise_bound_worstcase", theory.noise_bound_worstcase(z_max, b)),
        ("candes_plan_rhs", theory.candes_plan_rhs(b.noise_frobenius_norm, b)),
    ]
    print("key,value")
    for key, value in rows:
        print(f"{key},{float(value)!r}" if isinstance(value, float) else f"{key},{value}")
    return 0


def cmd_rank(args) -> int:
    obs = read_mtx(args.input)
    trimmed, _ = trim(obs)
    K = min(args.max_scan, min(obs.shape))
    svd = top_k_svd(trimmed, K, tol=1e-8, seed=args.seed)
    s = svd.sigmas
    try:
        r = estimate_rank(s, max(1, min(min(obs.shape) // 2, K - 1)))
        print(f"rank,{r}")
    except NoGapError:
        print("rank,undetermined")
    print("index,sigma,ratio")
    for i, value in enumerate(s, start=1):
        ratio = s[i - 1] / s[i] if i < s.size and s[i] > 0 else float("inf") if i < s.size else float("nan")
        print(f"{i},{float(value)!r},{float(ratio)!r}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--max-iters", type=int, default=None)
    common.add_argument("--tol", type=float, default=None, help="gradient-norm stopping tolerance")
    common.add_argument("--threads", type=int, default=1, help="worker processes for sweeps")
    common.add_argument("-v", "--verbose", action="store_true")

    parser = argparse.ArgumentParser(prog="optspace", description="Low-rank matrix completion from sparse entries.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("complete", parents=[common], help="complete a MatrixMarket observation file")
    p.add_argument("--input", required=True)
    p.add_argument("--rank", type=_rank_arg, default=None, help="integer rank or 'auto'")
    p.add_argument("--rho", type=_rho_arg, default=0.0, help="penalty weight or 'auto' (min(m, n) * epsilon)")
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--format", choices=("factors", "dense-csv"), default="factors")
    p.set_defaults(func=cmd_complete)

    p = sub.add_parser("experiment", parents=[common], help="run a TOML-described sweep")
    p.add_argument("--config", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_experiment)

    p = sub.add_parser("bounds", parents=[common], help="measure model quantities and evaluate bounds")
    p.add_argument("--input", required=True)
    p.add_argument("--truth", required=True)
    p.add_argument("--rank", type=int, default=None)
    p.add_argument("--c", type=float, default=1.0, help="value used for every unspecified constant")
    p.set_defaults(func=cmd_bounds)

    p = sub.add_parser("rank", parents=[common], help="estimate the rank from the singular-value gap")
    p.add_argument("--input", required=True)
    p.add_argument("--max-scan", type=int, default=20)
    p.set_defaults(func=cmd_rank)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
