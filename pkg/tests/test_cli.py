import csv

import numpy as np
import pytest
import scipy.io
import scipy.sparse

from optspace.cli import main
from optspace.harness import RESULT_COLUMNS, SynthSpec, gen_lowrank, observe
from optspace.sparse_core import write_mtx


@pytest.fixture
def instance(tmp_path):
    spec = SynthSpec(60, 40, 2, 1400, factor_scale=1.0, seed=3)
    M, *_ = gen_lowrank(spec)
    obs_path = tmp_path / "obs.mtx"
    write_mtx(obs_path, observe(M, spec))
    truth_path = tmp_path / "truth.mtx"
    scipy.io.mmwrite(truth_path, M)
    return M, obs_path, truth_path


def parse_kv(text):
    lines = text.strip().splitlines()
    return dict(line.split(",", 1) for line in lines)


def test_complete_factors(instance, tmp_path, capsys):
    M, obs_path, _ = instance
    out = tmp_path / "fac"
    assert main(["complete", "--input", str(obs_path), "--rank", "2", "--out", str(out)]) == 0
    X = np.loadtxt(out / "X.csv", delimiter=",")
    S = np.loadtxt(out / "S.csv", delimiter=",")
    Y = np.loadtxt(out / "Y.csv", delimiter=",")
    assert X.shape == (60, 2) and S.shape == (2, 2) and Y.shape == (40, 2)
    assert np.linalg.norm(X @ S @ Y.T - M) <= 1e-6 * np.linalg.norm(M)
    info = parse_kv(capsys.readouterr().out)
    assert info["rank"] == "2"


def test_complete_dense_auto_rank(instance, tmp_path, capsys):
    M, obs_path, _ = instance
    out = tmp_path / "dense"
    main(["complete", "--input", str(obs_path), "--rank", "auto", "--rho", "auto",
          "--format", "dense-csv", "--out", str(out), "--max-iters", "300"])
    M_hat = np.loadtxt(out / "M_hat.csv", delimiter=",")
    assert M_hat.shape == M.shape
    assert np.linalg.norm(M_hat - M) <= 1e-4 * np.linalg.norm(M)
    assert parse_kv(capsys.readouterr().out)["rank"] == "2"


def test_complete_max_iters_and_tol(instance, tmp_path, capsys):
    _, obs_path, _ = instance
    main(["complete", "--input", str(obs_path), "--rank", "2", "--out", str(tmp_path / "o"), "--max-iters", "1"])
    info = parse_kv(capsys.readouterr().out)
    assert int(info["iterations"]) <= 1
    main(["complete", "--input", str(obs_path), "--rank", "2", "--out", str(tmp_path / "o"), "--tol", "1e30"])
    info = parse_kv(capsys.readouterr().out)
    assert info["iterations"] == "0" and info["termination"] == "gradient"


def test_bad_rank_rejected(instance, tmp_path):
    _, obs_path, _ = instance
    with pytest.raises(SystemExit):
        main(["complete", "--input", str(obs_path), "--rank", "0", "--out", str(tmp_path)])


def test_rank_command(instance, capsys):
    _, obs_path, _ = instance
    assert main(["rank", "--input", str(obs_path), "--max-scan", "8"]) == 0
    lines = capsys.readouterr().out.strip().splitlines()
    assert lines[0] == "rank,2"
    assert lines[1] == "index,sigma,ratio"
    table = [line.split(",") for line in lines[2:]]
    assert len(table) == 8
    sigmas = [float(row[1]) for row in table]
    assert sigmas == sorted(sigmas, reverse=True)
    assert float(table[0][2]) == pytest.approx(sigmas[0] / sigmas[1])


def test_bounds_command(instance, capsys):
    M, obs_path, truth_path = instance
    assert main(["bounds", "--input", str(obs_path), "--truth", str(truth_path), "--rank", "2"]) == 0
    kv = parse_kv(capsys.readouterr().out)
    assert kv.pop("key") == "value"
    assert int(kv["m"]) == 60 and int(kv["n"]) == 40 and int(kv["e_size"]) == 1400
    assert float(kv["m_max"]) == pytest.approx(np.abs(M).max())
    # noiseless observations
    assert float(kv["noise_operator_norm"]) == 0.0
    assert float(kv["theorem2_rhs"]) == 0.0
    for key in ("theorem1_rhs", "noise_bound_independent", "noise_bound_worstcase", "candes_plan_rhs",
                "mu0", "mu1", "kappa", "theorem2_required_e"):
        assert key in kv


def test_bounds_sparse_truth(instance, tmp_path, capsys):
    M, obs_path, _ = instance
    path = tmp_path / "truth_coo.mtx"
    scipy.io.mmwrite(path, scipy.sparse.coo_matrix(M))
    main(["bounds", "--input", str(obs_path), "--truth", str(path)])
    assert parse_kv(capsys.readouterr().out)["r"] == "2"


def test_experiment_command(tmp_path, capsys):
    config = tmp_path / "sweep.toml"
    config.write_text(
        "trials = 2\n[grid]\nm = [40]\nn = [30]\nr = [2]\ne_per_n = [15]\n"
        "noise_model = [\"gaussian\"]\nsigma = [0.5]\nseed = [4]\n"
    )
    out = tmp_path / "results.csv"
    assert main(["experiment", "--config", str(config), "--out", str(out), "--max-iters", "20"]) == 0
    with open(out, newline="") as fh:
        rows = list(csv.DictReader(fh))
    assert tuple(rows[0].keys()) == RESULT_COLUMNS
    assert [int(r["seed"]) for r in rows] == [4, 5]
    assert all(r["status"] == "ok" and int(r["iterations"]) <= 20 for r in rows)
    assert "2 trials" in capsys.readouterr().out
