import numpy as np
import pytest

from me_interact import (
    ConvergenceError,
    Dataset,
    NumericError,
    estimate_regulation,
    kkt_check,
    lasso_column,
    lasso_path_bic,
    standardize,
)
from me_interact.regulation import lambda_max, lasso_objective, soft_threshold, write_theta_csv


def standardized_problem(n=40, q=6, seed=0):
    rng = np.random.default_rng(seed)
    R = rng.standard_normal((n, q))
    R = (R - R.mean(axis=0)) / R.std(axis=0, ddof=1)
    g = rng.standard_normal(n)
    g -= g.mean()
    return R, g


def test_soft_threshold_cases():
    assert soft_threshold(3.0, 1.0) == 2.0
    assert soft_threshold(-3.0, 1.0) == -2.0
    assert soft_threshold(0.5, 1.0) == 0.0
    assert soft_threshold(1.0, 1.0) == 0.0


def test_lambda_above_max_gives_zero():
    R, g = standardized_problem(seed=1)
    lam = lambda_max(R, g)
    np.testing.assert_array_equal(lasso_column(R, g, lam), np.zeros(R.shape[1]))
    np.testing.assert_array_equal(lasso_column(R, g, lam * 1.5), np.zeros(R.shape[1]))


def test_orthonormal_design_matches_soft_threshold():
    rng = np.random.default_rng(5)
    A = np.linalg.qr(rng.standard_normal((50, 8)))[0]
    g = rng.standard_normal(50)
    for lam in (0.05, 0.2, 0.6):
        theta = lasso_column(A, g, lam)
        corr = A.T @ g
        closed = np.sign(corr) * np.maximum(np.abs(corr) - lam, 0.0)
        np.testing.assert_allclose(theta, closed, atol=1e-10)


def test_two_variable_grid_oracle():
    # correlated design; oracle = exhaustive search on a 1e-3 grid
    X = np.array([
        [1.0, 0.9], [0.9, 1.0], [0.5, 0.1], [-0.2, 0.3], [0.0, -0.4], [0.3, 0.2],
    ])
    y = np.array([1.0, 0.8, 0.3, -0.1, 0.2, 0.4])
    for lam in (0.1, 0.35, 0.8):
        sol = lasso_column(X, y, lam)
        ga = np.arange(-2.0, 2.0001, 1e-3)
        gb = np.arange(-2.0, 2.0001, 1e-3)
        A2, B2 = np.meshgrid(ga, gb, indexing="ij")
        resid = (
            y[:, None, None]
            - X[:, 0, None, None] * A2
            - X[:, 1, None, None] * B2
        )
        vals = 0.5 * (resid ** 2).sum(axis=0) + lam * (np.abs(A2) + np.abs(B2))
        i, j = np.unravel_index(np.argmin(vals), vals.shape)
        assert abs(ga[i] - sol[0]) <= 2e-3
        assert abs(gb[j] - sol[1]) <= 2e-3


def test_objective_never_worse_than_zero_vector():
    R, g = standardized_problem(n=60, q=10, seed=9)
    lam_hi = lambda_max(R, g)
    for frac in (0.9, 0.5, 0.1, 0.02):
        lam = frac * lam_hi
        theta = lasso_column(R, g, lam)
        assert lasso_objective(R, g, theta, lam) <= lasso_objective(R, g, np.zeros_like(theta), lam) + 1e-12


def test_kkt_verifier_on_random_fits():
    R, g = standardized_problem(n=50, q=12, seed=3)
    lam_hi = lambda_max(R, g)
    thetas, lams = [], []
    for frac in (0.7, 0.3, 0.1, 0.05):
        lam = frac * lam_hi
        thetas.append(lasso_column(R, g, lam))
        lams.append(lam)
    theta_mat = np.column_stack(thetas)
    G = np.column_stack([g] * len(lams))
    ok, per_col = kkt_check(R, G, np.asarray(lams), theta_mat)
    assert ok and per_col.all()


def test_kkt_verifier_rejects_corrupted_solution():
    R, g = standardized_problem(n=50, q=12, seed=4)
    lam = 0.3 * lambda_max(R, g)
    theta = lasso_column(R, g, lam)
    bad = theta.copy()
    bad[0] += 0.5
    ok, _ = kkt_check(R, g.reshape(-1, 1), np.array([lam]), bad.reshape(-1, 1))
    assert not ok


def test_warm_start_equals_cold_start():
    R, g = standardized_problem(n=60, q=8, seed=7)
    gram, rtg = R.T @ R, R.T @ g
    lam_hi = float(np.abs(rtg).max())
    theta = np.zeros(8)
    for lam in np.geomspace(lam_hi, 0.01 * lam_hi, 25):
        theta = lasso_column(R, g, lam, theta0=theta, gram=gram, rtg=rtg)
        cold = lasso_column(R, g, lam, gram=gram, rtg=rtg)
        np.testing.assert_allclose(theta, cold, atol=1e-8)


def test_non_finite_input_raises():
    R, g = standardized_problem()
    bad = g.copy()
    bad[0] = np.nan
    with pytest.raises(NumericError):
        lasso_column(R, bad, 0.1)


def test_convergence_error_carries_iterate():
    R, g = standardized_problem(n=30, q=10, seed=11)
    with pytest.raises(ConvergenceError) as err:
        lasso_column(R, g, 0.01 * lambda_max(R, g), max_sweeps=2)
    assert err.value.last_iterate is not None
    assert err.value.last_iterate.shape == (10,)


def test_bic_path_shape_and_monotone_lambdas():
    R, g = standardized_problem(n=50, q=9, seed=13)
    theta, lam, table = lasso_path_bic(R, g)
    assert table.shape == (50, 3)
    assert np.all(np.diff(table[:, 0]) < 0)
    assert lam in table[:, 0]
    ok, _ = kkt_check(R, g.reshape(-1, 1), np.array([lam]), theta.reshape(-1, 1))
    assert ok


def make_planted_dataset(n=250, p=100, q=100, seed=0, signal_low=0.5, signal_high=1.2, sparsity=5):
    """Sparse theta with |entries| >= signal_low; G = R theta + noise."""
    rng = np.random.default_rng(seed)
    theta = np.zeros((q, p))
    for j in range(p):
        if j % 2 == 0:
            rows = rng.choice(q, size=sparsity, replace=False)
            magnitude = rng.uniform(signal_low, signal_high, size=sparsity)
            theta[rows, j] = magnitude * rng.choice([-1.0, 1.0], size=sparsity)
    R = rng.standard_normal((n, q))
    G = R @ theta + rng.standard_normal((n, p))
    E = rng.standard_normal((n, 2))
    Y = rng.standard_normal(n)
    return Dataset(G=G, R=R, E=E, Y=Y), theta


def test_support_recovery_on_planted_instance():
    dataset, theta_true = make_planted_dataset(seed=21)
    ds = standardize(dataset)
    reg = estimate_regulation(ds)
    est = reg.theta != 0
    true = theta_true != 0
    tp = np.sum(est & true)
    fp = np.sum(est & ~true)
    fn = np.sum(~est & true)
    f1 = 2 * tp / (2 * tp + fp + fn)
    assert f1 >= 0.8
    ok, _ = kkt_check(ds.R, ds.G, reg.lambdas, reg.theta)
    assert ok
    assert np.array_equal(reg.nnz, np.count_nonzero(reg.theta, axis=0))


def test_fixed_lambda_at_global_max_gives_zero_matrix():
    dataset, _ = make_planted_dataset(n=60, p=8, q=10, seed=2)
    ds = standardize(dataset)
    lam_global = max(lambda_max(ds.R, ds.G[:, j]) for j in range(ds.p))
    reg = estimate_regulation(ds, "fixed", fixed_lambda=lam_global)
    assert np.count_nonzero(reg.theta) == 0


def test_single_column_matches_direct_call():
    dataset, _ = make_planted_dataset(n=50, p=1, q=12, seed=5)
    ds = standardize(dataset)
    reg = estimate_regulation(ds)
    direct, lam, _ = lasso_path_bic(ds.R, ds.G[:, 0])
    assert lam == reg.lambdas[0]
    np.testing.assert_array_equal(reg.theta[:, 0], direct)


def test_theta_csv_export(tmp_path):
    dataset, _ = make_planted_dataset(n=40, p=4, q=6, seed=6)
    ds = standardize(dataset)
    reg = estimate_regulation(ds)
    write_theta_csv(reg, tmp_path / "triplets.csv")
    lines = (tmp_path / "triplets.csv").read_text().splitlines()
    assert lines[0] == "row,col,value"
    assert len(lines) - 1 == np.count_nonzero(reg.theta)
    write_theta_csv(reg, tmp_path / "dense.csv", dense=True)
    dense = np.loadtxt(tmp_path / "dense.csv", delimiter=",", skiprows=1)
    np.testing.assert_array_equal(dense, reg.theta)
