import math

import numpy as np
import pytest

from samm import (
    Dataset,
    SolverOptions,
    default_schedule,
    loss_metrics,
    run_samm,
    standardize,
    theoretical_h1,
)


def _linear_data(rng, n, d, theta):
    X = rng.uniform(-1, 1, size=(n, d))
    return Dataset(X=X, Y=X @ theta)


def test_standardize_divisor_n():
    # Y = (0,2,0,2): mean 1, variance 1 with divisor n, so the response is unchanged
    data = Dataset(X=np.array([[0.0], [1.0], [2.0], [3.0]]), Y=np.array([0.0, 2.0, 0.0, 2.0]))
    std, scales, y_scale = standardize(data)
    assert y_scale == 1.0
    np.testing.assert_array_equal(std.Y, data.Y)
    np.testing.assert_allclose(scales[0], np.sqrt(np.var([0.0, 1.0, 2.0, 3.0])))


def test_standardize_unit_variance_passthrough():
    rng = np.random.default_rng(0)
    X = rng.normal(size=(50, 3))
    X = (X - X.mean(axis=0)) / X.std(axis=0)
    Y = rng.normal(size=50)
    Y = (Y - Y.mean()) / Y.std() + 5.0  # mean is irrelevant, only scale
    data = Dataset(X=X, Y=Y)
    std, scales, y_scale = standardize(data)
    np.testing.assert_allclose(scales, 1.0, atol=1e-12)
    np.testing.assert_allclose(y_scale, 1.0, atol=1e-12)
    np.testing.assert_allclose(std.X, X, atol=1e-12)


def test_standardize_scale_equivariance():
    rng = np.random.default_rng(1)
    data = _linear_data(rng, 30, 3, np.array([1.0, -1.0, 0.5]))
    std_a, _, _ = standardize(data)
    scaled = Dataset(X=data.X * np.array([10.0, 1.0, 1.0]), Y=data.Y)
    std_b, _, _ = standardize(scaled)
    np.testing.assert_allclose(std_a.X, std_b.X, atol=1e-12)


def test_standardize_rejects_degenerate_columns():
    X = np.column_stack([np.ones(5), np.arange(5.0)])
    with pytest.raises(ValueError, match="column 0"):
        standardize(Dataset(X=X, Y=np.arange(5.0)))
    with pytest.raises(ValueError, match="response"):
        standardize(Dataset(X=np.arange(10.0).reshape(5, 2), Y=np.ones(5)))


def test_default_schedule_closed_forms():
    s = default_schedule(100, 5, 1)
    assert s.rho1 == 1.0
    assert abs(s.rho_min - 100.0 ** (-1.0 / 3.0)) < 1e-15
    assert abs(s.a_rho - math.exp(-1.0 / 6.0)) < 1e-15
    assert abs(s.a_h - math.exp(1.0 / 10.0)) < 1e-15
    assert abs(s.h_max - 2.0 * math.sqrt(5.0)) < 1e-15
    # number of rho-updates until stop: smallest k with a_rho^k < rho_min is 10
    k = 1
    while s.a_rho**k >= s.rho_min:
        k += 1
    assert k == 10
    # with h1 small enough that only rho binds, k(n) equals that count
    import dataclasses

    assert dataclasses.replace(s, h1=1e-6).num_iterations() == 10


def test_default_schedule_max_rule():
    s = default_schedule(100, 8, 5)
    assert abs(s.a_rho - math.exp(-1.0 / 10.0)) < 1e-15  # 3 v 5 = 5
    assert abs(s.rho_min - 100.0 ** (-1.0 / 5.0)) < 1e-15
    assert abs(s.a_h - math.exp(1.0 / 16.0)) < 1e-15  # 4 v 8 = 8
    with pytest.raises(ValueError):
        default_schedule(100, 3, 3)
    with pytest.raises(ValueError):
        default_schedule(4, 3, 1)


def test_theoretical_h1():
    assert abs(theoretical_h1(256, 3) - 256.0 ** (-0.25)) < 1e-15
    assert abs(theoretical_h1(256, 8, c0=2.0) - 2.0 * 256.0 ** (-1.0 / 8.0)) < 1e-15


def test_run_samm_linear_recovery():
    rng = np.random.default_rng(2)
    theta = np.array([2.0, -1.0, 0.0, 0.0])
    data = _linear_data(rng, 60, 4, theta)
    truth = np.outer(theta, theta) / (theta @ theta)
    res = run_samm(data, 1, ground_truth=truth)
    final = res.iterations[-1].loss
    assert final.trace_residual <= 1e-6
    assert res.pi_hat.shape == (4, 4)
    np.testing.assert_allclose(res.pi_hat @ res.pi_hat, res.pi_hat, atol=1e-9)
    assert abs(np.trace(res.pi_hat) - 1.0) < 1e-9


def test_affine_shortcut_every_iteration_ridge_zero():
    # with ridge = 0 gradients are exact for affine data, so every pass nails
    # the span; holds whenever the shrinking neighborhoods stay well
    # conditioned, which these seeded instances do
    theta = np.array([1.0, 1.0, -2.0])
    truth = np.outer(theta, theta) / (theta @ theta)
    for seed, n in [(2, 80), (4, 120)]:
        data = _linear_data(np.random.default_rng(seed), n, 3, theta)
        res = run_samm(data, 1, options=SolverOptions(ridge=0.0), ground_truth=truth)
        for rec in res.iterations:
            assert rec.loss.trace_residual <= 1e-8


def test_schedule_law_and_stopping():
    rng = np.random.default_rng(4)
    data = _linear_data(rng, 50, 3, np.array([1.0, 0.5, 0.0]))
    res = run_samm(data, 1)
    sched = res.schedule
    hs = [rec.h for rec in res.iterations]
    rhos = [rec.rho for rec in res.iterations]
    assert hs[0] == sched.h1 and rhos[0] == sched.rho1
    for i in range(1, len(hs)):
        assert abs(hs[i] / hs[i - 1] - sched.a_h) <= 1e-12 * sched.a_h
        assert abs(rhos[i] / rhos[i - 1] - sched.a_rho) <= 1e-12 * sched.a_rho
    # stopping holds at exit and not before
    for i, (h, rho) in enumerate(zip(hs, rhos)):
        stopped = rho * sched.a_rho < sched.rho_min or h * sched.a_h > sched.h_max
        assert stopped == (i == len(hs) - 1)
    assert len(res.iterations) == sched.num_iterations()


def test_run_samm_deterministic():
    rng = np.random.default_rng(5)
    X = rng.uniform(-1, 1, size=(40, 3))
    Y = np.sin(2 * X[:, 0]) + 0.1 * rng.standard_normal(40)
    data = Dataset(X=X, Y=Y)
    r1 = run_samm(data, 1)
    r2 = run_samm(data, 1)
    assert np.array_equal(r1.pi_hat, r2.pi_hat)
    assert np.array_equal(r1.pi_relaxed_final.mat, r2.pi_relaxed_final.mat)
    assert [rec.report.objective for rec in r1.iterations] == [
        rec.report.objective for rec in r2.iterations
    ]


def test_coordinate_scale_equivariance():
    # rescaling predictor columns must leave the estimated subspace (expressed
    # in original coordinates) unchanged thanks to the final back-transform
    rng = np.random.default_rng(6)
    theta = np.array([1.0, -1.0, 0.5])
    data = _linear_data(rng, 60, 3, theta)
    tol = 1e-6
    res_a = run_samm(data, 1, options=SolverOptions(tol=tol))
    c = np.array([10.0, 0.2, 3.0])
    res_b = run_samm(Dataset(X=data.X * c, Y=data.Y), 1, options=SolverOptions(tol=tol))
    # a direction v in the rescaled coordinates is diag(1/c) v in the originals
    # for points x, hence gradients map with diag(c)
    W = c[:, None] * res_b.pi_relaxed_final.eigvecs[:, :1]
    Q, _ = np.linalg.qr(W)
    mapped = Q @ Q.T
    assert loss_metrics(mapped, _projector_of(res_a.pi_hat)).trace_residual <= 10 * tol


def _projector_of(P):
    # round an almost-projector to an exact one for use as a reference
    evals, evecs = np.linalg.eigh(P)
    V = evecs[:, evals > 0.5]
    return V @ V.T


def test_run_samm_validation():
    rng = np.random.default_rng(7)
    data = _linear_data(rng, 30, 3, np.array([1.0, 0.0, 0.0]))
    with pytest.raises(ValueError):
        run_samm(data, 3)  # m_star must be < d
    with pytest.raises(ValueError):
        run_samm(data, 1, schedule=default_schedule(30, 4, 1))  # wrong d
    from samm import build_basis

    with pytest.raises(ValueError):
        run_samm(data, 1, psi=build_basis(rng.normal(size=(29, 3))))  # wrong n


def test_loss_metrics_examples():
    P = np.diag([1.0, 0.0])
    Q = np.diag([0.0, 1.0])
    rep = loss_metrics(P, Q)
    assert abs(rep.spectral - 1.0) < 1e-12
    assert abs(rep.frobenius - np.sqrt(2.0)) < 1e-12
    assert abs(rep.trace_residual - 1.0) < 1e-12
    same = loss_metrics(P, P)
    assert same.spectral == same.frobenius == same.trace_residual == 0.0
    rng = np.random.default_rng(8)
    for _ in range(20):
        m = int(rng.integers(1, 4))
        Q1, _ = np.linalg.qr(rng.normal(size=(5, m)))
        Q2, _ = np.linalg.qr(rng.normal(size=(5, m)))
        rep = loss_metrics(Q1 @ Q1.T, Q2 @ Q2.T)
        ident = 2 * m - 2 * np.trace(Q1 @ Q1.T @ Q2 @ Q2.T)
        assert abs(rep.frobenius**2 - ident) <= 1e-9
    with pytest.raises(ValueError):
        loss_metrics(P, np.array([[0.5, 0.0], [0.0, 0.5]]))  # not idempotent
