import numpy as np
import pytest

from samm import (
    Dataset,
    GradientField,
    MetricShape,
    SingularGramError,
    compute_betas,
    data_driven_h1,
    local_linear_fit,
)


def _isotropic(d, h):
    return MetricShape(pi_hat=np.zeros((d, d)), rho=1.0, h=h)


def test_dataset_validation():
    with pytest.raises(ValueError):
        Dataset(X=np.zeros((3, 2)), Y=np.zeros(3))  # n < d + 2
    with pytest.raises(ValueError):
        Dataset(X=np.full((5, 2), np.nan), Y=np.zeros(5))
    with pytest.raises(ValueError):
        Dataset(X=np.zeros((5, 2)), Y=np.zeros(4))


def test_affine_reproduction_exact():
    # Local-linear fits reproduce affine functions exactly when ridge = 0.
    rng = np.random.default_rng(0)
    for trial in range(5):
        d = int(rng.integers(1, 4))
        n = 40
        X = rng.uniform(-1, 1, size=(n, d))
        a, b = rng.normal(), rng.normal(size=d)
        data = Dataset(X=X, Y=a + X @ b)
        field = local_linear_fit(data, _isotropic(d, 2.5), ridge=0.0)
        err = np.abs(field.gradients - b[:, None]).max()
        assert err <= 1e-8 * (1 + np.linalg.norm(b))
        np.testing.assert_allclose(field.fitted, a + X @ b, atol=1e-8)


def test_constant_response():
    rng = np.random.default_rng(1)
    X = rng.normal(size=(20, 2))
    data = Dataset(X=X, Y=np.full(20, 3.25))
    field = local_linear_fit(data, _isotropic(2, 8.0), ridge=0.0)
    np.testing.assert_allclose(field.fitted, 3.25, atol=1e-9)
    np.testing.assert_allclose(field.gradients, 0.0, atol=1e-9)
    # with ridge > 0 the fitted values are slightly shrunk but close
    ridged = local_linear_fit(data, _isotropic(2, 8.0), ridge=0.05)
    assert np.all(np.abs(ridged.fitted - 3.25) < 0.5)
    assert np.all(np.abs(ridged.fitted - 3.25) > 0.0)


def test_matches_direct_wls_oracle():
    # n=5, d=1, bandwidth large enough that every weight is 1: the fit at each
    # point must equal the closed-form 2x2 weighted least squares solution.
    X = np.array([[0.0], [0.3], [1.1], [1.7], [2.0]])
    Y = np.array([0.5, -0.2, 1.5, 0.7, 2.1])
    data = Dataset(X=X, Y=Y)
    field = local_linear_fit(data, _isotropic(1, 1e8), ridge=0.0)
    for i in range(5):
        dx = X[:, 0] - X[i, 0]
        s0, s1, s2 = 5.0, dx.sum(), (dx**2).sum()
        t0, t1 = Y.sum(), (Y * dx).sum()
        det = s0 * s2 - s1 * s1
        a = (s2 * t0 - s1 * t1) / det
        c = (s0 * t1 - s1 * t0) / det
        assert abs(field.fitted[i] - a) < 1e-10
        assert abs(field.gradients[0, i] - c) < 1e-10


def test_singular_gram_raises_with_index():
    # All points identical: every displacement is zero, Gram has rank 1.
    X = np.zeros((6, 2))
    Y = np.arange(6.0)
    data = Dataset(X=X, Y=Y)
    with pytest.raises(SingularGramError) as exc:
        local_linear_fit(data, _isotropic(2, 1.0), ridge=0.0)
    assert 0 <= exc.value.index < 6
    # the paper-style ridge keeps the same instance finite
    field = local_linear_fit(data, _isotropic(2, 1.0), ridge=1.0 / 6.0)
    assert np.all(np.isfinite(field.fitted))


def test_ridge_continuity():
    rng = np.random.default_rng(2)
    X = rng.uniform(-1, 1, size=(30, 2))
    Y = np.sin(X[:, 0]) + rng.normal(scale=0.1, size=30)
    data = Dataset(X=X, Y=Y)
    shape = _isotropic(2, 1.5)
    base = local_linear_fit(data, shape, ridge=0.0)
    devs = []
    for ridge in [1e-2, 1e-4, 1e-8]:
        f = local_linear_fit(data, shape, ridge=ridge)
        devs.append(np.abs(f.gradients - base.gradients).max())
    assert devs[0] > devs[1] > devs[2]
    assert devs[2] < 1e-6


def test_weight_locality():
    # Points outside the kernel support cannot influence the fit at i.
    rng = np.random.default_rng(3)
    X = np.vstack([rng.uniform(-0.5, 0.5, size=(10, 2)), [[5.0, 5.0], [6.0, -6.0]]])
    Y = rng.normal(size=12)
    data = Dataset(X=X, Y=Y)
    shape = _isotropic(2, 2.0)
    base = local_linear_fit(data, shape, ridge=1e-3)

    X2, Y2 = X.copy(), Y.copy()
    X2[10] = [7.0, 7.0]  # still far outside every local ball
    Y2[11] = 99.0
    moved = local_linear_fit(Dataset(X=X2, Y=Y2), shape, ridge=1e-3)
    for i in range(10):
        np.testing.assert_allclose(moved.fitted[i], base.fitted[i], rtol=1e-12, atol=1e-12)
        np.testing.assert_allclose(moved.gradients[:, i], base.gradients[:, i], rtol=1e-12, atol=1e-12)


def test_compute_betas_trivial_and_oracle():
    zeros = GradientField(fitted=np.zeros(3), gradients=np.zeros((2, 3)))
    psi = np.ones((3, 2))
    np.testing.assert_array_equal(compute_betas(zeros, psi).betas, np.zeros((2, 2)))

    grads = np.array([[1.0, 2.0, 3.0], [4.0, 5.0, 6.0]])
    field = GradientField(fitted=np.zeros(3), gradients=grads)
    # all-ones column (satisfies sum psi^2 = n) averages the gradient columns
    ones = np.ones((3, 1))
    np.testing.assert_allclose(compute_betas(field, ones).betas[:, 0], grads.mean(axis=1))

    psi = np.array([[1.0, -1.0], [2.0, 0.0], [-1.0, 1.0]])
    betas = compute_betas(field, psi).betas
    # scalar triple-loop oracle
    expected = np.zeros((2, 2))
    for l in range(2):
        for k in range(2):
            acc = 0.0
            for i in range(3):
                acc += grads[k, i] * psi[i, l]
            expected[k, l] = acc / 3.0
    np.testing.assert_allclose(betas, expected, atol=1e-15)


def test_compute_betas_linearity_and_validation():
    rng = np.random.default_rng(4)
    g1 = rng.normal(size=(3, 8))
    g2 = rng.normal(size=(3, 8))
    psi = rng.normal(size=(8, 5))
    f = lambda g: compute_betas(GradientField(fitted=np.zeros(8), gradients=g), psi).betas
    np.testing.assert_allclose(f(2.5 * g1 + g2), 2.5 * f(g1) + f(g2), atol=1e-12)
    with pytest.raises(ValueError):
        compute_betas(GradientField(fitted=np.zeros(8), gradients=g1), np.ones((7, 2)))


def test_h1_line_example():
    # d=1, X = (0,1,2,3): every point needs 2 neighbors; the endpoints reach 2 away.
    data = Dataset(X=np.array([[0.0], [1.0], [2.0], [3.0]]), Y=np.zeros(4))
    assert data_driven_h1(data) == 2.0


def test_h1_degenerate_cluster():
    data = Dataset(X=np.zeros((5, 1)), Y=np.arange(5.0))
    assert data_driven_h1(data) == 0.0


def test_h1_symmetric_configuration():
    # Equilateral triangle of side 1 plus its centroid (n = d + 2 = 4): the
    # third-nearest neighbor of each vertex sits a full side away.
    tri = np.array([[0.0, 0.0], [1.0, 0.0], [0.5, np.sqrt(3) / 2]])
    centroid = tri.mean(axis=0)
    X = np.vstack([tri, centroid])
    assert abs(data_driven_h1(Dataset(X=X, Y=np.zeros(4))) - 1.0) < 1e-12


def test_h1_matches_bruteforce():
    rng = np.random.default_rng(5)
    for _ in range(10):
        d = int(rng.integers(1, 4))
        n = int(rng.integers(d + 2, 30))
        X = rng.normal(size=(n, d))
        data = Dataset(X=X, Y=np.zeros(n))
        # enumerate all pairwise distances
        dist = np.sqrt(((X[:, None, :] - X[None, :, :]) ** 2).sum(axis=2))
        expected = 0.0
        for i in range(n):
            others = np.sort(np.delete(dist[i], i))
            expected = max(expected, others[d])
        assert abs(data_driven_h1(data) - expected) < 1e-12
