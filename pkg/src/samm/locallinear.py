"""Weighted local-linear fits of the regression function and its gradient.

Each design point gets its own (d+1)-dimensional weighted least-squares
system built from the anisotropic kernel weights; the per-point gradients
are then aggregated against a bounded vector family into the beta
functionals that drive the structural extraction step.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .kernels import LINEAR_DECAY, KernelSpec, MetricShape, weight_matrix

__all__ = [
    "Dataset",
    "GradientField",
    "BetaMatrix",
    "SingularGramError",
    "local_linear_fit",
    "compute_betas",
    "data_driven_h1",
]


class SingularGramError(np.linalg.LinAlgError):
    """Raised when an unregularized per-point Gram matrix is singular."""

    def __init__(self, index: int):
        self.index = index
        super().__init__(f"singular local Gram matrix at point index {index} (ridge=0)")


@dataclass(frozen=True)
class Dataset:
    """Design matrix X (n x d) and response vector Y (n)."""

    X: np.ndarray
    Y: np.ndarray

    def __post_init__(self):
        X = np.asarray(self.X, dtype=float)
        Y = np.asarray(self.Y, dtype=float)
        if X.ndim != 2:
            raise ValueError("X must be a 2-d array")
        if Y.ndim != 1 or Y.shape[0] != X.shape[0]:
            raise ValueError("Y must be a vector with one entry per row of X")
        n, d = X.shape
        if d < 1:
            raise ValueError("X needs at least one column")
        if n < d + 2:
            raise ValueError(f"need n >= d + 2 observations, got n={n}, d={d}")
        if not (np.all(np.isfinite(X)) and np.all(np.isfinite(Y))):
            raise ValueError("X and Y must be finite")
        object.__setattr__(self, "X", X)
        object.__setattr__(self, "Y", Y)

    @property
    def n(self) -> int:
        return self.X.shape[0]

    @property
    def d(self) -> int:
        return self.X.shape[1]


@dataclass(frozen=True)
class GradientField:
    """Per-point fitted values (n,) and gradient estimates stored as d x n columns."""

    fitted: np.ndarray
    gradients: np.ndarray

    def __post_init__(self):
        fitted = np.asarray(self.fitted, dtype=float)
        grads = np.asarray(self.gradients, dtype=float)
        if fitted.ndim != 1 or grads.ndim != 2 or grads.shape[1] != fitted.shape[0]:
            raise ValueError("gradients must be d x n with n matching fitted")
        if not (np.all(np.isfinite(fitted)) and np.all(np.isfinite(grads))):
            raise ValueError("local-linear estimates must be finite")
        object.__setattr__(self, "fitted", fitted)
        object.__setattr__(self, "gradients", grads)


@dataclass(frozen=True)
class BetaMatrix:
    """Gradient functionals: column l is beta_l = (1/n) sum_i grad_i * psi_{l,i}."""

    betas: np.ndarray

    def __post_init__(self):
        b = np.asarray(self.betas, dtype=float)
        if b.ndim != 2:
            raise ValueError("betas must be a d x L matrix")
        if not np.all(np.isfinite(b)):
            raise ValueError("betas must be finite")
        object.__setattr__(self, "betas", b)

    @property
    def d(self) -> int:
        return self.betas.shape[0]

    @property
    def L(self) -> int:
        return self.betas.shape[1]


def _clipped_pinv_solve(G: np.ndarray, b: np.ndarray) -> np.ndarray:
    # Eigenvalue-clipped pseudo-inverse; floor at 1e-12 * trace.
    evals, evecs = np.linalg.eigh(G)
    floor = 1e-12 * max(np.trace(G), np.finfo(float).tiny)
    evals = np.maximum(evals, floor)
    return evecs @ ((evecs.T @ b) / evals)


def local_linear_fit(
    data: Dataset,
    shape: MetricShape,
    ridge: float = 0.0,
    kernel: KernelSpec = LINEAR_DECAY,
) -> GradientField:
    """Fit (f_hat(X_i), grad_hat(X_i)) at every design point.

    For each i the coefficients solve the normal equations with Gram matrix
    sum_j (1, x_ij)(1, x_ij)^T w_ij + ridge * I_{d+1} and moment vector
    sum_j Y_j (1, x_ij) w_ij, where x_ij = X_j - X_i and w_ij are the
    anisotropic kernel weights of ``shape``.  With ridge = 0 a singular Gram
    matrix raises :class:`SingularGramError` naming the offending point.
    """
    if ridge < 0:
        raise ValueError("ridge must be non-negative")
    X, Y = data.X, data.Y
    n, d = X.shape
    W = weight_matrix(shape, X, kernel)

    # Centered first/second weighted moments per point.
    s0 = W.sum(axis=1)
    m1 = W @ X
    XX = (X[:, :, None] * X[:, None, :]).reshape(n, d * d)
    m2 = (W @ XX).reshape(n, d, d)
    s1 = m1 - s0[:, None] * X
    s2 = (
        m2
        - X[:, :, None] * m1[:, None, :]
        - m1[:, :, None] * X[:, None, :]
        + s0[:, None, None] * X[:, :, None] * X[:, None, :]
    )

    G = np.zeros((n, d + 1, d + 1))
    G[:, 0, 0] = s0
    G[:, 0, 1:] = s1
    G[:, 1:, 0] = s1
    G[:, 1:, 1:] = s2
    G += ridge * np.eye(d + 1)

    b0 = W @ Y
    b1 = (W * Y[None, :]) @ X - b0[:, None] * X
    b = np.concatenate([b0[:, None], b1], axis=1)

    try:
        coef = np.linalg.solve(G, b[:, :, None])[:, :, 0]
    except np.linalg.LinAlgError:
        coef = np.empty((n, d + 1))
        for i in range(n):
            try:
                coef[i] = np.linalg.solve(G[i], b[i])
            except np.linalg.LinAlgError:
                if ridge == 0.0:
                    raise SingularGramError(i) from None
                coef[i] = _clipped_pinv_solve(G[i], b[i])
    if not np.all(np.isfinite(coef)):
        bad = int(np.flatnonzero(~np.isfinite(coef).all(axis=1))[0])
        if ridge == 0.0:
            raise SingularGramError(bad)
        for i in np.flatnonzero(~np.isfinite(coef).all(axis=1)):
            coef[i] = _clipped_pinv_solve(G[i], b[i])

    return GradientField(fitted=coef[:, 0], gradients=coef[:, 1:].T)


def compute_betas(grad: GradientField, psi) -> BetaMatrix:
    """Aggregate gradients into beta_l = (1/n) * gradients @ psi[:, l].

    ``psi`` may be a BasisMatrix or a plain n x L array; its row count must
    equal the number of fitted points.
    """
    cols = np.asarray(getattr(psi, "psi", psi), dtype=float)
    n = grad.fitted.shape[0]
    if cols.ndim != 2 or cols.shape[0] != n:
        raise ValueError(f"psi must have {n} rows, got shape {cols.shape}")
    return BetaMatrix(betas=(grad.gradients @ cols) / n)


def data_driven_h1(data: Dataset) -> float:
    """Smallest radius h such that every point has >= d+1 others within distance h.

    Computed exactly as the max over i of the (d+1)-th smallest Euclidean
    distance from X_i to the other points.  Duplicate points are allowed
    (distance 0 counts).
    """
    X = data.X
    n, d = X.shape
    sq = np.einsum("ij,ij->i", X, X)
    worst = 0.0
    block = 256
    for start in range(0, n, block):
        stop = min(start + block, n)
        d2 = sq[start:stop, None] + sq[None, :] - 2.0 * (X[start:stop] @ X.T)
        np.maximum(d2, 0.0, out=d2)
        rows = np.arange(start, stop)
        d2[np.arange(stop - start), rows] = np.inf  # exclude self
        kth = np.partition(d2, d, axis=1)[:, d]
        worst = max(worst, float(kth.max()))
    return float(np.sqrt(worst))
