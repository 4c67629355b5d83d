"""Compactly supported kernels and anisotropic neighborhood weights.

The weight attached to the pair (i, j) is K(x_ij^T A x_ij / h^2) with
x_ij = X_j - X_i and metric matrix A = I + rho^-2 * Pi_hat.  Shrinking rho
squeezes the neighborhood along the currently estimated index directions
while leaving the orthogonal directions untouched.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "KernelSpec",
    "LINEAR_DECAY",
    "QUARTIC",
    "MetricShape",
    "kernel_eval",
    "weights",
    "weight_matrix",
]

_FAMILIES = ("linear_decay", "quartic")


@dataclass(frozen=True)
class KernelSpec:
    """Scalar kernel K on squared scaled distances: positive on [0,1), zero beyond.

    ``linear_decay`` is K(t) = (1-t)+ (Epanechnikov in distance),
    ``quartic`` is K(t) = (1-t)+^2.  Both are normalized so K(0) = 1; the
    kernel only enters weighted least squares through ratios, so the scale
    is immaterial.
    """

    family: str = "linear_decay"

    def __post_init__(self):
        if self.family not in _FAMILIES:
            raise ValueError(f"unknown kernel family {self.family!r}; expected one of {_FAMILIES}")


LINEAR_DECAY = KernelSpec("linear_decay")
QUARTIC = KernelSpec("quartic")


def kernel_eval(spec: KernelSpec, t):
    """Evaluate K(t) for scalar or array t; t must be finite and >= 0."""
    t = np.asarray(t, dtype=float)
    if not np.all(np.isfinite(t)):
        raise ValueError("kernel argument must be finite")
    if np.any(t < 0):
        raise ValueError("kernel argument must be non-negative")
    base = np.maximum(1.0 - t, 0.0)
    if spec.family == "quartic":
        base = base * base
    if base.ndim == 0:
        return float(base)
    return base


@dataclass(frozen=True)
class MetricShape:
    """Neighborhood shape (Pi_hat, rho, h) defining the metric (I + rho^-2 Pi_hat)/h^2.

    ``pi_hat`` must be symmetric with eigenvalues in [0, 1] (an element of the
    relaxed projector set), ``rho`` lies in (0, 1] and ``h`` is positive, so
    the induced metric matrix is symmetric positive definite.
    """

    pi_hat: np.ndarray
    rho: float
    h: float
    _metric: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        pi = np.asarray(self.pi_hat, dtype=float)
        if pi.ndim != 2 or pi.shape[0] != pi.shape[1]:
            raise ValueError("pi_hat must be a square matrix")
        if not np.all(np.isfinite(pi)):
            raise ValueError("pi_hat must be finite")
        scale = 1.0 + np.abs(pi).max()
        if np.abs(pi - pi.T).max() > 1e-8 * scale:
            raise ValueError("pi_hat must be symmetric")
        evals = np.linalg.eigvalsh((pi + pi.T) / 2.0)
        if evals.min() < -1e-8 or evals.max() > 1.0 + 1e-8:
            raise ValueError("pi_hat eigenvalues must lie in [0, 1]")
        if not (0.0 < self.rho <= 1.0):
            raise ValueError("rho must lie in (0, 1]")
        if not (self.h > 0.0 and np.isfinite(self.h)):
            raise ValueError("h must be positive and finite")
        object.__setattr__(self, "pi_hat", pi)
        object.__setattr__(self, "_metric", np.eye(pi.shape[0]) + pi / self.rho**2)

    @property
    def metric(self) -> np.ndarray:
        """The matrix I + rho^-2 * Pi_hat (without the 1/h^2 factor)."""
        return self._metric

    @property
    def dim(self) -> int:
        return self.pi_hat.shape[0]


def weights(shape: MetricShape, X: np.ndarray, i: int, spec: KernelSpec = LINEAR_DECAY) -> np.ndarray:
    """Kernel weights of every observation relative to point ``i`` (0-based).

    Returns w with w[j] = K(x_ij^T (I + rho^-2 Pi_hat) x_ij / h^2); in
    particular w[i] = K(0) > 0 and w[j] = 0 exactly when the scaled squared
    distance reaches 1.
    """
    X = np.asarray(X, dtype=float)
    if X.ndim != 2 or X.shape[1] != shape.dim:
        raise ValueError("X must be n x d with d matching the shape")
    n = X.shape[0]
    if not (0 <= i < n):
        raise ValueError(f"point index {i} out of range for n={n}")
    diff = X - X[i]
    q = np.einsum("jk,jk->j", diff @ shape.metric, diff)
    np.maximum(q, 0.0, out=q)
    return kernel_eval(spec, q / shape.h**2)


def weight_matrix(shape: MetricShape, X: np.ndarray, spec: KernelSpec = LINEAR_DECAY) -> np.ndarray:
    """All pairwise weights at once (n x n, symmetric, unit diagonal for K(0)=1).

    Same quantities as :func:`weights` row by row, computed via the expansion
    q_ij = r_i + r_j - 2 x_i^T A x_j and explicitly symmetrized.
    """
    X = np.asarray(X, dtype=float)
    XA = X @ shape.metric
    r = np.einsum("jk,jk->j", XA, X)
    q = r[:, None] + r[None, :] - 2.0 * (XA @ X.T)
    q = (q + q.T) / 2.0
    np.fill_diagonal(q, 0.0)
    np.maximum(q, 0.0, out=q)
    return kernel_eval(spec, q / shape.h**2)
