"""Iterative structural-adaptation driver.

Starting from isotropic neighborhoods, each pass fits local-linear gradients
under the current anisotropic metric, aggregates them into beta functionals,
extracts a relaxed structural matrix by max-min, and then shrinks rho while
growing h.  The final pass rescales the betas back to the original predictor
units before the last extraction; the estimate is the rank-m* truncation of
that last relaxed solution.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from .basis import BasisMatrix, build_basis
from .kernels import LINEAR_DECAY, KernelSpec, MetricShape
from .locallinear import BetaMatrix, Dataset, compute_betas, data_driven_h1, local_linear_fit
from .pimax import CappedSpectral, SolverReport, solve_maxmin

__all__ = [
    "Schedule",
    "SolverOptions",
    "LossReport",
    "IterationRecord",
    "EstimateResult",
    "standardize",
    "default_schedule",
    "theoretical_h1",
    "run_samm",
    "loss_metrics",
]


@dataclass(frozen=True)
class Schedule:
    """Bandwidth/penalty ladder: h grows by a_h, rho shrinks by a_rho each pass.

    Iteration stops as soon as the updated rho drops below rho_min or the
    updated h exceeds h_max; with a_rho < 1 the count is always finite.
    ``h1`` may be None, in which case the nearest-neighbor rule supplies it
    from the standardized data at run time.
    """

    h1: float | None
    rho1: float
    a_h: float
    a_rho: float
    h_max: float
    rho_min: float
    m_star: int
    d: int

    def __post_init__(self):
        if self.h1 is not None and not (self.h1 > 0):
            raise ValueError("h1 must be positive")
        if not (self.rho1 > 0):
            raise ValueError("rho1 must be positive")
        if not (self.a_h > 1):
            raise ValueError("a_h must exceed 1")
        if not (0 < self.a_rho < 1):
            raise ValueError("a_rho must lie in (0, 1)")
        if not (self.h_max > 0 and self.rho_min > 0):
            raise ValueError("h_max and rho_min must be positive")
        if not (1 <= self.m_star < self.d):
            raise ValueError("need 1 <= m_star < d")

    def num_iterations(self) -> int:
        """Total passes k(n): first k with rho_{k+1} < rho_min or h_{k+1} > h_max."""
        if self.h1 is None:
            raise ValueError("h1 is unresolved")
        k, rho, h = 0, self.rho1, self.h1
        while True:
            k += 1
            rho *= self.a_rho
            h *= self.a_h
            if rho < self.rho_min or h > self.h_max:
                return k


def default_schedule(n: int, d: int, m_star: int, h1_override: float | None = None) -> Schedule:
    """Default ladder balancing bias against variance.

    rho1 = 1, a_rho = exp(-1/(2(3 v m*))), rho_min = n^(-1/(3 v m*)),
    a_h = exp(1/(2(4 v d))), h_max = 2 sqrt(d).  h1 comes from the
    nearest-neighbor rule unless overridden.
    """
    if not (1 <= m_star < d):
        raise ValueError("need 1 <= m_star < d")
    if n < d + 2:
        raise ValueError("need n >= d + 2")
    mm = max(3, m_star)
    dd = max(4, d)
    return Schedule(
        h1=h1_override,
        rho1=1.0,
        a_h=math.exp(1.0 / (2.0 * dd)),
        a_rho=math.exp(-1.0 / (2.0 * mm)),
        h_max=2.0 * math.sqrt(d),
        rho_min=float(n) ** (-1.0 / mm),
        m_star=m_star,
        d=d,
    )


def theoretical_h1(n: int, d: int, c0: float = 1.0) -> float:
    """Rate-form starting bandwidth c0 * n^(-1/(4 v d)), for use as an override."""
    return c0 * float(n) ** (-1.0 / max(4, d))


@dataclass(frozen=True)
class SolverOptions:
    """Tunables threaded through one estimation run."""

    tol: float = 1e-6
    max_iter: int = 5000
    kernel: KernelSpec = LINEAR_DECAY
    ridge: float | None = None  # None -> 1/n on the (d+1)x(d+1) Gram
    max_freq: int | str = "full"


@dataclass(frozen=True)
class LossReport:
    """Distances between an estimate and a reference projector."""

    spectral: float
    frobenius: float
    trace_residual: float


@dataclass(frozen=True)
class IterationRecord:
    k: int
    h: float
    rho: float
    report: SolverReport
    loss: LossReport | None = None


@dataclass(frozen=True)
class EstimateResult:
    """Final projector, last relaxed solution, and the per-pass trace."""

    pi_hat: np.ndarray
    pi_relaxed_final: CappedSpectral
    iterations: list[IterationRecord]
    x_scales: np.ndarray
    y_scale: float
    schedule: Schedule


def standardize(data: Dataset):
    """Divide Y by its standard deviation and each X column by its own.

    Variances use divisor n.  Returns the standardized dataset plus the
    column scales and the response scale for back-transformation.  A
    zero-variance column or response is rejected by name.
    """
    X, Y = data.X, data.Y
    x_var = X.var(axis=0)
    y_var = Y.var()
    for j, v in enumerate(x_var):
        if v <= 0.0:
            raise ValueError(f"predictor column {j} has zero variance")
    if y_var <= 0.0:
        raise ValueError("response has zero variance")
    scales = np.sqrt(x_var)
    y_scale = float(np.sqrt(y_var))
    return Dataset(X=X / scales, Y=Y / y_scale), scales, y_scale


def loss_metrics(pi_est: np.ndarray, pi_true: np.ndarray) -> LossReport:
    """Spectral and Frobenius distances plus the trace residual tr((I - est) true)."""
    pi_est = np.asarray(pi_est, dtype=float)
    pi_true = np.asarray(pi_true, dtype=float)
    if pi_est.shape != pi_true.shape or pi_est.ndim != 2:
        raise ValueError("projector dimension mismatch")
    _validate_projector(pi_true)
    diff = pi_est - pi_true
    return LossReport(
        spectral=float(np.linalg.norm(diff, 2)),
        frobenius=float(np.linalg.norm(diff, "fro")),
        trace_residual=float(np.trace((np.eye(pi_est.shape[0]) - pi_est) @ pi_true)),
    )


def _validate_projector(P: np.ndarray, d: int | None = None):
    P = np.asarray(P, dtype=float)
    if P.ndim != 2 or P.shape[0] != P.shape[1]:
        raise ValueError("projector must be square")
    if d is not None and P.shape[0] != d:
        raise ValueError(f"projector must be {d} x {d}")
    if np.abs(P - P.T).max() > 1e-8 or np.abs(P @ P - P).max() > 1e-8:
        raise ValueError("matrix is not an orthogonal projector")


def _backmapped_projector(eigvecs: np.ndarray, m: int, scales: np.ndarray) -> np.ndarray:
    # Standardized-coordinate basis mapped to original units and re-orthonormalized.
    W = eigvecs[:, :m] / scales[:, None]
    Q, _ = np.linalg.qr(W)
    P = Q @ Q.T
    return (P + P.T) / 2.0


def run_samm(
    data: Dataset,
    m_star: int,
    schedule: Schedule | None = None,
    psi: BasisMatrix | None = None,
    options: SolverOptions | None = None,
    ground_truth: np.ndarray | None = None,
) -> EstimateResult:
    """Run the full iterative estimator and return the rank-m* projector.

    Passes run in standardized coordinates with the relaxed solution of each
    extraction feeding the next pass's weights.  On the final pass the betas
    are rescaled by the inverse column scales so the last extraction happens
    in the original coordinates.  When ``ground_truth`` is supplied each
    record carries losses (intermediate passes are compared after mapping
    their estimated basis back to original units).
    """
    options = options or SolverOptions()
    n, d = data.n, data.d
    if not (1 <= m_star < d):
        raise ValueError("need 1 <= m_star < d")
    if schedule is None:
        schedule = default_schedule(n, d, m_star)
    if schedule.d != d or schedule.m_star != m_star:
        raise ValueError("schedule was built for different (d, m_star)")
    if ground_truth is not None:
        ground_truth = np.asarray(ground_truth, dtype=float)
        _validate_projector(ground_truth, d)

    std_data, scales, y_scale = standardize(data)
    if schedule.h1 is None:
        schedule = replace(schedule, h1=data_driven_h1(std_data))
    if psi is None:
        psi = build_basis(data.X, options.max_freq)
    if psi.n != n:
        raise ValueError("psi must be built on the same n")
    ridge = options.ridge if options.ridge is not None else 1.0 / n

    rho = schedule.rho1
    h = schedule.h1
    pi_current = np.zeros((d, d))
    records: list[IterationRecord] = []
    k = 0
    while True:
        k += 1
        is_final = (rho * schedule.a_rho < schedule.rho_min) or (h * schedule.a_h > schedule.h_max)
        shape = MetricShape(pi_hat=pi_current, rho=rho, h=h)
        grads = local_linear_fit(std_data, shape, ridge=ridge, kernel=options.kernel)
        betas = compute_betas(grads, psi)
        if is_final:
            betas = BetaMatrix(betas.betas / scales[:, None])
        est = solve_maxmin(betas, m_star, tol=options.tol, max_iter=options.max_iter)

        loss = None
        if ground_truth is not None:
            if is_final:
                loss = loss_metrics(est.pi_projector, ground_truth)
            else:
                loss = loss_metrics(
                    _backmapped_projector(est.pi_relaxed.eigvecs, m_star, scales),
                    ground_truth,
                )
        records.append(IterationRecord(k=k, h=h, rho=rho, report=est.report, loss=loss))
        if is_final:
            final_est = est
            break
        pi_current = est.pi_relaxed.mat
        rho *= schedule.a_rho
        h *= schedule.a_h

    return EstimateResult(
        pi_hat=final_est.pi_projector,
        pi_relaxed_final=final_est.pi_relaxed,
        iterations=records,
        x_scales=scales,
        y_scale=y_scale,
        schedule=schedule,
    )
