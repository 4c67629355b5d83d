"""Benchmark data generators and the seeded replication harness.

Four designs: a single-index model on the cube, a two-index polynomial
interaction on a wide cube, a three-index product on the positive cube, and
a nonlinear autoregression embedded as a six-lag regression problem.  Every
replication draws from counter-based substreams keyed by
(seed, rep_index, purpose) so campaigns are reproducible and independent of
execution order.
"""

from __future__ import annotations

import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .estimator import EstimateResult, SolverOptions, run_samm
from .locallinear import Dataset

__all__ = ["SimSpec", "SimSummary", "generate", "run_campaign", "example_m_star"]

_EXAMPLES = ("ex1", "ex2", "ex3", "ex4")
# (fixed d or None=free, default d, default n, default sigma)
_DEFAULTS = {
    "ex1": (5, 5, 400, 0.5),
    "ex2": (None, 4, 300, 0.1),
    "ex3": (5, 5, 250, 50.0),
    "ex4": (6, 6, 250, 0.2),
}
_M_STAR = {"ex1": 1, "ex2": 2, "ex3": 3, "ex4": 3}

_DESIGN, _NOISE, _INIT = 0, 1, 2


@dataclass(frozen=True)
class SimSpec:
    """One benchmark configuration; omitted fields take per-example defaults."""

    example: str
    n: int | None = None
    d: int | None = None
    sigma: float | None = None
    reps: int = 50
    seed: int = 0

    def __post_init__(self):
        if self.example not in _EXAMPLES:
            raise ValueError(f"example must be one of {_EXAMPLES}")
        fixed_d, default_d, default_n, default_sigma = _DEFAULTS[self.example]
        d = self.d if self.d is not None else default_d
        if fixed_d is not None and d != fixed_d:
            raise ValueError(f"{self.example} requires d = {fixed_d}")
        if self.example == "ex2" and d < 2:
            raise ValueError("ex2 requires d >= 2")
        n = self.n if self.n is not None else default_n
        sigma = self.sigma if self.sigma is not None else default_sigma
        if n < d + 2:
            raise ValueError("need n >= d + 2")
        if sigma < 0:
            raise ValueError("sigma must be non-negative")
        if self.reps < 1:
            raise ValueError("reps must be positive")
        if self.seed < 0:
            raise ValueError("seed must be a non-negative integer")
        object.__setattr__(self, "n", int(n))
        object.__setattr__(self, "d", int(d))
        object.__setattr__(self, "sigma", float(sigma))


@dataclass(frozen=True)
class SimSummary:
    """Campaign aggregates; standard deviations use divisor N."""

    mean_loss_first: float
    mean_loss_final: float
    std_first: float
    std_final: float
    per_rep_first: np.ndarray
    per_rep_final: np.ndarray
    runtime: float


def example_m_star(example: str) -> int:
    return _M_STAR[example]


def _rng(seed: int, rep_index: int, purpose: int) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(np.random.SeedSequence([seed, rep_index, purpose])))


def _theta_ex1() -> np.ndarray:
    return np.array([1.0, 2.0, 0.0, 0.0, 0.0]) / np.sqrt(5.0)


def _thetas_ex4() -> np.ndarray:
    return np.column_stack(
        [
            np.array([1.0, 0.0, 0.0, 2.0, 0.0, 0.0]) / np.sqrt(5.0),
            np.array([0.0, 0.0, 1.0, 0.0, 0.0, 2.0]) / np.sqrt(5.0),
            np.array([-2.0, 2.0, -2.0, 1.0, -1.0, 1.0]) / np.sqrt(15.0),
        ]
    )


def _g4(u1: float, u2: float, u3: float) -> float:
    return -1.0 + 0.6 * u1 - np.cos(0.5 * np.pi * u2) + np.exp(-(u3**2))


def true_projector(spec: SimSpec) -> np.ndarray:
    """Orthogonal projector onto the index span of the chosen example."""
    if spec.example == "ex1":
        theta = _theta_ex1()
        return np.outer(theta, theta)
    if spec.example == "ex2":
        P = np.zeros((spec.d, spec.d))
        P[0, 0] = P[1, 1] = 1.0
        return P
    if spec.example == "ex3":
        P = np.zeros((5, 5))
        P[0, 0] = P[1, 1] = P[2, 2] = 1.0
        return P
    theta = _thetas_ex4()  # columns are orthonormal
    return theta @ theta.T


def generate(spec: SimSpec, rep_index: int):
    """Draw one replication: returns (Dataset, true projector).

    Randomness comes from substreams keyed by (seed, rep_index, purpose), so
    any replication can be regenerated in isolation.
    """
    if rep_index < 0:
        raise ValueError("rep_index must be non-negative")
    n, sigma = spec.n, spec.sigma
    design = _rng(spec.seed, rep_index, _DESIGN)
    noise = _rng(spec.seed, rep_index, _NOISE)

    if spec.example == "ex1":
        X = design.uniform(-1.0, 1.0, size=(n, 5))
        t = X @ _theta_ex1()
        f = 4.0 * np.sqrt(np.abs(t)) * np.sin(np.pi * t) ** 2
    elif spec.example == "ex2":
        X = design.uniform(-40.0, 40.0, size=(n, spec.d))
        f = (X[:, 0] - X[:, 1] ** 3) * (X[:, 0] ** 3 + X[:, 1])
    elif spec.example == "ex3":
        X = design.uniform(0.0, 20.0, size=(n, 5))
        f = (1.0 + X[:, 0]) * (1.0 + X[:, 1]) * (1.0 + X[:, 2])
    else:
        thetas = _thetas_ex4()
        init = _rng(spec.seed, rep_index, _INIT)
        T = np.empty(n + 6)
        T[:6] = init.standard_normal(6)
        eps = noise.standard_normal(n)
        for i in range(n):
            v = T[i : i + 6]
            T[i + 6] = _g4(v @ thetas[:, 0], v @ thetas[:, 1], v @ thetas[:, 2]) + sigma * eps[i]
        X = np.stack([T[i : i + 6] for i in range(n)])
        Y = T[6 : n + 6].copy()
        return Dataset(X=X, Y=Y), true_projector(spec)

    Y = f + sigma * noise.standard_normal(n)
    return Dataset(X=X, Y=Y), true_projector(spec)


def _run_one(spec: SimSpec, options: SolverOptions | None, rep: int):
    data, truth = generate(spec, rep)
    result: EstimateResult = run_samm(
        data, example_m_star(spec.example), options=options, ground_truth=truth
    )
    return result.iterations[0].loss.spectral, result.iterations[-1].loss.spectral


def run_campaign(
    spec: SimSpec,
    options: SolverOptions | None = None,
    threads: int = 1,
) -> SimSummary:
    """Run all replications and aggregate first-pass and final spectral losses.

    Deterministic for a given spec and options regardless of ``threads``;
    a replication producing a non-finite loss aborts the campaign naming it.
    """
    start = time.perf_counter()
    reps = range(spec.reps)
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            pairs = list(pool.map(lambda r: _run_one(spec, options, r), reps))
    else:
        pairs = [_run_one(spec, options, r) for r in reps]
    first = np.array([p[0] for p in pairs])
    final = np.array([p[1] for p in pairs])
    for rep in range(spec.reps):
        if not (np.isfinite(first[rep]) and np.isfinite(final[rep])):
            raise RuntimeError(f"replication {rep} produced a non-finite loss")
    return SimSummary(
        mean_loss_first=float(first.mean()),
        mean_loss_final=float(final.mean()),
        std_first=float(first.std()),
        std_final=float(final.std()),
        per_rep_first=first,
        per_rep_final=final,
        runtime=time.perf_counter() - start,
    )
