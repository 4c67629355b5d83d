"""Bounded vector family used to aggregate gradients into beta functionals.

Each predictor coordinate contributes cosine and sine vectors evaluated on
the ranks of that coordinate, rescaled column by column so that
sum_i psi_{l,i}^2 = n.  The rescaling of a trigonometric vector whose mean
square is at least 1/2 can never exceed sqrt(2) in absolute value, which
pins the uniform bound on the family.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = ["BasisMatrix", "BasisColumn", "rank_permutations", "build_basis"]

PSI_BOUND = np.sqrt(2.0)


@dataclass(frozen=True)
class BasisColumn:
    """Descriptor of one basis column: source coordinate, frequency index, phase."""

    coordinate: int
    frequency: int
    phase: str  # "cos" or "sin"


@dataclass(frozen=True)
class BasisMatrix:
    """n x L family of normalized bounded vectors with per-column descriptors."""

    psi: np.ndarray
    meta: tuple

    def __post_init__(self):
        psi = np.asarray(self.psi, dtype=float)
        if psi.ndim != 2:
            raise ValueError("psi must be an n x L matrix")
        if len(self.meta) != psi.shape[1]:
            raise ValueError("meta must describe every column")
        object.__setattr__(self, "psi", psi)

    @property
    def n(self) -> int:
        return self.psi.shape[0]

    @property
    def L(self) -> int:
        return self.psi.shape[1]


def rank_permutations(X: np.ndarray):
    """Sorting permutations of each coordinate and their inverses (0-based).

    perms[j] lists row indices so that X[perms[j], j] is ascending, ties
    broken by original index (stable sort).  inverses[j][i] is the rank of
    row i in coordinate j, i.e. perms[j][inverses[j][i]] == i.
    """
    X = np.asarray(X, dtype=float)
    if X.ndim != 2:
        raise ValueError("X must be 2-d")
    if not np.all(np.isfinite(X)):
        raise ValueError("X must be finite")
    n, d = X.shape
    perms = []
    inverses = []
    for j in range(d):
        order = np.argsort(X[:, j], kind="stable")
        inv = np.empty(n, dtype=np.intp)
        inv[order] = np.arange(n, dtype=np.intp)
        perms.append(order)
        inverses.append(inv)
    return perms, inverses


def build_basis(X: np.ndarray, max_freq: int | str = "full") -> BasisMatrix:
    """Build the full rank-permuted trigonometric family on the design X.

    For each coordinate j and each k up to floor(n/2) ("full") the raw
    columns are cos(2 pi (k-1) r_i / n) and sin(2 pi k r_i / n) with r_i the
    1-based rank of X_i in coordinate j.  Columns are rescaled to
    sum psi^2 = n; identically-zero columns (the sine at k = n/2 for even n)
    are dropped and the constant k=1 cosine is kept once across coordinates.
    """
    X = np.asarray(X, dtype=float)
    n, d = X.shape
    if n < 2:
        raise ValueError("need at least two rows")
    if max_freq == "full":
        k_max = n // 2
    else:
        k_max = int(max_freq)
        if k_max < 1:
            raise ValueError("max_freq must be a positive integer or 'full'")
        k_max = min(k_max, n // 2)

    _, inverses = rank_permutations(X)
    cols = []
    meta = []
    have_constant = False
    for j in range(d):
        ranks = (inverses[j] + 1).astype(float)  # 1-based ranks in the trig argument
        for k in range(1, k_max + 1):
            if k == 1:
                if not have_constant:
                    cols.append(np.ones(n))
                    meta.append(BasisColumn(j, k, "cos"))
                    have_constant = True
            else:
                cols.append(np.cos(2.0 * np.pi * (k - 1) * ranks / n))
                meta.append(BasisColumn(j, k, "cos"))
            sin_col = np.sin(2.0 * np.pi * k * ranks / n)
            ms = float(sin_col @ sin_col) / n
            if ms < 1e-12:
                continue  # identically zero up to roundoff (k = n/2, even n)
            cols.append(sin_col)
            meta.append(BasisColumn(j, k, "sin"))

    psi = np.column_stack(cols)
    norms2 = np.einsum("il,il->l", psi, psi)
    psi = psi * np.sqrt(n / norms2)
    assert np.abs(psi).max() <= PSI_BOUND + 1e-9, "basis bound sqrt(2) violated"
    return BasisMatrix(psi=psi, meta=tuple(meta))
