"""Symmetric eigendecomposition of correlation matrices and PCA projections."""

from __future__ import annotations

import csv
import os
from dataclasses import dataclass

import numpy as np

from . import _kernels
from .errors import DataError, EigenfolioError, TickerMismatchError, ConvergenceError
from .stats import CorrelationMatrix, StandardizedReturns

JACOBI_TOL = 1e-12
JACOBI_MAX_SWEEPS = 100
NEGATIVE_EIGENVALUE_CLAMP = 1e-8
SIGN_TIE = 1e-12


@dataclass(frozen=True)
class EigenDecomposition:
    """Eigenvalues in descending order and matching unit eigenvectors as columns."""

    eigenvalues: np.ndarray
    eigenvectors: np.ndarray
    tickers: tuple[str, ...]
    sweeps: int = 0
    off_norm: float = 0.0

    @property
    def n(self) -> int:
        return len(self.tickers)

    def vector(self, i: int) -> np.ndarray:
        return self.eigenvectors[:, i]

    def explained_variance_ratio(self) -> np.ndarray:
        return self.eigenvalues / self.eigenvalues.sum()


@dataclass(frozen=True)
class FactorScores:
    scores: np.ndarray

    @property
    def k(self) -> int:
        return self.scores.shape[1]


def _orient(vectors: np.ndarray) -> np.ndarray:
    """Flip columns so each sums to >= 0; near-zero sums defer to the largest entry."""
    out = vectors.copy()
    for j in range(out.shape[1]):
        col = out[:, j]
        total = col.sum()
        if abs(total) <= SIGN_TIE:
            flip = col[np.argmax(np.abs(col))] < 0
        else:
            flip = total < 0
        if flip:
            out[:, j] = -col
    return out


def eigh(rho: CorrelationMatrix, tol: float = JACOBI_TOL, max_sweeps: int = JACOBI_MAX_SWEEPS,
         backend: str | None = None) -> EigenDecomposition:
    """Decompose ``rho = Q diag(lam) Q^T`` with cyclic Jacobi rotations.

    Eigenvalues are sorted descending (stable, so ties keep rotation order),
    tiny negatives down to -1e-8 are clamped to zero, and each eigenvector is
    oriented so its entries sum to a nonnegative number.
    """
    w, v, sweeps, off = _kernels.jacobi(rho.matrix, tol=tol, max_sweeps=max_sweeps, backend=backend)
    if off >= tol:
        raise ConvergenceError(sweeps, off)
    order = np.argsort(-w, kind="stable")
    w = w[order]
    v = v[:, order]
    if w[-1] < -NEGATIVE_EIGENVALUE_CLAMP:
        raise EigenfolioError(f"matrix is not positive semidefinite: eigenvalue {w[-1]:.3e}")
    w = np.where(w < 0.0, 0.0, w)
    v = _orient(v)
    w.setflags(write=False)
    v.setflags(write=False)
    return EigenDecomposition(w, v, rho.tickers, sweeps, off)


def _check_k(k: int, n: int, lo: int = 1) -> None:
    if not lo <= k <= n:
        raise ValueError(f"k must be in [{lo}, {n}], got {k}")


def explained_variance(decomp: EigenDecomposition) -> np.ndarray:
    return decomp.explained_variance_ratio()


def cumulative_explained_variance(decomp: EigenDecomposition, k: int) -> float:
    """Share of total eigenvalue mass carried by the first ``k`` components."""
    _check_k(k, decomp.n)
    return float(cumulative_explained_variance_curve(decomp)[k - 1])


def cumulative_explained_variance_curve(decomp: EigenDecomposition) -> np.ndarray:
    # Sequential partial sums of nonnegative terms keep the curve monotone.
    partial = np.cumsum(decomp.eigenvalues)
    return partial / partial[-1]


def project(std: StandardizedReturns, decomp: EigenDecomposition, k: int) -> FactorScores:
    if std.tickers != decomp.tickers:
        raise TickerMismatchError("standardized returns and decomposition have different tickers")
    _check_k(k, decomp.n)
    return FactorScores(std.matrix @ decomp.eigenvectors[:, :k])


def reconstruct(scores: FactorScores, decomp: EigenDecomposition) -> np.ndarray:
    """Rank-k approximation ``scores @ Q[:, :k].T`` of the standardized panel."""
    s = np.asarray(scores.scores, dtype=np.float64)
    if s.ndim != 2 or s.shape[1] > decomp.n:
        raise DataError(f"scores shape {s.shape} incompatible with {decomp.n} components")
    return s @ decomp.eigenvectors[:, : s.shape[1]].T


def write_eigen_csv(decomp: EigenDecomposition, dest: str | os.PathLike, decimals: int = 6) -> None:
    """Write component, eigenvalue, explained fraction and cumulative fraction."""
    ratio = decomp.explained_variance_ratio()
    cev = cumulative_explained_variance_curve(decomp)
    with open(dest, "w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["component", "eigenvalue", "explained_variance", "cumulative_explained_variance"])
        for i in range(decomp.n):
            w.writerow([i, f"{decomp.eigenvalues[i]:.{decimals}f}", f"{ratio[i]:.{decimals}f}",
                        f"{cev[i]:.{decimals}f}"])
