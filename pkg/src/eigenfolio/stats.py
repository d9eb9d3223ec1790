"""Column standardisation and the empirical correlation matrix."""

from __future__ import annotations

import csv
import os
from dataclasses import dataclass

import numpy as np

from .errors import DataError, ZeroVarianceError
from .market_data import ReturnTable

# A column whose sample std falls at or below this is treated as constant.
ZERO_STD = 1e-15


@dataclass(frozen=True)
class StandardizedReturns:
    matrix: np.ndarray
    means: np.ndarray
    stds: np.ndarray
    tickers: tuple[str, ...]

    @property
    def n_rows(self) -> int:
        return self.matrix.shape[0]


@dataclass(frozen=True)
class CorrelationMatrix:
    """Symmetric N x N correlation matrix with unit diagonal."""

    matrix: np.ndarray
    tickers: tuple[str, ...]

    def __post_init__(self):
        m = np.array(self.matrix, dtype=np.float64)
        m.setflags(write=False)
        object.__setattr__(self, "matrix", m)
        object.__setattr__(self, "tickers", tuple(self.tickers))
        n = len(self.tickers)
        if m.shape != (n, n):
            raise DataError(f"correlation matrix shape {m.shape} does not match {n} tickers")
        if not np.all(np.isfinite(m)):
            raise DataError("non-finite correlation entry")
        if np.abs(m - m.T).max(initial=0.0) > 1e-12:
            raise DataError("correlation matrix is not symmetric")
        if np.abs(np.diag(m) - 1.0).max(initial=0.0) > 1e-10:
            raise DataError("correlation matrix diagonal is not 1")
        if np.abs(m).max(initial=0.0) > 1.0 + 1e-10:
            raise DataError("correlation entry outside [-1, 1]")

    @property
    def n(self) -> int:
        return len(self.tickers)


def standardize(returns: ReturnTable) -> StandardizedReturns:
    """Centre each column and scale it to unit sample variance (divisor M-1).

    Raises :class:`ZeroVarianceError` naming the first constant column.
    """
    r = returns.returns
    m = r.shape[0]
    if m < 3:
        raise DataError(f"standardisation needs at least 3 return rows, got {m}")
    means = r.mean(axis=0)
    centred = r - means
    stds = np.sqrt(np.sum(centred * centred, axis=0) / (m - 1))
    for ticker, sd in zip(returns.tickers, stds):
        if sd <= ZERO_STD:
            raise ZeroVarianceError(ticker)
    z = centred / stds
    for arr in (z, means, stds):
        arr.setflags(write=False)
    return StandardizedReturns(z, means, stds, returns.tickers)


def correlation_matrix(std: StandardizedReturns) -> CorrelationMatrix:
    z = std.matrix
    m = z.shape[0]
    if m < 3:
        raise DataError(f"correlation needs at least 3 rows, got {m}")
    rho = (z.T @ z) / (m - 1)
    rho = 0.5 * (rho + rho.T)
    np.clip(rho, -1.0, 1.0, out=rho)
    np.fill_diagonal(rho, 1.0)
    return CorrelationMatrix(rho, std.tickers)


def write_correlation_csv(rho: CorrelationMatrix, dest: str | os.PathLike, decimals: int = 6) -> None:
    """Dump the matrix with tickers as header row and first column."""
    with open(dest, "w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["ticker", *rho.tickers])
        for ticker, row in zip(rho.tickers, rho.matrix):
            w.writerow([ticker, *(f"{x:.{decimals}f}" for x in row)])
