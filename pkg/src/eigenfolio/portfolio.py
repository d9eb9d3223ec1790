"""Eigen-portfolio weights, Sharpe scoring, ranking and Sharpe-weighted ensembles."""

from __future__ import annotations

import csv
import json
import math
import os
from dataclasses import dataclass

import numpy as np

from .eigensolver import EigenDecomposition
from .errors import (
    DegenerateNormalizationError,
    EnsembleError,
    TickerMismatchError,
    UndefinedSharpeError,
)
from .market_data import ReturnTable

SIGNED = "signed-sum-one"
ABSOLUTE = "abs-sum-one"
NORMALIZATIONS = (SIGNED, ABSOLUTE)

PERIODS_PER_YEAR = 252
# |sum(q)| at or below this makes signed normalisation degenerate.
DEGENERATE_SUM = 1e-6
# Compounded growth at or below this counts as a total loss.
TOTAL_LOSS_GROWTH = 1e-12


@dataclass(frozen=True)
class PortfolioWeights:
    """A weight vector over ``tickers``.

    ``provenance`` is ``("eigen", i)``, ``("ensemble", (i, j, ...))`` or
    ``("equal-weight", None)``.
    """

    weights: np.ndarray
    tickers: tuple[str, ...]
    normalization: str = SIGNED
    provenance: tuple = ("eigen", None)

    def __post_init__(self):
        w = np.array(self.weights, dtype=np.float64)
        w.setflags(write=False)
        object.__setattr__(self, "weights", w)
        object.__setattr__(self, "tickers", tuple(self.tickers))
        if w.shape != (len(self.tickers),):
            raise ValueError(f"weights shape {w.shape} does not match {len(self.tickers)} tickers")
        if not np.all(np.isfinite(w)):
            raise ValueError("non-finite portfolio weight")
        if self.normalization not in NORMALIZATIONS:
            raise ValueError(f"unknown normalization {self.normalization!r}")
        gross = np.abs(w).sum()
        total = w.sum() if self.normalization == SIGNED else gross
        # Rounding in the sum grows with leverage, so the slack does too.
        if abs(total - 1.0) > 1e-10 * max(1.0, gross):
            raise ValueError(f"{self.normalization} weights sum to {total!r}")

    def as_dict(self) -> dict[str, float]:
        return {t: float(x) for t, x in zip(self.tickers, self.weights)}


@dataclass(frozen=True)
class PerformanceMetrics:
    annualized_return: float
    annualized_volatility: float
    sharpe: float
    total_loss_flag: bool = False

    def as_dict(self) -> dict:
        sharpe = self.sharpe if math.isfinite(self.sharpe) else None
        return {
            "annualized_return": self.annualized_return,
            "annualized_volatility": self.annualized_volatility,
            "sharpe": sharpe,
            "total_loss_flag": self.total_loss_flag,
        }


@dataclass(frozen=True)
class RankedEntry:
    component: int
    weights: PortfolioWeights
    metrics: PerformanceMetrics


@dataclass(frozen=True)
class RankedComponents:
    """Components sorted by in-sample Sharpe, plus the ones left out and why."""

    entries: tuple[RankedEntry, ...]
    skipped: tuple[tuple[int, str], ...] = ()
    n_components: int = 0

    def __len__(self) -> int:
        return len(self.entries)

    @property
    def sharpes(self) -> np.ndarray:
        return np.array([e.metrics.sharpe for e in self.entries])

    def positive_count(self) -> int:
        return int(np.sum(self.sharpes > 0.0))


@dataclass(frozen=True)
class EnsembleSpec:
    n: int
    coefficients: np.ndarray
    member_indices: tuple[int, ...]
    combined: PortfolioWeights


def normalize_eigenvector(q, mode: str = SIGNED, component: int | None = None,
                          tickers: tuple[str, ...] | None = None) -> PortfolioWeights:
    """Scale an eigenvector into portfolio weights.

    ``signed-sum-one`` divides by the plain sum so the weights add to one;
    ``abs-sum-one`` divides by the sum of magnitudes.
    """
    q = np.asarray(q, dtype=np.float64)
    if tickers is None:
        tickers = tuple(f"A{j}" for j in range(q.size))
    if mode == SIGNED:
        denom = q.sum()
        if abs(denom) <= DEGENERATE_SUM:
            raise DegenerateNormalizationError(component, float(denom))
    elif mode == ABSOLUTE:
        denom = np.abs(q).sum()
        if denom == 0.0:
            raise DegenerateNormalizationError(component, 0.0)
    else:
        raise ValueError(f"unknown normalization {mode!r}")
    w = q / denom
    return PortfolioWeights(w, tickers, mode, ("eigen", component))


def portfolio_return_series(w: PortfolioWeights, returns: ReturnTable) -> np.ndarray:
    """Daily returns of a constant-weight, daily-rebalanced portfolio."""
    if w.tickers != returns.tickers:
        raise TickerMismatchError("portfolio and return panel have different tickers")
    return returns.returns @ w.weights


def compounded_growth(series) -> float:
    """Sequential product of ``1 + r``; zero once wealth is wiped out."""
    r = np.asarray(series, dtype=np.float64)
    factors = 1.0 + r
    if np.any(factors <= 0.0):
        return 0.0
    return float(np.cumprod(factors)[-1])


def annualized_return(series, periods_per_year: int = PERIODS_PER_YEAR) -> float:
    return _annualized_return(series, periods_per_year)[0]


def _annualized_return(series, periods_per_year: int) -> tuple[float, bool]:
    r = np.asarray(series, dtype=np.float64)
    if r.size == 0:
        raise ValueError("annualized return of an empty series")
    growth = compounded_growth(r)
    if growth <= TOTAL_LOSS_GROWTH:
        return -1.0, True
    return growth ** (periods_per_year / r.size) - 1.0, False


def annualized_volatility(series, periods_per_year: int = PERIODS_PER_YEAR) -> float:
    """Sample standard deviation (divisor T-1) scaled by sqrt(periods_per_year)."""
    r = np.asarray(series, dtype=np.float64)
    if r.size < 2:
        raise ValueError("volatility needs at least two observations")
    if np.all(r == r[0]):
        return 0.0
    dev = r - r.mean()
    return math.sqrt(float(np.dot(dev, dev)) / (r.size - 1)) * math.sqrt(periods_per_year)


def sharpe_ratio(series, periods_per_year: int = PERIODS_PER_YEAR,
                 risk_free_daily: float = 0.0) -> PerformanceMetrics:
    """Annualized geometric return over annualized volatility.

    A nonzero ``risk_free_daily`` is subtracted from every period before
    compounding. Raises :class:`UndefinedSharpeError` for a flat series.
    """
    r = np.asarray(series, dtype=np.float64)
    if r.size < 2:
        raise ValueError("Sharpe ratio needs at least two observations")
    if risk_free_daily:
        r = r - risk_free_daily
    ret, wiped = _annualized_return(r, periods_per_year)
    vol = annualized_volatility(r, periods_per_year)
    if vol == 0.0:
        raise UndefinedSharpeError()
    return PerformanceMetrics(ret, vol, ret / vol, wiped)


def metrics_from_ratio(annual_return: float, annual_volatility: float) -> PerformanceMetrics:
    """Metrics from already-annualized figures, e.g. a published table row."""
    if annual_volatility <= 0.0:
        raise UndefinedSharpeError()
    return PerformanceMetrics(annual_return, annual_volatility, annual_return / annual_volatility,
                              annual_return == -1.0)


def eigenportfolio_variance(decomp: EigenDecomposition, i: int) -> float:
    """Variance of the standardized-return portfolio built from sum-one weights.

    The unit eigenvector carries variance ``lambda_i``; dividing it by its
    entry sum rescales that by ``1 / sum(q_i)**2``.
    """
    total = float(decomp.vector(i).sum())
    if abs(total) <= DEGENERATE_SUM:
        raise DegenerateNormalizationError(i, total)
    return float(decomp.eigenvalues[i]) / total**2


def rank_components(decomp: EigenDecomposition, train: ReturnTable, mode: str = SIGNED,
                    periods_per_year: int = PERIODS_PER_YEAR,
                    risk_free_daily: float = 0.0) -> RankedComponents:
    """Score every eigen-portfolio on ``train`` and sort by Sharpe, best first.

    Components whose weights cannot be normalised or whose in-sample return
    series is flat are listed in ``skipped`` instead of ranked.
    """
    if decomp.tickers != train.tickers:
        raise TickerMismatchError("decomposition and training panel have different tickers")
    if train.n_rows == 0:
        raise ValueError("empty training panel")
    entries: list[RankedEntry] = []
    skipped: list[tuple[int, str]] = []
    for i in range(decomp.n):
        try:
            w = normalize_eigenvector(decomp.vector(i), mode, component=i, tickers=decomp.tickers)
        except DegenerateNormalizationError:
            skipped.append((i, "degenerate normalization"))
            continue
        series = portfolio_return_series(w, train)
        try:
            m = sharpe_ratio(series, periods_per_year, risk_free_daily)
        except UndefinedSharpeError:
            skipped.append((i, "zero volatility"))
            continue
        entries.append(RankedEntry(i, w, m))
    if not entries:
        raise EnsembleError("every component was excluded from ranking")
    entries.sort(key=lambda e: (-e.metrics.sharpe, e.component))
    return RankedComponents(tuple(entries), tuple(skipped), decomp.n)


def ensemble_weights(ranked: RankedComponents, n: int) -> EnsembleSpec:
    """Sharpe-proportional blend of the top ``n`` ranked eigen-portfolios."""
    if not 1 <= n <= len(ranked):
        raise ValueError(f"ensemble size must be in [1, {len(ranked)}], got {n}")
    top = ranked.entries[:n]
    sharpes = np.array([e.metrics.sharpe for e in top])
    if np.any(sharpes <= 0.0):
        raise EnsembleError("non-positive Sharpe in ensemble: every member needs Sharpe > 0")
    alpha = sharpes / sharpes.sum()
    mode = top[0].weights.normalization
    combined = np.zeros_like(top[0].weights.weights)
    for a, e in zip(alpha, top):
        combined += a * e.weights.weights
    if mode == ABSOLUTE:
        combined /= np.abs(combined).sum()
    members = tuple(e.component for e in top)
    weights = PortfolioWeights(combined, top[0].weights.tickers, mode, ("ensemble", members))
    alpha.setflags(write=False)
    return EnsembleSpec(n, alpha, members, weights)


def sweep_ensemble_size(ranked: RankedComponents, train: ReturnTable, n_max: int,
                        periods_per_year: int = PERIODS_PER_YEAR,
                        risk_free_daily: float = 0.0) -> tuple[int, list[tuple[int, float]]]:
    """Evaluate ensembles of size 1..n_max in-sample; return the best size and the curve.

    Ties go to the smaller ensemble.
    """
    if n_max < 1:
        raise ValueError("n_max must be at least 1")
    positive = ranked.positive_count()
    if positive == 0:
        raise EnsembleError("no component has a positive in-sample Sharpe ratio")
    if n_max > positive:
        raise EnsembleError(f"n_max={n_max} exceeds the {positive} positive-Sharpe components")
    curve: list[tuple[int, float]] = []
    for n in range(1, n_max + 1):
        spec = ensemble_weights(ranked, n)
        series = portfolio_return_series(spec.combined, train)
        try:
            s = sharpe_ratio(series, periods_per_year, risk_free_daily).sharpe
        except UndefinedSharpeError:
            s = math.nan
        curve.append((n, s))
    best_n, best = curve[0]
    for n, s in curve[1:]:
        if s > best:
            best_n, best = n, s
    return best_n, curve


def top_positions(w: PortfolioWeights, k: int = 5):
    """Largest ``k`` long and ``k`` short weights as ``(ticker, weight)`` pairs.

    Longs are sorted descending, shorts most negative first.
    """
    if k < 1:
        raise ValueError("k must be at least 1")
    pairs = list(zip(w.tickers, (float(x) for x in w.weights)))
    longs = sorted((p for p in pairs if p[1] > 0), key=lambda p: -p[1])[:k]
    shorts = sorted((p for p in pairs if p[1] < 0), key=lambda p: p[1])[:k]
    return longs, shorts


def write_ranking_csv(ranked: RankedComponents, dest: str | os.PathLike, decimals: int = 6) -> None:
    with open(dest, "w", encoding="utf-8", newline="") as fh:
        out = csv.writer(fh, lineterminator="\n")
        out.writerow(["pc_index", "annualized_return", "annualized_volatility", "sharpe_ratio", "excluded"])
        for e in ranked.entries:
            m = e.metrics
            out.writerow([e.component, f"{m.annualized_return:.{decimals}f}",
                          f"{m.annualized_volatility:.{decimals}f}", f"{m.sharpe:.{decimals}f}", "false"])
        for i, _reason in sorted(ranked.skipped):
            out.writerow([i, "", "", "", "true"])


def ranking_to_json(ranked: RankedComponents) -> str:
    rows = [{"pc_index": e.component, **e.metrics.as_dict(), "excluded": False} for e in ranked.entries]
    rows += [{"pc_index": i, "excluded": True, "reason": reason} for i, reason in sorted(ranked.skipped)]
    return json.dumps(rows, indent=2)
