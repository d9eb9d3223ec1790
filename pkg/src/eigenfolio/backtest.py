"""Out-of-sample backtests of fixed weight vectors and the equal-weight benchmark."""

from __future__ import annotations

import csv
import json
import math
import os
from dataclasses import dataclass
from datetime import date
from typing import Sequence

import numpy as np

from .errors import DataError, UndefinedSharpeError
from .market_data import ReturnTable
from .portfolio import (
    PERIODS_PER_YEAR,
    SIGNED,
    PerformanceMetrics,
    PortfolioWeights,
    _annualized_return,
    annualized_volatility,
    portfolio_return_series,
    sharpe_ratio,
)


@dataclass(frozen=True)
class BacktestReport:
    label: str
    weights: PortfolioWeights
    metrics: PerformanceMetrics
    daily: np.ndarray
    cumulative: np.ndarray
    dates: tuple[date, ...]
    sharpe_defined: bool = True

    @property
    def period(self) -> tuple[date, date]:
        return self.dates[0], self.dates[-1]

    def to_dict(self) -> dict:
        start, end = self.period
        return {
            "label": self.label,
            "period": {"start": start.isoformat(), "end": end.isoformat()},
            "weights": self.weights.as_dict(),
            "metrics": self.metrics.as_dict(),
            "sharpe_defined": self.sharpe_defined,
            "cumulative": [{"date": d.isoformat(), "value": float(v)}
                           for d, v in zip(self.dates, self.cumulative)],
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2)


@dataclass(frozen=True)
class ComparisonRow:
    label: str
    annualized_return: float
    annualized_volatility: float
    sharpe: float

    @classmethod
    def from_report(cls, report: BacktestReport) -> "ComparisonRow":
        m = report.metrics
        return cls(report.label, m.annualized_return, m.annualized_volatility, m.sharpe)

    def formatted(self) -> tuple[str, str, str, str]:
        sharpe = f"{self.sharpe:.2f}" if math.isfinite(self.sharpe) else "n/a"
        return (self.label, f"{100 * self.annualized_return:.2f}%",
                f"{100 * self.annualized_volatility:.2f}%", sharpe)


@dataclass(frozen=True)
class ComparisonTable:
    rows: tuple[ComparisonRow, ...]
    period: tuple[date, date]

    HEADER = ("Portfolio Type", "Annualized Return", "Annualized Volatility", "Sharpe Ratio")

    def __len__(self) -> int:
        return len(self.rows)

    def formatted(self) -> list[tuple[str, str, str, str]]:
        return [row.formatted() for row in self.rows]

    def to_text(self) -> str:
        cells = [self.HEADER, *self.formatted()]
        widths = [max(len(r[i]) for r in cells) for i in range(4)]
        lines = []
        for j, r in enumerate(cells):
            lines.append(" | ".join(c.ljust(w) if i == 0 else c.rjust(w)
                                    for i, (c, w) in enumerate(zip(r, widths))))
            if j == 0:
                lines.append("-+-".join("-" * w for w in widths))
        return "\n".join(lines)

    def write_csv(self, dest: str | os.PathLike) -> None:
        with open(dest, "w", encoding="utf-8", newline="") as fh:
            out = csv.writer(fh, lineterminator="\n")
            out.writerow(self.HEADER)
            out.writerows(self.formatted())


def equal_weight_benchmark(tickers: Sequence[str]) -> PortfolioWeights:
    tickers = tuple(tickers)
    n = len(tickers)
    if n < 1:
        raise ValueError("equal-weight benchmark needs at least one ticker")
    return PortfolioWeights(np.full(n, 1.0 / n), tickers, SIGNED, ("equal-weight", None))


def run_backtest(w: PortfolioWeights, test: ReturnTable, label: str,
                 periods_per_year: int = PERIODS_PER_YEAR,
                 risk_free_daily: float = 0.0) -> BacktestReport:
    """Hold ``w`` with daily rebalancing over ``test``.

    A flat portfolio series yields NaN Sharpe and ``sharpe_defined=False``
    rather than an exception, so a report can still be written.
    """
    if test.n_rows < 2:
        raise DataError("backtest needs at least two test rows")
    daily = portfolio_return_series(w, test)
    cumulative = np.cumprod(1.0 + daily) - 1.0
    try:
        metrics = sharpe_ratio(daily, periods_per_year, risk_free_daily)
        defined = True
    except UndefinedSharpeError:
        excess = daily - risk_free_daily if risk_free_daily else daily
        ret, wiped = _annualized_return(excess, periods_per_year)
        metrics = PerformanceMetrics(ret, annualized_volatility(excess, periods_per_year), math.nan, wiped)
        defined = False
    daily.setflags(write=False)
    cumulative.setflags(write=False)
    return BacktestReport(label, w, metrics, daily, cumulative, test.dates, defined)


def compare(reports: Sequence[BacktestReport]) -> ComparisonTable:
    """Tabulate reports in input order; all must cover the same test dates."""
    if len(reports) < 2:
        raise ValueError("comparison needs at least two reports")
    dates = reports[0].dates
    for r in reports[1:]:
        if r.dates != dates:
            raise DataError(f"report {r.label!r} covers a different test period")
    rows = tuple(ComparisonRow.from_report(r) for r in reports)
    return ComparisonTable(rows, (dates[0], dates[-1]))


def write_cumulative_csv(reports: Sequence[BacktestReport], dest: str | os.PathLike,
                         decimals: int = 6) -> None:
    """One row per test date, one cumulative-return column per report."""
    if not reports:
        raise ValueError("no reports to write")
    dates = reports[0].dates
    for r in reports[1:]:
        if r.dates != dates:
            raise DataError(f"report {r.label!r} covers a different test period")
    with open(dest, "w", encoding="utf-8", newline="") as fh:
        out = csv.writer(fh, lineterminator="\n")
        out.writerow(["date", *(r.label for r in reports)])
        for t, d in enumerate(dates):
            out.writerow([d.isoformat(), *(f"{r.cumulative[t]:.{decimals}f}" for r in reports)])
