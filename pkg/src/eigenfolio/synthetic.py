"""Synthetic price panels for tests, demos and benchmarks."""

from __future__ import annotations

from datetime import date, timedelta

import numpy as np

from .market_data import PriceTable


def business_days(start: date, count: int) -> tuple[date, ...]:
    out = []
    d = start
    while len(out) < count:
        if d.weekday() < 5:
            out.append(d)
        d += timedelta(days=1)
    return tuple(out)


def one_factor_returns(n_days: int, n_assets: int, rng: np.random.Generator,
                       factor_mean: float = 4e-4, factor_vol: float = 0.01,
                       noise_ratio: float = 0.2, loadings=None) -> np.ndarray:
    """Daily returns ``beta_i * f_t + eps_ti`` with ``Var(eps) = noise_ratio * Var(f)``."""
    if loadings is None:
        loadings = rng.uniform(0.6, 1.4, size=n_assets)
    loadings = np.asarray(loadings, dtype=np.float64)
    factor = factor_mean + factor_vol * rng.standard_normal(n_days)
    noise = np.sqrt(noise_ratio) * factor_vol * rng.standard_normal((n_days, n_assets))
    return factor[:, None] * loadings[None, :] + noise


def prices_from_returns(returns: np.ndarray, tickers=None, start: date = date(2020, 1, 2),
                        initial: float = 100.0) -> PriceTable:
    returns = np.asarray(returns, dtype=np.float64)
    n_days, n_assets = returns.shape
    if tickers is None:
        tickers = tuple(f"S{j:02d}" for j in range(n_assets))
    growth = np.vstack([np.ones(n_assets), np.cumprod(1.0 + returns, axis=0)])
    return PriceTable(business_days(start, n_days + 1), tickers, initial * growth)


def one_factor_prices(n_days: int = 750, n_assets: int = 10, seed: int = 0, **kwargs) -> PriceTable:
    rng = np.random.default_rng(seed)
    return prices_from_returns(one_factor_returns(n_days, n_assets, rng, **kwargs))
