import math
from datetime import date

import numpy as np
import pytest

from eigenfolio.market_data import ReturnTable, compute_returns, write_prices
from eigenfolio.synthetic import business_days, one_factor_returns, prices_from_returns


# ---------------------------------------------------------------------------
# Brute-force oracles. Pure Python loops, deliberately independent of numpy.
# ---------------------------------------------------------------------------

def oracle_growth(series):
    g = 1.0
    for r in series:
        g *= 1.0 + float(r)
    return g


def oracle_annualized_return(series, periods=252):
    g = oracle_growth(series)
    if g <= 1e-12:
        return -1.0
    return g ** (periods / len(series)) - 1.0


def oracle_std(series):
    xs = [float(x) for x in series]
    mean = sum(xs) / len(xs)
    return math.sqrt(sum((x - mean) ** 2 for x in xs) / (len(xs) - 1))


def oracle_volatility(series, periods=252):
    return oracle_std(series) * math.sqrt(periods)


def oracle_sharpe(series, periods=252):
    return oracle_annualized_return(series, periods) / oracle_volatility(series, periods)


def oracle_pearson(x, y):
    x = [float(v) for v in x]
    y = [float(v) for v in y]
    mx = sum(x) / len(x)
    my = sum(y) / len(y)
    sxy = sum((a - mx) * (b - my) for a, b in zip(x, y))
    sxx = sum((a - mx) ** 2 for a in x)
    syy = sum((b - my) ** 2 for b in y)
    return sxy / math.sqrt(sxx * syy)


def oracle_portfolio_series(weights, rows):
    return [sum(float(w) * float(r) for w, r in zip(weights, row)) for row in rows]


# ---------------------------------------------------------------------------
# Fixture builders
# ---------------------------------------------------------------------------

def random_correlation(rng, n, rows=None):
    """Sample correlation matrix of a random panel with mixed factor structure."""
    rows = rows or 3 * n
    k = rng.integers(1, 4)
    loadings = rng.normal(size=(n, k))
    x = rng.normal(size=(rows, k)) @ loadings.T + rng.normal(size=(rows, n)) * rng.uniform(0.2, 2.0)
    return np.corrcoef(x, rowvar=False)


def return_table(returns, tickers=None):
    returns = np.asarray(returns, dtype=np.float64)
    if tickers is None:
        tickers = tuple(f"S{j:02d}" for j in range(returns.shape[1]))
    return ReturnTable(business_days(date(2021, 1, 4), returns.shape[0]), tickers, returns)


def planted_two_factor(seed, n=8, days=1000):
    """Market factor with strong drift plus a weaker long/short factor with drift."""
    rng = np.random.default_rng(seed)
    r = one_factor_returns(days, n, rng, factor_mean=2e-3)
    tilt = np.where(np.arange(n) < n // 2, 1.0, -1.0) * 0.8 + 0.3
    second = 2e-3 + 0.006 * rng.standard_normal(days)
    return compute_returns(prices_from_returns(r + second[:, None] * tilt[None, :]))


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


@pytest.fixture
def one_factor_panel():
    rng = np.random.default_rng(7)
    r = one_factor_returns(1000, 8, rng, factor_mean=2e-3)
    return compute_returns(prices_from_returns(r))


@pytest.fixture
def price_csv(tmp_path):
    rng = np.random.default_rng(11)
    r = one_factor_returns(500, 6, rng, factor_mean=1e-3)
    path = tmp_path / "prices.csv"
    write_prices(prices_from_returns(r, tickers=("AAA", "BBB", "CCC", "DDD", "EEE", "FFF")), path)
    return path
