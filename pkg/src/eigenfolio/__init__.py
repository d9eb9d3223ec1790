"""Eigen-portfolios built from the principal components of asset return correlations."""

from ._kernels import active_backend
from .backtest import (
    BacktestReport,
    ComparisonTable,
    compare,
    equal_weight_benchmark,
    run_backtest,
)
from .eigensolver import (
    EigenDecomposition,
    FactorScores,
    cumulative_explained_variance,
    eigh,
    project,
    reconstruct,
)
from .errors import EigenfolioError
from .market_data import PriceTable, ReturnTable, chronological_split, compute_returns, load_prices
from .portfolio import (
    ABSOLUTE,
    SIGNED,
    EnsembleSpec,
    PerformanceMetrics,
    PortfolioWeights,
    RankedComponents,
    annualized_return,
    annualized_volatility,
    ensemble_weights,
    normalize_eigenvector,
    portfolio_return_series,
    rank_components,
    sharpe_ratio,
    sweep_ensemble_size,
    top_positions,
)
from .stats import CorrelationMatrix, StandardizedReturns, correlation_matrix, standardize

__version__ = "0.1.0"
