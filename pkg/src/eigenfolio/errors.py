"""Exception hierarchy for eigenfolio."""


class EigenfolioError(Exception):
    """Base class for every error raised by this package."""


class DataError(EigenfolioError, ValueError):
    """Malformed or inconsistent input data."""


class MissingValueError(DataError):
    pass


class TickerMismatchError(DataError):
    pass


class ZeroVarianceError(DataError):
    def __init__(self, ticker: str):
        super().__init__(f"zero variance in return column {ticker!r}")
        self.ticker = ticker


class ConvergenceError(EigenfolioError):
    def __init__(self, sweeps: int, residual: float):
        super().__init__(
            f"Jacobi iteration did not converge after {sweeps} sweeps "
            f"(off-diagonal residual {residual:.3e})"
        )
        self.sweeps = sweeps
        self.residual = residual


class DegenerateNormalizationError(EigenfolioError):
    def __init__(self, component: int | None, denominator: float):
        name = "eigenvector" if component is None else f"component {component}"
        super().__init__(
            f"degenerate normalization for {name}: weight sum {denominator:.3e}"
        )
        self.component = component
        self.denominator = denominator


class UndefinedSharpeError(EigenfolioError):
    def __init__(self, msg: str = "undefined Sharpe: zero volatility"):
        super().__init__(msg)


class EnsembleError(EigenfolioError):
    pass
