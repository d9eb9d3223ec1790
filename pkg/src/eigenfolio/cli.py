"""Command-line entry point: ``eigenfolio {analyze,rank,backtest}``."""

from __future__ import annotations

import argparse
import csv
import dataclasses
import os
import sys
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

from . import backtest as bt
from . import eigensolver, market_data, portfolio, stats
from .errors import EigenfolioError, EnsembleError

NORMALIZATION_FLAGS = {"signed": portfolio.SIGNED, "abs": portfolio.ABSOLUTE}
MISSING_FLAGS = {"strict": market_data.STRICT, "ffill": market_data.FORWARD_FILL}
STRATEGIES = ("best-single", "ensemble", "equal-weight", "all")
LABELS = {"equal-weight": "Equal Weight", "best-single": "Single Component"}
N_WEIGHT_FILES = 5
TOP_K = 5


def default_output_dir() -> str:
    return os.environ.get("EIGENFOLIO_OUT", "eigenfolio-out")


@dataclass(frozen=True)
class RunConfig:
    input_path: str
    train_fraction: float = 0.8
    periods_per_year: int = 252
    normalization: str = "signed"
    missing_policy: str = "strict"
    n_max: int | None = None
    risk_free_daily: float = 0.0
    output_dir: str = "eigenfolio-out"

    def __post_init__(self):
        if not 0.0 < self.train_fraction < 1.0:
            raise ValueError(f"train_fraction must lie in (0, 1), got {self.train_fraction}")
        if self.periods_per_year < 1:
            raise ValueError("periods_per_year must be at least 1")
        if self.n_max is not None and self.n_max < 1:
            raise ValueError("n_max must be at least 1")
        if self.normalization not in NORMALIZATION_FLAGS:
            raise ValueError(f"normalization must be one of {sorted(NORMALIZATION_FLAGS)}")
        if self.missing_policy not in MISSING_FLAGS:
            raise ValueError(f"missing policy must be one of {sorted(MISSING_FLAGS)}")

    @property
    def weight_mode(self) -> str:
        return NORMALIZATION_FLAGS[self.normalization]

    def lines(self) -> list[str]:
        # output_dir is left out so identical runs into different folders match byte for byte.
        return [f"{f.name}={'' if getattr(self, f.name) is None else getattr(self, f.name)}"
                for f in dataclasses.fields(self) if f.name != "output_dir"]


_CONVERTERS = {
    "train_fraction": float,
    "periods_per_year": int,
    "n_max": lambda s: None if s.strip() == "" else int(s),
    "risk_free_daily": float,
}
_ALIASES = {"input": "input_path", "missing": "missing_policy", "out": "output_dir"}


def read_config_file(path: str | os.PathLike) -> dict:
    """Parse a flat ``key=value`` file; ``#`` starts a comment."""
    values = {}
    with open(path, encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ValueError(f"{path}:{lineno}: expected key=value")
            key, value = (s.strip() for s in line.split("=", 1))
            key = key.replace("-", "_")
            key = _ALIASES.get(key, key)
            values[key] = value
    return values


def resolve_config(args: argparse.Namespace) -> tuple[RunConfig, dict]:
    merged: dict = {}
    if args.config:
        merged.update(read_config_file(args.config))
    for name in ("input_path", "train_fraction", "periods_per_year", "normalization",
                 "missing_policy", "n_max", "risk_free_daily", "output_dir", "strategy"):
        value = getattr(args, name, None)
        if value is not None:
            merged[name] = value
    extra = {"strategy": merged.pop("strategy", None)}
    if "input_path" not in merged:
        raise ValueError("no input file given (use --input or input_path= in --config)")
    merged.setdefault("output_dir", default_output_dir())
    known = {f.name for f in dataclasses.fields(RunConfig)}
    unknown = set(merged) - known
    if unknown:
        raise ValueError(f"unknown config keys: {', '.join(sorted(unknown))}")
    for key, conv in _CONVERTERS.items():
        if isinstance(merged.get(key), str):
            merged[key] = conv(merged[key])
    return RunConfig(**merged), extra


@dataclass
class Pipeline:
    config: RunConfig
    prices: market_data.PriceTable
    returns: market_data.ReturnTable
    train: market_data.ReturnTable
    test: market_data.ReturnTable
    rho: stats.CorrelationMatrix
    decomp: eigensolver.EigenDecomposition

    @classmethod
    def run(cls, config: RunConfig) -> "Pipeline":
        prices = market_data.load_prices(config.input_path, MISSING_FLAGS[config.missing_policy])
        returns = market_data.compute_returns(prices)
        train, test = market_data.chronological_split(returns, config.train_fraction)
        rho = stats.correlation_matrix(stats.standardize(train))
        return cls(config, prices, returns, train, test, rho, eigensolver.eigh(rho))

    def rank(self) -> portfolio.RankedComponents:
        c = self.config
        return portfolio.rank_components(self.decomp, self.train, c.weight_mode,
                                         c.periods_per_year, c.risk_free_daily)


def _out_dir(config: RunConfig) -> Path:
    out = Path(config.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _write_run_config(out: Path, config: RunConfig, extra: dict) -> None:
    lines = config.lines() + [f"{k}={v}" for k, v in extra.items() if v is not None]
    (out / "run_config.txt").write_text("\n".join(lines) + "\n", encoding="utf-8")


def _write_positions(path: Path, w: portfolio.PortfolioWeights) -> tuple[list, list]:
    longs, shorts = portfolio.top_positions(w, TOP_K)
    with open(path, "w", encoding="utf-8", newline="") as fh:
        out = csv.writer(fh, lineterminator="\n")
        out.writerow(["side", "ticker", "weight_pct"])
        for side, rows in (("long", longs), ("short", shorts)):
            for ticker, weight in rows:
                out.writerow([side, ticker, f"{100 * weight:.2f}"])
    return longs, shorts


def _print_positions(title: str, longs, shorts) -> None:
    print(title)
    for ticker, weight in [*longs, *shorts]:
        print(f"  {ticker:<8} {100 * weight:>10.2f}%")


def cmd_analyze(config: RunConfig, extra: dict | None = None) -> int:
    pipe = Pipeline.run(config)
    out = _out_dir(config)
    stats.write_correlation_csv(pipe.rho, out / "correlation.csv")
    eigensolver.write_eigen_csv(pipe.decomp, out / "eigen.csv")
    for i in range(min(N_WEIGHT_FILES, pipe.decomp.n)):
        q = pipe.decomp.vector(i)
        try:
            w = portfolio.normalize_eigenvector(q, config.weight_mode, i, pipe.decomp.tickers).weights
        except EigenfolioError:
            w = None
        with open(out / f"weights_pc{i + 1}.csv", "w", encoding="utf-8", newline="") as fh:
            rows = csv.writer(fh, lineterminator="\n")
            rows.writerow(["ticker", "eigenvector", "weight"])
            for j, ticker in enumerate(pipe.decomp.tickers):
                rows.writerow([ticker, f"{q[j]:.6f}", "" if w is None else f"{w[j]:.6f}"])
    _write_run_config(out, config, extra or {})
    ratio = pipe.decomp.explained_variance_ratio()
    cev = eigensolver.cumulative_explained_variance_curve(pipe.decomp)
    print(f"{pipe.decomp.n} assets, {pipe.train.n_rows} training days; "
          f"PC0 explains {100 * ratio[0]:.2f}%, top {min(10, pipe.decomp.n)} explain "
          f"{100 * cev[min(10, pipe.decomp.n) - 1]:.2f}%")
    return 0


def cmd_rank(config: RunConfig, extra: dict | None = None) -> int:
    pipe = Pipeline.run(config)
    ranked = pipe.rank()
    out = _out_dir(config)
    portfolio.write_ranking_csv(ranked, out / "ranking.csv")
    (out / "ranking.json").write_text(portfolio.ranking_to_json(ranked) + "\n", encoding="utf-8")
    best = ranked.entries[0]
    longs, shorts = _write_positions(out / "top_positions_best-single.csv", best.weights)
    _write_run_config(out, config, extra or {})
    m = best.metrics
    print(f"best component {best.component}: return {m.annualized_return:.6f}, "
          f"volatility {m.annualized_volatility:.6f}, Sharpe {m.sharpe:.6f}")
    if ranked.skipped:
        print("excluded: " + ", ".join(f"{i} ({why})" for i, why in ranked.skipped))
    _print_positions("top positions:", longs, shorts)
    return 0


def _ensemble(pipe: Pipeline, ranked: portfolio.RankedComponents, out: Path):
    c = pipe.config
    positive = ranked.positive_count()
    if positive == 0:
        raise EnsembleError("cannot build an ensemble: no component has a positive in-sample Sharpe ratio")
    n_max = min(c.n_max or pipe.decomp.n, positive)
    best_n, curve = portfolio.sweep_ensemble_size(ranked, pipe.train, n_max, c.periods_per_year,
                                                  c.risk_free_daily)
    with open(out / "ensemble_curve.csv", "w", encoding="utf-8", newline="") as fh:
        rows = csv.writer(fh, lineterminator="\n")
        rows.writerow(["n", "sharpe_ratio"])
        for n, s in curve:
            rows.writerow([n, f"{s:.6f}"])
    return portfolio.ensemble_weights(ranked, best_n)


def cmd_backtest(config: RunConfig, strategy: str = "all", extra: dict | None = None) -> int:
    if strategy not in STRATEGIES:
        raise ValueError(f"strategy must be one of {STRATEGIES}")
    pipe = Pipeline.run(config)
    out = _out_dir(config)
    wanted = ["equal-weight", "best-single", "ensemble"] if strategy == "all" else [strategy]
    ranked = pipe.rank() if ("best-single" in wanted or "ensemble" in wanted) else None
    reports = []
    for name in wanted:
        if name == "equal-weight":
            w, label = bt.equal_weight_benchmark(pipe.train.tickers), LABELS[name]
        elif name == "best-single":
            w, label = ranked.entries[0].weights, LABELS[name]
        else:
            spec = _ensemble(pipe, ranked, out)
            w, label = spec.combined, f"Best Ensemble (N={spec.n})"
        report = bt.run_backtest(w, pipe.test, label, config.periods_per_year, config.risk_free_daily)
        (out / f"report_{name}.json").write_text(report.to_json() + "\n", encoding="utf-8")
        if name != "equal-weight":
            _write_positions(out / f"top_positions_{name}.csv", w)
        reports.append(report)
    bt.write_cumulative_csv(reports, out / "cumulative.csv")
    if len(reports) > 1:
        table = bt.compare(reports)
        table.write_csv(out / "comparison.csv")
        print(table.to_text())
    else:
        r = reports[0]
        print(bt.ComparisonTable((bt.ComparisonRow.from_report(r),), r.period).to_text())
    _write_run_config(out, config, {**(extra or {}), "strategy": strategy})
    return 0


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--input", dest="input_path", help="price CSV: date column then one column per ticker")
    common.add_argument("--config", help="flat key=value file; command-line flags override it")
    common.add_argument("--train-fraction", type=float, help="leading share of return rows used for training (default 0.8)")
    common.add_argument("--periods-per-year", type=int, help="annualisation factor (default 252)")
    common.add_argument("--normalization", choices=sorted(NORMALIZATION_FLAGS), help="eigenvector weight scaling (default signed)")
    common.add_argument("--missing", dest="missing_policy", choices=sorted(MISSING_FLAGS), help="empty-cell policy (default strict)")
    common.add_argument("--n-max", type=int, help="largest ensemble size tried (default: number of assets)")
    common.add_argument("--risk-free-daily", type=float, help="daily risk-free rate subtracted before compounding (default 0)")
    common.add_argument("--out", dest="output_dir", help="output directory (default $EIGENFOLIO_OUT or ./eigenfolio-out)")

    parser = argparse.ArgumentParser(prog="eigenfolio", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("analyze", parents=[common], help="correlation matrix, eigenvalues, leading weights")
    sub.add_parser("rank", parents=[common], help="rank eigen-portfolios by in-sample Sharpe")
    p = sub.add_parser("backtest", parents=[common], help="out-of-sample backtest and comparison")
    p.add_argument("--strategy", choices=STRATEGIES, help="which portfolio(s) to test (default all)")
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        config, extra = resolve_config(args)
        if args.command == "analyze":
            return cmd_analyze(config, extra)
        if args.command == "rank":
            return cmd_rank(config, extra)
        strategy = extra.pop("strategy", None) or "all"
        return cmd_backtest(config, strategy, extra)
    except (EigenfolioError, ValueError, OSError) as exc:
        print(f"eigenfolio: error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
