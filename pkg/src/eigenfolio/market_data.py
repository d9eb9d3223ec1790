"""Price panel ingestion, simple returns and the chronological split."""

from __future__ import annotations

import csv
import io
import math
import os
from dataclasses import dataclass
from datetime import date
from typing import BinaryIO, TextIO, Union

import numpy as np

from .errors import DataError, MissingValueError

STRICT = "strict"
FORWARD_FILL = "forward-fill"
MISSING_POLICIES = (STRICT, FORWARD_FILL)

Source = Union[str, os.PathLike, bytes, BinaryIO, TextIO]


def _check_tickers(tickers: tuple[str, ...]) -> None:
    if not tickers:
        raise DataError("at least one ticker is required")
    if any(not t for t in tickers):
        raise DataError("empty ticker name")
    if len(set(tickers)) != len(tickers):
        raise DataError("duplicate ticker names")


def _check_dates(dates: tuple[date, ...]) -> None:
    for prev, cur in zip(dates, dates[1:]):
        if cur == prev:
            raise DataError(f"duplicate date {cur.isoformat()}")
        if cur < prev:
            raise DataError(f"dates not increasing at {cur.isoformat()}")


@dataclass(frozen=True)
class PriceTable:
    """Dated T x N panel of strictly positive prices."""

    dates: tuple[date, ...]
    tickers: tuple[str, ...]
    prices: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "dates", tuple(self.dates))
        object.__setattr__(self, "tickers", tuple(self.tickers))
        prices = np.array(self.prices, dtype=np.float64)
        prices.setflags(write=False)
        object.__setattr__(self, "prices", prices)
        _check_tickers(self.tickers)
        _check_dates(self.dates)
        if prices.shape != (len(self.dates), len(self.tickers)):
            raise DataError(
                f"price matrix shape {prices.shape} does not match "
                f"{len(self.dates)} dates x {len(self.tickers)} tickers"
            )
        if not np.all(np.isfinite(prices)):
            raise DataError("non-finite price")
        if np.any(prices <= 0):
            t, i = np.argwhere(prices <= 0)[0]
            raise DataError(
                f"non-positive price {prices[t, i]!r} for {self.tickers[i]} "
                f"on {self.dates[t].isoformat()}"
            )

    @property
    def shape(self) -> tuple[int, int]:
        return self.prices.shape


@dataclass(frozen=True)
class ReturnTable:
    """(T-1) x N panel of simple returns, each dated by the later price.

    Only finiteness is enforced here; returns derived from positive prices
    are additionally > -1, which :func:`compute_returns` checks.
    """

    dates: tuple[date, ...]
    tickers: tuple[str, ...]
    returns: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "dates", tuple(self.dates))
        object.__setattr__(self, "tickers", tuple(self.tickers))
        returns = np.array(self.returns, dtype=np.float64)
        if returns.ndim != 2:
            raise DataError("returns must be a 2-d matrix")
        returns.setflags(write=False)
        object.__setattr__(self, "returns", returns)
        _check_tickers(self.tickers)
        _check_dates(self.dates)
        if returns.shape != (len(self.dates), len(self.tickers)):
            raise DataError(
                f"return matrix shape {returns.shape} does not match "
                f"{len(self.dates)} dates x {len(self.tickers)} tickers"
            )
        if not np.all(np.isfinite(returns)):
            raise DataError("non-finite return")

    @property
    def n_rows(self) -> int:
        return self.returns.shape[0]

    def column(self, ticker: str) -> np.ndarray:
        return self.returns[:, self.tickers.index(ticker)]


def _read_text(source: Source) -> str:
    if isinstance(source, (str, os.PathLike)):
        try:
            with open(source, "rb") as fh:
                raw = fh.read()
        except OSError as exc:
            raise DataError(f"cannot read {os.fspath(source)!s}: {exc.strerror}") from exc
    elif isinstance(source, bytes):
        raw = source
    else:
        raw = source.read()
    if isinstance(raw, bytes):
        try:
            return raw.decode("utf-8-sig")
        except UnicodeDecodeError as exc:
            raise DataError(f"input is not valid UTF-8: {exc}") from exc
    return raw


def _parse_cell(cell: str, ticker: str, day: date) -> float:
    try:
        value = float(cell)
    except ValueError:
        raise DataError(f"non-numeric value {cell!r} for {ticker} on {day.isoformat()}") from None
    if not math.isfinite(value):
        raise DataError(f"non-finite value {cell!r} for {ticker} on {day.isoformat()}")
    if value <= 0:
        raise DataError(f"non-positive price {cell!r} for {ticker} on {day.isoformat()}")
    return value


def load_prices(source: Source, missing: str = STRICT) -> PriceTable:
    """Parse a ``date,TICKER,...`` CSV into a :class:`PriceTable`.

    Parameters
    ----------
    source:
        Path, raw bytes, or an open binary/text stream holding UTF-8 CSV text.
    missing:
        ``"strict"`` rejects any empty cell. ``"forward-fill"`` carries the
        last observation forward and drops leading rows until every column
        has been observed at least once.
    """
    if missing not in MISSING_POLICIES:
        raise ValueError(f"unknown missing-data policy {missing!r}")
    text = _read_text(source)
    rows = [row for row in csv.reader(io.StringIO(text, newline="")) if any(c.strip() for c in row)]
    if not rows:
        raise DataError("empty CSV input")

    header = [h.strip() for h in rows[0]]
    if len(header) < 2 or header[0] != "date":
        raise DataError("malformed header: expected 'date' followed by ticker columns")
    tickers = tuple(header[1:])
    if any(not t for t in tickers) or len(set(tickers)) != len(tickers):
        raise DataError("malformed header: ticker names must be unique and nonempty")

    dates: list[date] = []
    values: list[list[float]] = []
    for lineno, row in enumerate(rows[1:], start=2):
        if len(row) != len(header):
            raise DataError(f"line {lineno}: expected {len(header)} fields, got {len(row)}")
        try:
            day = date.fromisoformat(row[0].strip())
        except ValueError:
            raise DataError(f"line {lineno}: unparseable date {row[0]!r}") from None
        if dates and day == dates[-1]:
            raise DataError(f"duplicate date {day.isoformat()}")
        if dates and day < dates[-1]:
            raise DataError(f"non-increasing dates at {day.isoformat()}")
        parsed = []
        for ticker, cell in zip(tickers, row[1:]):
            cell = cell.strip()
            if cell == "":
                if missing == STRICT:
                    raise MissingValueError(f"missing value for {ticker} on {day.isoformat()}")
                parsed.append(math.nan)
            else:
                parsed.append(_parse_cell(cell, ticker, day))
        dates.append(day)
        values.append(parsed)

    if not dates:
        raise DataError("CSV has a header but no data rows")
    prices = np.array(values, dtype=np.float64).reshape(len(dates), len(tickers))

    if missing == FORWARD_FILL:
        observed = ~np.isnan(prices)
        for i, ticker in enumerate(tickers):
            if not observed[:, i].any():
                raise DataError(f"column {ticker} has zero observations")
        start = int(max(np.argmax(observed[:, i]) for i in range(len(tickers))))
        for t in range(1, len(dates)):
            gap = np.isnan(prices[t])
            prices[t, gap] = prices[t - 1, gap]
        prices = prices[start:]
        dates = dates[start:]

    return PriceTable(tuple(dates), tickers, prices)


def write_prices(table: PriceTable, dest: str | os.PathLike | TextIO) -> None:
    """Write a price panel in the same CSV layout :func:`load_prices` reads.

    Values are written with ``repr`` so a strict reload is value-identical.
    """
    def _emit(fh):
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["date", *table.tickers])
        for day, row in zip(table.dates, table.prices):
            writer.writerow([day.isoformat(), *(repr(float(x)) for x in row)])

    if isinstance(dest, (str, os.PathLike)):
        with open(dest, "w", encoding="utf-8", newline="") as fh:
            _emit(fh)
    else:
        _emit(dest)


def compute_returns(prices: PriceTable) -> ReturnTable:
    p = prices.prices
    if p.shape[0] < 2:
        raise DataError("at least two price rows are needed to form a return")
    returns = (p[1:] - p[:-1]) / p[:-1]
    if np.any(returns <= -1.0):
        raise DataError("return at or below -100% from positive prices")
    return ReturnTable(prices.dates[1:], prices.tickers, returns)


def chronological_split(returns: ReturnTable, train_fraction: float = 0.8) -> tuple[ReturnTable, ReturnTable]:
    """Split rows in time order: the first ``floor(rows * fraction)`` train, the rest test."""
    if not 0.0 < train_fraction < 1.0:
        raise ValueError(f"train_fraction must lie in (0, 1), got {train_fraction}")
    rows = returns.n_rows
    n_train = math.floor(rows * train_fraction)
    if n_train < 1:
        raise DataError(f"train fraction {train_fraction} leaves an empty training set for {rows} rows")
    if n_train >= rows:
        raise DataError(f"train fraction {train_fraction} leaves an empty test set for {rows} rows")
    train = ReturnTable(returns.dates[:n_train], returns.tickers, returns.returns[:n_train])
    test = ReturnTable(returns.dates[n_train:], returns.tickers, returns.returns[n_train:])
    return train, test
