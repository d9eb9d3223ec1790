import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from eigenfolio.eigensolver import eigh, project
from eigenfolio.errors import DegenerateNormalizationError, EnsembleError, TickerMismatchError, UndefinedSharpeError
from eigenfolio.portfolio import (
    ABSOLUTE,
    SIGNED,
    PerformanceMetrics,
    PortfolioWeights,
    RankedComponents,
    RankedEntry,
    annualized_return,
    annualized_volatility,
    eigenportfolio_variance,
    ensemble_weights,
    metrics_from_ratio,
    normalize_eigenvector,
    portfolio_return_series,
    rank_components,
    ranking_to_json,
    sharpe_ratio,
    sweep_ensemble_size,
    top_positions,
    write_ranking_csv,
)
from eigenfolio.stats import correlation_matrix, standardize

from conftest import (
    oracle_annualized_return,
    oracle_portfolio_series,
    oracle_sharpe,
    oracle_std,
    oracle_volatility,
    planted_two_factor,
    return_table,
)


# --- normalisation --------------------------------------------------------

@pytest.mark.parametrize("q, mode, expected", [
    ([0.5, 0.5], SIGNED, [0.5, 0.5]),
    ([3.0, -1.0], SIGNED, [1.5, -0.5]),
    ([3.0, -1.0], ABSOLUTE, [0.75, -0.25]),
])
def test_normalize_examples(q, mode, expected):
    w = normalize_eigenvector(q, mode)
    np.testing.assert_allclose(w.weights, expected, atol=1e-15)
    assert w.normalization == mode


def test_normalize_degenerate_names_component():
    with pytest.raises(DegenerateNormalizationError, match="component 7"):
        normalize_eigenvector([1.0, -1.0, 5e-7], SIGNED, component=7)
    with pytest.raises(DegenerateNormalizationError):
        normalize_eigenvector([0.0, 0.0], ABSOLUTE)


@settings(max_examples=80, deadline=None)
@given(st.lists(st.floats(-1, 1), min_size=2, max_size=30))
def test_normalized_sums(q):
    q = np.array(q)
    if abs(q.sum()) > 1e-3:
        assert normalize_eigenvector(q, SIGNED).weights.sum() == pytest.approx(1.0, abs=1e-10)
    if np.abs(q).sum() > 0:
        assert np.abs(normalize_eigenvector(q, ABSOLUTE).weights).sum() == pytest.approx(1.0, abs=1e-10)


def test_weights_type_validates():
    with pytest.raises(ValueError):
        PortfolioWeights([0.5, 0.6], ("A", "B"))
    with pytest.raises(ValueError):
        PortfolioWeights([0.5, math.nan], ("A", "B"))
    with pytest.raises(ValueError):
        PortfolioWeights([0.5, -0.6], ("A", "B"), ABSOLUTE)


# --- portfolio series ---------------------------------------------------

def test_series_examples():
    rt = return_table([[0.02, 0.00], [0.00, 0.02]], tickers=("A", "B"))
    w = PortfolioWeights([0.5, 0.5], ("A", "B"))
    np.testing.assert_allclose(portfolio_return_series(w, rt), [0.01, 0.01])

    rng = np.random.default_rng(0)
    x = rng.normal(0, 0.01, size=20)
    same = return_table(np.column_stack([x, x, x]))
    ew = PortfolioWeights(np.full(3, 1 / 3), same.tickers)
    np.testing.assert_allclose(portfolio_return_series(ew, same), x, atol=1e-16)

    panel = return_table(rng.normal(0, 0.01, size=(20, 4)))
    single = PortfolioWeights([1.0, 0, 0, 0], panel.tickers)
    np.testing.assert_array_equal(portfolio_return_series(single, panel), panel.returns[:, 0])


def test_series_ticker_mismatch():
    rt = return_table([[0.01, 0.02]], tickers=("A", "B"))
    with pytest.raises(TickerMismatchError):
        portfolio_return_series(PortfolioWeights([0.5, 0.5], ("A", "C")), rt)


# --- annualisation and Sharpe -------------------------------------------

def test_annualized_return_examples():
    assert annualized_return(np.zeros(30)) == 0.0
    assert annualized_return(np.full(252, 0.001)) == pytest.approx(1.001**252 - 1, rel=1e-12)
    assert annualized_return(np.full(252, 0.001)) == pytest.approx(0.28642, abs=5e-5)
    assert annualized_return([0.1, -1.0, 0.2]) == -1.0
    with pytest.raises(ValueError):
        annualized_return([])


def test_total_loss_flag():
    m = sharpe_ratio([0.05, -1.0, 0.03, 0.01])
    assert m.annualized_return == -1.0 and m.total_loss_flag
    assert not sharpe_ratio([0.05, -0.02, 0.03]).total_loss_flag


def test_leveraged_wipeout_counts_as_total_loss():
    # two sub -100% days would multiply back to a positive product
    m = sharpe_ratio([-1.5, -1.5, 0.01])
    assert m.annualized_return == -1.0 and m.total_loss_flag


def test_volatility_examples():
    assert annualized_volatility(np.full(10, 0.003)) == 0.0
    alt = np.array([0.01, -0.01] * 6)
    assert annualized_volatility(alt) == pytest.approx(oracle_std(alt) * math.sqrt(252), rel=1e-14)
    with pytest.raises(ValueError):
        annualized_volatility([0.1])


@settings(max_examples=60, deadline=None)
@given(seed=st.integers(0, 10_000), c=st.floats(1e-3, 1e3))
def test_volatility_homogeneous(seed, c):
    x = np.random.default_rng(seed).normal(0, 0.01, size=50)
    assert annualized_volatility(c * x) == pytest.approx(c * annualized_volatility(x), rel=1e-13)


@pytest.mark.parametrize("ret, vol, sharpe", [
    (2.434612, 1.576678, 1.544140),
    (0.176736, 0.142872, 1.237029),
])
def test_sharpe_from_published_rows(ret, vol, sharpe):
    assert metrics_from_ratio(ret, vol).sharpe == pytest.approx(sharpe, abs=1e-4)


def test_sharpe_zero_volatility_is_an_error():
    with pytest.raises(UndefinedSharpeError, match="undefined Sharpe"):
        sharpe_ratio(np.full(20, 0.001))


def test_sharpe_sign_follows_mean():
    rng = np.random.default_rng(9)
    for drift in (2e-4, -2e-4):
        x = drift + 1e-4 * rng.standard_normal(500)
        m = sharpe_ratio(x)
        assert np.sign(m.sharpe) == np.sign(drift)
        assert m.sharpe == pytest.approx(oracle_sharpe(x), rel=1e-12)


def test_sharpe_matches_oracle(rng):
    for _ in range(20):
        x = rng.normal(5e-4, 0.012, size=rng.integers(20, 600))
        m = sharpe_ratio(x)
        assert m.annualized_return == pytest.approx(oracle_annualized_return(x), rel=1e-12)
        assert m.annualized_volatility == pytest.approx(oracle_volatility(x), rel=1e-12)
        assert m.sharpe == pytest.approx(m.annualized_return / m.annualized_volatility, rel=1e-15)


def test_risk_free_rate_is_subtracted_before_compounding(rng):
    x = rng.normal(8e-4, 0.01, size=300)
    rf = 1e-4
    m = sharpe_ratio(x, risk_free_daily=rf)
    assert m.sharpe == pytest.approx(oracle_sharpe(x - rf), rel=1e-12)
    assert m.sharpe < sharpe_ratio(x).sharpe


def test_periods_per_year_parameter(rng):
    x = rng.normal(1e-3, 0.01, size=100)
    m = sharpe_ratio(x, periods_per_year=52)
    assert m.sharpe == pytest.approx(oracle_sharpe(x, 52), rel=1e-12)


# --- variance remark --------------------------------------------------------

def test_normalized_eigenportfolio_variance_is_rescaled(rng):
    x = rng.normal(size=(300, 5)) @ rng.normal(size=(5, 5)) * 0.01
    std = standardize(return_table(x))
    d = eigh(correlation_matrix(std))
    scores = project(std, d, d.n).scores
    for i in range(d.n):
        assert scores[:, i].var(ddof=1) == pytest.approx(d.eigenvalues[i], rel=1e-8)
        total = d.vector(i).sum()
        if abs(total) > 1e-6:
            pi = d.vector(i) / total
            var_pi = (std.matrix @ pi).var(ddof=1)
            assert eigenportfolio_variance(d, i) == pytest.approx(var_pi, rel=1e-8)


# --- ranking --------------------------------------------------------------

def test_rank_planted_market_component_first(one_factor_panel):
    d = eigh(correlation_matrix(standardize(one_factor_panel)))
    ranked = rank_components(d, one_factor_panel)
    assert ranked.entries[0].component == 0
    # oracle: recompute every score from scratch
    for e in ranked.entries:
        w = d.vector(e.component) / d.vector(e.component).sum()
        series = oracle_portfolio_series(w, one_factor_panel.returns)
        assert e.metrics.sharpe == pytest.approx(oracle_sharpe(series), rel=1e-12, abs=1e-14)
        assert e.metrics.annualized_return == pytest.approx(oracle_annualized_return(series), rel=1e-12, abs=1e-14)


def test_rank_is_sorted_and_unique(one_factor_panel):
    d = eigh(correlation_matrix(standardize(one_factor_panel)))
    for mode in (SIGNED, ABSOLUTE):
        ranked = rank_components(d, one_factor_panel, mode)
        s = ranked.sharpes
        assert np.all(s[:-1] >= s[1:])
        idx = [e.component for e in ranked.entries] + [i for i, _ in ranked.skipped]
        assert sorted(idx) == list(range(d.n))


def test_rank_permutation_invariant(one_factor_panel):
    rt = one_factor_panel
    perm = np.random.default_rng(3).permutation(len(rt.tickers))
    permuted = return_table(rt.returns[:, perm], tickers=tuple(rt.tickers[i] for i in perm))
    a = rank_components(eigh(correlation_matrix(standardize(rt))), rt)
    b = rank_components(eigh(correlation_matrix(standardize(permuted))), permuted)
    np.testing.assert_allclose(a.sharpes, b.sharpes, rtol=1e-9, atol=1e-12)


def test_rank_skips_degenerate_components():
    # two perfectly anticorrelated-ish assets: second eigenvector sums to zero
    rng = np.random.default_rng(0)
    base = rng.normal(0, 0.01, size=200)
    rt = return_table(np.column_stack([base + 0.001, base + 0.001 + rng.normal(0, 0.004, 200)]))
    d = eigh(correlation_matrix(standardize(rt)))
    ranked = rank_components(d, rt)
    assert ranked.skipped == ((1, "degenerate normalization"),)
    assert [e.component for e in ranked.entries] == [0]


def test_rank_errors(one_factor_panel):
    d = eigh(correlation_matrix(standardize(one_factor_panel)))
    other = return_table(one_factor_panel.returns, tickers=tuple("abcdefgh"))
    with pytest.raises(TickerMismatchError):
        rank_components(d, other)


# --- ensemble -------------------------------------------------------------

def _ranked_from_sharpes(sharpes, n_assets=4):
    tickers = tuple(f"A{i}" for i in range(n_assets))
    rng = np.random.default_rng(len(sharpes))
    entries = []
    for i, s in enumerate(sharpes):
        q = rng.normal(size=n_assets) + 0.5
        entries.append(RankedEntry(i, normalize_eigenvector(q, SIGNED, i, tickers),
                                   PerformanceMetrics(s * 0.2, 0.2, s)))
    return RankedComponents(tuple(entries), (), n_assets)


def test_ensemble_coefficients_from_published_sharpes():
    spec = ensemble_weights(_ranked_from_sharpes([1.544140, 1.237029, 0.505717, 0.347156]), 4)
    np.testing.assert_allclose(spec.coefficients, [0.42491, 0.34040, 0.13916, 0.09553], atol=1e-4)
    assert spec.coefficients.sum() == pytest.approx(1.0, abs=1e-12)


def test_ensemble_singleton():
    ranked = _ranked_from_sharpes([2.0, 1.0])
    spec = ensemble_weights(ranked, 1)
    np.testing.assert_array_equal(spec.coefficients, [1.0])
    np.testing.assert_array_equal(spec.combined.weights, ranked.entries[0].weights.weights)
    assert spec.member_indices == (0,)


def test_ensemble_rejects_non_positive_sharpe():
    ranked = _ranked_from_sharpes([1.0, 0.5, -0.1])
    ensemble_weights(ranked, 2)
    with pytest.raises(EnsembleError, match="non-positive Sharpe"):
        ensemble_weights(ranked, 3)
    with pytest.raises(ValueError):
        ensemble_weights(ranked, 4)


@settings(max_examples=50, deadline=None)
@given(st.lists(st.floats(0.01, 10), min_size=1, max_size=12))
def test_ensemble_conservation(sharpes):
    ranked = _ranked_from_sharpes(sorted(sharpes, reverse=True), n_assets=6)
    for n in range(1, len(sharpes) + 1):
        spec = ensemble_weights(ranked, n)
        assert spec.coefficients.sum() == pytest.approx(1.0, abs=1e-12)
        assert np.all(spec.coefficients > 0)
        assert spec.combined.weights.sum() == pytest.approx(1.0, abs=1e-10)


def test_ensemble_abs_mode_stays_abs_normalized(one_factor_panel):
    d = eigh(correlation_matrix(standardize(one_factor_panel)))
    ranked = rank_components(d, one_factor_panel, ABSOLUTE)
    n = ranked.positive_count()
    spec = ensemble_weights(ranked, n)
    assert np.abs(spec.combined.weights).sum() == pytest.approx(1.0, abs=1e-12)


# --- sweep ---------------------------------------------------------------

def _oracle_curve(ranked, train, n_max):
    curve = []
    for n in range(1, n_max + 1):
        top = ranked.entries[:n]
        total = sum(e.metrics.sharpe for e in top)
        w = [sum(e.metrics.sharpe / total * e.weights.weights[j] for e in top)
             for j in range(len(train.tickers))]
        curve.append(oracle_sharpe(oracle_portfolio_series(w, train.returns)))
    return curve


def test_sweep_where_single_component_dominates():
    rng = np.random.default_rng(17)
    steady = 1e-3 + 2e-4 * rng.standard_normal(500)
    noisy = 2e-3 + 5e-2 * rng.standard_normal(500)
    train = return_table(np.column_stack([steady, noisy]), tickers=("S", "N"))
    entries = []
    for i, col in enumerate(((1.0, 0.0), (0.0, 1.0))):
        w = PortfolioWeights(col, train.tickers)
        entries.append(RankedEntry(i, w, sharpe_ratio(portfolio_return_series(w, train))))
    entries.sort(key=lambda e: -e.metrics.sharpe)
    ranked = RankedComponents(tuple(entries), (), 2)
    assert ranked.entries[0].component == 0 and ranked.positive_count() == 2

    best_n, curve = sweep_ensemble_size(ranked, train, 2)
    expected = _oracle_curve(ranked, train, 2)
    assert best_n == 1
    assert [n for n, _ in curve] == [1, 2]
    np.testing.assert_allclose([s for _, s in curve], expected, rtol=1e-10)


@pytest.mark.parametrize("seed", [5, 7, 20])
def test_sweep_curve_matches_oracle(seed):
    train = planted_two_factor(seed)
    d = eigh(correlation_matrix(standardize(train)))
    ranked = rank_components(d, train)
    n_max = ranked.positive_count()
    assert n_max >= 2
    best_n, curve = sweep_ensemble_size(ranked, train, n_max)
    expected = _oracle_curve(ranked, train, n_max)
    np.testing.assert_allclose([s for _, s in curve], expected, rtol=1e-10)
    assert best_n == 1 + int(np.argmax(expected))
    assert all(dict(curve)[best_n] >= s for _, s in curve)


def test_sweep_ties_pick_smaller_n():
    # identical members make every ensemble the same portfolio
    tickers = ("A", "B")
    train = return_table(np.random.default_rng(2).normal(1e-3, 0.01, size=(100, 2)), tickers=tickers)
    w = PortfolioWeights([0.5, 0.5], tickers)
    m = sharpe_ratio(portfolio_return_series(w, train))
    ranked = RankedComponents(tuple(RankedEntry(i, w, m) for i in range(2)), (), 2)
    best_n, curve = sweep_ensemble_size(ranked, train, 2)
    assert curve[0][1] == curve[1][1]
    assert best_n == 1


def test_sweep_errors():
    ranked = _ranked_from_sharpes([1.0, -0.5])
    train = return_table(np.random.default_rng(1).normal(0, 0.01, size=(30, 4)))
    with pytest.raises(ValueError):
        sweep_ensemble_size(ranked, train, 0)
    with pytest.raises(EnsembleError):
        sweep_ensemble_size(ranked, train, 2)
    with pytest.raises(EnsembleError, match="no component"):
        sweep_ensemble_size(_ranked_from_sharpes([-1.0, -2.0]), train, 1)


def test_sweep_ignores_skipped_components():
    train = planted_two_factor(5)
    ranked = rank_components(eigh(correlation_matrix(standardize(train))), train)
    padded = RankedComponents(ranked.entries, ranked.skipped + ((97, "zero volatility"), (98, "degenerate normalization")),
                              ranked.n_components)
    n_max = ranked.positive_count()
    assert sweep_ensemble_size(padded, train, n_max) == sweep_ensemble_size(ranked, train, n_max)


# --- positions and serialisation ----------------------------------------

def test_top_positions():
    raw = np.array([0.6, 0.5, -1.1, 1.0])
    w = PortfolioWeights(raw / raw.sum(), ("A", "B", "C", "D"))
    longs, shorts = top_positions(w, 2)
    assert [t for t, _ in longs] == ["D", "A"]
    assert [t for t, _ in shorts] == ["C"]
    assert longs[0][1] == pytest.approx(1.0 / 1.0, rel=1e-12)

    longs, shorts = top_positions(PortfolioWeights(np.full(4, 0.25), ("A", "B", "C", "D")), 5)
    assert len(longs) == 4 and shorts == []
    with pytest.raises(ValueError):
        top_positions(w, 0)


def test_ranking_outputs(tmp_path):
    rng = np.random.default_rng(0)
    base = rng.normal(0, 0.01, size=200)
    rt = return_table(np.column_stack([base + 0.001, base + 0.001 + rng.normal(0, 0.004, 200)]))
    ranked = rank_components(eigh(correlation_matrix(standardize(rt))), rt)
    path = tmp_path / "ranking.csv"
    write_ranking_csv(ranked, path)
    lines = path.read_text().splitlines()
    assert lines[0] == "pc_index,annualized_return,annualized_volatility,sharpe_ratio,excluded"
    assert lines[-1] == "1,,,,true"
    assert lines[1].startswith("0,") and lines[1].endswith(",false")
    rows = __import__("json").loads(ranking_to_json(ranked))
    assert rows[0]["excluded"] is False and rows[-1] == {"pc_index": 1, "excluded": True,
                                                         "reason": "degenerate normalization"}
