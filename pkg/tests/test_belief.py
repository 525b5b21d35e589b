import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.integrate import quad

from lobarb import belief
from lobarb import strategies as strat
from lobarb.book import Affine, BookSide, LimitOrderBook
from lobarb.errors import NonconstantDensity, NonpositiveTheta, ValidationError
from lobarb.optimize import grid_argmax

CANON = LimitOrderBook.constant(100, 99, 10)
U20 = belief.uniform_prior(20)


def realised(book, x, y):
    return strat.front_run_profit(book, x, y)


def quadrature_expectation(book, prior, x):
    """E[pi(x, y)] by integrating realised profit against a piecewise-linear cdf."""
    ys, ps = (np.asarray(prior.ys), np.asarray(prior.ps)) if isinstance(prior, belief.TabulatedPrior) \
        else (np.array([0.0, prior.theta]), np.array([0.0, 1.0]))
    total = 0.0
    for a, b, pa, pb in zip(ys, ys[1:], ps, ps[1:]):
        if pb > pa:
            dens = (pb - pa) / (b - a)
            pts = [x] if a < x < b else None
            total += quad(lambda y: realised(book, x, y) * dens, a, b, points=pts, epsabs=1e-12, epsrel=1e-12)[0]
    return total


def test_uniform_prior_examples():
    assert U20.cdf(10) == 0.5
    assert U20.partial_expectation(20) == pytest.approx(10)
    for x in (1.0, 7.0, 20.0):
        assert U20.conditional_mean(x) == pytest.approx(x / 2)
    assert U20.cdf(-1) == 0 and U20.cdf(50) == 1
    with pytest.raises(NonpositiveTheta):
        belief.uniform_prior(0)


def test_tabulated_prior_validation():
    with pytest.raises(ValidationError):
        belief.tabulated_prior([(0, 0), (1, 0.6), (2, 0.5), (3, 1)])
    with pytest.raises(ValidationError):
        belief.tabulated_prior([(0, 0), (1, 0.5)])
    with pytest.raises(ValidationError):
        belief.tabulated_prior([(1, 0.1), (2, 1)])
    with pytest.raises(ValidationError):
        belief.tabulated_prior([(-1, 0), (2, 1)])


def test_tabulated_matches_uniform():
    tab = belief.tabulated_prior([(0, 0), (8, 0.4), (20, 1)])
    for x in (0.0, 3.0, 8.0, 13.5, 20.0, 25.0):
        assert tab.cdf(x) == pytest.approx(U20.cdf(x), abs=1e-15)
        assert tab.partial_expectation(x) == pytest.approx(U20.partial_expectation(x), rel=1e-12, abs=1e-15)
        assert tab.partial_second_moment(x) == pytest.approx(U20.partial_second_moment(x), rel=1e-12, abs=1e-15)


def test_expected_profit_examples():
    assert belief.expected_profit(CANON, U20, 0) == 0
    mean, se = belief.monte_carlo_expected_profit(CANON, U20, 5, 10**6, 11)
    assert abs(belief.expected_profit(CANON, U20, 5) - mean) <= 3 * se
    flat = LimitOrderBook.constant(100, 100, 10)
    for x in (2.0, 9.0, 25.0):
        assert belief.expected_profit(flat, U20, x) == pytest.approx(quadrature_expectation(flat, U20, x), rel=1e-9)


def test_expected_profit_matches_quadrature_on_tabulated_prior():
    tab = belief.tabulated_prior([(0, 0), (2, 0.1), (5, 0.1), (9, 0.7), (15, 1)])
    book = LimitOrderBook.constant(100, 99.8, 8, 3)
    for x in (1.0, 4.0, 7.0, 12.0, 15.0):
        assert belief.expected_profit(book, tab, x) == pytest.approx(quadrature_expectation(book, tab, x), rel=1e-9, abs=1e-12)


def test_optimal_examples():
    assert belief.optimal_under_prior(CANON, U20) == pytest.approx(5, abs=1e-8)
    assert belief.uniform_closed_form(CANON, 20) == pytest.approx(5, rel=1e-15)
    assert belief.optimal_under_prior(CANON, belief.uniform_prior(10)) == 0
    assert belief.optimal_under_prior(CANON, belief.uniform_prior(8)) == 0
    assert belief.uniform_closed_form(CANON, 8) == 0
    deep_bid = LimitOrderBook.constant(100, 99, 10, 1e9)
    x = belief.uniform_closed_form(deep_bid, 20)
    assert x == pytest.approx(2 / 3 * (20 - 10), rel=1e-6)
    assert x < 2 / 3 * 20


def test_closed_form_against_grid_argmax():
    for theta, spread, ra, rb in [(20, 1, 10, 10), (50, 0.3, 4, 20), (7, 0.01, 30, 2), (100, 2, 5, 5)]:
        book = LimitOrderBook.constant(100, 100 - spread, ra, rb)
        prior = belief.uniform_prior(theta)
        x, _ = grid_argmax(lambda t: belief.expected_profit(book, prior, t), 0, theta)
        assert x == pytest.approx(belief.uniform_closed_form(book, theta), abs=1e-4)


def test_nonconstant_density_refused():
    book = LimitOrderBook(BookSide.ask(100, Affine(10, 1)), CANON.bid)
    with pytest.raises(NonconstantDensity):
        belief.expected_profit(book, U20, 1)


def scenario(rng):
    ra, rb = float(rng.uniform(1, 30)), float(rng.uniform(1, 30))
    spread = float(rng.uniform(0, 1))
    book = LimitOrderBook.constant(100, 100 - spread, ra, rb)
    if rng.uniform() < 0.5:
        prior = belief.uniform_prior(float(rng.uniform(1, 60)))
    else:
        ys = np.cumsum(rng.uniform(0.5, 10, 5))
        ps = np.concatenate([[0], np.sort(rng.uniform(0, 1, 3)), [1]])
        prior = belief.tabulated_prior(zip(np.concatenate([[0], ys[:4]]), ps))
    return book, prior


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_stationarity_and_grid_optimality(seed):
    book, prior = scenario(np.random.default_rng(seed))
    sol = belief.solve_under_prior(book, prior)
    f = lambda t: belief.expected_profit(book, prior, t)
    hi = prior.support_hi
    if 0 < sol.x < hi:
        h = 1e-7 * max(1.0, sol.x)
        assert abs((f(sol.x + h) - f(sol.x - h)) / (2 * h)) <= 1e-6
        chosen = next(c for c in sol.candidates if c.x == sol.x)
        assert abs(chosen.residual) <= 1e-8 * max(1.0, sol.x)
    grid = np.arange(0, hi + 1e-12, 1e-3 * hi)
    assert max(f(float(g)) for g in grid) <= sol.value + 1e-6


@settings(max_examples=60, deadline=None)
@given(st.floats(1, 100), st.floats(0, 2), st.floats(1, 30), st.floats(1, 30))
def test_comparative_statics(theta, spread, ra, rb):
    def x(theta=theta, spread=spread, ra=ra, rb=rb):
        return belief.uniform_closed_form(LimitOrderBook.constant(100, 100 - spread, ra, rb), theta)
    base = x()
    assert x(spread=spread + 0.1) <= base
    assert x(theta=theta * 1.1) >= base
    # larger rho- (deeper bid) lowers rho+/rho- and so the position grows
    assert x(rb=rb * 2) >= base


def test_monte_carlo_is_seeded():
    a = belief.monte_carlo_expected_profit(CANON, U20, 5, 1000, 3)
    assert a == belief.monte_carlo_expected_profit(CANON, U20, 5, 1000, 3)
    assert a != belief.monte_carlo_expected_profit(CANON, U20, 5, 1000, 4)


def test_tabulated_sampling_has_the_right_cdf():
    tab = belief.tabulated_prior([(0, 0), (2, 0.1), (5, 0.1), (9, 0.7), (15, 1)])
    ys = tab.sample(np.random.default_rng(0), 200_000)
    for x in (1.0, 3.0, 6.0, 12.0):
        assert np.mean(ys < x) == pytest.approx(tab.cdf(x), abs=5e-3)
    assert not np.any((ys > 2) & (ys < 5))
    assert math.isclose(tab.support_hi, 15)
