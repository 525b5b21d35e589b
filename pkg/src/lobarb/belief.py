"""Sizing the front-run when only a distribution over Bob's order size is known.

Alice knows Bob buys but not how much.  Any shares she cannot resell to Bob
are dumped on the bid straight away.  With constant densities her profit is

    pi(x, y) = x^2/(2 rho+)                                     if x <= y
    pi(x, y) = y^2/(2 rho+) - d (x-y) - k/2 (x-y)^2             if x > y

with spread ``d = s* - s_*`` and ``k = 1/rho+ + 1/rho-``.  Its expectation
only needs the prior's CDF and its first two lower partial moments.
"""
from __future__ import annotations

import math
from abc import ABC, abstractmethod
from dataclasses import dataclass

import numpy as np
from scipy.optimize import brentq

from . import book as lob
from .book import LimitOrderBook
from .errors import NonconstantDensity, NonpositiveTheta, ValidationError


class Prior(ABC):
    """Atomless distribution of Bob's order size on [0, support_hi]."""

    @property
    @abstractmethod
    def support_hi(self) -> float: ...

    @abstractmethod
    def cdf(self, x: float) -> float:
        """P(y < x)."""

    @abstractmethod
    def partial_expectation(self, x: float) -> float:
        """E[y; y < x]."""

    @abstractmethod
    def partial_second_moment(self, x: float) -> float:
        """E[y^2; y < x]."""

    @abstractmethod
    def sample(self, rng: np.random.Generator, n: int) -> np.ndarray: ...

    def conditional_mean(self, x: float) -> float:
        p = self.cdf(x)
        return self.partial_expectation(x) / p if p > 0 else 0.0


@dataclass(frozen=True)
class UniformPrior(Prior):
    theta: float

    def __post_init__(self) -> None:
        if not (math.isfinite(self.theta) and self.theta > 0):
            raise NonpositiveTheta(f"theta must be finite and > 0, got {self.theta!r}")

    @property
    def support_hi(self) -> float:
        return self.theta

    def cdf(self, x):
        return min(max(x, 0.0), self.theta) / self.theta

    def partial_expectation(self, x):
        x = min(max(x, 0.0), self.theta)
        return x * x / (2 * self.theta)

    def partial_second_moment(self, x):
        x = min(max(x, 0.0), self.theta)
        return x**3 / (3 * self.theta)

    def sample(self, rng, n):
        return rng.uniform(0.0, self.theta, n)


@dataclass(frozen=True)
class TabulatedPrior(Prior):
    """Piecewise-linear CDF through ``(y, P(y' < y))`` knots, starting at 0 and ending at 1."""

    ys: tuple[float, ...]
    ps: tuple[float, ...]

    def __post_init__(self) -> None:
        ys = tuple(float(v) for v in self.ys)
        ps = tuple(float(v) for v in self.ps)
        if len(ys) != len(ps) or len(ys) < 2:
            raise ValidationError("tabulated prior needs at least two (y, cdf) knots")
        if not all(math.isfinite(v) for v in ys + ps):
            raise ValidationError("tabulated prior knots must be finite")
        if ys[0] < 0:
            raise ValidationError(f"prior support must lie in y >= 0, got {ys[0]}")
        if any(b <= a for a, b in zip(ys, ys[1:])):
            raise ValidationError("tabulated prior y knots must be strictly increasing")
        if any(b < a for a, b in zip(ps, ps[1:])):
            raise ValidationError("tabulated prior CDF must be nondecreasing")
        if ps[0] != 0 or ps[-1] != 1:
            raise ValidationError("tabulated prior CDF must run from 0 to 1")
        object.__setattr__(self, "ys", ys)
        object.__setattr__(self, "ps", ps)

    @property
    def support_hi(self) -> float:
        return self.ys[-1]

    def cdf(self, x):
        return float(np.interp(x, self.ys, self.ps))

    def _moment(self, x: float, k: int) -> float:
        total = []
        for y0, y1, p0, p1 in zip(self.ys, self.ys[1:], self.ps, self.ps[1:]):
            if x <= y0:
                break
            hi = min(x, y1)
            f = (p1 - p0) / (y1 - y0)
            total.append(f * (hi ** (k + 1) - y0 ** (k + 1)) / (k + 1))
        return math.fsum(total)

    def partial_expectation(self, x):
        return self._moment(x, 1)

    def partial_second_moment(self, x):
        return self._moment(x, 2)

    def sample(self, rng, n):
        # invert per rising segment so flat stretches get no mass
        ys, ps = np.array(self.ys), np.array(self.ps)
        u = rng.uniform(0.0, 1.0, n)
        i = np.clip(np.searchsorted(ps, u, side="right") - 1, 0, len(ps) - 2)
        w = (u - ps[i]) / (ps[i + 1] - ps[i])
        return ys[i] + w * (ys[i + 1] - ys[i])


def uniform_prior(theta: float) -> UniformPrior:
    return UniformPrior(float(theta))


def tabulated_prior(points) -> TabulatedPrior:
    points = list(points)
    return TabulatedPrior(tuple(p[0] for p in points), tuple(p[1] for p in points))


@dataclass(frozen=True)
class _Params:
    rho_ask: float
    rho_bid: float
    spread: float

    @property
    def k(self) -> float:
        return 1 / self.rho_ask + 1 / self.rho_bid


def _params(book: LimitOrderBook) -> _Params:
    ra, rb = lob.constant_rho(book.ask), lob.constant_rho(book.bid)
    if ra is None or rb is None:
        raise NonconstantDensity("expected profit under a prior needs constant densities on both sides")
    return _Params(ra, rb, book.ask.reference_price - book.bid.reference_price)


def _expected(m: _Params, prior: Prior, x: float) -> float:
    p = prior.cdf(x)
    q = prior.partial_expectation(x)
    r = prior.partial_second_moment(x)
    return math.fsum([
        x * x / (2 * m.rho_ask) * (1 - p),
        r / (2 * m.rho_ask),
        -m.spread * (x * p - q),
        -0.5 * m.k * (x * x * p - 2 * x * q + r),
    ])


def _slope(m: _Params, prior: Prior, x: float) -> float:
    p = prior.cdf(x)
    q = prior.partial_expectation(x)
    return x / m.rho_ask * (1 - p) - (m.spread + m.k * x) * p + m.k * q


def _fixed_point_map(m: _Params, prior: Prior, x: float) -> float:
    p = prior.cdf(x)
    q = prior.partial_expectation(x)
    return (m.k * q / p - m.spread) / (2 / m.rho_ask + 1 / m.rho_bid - 1 / (m.rho_ask * p))


def expected_profit(book: LimitOrderBook, prior: Prior, x: float) -> float:
    """E_P[pi(x, y)] with forced liquidation of any excess on the bid."""
    if not (math.isfinite(x) and x >= 0):
        raise ValidationError(f"x must be finite and >= 0, got {x!r}")
    return _expected(_params(book), prior, float(x))


@dataclass(frozen=True)
class Candidate:
    x: float
    value: float
    residual: float  # x - G(x) for stationary points, nan otherwise
    origin: str


@dataclass(frozen=True)
class PriorSolution:
    x: float
    value: float
    candidates: tuple[Candidate, ...]


def solve_under_prior(book: LimitOrderBook, prior: Prior, *, scan: int = 1000,
                      damping: float = 0.5, max_iter: int = 500) -> PriorSolution:
    """Maximize expected profit over [0, support_hi] by candidate enumeration.

    Candidates are 0, the top of the support, and stationary points found by
    damped fixed-point iteration and by bracketing sign changes of the slope.
    """
    m = _params(book)
    hi = prior.support_hi
    cands = [Candidate(0.0, 0.0, math.nan, "zero"), Candidate(hi, _expected(m, prior, hi), math.nan, "support")]

    def stationary(x: float, origin: str) -> None:
        res = x - _fixed_point_map(m, prior, x)
        cands.append(Candidate(x, _expected(m, prior, x), res, origin))

    grid = np.linspace(0.0, hi, scan + 1)[1:]
    grid = grid[[prior.cdf(float(g)) >= 1e-6 for g in grid]]
    slopes = [_slope(m, prior, float(g)) for g in grid]
    for a, b, sa, sb in zip(grid, grid[1:], slopes, slopes[1:]):
        if sa == 0:
            stationary(float(a), "bracket")
        elif sa * sb < 0:
            stationary(brentq(lambda t: _slope(m, prior, t), float(a), float(b), xtol=1e-14, rtol=1e-15), "bracket")

    if len(grid):
        x = float(grid[len(grid) // 2])
        for _ in range(max_iter):
            g = _fixed_point_map(m, prior, x)
            if not math.isfinite(g):
                break
            nxt = min(max((1 - damping) * x + damping * g, float(grid[0])), hi)
            if abs(nxt - x) <= 1e-13 * max(1.0, x):
                # a clamped iterate stalls without being a fixed point
                if (abs(nxt - _fixed_point_map(m, prior, nxt)) <= 1e-8 * max(1.0, nxt)
                        and all(abs(c.x - nxt) > 1e-8 * max(1.0, nxt) for c in cands)):
                    stationary(nxt, "iteration")
                break
            x = nxt

    best = max(cands, key=lambda c: (c.value, -c.x))
    if best.value <= 0:
        best = cands[0]
    return PriorSolution(best.x, best.value, tuple(sorted(cands, key=lambda c: c.x)))


def optimal_under_prior(book: LimitOrderBook, prior: Prior) -> float:
    return solve_under_prior(book, prior).x


def uniform_closed_form(book: LimitOrderBook, theta: float) -> float:
    """Optimal x for a Uniform[0, theta] prior: 2(theta - d rho+)/(3 + rho+/rho-), floored at 0."""
    m = _params(book)
    return max(2 * (theta - m.spread * m.rho_ask) / (3 + m.rho_ask / m.rho_bid), 0.0)


def monte_carlo_expected_profit(book: LimitOrderBook, prior: Prior, x: float, n: int,
                                seed: int) -> tuple[float, float]:
    """(mean, standard error) of the realised profit over ``n`` seeded draws of y.

    Each draw replays buy-x / resell-to-Bob / dump-the-rest from the book
    primitives rather than the expectation formula.
    """
    m = _params(book)
    rng = np.random.default_rng(seed)
    y = prior.sample(rng, n)
    walk = lob.execute(book.ask, x)
    excess = np.maximum(x - y, 0.0)
    dump = book.bid.reference_price * excess - excess**2 / (2 * m.rho_bid)
    pi = -walk.cost + np.minimum(x, y) * walk.side.reference_price + dump
    return float(pi.mean()), float(pi.std(ddof=1) / math.sqrt(n))
