"""Transaction tax on both legs of every trade, and its effect on front-running."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import brentq

from . import book as lob
from .book import LimitOrderBook
from .errors import NonconstantDensity, RateOutOfRange, ValidationError


def overall_rate(r_m: float, r_l: float) -> float:
    """R = (1+r_m)/(1-r_l) - 1, the combined burden on a buy-then-resell round trip."""
    r_m, r_l = float(r_m), float(r_l)
    if not (math.isfinite(r_m) and math.isfinite(r_l)) or r_m >= 1 or r_l >= 1:
        raise RateOutOfRange(f"rates must be finite and < 1, got r_m={r_m}, r_l={r_l}")
    R = (1 + r_m) / (1 - r_l) - 1
    if not 0 <= R < 1:
        raise RateOutOfRange(f"overall rate {R} outside [0, 1)")
    return R


@dataclass(frozen=True)
class TaxSchedule:
    r_m: float = 0.0  # paid by the market-order side
    r_l: float = 0.0  # paid by the resting limit order

    def __post_init__(self) -> None:
        overall_rate(self.r_m, self.r_l)
        object.__setattr__(self, "r_m", float(self.r_m))
        object.__setattr__(self, "r_l", float(self.r_l))

    @property
    def R(self) -> float:
        return overall_rate(self.r_m, self.r_l)

    @property
    def total(self) -> float:
        return self.r_m + self.r_l


def taxed_front_run_profit(book: LimitOrderBook, tax: TaxSchedule, x: float, y: float | None = None) -> float:
    """Alice's after-tax profit from buying x and reselling it all to Bob (x <= y)."""
    if y is not None and x > y:
        raise ValidationError(f"taxed profit is defined for x <= y, got x={x}, y={y}")
    walk = lob.execute(book.ask, x)
    return (1 - tax.r_l) * x * walk.side.reference_price - (1 + tax.r_m) * walk.cost


def _rho(book: LimitOrderBook) -> float:
    rho = lob.constant_rho(book.ask)
    if rho is None:
        raise NonconstantDensity("closed form needs a constant ask density; use y_min_numeric")
    return rho


def y_min(book: LimitOrderBook, tax: TaxSchedule) -> float:
    """Smallest Bob order that makes taxed front-running worthwhile: 2R/(1-R) s* rho."""
    R = tax.R
    return 2 * R / (1 - R) * book.ask.reference_price * _rho(book)


def y_min_numeric(book: LimitOrderBook, tax: TaxSchedule, *, scan: int = 1000, xtol: float = 1e-12) -> float:
    """Extension for arbitrary ask books: first positive root of the taxed profit.

    Returns ``inf`` if the profit stays nonpositive across the whole ask side.
    """
    if tax.R == 0:
        return 0.0
    hi = book.ask.total_mass
    if math.isinf(hi):
        hi = 2 * tax.R / (1 - tax.R) * book.ask.reference_price * max(book.ask.density_at(book.ask.reference_price), 1.0)
        while taxed_front_run_profit(book, tax, hi) <= 0:
            hi *= 2
    grid = np.linspace(0.0, hi, scan + 1)[1:]
    lo = 0.0
    for t in map(float, grid):
        if taxed_front_run_profit(book, tax, t) > 0:
            lo = lo or t * 1e-9
            return brentq(lambda s: taxed_front_run_profit(book, tax, s), lo, t, xtol=xtol, rtol=1e-15)
        lo = t
    return math.inf


def optimal_front_run_taxed(book: LimitOrderBook, tax: TaxSchedule, y: float) -> float:
    """0 up to and including y_min (Alice abstains at the break-even point), else y."""
    return float(y) if y > y_min(book, tax) else 0.0


def tax_revenue(book: LimitOrderBook, tax: TaxSchedule, y: float, alice_present: bool) -> float:
    """Tax raised on Bob's order, plus Alice's round trip when she trades."""
    _rho(book)
    walk = lob.execute(book.ask, y)
    notional = walk.cost
    if alice_present and y > y_min(book, tax):
        notional += y * walk.side.reference_price
    return tax.total * notional
