"""Bob's best response to the book, with and without Alice and a transaction tax.

Bob buys while his marginal valuation ``B(y) = p0 - b*y`` exceeds what the
next share costs him.  Without Alice that is the marginal price D+(y); with
Alice front-running him he pays D+(y) on every share, so his surplus is
``int B - y D+(y)`` and he buys less.

Under a tax, resting orders are grossed up so their owners net the same as
before; Bob's bill becomes (1+R) times the pre-tax notional.  Alice only
trades when Bob's order exceeds y_min.
"""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field

import numpy as np
from scipy.integrate import quad
from scipy.optimize import brentq

from . import book as lob
from .book import LimitOrderBook
from .errors import NoRoot, NonconstantDensity, ValidationError
from .taxation import TaxSchedule, y_min as _y_min


@dataclass(frozen=True)
class LinearDemand:
    """Bob's marginal valuation B(y) = intercept - slope * y."""

    slope: float
    intercept: float

    def __post_init__(self) -> None:
        b, p0 = float(self.slope), float(self.intercept)
        if not (math.isfinite(b) and b >= 0):
            raise ValidationError(f"demand slope must be finite and >= 0, got {b!r}")
        if not math.isfinite(p0):
            raise ValidationError(f"demand intercept must be finite, got {p0!r}")
        object.__setattr__(self, "slope", b)
        object.__setattr__(self, "intercept", p0)

    @classmethod
    def from_reference(cls, book: LimitOrderBook, y_ref: float, slope: float) -> LinearDemand:
        """The line through (y_ref, D+(y_ref)), so that Bob alone buys y_ref."""
        return cls(slope, lob.marginal_price(book.ask, y_ref) + slope * y_ref)

    def __call__(self, y: float) -> float:
        return self.intercept - self.slope * y

    def integral(self, y: float) -> float:
        return self.intercept * y - 0.5 * self.slope * y * y


def _rho(book: LimitOrderBook) -> float:
    rho = lob.constant_rho(book.ask)
    if rho is None:
        raise NonconstantDensity("closed form needs a constant ask density")
    return rho


def y_star(book: LimitOrderBook, demand: LinearDemand) -> float:
    """Bob's purchase with Alice absent: B(y) = D+(y), or 0 if B(0) <= s*."""
    ask = book.ask
    s = ask.reference_price
    if demand.intercept <= s:
        return 0.0
    rho = lob.constant_rho(ask)
    if rho is not None:
        return (demand.intercept - s) / (demand.slope + 1 / rho)

    def gap(y: float) -> float:
        return demand(y) - lob.marginal_price(ask, y)

    hi = ask.total_mass
    if math.isinf(hi):
        hi = 1.0
        while gap(hi) > 0:
            hi *= 2
            if hi > 1e15:
                raise NoRoot("demand stays above the marginal price for every order size")
    elif gap(hi) > 0:
        raise NoRoot(f"demand exceeds the marginal price across the full ask depth {hi}")
    return brentq(gap, 0.0, hi, xtol=1e-13, rtol=1e-15)


def y_with_alice(book: LimitOrderBook, demand: LinearDemand) -> float:
    """Bob's purchase when Alice front-runs him: (1 + b rho)/(2 + b rho) y*."""
    beta = demand.slope * _rho(book)
    return (1 + beta) / (2 + beta) * y_star(book, demand)


def surplus_no_alice(book: LimitOrderBook, demand: LinearDemand, y: float) -> float:
    return demand.integral(y) - lob.cost_buy(book.ask, y)


def surplus_alice(book: LimitOrderBook, demand: LinearDemand, y: float) -> float:
    return demand.integral(y) - y * lob.marginal_price(book.ask, y)


def alice_profit(book: LimitOrderBook, y: float) -> float:
    """Profit of front-running Bob's y with x = y: y D+(y) - H+(y)."""
    walk = lob.execute(book.ask, y)
    return y * walk.side.reference_price - walk.cost


def surplus_alice_taxed(book: LimitOrderBook, demand: LinearDemand, tax: TaxSchedule, y: float) -> float:
    """Bob's surplus under the tax; Alice joins only above y_min."""
    walk = lob.execute(book.ask, y)
    notional = y * walk.side.reference_price if y > _y_min(book, tax) else walk.cost
    return demand.integral(y) - (1 + tax.R) * notional


def alice_profit_taxed(book: LimitOrderBook, tax: TaxSchedule, y: float) -> float:
    """Alice's profit under grossed-up quotes: y D+(y) - (1+R) H+(y), or 0 if she abstains."""
    if not y > _y_min(book, tax):
        return 0.0
    walk = lob.execute(book.ask, y)
    return y * walk.side.reference_price - (1 + tax.R) * walk.cost


def tax_raised(book: LimitOrderBook, tax: TaxSchedule, y: float) -> float:
    """Revenue at grossed-up prices: R times the pre-tax notional of every trade."""
    walk = lob.execute(book.ask, y)
    notional = walk.cost
    if y > _y_min(book, tax):
        notional += y * walk.side.reference_price
    return tax.R * notional


def _gap_integral(book: LimitOrderBook, demand: LinearDemand, lo: float, hi: float) -> float:
    if hi <= lo:
        return 0.0
    value, _ = quad(lambda u: demand(u) - lob.marginal_price(book.ask, u), lo, hi,
                    epsabs=0.0, epsrel=1e-12, limit=200)
    return value


@dataclass(frozen=True)
class DeadweightLoss:
    integral: float  # int_{y_A}^{y*} (B - D+), authoritative
    surplus_gap: float  # gamma*(y*) - gamma*(y_A), same quantity by another route
    bracket: float  # closed form (b + 1/rho)[((1+b rho)/(2+b rho) - 1/2)^2 + 1/4] y*^2

    @property
    def bracket_ratio(self) -> float:
        return self.bracket / self.integral if self.integral else math.nan


def deadweight_loss(book: LimitOrderBook, demand: LinearDemand) -> DeadweightLoss:
    """Total surplus destroyed by Alice's presence, by quadrature of B - D+.

    The bracket closed form is returned for comparison only.  It is twice the
    integral when b = 0 and disagrees in general.
    """
    ys = y_star(book, demand)
    ya = y_with_alice(book, demand)
    integral = _gap_integral(book, demand, ya, ys)
    gap = surplus_no_alice(book, demand, ys) - surplus_no_alice(book, demand, ya)
    b, rho = demand.slope, _rho(book)
    ratio = (1 + b * rho) / (2 + b * rho)
    bracket = (b + 1 / rho) * ((ratio - 0.5) ** 2 + 0.25) * ys * ys
    return DeadweightLoss(integral, gap, bracket)


@dataclass(frozen=True)
class TaxedCandidate:
    y: float
    surplus: float
    label: str


@dataclass(frozen=True)
class TaxedOptimum:
    y: float
    candidates: tuple[TaxedCandidate, ...]
    y1: float  # left-branch stationary point L / (b + (1+R)/rho)
    y2: float  # right-branch stationary point L / (b + 2(1+R)/rho)
    y1_closed_form: float  # y* - R s* rho / (1 + R + b rho), the published simplification of y1


def y_with_alice_and_tax(book: LimitOrderBook, demand: LinearDemand, tax: TaxSchedule) -> TaxedOptimum:
    """Bob's optimum under the tax by enumerating 0, y1, y_min and y2."""
    rho = _rho(book)
    s = book.ask.reference_price
    b, R = demand.slope, tax.R
    ys = y_star(book, demand)
    ym = _y_min(book, tax)
    lead = -R * s + (b + 1 / rho) * ys
    y1 = lead / (b + (1 + R) / rho)
    y2 = lead / (b + 2 * (1 + R) / rho)

    pts = [(0.0, "zero"), (ym, "y_min")]
    if 0 < y1 <= ym:
        pts.append((y1, "y1"))
    if y2 > ym:
        pts.append((y2, "y2"))
    cands = tuple(TaxedCandidate(y, surplus_alice_taxed(book, demand, tax, y), label) for y, label in pts)
    best = max(cands, key=lambda c: (c.surplus, -c.y))
    return TaxedOptimum(best.y, cands, y1, y2, ys - R * s * rho / (1 + R + b * rho))


@dataclass(frozen=True)
class Band:
    """Open interval ``(lo, hi)``; empty when ``lo >= hi``.

    ``published_lo``/``published_hi`` hold the published closed-form endpoints, kept
    for comparison where they differ from the exact ones.
    """

    lo: float
    hi: float
    published_lo: float
    published_hi: float

    @property
    def empty(self) -> bool:
        return not self.lo < self.hi

    def __contains__(self, v: float) -> bool:
        return self.lo < v < self.hi

    def published_contains(self, v: float) -> bool:
        return self.published_lo < v < self.published_hi


def bob_benefit_band(book: LimitOrderBook, tax: TaxSchedule) -> Band:
    """Order sizes y at which the tax raises Bob's surplus for that same y.

    It never does: below y_min the tax costs him R H+(y) while saving the
    y^2/(2 rho) Alice would have taken, and the difference
    (y/(2 rho)) (2 R s* rho - (1-R) y) is nonnegative up to y_min.  Above
    y_min he pays both.  The exact band is empty.
    """
    rho = _rho(book)
    R, s = tax.R, book.ask.reference_price
    ym = _y_min(book, tax)
    return Band(ym, ym, 0.0, 2 * R / (2 - R) * s * rho)


def _e2(book: LimitOrderBook, demand: LinearDemand, tax: TaxSchedule) -> float:
    beta = demand.slope * _rho(book)
    return (2 + beta) / (1 + beta) * _y_min(book, tax)


def bob_benefit_band_optimal(book: LimitOrderBook, demand: LinearDemand, tax: TaxSchedule) -> Band:
    """Values of y* for which the tax raises Bob's optimal surplus.

    Since the taxed surplus is pointwise no larger than the untaxed one, the
    optimum cannot improve either; the exact band is empty (it degenerates to
    the single y* at which y_A = y_min and the two optima tie).
    """
    rho = _rho(book)
    R, s, beta = tax.R, book.ask.reference_price, demand.slope * rho
    e2 = _e2(book, demand, tax)
    return Band(e2, e2, R * s * rho / (1 + R + beta), (2 / (2 - R) + 1 / (beta + 1 + R)) * R * s * rho)


def tobin_effective_band(book: LimitOrderBook, demand: LinearDemand, tax: TaxSchedule) -> Band:
    """Values of y* for which the tax lowers the deadweight loss.

    Inside the band Bob stops at y_min, which keeps Alice out and still
    leaves him buying more than y_A.  The ends are E2/2 and E2, where
    E2 = (2 + b rho)/(1 + b rho) y_min is the y* at which y_A = y_min.
    """
    rho = _rho(book)
    R, s, beta = tax.R, book.ask.reference_price, demand.slope * rho
    e2 = _e2(book, demand, tax)
    return Band(0.5 * e2, e2, (2 + beta) * R * s * rho / (1 + R + beta), e2)


def volume_report(book: LimitOrderBook, demand: LinearDemand, alice_present: bool) -> float:
    """Total executed market-buy volume: 2 y_A with Alice (she trades each share twice), y* without."""
    if alice_present:
        return 2 * y_with_alice(book, demand)
    return y_star(book, demand)


@dataclass(frozen=True)
class EquilibriumReport:
    y_star: float
    y_A: float
    y_A_T: float | None
    gamma_star: float
    gamma_A: float
    gamma_A_T: float | None
    alice_profit: float
    alice_profit_taxed: float | None
    deadweight_loss: float
    deadweight_loss_bracket: float
    deadweight_loss_taxed: float | None
    tax_revenue: float | None
    volume_alice: float
    volume_no_alice: float
    y_min: float | None
    bands: dict | None = field(default=None)

    def to_dict(self) -> dict:
        return asdict(self)


def equilibrium_report(book: LimitOrderBook, demand: LinearDemand, tax: TaxSchedule | None = None) -> EquilibriumReport:
    ys = y_star(book, demand)
    ya = y_with_alice(book, demand)
    dwl = deadweight_loss(book, demand) if ys > 0 else DeadweightLoss(0.0, 0.0, 0.0)
    taxed = dict(y_A_T=None, gamma_A_T=None, alice_profit_taxed=None, deadweight_loss_taxed=None,
                 tax_revenue=None, y_min=None, bands=None)
    if tax is not None:
        yt = y_with_alice_and_tax(book, demand, tax).y
        bands = {
            "bob_benefit": bob_benefit_band(book, tax),
            "bob_benefit_optimal": bob_benefit_band_optimal(book, demand, tax),
            "tobin_effective": tobin_effective_band(book, demand, tax),
        }
        taxed = dict(
            y_A_T=yt,
            gamma_A_T=surplus_alice_taxed(book, demand, tax, yt),
            alice_profit_taxed=alice_profit_taxed(book, tax, yt),
            deadweight_loss_taxed=_gap_integral(book, demand, yt, ys),
            tax_revenue=tax_raised(book, tax, yt),
            y_min=_y_min(book, tax),
            bands={k: {"lo": v.lo, "hi": v.hi, "published_lo": v.published_lo, "published_hi": v.published_hi,
                       "contains_y_star": ys in v, "published_contains_y_star": v.published_contains(ys)}
                   for k, v in bands.items()},
        )
    return EquilibriumReport(
        y_star=ys,
        y_A=ya,
        gamma_star=surplus_no_alice(book, demand, ys),
        gamma_A=surplus_alice(book, demand, ya),
        alice_profit=alice_profit(book, ya),
        deadweight_loss=dwl.integral,
        deadweight_loss_bracket=dwl.bracket,
        volume_alice=volume_report(book, demand, True),
        volume_no_alice=volume_report(book, demand, False),
        **taxed,
    )


@dataclass(frozen=True)
class Scenario:
    rho: float
    ask: float
    slope: float
    R: float
    y_star: float

    def book(self) -> LimitOrderBook:
        return LimitOrderBook.constant(self.ask, self.ask, self.rho)

    def tax(self) -> TaxSchedule:
        return TaxSchedule(r_m=self.R, r_l=0.0)

    def demand(self) -> LinearDemand:
        return LinearDemand.from_reference(self.book(), self.y_star, self.slope)


def sample_scenarios(n: int, seed: int) -> list[Scenario]:
    """Random constant-book scenarios with y* spread around y_min on a log scale."""
    rng = np.random.default_rng(seed)
    rho = np.exp(rng.uniform(math.log(0.1), math.log(100), n))
    ask = np.exp(rng.uniform(0.0, math.log(1000), n))
    R = np.exp(rng.uniform(math.log(1e-4), math.log(0.05), n))
    slope = np.where(rng.uniform(size=n) < 0.25, 0.0, np.exp(rng.uniform(math.log(1e-3), 0.0, n)))
    ym = 2 * R / (1 - R) * ask * rho
    ys = ym * np.exp(rng.uniform(math.log(0.05), math.log(20), n))
    return [Scenario(*map(float, row)) for row in zip(rho, ask, slope, R, ys)]


def band_battery(n: int, seed: int) -> dict:
    """Compare band membership with direct optimum comparisons on random scenarios.

    Counts disagreements for the exact bands and for the published closed forms.
    Scenarios within 1e-8 (relative) of an endpoint are skipped.
    """
    out = {"scenarios": n, "seed": seed}
    for name in ("bob_benefit_optimal", "tobin_effective"):
        out[name] = {"checked": 0, "exact_disagree": 0, "published_disagree": 0}
    for sc in sample_scenarios(n, seed):
        book, demand, tax = sc.book(), sc.demand(), sc.tax()
        ya = y_with_alice(book, demand)
        yt = y_with_alice_and_tax(book, demand, tax).y
        truth = {
            "bob_benefit_optimal": surplus_alice_taxed(book, demand, tax, yt) > surplus_alice(book, demand, ya),
            "tobin_effective": surplus_no_alice(book, demand, yt) > surplus_no_alice(book, demand, ya),
        }
        bands = {
            "bob_benefit_optimal": bob_benefit_band_optimal(book, demand, tax),
            "tobin_effective": tobin_effective_band(book, demand, tax),
        }
        ys = sc.y_star
        for name, band in bands.items():
            ends = (band.lo, band.hi)
            if any(abs(ys - e) <= 1e-8 * max(1.0, abs(e)) for e in ends):
                continue
            rec = out[name]
            rec["checked"] += 1
            rec["exact_disagree"] += (ys in band) != truth[name]
            published_ends = (band.published_lo, band.published_hi)
            if not any(abs(ys - e) <= 1e-8 * max(1.0, abs(e)) for e in published_ends):
                rec["published_disagree"] += band.published_contains(ys) != truth[name]
    return out
