"""Front-running a foreknown market buy, and its consequences for the slow trader.

Throughout, ``y`` is the slow trader's (Bob's) market buy and ``x`` the fast
trader's (Alice's) position taken ahead of it.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum

from . import book as lob
from .book import LimitOrderBook
from .errors import AsymmetricBook, NonconstantDensity, ValidationError
from .optimize import grid_argmax


class Direction(str, Enum):
    BUY = "buy"
    SELL = "sell"


@dataclass(frozen=True)
class TradeIntent:
    direction: Direction
    quantity: float

    def __post_init__(self) -> None:
        object.__setattr__(self, "direction", Direction(self.direction))
        q = float(self.quantity)
        if not math.isfinite(q) or q < 0:
            raise ValidationError(f"trade quantity must be finite and >= 0, got {q!r}")
        object.__setattr__(self, "quantity", q)


@dataclass(frozen=True)
class StrategyOutcome:
    alice_trade: float
    alice_profit: float
    bob_cost: float
    total_buy_volume: float
    churn: float
    intermediate_book: LimitOrderBook
    post_book: LimitOrderBook


def _check_sizes(*sizes: float) -> None:
    for q in sizes:
        if not math.isfinite(q) or q < 0:
            raise ValidationError(f"trade sizes must be finite and >= 0, got {q!r}")


def slippage_cost(book: LimitOrderBook, x: float, y: float) -> float:
    """H+(x+y) - H+(x) - H+(y): extra cost of trading behind someone else."""
    _check_sizes(x, y)
    # anchor terms cancel exactly, so difference the costs above the anchor
    ask = book.ask
    return lob.execute(ask, x + y).excess - lob.execute(ask, x).excess - lob.execute(ask, y).excess


def front_run_profit(book: LimitOrderBook, x: float, y: float) -> float:
    """Profit of buying ``x`` ahead of ``y``, re-offering at the new ask, and
    dumping any excess on the bid."""
    _check_sizes(x, y)
    ask = lob.execute(book.ask, x)
    resale = min(x, y) * ask.side.reference_price
    excess = lob.revenue_sell(book.bid, max(x - y, 0.0))
    return math.fsum([-ask.cost, resale, excess])


def run_strategy1(book: LimitOrderBook, y: float, x: float) -> StrategyOutcome:
    """Replay the front-running round trip as a sequence of book transformations."""
    _check_sizes(x, y)
    step1 = lob.execute(book.ask, x)
    resale = min(x, y)
    ask = step1.side
    if resale > 0:
        ask = lob.insert_limit_sell(ask, ask.reference_price, resale)
    intermediate = LimitOrderBook(ask, book.bid)

    bob = lob.execute(ask, y)
    proceeds = math.fsum(f.cost for f in bob.fills if f.source == "queue")
    dump = lob.execute(book.bid, max(x - y, 0.0))
    post = LimitOrderBook(bob.side, dump.side)

    volume = x + y
    return StrategyOutcome(
        alice_trade=x,
        alice_profit=math.fsum([-step1.cost, proceeds, dump.cost]),
        bob_cost=bob.cost,
        total_buy_volume=volume,
        churn=churn(volume, book, post.ask.reference_price),
        intermediate_book=intermediate,
        post_book=post,
    )


def optimal_front_run(book: LimitOrderBook, y: float, cap_at_y: bool = False) -> float:
    """Size of Alice's position maximizing her profit; 0 if nothing is profitable."""
    _check_sizes(y)
    if y == 0:
        return 0.0
    hi = min(book.ask.total_mass, y if cap_at_y else y + book.bid.total_mass)
    while hi - y > book.bid.total_mass:  # rounding in y + mass
        hi = math.nextafter(hi, 0.0)
    x, value = grid_argmax(lambda t: front_run_profit(book, t, y), 0.0, hi, extra=(y,))
    return x if value > 0 else 0.0


def book_invariance_check(book: LimitOrderBook, y: float, x: float) -> bool:
    """True iff the front-run leaves exactly the book Bob alone would have left."""
    alone = LimitOrderBook(lob.apply_market_buy(book.ask, y), book.bid)
    return run_strategy1(book, y, x).post_book == alone


def acquisition_cost(book: LimitOrderBook, x: float, y: float) -> tuple[float, float]:
    """(alice_cost, bob_cost) when Alice buys x+y and resells y to Bob at D+(x+y)."""
    _check_sizes(x, y)
    walk = lob.execute(book.ask, x + y)
    bob_cost = y * walk.side.reference_price
    return walk.cost - bob_cost, bob_cost


@dataclass(frozen=True)
class BobCostBreakdown:
    total: float
    own_impact: float  # H+(y)
    slippage: float
    latency: float


def bob_cost_breakdown(book: LimitOrderBook, x: float, y: float) -> BobCostBreakdown:
    """Split Bob's bill into his own impact, slippage and the latency premium.

    The latency term is whatever is left; on a constant book it is y^2/(2 rho).
    """
    _check_sizes(x, y)
    after = lob.execute(book.ask, x + y).side
    u = after._touch_distance()
    if math.isinf(u):
        u = after._profile.support_end()
    bob = y * after.reference_price
    own = lob.execute(book.ask, y)
    slip = slippage_cost(book, x, y)
    return BobCostBreakdown(bob, own.cost, slip, y * u - own.excess - slip)


def churn(volume: float, book_before: LimitOrderBook, ask_after: float) -> float:
    """Executed buy volume beyond what the move of the ask accounts for.

    Only meaningful without cancellations.
    """
    if not (math.isfinite(volume) and volume >= 0):
        raise ValidationError(f"volume must be finite and >= 0, got {volume!r}")
    return volume - lob.depth(book_before.ask, ask_after)


@dataclass(frozen=True)
class Reconciliation:
    profit: float
    impact_sq_term: float
    jp_term: float
    eta: float
    book_value_price: float


def jp_reconcile(book: LimitOrderBook, y: float, alpha: float,
                 book_value_price: float | None = None) -> Reconciliation:
    """Alice's single-jump excess profit next to the optional-integration form.

    Alice ends long ``x = alpha*y`` shares after Bob buys ``y``, marking them
    at ``book_value_price`` (post-trade mid by default).  Returns her profit,
    eta^-1 (dS_book)^2 with eta = (1+alpha)/(2 rho), and eta (alpha y)^2, the
    pure-jump term; the last agrees with the profit only for alpha = 1.
    """
    _check_sizes(y)
    if not (math.isfinite(alpha) and alpha > 0):
        raise ValidationError(f"alpha must be > 0, got {alpha!r}")
    rho_a, rho_b = lob.constant_rho(book.ask), lob.constant_rho(book.bid)
    if rho_a is None or rho_b is None:
        raise NonconstantDensity("reconciliation needs constant densities on both sides")
    if rho_a != rho_b:
        raise AsymmetricBook(f"ask density {rho_a} differs from bid density {rho_b}")
    x = alpha * y
    if y == 0:
        return Reconciliation(0.0, 0.0, 0.0, (1 + alpha) / (2 * rho_a), book.ask.reference_price)
    alice_cost, _ = acquisition_cost(book, x, y)
    pre_mid = 0.5 * (book.ask.reference_price + book.bid.reference_price)
    if book_value_price is None:
        ask_after = lob.marginal_price(book.ask, x + y)
        book_value_price = 0.5 * (ask_after + book.bid.reference_price)
    eta = (1 + alpha) / (2 * rho_a)
    profit = x * book_value_price - alice_cost
    return Reconciliation(profit, (book_value_price - pre_mid) ** 2 / eta, eta * x * x, eta, book_value_price)
