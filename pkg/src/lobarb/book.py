"""One side of a limit order book: a price density plus point masses.

A side is stored in *distance* coordinates, measured from an anchor price away
from the spread (upwards for the ask, downwards for the bid).  The original
profile (density + resting atoms) is never mutated; executed market orders
advance a ``consumed`` share count through it, and limit orders placed by a
trader are kept in a separate priority ``queue`` that fills before profile
liquidity at the same price.

Share bookkeeping inside a market-order walk is done with
:class:`fractions.Fraction`, so that two routes that consume the same total
volume end in bit-identical states.
"""
from __future__ import annotations

import bisect
import math
from dataclasses import dataclass, replace
from enum import Enum
from fractions import Fraction
from functools import cached_property
from typing import NamedTuple, Union

from .errors import AtomAtTouch, InsufficientDepth, PriceInsideSpread, ValidationError


class Orientation(str, Enum):
    ASK = "ask"
    BID = "bid"

    @property
    def sign(self) -> int:
        return 1 if self is Orientation.ASK else -1


def _finite_nonneg(name: str, value: float) -> float:
    value = float(value)
    if not math.isfinite(value) or value < 0:
        raise ValidationError(f"{name} must be finite and >= 0, got {value!r}")
    return value


@dataclass(frozen=True)
class Constant:
    rho: float

    def __post_init__(self) -> None:
        object.__setattr__(self, "rho", _finite_nonneg("rho", self.rho))


@dataclass(frozen=True)
class Affine:
    """Density ``rho0 + slope * distance``, clamped at zero past its root."""

    rho0: float
    slope: float

    def __post_init__(self) -> None:
        object.__setattr__(self, "rho0", _finite_nonneg("rho0", self.rho0))
        slope = float(self.slope)
        if not math.isfinite(slope):
            raise ValidationError(f"slope must be finite, got {slope!r}")
        object.__setattr__(self, "slope", slope)


@dataclass(frozen=True)
class PiecewiseConstant:
    """Constant density on sorted, non-overlapping absolute price intervals."""

    segments: tuple[tuple[float, float, float], ...]

    def __post_init__(self) -> None:
        segs = tuple((float(lo), float(hi), float(rho)) for lo, hi, rho in self.segments)
        for i, (lo, hi, rho) in enumerate(segs):
            if not math.isfinite(lo) or not lo < hi:
                raise ValidationError(f"segment {i}: need finite price_lo < price_hi, got ({lo}, {hi})")
            if math.isinf(hi) and i != len(segs) - 1:
                raise ValidationError("only the last segment may be unbounded")
            _finite_nonneg(f"segment {i} rho", rho)
            if i and segs[i - 1][1] > lo:
                raise ValidationError(f"segments {i - 1} and {i} overlap or are unsorted")
        object.__setattr__(self, "segments", segs)


DensitySpec = Union[Constant, Affine, PiecewiseConstant]


def density_value(density: DensitySpec, orientation: Orientation, anchor: float, price: float) -> float:
    """Pointwise density of a fresh side, continuous from the far side of the spread."""
    u = orientation.sign * (price - anchor)
    if u < 0 or price < 0:
        return 0.0
    if isinstance(density, Constant):
        return density.rho
    if isinstance(density, Affine):
        return max(density.rho0 + density.slope * u, 0.0)
    for lo, hi, rho in density.segments:
        inside = lo <= price < hi if orientation is Orientation.ASK else lo < price <= hi
        if inside:
            return rho
    return 0.0


@dataclass(frozen=True)
class _Piece:
    start: float
    end: float
    c: float
    b: float
    qty: float
    mass0: float

    @property
    def is_atom(self) -> bool:
        return self.qty > 0

    @cached_property
    def mass(self) -> float:
        if self.is_atom:
            return self.qty
        length = self.end - self.start
        if math.isinf(length):
            return math.inf
        return self.c * length + 0.5 * self.b * length * length

    def offset(self, m: float) -> float:
        """Distance into the piece at which ``m`` shares have been consumed."""
        if m <= 0:
            return 0.0
        if self.b == 0:
            return m / self.c
        disc = self.c * self.c + 2.0 * self.b * m
        return 2.0 * m / (self.c + math.sqrt(max(disc, 0.0)))

    def moment(self, v: float) -> float:
        return v * v * (0.5 * self.c + self.b * v / 3.0)


class _Profile:
    """Static mass profile of a side in distance coordinates."""

    def __init__(self, orientation: Orientation, anchor: float, density: DensitySpec,
                 atoms: tuple[tuple[float, float], ...]):
        self.sign = orientation.sign
        self.anchor = anchor
        limit = anchor if orientation is Orientation.BID else math.inf

        segs: list[tuple[float, float, float, float]] = []
        if isinstance(density, Constant):
            if density.rho > 0 and limit > 0:
                segs.append((0.0, limit, density.rho, 0.0))
        elif isinstance(density, Affine):
            end = limit
            if density.slope < 0:
                end = min(end, density.rho0 / -density.slope)
            if end > 0 and (density.rho0 > 0 or density.slope > 0):
                segs.append((0.0, end, density.rho0, density.slope))
        else:
            for lo, hi, rho in density.segments:
                if rho == 0:
                    continue
                if orientation is Orientation.ASK:
                    u0, u1 = lo - anchor, hi - anchor
                else:
                    u0, u1 = anchor - hi, anchor - lo
                u0, u1 = max(u0, 0.0), min(u1, limit)
                if u1 > u0:
                    segs.append((u0, u1, rho, 0.0))
            segs.sort()

        merged: dict[float, float] = {}
        for price, qty in atoms:
            u = self.sign * (price - anchor)
            merged[u] = merged.get(u, 0.0) + qty
        cuts = sorted(merged)

        items: list[tuple[float, int, tuple]] = []
        for u0, u1, c, b in segs:
            for a in cuts[bisect.bisect_right(cuts, u0):bisect.bisect_left(cuts, u1)]:
                items.append((u0, 1, (u0, a, c, b)))
                c, u0 = c + b * (a - u0), a
            items.append((u0, 1, (u0, u1, c, b)))
        for u in cuts:
            items.append((u, 0, (u, u, 0.0, 0.0, merged[u])))
        items.sort(key=lambda t: (t[0], t[1]))

        pieces: list[_Piece] = []
        mass0 = 0.0
        for _, kind, data in items:
            piece = _Piece(*data[:4], qty=data[4] if kind == 0 else 0.0, mass0=mass0)
            pieces.append(piece)
            mass0 = mass0 + piece.mass
        self.pieces = pieces
        self.total = mass0
        self._ends = [p.mass0 + p.mass for p in pieces]
        self._starts = [p.start for p in pieces]

    def price(self, u: float) -> float:
        return self.anchor + self.sign * u

    def locate(self, m: float) -> float:
        """Right quasi-inverse: inf{u : M(u) > m}; ``inf`` once exhausted."""
        i = bisect.bisect_right(self._ends, m)
        if i == len(self.pieces):
            return math.inf
        p = self.pieces[i]
        if p.is_atom:
            return p.start
        return p.start + p.offset(m - p.mass0)

    def mass_upto(self, u: float, inclusive: bool = True) -> float:
        """Profile mass at distance <= u (atoms at exactly u excluded if not inclusive)."""
        if inclusive:
            i = bisect.bisect_right(self._starts, u)
        else:
            i = bisect.bisect_left(self._starts, u)
            # density pieces starting exactly at u contribute nothing anyway
        if i == 0:
            return 0.0
        p = self.pieces[i - 1]
        if p.is_atom or u >= p.end:
            return p.mass0 + p.mass
        v = u - p.start
        return p.mass0 + p.c * v + 0.5 * p.b * v * v

    def cost_between(self, m0: float, m1: float, *, from_anchor: bool = False) -> float:
        """Cash value of the profile liquidity between cumulative masses m0 and m1.

        With ``from_anchor`` each share is valued at its signed distance from
        the anchor, which avoids cancellation when differencing costs.
        """
        terms = []
        for p in self.pieces:
            if p.mass0 >= m1:
                break
            lo = max(m0 - p.mass0, 0.0)
            hi = min(m1 - p.mass0, p.mass)
            if hi <= lo:
                continue
            p_start = self.sign * p.start if from_anchor else self.price(p.start)
            terms.append(p_start * (hi - lo))
            if not p.is_atom:
                terms.append(self.sign * (p.moment(p.offset(hi)) - p.moment(p.offset(lo))))
        return math.fsum(terms)

    def density_at(self, u: float) -> tuple[float, float]:
        """(density, slope per unit distance) just beyond distance u."""
        for p in self.pieces:
            if not p.is_atom and p.start <= u < p.end:
                return p.c + p.b * (u - p.start), p.b
        return 0.0, 0.0

    def support_end(self) -> float:
        return self.pieces[-1].end if self.pieces else 0.0


def _atoms(raw, orientation: Orientation, anchor: float, what: str) -> tuple[tuple[float, float], ...]:
    out = []
    for price, qty in raw:
        price, qty = float(price), float(qty)
        if not (math.isfinite(price) and math.isfinite(qty)) or qty <= 0:
            raise ValidationError(f"{what} need finite price and qty > 0, got ({price}, {qty})")
        if orientation.sign * (price - anchor) < 0 or price < 0:
            raise ValidationError(f"{what} at {price} lies inside the spread of a {orientation.value} side anchored at {anchor}")
        out.append((price, qty))
    return tuple(out)


@dataclass(frozen=True)
class BookSide:
    """One side of the book.

    ``anchor`` is the price the density is measured from (s* for a fresh ask,
    s_* for a fresh bid).  The current touch is :attr:`reference_price`.
    """

    orientation: Orientation
    anchor: float
    density: DensitySpec
    atoms: tuple[tuple[float, float], ...] = ()
    consumed: float = 0.0
    queue: tuple[tuple[float, float], ...] = ()

    def __post_init__(self) -> None:
        orientation = Orientation(self.orientation)
        object.__setattr__(self, "orientation", orientation)
        anchor = float(self.anchor)
        if not math.isfinite(anchor) or anchor < 0:
            raise ValidationError(f"anchor price must be finite and >= 0, got {anchor!r}")
        object.__setattr__(self, "anchor", anchor)
        atoms = _atoms(self.atoms, orientation, anchor, "atoms")
        object.__setattr__(self, "atoms", tuple(sorted(atoms, key=lambda a: orientation.sign * a[0])))
        object.__setattr__(self, "queue", _atoms(self.queue, orientation, anchor, "queued orders"))
        object.__setattr__(self, "consumed", _finite_nonneg("consumed", self.consumed))
        if isinstance(self.density, PiecewiseConstant):
            for lo, hi, _ in self.density.segments:
                if (orientation is Orientation.ASK and lo < anchor) or (orientation is Orientation.BID and hi > anchor):
                    raise ValidationError(f"density segment ({lo}, {hi}) crosses the {orientation.value} anchor {anchor}")
        if self.consumed > self._profile.total:
            raise InsufficientDepth("consumed volume exceeds the profile mass")

    @classmethod
    def ask(cls, reference_price: float, density: DensitySpec, atoms=()) -> BookSide:
        return cls(Orientation.ASK, reference_price, density, tuple(atoms))

    @classmethod
    def bid(cls, reference_price: float, density: DensitySpec, atoms=()) -> BookSide:
        return cls(Orientation.BID, reference_price, density, tuple(atoms))

    @cached_property
    def _profile(self) -> _Profile:
        return _Profile(self.orientation, self.anchor, self.density, self.atoms)

    def _distance(self, price: float) -> float:
        return self.orientation.sign * (price - self.anchor)

    def _touch_distance(self) -> float:
        u = self._profile.locate(self.consumed)
        for price, _ in self.queue:
            u = min(u, self._distance(price))
        return u

    @property
    def total_mass(self) -> float:
        return self._profile.total - self.consumed + math.fsum(q for _, q in self.queue)

    @property
    def reference_price(self) -> float:
        """Current touch: the best remaining price, D(0)."""
        u = self._touch_distance()
        if math.isinf(u):
            u = self._profile.support_end()
        return self._profile.price(u)

    def density_at(self, price: float) -> float:
        """Profile density just beyond ``price`` (away from the spread)."""
        return self._profile.density_at(self._distance(price))[0]


class Fill(NamedTuple):
    source: str  # "queue" or "book"
    price: float  # average execution price
    qty: float
    cost: float


class Execution(NamedTuple):
    side: BookSide
    fills: tuple[Fill, ...]
    cost: float
    excess: float = 0.0  # sum of (price - anchor) * qty over the fills


def execute(side: BookSide, x: float) -> Execution:
    """Walk a market order of ``x`` shares through ``side`` in price priority.

    Queued (trader-placed) atoms fill before profile liquidity at the same
    price.  Returns the post-trade side, the fills and the total cash value.
    """
    x = float(x)
    if not math.isfinite(x) or x < 0:
        raise ValidationError(f"order size must be finite and >= 0, got {x!r}")
    if x == 0:
        return Execution(side, (), 0.0)
    prof = side._profile
    remaining = Fraction(x)
    consumed = Fraction(side.consumed)
    touch = prof.locate(side.consumed)
    fills: list[Fill] = []
    excess: list[float] = []
    queue: list[tuple[float, float]] = []

    def take_profile(amount: Fraction) -> None:
        nonlocal consumed, remaining
        start = consumed
        consumed += amount
        remaining -= amount
        cost = prof.cost_between(float(start), float(consumed))
        excess.append(prof.cost_between(float(start), float(consumed), from_anchor=True))
        q = float(amount)
        fills.append(Fill("book", cost / q, q, cost))

    for price, qty in sorted(side.queue, key=lambda a: side._distance(a[0])):
        if remaining == 0:
            queue.append((price, qty))
            continue
        u = side._distance(price)
        # price space decides priority; the distance roundtrip can drift an ulp
        if u > touch and price != prof.price(touch):
            ahead = Fraction(prof.mass_upto(u, inclusive=False)) - consumed
            if ahead > 0:
                take_profile(min(ahead, remaining))
                touch = prof.locate(float(consumed))
        if remaining == 0:
            queue.append((price, qty))
            continue
        take = min(Fraction(qty), remaining)
        remaining -= take
        fills.append(Fill("queue", price, float(take), price * float(take)))
        excess.append(side.orientation.sign * u * float(take))
        left = Fraction(qty) - take
        if left > 0:
            queue.append((price, float(left)))

    if remaining > 0:
        if not math.isinf(prof.total) and consumed + remaining > Fraction(prof.total):
            raise InsufficientDepth(
                f"order of {x} shares exceeds the {side.orientation.value} side mass {side.total_mass}")
        take_profile(remaining)

    new_side = replace(side, consumed=float(consumed), queue=tuple(queue))
    return Execution(new_side, tuple(fills), math.fsum(f.cost for f in fills), math.fsum(excess))


def depth(side: BookSide, s: float) -> float:
    """F(s): shares resting between the touch and price ``s`` inclusive."""
    u = side._distance(float(s))
    if u < 0:
        return 0.0
    prof = side._profile
    book = 0.0
    if u >= prof.locate(side.consumed):
        book = max(prof.mass_upto(u) - side.consumed, 0.0)
    queued = math.fsum(q for p, q in side.queue if side._distance(p) <= u)
    return book + queued


def marginal_price(side: BookSide, x: float) -> float:
    """D(x): the touch after ``x`` shares have been taken by market order.

    Right quasi-inverse of the depth in distance coordinates: for the ask this
    is inf{s : F+(s) > x}, for the bid sup{s : F-(s) > x}.  At exactly the
    total mass of a finite side the end of the support is returned.
    """
    return execute(side, x).side.reference_price


def cost_buy(ask: BookSide, x: float) -> float:
    """H+(x): cash paid to buy ``x`` shares by market order."""
    if ask.orientation is not Orientation.ASK:
        raise ValidationError("cost_buy needs an ask side")
    return execute(ask, x).cost


def revenue_sell(bid: BookSide, x: float) -> float:
    """H-(x): cash received for selling ``x`` shares by market order (>= 0)."""
    if bid.orientation is not Orientation.BID:
        raise ValidationError("revenue_sell needs a bid side")
    return execute(bid, x).cost


def apply_market_buy(ask: BookSide, x: float) -> BookSide:
    if ask.orientation is not Orientation.ASK:
        raise ValidationError("market buys execute against the ask side")
    return execute(ask, x).side


def apply_market_sell(bid: BookSide, x: float) -> BookSide:
    if bid.orientation is not Orientation.BID:
        raise ValidationError("market sells execute against the bid side")
    return execute(bid, x).side


def insert_limit(side: BookSide, price: float, qty: float) -> BookSide:
    """Rest a limit order with first priority at ``price``."""
    price, qty = float(price), float(qty)
    if not qty > 0:
        raise ValidationError(f"limit order quantity must be > 0, got {qty}")
    if side._distance(price) < side._distance(side.reference_price):
        raise PriceInsideSpread(
            f"limit order at {price} would cross the {side.orientation.value} touch {side.reference_price}")
    queue = list(side.queue)
    for i, (p, q) in enumerate(queue):
        if p == price:
            queue[i] = (p, q + qty)
            break
    else:
        queue.append((price, qty))
    return replace(side, queue=tuple(queue))


def insert_limit_sell(ask: BookSide, price: float, qty: float) -> BookSide:
    if ask.orientation is not Orientation.ASK:
        raise ValidationError("limit sells rest on the ask side")
    return insert_limit(ask, price, qty)


def insert_limit_buy(bid: BookSide, price: float, qty: float) -> BookSide:
    if bid.orientation is not Orientation.BID:
        raise ValidationError("limit buys rest on the bid side")
    return insert_limit(bid, price, qty)


class TaylorTerms(NamedTuple):
    cost: float
    price: float


def taylor_expansion(side: BookSide, x: float, order: int = 3) -> TaylorTerms:
    """Truncated small-trade expansion of H and D around the touch.

    Order 2 keeps the spread and linear impact terms; order 3 adds the
    curvature term driven by the one-sided slope of the density.  For the bid
    the returned cost is the (positive) revenue H-.
    """
    if order not in (2, 3):
        raise ValidationError(f"order must be 2 or 3, got {order}")
    x = float(x)
    touch = side.reference_price
    u = side._distance(touch)
    queued_here = any(side._distance(p) == u for p, _ in side.queue)
    if queued_here or any(p.is_atom and p.start == u and p.mass0 + p.mass > side.consumed
                          for p in side._profile.pieces):
        raise AtomAtTouch(f"an atom rests at the touch {touch}")
    if x == 0:
        return TaylorTerms(0.0, touch)
    rho, slope = side._profile.density_at(u)
    if rho <= 0:
        raise ValidationError(f"density vanishes at the touch {touch}")
    impact = x / rho
    area = x * x / (2 * rho)
    if order == 3:
        impact -= slope * x * x / (2 * rho**3)
        area -= slope * x**3 / (6 * rho**3)
    sign = side.orientation.sign
    return TaylorTerms(touch * x + sign * area, touch + sign * impact)


@dataclass(frozen=True)
class LimitOrderBook:
    ask: BookSide
    bid: BookSide

    def __post_init__(self) -> None:
        if self.ask.orientation is not Orientation.ASK or self.bid.orientation is not Orientation.BID:
            raise ValidationError("LimitOrderBook needs an ask side and a bid side")
        if self.bid.reference_price > self.ask.reference_price:
            raise ValidationError(
                f"crossed book: bid {self.bid.reference_price} above ask {self.ask.reference_price}")

    @classmethod
    def constant(cls, ask_price: float, bid_price: float, rho_ask: float, rho_bid: float | None = None) -> LimitOrderBook:
        rho_bid = rho_ask if rho_bid is None else rho_bid
        return cls(BookSide.ask(ask_price, Constant(rho_ask)), BookSide.bid(bid_price, Constant(rho_bid)))

    @property
    def spread(self) -> float:
        return self.ask.reference_price - self.bid.reference_price


def constant_rho(side: BookSide) -> float | None:
    """Density of a side that is constant from its touch onwards, else None.

    Queued atoms and resting profile atoms disqualify the side.
    """
    if side.queue or side.atoms:
        return None
    d = side.density
    if isinstance(d, Constant) and d.rho > 0:
        return d.rho
    if isinstance(d, Affine) and d.slope == 0 and d.rho0 > 0:
        return d.rho0
    if isinstance(d, PiecewiseConstant):
        u = side._distance(side.reference_price)
        pieces = [p for p in side._profile.pieces if p.end > u]
        if (len(pieces) == 1 and math.isinf(pieces[0].end) and pieces[0].b == 0
                and side.orientation is Orientation.ASK):
            return pieces[0].c
    return None
