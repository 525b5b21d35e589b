"""Brute-force tick-discretized book, used as an independent test oracle.

The density is sampled on a price grid of width ``tick`` (midpoint rule, so
each cell holds roughly ``rho * tick`` shares spread uniformly across it).
Atoms become zero-width cells.  Grid cells are also cut at density
breakpoints and atom prices so that no cell straddles a discontinuity.
Everything is plain cumulative sums over numpy arrays; nothing here reuses the
analytic machinery in :mod:`lobarb.book`.
"""
from __future__ import annotations

import numpy as np

from .book import Affine, BookSide, Constant, Orientation, PiecewiseConstant
from .errors import InsufficientDepth

TICK = 1e-4


def _rho(density, orientation: Orientation, anchor: float, u: np.ndarray) -> np.ndarray:
    if isinstance(density, Constant):
        return np.full_like(u, density.rho)
    if isinstance(density, Affine):
        return np.maximum(density.rho0 + density.slope * u, 0.0)
    out = np.zeros_like(u)
    price = anchor + orientation.sign * u
    for lo, hi, rho in density.segments:
        out[(price > lo) & (price < hi)] = rho
    return out


def _breaks(density, orientation: Orientation, anchor: float) -> list[float]:
    if isinstance(density, Affine) and density.slope < 0:
        return [density.rho0 / -density.slope]
    if isinstance(density, PiecewiseConstant):
        return [orientation.sign * (p - anchor) for seg in density.segments for p in seg[:2]]
    return []


class TickSide:
    """Mutable tick book for one side, with price-time priority."""

    def __init__(self, side: BookSide, span: float, tick: float = TICK):
        self.sign = side.orientation.sign
        self.anchor = side.anchor
        if side.orientation is Orientation.BID:
            span = min(span, side.anchor)
        cuts = [0.0, span] + [u for u in _breaks(side.density, side.orientation, side.anchor) if 0 < u < span]
        cuts += [self.sign * (p - side.anchor) for p, _ in side.atoms]
        grid = np.union1d(np.arange(0.0, span, tick), [c for c in cuts if 0 <= c <= span])
        lo, hi = grid[:-1], grid[1:]
        mass = _rho(side.density, side.orientation, side.anchor, 0.5 * (lo + hi)) * (hi - lo)
        kind = np.ones_like(lo)
        for p, q in side.atoms:
            u = self.sign * (p - side.anchor)
            lo, hi = np.append(lo, u), np.append(hi, u)
            mass, kind = np.append(mass, q), np.append(kind, 0.0)
        order = np.lexsort((kind, lo))
        self.lo, self.hi, self.mass = lo[order], hi[order], mass[order]

    def _price(self, u):
        return self.anchor + self.sign * u

    def _cum(self) -> np.ndarray:
        return np.cumsum(self.mass)

    @property
    def touch(self) -> float:
        i = int(np.argmax(self.mass > 0))
        return float(self._price(self.lo[i]))

    def depth(self, s: float) -> float:
        u = self.sign * (s - self.anchor)
        full = self.mass[self.hi <= u].sum()
        part = (self.lo < u) & (u < self.hi)
        frac = (u - self.lo[part]) / (self.hi[part] - self.lo[part])
        return float(full + (self.mass[part] * frac).sum())

    def _split(self, x: float):
        cum = self._cum()
        if x > cum[-1] * (1 + 1e-12):
            raise InsufficientDepth(f"tick book holds only {cum[-1]} shares")
        i = min(int(np.searchsorted(cum, x, side="right")), len(cum) - 1)
        before = cum[i - 1] if i else 0.0
        return i, max(x - before, 0.0)

    def marginal_price(self, x: float) -> float:
        i, a = self._split(x)
        if self.hi[i] == self.lo[i]:
            return float(self._price(self.lo[i]))
        return float(self._price(self.lo[i] + a / self.mass[i] * (self.hi[i] - self.lo[i])))

    def cost(self, x: float) -> float:
        if x == 0:
            return 0.0
        i, a = self._split(x)
        mids = self._price(0.5 * (self.lo[:i] + self.hi[:i]))
        width = (self.hi[i] - self.lo[i]) * (a / self.mass[i] if self.mass[i] else 0.0)
        return float(np.dot(self.mass[:i], mids) + a * self._price(self.lo[i] + 0.5 * width))

    def take(self, x: float) -> float:
        """Execute a market order of ``x`` shares; return its cash value."""
        value = self.cost(x)
        if x == 0:
            return value
        i, a = self._split(x)
        cut = self.lo[i] + (a / self.mass[i] * (self.hi[i] - self.lo[i]) if self.mass[i] else 0.0)
        self.lo, self.hi, self.mass = self.lo[i:].copy(), self.hi[i:].copy(), self.mass[i:].copy()
        self.lo[0] = cut
        self.mass[0] -= a
        return value

    def insert(self, price: float, qty: float) -> None:
        """Rest ``qty`` shares at ``price`` ahead of everything else at that price."""
        u = self.sign * (price - self.anchor)
        j = int(np.searchsorted(self.hi, u, side="right"))
        if j < len(self.lo) and self.lo[j] < u < self.hi[j]:
            w = (u - self.lo[j]) / (self.hi[j] - self.lo[j])
            left = self.mass[j] * w
            self.lo = np.insert(self.lo, j + 1, u)
            self.hi = np.insert(self.hi, j, u)
            self.mass = np.insert(self.mass, j, left)
            self.mass[j + 1] -= left
            j += 1
        j = int(np.searchsorted(self.lo, u, side="left"))
        self.lo = np.insert(self.lo, j, u)
        self.hi = np.insert(self.hi, j, u)
        self.mass = np.insert(self.mass, j, qty)
