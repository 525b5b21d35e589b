"""Shared generators, tolerance checks and brute-force oracles for the test suite."""
from __future__ import annotations

import math

import numpy as np

from lobarb.book import Affine, BookSide, Constant, LimitOrderBook, PiecewiseConstant
from lobarb.oracle import TickSide

LOT = 1e-3
ABS_FLOOR = 1e-9


def close(a: float, b: float, rtol: float, floor: float = ABS_FLOOR) -> bool:
    return abs(a - b) <= max(rtol * max(abs(a), abs(b)), floor)


def on_lot(v: float) -> float:
    return round(v / LOT) * LOT


def random_density(rng: np.random.Generator, orientation: str, anchor: float, kind: int | None = None):
    kind = int(rng.integers(3)) if kind is None else kind
    if kind == 0:
        return Constant(float(rng.uniform(0.5, 20)))
    if kind == 1:
        return Affine(float(rng.uniform(0.5, 20)), float(rng.uniform(-4, 6)))
    sign = 1 if orientation == "ask" else -1
    u, segs = 0.0, []
    for _ in range(int(rng.integers(1, 5))):
        w = round(float(rng.uniform(0.2, 2.0)), 2)
        rho = 0.0 if rng.uniform() < 0.2 else float(rng.uniform(0.5, 20))
        segs.append((u, u + w, rho))
        u += w
    segs.append((u, u + 30.0, float(rng.uniform(0.5, 20))))
    prices = [tuple(sorted((anchor + sign * a, anchor + sign * b))) + (r,) for a, b, r in segs]
    return PiecewiseConstant(tuple(sorted(prices)))


def random_atoms(rng: np.random.Generator, orientation: str, anchor: float) -> tuple:
    sign = 1 if orientation == "ask" else -1
    atoms = []
    for _ in range(int(rng.integers(0, 4))):
        u = 0.0 if rng.uniform() < 0.15 else float(rng.uniform(0.0, 4.0))
        atoms.append((anchor + sign * u, float(rng.uniform(0.1, 5.0))))
    return tuple(atoms)


def random_book(rng: np.random.Generator, *, kind: int | None = None, atoms: bool = True) -> LimitOrderBook:
    ask_ref = float(rng.uniform(50, 150))
    bid_ref = ask_ref - float(rng.uniform(0.0, 2.0))
    sides = {}
    for orientation, ref in (("ask", ask_ref), ("bid", bid_ref)):
        dens = random_density(rng, orientation, ref, kind)
        at = random_atoms(rng, orientation, ref) if atoms else ()
        sides[orientation] = BookSide(orientation, ref, dens, at)
    return LimitOrderBook(sides["ask"], sides["bid"])


def tick(side: BookSide, span: float = 6.0) -> TickSide:
    return TickSide(side, span)


# ---------------------------------------------------------------------------
# Vectorized surplus-argmax oracle for constant-density equilibrium scenarios.
# Each smooth piece of a surplus is maximized by bisection on the sign of a
# central difference; concavity of each piece makes the sign change unique.

def _piece_argmax(f, lo: np.ndarray, hi: np.ndarray, iters: int = 200) -> np.ndarray:
    h = 1e-3 * np.maximum(hi - lo, 1e-300)

    def rising(y):
        return f(y + h) - f(y - h) > 0

    at_lo = ~rising(lo)
    at_hi = rising(hi)
    a, b = lo.copy(), hi.copy()
    for _ in range(iters):
        mid = 0.5 * (a + b)
        up = rising(mid)
        a = np.where(up, mid, a)
        b = np.where(up, b, mid)
    return np.where(at_lo, lo, np.where(at_hi, hi, 0.5 * (a + b)))


class SurplusOracle:
    """Brute-force optimizers for arrays of (rho, s*, b, R, y*) scenarios."""

    def __init__(self, rho, ask, slope, R, y_star):
        self.rho, self.s, self.b, self.R, self.ys = map(np.asarray, (rho, ask, slope, R, y_star))
        self.p0 = self.s + self.ys / self.rho + self.b * self.ys
        self.y_min = 2 * self.R / (1 - self.R) * self.s * self.rho

    def cost(self, y):
        return self.s * y + y * y / (2 * self.rho)

    def marginal(self, y):
        return self.s + y / self.rho

    def demand_area(self, y):
        return self.p0 * y - 0.5 * self.b * y * y

    def gamma_star(self, y):
        return self.demand_area(y) - self.cost(y)

    def gamma_alice(self, y):
        return self.demand_area(y) - y * self.marginal(y)

    def _taxed_left(self, y):
        return self.demand_area(y) - (1 + self.R) * self.cost(y)

    def _taxed_right(self, y):
        return self.demand_area(y) - (1 + self.R) * y * self.marginal(y)

    def gamma_alice_taxed(self, y):
        return np.where(y > self.y_min, self._taxed_right(y), self._taxed_left(y))

    def argmax_alice(self):
        return _piece_argmax(self.gamma_alice, np.zeros_like(self.ys), self.ys)

    def argmax_alice_taxed(self):
        zero = np.zeros_like(self.ys)
        top = np.maximum(self.ys, self.y_min)
        left = _piece_argmax(self._taxed_left, zero, self.y_min)
        # right piece is open at y_min; its supremum there is below the left value
        right = _piece_argmax(self._taxed_right, self.y_min, top)
        vl, vr = self._taxed_left(left), self._taxed_right(right)
        right_ok = (right > self.y_min) & (vr > vl)
        return np.where(right_ok, right, left)


def lognormal_scenarios(n: int, seed: int):
    rng = np.random.default_rng(seed)
    rho = np.exp(rng.uniform(math.log(0.1), math.log(100), n))
    ask = np.exp(rng.uniform(0.0, math.log(1000), n))
    R = np.exp(rng.uniform(math.log(1e-4), math.log(0.05), n))
    slope = np.where(rng.uniform(size=n) < 0.25, 0.0, np.exp(rng.uniform(math.log(1e-3), 0.0, n)))
    ym = 2 * R / (1 - R) * ask * rho
    ys = ym * np.exp(rng.uniform(math.log(0.05), math.log(20), n))
    return rho, ask, slope, R, ys
