"""Scalar maximization on an interval: coarse grid, then bounded Brent refinement."""
from __future__ import annotations

from typing import Callable, Iterable

import numpy as np
from scipy.optimize import minimize_scalar

GRID_POINTS = 1000
XTOL = 1e-10
TIE_RTOL = 1e-12


def grid_argmax(f: Callable[[float], float], lo: float, hi: float, *, extra: Iterable[float] = (),
                n: int = GRID_POINTS, refine: int = 3, xtol: float = XTOL) -> tuple[float, float]:
    """Return ``(x, f(x))`` maximizing ``f`` on ``[lo, hi]``.

    ``extra`` points (known kinks, endpoints of interest) join the grid.  The
    ``refine`` best grid points are polished on each neighbouring cell
    separately, so a kink between cells never confuses the line search.  Values within
    ``TIE_RTOL`` of the best count as ties, which go to the smaller x.
    """
    if hi <= lo:
        return lo, f(lo)
    pts = np.union1d(np.linspace(lo, hi, n + 1), [p for p in extra if lo <= p <= hi])
    vals = np.array([f(float(p)) for p in pts])
    best = [(vals[i], -pts[i]) for i in range(len(pts))]
    for i in np.argsort(-vals, kind="stable")[:refine]:
        for a, b in ((i - 1, i), (i, i + 1)):
            if a < 0 or b >= len(pts):
                continue
            res = minimize_scalar(lambda t: -f(t), bounds=(pts[a], pts[b]), method="bounded",
                                  options={"xatol": xtol})
            best.append((-res.fun, -float(res.x)))
    top = max(v for v, _ in best)
    # values equal up to rounding count as ties
    v, negx = max(((v, negx) for v, negx in best if v >= top - TIE_RTOL * max(1.0, abs(top))),
                  key=lambda t: t[1])
    return -negx, float(v)

