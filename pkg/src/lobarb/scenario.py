"""Scenario files (JSON or YAML) and book snapshot CSVs."""
from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass
from pathlib import Path

import yaml

from .belief import Prior, tabulated_prior, uniform_prior
from .book import Affine, BookSide, Constant, LimitOrderBook, PiecewiseConstant
from .equilibrium import LinearDemand
from .errors import InsufficientDepth, LOBError, ParseError, ValidationError
from .taxation import TaxSchedule


@dataclass(frozen=True)
class Scenario:
    book: LimitOrderBook
    demand: LinearDemand | None = None
    tax: TaxSchedule | None = None
    prior: Prior | None = None
    bob_quantity: float | None = None
    seed: int = 0


def _num(value, where: str, *, line: int | None = None) -> float:
    if isinstance(value, bool):
        raise ParseError(f"expected a number, got {value!r}", line=line, field=where)
    try:
        out = float(value)
    except (TypeError, ValueError):
        raise ParseError(f"expected a number, got {value!r}", line=line, field=where) from None
    if not math.isfinite(out):
        raise ParseError(f"expected a finite number, got {value!r}", line=line, field=where)
    return out


def _mapping(value, where: str) -> dict:
    if not isinstance(value, dict):
        raise ParseError(f"expected a mapping, got {type(value).__name__}", field=where)
    return value


def _density(spec, where: str):
    spec = _mapping(spec, where)
    if len(spec) != 1:
        raise ParseError("density needs exactly one of constant, affine, piecewise", field=where)
    kind, body = next(iter(spec.items()))
    if kind == "constant":
        return Constant(_num(_mapping(body, f"{where}.constant").get("rho"), f"{where}.constant.rho"))
    if kind == "affine":
        body = _mapping(body, f"{where}.affine")
        return Affine(_num(body.get("rho0"), f"{where}.affine.rho0"), _num(body.get("slope"), f"{where}.affine.slope"))
    if kind == "piecewise":
        if not isinstance(body, list):
            raise ParseError("expected a list of [price_lo, price_hi, rho]", field=f"{where}.piecewise")
        segs = []
        for i, seg in enumerate(body):
            if not isinstance(seg, list) or len(seg) != 3:
                raise ParseError("expected [price_lo, price_hi, rho]", field=f"{where}.piecewise[{i}]")
            segs.append(tuple(_num(v, f"{where}.piecewise[{i}]") for v in seg))
        return PiecewiseConstant(tuple(segs))
    raise ParseError(f"unknown density kind {kind!r}", field=where)


def _side(spec, where: str, orientation: str) -> BookSide:
    spec = _mapping(spec, where)
    ref = _num(spec.get("reference_price"), f"{where}.reference_price")
    atoms = []
    for i, atom in enumerate(spec.get("atoms") or []):
        if not isinstance(atom, list) or len(atom) != 2:
            raise ParseError("expected [price, qty]", field=f"{where}.atoms[{i}]")
        atoms.append((_num(atom[0], f"{where}.atoms[{i}]"), _num(atom[1], f"{where}.atoms[{i}]")))
    density = _density(spec.get("density"), f"{where}.density")
    return BookSide(orientation, ref, density, tuple(atoms))


def load_book_csv(path: str | Path) -> LimitOrderBook:
    """Read a book snapshot.

    Density rows are ``side,price_lo,price_hi,rho``; atom rows are
    ``side,price,qty,atom``.  Each side's reference price is its best price:
    the lowest ask or highest bid among segments and atoms.
    """
    segs: dict[str, list] = {"ask": [], "bid": []}
    atoms: dict[str, list] = {"ask": [], "bid": []}
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or [h.strip() for h in header] != ["side", "price_lo", "price_hi", "rho"]:
            raise ParseError("expected header side,price_lo,price_hi,rho", line=1)
        for lineno, row in enumerate(reader, start=2):
            if not row or all(not c.strip() for c in row):
                continue
            if len(row) != 4:
                raise ParseError(f"expected 4 columns, got {len(row)}", line=lineno)
            side, a, b, c = (v.strip() for v in row)
            if side not in segs:
                raise ParseError(f"side must be ask or bid, got {side!r}", line=lineno, field="side")
            if c == "atom":
                atoms[side].append((_num(a, "price", line=lineno), _num(b, "qty", line=lineno)))
            else:
                segs[side].append((_num(a, "price_lo", line=lineno), _num(b, "price_hi", line=lineno),
                                   _num(c, "rho", line=lineno)))
    sides = {}
    for side in ("ask", "bid"):
        prices = [s[0] if side == "ask" else s[1] for s in segs[side]] + [p for p, _ in atoms[side]]
        if not prices:
            raise ParseError(f"no {side} rows in book CSV")
        ref = min(prices) if side == "ask" else max(prices)
        ordered = tuple(sorted(segs[side]))
        sides[side] = BookSide(side, ref, PiecewiseConstant(ordered), tuple(atoms[side]))
    return LimitOrderBook(sides["ask"], sides["bid"])


def _read(path: Path):
    text = path.read_text()
    try:
        if path.suffix.lower() == ".json":
            return json.loads(text)
        return yaml.safe_load(text)
    except json.JSONDecodeError as exc:
        raise ParseError(exc.msg, line=exc.lineno) from None
    except yaml.YAMLError as exc:
        mark = getattr(exc, "problem_mark", None)
        raise ParseError(str(getattr(exc, "problem", exc)), line=mark.line + 1 if mark else None) from None


def load_scenario(path: str | Path) -> Scenario:
    path = Path(path)
    if not path.is_file():
        raise ValidationError(f"scenario file not found: {path}")
    raw = _mapping(_read(path), "<root>")
    unknown = set(raw) - {"book", "demand", "tax", "prior", "bob_quantity", "seed"}
    if unknown:
        raise ParseError(f"unknown keys {sorted(unknown)}", field="<root>")

    try:
        book_spec = _mapping(raw.get("book"), "book")
        if "csv" in book_spec:
            book = load_book_csv(path.parent / book_spec["csv"])
        else:
            book = LimitOrderBook(_side(book_spec.get("ask"), "book.ask", "ask"),
                                  _side(book_spec.get("bid"), "book.bid", "bid"))

        demand = None
        if raw.get("demand") is not None:
            d = _mapping(raw["demand"], "demand")
            slope = _num(d.get("slope", 0.0), "demand.slope")
            if "y_ref" in d:
                demand = LinearDemand.from_reference(book, _num(d["y_ref"], "demand.y_ref"), slope)
            else:
                demand = LinearDemand(slope, _num(d.get("intercept"), "demand.intercept"))

        tax = None
        if raw.get("tax") is not None:
            t = _mapping(raw["tax"], "tax")
            tax = TaxSchedule(_num(t.get("r_m", 0.0), "tax.r_m"), _num(t.get("r_l", 0.0), "tax.r_l"))

        prior = None
        if raw.get("prior") is not None:
            p = _mapping(raw["prior"], "prior")
            if "uniform" in p:
                prior = uniform_prior(_num(_mapping(p["uniform"], "prior.uniform").get("theta"), "prior.uniform.theta"))
            elif "tabulated" in p:
                knots = p["tabulated"]
                if not isinstance(knots, list):
                    raise ParseError("expected a list of [y, cdf]", field="prior.tabulated")
                prior = tabulated_prior([(_num(k[0], f"prior.tabulated[{i}]"), _num(k[1], f"prior.tabulated[{i}]"))
                                         for i, k in enumerate(knots)])
            else:
                raise ParseError("prior needs uniform or tabulated", field="prior")

        bob = None
        if raw.get("bob_quantity") is not None:
            bob = _num(raw["bob_quantity"], "bob_quantity")
            if bob < 0:
                raise ValidationError("bob_quantity must be >= 0")
            if bob > book.ask.total_mass:
                raise InsufficientDepth(f"bob_quantity {bob} exceeds the ask depth {book.ask.total_mass}")

        seed = raw.get("seed", 0)
        if isinstance(seed, bool) or not isinstance(seed, int):
            raise ParseError(f"seed must be an integer, got {seed!r}", field="seed")
    except LOBError:
        raise
    except (TypeError, KeyError, IndexError) as exc:
        raise ParseError(f"malformed scenario: {exc}") from None
    return Scenario(book, demand, tax, prior, bob, seed)
