"""Command-line entry point: ``lobarb <command> SCENARIO [options]``."""
from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
from dataclasses import asdict

import numpy as np

from . import belief, equilibrium, strategies, taxation
from . import book as lob
from .errors import LOBError, ValidationError
from .scenario import Scenario, load_scenario

SIG = 12


def fmt(v: float) -> str:
    return f"{v:.{SIG}g}"


def _clean(obj):
    """Round floats to 12 significant digits; map non-finite values to null."""
    if isinstance(obj, float):
        return float(fmt(obj)) if math.isfinite(obj) else None
    if isinstance(obj, dict):
        return {k: _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    return obj


def dump_json(obj) -> str:
    return json.dumps(_clean(obj), indent=2, sort_keys=True) + "\n"


def dump_csv(header: list[str], rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([fmt(v) if isinstance(v, float) else v for v in row])
    return buf.getvalue()


def _need(value, what: str):
    if value is None:
        raise ValidationError(f"{what} is required (set it in the scenario or on the command line)")
    return value


def _side_state(side: lob.BookSide) -> dict:
    return {"reference_price": side.reference_price, "consumed": side.consumed,
            "queue": [list(a) for a in side.queue]}


def _book_state(book: lob.LimitOrderBook) -> dict:
    return {"ask": _side_state(book.ask), "bid": _side_state(book.bid)}


def cmd_quote(sc: Scenario, args) -> str:
    rows = []
    for x in args.x:
        rows.append([x, lob.marginal_price(sc.book.ask, x), lob.marginal_price(sc.book.bid, x),
                     lob.cost_buy(sc.book.ask, x), lob.revenue_sell(sc.book.bid, x)])
    return dump_csv(["x", "ask", "bid", "cost_buy", "revenue_sell"], rows)


def cmd_frontrun(sc: Scenario, args) -> str:
    y = _need(args.y if args.y is not None else sc.bob_quantity, "--y")
    x = args.x if args.x is not None else strategies.optimal_front_run(sc.book, y, cap_at_y=args.cap)
    out = strategies.run_strategy1(sc.book, y, x)
    if args.delta_csv:
        stages = [("before", sc.book), ("intermediate", out.intermediate_book), ("after", out.post_book)]
        rows = [[name, side, getattr(b, side).reference_price, getattr(b, side).consumed,
                 math.fsum(q for _, q in getattr(b, side).queue)]
                for name, b in stages for side in ("ask", "bid")]
        with open(args.delta_csv, "w") as fh:
            fh.write(dump_csv(["stage", "side", "reference_price", "consumed", "queued"], rows))
    return dump_json({
        "bob_quantity": y,
        "alice_trade": out.alice_trade,
        "alice_profit": out.alice_profit,
        "bob_cost": out.bob_cost,
        "total_buy_volume": out.total_buy_volume,
        "churn": out.churn,
        "intermediate_book": _book_state(out.intermediate_book),
        "post_book": _book_state(out.post_book),
    })


def _rate_range(text: str) -> tuple[float, float]:
    lo, sep, hi = text.partition("..")
    try:
        if not sep:
            raise ValueError
        return float(lo), float(hi)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected r1..r2, got {text!r}") from None


def cmd_tax_sweep(sc: Scenario, args) -> str:
    y = _need(args.y if args.y is not None else sc.bob_quantity, "--y")
    lo, hi = args.rates
    if args.steps < 1:
        raise ValidationError("--steps must be >= 1")
    rows = []
    for R in np.linspace(lo, hi, args.steps) if args.steps > 1 else [lo]:
        tax = taxation.TaxSchedule(r_m=float(R), r_l=0.0)
        rows.append([tax.R, taxation.y_min(sc.book, tax), taxation.taxed_front_run_profit(sc.book, tax, y),
                     taxation.tax_revenue(sc.book, tax, y, False), taxation.tax_revenue(sc.book, tax, y, True)])
    return dump_csv(["R", "y_min", "profit", "revenue_no_alice", "revenue_alice"], rows)


def cmd_prior_opt(sc: Scenario, args) -> str:
    prior = _need(sc.prior, "prior")
    sol = belief.solve_under_prior(sc.book, prior)
    out = {
        "x": sol.x,
        "expected_profit": sol.value,
        "candidates": [{"x": c.x, "expected_profit": c.value, "residual": c.residual, "origin": c.origin}
                       for c in sol.candidates],
        "closed_form": belief.uniform_closed_form(sc.book, prior.theta)
        if isinstance(prior, belief.UniformPrior) else None,
    }
    if args.mc:
        mean, se = belief.monte_carlo_expected_profit(sc.book, prior, sol.x, args.mc, sc.seed)
        out["monte_carlo"] = {"draws": args.mc, "seed": sc.seed, "mean": mean, "stderr": se}
    return dump_json(out)


def cmd_equilibrium(sc: Scenario, args) -> str:
    demand = _need(sc.demand, "demand")
    out = equilibrium.equilibrium_report(sc.book, demand, sc.tax).to_dict()
    if args.band_check:
        out["band_check"] = equilibrium.band_battery(args.band_check, sc.seed)
    return dump_json(out)


def cmd_churn(sc: Scenario, args) -> str:
    return fmt(strategies.churn(args.volume, sc.book, args.ask_after)) + "\n"


def cmd_reconcile_jp(sc: Scenario, args) -> str:
    y = _need(args.y if args.y is not None else sc.bob_quantity, "--y")
    return dump_json(asdict(strategies.jp_reconcile(sc.book, y, args.alpha, args.book_value)))


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="lobarb", description="Latency arbitrage on a single-instant limit order book.")
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("scenario", help="scenario file (.json, .yaml)")
    common.add_argument("--seed", type=int, help="override the scenario seed")
    common.add_argument("--out", help="write the report here instead of stdout")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("quote", parents=[common], help="marginal prices and costs per size")
    p.add_argument("--x", type=float, action="append", required=True, help="order size (repeatable)")
    p.set_defaults(func=cmd_quote)

    p = sub.add_parser("frontrun", parents=[common], help="replay the front-running round trip")
    p.add_argument("--y", type=float, help="Bob's order (default: scenario bob_quantity)")
    p.add_argument("--x", type=float, help="Alice's position (default: optimal)")
    p.add_argument("--cap", action="store_true", help="restrict the optimal search to x <= y")
    p.add_argument("--delta-csv", help="also write per-stage book state as CSV")
    p.set_defaults(func=cmd_frontrun)

    p = sub.add_parser("tax-sweep", parents=[common], help="threshold and revenue across overall tax rates")
    p.add_argument("--rates", type=_rate_range, required=True, help="r1..r2")
    p.add_argument("--steps", type=int, required=True)
    p.add_argument("--y", type=float)
    p.set_defaults(func=cmd_tax_sweep)

    p = sub.add_parser("prior-opt", parents=[common], help="optimal position under a prior on Bob's size")
    p.add_argument("--mc", type=int, default=0, help="Monte Carlo draws for a cross-check")
    p.set_defaults(func=cmd_prior_opt)

    p = sub.add_parser("equilibrium", parents=[common], help="surpluses, deadweight loss and tax bands")
    p.add_argument("--band-check", type=int, default=0, metavar="N", help="run N random band scenarios")
    p.set_defaults(func=cmd_equilibrium)

    p = sub.add_parser("churn", parents=[common], help="volume in excess of the ask move")
    p.add_argument("--volume", type=float, required=True)
    p.add_argument("--ask-after", type=float, required=True)
    p.set_defaults(func=cmd_churn)

    p = sub.add_parser("reconcile-jp", parents=[common], help="single-jump profit vs optional-integration term")
    p.add_argument("--alpha", type=float, required=True)
    p.add_argument("--y", type=float)
    p.add_argument("--book-value", type=float, help="price Alice marks her shares at (default: post-trade mid)")
    p.set_defaults(func=cmd_reconcile_jp)
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        sc = load_scenario(args.scenario)
        if args.seed is not None:
            sc = Scenario(sc.book, sc.demand, sc.tax, sc.prior, sc.bob_quantity, args.seed)
        text = args.func(sc, args)
    except LOBError as exc:
        sys.stderr.write(json.dumps({"error": exc.code, "message": str(exc)}) + "\n")
        return exc.exit_code
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    return 0


if __name__ == "__main__":
    sys.exit(main())
