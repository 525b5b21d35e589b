"""Latency arbitrage against a single-instant limit order book."""
from .book import (
    Affine,
    BookSide,
    Constant,
    LimitOrderBook,
    Orientation,
    PiecewiseConstant,
    apply_market_buy,
    apply_market_sell,
    cost_buy,
    depth,
    insert_limit_sell,
    marginal_price,
    revenue_sell,
    taylor_expansion,
)
from .errors import LOBError
from .taxation import TaxSchedule

__version__ = "0.1.0"
