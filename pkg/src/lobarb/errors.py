"""Exception hierarchy shared by the library and the CLI.

Every error carries a machine-readable ``code`` and the process exit status the
CLI uses when it surfaces the error.
"""
from __future__ import annotations


class LOBError(Exception):
    code = "error"
    exit_code = 1


class ValidationError(LOBError, ValueError):
    code = "validation"
    exit_code = 2


class ParseError(ValidationError):
    code = "parse"

    def __init__(self, message: str, *, line: int | None = None, field: str | None = None):
        where = []
        if line is not None:
            where.append(f"line {line}")
        if field is not None:
            where.append(f"field {field!r}")
        super().__init__(f"{message} ({', '.join(where)})" if where else message)
        self.line = line
        self.field = field


class PriceInsideSpread(ValidationError):
    code = "price_inside_spread"


class AtomAtTouch(ValidationError):
    code = "atom_at_touch"


class RateOutOfRange(ValidationError):
    code = "rate_out_of_range"


class NonconstantDensity(ValidationError):
    code = "nonconstant_density"


class AsymmetricBook(ValidationError):
    code = "asymmetric_book"


class NonpositiveTheta(ValidationError):
    code = "nonpositive_theta"


class InsufficientDepth(LOBError):
    code = "insufficient_depth"
    exit_code = 3


class NoRoot(InsufficientDepth):
    """Demand stays above the marginal price over the whole book."""

    code = "no_root"


class NonConvergence(LOBError, ArithmeticError):
    code = "non_convergence"
    exit_code = 4
