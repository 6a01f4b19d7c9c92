"""Fixed-point token amounts.

Every on-ledger amount (ETH block rewards, cross-chain token-worth bribes)
is an integer count of nano-units (1e-9 tokens).  Integer arithmetic keeps
conservation checks exact; floats appear only in the closed-form economics
calculators, which never feed a ledger.
"""

from __future__ import annotations

from decimal import ROUND_HALF_EVEN, Decimal

NANO = 10**9


def to_nano(amount: int | float | str | Decimal) -> int:
    """Convert a token amount to integer nano-units (rounded half-even)."""
    if isinstance(amount, int):
        return amount * NANO
    # str() first so binary-float noise (0.1 -> 0.1000000000000000055...)
    # does not leak into the fixed-point value.
    d = Decimal(str(amount)) * NANO
    return int(d.quantize(Decimal(1), rounding=ROUND_HALF_EVEN))


def from_nano(units: int) -> float:
    """Nano-units back to a float token amount (display/analysis only)."""
    return units / NANO


def format_nano(units: int) -> str:
    """Fixed 9-decimal string, locale independent, for CSV export."""
    sign = "-" if units < 0 else ""
    whole, frac = divmod(abs(units), NANO)
    return f"{sign}{whole}.{frac:09d}"
