"""Signed log-magnitude arithmetic.

Factorials, Gamma values and the spectral products prod(t + a_n) overflow
doubles long before N reaches 256, so every such quantity is carried as a
(log-magnitude, sign) pair.  Addition subtracts the larger magnitude first;
adding opposite signs can lose relative precision, which callers monitor
through explicit cancellation estimates (see quadrature.ResidueSumResult).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

_NEG_INF = float("-inf")


@dataclass(frozen=True)
class LogValue:
    """A real number value = sign * exp(log_mag); sign == 0 iff log_mag == -inf."""

    log_mag: float
    sign: int

    def __post_init__(self):
        if self.sign not in (-1, 0, 1):
            raise ValueError(f"sign must be -1, 0 or +1, got {self.sign}")
        if (self.sign == 0) != (self.log_mag == _NEG_INF):
            raise ValueError("sign 0 must pair with log_mag -inf and vice versa")

    @staticmethod
    def zero() -> "LogValue":
        return LogValue(_NEG_INF, 0)

    @staticmethod
    def one() -> "LogValue":
        return LogValue(0.0, 1)

    @staticmethod
    def from_float(x: float) -> "LogValue":
        if x == 0.0:
            return LogValue.zero()
        if not math.isfinite(x):
            raise ValueError(f"cannot represent non-finite value {x}")
        return LogValue(math.log(abs(x)), 1 if x > 0 else -1)

    @staticmethod
    def from_log(log_mag: float, sign: int = 1) -> "LogValue":
        if sign == 0 or log_mag == _NEG_INF:
            return LogValue.zero()
        return LogValue(log_mag, sign)

    def to_float(self) -> float:
        if self.sign == 0:
            return 0.0
        if self.log_mag > 709.0:
            raise OverflowError(f"LogValue exp({self.log_mag}) exceeds double range")
        return self.sign * math.exp(self.log_mag)

    def __mul__(self, other: "LogValue") -> "LogValue":
        if self.sign == 0 or other.sign == 0:
            return LogValue.zero()
        return LogValue(self.log_mag + other.log_mag, self.sign * other.sign)

    def __truediv__(self, other: "LogValue") -> "LogValue":
        if other.sign == 0:
            raise ZeroDivisionError("LogValue division by zero")
        if self.sign == 0:
            return LogValue.zero()
        return LogValue(self.log_mag - other.log_mag, self.sign * other.sign)

    def __neg__(self) -> "LogValue":
        return LogValue(self.log_mag, -self.sign)

    def __add__(self, other: "LogValue") -> "LogValue":
        if self.sign == 0:
            return other
        if other.sign == 0:
            return self
        big, small = (self, other) if self.log_mag >= other.log_mag else (other, self)
        diff = small.log_mag - big.log_mag  # <= 0
        if big.sign == small.sign:
            return LogValue(big.log_mag + math.log1p(math.exp(diff)), big.sign)
        ratio = math.exp(diff)
        if ratio == 1.0:
            return LogValue.zero()
        return LogValue(big.log_mag + math.log1p(-ratio), big.sign)

    def __sub__(self, other: "LogValue") -> "LogValue":
        return self + (-other)

    def scaled(self, factor: float) -> "LogValue":
        """Multiply by a plain float without leaving log space."""
        return self * LogValue.from_float(factor) if factor != 0.0 else LogValue.zero()

    def __abs__(self) -> "LogValue":
        return LogValue(self.log_mag, abs(self.sign))

    def __repr__(self) -> str:
        return f"LogValue(log_mag={self.log_mag!r}, sign={self.sign})"


def log_sum(values) -> LogValue:
    """Sum an iterable of LogValues, largest magnitude first.

    Descending-magnitude ordering keeps the running total dominated by the
    head terms, which is what the cancellation diagnostics assume.
    """
    vals = [v for v in values if v.sign != 0]
    if not vals:
        return LogValue.zero()
    vals.sort(key=lambda v: v.log_mag, reverse=True)
    total = vals[0]
    for v in vals[1:]:
        total = total + v
    return total
