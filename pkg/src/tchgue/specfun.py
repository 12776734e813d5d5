"""Scalar special functions: integer-order Bessel J/I, generalized Laguerre
polynomials, log-Gamma.

Only integer Bessel orders are supported (the ensemble's topology index is an
integer), which keeps everything free of branch cuts.  J uses the ascending
series for small argument and Miller's backward recurrence with sum
normalization otherwise; all orders produced by one backward pass satisfy the
three-term recurrence to machine precision, which the identity checks rely on.
I uses the pure ascending series (all terms positive, no cancellation) up to
the double-precision overflow guard and a scaled backward recurrence for the
log-magnitude variant beyond it.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .errors import DomainError, UnsupportedOrderError
from .logval import LogValue

MAX_ORDER = 64

# Above this argument the ascending J series loses more than ~2 digits to
# alternating-term cancellation, so the backward recurrence takes over.  (The
# crossover is far below the overflow-driven one used for I.)
_J_SERIES_CUTOFF = 8.0

_I_DIRECT_MAX = 700.0  # e^z overflows doubles just past here


@dataclass(frozen=True)
class EvalPolicy:
    """Accuracy/effort knobs for the series evaluations."""

    rel_tol: float = 1e-14
    max_terms: int = 500

    def __post_init__(self):
        if not (0.0 < self.rel_tol < 1e-6):
            raise DomainError(f"rel_tol must lie in (0, 1e-6), got {self.rel_tol}")
        if self.max_terms < 50:
            raise DomainError(f"max_terms must be >= 50, got {self.max_terms}")


DEFAULT_POLICY = EvalPolicy()


def log_gamma(x: float) -> float:
    """ln Gamma(x) for x > 0."""
    if not (x > 0.0) or not math.isfinite(x):
        raise DomainError(f"log_gamma requires finite x > 0, got {x}")
    return math.lgamma(x)


def _check_bessel_args(order: int, z: float, name: str) -> None:
    if not isinstance(order, int):
        raise DomainError(f"{name} order must be an integer, got {order!r}")
    if order < 0:
        raise DomainError(f"{name} requires order >= 0, got {order}")
    if order > MAX_ORDER:
        raise UnsupportedOrderError(f"{name} supports order <= {MAX_ORDER}, got {order}")
    if not math.isfinite(z):
        raise DomainError(f"{name} argument must be finite, got {z}")
    if z < 0.0:
        raise DomainError(f"{name} requires z >= 0, got {z}")


def _bessel_j_series(order: int, z: float, policy: EvalPolicy) -> float:
    half = 0.5 * z
    term = half**order / math.exp(math.lgamma(order + 1))
    total = term
    zz = -(half * half)
    for n in range(1, policy.max_terms):
        term *= zz / (n * (n + order))
        total += term
        if abs(term) <= policy.rel_tol * max(abs(total), 1e-300):
            break
    return total


def _bessel_j_miller(order: int, z: float) -> float:
    start = max(order, int(z)) + int(17.0 * math.sqrt(max(z, 4.0))) + 14
    jp1 = 0.0
    jk = 1e-30
    norm = 0.0
    target = 0.0
    if start % 2 == 0:
        norm += 2.0 * jk
    if start == order:
        target = jk
    for k in range(start, 0, -1):
        jm1 = (2.0 * k / z) * jk - jp1
        jp1, jk = jk, jm1
        idx = k - 1
        if idx == 0:
            norm += jk
        elif idx % 2 == 0:
            norm += 2.0 * jk
        if idx == order:
            target = jk
        if abs(jk) > 1e250:
            jk *= 1e-250
            jp1 *= 1e-250
            norm *= 1e-250
            target *= 1e-250
    return target / norm


def bessel_j(order: int, z: float, policy: EvalPolicy = DEFAULT_POLICY) -> float:
    """Bessel function of the first kind J_order(z), integer order >= 0."""
    _check_bessel_args(order, z, "bessel_j")
    if z == 0.0:
        return 1.0 if order == 0 else 0.0
    if z <= _J_SERIES_CUTOFF:
        return _bessel_j_series(order, z, policy)
    return _bessel_j_miller(order, z)


def bessel_j_signed(order: int, z: float, policy: EvalPolicy = DEFAULT_POLICY) -> float:
    """J for any integer order, using J_{-n}(z) = (-1)^n J_n(z) for n < 0."""
    if not isinstance(order, int):
        raise DomainError(f"bessel_j_signed order must be an integer, got {order!r}")
    if abs(order) > MAX_ORDER:
        raise UnsupportedOrderError(f"bessel_j_signed supports |order| <= {MAX_ORDER}, got {order}")
    if order >= 0:
        return bessel_j(order, z, policy)
    value = bessel_j(-order, z, policy)
    return -value if (-order) % 2 else value


def _bessel_i_series(order: int, z: float, policy: EvalPolicy) -> float:
    half = 0.5 * z
    term = half**order / math.exp(math.lgamma(order + 1))
    total = term
    zz = half * half
    for n in range(1, policy.max_terms):
        term *= zz / (n * (n + order))
        total += term
        if term <= policy.rel_tol * total:
            break
    return total


def _bessel_i_scaled_miller(order: int, z: float) -> float:
    """exp(-z) * I_order(z) via backward recurrence, normalized by
    e^z = I_0 + 2 sum_{k>=1} I_k."""
    start = max(order, int(math.sqrt(z) * 17.0)) + 30
    ip1 = 0.0
    ik = 1e-30
    norm = 2.0 * ik if start >= 1 else ik
    target = ik if start == order else 0.0
    for k in range(start, 0, -1):
        im1 = (2.0 * k / z) * ik + ip1
        ip1, ik = ik, im1
        idx = k - 1
        norm += ik if idx == 0 else 2.0 * ik
        if idx == order:
            target = ik
        if ik > 1e250:
            ik *= 1e-250
            ip1 *= 1e-250
            norm *= 1e-250
            target *= 1e-250
    return target / norm


def bessel_i(order: int, z: float, policy: EvalPolicy = DEFAULT_POLICY) -> float:
    """Modified Bessel function I_order(z); direct value, needs z <= 700."""
    _check_bessel_args(order, z, "bessel_i")
    if z > _I_DIRECT_MAX:
        raise DomainError(
            f"bessel_i overflows doubles for z > {_I_DIRECT_MAX}; use bessel_i_log"
        )
    if z == 0.0:
        return 1.0 if order == 0 else 0.0
    return _bessel_i_series(order, z, policy)


def bessel_i_log(order: int, z: float, policy: EvalPolicy = DEFAULT_POLICY) -> LogValue:
    """(log I_order(z), sign) for any z >= 0; sign is +1 whenever I > 0."""
    _check_bessel_args(order, z, "bessel_i_log")
    if z == 0.0:
        return LogValue.one() if order == 0 else LogValue.zero()
    if z <= _I_DIRECT_MAX:
        return LogValue.from_float(_bessel_i_series(order, z, policy))
    scaled = _bessel_i_scaled_miller(order, z)
    return LogValue.from_log(math.log(scaled) + z, 1)


def laguerre(n: int, alpha: float, x: float) -> float:
    """Generalized Laguerre polynomial L_n^alpha(x).

    Ascending three-term recurrence in the degree (stable for real x).  In
    the hard-edge regime (huge degree, n*|x| small) the recurrence noise
    accumulated over millions of steps would dominate the quantity of
    interest, so the exact terminating hypergeometric series is used there
    instead; its alternating terms are bounded by exp(2 sqrt(n|x|)), which
    the routing condition keeps harmless.
    """
    if not isinstance(n, int) or n < 0:
        raise DomainError(f"laguerre degree must be a non-negative integer, got {n!r}")
    if not (alpha > -1.0):
        raise DomainError(f"laguerre requires alpha > -1, got {alpha}")
    if not math.isfinite(x):
        raise DomainError(f"laguerre argument must be finite, got {x}")
    if n == 0:
        return 1.0
    if n > 2000 and n * abs(x) < 150.0:
        return _laguerre_series_smallx(n, alpha, x)
    prev = 1.0
    curr = alpha + 1.0 - x
    for k in range(1, n):
        prev, curr = curr, ((2 * k + alpha + 1 - x) * curr - (k + alpha) * prev) / (k + 1)
    return curr


def _laguerre_series_smallx(n: int, alpha: float, x: float) -> float:
    """L_n^alpha(x) = binom(n+alpha, n) sum_k (-n)_k x^k / ((alpha+1)_k k!),
    terminating; accurate when n|x| is moderate."""
    log_binom = math.lgamma(n + alpha + 1) - math.lgamma(n + 1) - math.lgamma(alpha + 1)
    term = 1.0
    total = 1.0
    for k in range(min(n, 400)):
        term *= -x * (n - k) / ((k + 1) * (alpha + k + 1))
        total += term
        if abs(term) <= 1e-17 * abs(total):
            break
    return math.exp(log_binom) * total


def monic_laguerre(n: int, nu: int, x: float) -> float:
    """Monic orthogonal polynomial for weight x^nu e^-x: (-1)^n n! L_n^nu(x)."""
    value = laguerre(n, float(nu), x)
    scale = math.exp(math.lgamma(n + 1))
    return -value * scale if n % 2 else value * scale


def monic_laguerre_log(n: int, nu: int, x: float) -> LogValue:
    """monic_laguerre in (log, sign) form, safe for large n where n! overflows."""
    value = laguerre(n, float(nu), x)
    if value == 0.0:
        return LogValue.zero()
    sign = (1 if value > 0 else -1) * (-1 if n % 2 else 1)
    return LogValue.from_log(math.log(abs(value)) + math.lgamma(n + 1), sign)


def laguerre_norm(k: int, nu: int) -> LogValue:
    """Squared norm h_k = k! Gamma(k + nu + 1) of the monic polynomials,
    as (log, sign); the sign is always +1."""
    if k < 0:
        raise DomainError(f"laguerre_norm requires k >= 0, got {k}")
    if nu < 0:
        raise DomainError(f"laguerre_norm requires nu >= 0, got {nu}")
    return LogValue.from_log(math.lgamma(k + 1) + math.lgamma(k + nu + 1), 1)
