"""Half-line quadrature and contour-integral evaluation.

The spectral formulas need two kinds of integrals: smooth oscillatory-decaying
integrands on [0, inf), handled by adaptive composite Gauss-Legendre panels,
and counter-clockwise contour integrals around the spectrum {a_n}, which are
rational in the integration variable and therefore reduce exactly to a residue
sum.  The residue sum alternates in sign for sorted spectra, so it is
accumulated largest-first with compensated addition and reports how much
cancellation occurred; a spectrally convergent elliptic trapezoid rule serves
as an independent oracle for it.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .errors import GeometryError, IllConditionedSpectrumError, IntegrationFailureError
from .logval import LogValue
from .phase import TemperatureSpectrum

_GL_ORDER = 24
_GL_NODES, _GL_WEIGHTS = np.polynomial.legendre.leggauss(_GL_ORDER)
_MAX_PANEL_DEPTH = 30
_CANCELLATION_GUARD = 1e-6


@dataclass(frozen=True)
class ResidueSumResult:
    """Value of a residue sum plus the largest-term-to-sum ratio."""

    value: float
    cancellation: float

    def __post_init__(self):
        if not math.isfinite(self.value):
            raise ValueError("residue sum value must be finite")
        if self.cancellation < 1.0:
            raise ValueError("cancellation factor is >= 1 by definition")


def _gl_panel(f: Callable[[float], float], a: float, b: float) -> float:
    mid = 0.5 * (a + b)
    half = 0.5 * (b - a)
    return half * math.fsum(w * f(mid + half * x) for x, w in zip(_GL_NODES, _GL_WEIGHTS))


def _adaptive_panel(f, a, b, rel_tol, abs_floor, depth=0):
    coarse = _gl_panel(f, a, b)
    mid = 0.5 * (a + b)
    fine = _gl_panel(f, a, mid) + _gl_panel(f, mid, b)
    if abs(fine - coarse) <= max(abs_floor, rel_tol * abs(fine)):
        return fine
    if depth >= _MAX_PANEL_DEPTH:
        raise IntegrationFailureError(
            f"panel [{a}, {b}] failed to converge at depth {depth}", partial=fine
        )
    left = _adaptive_panel(f, a, mid, rel_tol, 0.5 * abs_floor, depth + 1)
    right = _adaptive_panel(f, mid, b, rel_tol, 0.5 * abs_floor, depth + 1)
    return left + right


def integrate_halfline(
    f: Callable[[float], float],
    decay_rate: float,
    rel_tol: float = 1e-12,
    abs_tol: float = 1e-300,
    onset: float = 0.0,
    max_doublings: int = 60,
) -> float:
    """Integrate f over [0, inf) assuming |f(t)| <= M exp(-decay_rate*t/2)
    beyond `onset`.

    Composite panels [0, T0], [T0, 2*T0], ... with T0 = max(1, onset); the
    upper end doubles until the last panel contributes less than
    0.1*(rel_tol*|total| + abs_tol).
    """
    if decay_rate <= 0.0:
        raise ValueError(f"decay_rate must be positive, got {decay_rate}")
    t0 = max(1.0, onset)
    total = 0.0
    lo, hi = 0.0, t0
    for _ in range(max_doublings):
        floor = 0.01 * (rel_tol * abs(total) + abs_tol)
        panel = _adaptive_panel(f, lo, hi, 0.1 * rel_tol, floor)
        total += panel
        if hi > onset and abs(panel) < 0.1 * (rel_tol * abs(total) + abs_tol):
            return total
        lo, hi = hi, 2.0 * hi
    raise IntegrationFailureError(
        f"half-line integral not converged after {max_doublings} doublings",
        partial=total,
    )


def _as_logvalue(value) -> LogValue:
    if isinstance(value, LogValue):
        return value
    return LogValue.from_float(float(value))


def residue_sum(
    spectrum: TemperatureSpectrum,
    numerator: Callable[[float], LogValue],
) -> ResidueSumResult:
    """Evaluate (1/2*pi*i) * oint du f(u) / prod_n (a_n - u) over a contour
    enclosing all a_n, i.e. sum_k -f(a_k) / prod_{m != k} (a_m - a_k).

    Terms are assembled in log space, summed in descending magnitude with
    compensated accumulation, and the largest-term/sum ratio is reported.
    An exactly vanishing sum (numerator degree deficit >= 2) is returned as
    0 with cancellation inf rather than raised.
    """
    spectrum.require_distinct()
    a = spectrum.a
    terms = []
    for k, ak in enumerate(a):
        log_prod = 0.0
        sign_prod = 1
        for m, am in enumerate(a):
            if m == k:
                continue
            diff = am - ak
            log_prod += math.log(abs(diff))
            if diff < 0.0:
                sign_prod = -sign_prod
        fk = _as_logvalue(numerator(ak))
        terms.append(-fk * LogValue.from_log(-log_prod, sign_prod))

    live = [t for t in terms if t.sign != 0]
    if not live:
        return ResidueSumResult(0.0, 1.0)
    live.sort(key=lambda t: t.log_mag, reverse=True)
    peak = live[0].log_mag
    total = 0.0
    comp = 0.0
    for t in live:  # Kahan on the peak-scaled terms
        y = t.sign * math.exp(t.log_mag - peak) - comp
        s = total + y
        comp = (s - total) - y
        total = s
    if total == 0.0:
        return ResidueSumResult(0.0, math.inf)
    cancellation = max(1.0, 1.0 / abs(total))
    eps = 2.220446049250313e-16
    value_log = peak + math.log(abs(total))
    if cancellation * eps > _CANCELLATION_GUARD:
        raise IllConditionedSpectrumError(
            f"residue sum cancelled by a factor {cancellation:.3e}; "
            "result unreliable in double precision",
            value=math.copysign(math.exp(value_log), total) if value_log < 700 else None,
            cancellation=cancellation,
        )
    if value_log > 709.0:
        raise IllConditionedSpectrumError(
            "residue sum magnitude overflows double range",
            value=None,
            cancellation=cancellation,
        )
    return ResidueSumResult(math.copysign(math.exp(value_log), total), cancellation)


def contour_quadrature(
    spectrum: TemperatureSpectrum,
    excluded_point: float,
    numerator: Callable[[complex], complex],
    nodes: int = 128,
) -> float:
    """Trapezoid rule for the same contour integral on an ellipse that
    encloses all a_n and leaves `excluded_point` (a negative real) outside.

    Semi-axes clear the spectrum by 25% of its spread and keep the excluded
    point outside by at least 25% of its gap to the spectrum; the rule is
    spectrally convergent for integrands analytic in that annular region.
    """
    if nodes < 64:
        raise ValueError(f"contour quadrature needs nodes >= 64, got {nodes}")
    if excluded_point >= 0.0:
        raise GeometryError(f"excluded point must be negative, got {excluded_point}")
    a = spectrum.a
    amin, amax = min(a), max(a)
    spread = amax - amin
    clearance = 0.25 * spread if spread > 0.0 else 0.5 * amax
    center = 0.5 * (amin + amax)
    rx = 0.5 * spread + clearance
    gap = amin - excluded_point  # > 0 since excluded < 0 < amin
    rx_cap = center - excluded_point - 0.25 * gap
    rx = min(rx, rx_cap)
    if rx <= 0.5 * spread or rx <= 0.0:
        raise GeometryError(
            f"no ellipse encloses the spectrum while excluding {excluded_point}"
        )
    ry = 0.6 * rx

    total = 0j
    step = 2.0 * math.pi / nodes
    for j in range(nodes):
        theta = step * j
        u = complex(center + rx * math.cos(theta), ry * math.sin(theta))
        du = complex(-rx * math.sin(theta), ry * math.cos(theta))
        denom = 1.0 + 0j
        for an in a:
            denom *= an - u
        total += numerator(u) / denom * du
    value = total * step / (2j * math.pi)
    return value.real


def bessel_phi(nu: int, u: complex, y: float, max_terms: int = 400) -> complex:
    """The entire function u^{-nu/2} I_nu(2 sqrt(u y)) = y^{nu/2} *
    sum_n (u y)^n / (n! (n + nu)!), safe for complex u."""
    if y < 0.0:
        raise ValueError(f"bessel_phi requires y >= 0, got {y}")
    w = u * y
    term = 1.0 / math.exp(math.lgamma(nu + 1))
    total = term
    for n in range(1, max_terms):
        term *= w / (n * (n + nu))
        total += term
        if abs(term) <= 1e-17 * max(abs(total), 1e-300):
            break
    return total * y ** (0.5 * nu)


class KernelContourNumerator:
    """Numerator of the quenched-kernel contour integral at fixed (t, y):
    f(u) = u^{-nu/2} e^{-u} I_nu(2 sqrt(u y)) / (t + u).

    Callable on complex u for contour quadrature; `logvalue` evaluates the
    same function at a real spectrum point in (log, sign) form for the
    residue sum.
    """

    def __init__(self, nu: int, t: float, y: float):
        self.nu = nu
        self.t = t
        self.y = y

    def __call__(self, u: complex) -> complex:
        return bessel_phi(self.nu, u, self.y) * cmath.exp(-u) / (self.t + u)

    def logvalue(self, u: float) -> LogValue:
        phi = bessel_phi(self.nu, complex(u), self.y).real
        if phi == 0.0:
            return LogValue.zero()
        sign = 1 if phi > 0 else -1
        denom = self.t + u
        if denom <= 0.0:
            raise ValueError("pole -t must lie outside the spectrum")
        return LogValue.from_log(math.log(abs(phi)) - u - math.log(denom), sign)
