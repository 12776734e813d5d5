"""Finite-N analytic quantities of the shifted chiral ensemble.

Zero-temperature objects are classical Laguerre expressions (Christoffel-
Darboux kernel, massive determinant kernels in two sizes, partition-function
ratios).  The temperature kernels are evaluated through the ensemble's
invertible structure: in the monic-Laguerre basis the Gram matrix of the
shifted weights w_a(x) = (x/a)^{nu/2} e^{-x-a} I_nu(2 sqrt(a x)) is exactly
the Vandermonde matrix V[k,l] = a_l^k, because

    int_0^inf p_k(x) w_a(x) dx = a^k,   p_k(x) = (-1)^k k! L_k^nu(x).

Solving V c(x) = (p_0(x), ..., p_{N-1}(x)) therefore gives the correlation
kernel as a single dot product against the weight column, with no quadrature
and no residue cancellation.  The same polynomial vector evaluated at
x = -m^2 yields the Bessel-I companion kernel, and the building-block
integrals B_i / Bhat_i collapse to finite Laguerre sums via

    int_0^inf t^{p + nu/2} e^{-t} J_nu(2 sqrt(x t)) dt = p! x^{nu/2} e^{-x} L_p^nu(x)

(and its I_nu analogue at x -> -m^2).  All of this is algebraically identical
to the contour-integral representation; the residue and contour routines in
`quadrature` remain as independent oracles.

The Vandermonde solve is still exponentially ill-conditioned for clustered
spectra, which is intrinsic to the representation, not to this algorithm:
the partial-fraction pieces are exponentially larger than their sum.  Every
evaluation therefore measures its own cancellation and escalates to mpmath
arbitrary precision when double precision cannot certify ~11 digits.  This is
what makes N = 128 convergence studies and the a -> 0 continuity limit
computable.

Convention: all formulas below are in raw units (the natural scale of the
matrix model, where eigenvalue spacing near the origin is O(1/N)).  A
microscopic-convention TemperatureSpectrum {a_n} with O(1) entries enters as
raw parameters {N a_n}; microscopic Dirac arguments map as
x_raw = zeta^2 / (4 N Xi) and masses as m^2_raw = mu^2 / (4 N Xi).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import mpmath as mp
import numpy as np

from .errors import ConditioningError, DomainError, PhaseError
from .logval import LogValue, log_sum
from .phase import Phase, PhaseInfo, TemperatureSpectrum
from .specfun import bessel_i, laguerre, log_gamma

_MASS_GAP = 1e-8
_COND_CAP = 1e12
_DOUBLE_GATE = 1e-11  # cond(V) * cancellation * eps must stay below this
_EPS = 2.220446049250313e-16
_MAX_DPS = 1500


@dataclass(frozen=True)
class FiniteEnsembleParams:
    """Full finite-N model definition (raw mass convention)."""

    N: int
    nu: int
    masses: tuple = ()
    temperature: Optional[TemperatureSpectrum] = None

    def __post_init__(self):
        if not (1 <= self.N <= 256):
            raise DomainError(f"N must lie in [1, 256], got {self.N}")
        if not (0 <= self.nu <= 16):
            raise DomainError(f"nu must lie in [0, 16], got {self.nu}")
        masses = tuple(float(m) for m in self.masses)
        if len(masses) > 8:
            raise DomainError(f"at most 8 flavours supported, got {len(masses)}")
        for m in masses:
            if not (math.isfinite(m) and m > 0.0):
                raise DomainError(f"masses must be finite and > 0, got {m}")
        sq = sorted(m * m for m in masses)
        for lo, hi in zip(sq, sq[1:]):
            if hi - lo < _MASS_GAP * hi:
                raise DomainError("squared masses closer than relative gap 1e-8")
        object.__setattr__(self, "masses", masses)
        if self.temperature is not None and self.temperature.n != self.N:
            raise DomainError(
                f"temperature spectrum has {self.temperature.n} entries, N = {self.N}"
            )

    @property
    def n_f(self) -> int:
        return len(self.masses)

    @property
    def raw_spectrum(self) -> tuple:
        """Spectrum in raw units, a_raw = N * a_micro."""
        if self.temperature is None:
            raise DomainError("operation requires a temperature spectrum")
        return tuple(self.N * a for a in self.temperature.a)


@dataclass(frozen=True)
class ScalingMap:
    """Microscopic rescaling x_raw = zeta^2 / (4 N xi)."""

    N: int
    xi: float

    def __post_init__(self):
        if not (self.xi > 0.0):
            raise DomainError("ScalingMap needs xi > 0 (broken phase only)")

    def x_raw(self, zeta: float) -> float:
        return zeta * zeta / (4.0 * self.N * self.xi)

    def zeta(self, x_raw: float) -> float:
        return 2.0 * math.sqrt(self.N * self.xi * x_raw)

    def density_jacobian(self, zeta: float) -> float:
        return 2.0 * zeta / (4.0 * self.N * self.xi)


def weight_zero_temp(params: FiniteEnsembleParams, x: float) -> LogValue:
    """w(x) = x^nu e^-x prod_f (x + m_f^2) in (log, sign) form."""
    if x < 0.0:
        raise DomainError(f"weight requires x >= 0, got {x}")
    if x == 0.0 and params.nu > 0:
        return LogValue.zero()
    log_w = (params.nu * math.log(x) if params.nu else 0.0) - x
    for m in params.masses:
        log_w += math.log(x + m * m)
    return LogValue.from_log(log_w, 1)


# ---------------------------------------------------------------------------
# monic Laguerre vectors and log-determinants
# ---------------------------------------------------------------------------


def _monic_vector(n: int, nu: int, x: float) -> np.ndarray:
    """p_0(x) .. p_{n-1}(x), monic recurrence
    p_{k+1} = (x - (2k + nu + 1)) p_k - k (k + nu) p_{k-1}."""
    out = np.empty(n)
    out[0] = 1.0
    if n > 1:
        out[1] = x - (nu + 1.0)
    for k in range(1, n - 1):
        out[k + 1] = (x - (2 * k + nu + 1.0)) * out[k] - k * (k + nu) * out[k - 1]
    return out


def _mp_monic_vector(n: int, nu: int, x) -> list:
    out = [mp.mpf(1)]
    if n > 1:
        out.append(x - (nu + 1))
    for k in range(1, n - 1):
        out.append((x - (2 * k + nu + 1)) * out[k] - k * (k + nu) * out[k - 1])
    return out


def _laguerre_ladder(p_max: int, nu: int, x: float) -> np.ndarray:
    """L_0^nu(x) .. L_pmax^nu(x) in one ascending pass."""
    out = np.empty(p_max + 1)
    out[0] = 1.0
    if p_max >= 1:
        out[1] = nu + 1.0 - x
    for k in range(1, p_max):
        out[k + 1] = ((2 * k + nu + 1 - x) * out[k] - (k + nu) * out[k - 1]) / (k + 1)
    return out


def logdet_signed(entries) -> tuple:
    """(det, cond) for a square matrix of LogValues, via row/column balancing
    and a pivoted factorization on the balanced double matrix."""
    n = len(entries)
    logs = np.array([[e.log_mag for e in row] for row in entries])
    signs = np.array([[float(e.sign) for e in row] for row in entries])
    row_scale = np.max(logs, axis=1)
    if np.any(np.isneginf(row_scale)):
        return LogValue.zero(), 1.0
    balanced = logs - row_scale[:, None]
    col_scale = np.max(balanced, axis=0)
    if np.any(np.isneginf(col_scale)):
        return LogValue.zero(), 1.0
    balanced = balanced - col_scale[None, :]
    mat = signs * np.exp(balanced)
    sign, logabs = np.linalg.slogdet(mat)
    cond = float(np.linalg.cond(mat))
    if sign == 0.0:
        return LogValue.zero(), cond
    total = logabs + float(np.sum(row_scale) + np.sum(col_scale))
    return LogValue.from_log(total, 1 if sign > 0 else -1), cond


def _require_cond(cond: float, what: str) -> None:
    if not math.isfinite(cond) or cond > _COND_CAP:
        raise ConditioningError(
            f"{what}: condition estimate {cond:.3e} exceeds {_COND_CAP:.0e}"
        )


# ---------------------------------------------------------------------------
# zero-temperature kernels and partition functions
# ---------------------------------------------------------------------------


def _monic_log(n: int, nu: int, x: float) -> LogValue:
    value = laguerre(n, float(nu), x)
    if value == 0.0:
        return LogValue.zero()
    sign = (1 if value > 0 else -1) * (-1 if n % 2 else 1)
    return LogValue.from_log(math.log(abs(value)) + math.lgamma(n + 1), sign)


def _monic_deriv_log(n: int, nu: int, x: float) -> LogValue:
    """d/dx of the monic polynomial, via dL_n/dx = -L_{n-1}^{nu+1}."""
    if n == 0:
        return LogValue.zero()
    value = laguerre(n - 1, float(nu + 1), x)
    if value == 0.0:
        return LogValue.zero()
    sign = (1 if value > 0 else -1) * (1 if n % 2 else -1)
    return LogValue.from_log(math.log(abs(value)) + math.lgamma(n + 1), sign)


_EQUAL_ARG_REL = 1e-6


def cd_kernel_quenched(params: FiniteEnsembleParams, x: float, y: float) -> float:
    """Polynomial part of the quenched zero-temperature kernel, via the
    Christoffel-Darboux two-term form; equal arguments use the derivative
    form instead of small-offset division."""
    if params.n_f != 0:
        raise DomainError("cd_kernel_quenched requires a quenched ensemble (N_f = 0)")
    n, nu = params.N, params.nu
    h = LogValue.from_log(math.lgamma(n) + math.lgamma(n + nu), 1)  # h_{N-1}
    if abs(x - y) <= _EQUAL_ARG_REL * max(1.0, abs(x)):
        z = 0.5 * (x + y)
        val = (
            _monic_deriv_log(n, nu, z) * _monic_log(n - 1, nu, z)
            - _monic_log(n, nu, z) * _monic_deriv_log(n - 1, nu, z)
        ) / h
        return val.to_float()
    val = (
        _monic_log(n, nu, x) * _monic_log(n - 1, nu, y)
        - _monic_log(n, nu, y) * _monic_log(n - 1, nu, x)
    ) / h
    return val.to_float() / (x - y)


def _laguerre_log(n: int, nu: int, x: float) -> LogValue:
    value = laguerre(n, float(nu), x)
    return LogValue.from_float(value)


def _mass_denominator(params: FiniteEnsembleParams) -> tuple:
    """det[L_{N+g-1}^nu(-m_f^2)] over flavours (empty det = 1)."""
    nf = params.n_f
    if nf == 0:
        return LogValue.one(), 1.0
    rows = [
        [_laguerre_log(params.N + g, params.nu, -(m * m)) for g in range(nf)]
        for m in params.masses
    ]
    return logdet_signed(rows)


def massive_kernel_zero_temp(params: FiniteEnsembleParams, x: float, y: float) -> float:
    """Polynomial part of the massive zero-temperature kernel as the
    (N_f+2) x (N_f+2) Laguerre determinant ratio."""
    if params.temperature is not None:
        raise DomainError("massive_kernel_zero_temp is a zero-temperature operation")
    if params.n_f == 0:
        return cd_kernel_quenched(params, x, y)
    n, nu, nf = params.N, params.nu, params.n_f
    den, cond_d = _mass_denominator(params)
    _require_cond(cond_d, "massive kernel denominator")

    degrees = list(range(n - 1, n + nf + 1))  # N-1 .. N+N_f
    rows = [[_laguerre_log(d, nu, -(m * m)) for d in degrees] for m in params.masses]

    equal = abs(x - y) <= _EQUAL_ARG_REL * max(1.0, abs(x))
    if equal:
        z = 0.5 * (x + y)
        rows.append([_laguerre_log(d, nu, z) for d in degrees])
        # l'Hopital row: limit of the vanishing determinant over (y - x)
        rows.append(
            [LogValue.from_float(-laguerre(d - 1, float(nu + 1), z)) for d in degrees]
        )
    else:
        rows.append([_laguerre_log(d, nu, x) for d in degrees])
        rows.append([_laguerre_log(d, nu, y) for d in degrees])
    num, cond_n = logdet_signed(rows)
    _require_cond(cond_n, "massive kernel numerator")

    pref_log = math.lgamma(n + nf + 1) - math.lgamma(n + nu)
    # The overall sign is -1 for every N_f: confirmed against a direct
    # Gram-Schmidt orthogonalization oracle and against the alternative
    # determinant representation for even and odd flavour counts alike.
    pref_sign = -1
    for m in params.masses:
        pref_log -= math.log(y + m * m) + math.log(x + m * m)
    value = num / den * LogValue.from_log(pref_log, pref_sign)
    if equal:
        return value.to_float()
    return value.to_float() / (y - x)


def massive_kernel_alt(params: FiniteEnsembleParams, x: float, y: float) -> float:
    """Same kernel via the (N_f+1) x (N_f+1) determinant whose first row holds
    quenched kernels evaluated at the (continued) mass points."""
    if params.temperature is not None:
        raise DomainError("massive_kernel_alt is a zero-temperature operation")
    if params.n_f == 0:
        return cd_kernel_quenched(params, x, y)
    n, nu, nf = params.N, params.nu, params.n_f
    quenched = FiniteEnsembleParams(N=n, nu=nu)
    first = [LogValue.from_float(cd_kernel_quenched(quenched, -(m * m), y)) for m in params.masses]
    first.append(LogValue.from_float(cd_kernel_quenched(quenched, x, y)))
    rows = [first]
    for j in range(nf):
        row = [_laguerre_log(n + j, nu, -(m * m)) for m in params.masses]
        row.append(_laguerre_log(n + j, nu, x))
        rows.append(row)
    num, cond_n = logdet_signed(rows)
    _require_cond(cond_n, "alternative kernel numerator")
    den, cond_d = _mass_denominator(params)
    _require_cond(cond_d, "alternative kernel denominator")
    pref_log = 0.0
    for m in params.masses:
        pref_log -= math.log(x + m * m)
    sign = -1 if nf % 2 else 1
    return (num / den * LogValue.from_log(pref_log, sign)).to_float()


def partition_zero_temp(params: FiniteEnsembleParams) -> LogValue:
    """Mass-dependent partition ratio Z^(N_f) / Z^(0) at zero temperature."""
    if params.temperature is not None:
        raise DomainError("partition_zero_temp is a zero-temperature operation")
    nf = params.n_f
    if nf == 0:
        return LogValue.one()
    n, nu = params.N, params.nu
    rows = [
        [_laguerre_log(n + j, nu, -(m * m)) for j in range(nf)] for m in params.masses
    ]
    det, cond = logdet_signed(rows)
    _require_cond(cond, "partition determinant")
    pref = LogValue.one()
    for f, m in enumerate(params.masses, start=1):
        pref = pref * LogValue.from_log(nu * math.log(m) + math.lgamma(f + n), 1)
    vdm = LogValue.one()
    sq = [m * m for m in params.masses]
    for i in range(nf):
        for j in range(i):
            vdm = vdm * LogValue.from_float(sq[i] - sq[j])
    return pref * det / vdm


# ---------------------------------------------------------------------------
# temperature: Gram matrix, adaptive-precision spectral core
# ---------------------------------------------------------------------------


def gram_entry(k: int, l: int, params: FiniteEnsembleParams) -> float:
    """g_{k,l} = (k-1)! L_{k-1}^nu(-a_l) with a_l the raw spectrum entry."""
    if params.n_f != 0:
        raise DomainError("the Gram matrix is a quenched (N_f = 0) object")
    raw = params.raw_spectrum
    if not (1 <= k <= params.N and 1 <= l <= params.N):
        raise DomainError(f"gram indices must lie in 1..N, got ({k}, {l})")
    return _gram_entry_log(k, params.nu, raw[l - 1]).to_float()


def _gram_entry_log(k: int, nu: int, a_raw: float) -> LogValue:
    value = laguerre(k - 1, float(nu), -a_raw)  # > 0 for a_raw > 0
    return LogValue.from_log(math.lgamma(k) + math.log(value), 1)


def partition_quenched_temp(params: FiniteEnsembleParams) -> LogValue:
    """N! det G for the quenched temperature ensemble."""
    if params.n_f != 0:
        raise DomainError("partition_quenched_temp requires N_f = 0")
    raw = params.raw_spectrum
    params.temperature.require_distinct()
    rows = [
        [_gram_entry_log(k, params.nu, al) for al in raw] for k in range(1, params.N + 1)
    ]
    det, cond = logdet_signed(rows)
    _require_cond(cond, "Gram determinant")
    if det.sign == 0:
        raise ConditioningError("Gram determinant underflowed to zero")
    return LogValue.from_log(math.lgamma(params.N + 1), 1) * det


class _SpectralCore:
    """Adaptive-precision evaluator of S(x, y) = sum_l c_l(x) Itilde_l(y)
    for one raw spectrum, where V c(x) = (p_0(x), ..., p_{N-1}(x)) and
    Itilde_l(y) = a_l^{-nu/2} e^{-a_l} I_nu(2 sqrt(a_l y)).

    The canonical quenched kernel is x^{nu/2} e^{-x} S(x, y); evaluating the
    polynomial vector at -m^2 instead gives the Bessel-I companion kernel.
    """

    def __init__(self, raw_a: tuple, nu: int):
        self.raw_a = tuple(float(a) for a in raw_a)
        self.nu = nu
        self.n = len(raw_a)
        self.scale = max(self.raw_a)  # row k of V is divided by scale^k
        self._dps_hint = 30
        self._mp_inverse = {}
        self._v = None
        self._cond_v = None
        self._double_ok = None

    def _double_ready(self) -> bool:
        if self._double_ok is None:
            if self.n > 24:
                self._double_ok = False
            else:
                v = np.vander(
                    np.asarray(self.raw_a) / self.scale, N=self.n, increasing=True
                ).T
                cond = float(np.linalg.cond(v))
                self._v = v
                self._cond_v = cond
                self._double_ok = math.isfinite(cond)
        return self._double_ok

    def _itilde_double(self, y: float) -> np.ndarray:
        a = np.asarray(self.raw_a)
        args = 2.0 * np.sqrt(a * y)
        if np.max(args) > 650.0:
            raise ConditioningError(
                "kernel argument beyond the double-stable range; no use case "
                "at desk scale reaches here"
            )
        vals = np.array([bessel_i(self.nu, float(z)) for z in args])
        return vals * np.exp(-a) * a ** (-0.5 * self.nu)

    def _try_double(self, x: float, y: float):
        if not self._double_ready():
            return None
        p = _monic_vector(self.n, self.nu, x)
        p = p * self.scale ** (-np.arange(self.n, dtype=float))
        if not np.all(np.isfinite(p)):
            return None
        c = np.linalg.solve(self._v, p)
        terms = c * self._itilde_double(y)
        s = math.fsum(terms)
        absum = float(np.sum(np.abs(terms)))
        if not math.isfinite(s) or not math.isfinite(absum):
            return None
        canc = absum / abs(s) if s != 0.0 else math.inf
        if s != 0.0 and self._cond_v * canc * _EPS < _DOUBLE_GATE:
            return float(s)
        return None

    def _inverse_at(self, dps: int):
        if dps not in self._mp_inverse:
            with mp.workdps(dps):
                v = mp.matrix(self.n, self.n)
                s = mp.mpf(self.scale)
                for l, al in enumerate(self.raw_a):
                    acc = mp.mpf(1)
                    ratio = mp.mpf(al) / s
                    for k in range(self.n):
                        v[k, l] = acc
                        acc *= ratio
                self._mp_inverse[dps] = v**-1
        return self._mp_inverse[dps]

    def _mp_s(self, x: float, y: float, dps: int):
        with mp.workdps(dps):
            vinv = self._inverse_at(dps)
            vals = _mp_monic_vector(self.n, self.nu, mp.mpf(x))
            s = mp.mpf(self.scale)
            acc = mp.mpf(1)
            for k in range(self.n):
                vals[k] /= acc
                acc *= s
            rhs = mp.matrix(vals)
            c = vinv * rhs
            ym = mp.mpf(y)
            half_nu = mp.mpf(self.nu) / 2
            terms = []
            for l, al in enumerate(self.raw_a):
                am = mp.mpf(al)
                itl = am ** (-half_nu) * mp.exp(-am) * mp.besseli(self.nu, 2 * mp.sqrt(am * ym))
                terms.append(c[l] * itl)
            s = mp.fsum(terms)
            peak = max(abs(t) for t in terms)
            if s == 0:
                return 0.0, math.inf
            canc = peak / abs(s)
            return s, float(mp.log10(canc)) if canc > 1 else 0.0

    def s_value(self, x: float, y: float) -> float:
        fast = self._try_double(x, y)
        if fast is not None:
            return fast
        dps = self._dps_hint
        for _ in range(10):
            try:
                s, lost_digits = self._mp_s(x, y, dps)
            except ZeroDivisionError:  # LU below pivot tolerance: need digits
                self._mp_inverse.pop(dps, None)
                dps = min(_MAX_DPS, 2 * dps + 20)
                continue
            if s == 0.0:
                return 0.0
            if dps >= lost_digits + 20 or dps >= _MAX_DPS:
                self._dps_hint = max(self._dps_hint, min(dps, _MAX_DPS))
                return float(s)
            dps = min(_MAX_DPS, max(int(lost_digits) + 30, 2 * dps))
        raise ConditioningError(
            f"spectral core did not stabilise below {_MAX_DPS} digits"
        )


_CORE_CACHE: dict = {}


def _core_for(params: FiniteEnsembleParams) -> _SpectralCore:
    key = (params.raw_spectrum, params.nu)
    core = _CORE_CACHE.get(key)
    if core is None:
        if len(_CORE_CACHE) > 32:
            _CORE_CACHE.clear()
        params.temperature.require_distinct()
        core = _SpectralCore(key[0], params.nu)
        _CORE_CACHE[key] = core
    return core


def quenched_kernel_temp(params: FiniteEnsembleParams, x: float, y: float) -> float:
    """Canonical quenched temperature kernel K(x, y) = x^{nu/2} e^-x S(x, y)
    (pure-cocycle prefactors dropped; diagonal values and determinants are
    representation independent)."""
    if params.n_f != 0:
        raise DomainError("quenched_kernel_temp requires N_f = 0")
    if x < 0.0 or y < 0.0:
        raise DomainError("kernel arguments must be >= 0")
    core = _core_for(params)
    if x == 0.0 and params.nu > 0:
        return 0.0
    dress = x ** (0.5 * params.nu) * math.exp(-x)
    return dress * core.s_value(x, y)


def _hatk_log(params: FiniteEnsembleParams, m: float, y: float) -> LogValue:
    core = _core_for(params)
    s = core.s_value(-(m * m), y)
    if s == 0.0:
        return LogValue.zero()
    return LogValue.from_log(
        params.nu * math.log(m) + m * m + math.log(abs(s)), 1 if s > 0 else -1
    )


def hatK_temp(params: FiniteEnsembleParams, m: float, y: float) -> float:
    """Bessel-I companion of the quenched kernel, m^nu e^{m^2} S(-m^2, y)."""
    if m <= 0.0:
        raise DomainError(f"hatK_temp requires m > 0, got {m}")
    if y < 0.0:
        raise DomainError("kernel argument must be >= 0")
    return _hatk_log(params, m, y).to_float()


def _log_elem_sym(raw_a: Sequence[float]) -> np.ndarray:
    """log e_j of the elementary symmetric polynomials of positive values."""
    n = len(raw_a)
    loge = np.full(n + 1, -np.inf)
    loge[0] = 0.0
    for a in raw_a:
        la = math.log(a)
        loge[1 : n + 1] = np.logaddexp(loge[1 : n + 1], la + loge[0:n])
    return loge


def b_integral_bare(i: int, nu: int, m: float, raw_spectrum: Sequence[float] = ()) -> LogValue:
    """B_i(m^2) = int t^{i-1+nu/2} e^-t I_nu(2 m sqrt t) prod_n (t + a_n) dt,
    as the exact finite Laguerre sum (every term positive)."""
    if i < 1:
        raise DomainError(f"B index must be >= 1, got {i}")
    if m <= 0.0:
        raise DomainError(f"B_integral requires m > 0, got {m}")
    n = len(raw_spectrum)
    loge = _log_elem_sym(raw_spectrum) if n else np.array([0.0])
    m2 = m * m
    logs = []
    for j in range(n + 1):
        p = n - j + i - 1
        lag = laguerre(p, float(nu), -m2)
        if not math.isfinite(lag):
            return _b_integral_mp(i, nu, m, raw_spectrum)
        logs.append(loge[j] + math.lgamma(p + 1) + math.log(lag))
    peak = max(logs)
    total = math.fsum(math.exp(v - peak) for v in logs)
    return LogValue.from_log(peak + math.log(total) + nu * math.log(m) + m2, 1)


def _b_integral_mp(i: int, nu: int, m: float, raw_spectrum) -> LogValue:
    with mp.workdps(40):
        m2 = mp.mpf(m) ** 2
        e = [mp.mpf(1)]
        for a in raw_spectrum:
            e = [e[0]] + [e[j] + a * e[j - 1] for j in range(1, len(e))] + [a * e[-1]]
        n = len(raw_spectrum)
        total = mp.mpf(0)
        for j in range(n + 1):
            p = n - j + i - 1
            total += e[j] * mp.factorial(p) * mp.laguerre(p, nu, -m2)
        log_mag = mp.log(total) + nu * mp.log(m) + m2
        return LogValue.from_log(float(log_mag), 1)


def B_integral(params: FiniteEnsembleParams, i: int, m: float) -> LogValue:
    if not (1 <= i <= max(params.n_f, 1)):
        raise DomainError(f"B index must lie in 1..N_f, got {i}")
    return b_integral_bare(i, params.nu, m, params.raw_spectrum)


def bhat_integral_bare(
    i: int, nu: int, x: float, raw_spectrum: Sequence[float] = ()
) -> LogValue:
    """Bhat_i(x): same sum with J_nu, i.e. Laguerre values at +x (signed)."""
    if i < 1:
        raise DomainError(f"Bhat index must be >= 1, got {i}")
    if x < 0.0:
        raise DomainError(f"Bhat_integral requires x >= 0, got {x}")
    n = len(raw_spectrum)
    loge = _log_elem_sym(raw_spectrum) if n else np.array([0.0])
    p_max = n + i - 1
    ladder = _laguerre_ladder(p_max, nu, x)
    terms = []
    for j in range(n + 1):
        p = n - j + i - 1
        lag = ladder[p]
        if lag == 0.0:
            continue
        terms.append(
            LogValue.from_log(
                loge[j] + math.lgamma(p + 1) + math.log(abs(lag)),
                1 if lag > 0 else -1,
            )
        )
    total = log_sum(terms)
    if terms and total.sign != 0:
        peak = max(t.log_mag for t in terms)
        if peak - total.log_mag > 18.0:  # ~1e8 cancellation: recompute in mp
            total = _bhat_mp(i, nu, x, raw_spectrum)
    prefactor = LogValue.zero() if (x == 0.0 and nu > 0) else LogValue.from_log(
        (0.5 * nu * math.log(x) if nu else 0.0) - x, 1
    )
    return total * prefactor


def _bhat_mp(i: int, nu: int, x: float, raw_spectrum) -> LogValue:
    with mp.workdps(60):
        e = [mp.mpf(1)]
        for a in raw_spectrum:
            e = [e[0]] + [e[j] + a * e[j - 1] for j in range(1, len(e))] + [a * e[-1]]
        n = len(raw_spectrum)
        total = mp.mpf(0)
        for j in range(n + 1):
            p = n - j + i - 1
            total += e[j] * mp.factorial(p) * mp.laguerre(p, nu, mp.mpf(x))
        if total == 0:
            return LogValue.zero()
        return LogValue.from_log(
            float(mp.log(abs(total))), 1 if total > 0 else -1
        )


def Bhat_integral(params: FiniteEnsembleParams, i: int, x: float) -> float:
    if not (1 <= i <= max(params.n_f, 1)):
        raise DomainError(f"Bhat index must lie in 1..N_f, got {i}")
    return bhat_integral_bare(i, params.nu, x, params.raw_spectrum).to_float()


def unquenched_kernel_temp(params: FiniteEnsembleParams, x: float, y: float) -> float:
    """Temperature kernel with N_f flavours: the (N_f+1) x (N_f+1) determinant
    bordered by the quenched kernel, its Bessel-I companion and the B
    integrals, over det[B_i(m_f^2)].  The asymmetric mass prefactor
    prod (y+m^2)/(x+m^2) is split as its symmetric square root so that equal
    arguments are exact."""
    if params.n_f < 1:
        raise DomainError("unquenched_kernel_temp requires N_f >= 1")
    if x < 0.0 or y < 0.0:
        raise DomainError("kernel arguments must be >= 0")
    nf = params.n_f
    raw = params.raw_spectrum
    first = [LogValue.from_float(quenched_kernel_temp(
        FiniteEnsembleParams(N=params.N, nu=params.nu, temperature=params.temperature), x, y))]
    first += [_hatk_log(params, m, y) for m in params.masses]
    rows = [first]
    bmat = []
    for i in range(1, nf + 1):
        brow = [b_integral_bare(i, params.nu, m, raw) for m in params.masses]
        bmat.append(brow)
        rows.append([bhat_integral_bare(i, params.nu, x, raw)] + brow)
    num, cond_n = logdet_signed(rows)
    _require_cond(cond_n, "unquenched kernel numerator")
    den, cond_d = logdet_signed(bmat)
    _require_cond(cond_d, "unquenched kernel B determinant")
    if den.sign == 0:
        raise ConditioningError("det[B] vanished")
    half_mass = 0.0
    for m in params.masses:
        half_mass += 0.5 * (math.log(y + m * m) - math.log(x + m * m))
    return (num / den * LogValue.from_log(half_mass, 1)).to_float()


# ---------------------------------------------------------------------------
# correlation functions and the microscopic map
# ---------------------------------------------------------------------------


def _kernel_for_correlations(params: FiniteEnsembleParams):
    if params.temperature is None:
        def zero_temp_entry(xi, xj):
            ktilde = massive_kernel_zero_temp(params, xi, xj)
            w = weight_zero_temp(params, xi) * weight_zero_temp(params, xj)
            if w.sign == 0:
                return 0.0
            return math.exp(0.5 * w.log_mag) * ktilde

        return zero_temp_entry
    if params.n_f == 0:
        return lambda xi, xj: quenched_kernel_temp(params, xi, xj)
    return lambda xi, xj: unquenched_kernel_temp(params, xi, xj)


def correlation_finite(params: FiniteEnsembleParams, points: Sequence[float]) -> float:
    """k-point correlation function R_k = det[K(x_i, x_j)]; the kernel choice
    follows the ensemble (weight-dressed Laguerre kernel at zero temperature,
    canonical temperature kernels otherwise)."""
    pts = [float(p) for p in points]
    k = len(pts)
    if not (1 <= k <= 6):
        raise DomainError(f"correlation_finite supports 1 <= k <= 6, got {k}")
    for p in pts:
        if p < 0.0:
            raise DomainError(f"points must be >= 0, got {p}")
    entry = _kernel_for_correlations(params)
    mat = np.array([[entry(pi, pj) for pj in pts] for pi in pts])
    if k == 1:
        return float(mat[0, 0])
    return float(np.linalg.det(mat))


def micro_density_finite(
    params: FiniteEnsembleParams,
    phase_info: PhaseInfo,
    zeta: float,
    mu: Sequence[float] = (),
) -> float:
    """Finite-N microscopic density: (2 zeta / (4 N Xi)) K(x*, x*) with
    x* = zeta^2 / (4 N Xi).  Masses are passed in microscopic units mu and
    mapped to raw m^2 = mu^2 / (4 N Xi); `params.masses` must be empty."""
    if phase_info.phase is not Phase.BROKEN:
        raise PhaseError(
            f"microscopic limit needs the broken phase, t_c = {phase_info.t_c}"
        )
    if zeta <= 0.0:
        raise DomainError(f"zeta must be > 0, got {zeta}")
    if params.masses:
        raise DomainError("pass microscopic masses via `mu`, not params.masses")
    scale = ScalingMap(N=params.N, xi=phase_info.xi)
    x = scale.x_raw(zeta)
    if mu:
        raw_masses = tuple(m / (2.0 * math.sqrt(params.N * phase_info.xi)) for m in mu)
        run = FiniteEnsembleParams(
            N=params.N, nu=params.nu, masses=raw_masses, temperature=params.temperature
        )
        value = unquenched_kernel_temp(run, x, x)
    else:
        value = quenched_kernel_temp(params, x, x)
    return scale.density_jacobian(zeta) * value
