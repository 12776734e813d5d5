"""Identity and equivalence suite.

Every analytic claim the library rests on is checked numerically here: the
special-function recurrences and limits, the residue/contour agreement, the
two determinant representations of the finite-N massive kernel, and the
microscopic equivalences (kernel representations of sizes N_f+1 and N_f+2,
k-point functions from kernels versus partition functions, the consistency
condition, positivity, decoupling, and the large-argument plateau).

The suite is deterministic (fixed seeds) and collects failures instead of
short-circuiting; the CLI `verify` command renders the records and exits
nonzero if anything failed.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass

import numpy as np

from . import finitekernel as fk
from . import microkernel as mk
from .phase import TemperatureSpectrum
from .quadrature import KernelContourNumerator, contour_quadrature, integrate_halfline, residue_sum
from .specfun import bessel_i, bessel_j, bessel_j_signed, laguerre


@dataclass
class CheckResult:
    name: str
    max_deviation: float
    tolerance: float
    passed: bool
    seconds: float
    note: str = ""


def _record(name, tol, dev, t0, note=""):
    return CheckResult(
        name=name,
        max_deviation=float(dev),
        tolerance=float(tol),
        passed=bool(dev <= tol),
        seconds=time.perf_counter() - t0,
        note=note,
    )


def check_bessel_i_recurrence() -> CheckResult:
    t0 = time.perf_counter()
    worst = 0.0
    for nu in range(1, 11):
        for z in np.linspace(0.5, 50.0, 34):
            z = float(z)
            resid = z * bessel_i(nu + 1, z) - z * bessel_i(nu - 1, z) + 2 * nu * bessel_i(nu, z)
            scale = max(1.0, abs(z * bessel_i(nu - 1, z)))
            worst = max(worst, abs(resid) / scale)
    return _record("specfun/bessel_i_recurrence", 1e-12, worst, t0)


def check_bessel_j_recurrence() -> CheckResult:
    t0 = time.perf_counter()
    worst = 0.0
    for nu in range(1, 11):
        for z in np.linspace(0.5, 50.0, 34):
            z = float(z)
            resid = z * bessel_j(nu + 1, z) + z * bessel_j(nu - 1, z) - 2 * nu * bessel_j(nu, z)
            scale = max(1.0, abs(z * bessel_j(nu - 1, z)))
            worst = max(worst, abs(resid) / scale)
    return _record("specfun/bessel_j_recurrence", 1e-12, worst, t0)


def check_laguerre_recurrence(seed=2061) -> CheckResult:
    t0 = time.perf_counter()
    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(200):
        n = int(rng.integers(2, 101))
        alpha = float(rng.uniform(0.0, 5.0))
        x = float(rng.uniform(-10.0, 10.0))
        lm, lc, lp = (laguerre(k, alpha, x) for k in (n - 1, n, n + 1))
        resid = (n + 1) * lp - (2 * n + alpha + 1 - x) * lc + (n + alpha) * lm
        scale = max(abs(lm), abs(lc), abs(lp), 1.0)
        worst = max(worst, abs(resid) / scale)
    return _record("specfun/laguerre_recurrence", 1e-13, worst, t0)


def check_laguerre_bessel_limit() -> CheckResult:
    t0 = time.perf_counter()
    big_n = 10**6
    worst = 0.0
    for nu in (0, 1, 2):
        for z in (0.5, 1.0, 2.0, 4.0):
            target_j = 2.0**nu * z ** (-nu) * bessel_j(nu, z)
            got = big_n ** (-nu) * laguerre(big_n, float(nu), z * z / (4.0 * big_n))
            worst = max(worst, abs(got - target_j) / abs(target_j))
            target_i = 2.0**nu * z ** (-nu) * bessel_i(nu, z)
            got = big_n ** (-nu) * laguerre(big_n, float(nu), -z * z / (4.0 * big_n))
            worst = max(worst, abs(got - target_i) / abs(target_i))
    # the exact O(1/N) gap reaches 1.4e-5 at (nu=1, zeta=4) where J_1 almost
    # vanishes (zero at 3.83); all other grid points sit below 1e-5
    return _record("specfun/laguerre_bessel_limit", 2e-5, worst, t0,
                   note="true finite-N gap; see (nu=1, zeta=4) near the J_1 zero")


def check_residue_vs_contour(seed=515, n_cases=100) -> CheckResult:
    from .errors import IllConditionedSpectrumError

    t0 = time.perf_counter()
    rng = np.random.default_rng(seed)
    worst = 0.0
    guarded = 0
    for _ in range(n_cases):
        n = int(rng.integers(2, 17))
        gaps = rng.uniform(0.05, 0.3, size=n)
        a = 0.1 + np.cumsum(gaps)
        a = a * (rng.uniform(0.5, 1.0) * 2.0 / a[-1])
        spectrum = TemperatureSpectrum(a)
        t = float(rng.uniform(0.05, 3.0))
        y = float(rng.uniform(0.05, 4.0))
        nu = int(rng.integers(0, 4))
        numer = KernelContourNumerator(nu, t, y)
        try:
            res = residue_sum(spectrum, numer.logvalue)
        except IllConditionedSpectrumError:
            guarded += 1  # the cancellation guard rejecting is correct behavior
            continue
        ctr = contour_quadrature(spectrum, -t, numer, nodes=256)
        # mixed tolerance at the scale of the value: cancellation amplifies
        # the per-term construction rounding of the residue route
        tol = max(1e-10, res.cancellation * 1e-14) * max(abs(res.value), 1e-300)
        dev = abs(res.value - ctr)
        worst = max(worst, dev / max(tol, 1e-300) * 1e-10)
    return _record("quad/residue_vs_contour", 1e-10, worst, t0,
                   note=f"deviation scaled by the per-case mixed tolerance; "
                        f"{guarded} clustered spectra rejected by the guard")


def check_halfline_polynomials() -> CheckResult:
    t0 = time.perf_counter()
    worst = 0.0
    for deg in (0, 1, 5, 13, 27, 40):
        exact = math.exp(math.lgamma(deg + 1))
        got = integrate_halfline(lambda t, d=deg: t**d * math.exp(-t), decay_rate=1.0,
                                 rel_tol=1e-13, onset=float(4 * deg + 4))
        worst = max(worst, abs(got - exact) / exact)
    return _record("quad/halfline_poly_exactness", 1e-13, worst, t0)


def check_finite_det_equivalence(seed=77, n_list=(6, 10), tuples=20) -> CheckResult:
    t0 = time.perf_counter()
    rng = np.random.default_rng(seed)
    worst = 0.0
    for n in n_list:
        for nu in (0, 1, 2):
            for nf in (1, 2, 3):
                for _ in range(tuples):
                    masses = _distinct_uniform(rng, nf, 0.1, 2.0)
                    params = fk.FiniteEnsembleParams(N=n, nu=nu, masses=masses)
                    x = float(rng.uniform(0.0, 4.0 * n))
                    y = float(rng.uniform(0.0, 4.0 * n))
                    if abs(x - y) < 1e-3:
                        y += 0.5
                    a = fk.massive_kernel_zero_temp(params, x, y)
                    b = fk.massive_kernel_alt(params, x, y)
                    worst = max(worst, abs(a - b) / max(abs(a), abs(b), 1e-300))
    return _record("finite/massive_kernel_two_forms", 1e-9, worst, t0)


def _distinct_uniform(rng, count, lo, hi):
    while True:
        vals = np.sort(rng.uniform(lo, hi, size=count))
        if count < 2 or np.min(np.diff(vals * vals)) > 1e-3:
            return tuple(float(v) for v in vals)


def check_zero_temperature_continuity() -> CheckResult:
    t0 = time.perf_counter()
    n = 8
    micro_a = [1e-8 * (1.0 + k / n) for k in range(1, n + 1)]
    worst = 0.0
    for nu in (0, 1):
        temp = fk.FiniteEnsembleParams(N=n, nu=nu, temperature=TemperatureSpectrum(micro_a))
        cold = fk.FiniteEnsembleParams(N=n, nu=nu)
        for x in (0.5, 1.5, 4.0, 9.0):
            hot_r1 = fk.quenched_kernel_temp(temp, x, x)
            cold_r1 = fk.correlation_finite(cold, [x])
            worst = max(worst, abs(hot_r1 - cold_r1) / abs(cold_r1))
    return _record("finite/zero_temperature_continuity", 1e-4, worst, t0)


def check_r1_normalization() -> CheckResult:
    t0 = time.perf_counter()
    worst = 0.0
    cold = fk.FiniteEnsembleParams(N=6, nu=1)
    got = integrate_halfline(lambda x: fk.correlation_finite(cold, [x]),
                             decay_rate=1.0, rel_tol=1e-9, onset=40.0)
    worst = max(worst, abs(got - 6.0) / 6.0)
    a = np.linspace(0.15, 0.45, 8)
    hot = fk.FiniteEnsembleParams(N=8, nu=0, temperature=TemperatureSpectrum(a))
    got = integrate_halfline(lambda x: fk.quenched_kernel_temp(hot, x, x),
                             decay_rate=1.0, rel_tol=1e-8, onset=60.0)
    worst = max(worst, abs(got - 8.0) / 8.0)
    return _record("finite/r1_normalization", 1e-6, worst, t0)


def check_reproducing_property(seed=99) -> CheckResult:
    t0 = time.perf_counter()
    rng = np.random.default_rng(seed)
    params = fk.FiniteEnsembleParams(N=5, nu=1, masses=(0.8,))
    entry = fk._kernel_for_correlations(params)
    worst = 0.0
    for _ in range(3):
        x = float(rng.uniform(0.2, 8.0))
        y = float(rng.uniform(0.2, 8.0))
        target = entry(x, y)
        got = integrate_halfline(lambda z: entry(x, z) * entry(z, y),
                                 decay_rate=1.0, rel_tol=1e-10, onset=40.0)
        worst = max(worst, abs(got - target) / max(abs(target), 1e-10))
    return _record("finite/kernel_reproducing", 1e-8, worst, t0)


_GL200 = np.polynomial.legendre.leggauss(200)


def _unit_quad(f) -> float:
    nodes, weights = _GL200
    half = 0.5
    return half * float(sum(w * f(half * (x + 1.0)) for x, w in zip(nodes, weights)))


def check_bessel_integral_jj(seed=404, cases=50) -> CheckResult:
    t0 = time.perf_counter()
    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(cases):
        nu = int(rng.integers(0, 4))
        rho, eta, tbar = (float(v) for v in rng.uniform(0.05, 5.0, size=3))
        za, zb = math.sqrt(4 * rho * tbar), math.sqrt(4 * eta * tbar)
        if abs(za - zb) < 1e-4:
            continue
        quad = tbar * _unit_quad(
            lambda tau: bessel_j(nu, za * math.sqrt(tau)) * bessel_j(nu, zb * math.sqrt(tau))
        )
        closed = 2.0 * tbar * mk._bjj_bare(nu, zb, za)
        worst = max(worst, abs(quad - closed))
    return _record("micro/bessel_integral_jj", 1e-10, worst, t0)


def check_bessel_integral_ij(seed=405, cases=50) -> CheckResult:
    t0 = time.perf_counter()
    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(cases):
        nu = int(rng.integers(0, 4))
        mu2, eta, tbar = (float(v) for v in rng.uniform(0.05, 5.0, size=3))
        mh, zh = math.sqrt(4 * mu2 * tbar), math.sqrt(4 * eta * tbar)
        quad = tbar * _unit_quad(
            lambda tau: bessel_i(nu, mh * math.sqrt(tau)) * bessel_j(nu, zh * math.sqrt(tau))
        )
        num = mh * bessel_i(nu + 1, mh) * bessel_j(nu, zh) + zh * bessel_j(nu + 1, zh) * bessel_i(nu, mh)
        closed = 2.0 * tbar * num / (mh * mh + zh * zh)
        worst = max(worst, abs(quad - closed))
    return _record("micro/bessel_integral_ij", 1e-10, worst, t0)


def _micro_grid_params(rng, nf):
    return mk.MicroParams(nu=0, mu=_distinct_uniform(rng, nf, 0.3, 3.0)) if nf else mk.MicroParams(nu=0)


def check_kernel_equivalence() -> CheckResult:
    t0 = time.perf_counter()
    grid = (0.3, 1.0, 2.0, 5.0, 9.0)
    rng = np.random.default_rng(808)
    worst = 0.0
    for nu in (0, 1, 2):
        for nf in (0, 1, 2, 3):
            mu = _distinct_uniform(rng, nf, 0.3, 3.0) if nf else ()
            params = mk.MicroParams(nu=nu, mu=mu)
            for zeta in grid:
                for eta in grid:
                    if abs(zeta - eta) < 1e-3:
                        continue
                    a = mk.kernel_unquenched(params, zeta, eta)
                    b = mk.kernel_zero_temp(params, zeta, eta)
                    worst = max(worst, abs(a - b) / max(abs(a), abs(b), 1e-300))
    return _record("micro/kernel_size_equivalence", 1e-10, worst, t0)


def check_krelation() -> CheckResult:
    t0 = time.perf_counter()
    rng = np.random.default_rng(909)
    worst = 0.0
    for nu in (0, 1, 2):
        for nf in (0, 1, 2):
            mu = _distinct_uniform(rng, nf, 0.3, 3.0) if nf else ()
            params = mk.MicroParams(nu=nu, mu=mu)
            for _ in range(6):
                zeta, eta = sorted(rng.uniform(0.3, 6.0, size=2))
                if eta - zeta < 1e-2:
                    continue
                a = mk.kernel_via_partitions(params, float(zeta), float(eta))
                b = mk.kernel_zero_temp(params, float(zeta), float(eta))
                worst = max(worst, abs(a - b) / max(abs(a), abs(b), 1e-300))
    return _record("micro/kernel_via_partitions", 1e-9, worst, t0)


def _rho_from_kernel_det(params, zetas):
    k = len(zetas)
    mat = np.empty((k, k))
    for i in range(k):
        for j in range(k):
            if i == j:
                mat[i, j] = mk.density(params, zetas[i])
            else:
                mat[i, j] = mk.kernel_zero_temp(params, zetas[i], zetas[j])
    return float(np.linalg.det(mat)) if k > 1 else float(mat[0, 0])


def check_rhok_vs_kernel_det() -> CheckResult:
    t0 = time.perf_counter()
    rng = np.random.default_rng(1111)
    worst = 0.0
    for nu in (0, 1, 2):
        for nf in (0, 1, 2):
            mu = _distinct_uniform(rng, nf, 0.3, 3.0) if nf else ()
            params = mk.MicroParams(nu=nu, mu=mu)
            for k in (1, 2):
                for _ in range(5):
                    zs = tuple(sorted(float(v) for v in rng.uniform(0.5, 7.0, size=k)))
                    if k == 2 and zs[1] - zs[0] < 0.05:
                        continue
                    a = mk.rho_k(params, zs)
                    b = _rho_from_kernel_det(params, zs)
                    worst = max(worst, abs(a - b) / max(abs(a), abs(b), 1e-300))
    return _record("micro/rhok_vs_kernel_det", 1e-9, worst, t0)


def check_rhok_vs_partitions() -> CheckResult:
    t0 = time.perf_counter()
    rng = np.random.default_rng(1212)
    worst = 0.0
    for nu in (0, 1, 2):
        for nf in (0, 1, 2):
            mu = _distinct_uniform(rng, nf, 0.3, 3.0) if nf else ()
            params = mk.MicroParams(nu=nu, mu=mu)
            for k in (1, 2):
                if nf + 2 * k > 8:
                    continue
                for _ in range(5):
                    zs = tuple(sorted(float(v) for v in rng.uniform(0.5, 6.0, size=k)))
                    if k == 2 and zs[1] - zs[0] < 0.05:
                        continue
                    a = mk.rho_k(params, zs)
                    b = mk.rho_k_via_partitions(params, zs)
                    worst = max(worst, abs(a - b) / max(abs(a), abs(b), 1e-300))
    return _record("micro/rhok_vs_partitions", 1e-8, worst, t0)


def check_consistency_condition() -> CheckResult:
    t0 = time.perf_counter()
    rng = np.random.default_rng(1313)
    worst = 0.0
    for nu, nf in ((0, 0), (1, 1), (2, 1), (1, 0)):
        mu = _distinct_uniform(rng, nf, 0.4, 2.5) if nf else ()
        params = mk.MicroParams(nu=nu, mu=mu)
        for k in (1, 2):
            for _ in range(5):
                vals = rng.uniform(0.3, 6.0, size=2 * k)
                vals = np.sort(vals)
                if np.min(np.diff(vals)) < 0.05:
                    continue
                xs, es = vals[:k], vals[k:]
                lhs, rhs = mk.consistency_condition_check(params, xs, es)
                worst = max(worst, abs(lhs - rhs) / max(abs(lhs), abs(rhs), 1e-300))
    return _record("micro/consistency_condition", 1e-9, worst, t0)


def check_density_positive() -> CheckResult:
    t0 = time.perf_counter()
    rng = np.random.default_rng(1414)
    most_negative = 0.0
    grid = np.linspace(0.1, 100.0, 1000)
    for nu in (0, 1, 2, 3, 4):
        for nf in (0, 1, 3):
            mu = _distinct_uniform(rng, nf, 0.3, 4.0) if nf else ()
            params = mk.MicroParams(nu=nu, mu=mu)
            for z in grid[:: max(1, (nu + nf + 1))]:
                rho = mk.density(params, float(z))
                most_negative = min(most_negative, rho)
    return _record("micro/density_positivity", 0.0, max(0.0, -most_negative), t0,
                   note="deviation is the most negative density value found")


def check_decoupling() -> CheckResult:
    """Heavy flavours decouple at the true O(1/mu) rate.

    The pointwise deviation from the flavour-removed operation is C(zeta,nu)/mu
    with C up to ~6, so a fixed 1e-4 tolerance at mu = 1e3 is not attainable
    (see the decisions record); this check asserts the 1/mu law instead: one
    decade in mu must shrink the deviation by ~10x, and the extrapolated
    deviation at mu = 1e5 must sit below 1e-4.
    """
    t0 = time.perf_counter()
    worst_ratio = 0.0
    for nu in (0, 1, 2):
        quenched = mk.MicroParams(nu=nu)
        dev = {}
        for mu in (1e3, 1e4):
            heavy = mk.MicroParams(nu=nu, mu=(mu,))
            dev[mu] = max(
                abs(mk.density(heavy, z) - mk.density(quenched, z)) / mk.density(quenched, z)
                for z in (0.5, 2.0, 5.5, 9.0)
            )
        ratio = dev[1e4] / dev[1e3]
        # second term: 0.2 * dev(1e4)/1e-3, i.e. the 1/mu-extrapolated
        # deviation at mu = 1e5 must stay below 1e-4
        worst_ratio = max(worst_ratio, ratio, 200.0 * dev[1e4])
    return _record(
        "micro/heavy_flavour_decoupling", 0.2, worst_ratio, t0,
        note="deviation ratio across one decade of mu (1/mu law) and scaled "
             "extrapolation to mu = 1e5",
    )


def check_plateau() -> CheckResult:
    t0 = time.perf_counter()
    params = mk.MicroParams(nu=0)
    zs = np.linspace(50.0, 60.0, 400)
    mean = float(np.mean([mk.density(params, float(z)) for z in zs]))
    dev = abs(mean - 1.0 / math.pi)
    return _record("micro/asymptotic_plateau", 5e-3, dev, t0)


def check_flavour_permutation() -> CheckResult:
    t0 = time.perf_counter()
    worst = 0.0
    base = (0.5, 1.3, 2.4)
    perm = (2.4, 0.5, 1.3)
    for nu in (0, 1):
        pa = mk.MicroParams(nu=nu, mu=base)
        pb = mk.MicroParams(nu=nu, mu=perm)
        for z in (0.8, 3.0, 7.0):
            a, b = mk.density(pa, z), mk.density(pb, z)
            worst = max(worst, abs(a - b) / abs(a))
        za = mk.partition_micro(pa)
        zb = mk.partition_micro(pb)
        worst = max(worst, abs((za / zb).to_float() - 1.0))
    return _record("micro/flavour_permutation", 1e-12, worst, t0)


ALL_CHECKS = (
    check_bessel_i_recurrence,
    check_bessel_j_recurrence,
    check_laguerre_recurrence,
    check_laguerre_bessel_limit,
    check_residue_vs_contour,
    check_halfline_polynomials,
    check_finite_det_equivalence,
    check_zero_temperature_continuity,
    check_r1_normalization,
    check_reproducing_property,
    check_bessel_integral_jj,
    check_bessel_integral_ij,
    check_kernel_equivalence,
    check_krelation,
    check_rhok_vs_kernel_det,
    check_rhok_vs_partitions,
    check_consistency_condition,
    check_density_positive,
    check_decoupling,
    check_plateau,
    check_flavour_permutation,
)


def run_suite(checks=ALL_CHECKS) -> list:
    results = []
    for check in checks:
        try:
            results.append(check())
        except Exception as exc:  # collected, not short-circuited
            results.append(
                CheckResult(
                    name=getattr(check, "__name__", str(check)),
                    max_deviation=math.inf,
                    tolerance=0.0,
                    passed=False,
                    seconds=0.0,
                    note=f"raised {type(exc).__name__}: {exc}",
                )
            )
    return results
