import math

import mpmath as mp
import numpy as np
import pytest

from tchgue.errors import ConditioningError, DomainError
from tchgue.finitekernel import FiniteEnsembleParams, partition_zero_temp
from tchgue.microkernel import (
    MicroParams,
    b_ij,
    b_jj,
    consistency_condition_check,
    density,
    kernel_unquenched,
    kernel_via_partitions,
    kernel_zero_temp,
    partition_micro,
    rho_k,
    rho_k_via_partitions,
)
from tchgue.specfun import bessel_i, bessel_j, bessel_j_signed

# J_0(2)^2 + J_1(2)^2, frozen from extended-precision Bessel values
BJJ_DIAG_2 = 0.38273858486667213439


def _unit_quad(f, points=240):
    nodes, weights = np.polynomial.legendre.leggauss(points)
    return 0.5 * float(sum(w * f(0.5 * (x + 1.0)) for x, w in zip(nodes, weights)))


class TestBjj:
    def test_equal_arguments_reflection(self):
        p = MicroParams(nu=0)
        assert b_jj(p, 2.0, 2.0) == pytest.approx(2.0 / 2.0 * BJJ_DIAG_2, rel=1e-13)

    def test_hard_edge_suppression(self):
        p = MicroParams(nu=2)
        assert b_jj(p, 1e-4, 1e-4) < 1e-10

    def test_symmetry(self):
        p = MicroParams(nu=1)
        assert b_jj(p, 1.1, 4.2) == pytest.approx(b_jj(p, 4.2, 1.1), rel=1e-12)

    def test_plateau(self):
        p = MicroParams(nu=0)
        zs = np.linspace(50.0, 60.0, 200)
        mean = np.mean([b_jj(p, float(z), float(z)) for z in zs])
        assert abs(mean - 1.0 / math.pi) < 5e-3

    def test_domain(self):
        with pytest.raises(DomainError):
            b_jj(MicroParams(nu=0), -1.0, 2.0)


class TestBij:
    def test_small_mass_limit(self):
        p = MicroParams(nu=0)
        z = 1.7
        assert b_ij(p, 1e-9, z) == pytest.approx(bessel_j(1, z) / z, rel=1e-7)

    def test_quadrature_oracle(self):
        # closed form of tbar int_0^1 I_nu(mh sqrt(tau)) J_nu(zh sqrt(tau)) dtau
        rng = np.random.default_rng(51)
        for _ in range(10):
            nu = int(rng.integers(0, 4))
            p = MicroParams(nu=nu)
            mh, zh = (float(v) for v in rng.uniform(0.3, 6.0, size=2))
            quad = _unit_quad(
                lambda tau: bessel_i(nu, mh * math.sqrt(tau)) * bessel_j(nu, zh * math.sqrt(tau))
            )
            closed = 2.0 * b_ij(p, mh, zh)
            assert quad == pytest.approx(closed, abs=1e-10)

    def test_not_symmetric(self):
        p = MicroParams(nu=1)
        assert abs(b_ij(p, 0.9, 2.7) - b_ij(p, 2.7, 0.9)) > 1e-3


class TestPartitionMicro:
    def test_single_flavour_is_bessel_i(self):
        for nu in (0, 1, 3):
            for mu in (0.4, 1.7):
                got = partition_micro(MicroParams(nu=nu, mu=(mu,))).to_float()
                assert got == pytest.approx(bessel_i(nu, mu), rel=1e-13)

    def test_small_mass_limit(self):
        got = partition_micro(MicroParams(nu=0, mu=(1e-8,))).to_float()
        assert got == pytest.approx(1.0, rel=1e-10)

    def test_two_flavour_expansion(self):
        mu1, mu2 = 0.8, 1.9
        got = partition_micro(MicroParams(nu=0, mu=(mu1, mu2))).to_float()
        expect = (
            bessel_i(0, mu1) * mu2 * bessel_i(1, mu2)
            - bessel_i(0, mu2) * mu1 * bessel_i(1, mu1)
        ) / (mu2 * mu2 - mu1 * mu1)
        assert got == pytest.approx(expect, rel=1e-13)

    def test_finite_n_limit_of_mass_partition(self):
        # ratio of two mass sets at N = 1e5 converges to the limiting ratio;
        # the mass-partition formula is evaluated directly here because the
        # kernel-oriented parameter type caps N at 256
        from tchgue.specfun import laguerre

        big_n = 10**5
        nu = 1
        mu_a, mu_b = (0.9, 2.1), (1.3, 2.9)

        def finite_value(mus):
            # prod m_f^nu * det[L_{N+j-1}(-m_f^2)] / Vandermonde(m^2); the
            # Gamma(f+N) and N-power factors are mass-set independent and
            # cancel in the ratio below
            m2 = [(m / (2.0 * math.sqrt(big_n))) ** 2 for m in mus]
            det = laguerre(big_n, nu, -m2[0]) * laguerre(big_n + 1, nu, -m2[1])
            det -= laguerre(big_n, nu, -m2[1]) * laguerre(big_n + 1, nu, -m2[0])
            pref = np.prod([m**nu for m in mus])
            return pref * det / (m2[1] - m2[0])

        got = finite_value(mu_a) / finite_value(mu_b)
        expect = (
            partition_micro(MicroParams(nu=nu, mu=mu_a))
            / partition_micro(MicroParams(nu=nu, mu=mu_b))
        ).to_float()
        assert got == pytest.approx(expect, rel=1e-3)

    def test_permutation_invariance(self):
        a = partition_micro(MicroParams(nu=2, mu=(0.5, 1.2, 2.0))).to_float()
        b = partition_micro(MicroParams(nu=2, mu=(2.0, 0.5, 1.2))).to_float()
        assert a == pytest.approx(b, rel=1e-13)


class TestKernelRepresentations:
    def test_quenched_reduction(self):
        p = MicroParams(nu=1)
        assert kernel_unquenched(p, 1.2, 3.1) == pytest.approx(
            b_jj(p, 1.2, 3.1), rel=1e-14
        )
        assert kernel_zero_temp(p, 1.2, 3.1) == pytest.approx(
            b_jj(p, 1.2, 3.1), rel=1e-12
        )

    def test_size_equivalence(self):
        rng = np.random.default_rng(52)
        for nu in (0, 1, 2):
            for nf in (1, 2, 3):
                mu = tuple(np.sort(rng.uniform(0.3, 3.0, size=nf)) + 0.1 * np.arange(nf))
                p = MicroParams(nu=nu, mu=mu)
                for _ in range(4):
                    z, e = rng.uniform(0.3, 8.0, size=2)
                    if abs(z - e) < 1e-2:
                        continue
                    assert kernel_unquenched(p, z, e) == pytest.approx(
                        kernel_zero_temp(p, z, e), rel=1e-10
                    )

    def test_swap_symmetry(self):
        p = MicroParams(nu=1, mu=(0.8, 2.0))
        assert kernel_zero_temp(p, 1.1, 3.3) == pytest.approx(
            kernel_zero_temp(p, 3.3, 1.1), rel=1e-12
        )

    def test_diagonal_refused(self):
        p = MicroParams(nu=0)
        with pytest.raises(DomainError):
            kernel_zero_temp(p, 2.0, 2.0 + 1e-9)

    def test_heavy_flavour_rate(self):
        # decoupling approaches the quenched kernel at rate O(1/mu)
        p0 = MicroParams(nu=1)
        d3 = abs(
            kernel_unquenched(MicroParams(nu=1, mu=(1e3,)), 1.5, 4.0)
            - b_jj(p0, 1.5, 4.0)
        )
        d4 = abs(
            kernel_unquenched(MicroParams(nu=1, mu=(1e4,)), 1.5, 4.0)
            - b_jj(p0, 1.5, 4.0)
        )
        assert d4 < 0.2 * d3
        assert d4 < 1e-4


class TestDensity:
    def test_quenched_matches_bjj_diagonal(self):
        for nu in (0, 1, 2):
            p = MicroParams(nu=nu)
            for z in (0.7, 2.0, 6.3):
                expect = (z / 2.0) * (
                    bessel_j(nu, z) ** 2
                    - bessel_j_signed(nu - 1, z) * bessel_j(nu + 1, z)
                )
                assert density(p, z) == pytest.approx(expect, rel=1e-12)

    def test_small_zeta_slope(self):
        p = MicroParams(nu=0)
        z = 1e-3
        assert density(p, z) == pytest.approx(z / 2.0, rel=1e-5)

    def test_positive_on_grid(self):
        rng = np.random.default_rng(53)
        for nu in (0, 3):
            for nf in (0, 2):
                mu = tuple(np.sort(rng.uniform(0.4, 3.0, size=nf)) + 0.2 * np.arange(nf))
                p = MicroParams(nu=nu, mu=mu)
                for z in np.linspace(0.2, 40.0, 60):
                    assert density(p, float(z)) >= 0.0


class TestRhoK:
    def test_k1_matches_density(self):
        rng = np.random.default_rng(54)
        for nu in (0, 2):
            for nf in (0, 1, 2):
                mu = tuple(np.sort(rng.uniform(0.4, 2.5, size=nf)) + 0.15 * np.arange(nf))
                p = MicroParams(nu=nu, mu=mu)
                for z in (0.8, 3.3):
                    assert rho_k(p, [z]) == pytest.approx(density(p, z), rel=1e-10)

    def test_k2_matches_kernel_determinant(self):
        p = MicroParams(nu=1, mu=(0.9,))
        z1, z2 = 1.4, 3.8
        det = density(p, z1) * density(p, z2) - kernel_zero_temp(p, z1, z2) * kernel_zero_temp(
            p, z2, z1
        )
        assert rho_k(p, [z1, z2]) == pytest.approx(det, rel=1e-9)

    def test_caps(self):
        p = MicroParams(nu=0)
        with pytest.raises(DomainError):
            rho_k(p, [1.0, 2.0, 3.0, 4.0, 5.0])


class TestPartitionRoutes:
    def test_k1_quenched_confluent_value(self):
        # |z| Z^(2)(iz, iz) with the doubled column = (z/2)(J_0^2 + J_1^2)
        p = MicroParams(nu=0)
        z = 2.0
        got = rho_k_via_partitions(p, [z])
        assert got == pytest.approx((z / 2.0) * BJJ_DIAG_2, rel=1e-12)

    def test_matches_rho_k(self):
        rng = np.random.default_rng(55)
        for nu in (0, 1, 2):
            for nf in (0, 1, 2):
                mu = tuple(np.sort(rng.uniform(0.4, 2.5, size=nf)) + 0.15 * np.arange(nf))
                p = MicroParams(nu=nu, mu=mu)
                for k in (1, 2):
                    zs = tuple(sorted(rng.uniform(0.5, 6.0, size=k)))
                    if k == 2 and zs[1] - zs[0] < 0.1:
                        continue
                    assert rho_k_via_partitions(p, zs) == pytest.approx(
                        rho_k(p, zs), rel=1e-8
                    )

    def test_positive(self):
        p = MicroParams(nu=2, mu=(0.7,))
        for z in (0.5, 2.5, 7.0):
            assert rho_k_via_partitions(p, [z]) > 0.0

    def test_kernel_via_partitions_bjj(self):
        p = MicroParams(nu=0)
        z, e = 1.1, 2.9
        assert kernel_via_partitions(p, z, e) == pytest.approx(b_jj(p, z, e), rel=1e-12)

    def test_kernel_via_partitions_matches_zero_temp(self):
        rng = np.random.default_rng(56)
        for nu in (0, 1, 2):
            for nf in (0, 1, 2):
                mu = tuple(np.sort(rng.uniform(0.4, 2.5, size=nf)) + 0.15 * np.arange(nf))
                p = MicroParams(nu=nu, mu=mu)
                z, e = sorted(rng.uniform(0.4, 6.0, size=2))
                if e - z < 0.1:
                    e = z + 0.5
                assert kernel_via_partitions(p, float(z), float(e)) == pytest.approx(
                    kernel_zero_temp(p, float(z), float(e)), rel=1e-9
                )

    def test_sign_flip_hook_breaks_identity(self, monkeypatch):
        monkeypatch.setenv("TCHGUE_FLIP_KRELATION_SIGN", "1")
        p = MicroParams(nu=0)
        got = kernel_via_partitions(p, 1.1, 2.9)
        assert got == pytest.approx(-b_jj(p, 1.1, 2.9), rel=1e-12)


class TestConsistencyCondition:
    def test_k1_trivial(self):
        p = MicroParams(nu=1, mu=(0.8,))
        lhs, rhs = consistency_condition_check(p, [1.2], [2.7])
        assert lhs == pytest.approx(rhs, rel=1e-14)

    def test_k2_identity(self):
        rng = np.random.default_rng(57)
        for nu, nf in ((0, 0), (1, 1)):
            mu = tuple(np.sort(rng.uniform(0.5, 2.0, size=nf)) + 0.2 * np.arange(nf))
            p = MicroParams(nu=nu, mu=mu)
            vals = np.sort(rng.uniform(0.3, 6.0, size=4))
            while np.min(np.diff(vals)) < 0.1:
                vals = np.sort(rng.uniform(0.3, 6.0, size=4))
            lhs, rhs = consistency_condition_check(p, vals[:2], vals[2:])
            assert lhs == pytest.approx(rhs, rel=1e-9)


class TestValidation:
    def test_micro_params(self):
        with pytest.raises(DomainError):
            MicroParams(nu=-1)
        with pytest.raises(DomainError):
            MicroParams(nu=0, mu=(1.0, 1.0))
        with pytest.raises(DomainError):
            MicroParams(nu=0, mu=(0.5,) * 9)

    def test_flavour_permutation_density(self):
        a = density(MicroParams(nu=1, mu=(0.5, 1.3, 2.4)), 3.0)
        b = density(MicroParams(nu=1, mu=(2.4, 0.5, 1.3)), 3.0)
        assert a == pytest.approx(b, rel=1e-12)
