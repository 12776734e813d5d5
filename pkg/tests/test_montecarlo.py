import math

import numpy as np
import pytest

from tchgue.errors import DomainError, PhaseError
from tchgue.finitekernel import (
    FiniteEnsembleParams,
    ScalingMap,
    correlation_finite,
    micro_density_finite,
    partition_zero_temp,
    quenched_kernel_temp,
)
from tchgue.montecarlo import (
    SamplerConfig,
    default_edges,
    density_histogram,
    reweight,
    sample_spectrum,
)
from tchgue.phase import Phase, PhaseInfo, TemperatureSpectrum, condensate


def _collect(config, limit=None):
    out = []
    for i, eig in enumerate(sample_spectrum(config)):
        out.append(eig)
        if limit is not None and i + 1 >= limit:
            break
    return np.array(out)


class TestSampler:
    def test_exponential_law_n1(self):
        params = FiniteEnsembleParams(N=1, nu=0)
        config = SamplerConfig(params=params, n_samples=100_000, seed=5)
        eigs = _collect(config)
        mean = float(np.mean(eigs))
        stderr = float(np.std(eigs) / math.sqrt(len(eigs)))
        assert abs(mean - 1.0) <= 3.0 * stderr

    def test_trace_moment_with_shift(self):
        micro_a = [0.2, 0.3, 0.45, 0.6]
        params = FiniteEnsembleParams(
            N=4, nu=2, temperature=TemperatureSpectrum(micro_a)
        )
        config = SamplerConfig(params=params, n_samples=40_000, seed=6)
        traces = _collect(config).sum(axis=1)
        expect = 4 * (4 + 2) + 4 * sum(micro_a)
        stderr = float(np.std(traces) / math.sqrt(len(traces)))
        assert abs(float(np.mean(traces)) - expect) <= 3.0 * stderr

    def test_topology_shifts_smallest_eigenvalue(self):
        small = {}
        for nu in (0, 2):
            params = FiniteEnsembleParams(N=4, nu=nu)
            config = SamplerConfig(params=params, n_samples=4000, seed=7)
            small[nu] = np.sort(_collect(config), axis=1)[:, 0]
        med0, med2 = np.median(small[0]), np.median(small[2])
        # crude 3-sigma band on the medians via the binomial quantile bound
        spread = max(np.std(small[0]), np.std(small[2])) / math.sqrt(4000)
        assert med2 > med0 + 3.0 * spread

    def test_config_validation(self):
        params = FiniteEnsembleParams(N=4, nu=0)
        with pytest.raises(DomainError):
            SamplerConfig(params=params, n_samples=0)
        with pytest.raises(DomainError):
            SamplerConfig(params=FiniteEnsembleParams(N=65, nu=0), n_samples=10)
        with pytest.raises(DomainError):
            SamplerConfig(params=params, n_samples=10, workers=0)


class TestReweight:
    def test_quenched_weight_is_zero(self):
        assert reweight(np.array([1.0, 2.0]), (), 0) == 0.0

    def test_single_factor(self):
        x, m = 1.7, 0.8
        assert reweight(np.array([x]), (m,), 0) == pytest.approx(
            math.log(x + m * m), rel=1e-15
        )

    def test_expected_weight_matches_partition(self):
        n, nu, m = 3, 1, 0.9
        params = FiniteEnsembleParams(N=n, nu=nu)
        config = SamplerConfig(params=params, n_samples=30_000, seed=8)
        weights = np.array(
            [math.exp(reweight(e, (m,), nu)) for e in _collect(config)]
        )
        # E[prod_j (x_j + m^2)] = (Z^(1)/Z^(0)) / m^nu
        expect = partition_zero_temp(
            FiniteEnsembleParams(N=n, nu=nu, masses=(m,))
        ).to_float() / m**nu
        stderr = float(np.std(weights) / math.sqrt(len(weights)))
        assert abs(float(np.mean(weights)) - expect) <= 3.0 * stderr

    def test_all_weights_positive(self):
        params = FiniteEnsembleParams(N=4, nu=0)
        config = SamplerConfig(params=params, n_samples=500, seed=9)
        logs = [reweight(e, (0.3, 1.1), 0) for e in _collect(config)]
        assert np.all(np.isfinite(logs))


class TestHistogram:
    def test_mass_accounts_for_truncation(self):
        params = FiniteEnsembleParams(N=4, nu=0)
        config = SamplerConfig(params=params, n_samples=5000, seed=10)
        hist = density_histogram(config)
        assert hist.mass + hist.truncated_mass == pytest.approx(4.0, rel=1e-12)
        assert hist.truncated_mass < 0.01 * 4.0
        assert np.all(hist.stderr >= 0.0) and np.all(np.isfinite(hist.stderr))

    def test_quenched_zero_temperature_matches_analytic(self):
        params = FiniteEnsembleParams(N=4, nu=0)
        config = SamplerConfig(params=params, n_samples=40_000, seed=11)
        edges = np.linspace(0.0, 14.0, 29)
        hist = density_histogram(config, edges=edges)
        centers = 0.5 * (edges[:-1] + edges[1:])
        density = hist.density
        covered = 0
        total = 0
        for i, c in enumerate(centers):
            if hist.stderr[i] == 0.0:
                continue
            analytic = correlation_finite(params, [float(c)])
            total += 1
            if abs(density[i] - analytic) <= 3.0 * hist.stderr[i] + 1e-3:
                covered += 1
        assert covered / total >= 0.9

    def test_quenched_temperature_microscopic(self):
        micro_a = list(np.geomspace(0.1, 0.5, 8))
        params = FiniteEnsembleParams(N=8, nu=0, temperature=TemperatureSpectrum(micro_a))
        info = condensate(params.temperature)
        config = SamplerConfig(params=params, n_samples=30_000, seed=12)
        scaling = (ScalingMap(N=8, xi=info.xi), info)
        hist = density_histogram(config, scaling=scaling)
        quenched = FiniteEnsembleParams(N=8, nu=0, temperature=params.temperature)
        centers = 0.5 * (hist.edges[:-1] + hist.edges[1:])
        density = hist.density
        good = 0
        total = 0
        for i, c in enumerate(centers):
            if hist.stderr[i] == 0.0 or hist.weighted_counts[i] < 30:
                continue
            total += 1
            analytic = micro_density_finite(quenched, info, float(c))
            if abs(density[i] - analytic) <= 3.5 * hist.stderr[i]:
                good += 1
        assert total > 20 and good / total >= 0.9

    def test_microscopic_requires_broken_phase(self):
        params = FiniteEnsembleParams(
            N=4, nu=0, temperature=TemperatureSpectrum([2.0, 2.4, 2.8, 3.2])
        )
        info = condensate(params.temperature)
        assert info.phase is Phase.SYMMETRIC
        config = SamplerConfig(params=params, n_samples=100, seed=13)
        with pytest.raises(PhaseError):
            density_histogram(config, scaling=(ScalingMap(N=4, xi=1.0), info))

    def test_jackknife_close_to_binomial(self):
        params = FiniteEnsembleParams(N=4, nu=0)
        n_samples = 20_000
        config = SamplerConfig(params=params, n_samples=n_samples, seed=14)
        edges = np.linspace(0.0, 14.0, 15)
        hist = density_histogram(config, edges=edges)
        widths = np.diff(edges)
        for i in range(len(widths)):
            counts = hist.weighted_counts[i]
            if counts < 200:
                continue
            p = counts / (4 * n_samples)
            binom = math.sqrt(4 * n_samples * p * (1 - p)) / (n_samples * widths[i])
            assert hist.stderr[i] <= 2.0 * binom
            # eigenvalue repulsion anticorrelates counts near the hard edge,
            # pushing the first bin slightly below the naive binomial error
            low = 0.3 if i == 0 else 0.5
            assert hist.stderr[i] >= low * binom


class TestReproducibility:
    def test_bitwise_same_seed(self):
        params = FiniteEnsembleParams(N=3, nu=1)
        a = density_histogram(SamplerConfig(params=params, n_samples=2000, seed=42))
        b = density_histogram(SamplerConfig(params=params, n_samples=2000, seed=42))
        assert np.array_equal(a.weighted_counts, b.weighted_counts)
        assert np.array_equal(a.stderr, b.stderr)
        assert a.weight_total == b.weight_total

    def test_bitwise_across_worker_counts(self):
        params = FiniteEnsembleParams(N=3, nu=0, masses=(0.7,))
        one = density_histogram(SamplerConfig(params=params, n_samples=3000, seed=43, workers=1))
        two = density_histogram(SamplerConfig(params=params, n_samples=3000, seed=43, workers=2))
        assert np.array_equal(one.weighted_counts, two.weighted_counts)
        assert one.weight_total == two.weight_total
        assert np.array_equal(one.stderr, two.stderr)

    def test_different_seeds_differ(self):
        params = FiniteEnsembleParams(N=3, nu=0)
        a = density_histogram(SamplerConfig(params=params, n_samples=500, seed=1))
        b = density_histogram(SamplerConfig(params=params, n_samples=500, seed=2))
        assert not np.array_equal(a.weighted_counts, b.weighted_counts)


def test_default_edges_shapes():
    params = FiniteEnsembleParams(N=8, nu=0)
    micro = default_edges(params, microscopic=True)
    assert micro[0] == 0.0 and micro[-1] == 12.0 and len(micro) == 61
    raw = default_edges(params, microscopic=False)
    assert raw[-1] > 8.0
