import math
import random

import mpmath
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.integrate import quad

from mzi_tripwire.exceptions import NonPositiveBeta
from mzi_tripwire.source import (
    HeraldEvent,
    SourceParams,
    compensation_delay,
    derive_beta,
    frequency_from_wavelength,
    normalization_constant,
    sample_herald_times,
    sample_heralds,
    temporal_intensity,
    wavepacket_amplitude,
)


def params(**kw):
    return SourceParams(**kw)


class TestDeriveBeta:
    def test_no_crystal_term(self):
        assert derive_beta(params(idler_bandwidth=10.0)) == pytest.approx(0.01, rel=1e-15)

    def test_exact_cancellation_raises(self):
        # gamma * (L J)^2 / 4 == 1 / sigma^2 with L J = sqrt(4 / (0.193 * 0.01))
        lj = math.sqrt(4.0 / (0.193 * 0.01))
        with pytest.raises(NonPositiveBeta):
            SourceParams(idler_bandwidth=10.0, crystal_length=1.0, group_velocity_mismatch=lj)

    def test_against_high_precision(self):
        mpmath.mp.dps = 40
        sigma, L, J, gamma = "3.1623", "1", "0.001", "0.193"
        expected = 1 / mpmath.mpf(sigma) ** 2 - mpmath.mpf(gamma) * (mpmath.mpf(L) * mpmath.mpf(J)) ** 2 / 4
        got = derive_beta(params(idler_bandwidth=3.1623, crystal_length=1.0, group_velocity_mismatch=0.001))
        assert got == pytest.approx(float(expected), rel=1e-14)
        assert got == pytest.approx(0.09999853886996258, rel=1e-14)

    def test_sqrt10_bandwidth(self):
        got = derive_beta(params(idler_bandwidth=math.sqrt(10), crystal_length=1.0, group_velocity_mismatch=0.001))
        assert got == pytest.approx(0.1 - 0.193e-6 / 4, rel=1e-13)

    @settings(max_examples=60, deadline=None)
    @given(
        sigma=st.floats(1.0, 50.0),
        L=st.floats(0.0, 5.0),
        J=st.floats(0.0, 0.01),
        gamma=st.floats(0.01, 0.5),
        bump=st.floats(1e-3, 1.0),
    )
    def test_monotone_decreasing(self, sigma, L, J, gamma, bump):
        base = derive_beta(params(idler_bandwidth=sigma, crystal_length=L, group_velocity_mismatch=J,
                                  sinc_gaussian_factor=gamma))
        for kw in (dict(idler_bandwidth=sigma + bump, crystal_length=L, group_velocity_mismatch=J,
                        sinc_gaussian_factor=gamma),
                   dict(idler_bandwidth=sigma, crystal_length=L + bump, group_velocity_mismatch=J,
                        sinc_gaussian_factor=gamma),
                   dict(idler_bandwidth=sigma, crystal_length=L, group_velocity_mismatch=J + bump * 1e-3,
                        sinc_gaussian_factor=gamma),
                   dict(idler_bandwidth=sigma, crystal_length=L, group_velocity_mismatch=J,
                        sinc_gaussian_factor=gamma + bump)):
            try:
                assert derive_beta(params(**kw)) <= base
            except NonPositiveBeta:
                pass

    def test_pump_frequency_consistency(self):
        assert params().pump_frequency == pytest.approx(299792458.0 / 400.0)
        params(pump_frequency=frequency_from_wavelength(400.0))
        with pytest.raises(ValueError):
            params(pump_frequency=1.0)


class TestDelayAndNormalisation:
    def test_compensation_delay(self):
        assert compensation_delay(params()) == 0.0
        # gamma = 0 keeps beta positive for this large mismatch
        p = params(crystal_length=1.0, group_velocity_mismatch=4 * math.pi, sinc_gaussian_factor=0.0)
        assert compensation_delay(p) == pytest.approx(-1.0)
        assert compensation_delay(params(crystal_length=2.0, group_velocity_mismatch=0.001)) == pytest.approx(
            -1.5915494309189535e-4, rel=1e-12)

    def test_delay_compensated_by_default(self):
        p = params(crystal_length=2.0, group_velocity_mismatch=0.001)
        assert p.delay == 0.0
        p = params(crystal_length=2.0, group_velocity_mismatch=0.001, compensate_delay=False)
        assert p.delay == compensation_delay(p)

    @pytest.mark.parametrize("beta, expected", [
        (math.pi / 2, 1.0),
        (0.01, 0.2824685045811064),
        (8 * math.pi, 2.0),
    ])
    def test_normalization_constant(self, beta, expected):
        assert normalization_constant(beta) == pytest.approx(expected, rel=1e-14)

    def test_normalization_rejects_nonpositive(self):
        with pytest.raises(NonPositiveBeta):
            normalization_constant(0.0)


class TestTemporalIntensity:
    def test_peak_value(self):
        assert temporal_intensity(math.pi / 2, 0.0, 0.0) == pytest.approx(2.0, rel=1e-15)

    @pytest.mark.parametrize("beta", [0.01, 0.1, math.pi / 2, 3.0])
    def test_unit_normalised(self, beta):
        s = math.sqrt(beta)
        total, _ = quad(lambda t: temporal_intensity(beta, 0.3, t), 0.3 - 10 * s, 0.3 + 10 * s,
                        epsabs=1e-13, epsrel=1e-13, limit=200)
        assert total == pytest.approx(1.0, abs=1e-9)

    def test_tail_vanishes(self):
        beta = 0.01
        assert temporal_intensity(beta, 0.0, 10 * math.sqrt(beta)) < 1e-300

    @settings(max_examples=50, deadline=None)
    @given(beta=st.floats(1e-3, 10.0), c=st.floats(-5, 5), d=st.floats(0, 3))
    def test_symmetric(self, beta, c, d):
        assert temporal_intensity(beta, c, c + d) == pytest.approx(temporal_intensity(beta, c, c - d), rel=1e-12)

    def test_amplitude_squares_to_intensity(self):
        t = np.linspace(-0.3, 0.3, 101)
        amp = wavepacket_amplitude(0.01, 7.5e5, t)
        np.testing.assert_allclose(np.abs(amp) ** 2, temporal_intensity(0.01, 0.0, t), rtol=1e-12)


def reference_accepted_count(rate, gap, duration, seed):
    """Independent sequential sampler: raw Poisson arrivals, drop any event
    within ``gap`` of the previous raw arrival."""
    rnd = random.Random(seed)
    t, prev, n = 0.0, -math.inf, 0
    while True:
        t += rnd.expovariate(rate)
        if t > duration:
            return n
        if t - prev >= gap:
            n += 1
        prev = t


class TestSampleHeralds:
    def test_zero_duration(self):
        assert sample_heralds(params(), 0.0, seed=1) == []

    def test_deterministic(self):
        p = params(herald_rate=0.5)
        assert sample_heralds(p, 500.0, seed=7) == sample_heralds(p, 500.0, seed=7)
        assert sample_heralds(p, 500.0, seed=7) != sample_heralds(p, 500.0, seed=8)

    def test_events_sorted_with_indices(self):
        events = sample_heralds(params(herald_rate=2.0), 100.0, seed=3)
        assert all(isinstance(e, HeraldEvent) for e in events)
        assert [e.index for e in events] == list(range(len(events)))
        assert all(b.time > a.time for a, b in zip(events, events[1:]))
        assert all(0 < e.time <= 100.0 for e in events)

    def test_minimum_gap_is_hard(self):
        p = params(idler_bandwidth=math.sqrt(10.0), herald_rate=5.0)
        for seed in range(20):
            t = sample_herald_times(p, 2000.0, seed)
            assert np.diff(t).min() >= p.sqrt_beta

    def test_count_mode(self):
        p = params(herald_rate=1.0)
        t = sample_herald_times(p, seed=2, count=10_000)
        assert t.size == 10_000
        # the count rule sees the same stream as the duration rule
        t2 = sample_herald_times(p, float(t[-1]), seed=2)
        np.testing.assert_array_equal(t, t2)

    def test_acceptance_fraction_matches_independent_sampler(self):
        # rate 1/ns, sqrt(beta) = 0.316 ns -> accepted fraction exp(-0.316) = 0.729
        p = params(idler_bandwidth=math.sqrt(10.0), herald_rate=1.0)
        duration = 1e4
        gap = p.sqrt_beta
        ref = np.mean([reference_accepted_count(1.0, gap, duration, s) for s in range(40)])
        frac = ref / duration
        assert frac == pytest.approx(math.exp(-gap), abs=3 * math.sqrt(math.exp(-gap) / duration / 40) + 1e-3)
        ours = len(sample_herald_times(p, duration, seed=11))
        sd = math.sqrt(duration * math.exp(-gap))
        assert abs(ours - duration * math.exp(-gap)) < 3 * sd + 1

    def test_count_over_many_seeds_within_5_sigma(self):
        p = params(idler_bandwidth=math.sqrt(10.0), herald_rate=1.0)
        duration = 2000.0
        accept = math.exp(-p.sqrt_beta)
        expected = duration * accept
        # the thinned process is not Poisson; bound with the raw Poisson spread
        sd = math.sqrt(duration)
        counts = [len(sample_herald_times(p, duration, seed)) for seed in range(100)]
        assert all(abs(c - expected) <= 5 * sd for c in counts)
        assert abs(np.mean(counts) - expected) <= 5 * sd / 10
