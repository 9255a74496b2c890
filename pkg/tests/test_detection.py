import math

import numpy as np
import pytest

from mzi_tripwire.detection import (
    DetectionRecord,
    DetectorModel,
    Outcome,
    click_probabilities,
    dump_records,
    dump_schedule,
    load_records,
    load_schedule,
    schedule_from_records,
    simulate_run,
)
from mzi_tripwire.exceptions import ProbabilityOverflow, ScheduleExhausted
from mzi_tripwire.interferometer import (
    Block,
    CrossIntrusion,
    DetectorWindow,
    InterceptResend,
    Normal,
    PhaseSchedule,
    SideIntrusion,
)
from mzi_tripwire.source import HeraldEvent

from conftest import binomial_sigma

N = 100_000


def heralds(n, spacing=1.0):
    return np.arange(n) * spacing


def fractions(records):
    counts = {o: 0 for o in Outcome}
    for r in records:
        counts[r.outcome] += 1
    return {o: c / len(records) for o, c in counts.items()}


class TestDetectorModel:
    def test_validation(self, window):
        with pytest.raises(ValueError):
            DetectorModel(window, efficiency_w1=1.2)
        with pytest.raises(ValueError):
            DetectorModel(window, dark_count_rate=-1.0)

    def test_dark_probability(self):
        assert DetectorModel(DetectorWindow(0.1), dark_count_rate=0.5).dark_probability == pytest.approx(0.05)
        assert DetectorModel(DetectorWindow(0.1)).dark_probability == 0.0


class TestClickProbabilities:
    def test_normal_ideal(self, model, detector, window):
        i0 = model.i0(window)
        assert click_probabilities(model, Normal(), detector) == (i0, 0.0)

    def test_normal_lossy(self, model, window):
        i0 = model.i0(window)
        q1, q2 = click_probabilities(model, Normal(), DetectorModel(window, efficiency_w1=0.8))
        assert q1 == pytest.approx(0.8 * i0, rel=1e-15)
        assert q2 == 0.0

    def test_intercept_resend(self, model, detector, window):
        i0 = model.i0(window)
        assert click_probabilities(model, InterceptResend(), detector) == (i0 / 2, i0 / 2)

    def test_overflow(self, detector, window):
        class Broken:
            def expected_counts(self, scenario, window, schedule=None):
                return 0.8, 0.4

        with pytest.raises(ProbabilityOverflow):
            click_probabilities(Broken(), Normal(), detector)


class TestSimulateRun:
    def test_empty(self, model, detector):
        assert simulate_run(model, Normal(), [], detector, seed=1) == []

    def test_accepts_herald_events(self, model, detector):
        events = [HeraldEvent(0, 1.0), HeraldEvent(1, 3.0)]
        recs = simulate_run(model, Normal(), events, detector, PhaseSchedule.constant(2), seed=1)
        assert [r.herald_time for r in recs] == [1.0, 3.0]
        assert recs[0].window_center == pytest.approx(1.0 + model.geometry.t_B)

    def test_deterministic(self, model, detector):
        a = simulate_run(model, InterceptResend(), heralds(2000), detector, seed=5)
        b = simulate_run(model, InterceptResend(), heralds(2000), detector, seed=5)
        assert a == b
        c = simulate_run(model, InterceptResend(), heralds(2000), detector, seed=6)
        assert a != c

    def test_schedule_exhausted(self, model, detector):
        with pytest.raises(ScheduleExhausted):
            simulate_run(model, Normal(), heralds(10), detector, PhaseSchedule.constant(5), seed=1)

    def test_qrng_drawn_when_no_schedule(self, model, detector):
        recs = simulate_run(model, Normal(), heralds(500), detector, seed=2)
        phases = {r.phi1 for r in recs} | {r.phi2 for r in recs}
        assert phases == {0.0, math.pi}

    @pytest.mark.parametrize("scenario, expected", [
        (Normal(), (1.0, 0.0)),
        (Block(), (0.25, 0.25)),
        (InterceptResend(), (0.5, 0.5)),
        (SideIntrusion(0.25), (0.25, 0.25)),
    ])
    def test_port_fractions_converge(self, model, detector, window, scenario, expected):
        i0 = model.i0(window)
        recs = simulate_run(model, scenario, heralds(N), detector, PhaseSchedule.constant(N), seed=11)
        f = fractions(recs)
        for port, factor in zip((Outcome.W1, Outcome.W2), expected):
            p = factor * i0
            assert abs(f[port] - p) <= 3 * binomial_sigma(p, N) + 1e-12

    def test_no_both_without_dark_counts(self, model, detector):
        recs = simulate_run(model, InterceptResend(), heralds(20_000), detector, seed=3)
        assert all(r.outcome is not Outcome.BOTH for r in recs)

    def test_dark_counts_produce_both(self, model, window):
        det = DetectorModel(window, dark_count_rate=2.0)  # 0.2 per window per port
        recs = simulate_run(model, Block(), heralds(20_000), det, PhaseSchedule.constant(20_000), seed=3)
        f = fractions(recs)
        assert f[Outcome.BOTH] > 0.01

    def test_cross_intrusion_random_fixed_phases(self, model, detector, window):
        # uniformly random secret corner phases: bright-port share averages to 1/2
        rng = np.random.default_rng(0)
        sched = PhaseSchedule.draw(N, "fixed", rng)
        recs = simulate_run(model, CrossIntrusion(0.3), heralds(N), detector, sched, seed=4)
        f = fractions(recs)
        # per-herald Bernoulli with mixed p: variance bounded by p(1-p)
        p = 0.5 * model.i0(window)
        assert abs(f[Outcome.W1] - p) <= 3 * binomial_sigma(p, N)

    def test_merged_runs_halve_theta_variance(self, model, detector):
        n = 2000
        singles, merged = [], []
        for rep in range(50):
            a = simulate_run(model, InterceptResend(), heralds(n), detector, PhaseSchedule.constant(n),
                             seed=[rep, 0])
            b = simulate_run(model, InterceptResend(), heralds(n), detector, PhaseSchedule.constant(n),
                             seed=[rep, 1])

            def counts(recs):
                c = np.array([r.outcome.indicators for r in recs]).sum(axis=0)
                return c[0], c[1]

            a1, a2 = counts(a)
            b1, b2 = counts(b)
            singles.append(a1 / (a1 + a2))
            merged.append((a1 + b1) / (a1 + a2 + b1 + b2))
        ratio = np.var(merged, ddof=1) / np.var(singles, ddof=1)
        # expected 1/2; with 50 reps the ratio of sample variances spans roughly [0.25, 1]
        assert 0.25 < ratio < 0.85


class TestSerialisation:
    @pytest.mark.parametrize("fmt", ["csv", "json-lines"])
    def test_round_trip_bit_exact(self, model, detector, fmt):
        recs = simulate_run(model, Normal(), np.cumsum(np.random.default_rng(1).exponential(size=300)),
                            detector, seed=9)
        text = dump_records(recs, fmt)
        back = load_records(text, model.geometry.t_B)
        assert back == recs
        assert dump_records(back, fmt) == text

    def test_bad_header(self):
        with pytest.raises(ValueError):
            load_records("a,b,c\n1,2,3\n")

    def test_bad_outcome_has_line(self):
        with pytest.raises(ValueError, match="record 1"):
            load_records("index,t_j,outcome,phi1,phi2\n0,1.0,w3,0.0,0.0\n")

    def test_schedule_round_trip(self):
        s = PhaseSchedule.draw(50, "qrng", np.random.default_rng(2), broadcast_delay=12.5)
        back = load_schedule(dump_schedule(s))
        np.testing.assert_array_equal(back.phi1, s.phi1)
        np.testing.assert_array_equal(back.phi2, s.phi2)
        assert back.mode == "qrng" and back.broadcast_delay == 12.5

    def test_schedule_from_records(self):
        recs = [DetectionRecord(0, 0.0, 0.0, Outcome.W1, 0.0, math.pi)]
        s = schedule_from_records(recs, "qrng")
        assert s.phi2[0] == math.pi
