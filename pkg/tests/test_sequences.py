import math
import time

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from afcmem import (DDSequence, DetuningDistribution, InvalidArgumentError, PulseSpec,
                    SequenceStep, apply_sequence, build_sequence, calibrate_systematic_error,
                    collective_coherence, dephasing_envelope, grid_ensemble,
                    precision_requirement, rephasing_fidelity, sample_detunings,
                    sequence_population_error, thermalization_curve,
                    thermalization_monte_carlo, with_transverse_states)

GAUSS27 = DetuningDistribution("gaussian", 27e3)
NARROW = DetuningDistribution("gaussian", 1.0)  # effectively a single line

X, Y = 0.0, math.pi / 2


class TestBuilders:
    def test_xy4_layout(self):
        t_s = 0.5e-3
        seq = build_sequence("xy4", t_s)
        waits = [s.wait_s for s in seq.steps]
        assert waits == [t_s / 8, t_s / 4, t_s / 4, t_s / 4, t_s / 8]
        assert [p.axis_phase for p in seq.pulses] == [X, Y, X, Y]
        assert seq.n_pulses == 4

    def test_xx_layout(self):
        seq = build_sequence("xx", 1e-3)
        assert [s.wait_s for s in seq.steps] == [0.25e-3, 0.5e-3, 0.25e-3]
        assert [p.axis_phase for p in seq.pulses] == [X, X]

    def test_xy8_layout(self):
        seq = build_sequence("xy8", 1e-3)
        assert seq.n_pulses == 8
        assert [p.axis_phase for p in seq.pulses] == [X, Y, X, Y, Y, X, Y, X]

    def test_kdd_is_twenty_pulses(self):
        seq = build_sequence("kdd", 1e-3)
        assert seq.n_pulses == 20
        assert seq.n_pulses % 2 == 0

    @settings(max_examples=40, deadline=None)
    @given(t_s=st.floats(1e-6, 1e-2),
           kind=st.sampled_from(["xx", "xy4", "xy8", "kdd"]))
    def test_waits_close_to_duration(self, t_s, kind):
        seq = build_sequence(kind, t_s)
        total = math.fsum(s.wait_s for s in seq.steps)
        assert abs(total - t_s) <= 1e-12 * t_s

    def test_invalid_duration(self):
        with pytest.raises(InvalidArgumentError):
            build_sequence("xy4", 0.0)
        with pytest.raises(InvalidArgumentError):
            build_sequence("zz", 1e-3)

    def test_even_count_enforced_for_builtins(self):
        with pytest.raises(InvalidArgumentError):
            DDSequence((SequenceStep(1e-3, PulseSpec()),), "xy4", 1e-3)


class TestApplySequence:
    @pytest.mark.parametrize("kind", ["xx", "xy4", "xy8", "kdd"])
    def test_pole_is_fixed_point(self, kind):
        ens = sample_detunings(GAUSS27, 500, seed=2)
        out = apply_sequence(ens, build_sequence(kind, 0.4e-3))
        np.testing.assert_allclose(out.states[:, 2], 1.0, atol=1e-9)
        np.testing.assert_allclose(np.abs(out.states[:, :2]), 0.0, atol=1e-9)

    @pytest.mark.parametrize("kind", ["xx", "xy4", "xy8", "kdd"])
    def test_perfect_echo(self, kind):
        ens = sample_detunings(GAUSS27, 2000, seed=3)
        fid = rephasing_fidelity(ens, build_sequence(kind, 0.5e-3))
        assert abs(fid - 1.0) < 1e-9

    def test_free_decay_matches_envelope(self):
        t = 40e-6
        seq = DDSequence((SequenceStep(t),), "custom", t)
        n = 20000
        ens = with_transverse_states(sample_detunings(GAUSS27, n, seed=4))
        amp = abs(collective_coherence(apply_sequence(ens, seq)))
        assert abs(amp - dephasing_envelope(GAUSS27, t)) < 5.0 / math.sqrt(n) + 1e-3

    def test_deterministic_with_jitter(self):
        ens = sample_detunings(GAUSS27, 100, seed=5)
        seq = build_sequence("xy4", 0.5e-3, PulseSpec(jitter_sd=0.02))
        a = apply_sequence(ens, seq, seed=11)
        b = apply_sequence(ens, seq, seed=11)
        np.testing.assert_array_equal(a.states, b.states)
        c = apply_sequence(ens, seq, seed=12)
        assert not np.array_equal(a.states, c.states)


class TestPopulationError:
    def test_ideal_is_zero(self):
        for kind in ("xx", "xy4", "xy8", "kdd"):
            assert sequence_population_error(build_sequence(kind, 1e-3)) == pytest.approx(0.0, abs=1e-12)

    def test_xx_calibration_hits_target(self):
        eps = calibrate_systematic_error(0.036, kind="xx")
        # closed form at line center: two X rotations compose to 2*pi*(1+eps)
        assert eps == pytest.approx(math.asin(math.sqrt(0.036)) / math.pi, abs=1e-9)
        seq = build_sequence("xx", 0.5e-3, PulseSpec(systematic_error=eps))
        assert sequence_population_error(seq) == pytest.approx(0.036, abs=1e-9)

    def test_xy4_suppression_under_calibrated_error(self):
        eps = calibrate_systematic_error(0.036, kind="xx")
        xy4 = build_sequence("xy4", 0.5e-3, PulseSpec(systematic_error=eps))
        sequence_population_error(xy4)  # warm-up before timing
        t0 = time.perf_counter()
        err = sequence_population_error(xy4)
        elapsed = time.perf_counter() - t0
        assert err <= 0.0036
        assert elapsed < 1e-3

    @pytest.mark.parametrize("eps", np.linspace(0.002, 0.05, 9).tolist())
    def test_robustness_ordering(self, eps):
        pulse = PulseSpec(systematic_error=eps)
        xx = sequence_population_error(build_sequence("xx", 0.5e-3, pulse))
        xy4 = sequence_population_error(build_sequence("xy4", 0.5e-3, pulse))
        assert xy4 <= xx / 10.0

    def test_error_model_override(self):
        seq = build_sequence("xx", 0.5e-3)
        err = sequence_population_error(seq, error_model=PulseSpec(systematic_error=0.02))
        assert err == pytest.approx(math.sin(math.pi * 0.02) ** 2, abs=1e-12)


class TestThermalization:
    def test_closed_form_examples(self):
        curve = thermalization_curve(0.036, 50)
        assert curve.rho_g[50] == pytest.approx(0.488, abs=5e-4)
        assert thermalization_curve(0.002, 10).rho_g[10] == pytest.approx(0.0196, abs=5e-5)
        assert thermalization_curve(0.25, 0).rho_g[0] == 0.0

    def test_monotone_and_bounded(self):
        rho = thermalization_curve(0.01, 400).rho_g
        assert np.all(np.diff(rho) >= 0)
        assert rho[-1] <= 0.5

    def test_out_of_range(self):
        with pytest.raises(InvalidArgumentError):
            thermalization_curve(0.6, 10)

    def test_monte_carlo_agrees_with_closed_form(self):
        eps = calibrate_systematic_error(0.036, kind="xx")
        seq = build_sequence("xx", 0.5e-3, PulseSpec(systematic_error=eps))
        curve = thermalization_monte_carlo(seq, NARROW, n_spins=10_000, n_max=50, seed=6)
        closed = thermalization_curve(0.036, 50).rho_g
        for k in (10, 30, 50):
            assert abs(curve.rho_g_mc[k] - closed[k]) < 3.0 * curve.stderr[k]

    def test_monte_carlo_matches_per_spin_oracle_on_broad_line(self):
        # oracle: average the exact single-spin recursion over the sampled line
        seq = build_sequence("xx", 0.5e-3, PulseSpec(systematic_error=0.03))
        ens = sample_detunings(GAUSS27, 10_000, seed=7)
        eps = np.array([sequence_population_error(seq, d) for d in ens.detunings_hz])
        curve = thermalization_monte_carlo(seq, GAUSS27, n_spins=10_000, n_max=40, seed=7)
        for k in (10, 25, 40):
            exact = float((0.5 * (1.0 - (1.0 - 2.0 * eps) ** k)).mean())
            assert abs(curve.rho_g_mc[k] - exact) < 3.0 * curve.stderr[k]


class TestRephasing:
    def test_no_pulse_decay_reaches_1_over_e(self):
        from afcmem import coherence_1e_time
        t = coherence_1e_time(GAUSS27)
        seq = DDSequence((SequenceStep(t),), "custom", t)
        ens = sample_detunings(GAUSS27, 20_000, seed=8)
        fid = rephasing_fidelity(ens, seq)
        assert fid == pytest.approx(math.exp(-1), abs=0.04)

    def test_one_percent_error_keeps_fidelity(self):
        ens = grid_ensemble(GAUSS27, 4096)
        seq = build_sequence("xy4", 0.5e-3, PulseSpec(systematic_error=0.01))
        assert rephasing_fidelity(ens, seq) >= 0.95

    def test_phase_robustness(self):
        ens = grid_ensemble(GAUSS27, 2048)
        seq = build_sequence("xy4", 0.5e-3, PulseSpec(systematic_error=0.01))
        vals = [rephasing_fidelity(ens, seq, phase=p)
                for p in np.linspace(0.0, 2.0 * math.pi, 8, endpoint=False)]
        assert (max(vals) - min(vals)) / np.mean(vals) < 0.02

    def test_t2_damping_applies(self):
        ens = grid_ensemble(GAUSS27, 512)
        seq = build_sequence("xy4", 0.5e-3)
        assert rephasing_fidelity(ens, seq, t2=0.5e-3) == pytest.approx(math.exp(-1), abs=1e-9)


class TestPrecisionRequirement:
    def test_single_spin(self):
        rep = precision_requirement(1, 0.5)
        assert rep.naive_bound == 1.0

    def test_macroscopic_ensemble(self):
        rep = precision_requirement(10 ** 12, 0.002)
        assert rep.naive_bound == 1e-12
        assert rep.ratio == pytest.approx(2e9)

    def test_invalid(self):
        with pytest.raises(InvalidArgumentError):
            precision_requirement(0, 0.1)
