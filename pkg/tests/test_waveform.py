import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from wptsim.waveform import (
    ConstellationSpec,
    MultisineSpec,
    SampledWaveform,
    constellation,
    generate_multisine,
    generate_symbol_stream,
)

F0 = 200e3
FS = 40e6
INV_SQRT2 = 1.0 / math.sqrt(2.0)


def co_phased_branch_closed_form(n, a, t, phi=math.pi / 4):
    """Independent oracle: the closed-form I/Q branches of a co-phased multisine.

    x_I = A sin(N pi f0 t) cos((N+1) pi f0 t + phi) / sin(pi f0 t), x_Q with sin.
    """
    th = np.pi * F0 * np.asarray(t, dtype=float)
    with np.errstate(invalid="ignore", divide="ignore"):
        ratio = np.where(np.abs(np.sin(th)) < 1e-300, float(n), np.sin(n * th) / np.sin(th))
    return a * ratio * np.cos((n + 1) * th + phi), a * ratio * np.sin((n + 1) * th + phi)


class TestSampledWaveform:
    def test_rejects_empty(self):
        with pytest.raises(ValueError):
            SampledWaveform(np.array([]), FS)

    def test_rejects_nonpositive_rate(self):
        with pytest.raises(ValueError):
            SampledWaveform(np.ones(4), 0.0)

    def test_samples_are_immutable(self):
        w = SampledWaveform(np.ones(4, complex), FS)
        with pytest.raises(ValueError):
            w.samples[0] = 0.0

    def test_duration_and_branches(self):
        w = SampledWaveform(np.array([1 + 2j, 3 + 4j]), 2.0)
        assert w.duration == 1.0
        assert np.array_equal(w.i, [1.0, 3.0])
        assert np.array_equal(w.q, [2.0, 4.0])

    def test_real_waveform_q_is_zero(self):
        w = SampledWaveform(np.array([1.0, -1.0]), 2.0)
        assert not w.is_complex
        assert np.array_equal(w.q, [0.0, 0.0])


class TestMultisineSpec:
    def test_requires_positive_amplitudes(self):
        with pytest.raises(ValueError):
            MultisineSpec(np.array([1.0, 0.0]), F0, np.zeros(2))

    def test_requires_matching_lengths(self):
        with pytest.raises(ValueError):
            MultisineSpec(np.ones(3), F0, np.zeros(2))

    def test_co_phased_constructor(self):
        spec = MultisineSpec.co_phased(4, 0.25, F0)
        assert spec.n_tones == 4
        assert spec.is_co_phased
        assert np.all(spec.amplitudes == 0.25)
        assert np.all(spec.phases == math.pi / 4)
        assert spec.highest_frequency == 4 * F0

    def test_mixed_phases_not_co_phased(self):
        spec = MultisineSpec(np.ones(2), F0, np.array([0.0, 0.1]))
        assert not spec.is_co_phased


class TestGenerateMultisine:
    def test_single_tone_has_constant_modulus(self):
        spec = MultisineSpec.co_phased(1, 1.0, F0)
        w = generate_multisine(spec, FS, 1)
        assert w.n_samples == 200
        np.testing.assert_allclose(np.abs(w.samples), 1.0, atol=1e-12)

    def test_co_phased_average_power_is_tone_power_sum(self):
        # E|x|^2 = sum A_n^2 = 4 * (1/4)^2
        spec = MultisineSpec.co_phased(4, 0.25, F0)
        w = generate_multisine(spec, FS, 1)
        assert np.mean(np.abs(w.samples) ** 2) == pytest.approx(0.25, rel=1e-12)

    def test_samples_match_closed_form_branches(self):
        spec = MultisineSpec.co_phased(2, 1.0, F0)
        w = generate_multisine(spec, FS, 1)
        xi, xq = co_phased_branch_closed_form(2, 1.0, w.time_axis())
        np.testing.assert_allclose(w.i, xi, atol=1e-12)
        np.testing.assert_allclose(w.q, xq, atol=1e-12)

    def test_branch_peak_matches_dense_grid_oracle(self):
        # oracle: closed form on a 1e6-point grid over one period
        spec = MultisineSpec.co_phased(2, 1.0, F0)
        w = generate_multisine(spec, 1e6 * F0, 1)
        t = np.arange(10**6) / (1e6 * F0)
        xi, _ = co_phased_branch_closed_form(2, 1.0, t)
        grid_peak = np.abs(xi).max()
        assert np.abs(w.i).max() == pytest.approx(grid_peak, rel=1e-12)
        assert grid_peak == pytest.approx(1.938746370276, abs=1e-9)

    def test_nyquist_violation_names_highest_tone(self):
        spec = MultisineSpec.co_phased(16, 0.1, F0)
        with pytest.raises(ValueError, match="tone 16 at 3.2e"):
            generate_multisine(spec, 6e6, 1)

    def test_non_integer_period_count_rejected(self):
        spec = MultisineSpec.co_phased(1, 1.0, 300e3)
        with pytest.raises(ValueError, match="integer"):
            generate_multisine(spec, 1e6, 1)

    def test_periodicity_on_integer_grid(self):
        spec = MultisineSpec.co_phased(4, 0.3, F0)
        w = generate_multisine(spec, FS, 2)
        period_samples = int(FS / F0)
        np.testing.assert_allclose(
            w.samples[:period_samples], w.samples[period_samples:], atol=1e-12
        )

    def test_reflection_symmetry_at_quarter_pi_phase(self):
        # phi = pi/4 gives x_I(t) = x_Q(T - t) on the sample grid
        spec = MultisineSpec.co_phased(8, 0.2, F0)
        w = generate_multisine(spec, FS, 1)
        idx = (w.n_samples - np.arange(w.n_samples)) % w.n_samples
        np.testing.assert_allclose(w.i, w.q[idx], atol=1e-12)

    @given(
        scale=st.floats(min_value=1e-3, max_value=1e3),
        n=st.integers(min_value=1, max_value=8),
    )
    @settings(max_examples=25, deadline=None)
    def test_amplitude_scaling_property(self, scale, n):
        base = MultisineSpec.co_phased(n, 0.5, F0)
        scaled = MultisineSpec.co_phased(n, 0.5 * scale, F0)
        w1 = generate_multisine(base, FS, 1)
        w2 = generate_multisine(scaled, FS, 1)
        np.testing.assert_allclose(
            w2.samples, scale * w1.samples, rtol=1e-12, atol=1e-12 * scale * n
        )


class TestConstellations:
    def test_qpsk_points(self):
        spec = constellation("qpsk", 1e6)
        expected = np.array([1 + 1j, -1 + 1j, -1 - 1j, 1 - 1j]) * INV_SQRT2
        np.testing.assert_allclose(np.sort_complex(spec.points), np.sort_complex(expected))
        assert spec.average_power == pytest.approx(1.0, abs=1e-15)
        assert spec.bits_per_symbol == 2

    def test_8psk_points_unit_magnitude_equally_spaced(self):
        spec = constellation("8-psk", 1e6)
        assert spec.points.size == 8
        np.testing.assert_allclose(np.abs(spec.points), 1.0, atol=1e-15)
        angles = np.sort(np.mod(np.angle(spec.points), 2 * np.pi))
        np.testing.assert_allclose(np.diff(angles), np.pi / 4, atol=1e-12)
        assert spec.average_power == pytest.approx(1.0, abs=1e-15)

    def test_8qam_points_per_definition(self):
        spec = constellation("8qam", 1e6)
        expected = np.array(
            [1, 1j, -1, -1j, 1 + 1j, -1 + 1j, -1 - 1j, 1 - 1j]
        ) * INV_SQRT2
        np.testing.assert_allclose(np.sort_complex(spec.points), np.sort_complex(expected))
        assert spec.average_power == pytest.approx(0.75, abs=1e-15)
        assert spec.bits_per_symbol == 3

    def test_16qam_average_power_and_corners(self):
        spec = constellation("16-QAM", 1e6)
        assert spec.points.size == 16
        assert spec.average_power == pytest.approx(5.0 / 9.0, abs=1e-15)
        corner = max(spec.points, key=abs)
        assert abs(corner) == pytest.approx(1.0, abs=1e-15)

    def test_all_points_dac_safe(self):
        for name in ("qpsk", "8psk", "8qam", "16qam"):
            spec = constellation(name, 1e6)
            assert np.max(np.abs(spec.points.real)) <= 1.0 + 1e-15
            assert np.max(np.abs(spec.points.imag)) <= 1.0 + 1e-15

    def test_unknown_modulation_rejected(self):
        with pytest.raises(ValueError, match="unknown modulation"):
            constellation("64qam", 1e6)

    def test_out_of_range_points_rejected(self):
        with pytest.raises(ValueError, match="constellation points"):
            ConstellationSpec("QPSK", np.array([1.5, -1.5]), 1e6)


class TestSymbolStream:
    def test_qpsk_power_exactly_one(self):
        w = generate_symbol_stream(constellation("qpsk", 1e6), 1000, FS, seed=3)
        assert np.mean(np.abs(w.samples) ** 2) == pytest.approx(1.0, abs=1e-12)

    def test_rectangular_hold(self):
        spec = constellation("qpsk", 1e6)
        w = generate_symbol_stream(spec, 10, FS, seed=0)
        sps = int(FS * spec.bits_per_symbol / spec.bit_rate)
        assert w.n_samples == 10 * sps
        blocks = w.samples.reshape(10, sps)
        assert np.all(blocks == blocks[:, :1])

    def test_deterministic_for_fixed_seed(self):
        spec = constellation("16qam", 20e6)
        w1 = generate_symbol_stream(spec, 500, FS, seed=42)
        w2 = generate_symbol_stream(spec, 500, FS, seed=42)
        assert np.array_equal(w1.samples, w2.samples)
        w3 = generate_symbol_stream(spec, 500, FS, seed=43)
        assert not np.array_equal(w1.samples, w3.samples)

    def test_non_integer_samples_per_symbol_rejected(self):
        with pytest.raises(ValueError, match="samples per symbol"):
            generate_symbol_stream(constellation("8psk", 1e6 * 1.1), 10, FS, seed=0)

    @pytest.mark.parametrize(
        "name,expected",
        [("qpsk", 1.0), ("8psk", 1.0), ("8qam", 0.75), ("16qam", 5.0 / 9.0)],
    )
    def test_empirical_power_converges(self, name, expected):
        # law of large numbers at 1e5 symbols; also within 3 sigma of the mean
        spec = constellation(name, 20e6)
        w = generate_symbol_stream(spec, 10**5, FS, seed=11)
        per_symbol = np.abs(w.samples[:: int(FS * spec.bits_per_symbol / spec.bit_rate)]) ** 2
        sigma = np.std(np.abs(spec.points) ** 2) / math.sqrt(per_symbol.size)
        empirical = per_symbol.mean()
        assert abs(empirical - expected) <= 0.01
        assert abs(empirical - expected) <= max(3 * sigma, 1e-12)
