import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra import numpy as hnp

from wptsim.impairments import (
    DacModel,
    DcInputModel,
    PaStage,
    TransmitterModel,
    amplify,
    clip,
    default_transmitter,
    quantize,
    upconvert,
)
from wptsim.metrics import average_power, evm, papr
from wptsim.units import dbm_to_watts
from wptsim.waveform import MultisineSpec, SampledWaveform, generate_multisine

F0 = 200e3
FS = 40e6
DAC = DacModel()

complex_arrays = hnp.arrays(
    np.complex128,
    st.integers(min_value=1, max_value=64),
    elements=st.complex_numbers(max_magnitude=10, allow_nan=False, allow_infinity=False),
)


def _wave(samples):
    return SampledWaveform(np.atleast_1d(samples), FS)


class TestClip:
    def test_clips_each_branch_to_one(self):
        w = clip(_wave([1.5 + 0.3j]), DAC)
        assert w.samples[0] == 1.0 + 0.3j

    def test_in_range_sample_unchanged(self):
        w = clip(_wave([0.5 - 0.5j]), DAC)
        assert w.samples[0] == 0.5 - 0.5j

    def test_negative_rail(self):
        w = clip(_wave([-2.0 - 1.2j]), DAC)
        assert w.samples[0] == -1.0 - 1.0j

    def test_unclipped_multisine_passes_through(self):
        spec = MultisineSpec.co_phased(4, 0.25, F0)
        w = generate_multisine(spec, FS, 1)
        assert np.array_equal(clip(w, DAC).samples, w.samples)

    def test_real_waveform(self):
        w = clip(SampledWaveform(np.array([2.0, -0.25, -3.0]), FS), DAC)
        assert np.array_equal(w.samples, [1.0, -0.25, -1.0])

    @given(complex_arrays)
    @settings(max_examples=50, deadline=None)
    def test_idempotent(self, samples):
        once = clip(_wave(samples), DAC)
        twice = clip(once, DAC)
        assert np.array_equal(once.samples, twice.samples)

    @given(complex_arrays)
    @settings(max_examples=50, deadline=None)
    def test_never_increases_branch_magnitude(self, samples):
        w = _wave(samples)
        c = clip(w, DAC)
        assert np.all(np.abs(c.samples.real) <= np.abs(w.samples.real) + 1e-15)
        assert np.all(np.abs(c.samples.imag) <= np.abs(w.samples.imag) + 1e-15)


class TestQuantize:
    def test_zero_is_a_level(self):
        assert quantize(_wave([0.0 + 0.0j]), DAC).samples[0] == 0.0

    def test_full_scale_representable(self):
        out = quantize(_wave([1.0 - 1.0j]), DAC).samples[0]
        assert out == 1.0 - 1.0j

    @given(
        hnp.arrays(
            np.float64,
            st.integers(min_value=1, max_value=64),
            elements=st.floats(min_value=-1.0, max_value=1.0),
        )
    )
    @settings(max_examples=50, deadline=None)
    def test_half_lsb_error_bound(self, values):
        w = SampledWaveform(values + 0j, FS)
        q = quantize(w, DAC)
        bound = (2.0 / 4095.0) / 2.0 + 1e-15
        assert np.max(np.abs(q.samples.real - values)) <= bound

    @given(
        hnp.arrays(
            np.float64,
            st.integers(min_value=1, max_value=64),
            elements=st.floats(min_value=-1.0, max_value=1.0),
        )
    )
    @settings(max_examples=50, deadline=None)
    def test_idempotent(self, values):
        once = quantize(SampledWaveform(values + 0j, FS), DAC)
        twice = quantize(once, DAC)
        assert np.array_equal(once.samples, twice.samples)

    def test_out_of_range_rejected(self):
        with pytest.raises(ValueError, match="clip"):
            quantize(_wave([1.2 + 0j]), DAC)

    def test_quantization_evm_small_in_unclipped_regime(self):
        # 12-bit DAC on an N=16, A=1/16 multisine: only quantization error
        spec = MultisineSpec.co_phased(16, 1.0 / 16.0, F0)
        ideal = generate_multisine(spec, FS, 1)
        out = quantize(clip(ideal, DAC), DAC)
        value = evm(ideal, out)
        assert value < 1e-3
        assert value == pytest.approx(8.187522131478e-4, rel=1e-9)  # frozen

    def test_fewer_bits_make_coarser_steps(self):
        coarse = DacModel(bits=4)
        w = _wave([0.3 + 0.0j])
        err12 = abs(quantize(w, DAC).samples[0] - w.samples[0])
        err4 = abs(quantize(w, coarse).samples[0] - w.samples[0])
        assert err4 > err12


class TestUpconvert:
    def test_single_tone_becomes_pure_cosine(self):
        # equal-rate path: no resampling, exact sample-wise identity
        spec = MultisineSpec.co_phased(1, 1.0, F0)
        w = generate_multisine(spec, FS, 1)
        pb = upconvert(w, 4e6, FS, baseband_bandwidth=F0)
        t = pb.time_axis()
        expected = math.sqrt(2) * np.cos(2 * np.pi * (4e6 + F0) * t + np.pi / 4)
        np.testing.assert_allclose(pb.samples, expected, atol=1e-12)

    def test_single_tone_papr_is_two(self):
        spec = MultisineSpec.co_phased(1, 1.0, F0)
        w = generate_multisine(spec, 512e6, 1)
        pb = upconvert(w, 4e6, 512e6, baseband_bandwidth=F0)
        assert average_power(pb) == pytest.approx(1.0, rel=1e-9)
        assert papr(pb) == pytest.approx(2.0, rel=5e-3)

    def test_zero_baseband_gives_zero_passband(self):
        w = SampledWaveform(np.zeros(200, complex), FS)
        pb = upconvert(w, 4e6, 64e6)
        assert np.all(pb.samples == 0.0)

    def test_clipped_multisine_power_identity(self):
        # phi = pi/4 makes passband average power equal the baseband power
        spec = MultisineSpec.co_phased(2, 1.0, F0)
        w = clip(generate_multisine(spec, FS, 1), DAC)
        pb = upconvert(w, 4e6, 64e6)
        p_bb = average_power(w)
        assert abs(average_power(pb) - p_bb) / p_bb < 1e-6

    def test_other_phase_within_one_percent(self):
        spec = MultisineSpec.co_phased(4, 1.0, F0, phase=0.0)
        w = clip(generate_multisine(spec, FS, 1), DAC)
        pb = upconvert(w, 4e6, 64e6)
        p_bb = average_power(w)
        assert abs(average_power(pb) - p_bb) / p_bb < 1e-2

    def test_nyquist_violation_rejected(self):
        w = generate_multisine(MultisineSpec.co_phased(1, 1.0, F0), FS, 1)
        with pytest.raises(ValueError, match="Nyquist"):
            upconvert(w, 30e6, 64e6)

    def test_non_integer_carrier_cycles_rejected(self):
        w = generate_multisine(MultisineSpec.co_phased(1, 1.0, F0), FS, 1)
        with pytest.raises(ValueError, match="cycle"):
            upconvert(w, 4.1e6, 64e6)

    def test_output_is_real(self):
        w = generate_multisine(MultisineSpec.co_phased(2, 0.5, F0), FS, 1)
        pb = upconvert(w, 4e6, 64e6)
        assert not pb.is_complex
        assert pb.sample_rate == 64e6


class TestAmplify:
    def test_linear_region(self):
        stage = PaStage(small_signal_gain=20.0, saturation_output_power=1.0)
        w = _wave([1e-4 + 0j])
        out = amplify(w, stage)
        assert abs(out.samples[0]) == pytest.approx(10.0 * 1e-4, rel=1e-2)

    def test_saturation_asymptote(self):
        stage = PaStage(small_signal_gain=20.0, saturation_output_power=1.0)
        out = amplify(_wave([100.0 + 0j]), stage)
        assert abs(out.samples[0]) ** 2 == pytest.approx(1.0, rel=1e-4)
        assert abs(out.samples[0]) ** 2 <= 1.0

    def test_phase_preserved(self):
        stage = PaStage(small_signal_gain=10.0, saturation_output_power=1.0)
        w = _wave([0.3 * np.exp(1j * 1.234)])
        out = amplify(w, stage)
        assert np.angle(out.samples[0]) == pytest.approx(1.234, abs=1e-12)

    @given(
        hnp.arrays(
            np.float64,
            st.integers(min_value=2, max_value=64),
            elements=st.floats(min_value=0, max_value=1e3),
            unique=True,
        )
    )
    @settings(max_examples=50, deadline=None)
    def test_monotone_and_bounded(self, envelopes):
        stage = PaStage(small_signal_gain=15.0, saturation_output_power=2.0)
        v = np.sort(envelopes)
        out = amplify(SampledWaveform(v + 0j, FS), stage)
        mags = np.abs(out.samples)
        # non-decreasing up to float rounding once deep in saturation
        assert np.all(np.diff(mags) >= -1e-12)
        assert np.all(mags**2 <= 2.0 * (1 + 1e-12))

    def test_strictly_increasing_below_saturation(self):
        stage = PaStage(small_signal_gain=0.0, saturation_output_power=1.0)
        v = np.linspace(0.01, 2.0, 50)
        out = np.abs(amplify(SampledWaveform(v + 0j, FS), stage).samples)
        assert np.all(np.diff(out) > 0)

    def test_smoothness_validation(self):
        with pytest.raises(ValueError):
            PaStage(small_signal_gain=10.0, saturation_output_power=1.0, smoothness=0.0)
        with pytest.raises(ValueError):
            PaStage(small_signal_gain=10.0, saturation_output_power=-1.0)


class TestTransmitterModel:
    def test_gain_range_enforced(self):
        with pytest.raises(ValueError, match="gain setting"):
            default_transmitter(39.0)
        with pytest.raises(ValueError, match="gain setting"):
            default_transmitter(58.0)
        assert default_transmitter(40.0).gain_db == 40.0

    def test_dc_input_model_endpoints_and_linearity(self):
        dc = DcInputModel()
        assert dc.watts(40.0) == pytest.approx(12.4 + 42.0)
        assert dc.watts(57.0) == pytest.approx(11.4 + 42.0)
        mid = dc.watts(48.5)
        assert mid == pytest.approx((dc.watts(40.0) + dc.watts(57.0)) / 2.0, rel=1e-12)

    def test_with_gain_returns_new_model(self):
        tx = default_transmitter(45.0)
        tx2 = tx.with_gain(50.0)
        assert tx.gain_db == 45.0 and tx2.gain_db == 50.0

    def test_cascade_knee_at_51(self):
        # unit-power drive: the Rapp p=2 cascade tracks the small-signal line
        # within 0.2 dB up to G=46, shows the -1.5 dB knee compression at
        # G=51, and is more than 3 dB compressed at the top of the range
        deviations = {}
        line_offset = None
        for gain in np.arange(40.0, 57.5, 1.0):
            tx = default_transmitter(float(gain))
            w = SampledWaveform(np.ones(8, complex) * math.sqrt(tx.fullscale_watts), FS)
            out = amplify(amplify(w, tx.internal_pa), tx.external_pa)
            out_db = 10 * math.log10(average_power(out))
            if line_offset is None:
                line_offset = out_db - 40.0
            deviations[gain] = (gain + line_offset) - out_db
        for gain, deviation in deviations.items():
            if gain <= 46.0:
                assert deviation <= 0.2, f"G={gain}: {deviation}"
        assert 1.2 <= deviations[51.0] <= 1.8
        assert deviations[57.0] >= 3.0

    def test_default_external_stage_encodes_minus5_dbm_threshold(self):
        tx = default_transmitter()
        assert tx.external_pa.small_signal_gain == 43.5
        sat_in_dbm = -5.0 + 43.5
        assert tx.external_pa.saturation_output_power == pytest.approx(
            dbm_to_watts(sat_in_dbm)
        )
