"""Digital transmitter chain impairments.

Models the stages between the ideal baseband samples and the radiated RF
waveform: hard clipping of each IQ branch to the DAC output range,
uniform mid-tread quantization, upconversion of the complex baseband to a
real passband waveform, and two cascaded saturating amplifier stages with
a Rapp-style AM/AM characteristic (no AM/PM).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np
from scipy.signal import resample

from .units import dbm_to_watts
from .waveform import SampledWaveform

SQRT2 = math.sqrt(2.0)

# Table II operating range of the tunable internal-amplifier gain setting.
GAIN_MIN_DB = 40.0
GAIN_MAX_DB = 57.0
EXTERNAL_PA_GAIN_DB = 43.5


@dataclass(frozen=True)
class DacModel:
    """DAC output range (fixed at +-1 full scale) and quantizer resolution."""

    full_scale: float = 1.0
    bits: int = 12

    def __post_init__(self) -> None:
        if not (self.full_scale > 0):
            raise ValueError(f"full_scale must be > 0, got {self.full_scale}")
        if self.bits < 1:
            raise ValueError(f"bits must be >= 1, got {self.bits}")

    @property
    def step(self) -> float:
        """Quantizer step: 2^bits levels across [-full_scale, +full_scale]."""
        return 2.0 * self.full_scale / (2**self.bits - 1)


def _clip_branch(values: np.ndarray, full_scale: float) -> np.ndarray:
    return np.clip(values, -full_scale, full_scale)


def clip(w: SampledWaveform, dac: DacModel) -> SampledWaveform:
    """Hard-limit each branch to the DAC range: out = +-fs beyond, else unchanged."""
    fs = dac.full_scale
    if w.is_complex:
        clipped = _clip_branch(w.samples.real, fs) + 1j * _clip_branch(w.samples.imag, fs)
    else:
        clipped = _clip_branch(w.samples, fs)
    return SampledWaveform(clipped, w.sample_rate)


def _quantize_branch(values: np.ndarray, dac: DacModel) -> np.ndarray:
    # mid-tread: zero is a level; full scale is half a step above the top
    # interior level and rounds back onto +-full_scale after the clamp
    step = dac.step
    return np.clip(step * np.round(values / step), -dac.full_scale, dac.full_scale)


def quantize(w: SampledWaveform, dac: DacModel) -> SampledWaveform:
    """Uniform mid-tread quantizer applied per branch; |error| <= step/2.

    Samples must already lie within the DAC range: run :func:`clip` first.
    """
    limit = dac.full_scale * (1.0 + 1e-12)
    if w.is_complex:
        in_range = np.max(np.abs(w.samples.real)) <= limit and np.max(np.abs(w.samples.imag)) <= limit
    else:
        in_range = np.max(np.abs(w.samples)) <= limit
    if not in_range:
        raise ValueError("quantize requires samples within +-full_scale; clip must run first")
    if w.is_complex:
        q = _quantize_branch(w.samples.real, dac) + 1j * _quantize_branch(w.samples.imag, dac)
    else:
        q = _quantize_branch(w.samples, dac)
    return SampledWaveform(q, w.sample_rate)


def upconvert(
    w: SampledWaveform,
    carrier: float,
    passband_rate: float,
    *,
    baseband_bandwidth: float | None = None,
) -> SampledWaveform:
    """Real passband waveform sqrt(2) (cos(2 pi fc t) xI(t) - sin(2 pi fc t) xQ(t)).

    The baseband branches are moved onto the passband grid by Fourier
    (periodic trigonometric) resampling, which preserves grid power exactly
    for whole-period windows. The window must contain an integer number of
    carrier cycles so that average-power identities hold on the grid.

    The passband rate must clear ``2 * (carrier + baseband_bandwidth)``;
    the bandwidth defaults to the conservative bound sample_rate / 2 and
    may be narrowed by callers that know the occupied content.
    """
    if carrier <= 0:
        raise ValueError(f"carrier must be > 0 Hz, got {carrier}")
    bandwidth = w.sample_rate / 2.0 if baseband_bandwidth is None else baseband_bandwidth
    if not (0 <= bandwidth <= w.sample_rate / 2.0):
        raise ValueError(
            f"baseband_bandwidth must lie in [0, sample_rate/2], got {bandwidth:g}"
        )
    required = 2.0 * (carrier + bandwidth)
    if passband_rate < required:
        raise ValueError(
            f"passband rate {passband_rate:g} Hz violates Nyquist: carrier {carrier:g} Hz "
            f"plus baseband bandwidth {bandwidth:g} Hz needs >= {required:g} Hz"
        )
    cycles = carrier * w.duration
    if abs(cycles - round(cycles)) > 1e-6 * max(1.0, cycles):
        raise ValueError(
            f"carrier {carrier:g} Hz fits {cycles:g} cycles in the {w.duration:g} s window; "
            "an integer cycle count is required"
        )
    n_exact = w.n_samples * passband_rate / w.sample_rate
    n_pb = round(n_exact)
    if abs(n_exact - n_pb) > 1e-9 * n_exact:
        raise ValueError(
            f"passband rate {passband_rate:g} Hz gives a non-integer sample count "
            f"({n_exact:g}) over the waveform window"
        )
    baseband = w.samples.astype(np.complex128, copy=False)
    resampled = baseband if n_pb == w.n_samples else resample(baseband, n_pb)
    t = np.arange(n_pb) / passband_rate
    angle = 2.0 * math.pi * carrier * t
    passband = SQRT2 * (np.cos(angle) * resampled.real - np.sin(angle) * resampled.imag)
    return SampledWaveform(passband, passband_rate)


@dataclass(frozen=True)
class PaStage:
    """Memoryless saturating amplifier stage (Rapp AM/AM, phase preserved).

    Output envelope for input envelope v and linear gain g:

        g v / (1 + (g^2 v^2 / P_sat)^p)^(1/(2p))

    so output power never exceeds ``saturation_output_power`` and approaches
    it asymptotically; ``smoothness`` p controls how sharp the knee is.
    """

    small_signal_gain: float
    saturation_output_power: float
    smoothness: float = 2.0

    def __post_init__(self) -> None:
        if not (self.saturation_output_power > 0):
            raise ValueError(
                f"saturation_output_power must be > 0, got {self.saturation_output_power}"
            )
        if not (self.smoothness > 0):
            raise ValueError(f"smoothness must be > 0, got {self.smoothness}")

    @property
    def linear_gain(self) -> float:
        """Amplitude gain 10^(dB/20)."""
        return 10.0 ** (self.small_signal_gain / 20.0)


def amplify(w: SampledWaveform, stage: PaStage) -> SampledWaveform:
    """Apply the stage's AM/AM map per sample; complex phase is untouched."""
    g = stage.linear_gain
    p = stage.smoothness
    power = np.abs(w.samples) ** 2 if w.is_complex else w.samples.astype(np.float64) ** 2
    drive = (g * g) * power / stage.saturation_output_power
    compression = (1.0 + drive**p) ** (1.0 / (2.0 * p))
    return SampledWaveform(g * w.samples / compression, w.sample_rate)


@dataclass(frozen=True)
class DcInputModel:
    """DC draw of the transmitter versus gain setting.

    The radio's own draw falls affinely from ``power_low_w`` at the bottom of
    the gain range to ``power_high_w`` at the top; the external amplifier adds
    a constant ``external_draw_w`` from its bench supply.
    """

    gain_low_db: float = GAIN_MIN_DB
    power_low_w: float = 12.4
    gain_high_db: float = GAIN_MAX_DB
    power_high_w: float = 11.4
    external_draw_w: float = 42.0

    def __post_init__(self) -> None:
        if self.gain_high_db <= self.gain_low_db:
            raise ValueError("gain_high_db must exceed gain_low_db")
        if self.power_low_w <= 0 or self.power_high_w <= 0 or self.external_draw_w < 0:
            raise ValueError("DC powers must be positive (external draw >= 0)")

    def watts(self, gain_db: float) -> float:
        frac = (gain_db - self.gain_low_db) / (self.gain_high_db - self.gain_low_db)
        radio = self.power_low_w + frac * (self.power_high_w - self.power_low_w)
        return radio + self.external_draw_w


@dataclass(frozen=True)
class TransmitterModel:
    """DAC plus the two-stage amplifier lineup and its DC input model.

    ``dac_fullscale_dbm`` is the single scale factor that maps unit
    dimensionless power (DAC full scale) to dBm at the internal-PA input;
    everything downstream of it is computed in watts. With the default
    calibration the external stage's compression knee lands at a gain
    setting of 51 dB for a unit-power waveform.
    """

    dac: DacModel
    internal_pa: PaStage
    external_pa: PaStage
    dc_input: DcInputModel
    dac_fullscale_dbm: float = -56.0
    sample_rate: float = 40e6

    def __post_init__(self) -> None:
        g = self.internal_pa.small_signal_gain
        if not (GAIN_MIN_DB <= g <= GAIN_MAX_DB):
            raise ValueError(
                f"gain setting {g:g} dB outside the supported range "
                f"[{GAIN_MIN_DB:g}, {GAIN_MAX_DB:g}] dB"
            )
        if not (self.sample_rate > 0):
            raise ValueError(f"sample_rate must be > 0, got {self.sample_rate}")

    @property
    def gain_db(self) -> float:
        """The tunable gain setting of the internal amplifier."""
        return self.internal_pa.small_signal_gain

    @property
    def fullscale_watts(self) -> float:
        return dbm_to_watts(self.dac_fullscale_dbm)

    def with_gain(self, gain_db: float) -> "TransmitterModel":
        return replace(self, internal_pa=replace(self.internal_pa, small_signal_gain=gain_db))

    def dc_input_watts(self, gain_db: float | None = None) -> float:
        return self.dc_input.watts(self.gain_db if gain_db is None else gain_db)


def default_transmitter(
    gain_db: float = 51.0,
    *,
    bits: int = 12,
    sample_rate: float = 40e6,
    smoothness: float = 2.0,
) -> TransmitterModel:
    """Transmitter with the default desk-scale calibration.

    Internal stage saturates at 20 dBm (never reached inside the gain
    range); the external stage has 43.5 dB gain and saturates at 38.5 dBm,
    i.e. a -5 dBm input compression threshold, placing the cascade knee at
    a 51 dB gain setting for unit-power baseband signals.
    """
    return TransmitterModel(
        dac=DacModel(full_scale=1.0, bits=bits),
        internal_pa=PaStage(
            small_signal_gain=gain_db,
            saturation_output_power=dbm_to_watts(20.0),
            smoothness=smoothness,
        ),
        external_pa=PaStage(
            small_signal_gain=EXTERNAL_PA_GAIN_DB,
            saturation_output_power=dbm_to_watts(38.5),
            smoothness=smoothness,
        ),
        dc_input=DcInputModel(),
        sample_rate=sample_rate,
    )
