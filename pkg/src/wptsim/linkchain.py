"""Channel, harvester, and the end-to-end efficiency chain.

The over-the-air link is a frequency-flat scalar attenuation (log-distance
path loss plus a reflector offset), and the energy harvester is a
threshold-gated rectifier whose conversion efficiency is interpolated from
a (dBm, fraction) table. :func:`run_chain` wires waveform generation, the
DAC, both amplifier stages, the channel, and the harvester into the four
stage powers and the three-way efficiency decomposition

    eta_DC-to-DC = eta_DC-to-RF * eta_RF-to-RF * eta_RF-to-DC.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import impairments, metrics
from .impairments import TransmitterModel
from .units import dbm_to_watts, linear_to_db, watts_to_dbm
from .waveform import (
    ConstellationSpec,
    MultisineSpec,
    SampledWaveform,
    generate_multisine,
    generate_symbol_stream,
)

#: Default conversion-efficiency anchors: no output below the -15 dBm
#: detection threshold, about 20 % at 6 dBm input, one calibratable mid
#: anchor. The published curve has only the two outer anchors; the middle
#: one is a stand-in, not a measurement.
DEFAULT_EFFICIENCY_TABLE = ((-15.0, 0.0), (-5.0, 0.10), (6.0, 0.20))


@dataclass(frozen=True)
class ChannelModel:
    """Frequency-flat attenuation versus distance with a reflector offset.

    Attenuation in dB is ``base_attenuation + 10 * exponent *
    log10(distance / reference_distance) - reflector_offset``; a positive
    offset models constructive scattering from a well-placed reflector.
    """

    distance: float = 1.0
    base_attenuation: float = 30.0
    path_loss_exponent: float = 2.0
    reflector_offset: float = 0.0
    reference_distance: float = 1.0

    def __post_init__(self) -> None:
        if not (self.distance > 0):
            raise ValueError(f"distance must be > 0 m, got {self.distance}")
        if not (self.reference_distance > 0):
            raise ValueError(f"reference_distance must be > 0 m, got {self.reference_distance}")

    @property
    def attenuation_db(self) -> float:
        return (
            self.base_attenuation
            + 10.0 * self.path_loss_exponent * math.log10(self.distance / self.reference_distance)
            - self.reflector_offset
        )


def propagate(p_out_rf: float, channel: ChannelModel) -> float:
    """RF power at the receive antenna for a given radiated power (watts)."""
    if p_out_rf < 0:
        raise ValueError(f"radiated power must be >= 0 W, got {p_out_rf}")
    return p_out_rf * 10.0 ** (-channel.attenuation_db / 10.0)


@dataclass(frozen=True)
class HarvesterModel:
    """Threshold-gated rectifier with a tabulated conversion efficiency.

    ``efficiency_curve`` rows are (input power dBm, efficiency fraction)
    with strictly increasing dBm keys; efficiency is interpolated linearly
    in dBm and clamped at the table ends. Below ``detection_threshold_dbm``
    the harvester produces nothing. ``shape_factor`` is an optional
    multiplier for waveform-dependent rectification; the default of one
    reflects that average input power dominates for low resistive loads.
    """

    detection_threshold_dbm: float = -15.0
    efficiency_curve: tuple[tuple[float, float], ...] = DEFAULT_EFFICIENCY_TABLE
    load_resistance: float = 286.0
    shape_factor: float = 1.0

    def __post_init__(self) -> None:
        curve = tuple((float(p), float(e)) for p, e in self.efficiency_curve)
        if len(curve) < 1:
            raise ValueError("efficiency_curve must have at least one anchor")
        dbm = [p for p, _ in curve]
        if any(b <= a for a, b in zip(dbm, dbm[1:])):
            raise ValueError("efficiency_curve dBm keys must be strictly increasing")
        if any(not (0.0 <= e <= 1.0) for _, e in curve):
            raise ValueError("efficiency fractions must lie in [0, 1]")
        if not (self.load_resistance > 0):
            raise ValueError(f"load_resistance must be > 0 ohm, got {self.load_resistance}")
        if self.shape_factor < 0 or self.shape_factor * max(e for _, e in curve) > 1.0:
            raise ValueError("shape_factor must keep the effective efficiency within [0, 1]")
        object.__setattr__(self, "efficiency_curve", curve)

    def efficiency(self, p_in_dbm: float) -> float:
        if p_in_dbm < self.detection_threshold_dbm:
            return 0.0
        dbm = np.array([p for p, _ in self.efficiency_curve])
        eta = np.array([e for _, e in self.efficiency_curve])
        return float(np.interp(p_in_dbm, dbm, eta)) * self.shape_factor


def load_efficiency_table(path) -> tuple[tuple[float, float], ...]:
    """Read (dBm, fraction) anchors from a two-column text file."""
    data = np.loadtxt(path, dtype=np.float64, ndmin=2)
    if data.shape[1] != 2:
        raise ValueError(f"{path}: expected two columns (dBm, fraction), got {data.shape[1]}")
    return tuple((float(p), float(e)) for p, e in data)


def harvest(p_in_rf: float, harvester: HarvesterModel) -> float:
    """Harvested DC power in watts: zero below threshold, else p * eta(p)."""
    if p_in_rf < 0:
        raise ValueError(f"received power must be >= 0 W, got {p_in_rf}")
    if p_in_rf == 0.0:
        return 0.0
    return p_in_rf * harvester.efficiency(watts_to_dbm(p_in_rf))


@dataclass(frozen=True)
class PowerTrace:
    """The four stage powers of one chain run, all in watts."""

    p_in_dc: float
    p_out_rf: float
    p_in_rf: float
    p_out_dc: float

    def __post_init__(self) -> None:
        for name in ("p_in_dc", "p_out_rf", "p_in_rf", "p_out_dc"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be >= 0 W")
        if self.p_in_rf > self.p_out_rf:
            raise ValueError("received RF power cannot exceed radiated RF power")
        if self.p_out_dc > self.p_in_rf:
            raise ValueError("harvested DC power cannot exceed received RF power")


@dataclass(frozen=True)
class EfficiencyReport:
    """Stage efficiencies and their product; the identity holds by construction."""

    eta_dc_rf: float
    eta_rf_rf: float
    eta_rf_dc: float
    eta_dc_dc: float

    def __post_init__(self) -> None:
        for name in ("eta_dc_rf", "eta_rf_rf", "eta_rf_dc", "eta_dc_dc"):
            value = getattr(self, name)
            if not (0.0 <= value <= 1.0):
                raise ValueError(f"{name} must lie in [0, 1], got {value}")


def assemble_report(trace: PowerTrace) -> EfficiencyReport:
    """Component efficiencies from one trace; eta_dc_dc is the exact product."""
    if trace.p_in_dc <= 0:
        raise ValueError("p_in_dc must be > 0 W to form efficiencies")
    if trace.p_out_rf <= 0 or trace.p_in_rf <= 0:
        raise ValueError("RF stage powers must be > 0 W to form efficiencies")
    eta_dc_rf = trace.p_out_rf / trace.p_in_dc
    eta_rf_rf = trace.p_in_rf / trace.p_out_rf
    eta_rf_dc = trace.p_out_dc / trace.p_in_rf
    return EfficiencyReport(eta_dc_rf, eta_rf_rf, eta_rf_dc, eta_dc_rf * eta_rf_rf * eta_rf_dc)


def default_channel(distance: float = 1.0, reflector_offset: float = 0.0) -> ChannelModel:
    """Channel calibrated so the 1 m chain harvests over 1 mW at the top gain."""
    return ChannelModel(distance=distance, reflector_offset=reflector_offset)


def default_harvester() -> HarvesterModel:
    return HarvesterModel()


def transmit(
    waveform_spec: MultisineSpec | ConstellationSpec,
    tx: TransmitterModel,
    *,
    n_periods: int = 1,
    n_symbols: int = 256,
    seed: int = 0,
) -> tuple[SampledWaveform, SampledWaveform]:
    """Generate, pass through the DAC, and amplify through both PA stages.

    Returns ``(reference, amplified)`` where the reference is the ideal
    digital baseband and the amplified waveform carries sqrt-watt units at
    the external-PA output.
    """
    if isinstance(waveform_spec, MultisineSpec):
        w = generate_multisine(waveform_spec, tx.sample_rate, n_periods)
    elif isinstance(waveform_spec, ConstellationSpec):
        w = generate_symbol_stream(waveform_spec, n_symbols, tx.sample_rate, seed)
    else:
        raise TypeError(f"unsupported waveform spec type {type(waveform_spec).__name__}")
    reference = w
    w = impairments.clip(w, tx.dac)
    w = impairments.quantize(w, tx.dac)
    # one scale factor maps DAC full-scale power to watts at the PA_I input
    w = SampledWaveform(w.samples * math.sqrt(tx.fullscale_watts), w.sample_rate)
    w = impairments.amplify(w, tx.internal_pa)
    w = impairments.amplify(w, tx.external_pa)
    return reference, w


def run_chain(
    waveform_spec: MultisineSpec | ConstellationSpec,
    tx: TransmitterModel,
    channel: ChannelModel,
    harvester: HarvesterModel,
    *,
    n_periods: int = 1,
    n_symbols: int = 256,
    seed: int = 0,
) -> tuple[PowerTrace, EfficiencyReport]:
    """End-to-end run: generate, clip, quantize, amplify twice, propagate, harvest."""
    _, amplified = transmit(
        waveform_spec, tx, n_periods=n_periods, n_symbols=n_symbols, seed=seed
    )
    p_out_rf = metrics.average_power(amplified)
    p_in_rf = propagate(p_out_rf, channel)
    p_out_dc = harvest(p_in_rf, harvester)
    trace = PowerTrace(
        p_in_dc=tx.dc_input_watts(),
        p_out_rf=p_out_rf,
        p_in_rf=p_in_rf,
        p_out_dc=p_out_dc,
    )
    return trace, assemble_report(trace)
