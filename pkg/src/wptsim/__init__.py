"""Waveform-level simulation of RF wireless power transfer with a digital radio.

The chain runs digital baseband generation (multisines, PSK/QAM streams)
through a clipping and quantizing DAC, two saturating amplifier stages, a
flat-fading channel, and a threshold-gated energy harvester, and reports
the DC-to-RF, RF-to-RF, and RF-to-DC efficiency decomposition.
"""

from .impairments import (
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
from .iqfile import read_iq, write_iq
from .linkchain import (
    ChannelModel,
    EfficiencyReport,
    HarvesterModel,
    PowerTrace,
    assemble_report,
    default_channel,
    default_harvester,
    harvest,
    load_efficiency_table,
    propagate,
    run_chain,
    transmit,
)
from .metrics import (
    ClipIntervals,
    WaveformMetrics,
    average_power,
    compensate_cfo,
    estimate_cfo,
    evm,
    find_clip_intervals,
    inject_cfo,
    least_squares_scale,
    papr,
    peak_power,
    piecewise_average_power,
    waveform_metrics,
)
from .waveform import (
    ConstellationSpec,
    MultisineSpec,
    SampledWaveform,
    constellation,
    generate_multisine,
    generate_symbol_stream,
)

__version__ = "0.1.0"

__all__ = [
    "ChannelModel",
    "ClipIntervals",
    "ConstellationSpec",
    "DacModel",
    "DcInputModel",
    "EfficiencyReport",
    "HarvesterModel",
    "MultisineSpec",
    "PaStage",
    "PowerTrace",
    "SampledWaveform",
    "TransmitterModel",
    "WaveformMetrics",
    "amplify",
    "assemble_report",
    "average_power",
    "clip",
    "compensate_cfo",
    "constellation",
    "default_channel",
    "default_harvester",
    "default_transmitter",
    "estimate_cfo",
    "evm",
    "find_clip_intervals",
    "generate_multisine",
    "generate_symbol_stream",
    "harvest",
    "inject_cfo",
    "least_squares_scale",
    "load_efficiency_table",
    "papr",
    "peak_power",
    "piecewise_average_power",
    "propagate",
    "quantize",
    "read_iq",
    "run_chain",
    "transmit",
    "upconvert",
    "waveform_metrics",
    "write_iq",
]
