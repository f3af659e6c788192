"""Scenario runner: amplitude-sweep study, chain sweeps, and EVM sweeps.

Scenarios are flat-sectioned ``key = value`` text files (INI syntax, see
:func:`load_scenario` for the schema). Each runner returns plain row
dictionaries so the CLI adds formatting only; CSV output is deterministic
for a fixed seed apart from one leading timestamp comment.
"""

from __future__ import annotations

import concurrent.futures
import configparser
import math
from dataclasses import dataclass, replace
from datetime import datetime, timezone
from pathlib import Path

import numpy as np

from . import impairments, metrics
from .impairments import DacModel, PaStage, TransmitterModel, default_transmitter
from .linkchain import (
    ChannelModel,
    HarvesterModel,
    load_efficiency_table,
    run_chain,
    transmit,
)
from .units import dbm_to_watts, watts_to_dbm
from .waveform import (
    ConstellationSpec,
    MultisineSpec,
    SampledWaveform,
    canonical_modulation_name,
    constellation,
    generate_multisine,
    generate_symbol_stream,
)


class ScenarioError(ValueError):
    """A scenario file is malformed or references an impossible configuration."""


FIG2_N_TONES = (1, 2, 4, 8, 16)
FIG2_FUNDAMENTAL_HZ = 200e3
FIG2_SAMPLE_RATE_HZ = 40e6
FIG2_PHASE = math.pi / 4

SWEEP_VARIABLES = ("gain_db", "amplitude", "n_tones", "bit_rate", "distance_m")
AMPLITUDE_RULES = ("fixed", "one_over_n", "one_over_sqrt_n")


def fig2_amplitude_grid(n_tones: int, base: np.ndarray | None = None) -> np.ndarray:
    """Logarithmic amplitude grid plus the A = 1/N and A = 1/sqrt(N) markers."""
    if base is None:
        base = np.logspace(-2, 2, 60)
    markers = np.array([1.0 / n_tones, 1.0 / math.sqrt(n_tones)])
    return np.unique(np.concatenate([np.asarray(base, dtype=np.float64), markers]))


def fig2_rows(
    n_tones_set=FIG2_N_TONES,
    amplitudes: np.ndarray | None = None,
    *,
    sample_rate: float = FIG2_SAMPLE_RATE_HZ,
    fundamental: float = FIG2_FUNDAMENTAL_HZ,
    phase: float = FIG2_PHASE,
    bits: int = 12,
) -> list[dict]:
    """Average RF power, PAPR, and EVM of DAC-processed multisines versus A.

    One row per (N, A): the co-phased multisine is sampled over one period,
    clipped and quantized, and measured before any amplification.
    """
    dac = DacModel(full_scale=1.0, bits=bits)
    rows = []
    for n in n_tones_set:
        if n < 1:
            raise ScenarioError(f"n_tones values must be >= 1, got {n}")
        for a in fig2_amplitude_grid(n, amplitudes):
            spec = MultisineSpec.co_phased(n, a, fundamental, phase)
            ideal = generate_multisine(spec, sample_rate, n_periods=1)
            dac_out = impairments.quantize(impairments.clip(ideal, dac), dac)
            rows.append(
                {
                    "n_tones": n,
                    "amplitude": a,
                    "avg_rf_power": metrics.average_power(dac_out),
                    "papr": metrics.papr(dac_out),
                    "evm": metrics.evm(ideal, dac_out),
                }
            )
    return rows


@dataclass(frozen=True)
class Scenario:
    """One experiment: waveform, transmitter, link models, and a single sweep."""

    waveform_kind: str  # "multisine" | "constellation"
    transmitter: TransmitterModel
    channel: ChannelModel
    harvester: HarvesterModel
    sweep_variable: str
    sweep_values: tuple
    # multisine parameters
    n_tones: int = 4
    amplitude: float = 1.0
    amplitude_rule: str = "fixed"
    fundamental_hz: float = FIG2_FUNDAMENTAL_HZ
    phase: float = FIG2_PHASE
    n_periods: int = 1
    # constellation parameters
    modulation: str = "QPSK"
    bit_rate: float = 1e6
    n_symbols: int = 256
    # run parameters
    seed: int = 0
    cfo_hz: float = 0.0
    csv_path: str | None = None

    def __post_init__(self) -> None:
        if self.waveform_kind not in ("multisine", "constellation"):
            raise ScenarioError(f"waveform kind must be multisine or constellation, got {self.waveform_kind!r}")
        if self.sweep_variable not in SWEEP_VARIABLES:
            raise ScenarioError(
                f"sweep variable {self.sweep_variable!r} not one of {SWEEP_VARIABLES}"
            )
        if len(self.sweep_values) == 0:
            raise ScenarioError("sweep grid is empty")
        if self.amplitude_rule not in AMPLITUDE_RULES:
            raise ScenarioError(f"amplitude rule {self.amplitude_rule!r} not one of {AMPLITUDE_RULES}")
        if self.sweep_variable in ("amplitude", "n_tones") and self.waveform_kind != "multisine":
            raise ScenarioError(f"sweeping {self.sweep_variable} requires a multisine waveform")
        if self.sweep_variable == "bit_rate" and self.waveform_kind != "constellation":
            raise ScenarioError("sweeping bit_rate requires a constellation waveform")

    def waveform_spec(
        self,
        *,
        n_tones: int | None = None,
        amplitude: float | None = None,
        bit_rate: float | None = None,
    ) -> MultisineSpec | ConstellationSpec:
        if self.waveform_kind == "multisine":
            n = self.n_tones if n_tones is None else n_tones
            if amplitude is not None:
                a = amplitude
            elif self.amplitude_rule == "one_over_n":
                a = 1.0 / n
            elif self.amplitude_rule == "one_over_sqrt_n":
                a = 1.0 / math.sqrt(n)
            else:
                a = self.amplitude
            return MultisineSpec.co_phased(n, a, self.fundamental_hz, self.phase)
        return constellation(self.modulation, self.bit_rate if bit_rate is None else bit_rate)


def _chain_point(scenario: Scenario, value: float) -> dict:
    tx = scenario.transmitter
    channel = scenario.channel
    spec_kwargs: dict = {}
    if scenario.sweep_variable == "gain_db":
        tx = tx.with_gain(value)
    elif scenario.sweep_variable == "amplitude":
        spec_kwargs["amplitude"] = value
    elif scenario.sweep_variable == "n_tones":
        spec_kwargs["n_tones"] = int(value)
    elif scenario.sweep_variable == "bit_rate":
        spec_kwargs["bit_rate"] = value
    elif scenario.sweep_variable == "distance_m":
        channel = replace(channel, distance=value)
    spec = scenario.waveform_spec(**spec_kwargs)
    trace, report = run_chain(
        spec,
        tx,
        channel,
        scenario.harvester,
        n_periods=scenario.n_periods,
        n_symbols=scenario.n_symbols,
        seed=scenario.seed,
    )
    row = {scenario.sweep_variable: value}
    for name, watts in (
        ("p_in_dc", trace.p_in_dc),
        ("p_out_rf", trace.p_out_rf),
        ("p_in_rf", trace.p_in_rf),
        ("p_out_dc", trace.p_out_dc),
    ):
        row[f"{name}_w"] = watts
        row[f"{name}_dbm"] = watts_to_dbm(watts)
    for name, eta in (
        ("eta_dc_rf", report.eta_dc_rf),
        ("eta_rf_rf", report.eta_rf_rf),
        ("eta_rf_dc", report.eta_rf_dc),
        ("eta_dc_dc", report.eta_dc_dc),
    ):
        row[name] = eta
        row[f"{name}_db"] = 10.0 * math.log10(eta) if eta > 0 else float("-inf")
    return row


def chain_sweep_rows(scenario: Scenario, jobs: int = 1) -> list[dict]:
    """One row of stage powers and efficiencies per sweep point, in grid order."""
    values = list(scenario.sweep_values)
    if jobs > 1:
        with concurrent.futures.ProcessPoolExecutor(max_workers=jobs) as pool:
            return list(pool.map(_chain_point, [scenario] * len(values), values))
    return [_chain_point(scenario, v) for v in values]


def _evm_point(scenario: Scenario, value: float) -> dict:
    tx = scenario.transmitter
    bit_rate = scenario.bit_rate
    if scenario.sweep_variable == "gain_db":
        tx = tx.with_gain(value)
    elif scenario.sweep_variable == "bit_rate":
        bit_rate = value
    else:
        raise ScenarioError("evm sweeps support the gain_db and bit_rate variables")
    spec = scenario.waveform_spec(bit_rate=bit_rate)
    reference, amplified = transmit(
        spec, tx, n_symbols=scenario.n_symbols, seed=scenario.seed
    )
    received = (
        metrics.inject_cfo(amplified, scenario.cfo_hz) if scenario.cfo_hz else amplified
    )
    before = metrics.evm(reference, _scaled(reference, received))
    compensated = metrics.compensate_cfo(received, reference)
    after = metrics.evm(reference, _scaled(reference, compensated))
    return {
        "modulation": spec.name,
        "bit_rate": bit_rate,
        "gain_db": tx.gain_db,
        "cfo_injected_hz": scenario.cfo_hz,
        "evm_before_comp": before,
        "evm_after_comp": after,
    }


def _scaled(reference: SampledWaveform, distorted: SampledWaveform) -> SampledWaveform:
    alpha = metrics.least_squares_scale(reference, distorted)
    return SampledWaveform(alpha * distorted.samples, distorted.sample_rate)


def evm_sweep_rows(scenario: Scenario, jobs: int = 1) -> list[dict]:
    """Transmit-quality sweep: EVM before and after CFO compensation."""
    if scenario.waveform_kind != "constellation":
        raise ScenarioError("evm sweeps require a constellation waveform")
    values = list(scenario.sweep_values)
    if jobs > 1:
        with concurrent.futures.ProcessPoolExecutor(max_workers=jobs) as pool:
            return list(pool.map(_evm_point, [scenario] * len(values), values))
    return [_evm_point(scenario, v) for v in values]


def write_csv(path: str | Path, rows: list[dict], *, timestamp: bool = True) -> Path:
    """Write rows with a header; one leading comment line carries the timestamp."""
    if not rows:
        raise ValueError("no rows to write")
    path = Path(path)
    header = list(rows[0].keys())
    lines = []
    if timestamp:
        lines.append(f"# generated {datetime.now(timezone.utc).isoformat()}")
    lines.append(",".join(header))
    for row in rows:
        lines.append(",".join(_format_cell(row[key]) for key in header))
    try:
        path.write_text("\n".join(lines) + "\n")
    except OSError as err:
        raise OSError(f"cannot write CSV to {path}: {err}") from err
    return path


def _format_cell(value) -> str:
    if isinstance(value, str):
        return value
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    return f"{float(value):.12g}"


# ---------------------------------------------------------------------------
# scenario file parsing

_SECTION_KEYS = {
    "waveform": {
        "kind",
        "n_tones",
        "amplitude",
        "amplitude_rule",
        "fundamental_hz",
        "phase",
        "n_periods",
        "modulation",
        "bit_rate",
        "n_symbols",
    },
    "transmitter": {
        "dac_bits",
        "sample_rate_hz",
        "gain_db",
        "dac_fullscale_dbm",
        "internal_sat_dbm",
        "external_gain_db",
        "external_sat_dbm",
        "smoothness",
        "usrp_dc_w_low",
        "usrp_dc_w_high",
        "external_dc_w",
    },
    "channel": {
        "distance_m",
        "base_attenuation_db",
        "path_loss_exponent",
        "reflector_offset_db",
        "reference_distance_m",
    },
    "harvester": {
        "detection_threshold_dbm",
        "load_resistance_ohm",
        "efficiency_table",
        "shape_factor",
    },
    "sweep": {"variable", "grid"},
    "evm": {"cfo_hz"},
    "output": {"csv"},
    "run": {"seed"},
}


def _check_keys(parser: configparser.ConfigParser) -> None:
    for section in parser.sections():
        if section not in _SECTION_KEYS:
            raise ScenarioError(f"unknown section [{section}]")
        unknown = set(parser[section]) - _SECTION_KEYS[section]
        if unknown:
            raise ScenarioError(
                f"unknown key(s) in section [{section}]: {', '.join(sorted(unknown))}"
            )


def _get_float(parser, section: str, key: str, default: float) -> float:
    try:
        return parser.getfloat(section, key, fallback=default)
    except ValueError as err:
        raise ScenarioError(f"section [{section}], key {key}: {err}") from err


def _get_int(parser, section: str, key: str, default: int) -> int:
    value = _get_float(parser, section, key, float(default))
    if abs(value - round(value)) > 1e-9:
        raise ScenarioError(f"section [{section}], key {key}: expected an integer, got {value}")
    return int(round(value))


def parse_grid(text: str, *, integer: bool = False) -> tuple:
    """Grid syntax: comma list ``a, b, c`` or inclusive range ``start:stop:step``."""
    text = text.strip()
    if ":" in text:
        parts = text.split(":")
        if len(parts) != 3:
            raise ScenarioError(f"range grid must be start:stop:step, got {text!r}")
        try:
            start, stop, step = (float(p) for p in parts)
        except ValueError as err:
            raise ScenarioError(f"bad range grid {text!r}: {err}") from err
        if step <= 0 or stop < start:
            raise ScenarioError(f"range grid {text!r} must have step > 0 and stop >= start")
        count = int(math.floor((stop - start) / step + 1e-9)) + 1
        values = [start + k * step for k in range(count)]
    else:
        try:
            values = [float(p) for p in text.split(",") if p.strip()]
        except ValueError as err:
            raise ScenarioError(f"bad grid {text!r}: {err}") from err
    if not values:
        raise ScenarioError(f"grid {text!r} is empty")
    if integer:
        return tuple(int(round(v)) for v in values)
    return tuple(values)


def _build_transmitter(parser) -> TransmitterModel:
    gain = _get_float(parser, "transmitter", "gain_db", 51.0)
    tx = default_transmitter(
        gain,
        bits=_get_int(parser, "transmitter", "dac_bits", 12),
        sample_rate=_get_float(parser, "transmitter", "sample_rate_hz", FIG2_SAMPLE_RATE_HZ),
        smoothness=_get_float(parser, "transmitter", "smoothness", 2.0),
    )
    internal = replace(
        tx.internal_pa,
        saturation_output_power=dbm_to_watts(
            _get_float(parser, "transmitter", "internal_sat_dbm", 20.0)
        ),
    )
    external = PaStage(
        small_signal_gain=_get_float(parser, "transmitter", "external_gain_db", 43.5),
        saturation_output_power=dbm_to_watts(
            _get_float(parser, "transmitter", "external_sat_dbm", 38.5)
        ),
        smoothness=tx.external_pa.smoothness,
    )
    dc = replace(
        tx.dc_input,
        power_low_w=_get_float(parser, "transmitter", "usrp_dc_w_low", 12.4),
        power_high_w=_get_float(parser, "transmitter", "usrp_dc_w_high", 11.4),
        external_draw_w=_get_float(parser, "transmitter", "external_dc_w", 42.0),
    )
    return replace(
        tx,
        internal_pa=internal,
        external_pa=external,
        dc_input=dc,
        dac_fullscale_dbm=_get_float(parser, "transmitter", "dac_fullscale_dbm", -56.0),
    )


def parse_scenario(text: str, *, base_dir: Path | None = None) -> Scenario:
    parser = configparser.ConfigParser(inline_comment_prefixes=("#", ";"))
    try:
        parser.read_string(text)
    except configparser.Error as err:
        raise ScenarioError(f"cannot parse scenario: {err}") from err
    _check_keys(parser)
    for required in ("waveform", "sweep"):
        if not parser.has_section(required):
            raise ScenarioError(f"missing required section [{required}]")

    kind = parser.get("waveform", "kind", fallback="multisine").strip().lower()
    modulation = parser.get("waveform", "modulation", fallback="qpsk")
    if kind == "constellation":
        try:
            modulation = canonical_modulation_name(modulation)
        except ValueError as err:
            raise ScenarioError(f"section [waveform]: {err}") from err

    variable = parser.get("sweep", "variable", fallback="").strip()
    grid_text = parser.get("sweep", "grid", fallback="")
    if not variable or not grid_text:
        raise ScenarioError("section [sweep] must define both variable and grid")
    values = parse_grid(grid_text, integer=(variable == "n_tones"))

    harvester_kwargs: dict = {
        "detection_threshold_dbm": _get_float(parser, "harvester", "detection_threshold_dbm", -15.0),
        "load_resistance": _get_float(parser, "harvester", "load_resistance_ohm", 286.0),
        "shape_factor": _get_float(parser, "harvester", "shape_factor", 1.0),
    }
    table_path = parser.get("harvester", "efficiency_table", fallback="").strip()
    if table_path:
        full = Path(table_path)
        if base_dir is not None and not full.is_absolute():
            full = base_dir / full
        harvester_kwargs["efficiency_curve"] = load_efficiency_table(full)

    try:
        channel = ChannelModel(
            distance=_get_float(parser, "channel", "distance_m", 1.0),
            base_attenuation=_get_float(parser, "channel", "base_attenuation_db", 30.0),
            path_loss_exponent=_get_float(parser, "channel", "path_loss_exponent", 2.0),
            reflector_offset=_get_float(parser, "channel", "reflector_offset_db", 0.0),
            reference_distance=_get_float(parser, "channel", "reference_distance_m", 1.0),
        )
        harvester = HarvesterModel(**harvester_kwargs)
        transmitter = _build_transmitter(parser)
        return Scenario(
            waveform_kind=kind,
            transmitter=transmitter,
            channel=channel,
            harvester=harvester,
            sweep_variable=variable,
            sweep_values=values,
            n_tones=_get_int(parser, "waveform", "n_tones", 4),
            amplitude=_get_float(parser, "waveform", "amplitude", 1.0),
            amplitude_rule=parser.get("waveform", "amplitude_rule", fallback="fixed").strip(),
            fundamental_hz=_get_float(parser, "waveform", "fundamental_hz", FIG2_FUNDAMENTAL_HZ),
            phase=_get_float(parser, "waveform", "phase", FIG2_PHASE),
            n_periods=_get_int(parser, "waveform", "n_periods", 1),
            modulation=modulation,
            bit_rate=_get_float(parser, "waveform", "bit_rate", 1e6),
            n_symbols=_get_int(parser, "waveform", "n_symbols", 256),
            seed=_get_int(parser, "run", "seed", 0),
            cfo_hz=_get_float(parser, "evm", "cfo_hz", 0.0),
            csv_path=parser.get("output", "csv", fallback=None),
        )
    except ScenarioError:
        raise
    except ValueError as err:
        raise ScenarioError(str(err)) from err


def load_scenario(path: str | Path) -> Scenario:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as err:
        raise OSError(f"cannot read scenario {path}: {err}") from err
    return parse_scenario(text, base_dir=path.parent)


def scenario_waveform(scenario: Scenario) -> tuple[SampledWaveform, str]:
    """Generate the scenario's baseband waveform; returns it with a descriptor."""
    spec = scenario.waveform_spec()
    if isinstance(spec, MultisineSpec):
        w = generate_multisine(spec, scenario.transmitter.sample_rate, scenario.n_periods)
        desc = (
            f"multisine(n={spec.n_tones},a={spec.amplitudes[0]:.12g},"
            f"f0={spec.fundamental:.12g},phi={spec.phases[0]:.12g})"
        )
    else:
        w = generate_symbol_stream(
            spec, scenario.n_symbols, scenario.transmitter.sample_rate, scenario.seed
        )
        desc = f"constellation({spec.name},bit_rate={spec.bit_rate:.12g})"
    return w, desc
