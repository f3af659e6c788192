"""Digital baseband signal generation.

Two signal families are supported: N-tone multisines with a harmonic
frequency grid f_n = n*f0, and memoryless PSK/QAM symbol streams with
rectangular (sample-and-hold) pulse shaping. Both produce immutable
:class:`SampledWaveform` objects that the rest of the chain consumes.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

TWO_PI = 2.0 * math.pi


@dataclass(frozen=True)
class SampledWaveform:
    """An immutable sequence of samples taken at a fixed rate.

    Samples are complex for baseband signals and real for passband
    signals; amplitudes are in DAC full-scale units. Every processing
    stage returns a new waveform, never mutates one in place.
    """

    samples: np.ndarray
    sample_rate: float

    def __post_init__(self) -> None:
        samples = np.array(self.samples)  # private copy, callers keep theirs
        if samples.ndim != 1:
            raise ValueError(f"samples must be one-dimensional, got shape {samples.shape}")
        if samples.size == 0:
            raise ValueError("samples must be non-empty")
        if np.iscomplexobj(samples):
            samples = samples.astype(np.complex128, copy=False)
        else:
            samples = samples.astype(np.float64, copy=False)
        if not np.all(np.isfinite(samples.view(np.float64))):
            raise ValueError("samples must be finite")
        samples.setflags(write=False)
        object.__setattr__(self, "samples", samples)
        rate = float(self.sample_rate)
        if not (rate > 0 and math.isfinite(rate)):
            raise ValueError(f"sample_rate must be positive and finite, got {rate}")
        object.__setattr__(self, "sample_rate", rate)

    @property
    def n_samples(self) -> int:
        return int(self.samples.size)

    @property
    def duration(self) -> float:
        """Length of the sampled window in seconds."""
        return self.n_samples / self.sample_rate

    @property
    def is_complex(self) -> bool:
        return np.iscomplexobj(self.samples)

    @property
    def i(self) -> np.ndarray:
        """In-phase branch."""
        return self.samples.real

    @property
    def q(self) -> np.ndarray:
        """Quadrature branch (zeros for a real waveform)."""
        return self.samples.imag if self.is_complex else np.zeros_like(self.samples)

    def time_axis(self) -> np.ndarray:
        """Sample instants t_k = k / sample_rate starting at zero."""
        return np.arange(self.n_samples) / self.sample_rate


@dataclass(frozen=True)
class MultisineSpec:
    """Parameters of an N-tone multisine x(t) = sum_n A_n exp(j(2 pi n f0 t + phi_n)).

    Tone n (1-based) sits at frequency n * ``fundamental``. A co-phased
    spec uses one shared amplitude and phase for all tones.
    """

    amplitudes: np.ndarray
    fundamental: float
    phases: np.ndarray

    def __post_init__(self) -> None:
        amps = np.atleast_1d(np.asarray(self.amplitudes, dtype=np.float64)).copy()
        phis = np.atleast_1d(np.asarray(self.phases, dtype=np.float64)).copy()
        if amps.size < 1:
            raise ValueError("a multisine needs at least one tone")
        if amps.shape != phis.shape:
            raise ValueError(
                f"amplitudes and phases must have equal length, got {amps.size} and {phis.size}"
            )
        if not np.all(amps > 0):
            raise ValueError("tone amplitudes must all be > 0")
        if not (self.fundamental > 0):
            raise ValueError(f"fundamental frequency must be > 0, got {self.fundamental}")
        amps.setflags(write=False)
        phis.setflags(write=False)
        object.__setattr__(self, "amplitudes", amps)
        object.__setattr__(self, "phases", phis)
        object.__setattr__(self, "fundamental", float(self.fundamental))

    @classmethod
    def co_phased(
        cls,
        n_tones: int,
        amplitude: float,
        fundamental: float,
        phase: float = math.pi / 4,
    ) -> "MultisineSpec":
        """Equal amplitude A_n = A and equal phase phi_n = phi for all tones."""
        if n_tones < 1:
            raise ValueError(f"n_tones must be >= 1, got {n_tones}")
        return cls(
            amplitudes=np.full(n_tones, float(amplitude)),
            fundamental=fundamental,
            phases=np.full(n_tones, float(phase)),
        )

    @property
    def n_tones(self) -> int:
        return int(self.amplitudes.size)

    @property
    def period(self) -> float:
        """Fundamental period T = 1 / f0 in seconds."""
        return 1.0 / self.fundamental

    @property
    def highest_frequency(self) -> float:
        return self.n_tones * self.fundamental

    @property
    def is_co_phased(self) -> bool:
        return bool(
            np.all(self.amplitudes == self.amplitudes[0])
            and np.all(self.phases == self.phases[0])
        )

    def evaluate(self, t: np.ndarray) -> np.ndarray:
        """Complex tone sum at arbitrary times ``t`` (seconds)."""
        t = np.asarray(t, dtype=np.float64)
        out = np.zeros(t.shape, dtype=np.complex128)
        for n, (a, phi) in enumerate(zip(self.amplitudes, self.phases), start=1):
            out += a * np.exp(1j * (TWO_PI * n * self.fundamental * t + phi))
        return out


def generate_multisine(
    spec: MultisineSpec, sample_rate: float, n_periods: int = 1
) -> SampledWaveform:
    """Sample a multisine on the grid t_k = k / sample_rate over whole periods.

    The waveform spans exactly ``n_periods / f0`` seconds, which requires
    ``n_periods * sample_rate / f0`` to be an integer so grid averages over
    the window are true period averages.
    """
    if n_periods < 1:
        raise ValueError(f"n_periods must be >= 1, got {n_periods}")
    f_max = spec.highest_frequency
    if sample_rate < 2.0 * f_max:
        raise ValueError(
            f"sample rate {sample_rate:g} Hz violates Nyquist for the highest tone "
            f"(tone {spec.n_tones} at {f_max:g} Hz needs >= {2.0 * f_max:g} Hz)"
        )
    n_exact = n_periods * sample_rate / spec.fundamental
    n_samples = round(n_exact)
    if abs(n_exact - n_samples) > 1e-9 * max(1.0, n_exact):
        raise ValueError(
            f"{n_periods} period(s) of f0={spec.fundamental:g} Hz do not fit an integer "
            f"number of samples at {sample_rate:g} Hz ({n_exact:g} samples)"
        )
    t = np.arange(n_samples) / sample_rate
    return SampledWaveform(spec.evaluate(t), sample_rate)


_INV_SQRT2 = 1.0 / math.sqrt(2.0)


def _qpsk_points() -> np.ndarray:
    return np.array([1 + 1j, -1 + 1j, -1 - 1j, 1 - 1j]) * _INV_SQRT2


def _psk8_points() -> np.ndarray:
    return np.exp(1j * TWO_PI * np.arange(8) / 8.0)


def _qam8_points() -> np.ndarray:
    axes = np.array([1, 1j, -1, -1j]) * _INV_SQRT2
    corners = np.array([1 + 1j, -1 + 1j, -1 - 1j, 1 - 1j]) * _INV_SQRT2
    return np.concatenate([axes, corners])


def _qam16_points() -> np.ndarray:
    # corner points land on (+-1 +- j)/sqrt(2), so the level step is 1/(3 sqrt 2)
    levels = np.array([-3, -1, 1, 3]) / (3.0 * math.sqrt(2.0))
    re, im = np.meshgrid(levels, levels)
    return (re + 1j * im).ravel()


_CONSTELLATIONS = {
    "QPSK": _qpsk_points,
    "8-PSK": _psk8_points,
    "8-QAM": _qam8_points,
    "16-QAM": _qam16_points,
}

_NAME_ALIASES = {
    "qpsk": "QPSK",
    "8psk": "8-PSK",
    "8-psk": "8-PSK",
    "8qam": "8-QAM",
    "8-qam": "8-QAM",
    "16qam": "16-QAM",
    "16-qam": "16-QAM",
}


def canonical_modulation_name(name: str) -> str:
    key = name.strip().lower()
    if key not in _NAME_ALIASES:
        raise ValueError(
            f"unknown modulation {name!r}; supported: {', '.join(_CONSTELLATIONS)}"
        )
    return _NAME_ALIASES[key]


@dataclass(frozen=True)
class ConstellationSpec:
    """A memoryless digital modulation: symbol set plus transmit bit rate.

    All supported constellations keep |Re| <= 1 and |Im| <= 1 per point, so
    the symbol stream is DAC-safe by construction and never clips.
    """

    name: str
    points: np.ndarray = field(repr=False)
    bit_rate: float

    def __post_init__(self) -> None:
        points = np.asarray(self.points, dtype=np.complex128).copy()
        if points.ndim != 1 or points.size < 2:
            raise ValueError("constellation needs at least two points")
        k = math.log2(points.size)
        if abs(k - round(k)) > 1e-12:
            raise ValueError(f"constellation size must be a power of two, got {points.size}")
        tol = 1.0 + 1e-12
        if np.max(np.abs(points.real)) > tol or np.max(np.abs(points.imag)) > tol:
            raise ValueError("constellation points must satisfy |Re| <= 1 and |Im| <= 1")
        if not (self.bit_rate > 0):
            raise ValueError(f"bit_rate must be > 0, got {self.bit_rate}")
        points.setflags(write=False)
        object.__setattr__(self, "points", points)
        object.__setattr__(self, "bit_rate", float(self.bit_rate))

    @property
    def bits_per_symbol(self) -> int:
        return int(round(math.log2(self.points.size)))

    @property
    def symbol_rate(self) -> float:
        return self.bit_rate / self.bits_per_symbol

    @property
    def average_power(self) -> float:
        """Mean |point|^2 over the symbol set (uniform symbols)."""
        return float(np.mean(np.abs(self.points) ** 2))


def constellation(name: str, bit_rate: float) -> ConstellationSpec:
    """Build one of the standard constellations: QPSK, 8-PSK, 8-QAM, 16-QAM."""
    canonical = canonical_modulation_name(name)
    return ConstellationSpec(canonical, _CONSTELLATIONS[canonical](), bit_rate)


def generate_symbol_stream(
    spec: ConstellationSpec,
    n_symbols: int,
    sample_rate: float,
    seed: int,
) -> SampledWaveform:
    """Uniform i.i.d. symbols, rectangular hold, deterministic for a fixed seed.

    Each symbol is held for ``sample_rate * bits_per_symbol / bit_rate``
    samples, which must come out an integer.
    """
    if n_symbols < 1:
        raise ValueError(f"n_symbols must be >= 1, got {n_symbols}")
    sps_exact = sample_rate * spec.bits_per_symbol / spec.bit_rate
    sps = round(sps_exact)
    if sps < 1 or abs(sps_exact - sps) > 1e-9 * max(1.0, sps_exact):
        raise ValueError(
            f"bit rate {spec.bit_rate:g} b/s gives {sps_exact:g} samples per symbol "
            f"at {sample_rate:g} Hz; an integer >= 1 is required"
        )
    rng = np.random.default_rng(seed)
    indices = rng.integers(0, spec.points.size, size=n_symbols)
    samples = np.repeat(spec.points[indices], sps)
    return SampledWaveform(samples, sample_rate)
