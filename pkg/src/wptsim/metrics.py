"""Waveform analysis quantities.

Average and peak power, RF peak-to-average power ratio, error vector
magnitude, carrier-frequency-offset injection and data-aided removal, and
the clipped-multisine power oracle: enumeration of the instants where a
branch crosses the DAC rail, followed by piecewise integration of the
clipped branch over one fundamental period.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.integrate import quad

from .waveform import MultisineSpec, SampledWaveform

#: Grid used to bracket rail crossings before bisection refinement.
DEFAULT_GRID_POINTS = 100_000
_MIN_GRID_POINTS = 10_000
#: Bisection stops when the bracket shrinks below this fraction of a period.
_ROOT_REL_TOL = 1e-10
#: Boundaries closer than this fraction of a period collapse to a tangential
#: touch and are dropped as intervals of measure zero.
_DEGENERATE_REL_TOL = 1e-9


def average_power(w: SampledWaveform) -> float:
    """Mean |x|^2 for complex samples, mean x^2 for real samples."""
    if w.n_samples == 0:  # unreachable through SampledWaveform, kept as a guard
        raise ValueError("cannot take the average power of an empty waveform")
    if w.is_complex:
        return float(np.mean(w.samples.real**2 + w.samples.imag**2))
    return float(np.mean(w.samples**2))


def peak_power(w: SampledWaveform) -> float:
    """Max |x|^2 over the sample grid."""
    if w.is_complex:
        return float(np.max(w.samples.real**2 + w.samples.imag**2))
    return float(np.max(w.samples**2))


@dataclass(frozen=True)
class WaveformMetrics:
    """Envelope statistics of one waveform: peak, average, their ratio."""

    average_power: float
    peak_power: float
    papr: float
    peak_time: float

    def __post_init__(self) -> None:
        if self.average_power < 0 or self.peak_power < 0:
            raise ValueError("powers must be >= 0")
        if not (self.papr >= 1.0 - 1e-12):
            raise ValueError(f"papr must be >= 1, got {self.papr}")


def waveform_metrics(w: SampledWaveform) -> WaveformMetrics:
    """Average power, peak power, envelope PAPR, and the instant of the peak."""
    inst = w.samples.real**2 + w.samples.imag**2 if w.is_complex else w.samples**2
    avg = float(np.mean(inst))
    if avg <= 0:
        raise ValueError("waveform has zero average power")
    k = int(np.argmax(inst))
    pk = float(inst[k])
    return WaveformMetrics(avg, pk, pk / avg, k / w.sample_rate)


def papr(w: SampledWaveform) -> float:
    """RF peak-to-average power ratio.

    For a real passband waveform this is the direct ratio max x^2 / mean x^2.
    For a complex baseband waveform the passband ratio is reported
    analytically from the envelope: the passband peak is twice the envelope
    peak (phases aligned) and the passband average equals the baseband
    average, so PAPR = 2 max|x|^2 / mean|x|^2. An unclipped co-phased
    N-tone multisine gives 2N; a fully clipped one gives 4 / mean|x|^2.
    """
    avg = average_power(w)
    if avg <= 0:
        raise ValueError("papr undefined for a zero-power waveform")
    scale = 2.0 if w.is_complex else 1.0
    return scale * peak_power(w) / avg


def evm(reference: SampledWaveform, distorted: SampledWaveform) -> float:
    """Error vector magnitude sqrt(mean|ref - dist|^2 / mean|ref|^2)."""
    if reference.n_samples != distorted.n_samples:
        raise ValueError(
            f"waveform lengths differ: {reference.n_samples} vs {distorted.n_samples}"
        )
    if not math.isclose(reference.sample_rate, distorted.sample_rate, rel_tol=1e-12):
        raise ValueError(
            f"sample rates differ: {reference.sample_rate:g} vs {distorted.sample_rate:g}"
        )
    p_ref = average_power(reference)
    if p_ref <= 0:
        raise ValueError("evm undefined for a zero-power reference")
    err = np.mean(np.abs(reference.samples - distorted.samples) ** 2)
    return float(np.sqrt(err / p_ref))


@dataclass(frozen=True)
class ClipIntervals:
    """Rail-crossing instants of one branch over a single period (0, T).

    With ``starts_clipped`` the branch satisfies |x_B| = full scale on
    [0, t1], [t2, t3], ..., [tM, T] and is unclipped strictly in between;
    with the flag unset the roles of the segments swap. An unclipped branch
    has no boundaries.
    """

    period: float
    boundaries: np.ndarray
    starts_clipped: bool

    def __post_init__(self) -> None:
        if not (self.period > 0):
            raise ValueError(f"period must be > 0, got {self.period}")
        b = np.asarray(self.boundaries, dtype=np.float64).copy()
        if b.size and (np.any(np.diff(b) <= 0) or b[0] <= 0 or b[-1] >= self.period):
            raise ValueError("boundaries must be strictly increasing inside (0, T)")
        if b.size % 2:
            raise ValueError(
                f"expected an even number of rail crossings per period, got {b.size}"
            )
        b.setflags(write=False)
        object.__setattr__(self, "boundaries", b)
        object.__setattr__(self, "period", float(self.period))

    def _segments(self, want_clipped: bool) -> list[tuple[float, float]]:
        edges = np.concatenate([[0.0], self.boundaries, [self.period]])
        offset = 0 if want_clipped == self.starts_clipped else 1
        return [
            (float(edges[k]), float(edges[k + 1]))
            for k in range(offset, len(edges) - 1, 2)
        ]

    def clipped_segments(self) -> list[tuple[float, float]]:
        return self._segments(want_clipped=True)

    def unclipped_segments(self) -> list[tuple[float, float]]:
        return self._segments(want_clipped=False)


def _branch_values(spec: MultisineSpec, t: np.ndarray, branch: str) -> np.ndarray:
    x = spec.evaluate(t)
    if branch == "I":
        return x.real
    if branch == "Q":
        return x.imag
    raise ValueError(f"branch must be 'I' or 'Q', got {branch!r}")


def find_clip_intervals(
    spec: MultisineSpec,
    branch: str = "I",
    grid_points: int = DEFAULT_GRID_POINTS,
    full_scale: float = 1.0,
) -> ClipIntervals:
    """Locate the crossings of |x_B(t)| = full_scale over one period.

    Sign changes of |x_B| - full_scale are bracketed on a uniform grid and
    refined by bisection to a relative tolerance of 1e-10; the closed form
    of the co-phased branch has no tractable inverse, so the roots are
    numerical by necessity. Tangential touches (an extremum exactly on the
    rail) produce intervals of measure zero and are dropped.
    """
    if not spec.is_co_phased:
        raise ValueError("clip-interval enumeration is defined for co-phased multisines")
    if grid_points < _MIN_GRID_POINTS:
        raise ValueError(f"grid_points must be >= {_MIN_GRID_POINTS}, got {grid_points}")
    period = spec.period

    def excess(t: float | np.ndarray) -> float | np.ndarray:
        return np.abs(_branch_values(spec, np.asarray(t, dtype=np.float64), branch)) - full_scale

    t_grid = np.linspace(0.0, period, grid_points + 1)
    g = np.asarray(excess(t_grid))

    # grid points exactly on the rail count as unclipped so that tangential
    # touches (no sign change on either side) produce no interval
    clipped = g > 0
    roots: list[float] = []
    for k in np.flatnonzero(clipped[:-1] != clipped[1:]):
        lo, hi = t_grid[k], t_grid[k + 1]
        lo_clipped = bool(clipped[k])
        for _ in range(200):
            if hi - lo <= _ROOT_REL_TOL * period:
                break
            mid = 0.5 * (lo + hi)
            if (float(excess(mid)) > 0) == lo_clipped:
                lo = mid
            else:
                hi = mid
        roots.append(0.5 * (lo + hi))

    # collapse pairs from tangential touches and drop boundary-of-period roots
    kept: list[float] = []
    for r in roots:
        if r <= _DEGENERATE_REL_TOL * period or r >= period * (1.0 - _DEGENERATE_REL_TOL):
            continue
        if kept and (r - kept[-1]) < _DEGENERATE_REL_TOL * period:
            kept.pop()
            continue
        kept.append(r)

    starts_clipped = bool(g[0] > 0)
    return ClipIntervals(period, np.asarray(kept), starts_clipped)


def piecewise_average_power(
    spec: MultisineSpec,
    intervals_i: ClipIntervals | None = None,
    intervals_q: ClipIntervals | None = None,
    *,
    full_scale: float = 1.0,
    grid_points: int = DEFAULT_GRID_POINTS,
) -> float:
    """Average power of the DAC-clipped multisine by piecewise integration.

    Per branch over one period: clipped segments contribute their length
    times full_scale^2 and each unclipped segment contributes the adaptive
    Gauss quadrature of x_B(t)^2; the branch results are summed since
    E|x|^2 = E{xI^2} + E{xQ^2}. Reduces to sum(A_n^2) when nothing clips.
    """
    if intervals_i is None:
        intervals_i = find_clip_intervals(spec, "I", grid_points, full_scale)
    if intervals_q is None:
        intervals_q = find_clip_intervals(spec, "Q", grid_points, full_scale)
    total = 0.0
    for branch, intervals in (("I", intervals_i), ("Q", intervals_q)):
        if not math.isclose(intervals.period, spec.period, rel_tol=1e-9):
            raise ValueError(
                f"intervals for branch {branch} have period {intervals.period:g}, "
                f"spec has {spec.period:g}"
            )
        total += _branch_power(spec, branch, intervals, full_scale)
    return total / spec.period


def _branch_power(
    spec: MultisineSpec, branch: str, intervals: ClipIntervals, full_scale: float
) -> float:
    def integrand(t: float) -> float:
        return float(_branch_values(spec, np.asarray(t), branch)) ** 2

    # interval consistency: the branch may not exceed the rail inside a
    # segment declared unclipped (tolerance covers root rounding)
    acc = 0.0
    for a, b in intervals.clipped_segments():
        acc += (b - a) * full_scale**2
    for a, b in intervals.unclipped_segments():
        probes = np.linspace(a, b, 7)[1:-1]
        if np.any(np.abs(_branch_values(spec, probes, branch)) > full_scale * (1.0 + 1e-6)):
            raise ValueError(
                f"branch {branch} exceeds the rail inside ({a:g}, {b:g}) declared unclipped; "
                "intervals are inconsistent with the spec"
            )
        value, _ = quad(integrand, a, b, epsabs=1e-13, epsrel=1e-10, limit=400)
        acc += value
    return acc


def inject_cfo(w: SampledWaveform, offset_hz: float) -> SampledWaveform:
    """Multiply by exp(j 2 pi offset t); models a transmit oscillator offset."""
    if not w.is_complex:
        raise ValueError("CFO injection is defined for complex baseband waveforms")
    if abs(offset_hz) > w.sample_rate / 2:
        raise ValueError(
            f"offset {offset_hz:g} Hz exceeds +-sample_rate/2 ({w.sample_rate / 2:g} Hz)"
        )
    rotation = np.exp(2j * math.pi * offset_hz * w.time_axis())
    return SampledWaveform(w.samples * rotation, w.sample_rate)


def estimate_cfo(w: SampledWaveform, pilot: SampledWaveform) -> tuple[float, float]:
    """Data-aided single-tone fit of the residual rotation against a pilot.

    Returns ``(offset_hz, phase_rad)`` from a magnitude-weighted linear
    least-squares fit to the unwrapped phase of w * conj(pilot).
    """
    if w.n_samples != pilot.n_samples:
        raise ValueError(f"pilot length {pilot.n_samples} != waveform length {w.n_samples}")
    if not math.isclose(w.sample_rate, pilot.sample_rate, rel_tol=1e-12):
        raise ValueError("pilot and waveform sample rates differ")
    z = w.samples * np.conj(pilot.samples)
    weights = np.abs(z)
    if not np.any(weights > 0):
        raise ValueError("pilot correlation is identically zero")
    phase = np.unwrap(np.angle(z))
    t = w.time_axis()
    slope, intercept = np.polyfit(t, phase, 1, w=weights)
    return float(slope / (2.0 * math.pi)), float(intercept)


def compensate_cfo(w: SampledWaveform, pilot: SampledWaveform) -> SampledWaveform:
    """Remove the rotation estimated by :func:`estimate_cfo`."""
    offset_hz, phase = estimate_cfo(w, pilot)
    rotation = np.exp(-1j * (2.0 * math.pi * offset_hz * w.time_axis() + phase))
    return SampledWaveform(w.samples * rotation, w.sample_rate)


def least_squares_scale(reference: SampledWaveform, distorted: SampledWaveform) -> complex:
    """Complex scalar a minimizing ||ref - a * dist||^2 (gain/phase alignment)."""
    if reference.n_samples != distorted.n_samples:
        raise ValueError("waveform lengths differ")
    denom = np.vdot(distorted.samples, distorted.samples)
    if denom == 0:
        raise ValueError("cannot scale a zero waveform onto the reference")
    return complex(np.vdot(distorted.samples, reference.samples) / denom)
