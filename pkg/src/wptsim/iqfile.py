"""IQ file writer and reader.

Samples are stored as interleaved 32-bit little-endian float pairs
(I0, Q0, I1, Q1, ...) with a sidecar text file ``<path>.meta`` holding
``key=value`` lines: sample_rate, n_samples, generator, seed.
"""

from __future__ import annotations

from pathlib import Path

import numpy as np

from .waveform import SampledWaveform


def _sidecar_path(path: Path) -> Path:
    return path.with_name(path.name + ".meta")


def write_iq(
    w: SampledWaveform,
    path: str | Path,
    *,
    generator: str = "unknown",
    seed: int | None = None,
) -> Path:
    """Write interleaved float32 LE IQ pairs plus the metadata sidecar."""
    path = Path(path)
    interleaved = np.empty(2 * w.n_samples, dtype="<f4")
    interleaved[0::2] = w.i.astype("<f4")
    interleaved[1::2] = w.q.astype("<f4")
    interleaved.tofile(path)
    meta = _sidecar_path(path)
    meta.write_text(
        f"sample_rate={w.sample_rate:.12g}\n"
        f"n_samples={w.n_samples}\n"
        f"generator={generator}\n"
        f"seed={'' if seed is None else seed}\n"
    )
    return path


def read_iq(path: str | Path) -> tuple[SampledWaveform, dict[str, str]]:
    """Read an IQ file and its sidecar; returns the waveform and raw metadata."""
    path = Path(path)
    meta_path = _sidecar_path(path)
    if not meta_path.exists():
        raise OSError(f"{meta_path}: metadata sidecar not found")
    meta: dict[str, str] = {}
    for line in meta_path.read_text().splitlines():
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        key, _, value = line.partition("=")
        meta[key.strip()] = value.strip()
    try:
        sample_rate = float(meta["sample_rate"])
    except (KeyError, ValueError) as err:
        raise OSError(f"{meta_path}: missing or invalid sample_rate") from err
    raw = np.fromfile(path, dtype="<f4")
    if raw.size % 2:
        raise OSError(f"{path}: odd number of float32 values, not interleaved IQ")
    if raw.size == 0:
        raise OSError(f"{path}: empty IQ file")
    samples = raw[0::2].astype(np.float64) + 1j * raw[1::2].astype(np.float64)
    declared = meta.get("n_samples")
    if declared is not None and int(declared) != samples.size:
        raise OSError(
            f"{path}: sidecar declares {declared} samples but file holds {samples.size}"
        )
    return SampledWaveform(samples, sample_rate), meta
