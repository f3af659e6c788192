"""Decibel and dBm conversion helpers."""

from __future__ import annotations

import math


def db_to_linear(db: float) -> float:
    """Power ratio from dB."""
    return 10.0 ** (db / 10.0)


def linear_to_db(ratio: float) -> float:
    """dB from a power ratio; 0 maps to -inf."""
    if ratio < 0:
        raise ValueError(f"power ratio must be >= 0, got {ratio}")
    if ratio == 0:
        return float("-inf")
    return 10.0 * math.log10(ratio)


def dbm_to_watts(dbm: float) -> float:
    return 10.0 ** ((dbm - 30.0) / 10.0)


def watts_to_dbm(watts: float) -> float:
    if watts < 0:
        raise ValueError(f"power must be >= 0 W, got {watts}")
    if watts == 0:
        return float("-inf")
    return 10.0 * math.log10(watts) + 30.0
