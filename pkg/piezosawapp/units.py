"""
Unit handling: the project-wide dB convention and SI quantity parsing for
run configuration values.
"""

import re
from typing import Dict

import numpy as np

from .models import ModelValidationError

# |S21|_dB = 20 * log10(amplitude) everywhere in the toolkit
DB_PER_DECADE = 20.0

UNIT_SCALES: Dict[str, Dict[str, float]] = {
    'frequency': {'hz': 1.0, 'khz': 1e3, 'mhz': 1e6, 'ghz': 1e9},
    'capacitance': {'f': 1.0, 'pf': 1e-12, 'ff': 1e-15},
    'length': {'m': 1.0, 'mm': 1e-3, 'um': 1e-6, 'µm': 1e-6, 'nm': 1e-9},
    'time': {'s': 1.0, 'ms': 1e-3, 'us': 1e-6, 'µs': 1e-6, 'ns': 1e-9, 'ps': 1e-12},
    'inductance': {'h': 1.0, 'nh': 1e-9, 'ph': 1e-12},
    'voltage': {'v': 1.0, 'mv': 1e-3},
    'energy': {'ev': 1.0},
    'conductance': {'s': 1.0, 'ms': 1e-3, 'us': 1e-6, 'ns': 1e-9},
    'decibel': {'db': 1.0},
    'impedance': {'ohm': 1.0},
    'temperature': {'k': 1.0, 'mk': 1e-3},
    'velocity': {'m/s': 1.0},
}

_QUANTITY_RE = re.compile(
    r'^\s*(?P<number>[+-]?(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?|[+-]?inf)\s*(?P<unit>[^\s\d.+-][^\s]*)?\s*$',
    re.IGNORECASE,
)


def amplitude_to_db(amplitude):
    """Convert linear amplitude(s) to dB; zero maps to -inf"""
    with np.errstate(divide='ignore'):
        result = DB_PER_DECADE * np.log10(np.abs(amplitude))
    return float(result) if np.ndim(result) == 0 else result


def db_to_amplitude(level_db):
    """Convert dB level(s) back to linear amplitude"""
    result = np.power(10.0, np.asarray(level_db, dtype=float) / DB_PER_DECADE)
    return float(result) if np.ndim(result) == 0 else result


def parse_quantity(text: str, kind: str) -> float:
    """
    Parse a number with an optional unit suffix into SI

    Args:
        text: Value such as '4.583 GHz', '318fF', '1323um' or '5063'
        kind: Quantity kind, a key of UNIT_SCALES ('number' for bare values)

    Returns:
        The value in SI units (dB stays in dB, energy in eV)

    Raises:
        ModelValidationError: If the text is not a number or the suffix does not fit the kind
    """
    match = _QUANTITY_RE.match(text or '')
    if not match:
        raise ModelValidationError(f"cannot read a number from '{text}'")
    value = float(match.group('number'))
    unit = match.group('unit')
    if unit is None:
        return value

    scales = UNIT_SCALES.get(kind, {})
    scale = scales.get(unit.lower())
    if scale is None:
        accepted = ', '.join(scales) or 'none'
        raise ModelValidationError(f"unit '{unit}' not accepted for {kind} (accepted: {accepted})")
    return value * scale
