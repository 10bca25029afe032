"""
Lumped-element interdigital transducer model

Radiation conductance at and around the electromechanical resonance,
insertion loss of one transducer, resonance transmission of a transducer
pair, and the inversion from a measured resonance amplitude to K².
"""

import logging
import math
from dataclasses import dataclass
from typing import Dict, Optional

import numpy as np

from .models import ModelValidationError

logger = logging.getLogger(__name__)

# Weak-coupling limit of the circuit model (G_a << 1/Z0)
K2_UPPER_BOUND = 0.01

# |X / pi - k| below which ga_spectrum reports an exact sinc null
NULL_TOLERANCE = 1e-9


@dataclass(frozen=True)
class GeometryPreset:
    """Electrode-geometry factors entering the radiation conductance"""
    name: str
    gamma: float
    zeta: float


PRESETS: Dict[str, GeometryPreset] = {
    preset.name: preset for preset in (
        GeometryPreset('split-finger-supplement', gamma=1.0836, zeta=1.414),
        GeometryPreset('split-finger-maintext', gamma=1.414, zeta=1.0836),
        GeometryPreset('unity-ratio', gamma=1.0, zeta=1.0),
    )
}

# Only zeta/gamma = 1 reproduces K² = 2.32e-7 from a -99 dB resonance
DEFAULT_PRESET = 'unity-ratio'


def get_preset(name: str) -> GeometryPreset:
    try:
        return PRESETS[name]
    except KeyError:
        raise ModelValidationError(
            f"unknown geometry preset '{name}' (choose from {', '.join(PRESETS)})"
        ) from None


@dataclass(frozen=True)
class IdtDesign:
    """
    Lumped transducer description

    Attributes:
        n_periods: Number of electrode periods N
        f0: Electromechanical resonance in Hz
        cg: Geometric capacitance in F
        gamma: Geometry factor
        zeta: Geometry factor
        z0: Reference impedance in Ohm
    """
    n_periods: int
    f0: float
    cg: float
    gamma: float = 1.0
    zeta: float = 1.0
    z0: float = 50.0

    def __post_init__(self):
        if int(self.n_periods) != self.n_periods or self.n_periods < 1:
            raise ModelValidationError(f"n_periods must be an integer >= 1, got {self.n_periods}")
        for name in ('f0', 'cg', 'gamma', 'zeta', 'z0'):
            value = getattr(self, name)
            if not (math.isfinite(value) and value > 0):
                raise ModelValidationError(f"{name} must be > 0, got {value}")

    @classmethod
    def from_preset(cls, n_periods: int, f0: float, cg: float,
                    preset: str = DEFAULT_PRESET, z0: float = 50.0) -> 'IdtDesign':
        geometry = get_preset(preset)
        return cls(n_periods=n_periods, f0=f0, cg=cg, gamma=geometry.gamma, zeta=geometry.zeta, z0=z0)

    @property
    def omega0(self) -> float:
        return 2.0 * math.pi * self.f0

    @property
    def capacitive_term(self) -> float:
        """(omega0 * Cg * Z0)^2, the capacitive mismatch of the unmatched transducer"""
        return (self.omega0 * self.cg * self.z0) ** 2


@dataclass(frozen=True)
class RadiationAdmittance:
    """Y_a = G_a + i B_a; B_a defaults to 0 (negligible radiation susceptance)"""
    g_a: float
    b_a: float = 0.0

    def __post_init__(self):
        if not (math.isfinite(self.g_a) and self.g_a >= 0):
            raise ModelValidationError(f"g_a must be >= 0, got {self.g_a}")
        if not math.isfinite(self.b_a):
            raise ModelValidationError(f"b_a must be finite, got {self.b_a}")


def ga_at_resonance(design: IdtDesign, k2: float) -> float:
    """
    Radiation conductance at f0: 8 K² gamma Cg f0 N / zeta

    Raises:
        ModelValidationError: If k2 is negative or outside the weak-coupling range
    """
    if not math.isfinite(k2) or k2 < 0:
        raise ModelValidationError(f"k2 must be >= 0, got {k2}")
    if k2 >= K2_UPPER_BOUND:
        raise ModelValidationError(
            f"k2 = {k2} is outside the weak-coupling model (k2 < {K2_UPPER_BOUND})"
        )
    return 8.0 * k2 * design.gamma * design.cg * design.f0 * design.n_periods / design.zeta


def ga_spectrum(design: IdtDesign, ga0: float, f):
    """
    Radiation conductance versus frequency: ga0 * sinc²(N pi (f - f0) / f0)

    Accepts a scalar or an array of frequencies. numpy's normalized sinc handles
    the removable singularity at f0 and puts the nulls at f0 (1 +/- k/N).
    """
    if ga0 < 0:
        raise ModelValidationError(f"ga0 must be >= 0, got {ga0}")
    freqs = np.asarray(f, dtype=float)
    if np.any(freqs <= 0):
        raise ModelValidationError("frequencies must be > 0")
    x = design.n_periods * (freqs - design.f0) / design.f0
    result = ga0 * np.sinc(x) ** 2
    # nulls are exact zeros so lossless points stay lossless downstream
    nearest = np.round(x)
    result = np.where((nearest != 0) & (np.abs(x - nearest) < NULL_TOLERANCE), 0.0, result)
    return float(result) if result.ndim == 0 else result


def insertion_loss(design: IdtDesign, ya: RadiationAdmittance):
    """
    Power fraction delivered from the source into the forward acoustic wave

    2 Ga Z0 / [(1 + Ga Z0)^2 + (Z0 (omega0 Cg + Ba))^2], always in [0, 1].
    """
    return float(insertion_loss_curve(design, ya.g_a, ya.b_a))


def insertion_loss_curve(design: IdtDesign, g_a, b_a: float = 0.0) -> np.ndarray:
    """insertion_loss evaluated for an array of conductances, e.g. a ga_spectrum result"""
    ga_z0 = np.asarray(g_a, dtype=float) * design.z0
    reactive = design.z0 * (design.omega0 * design.cg + b_a)
    return 2.0 * ga_z0 / ((1.0 + ga_z0) ** 2 + reactive ** 2)


def _check_prop_loss(prop_loss: float, allow_zero: bool) -> None:
    lower_ok = prop_loss >= 0 if allow_zero else prop_loss > 0
    if not (math.isfinite(prop_loss) and lower_ok and prop_loss <= 1):
        bound = '0 <=' if allow_zero else '0 <'
        raise ModelValidationError(f"prop_loss must satisfy {bound} L <= 1, got {prop_loss}")


def s21_resonance(design: IdtDesign, ga0: float, prop_loss: float = 1.0) -> float:
    """
    Transmission of a transducer pair at resonance

    Args:
        design: Transducer shared by transmitter and receiver
        ga0: Radiation conductance at f0 in S
        prop_loss: Amplitude transmission L of the acoustic path, 0..1

    Returns:
        2 ga0 Z0 L / (1 + (omega0 Cg Z0)^2)
    """
    _check_prop_loss(prop_loss, allow_zero=True)
    if ga0 < 0:
        raise ModelValidationError(f"ga0 must be >= 0, got {ga0}")
    return 2.0 * ga0 * design.z0 * prop_loss / (1.0 + design.capacitive_term)


def s21_transducer_pair(design: IdtDesign, ya_tx: RadiationAdmittance,
                        ya_rx: Optional[RadiationAdmittance] = None,
                        prop_loss: float = 1.0, receiver: Optional[IdtDesign] = None) -> float:
    """
    Transmission sqrt(IL_t * IL_r) * L without the weak-coupling simplification

    The receiver defaults to the transmitter (same design and admittance).
    """
    _check_prop_loss(prop_loss, allow_zero=True)
    ya_rx = ya_rx or ya_tx
    receiver = receiver or design
    il_t = insertion_loss(design, ya_tx)
    il_r = insertion_loss(receiver, ya_rx)
    return math.sqrt(il_t * il_r) * prop_loss


def extract_k2(design: IdtDesign, s21_res: float, prop_loss: float = 1.0) -> float:
    """
    Invert a resonance amplitude to the electromechanical coupling K²

    Args:
        design: Transducer design (its gamma/zeta come from the chosen preset)
        s21_res: Linear |S21| at resonance, 0 < s21_res < 1
        prop_loss: Amplitude transmission L of the acoustic path, 0 < L <= 1

    Returns:
        K² = [1 + (omega0 Cg Z0)^2] / (2 Z0) * zeta / (8 gamma Cg f0 N L) * s21_res

    Raises:
        ModelValidationError: If s21_res or prop_loss is out of range
    """
    if not (math.isfinite(s21_res) and 0 < s21_res < 1):
        raise ModelValidationError(f"s21_res must satisfy 0 < |S21| < 1, got {s21_res}")
    if prop_loss == 0:
        raise ModelValidationError("prop_loss = 0: the acoustic path is fully attenuated, K² is unresolvable")
    _check_prop_loss(prop_loss, allow_zero=False)

    ga0 = (1.0 + design.capacitive_term) / (2.0 * design.z0) * s21_res / prop_loss
    return ga0 * design.zeta / (8.0 * design.gamma * design.cg * design.f0 * design.n_periods)


def preset_k2_table(s21_res: float, design: IdtDesign, prop_loss: float = 1.0) -> Dict[str, float]:
    """K² extracted from one resonance amplitude under every shipped geometry preset"""
    table = {}
    for name, geometry in PRESETS.items():
        variant = IdtDesign(design.n_periods, design.f0, design.cg,
                            gamma=geometry.gamma, zeta=geometry.zeta, z0=design.z0)
        table[name] = extract_k2(variant, s21_res, prop_loss)
        logger.debug(f"K² with preset {name}: {table[name]:.4e}")
    return table
