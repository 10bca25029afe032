"""
Piezoelectric loss of a transmon qubit

Maps the radiation conductance seen by the qubit capacitor (either an IDT
model or an external table, e.g. from a finite-element calculation) to the
total admittance, quality factor, loss rate and T1.
"""

import csv
import io
import logging
import math
from dataclasses import dataclass
from pathlib import Path
from typing import List, Sequence, Union

import numpy as np
from scipy import constants

from .artifacts import write_csv
from .idt_circuit import IdtDesign, ga_at_resonance, ga_spectrum
from .models import ModelValidationError

logger = logging.getLogger(__name__)

TABLE_HEADER = ('f_hz', 'ga_siemens')

# Published piezoelectric-loss-limited quality factors
Q_PIEZO_PLANAR = 6e7
Q_PIEZO_PPC = 7e4
Q_PIEZO_IDT = 9e4
REFERENCE_CG = 125e-15
REFERENCE_FREQUENCY = 4.5e9


@dataclass(frozen=True)
class IdtAdmittanceSource:
    """Radiation conductance of an IDT-shaped capacitor with coupling k2"""
    design: IdtDesign
    k2: float

    def __post_init__(self):
        ga_at_resonance(self.design, self.k2)

    def conductance(self, f):
        return ga_spectrum(self.design, ga_at_resonance(self.design, self.k2), f)


@dataclass(frozen=True, eq=False)
class AdmittanceTable:
    """Tabulated G_a(f), linearly interpolated, never extrapolated"""
    frequencies: np.ndarray
    conductances: np.ndarray

    def __post_init__(self):
        freqs = np.array(self.frequencies, dtype=float).reshape(-1)
        conductances = np.array(self.conductances, dtype=float).reshape(-1)
        if freqs.size == 0 or freqs.size != conductances.size:
            raise ModelValidationError("admittance table needs matching, non-empty f and g_a columns")
        if not (np.all(np.isfinite(freqs)) and np.all(np.isfinite(conductances))):
            raise ModelValidationError("admittance table values must be finite")
        if np.any(np.diff(freqs) <= 0):
            raise ModelValidationError("admittance table frequencies must be strictly increasing")
        if np.any(conductances < 0):
            raise ModelValidationError("admittance table conductances must be >= 0")
        object.__setattr__(self, 'frequencies', freqs)
        object.__setattr__(self, 'conductances', conductances)

    def conductance(self, f):
        freqs = np.asarray(f, dtype=float)
        if np.any(freqs < self.frequencies[0]) or np.any(freqs > self.frequencies[-1]):
            raise ModelValidationError(
                f"frequency outside the table range [{self.frequencies[0]:.6e}, {self.frequencies[-1]:.6e}] Hz"
            )
        result = np.interp(freqs, self.frequencies, self.conductances)
        return float(result) if result.ndim == 0 else result

    @classmethod
    def from_csv(cls, path: Union[str, Path]) -> 'AdmittanceTable':
        """Load a `f_hz,ga_siemens` table"""
        path = Path(path)
        try:
            text = path.read_text(encoding='utf-8')
        except (OSError, UnicodeDecodeError) as e:
            raise ModelValidationError(f"cannot read admittance table {path}: {e}") from e

        reader = csv.reader(io.StringIO(text))
        header = next(reader, None)
        if header is None or tuple(column.strip() for column in header) != TABLE_HEADER:
            raise ModelValidationError(f"admittance table {path} must start with the header {','.join(TABLE_HEADER)}")
        rows = []
        for line_number, row in enumerate(reader, start=2):
            if not row:
                continue
            try:
                rows.append((float(row[0]), float(row[1])))
            except (IndexError, ValueError):
                raise ModelValidationError(f"{path}:{line_number}: expected two numbers, got {row}") from None
        if not rows:
            raise ModelValidationError(f"admittance table {path} has no rows")
        freqs, conductances = zip(*rows)
        logger.info(f"Loaded admittance table with {len(rows)} rows from {path}")
        return cls(np.array(freqs), np.array(conductances))

    def to_csv(self, path: Union[str, Path]) -> Path:
        return write_csv(path, TABLE_HEADER, zip(self.frequencies, self.conductances))


AdmittanceSource = Union[IdtAdmittanceSource, AdmittanceTable]


@dataclass(frozen=True)
class QubitModel:
    """
    Transmon shunted by a capacitor that radiates phonons

    Attributes:
        l_j: Josephson inductance in H
        cg_q: Shunt capacitance in F
        admittance_source: IdtAdmittanceSource or AdmittanceTable
    """
    l_j: float
    cg_q: float
    admittance_source: AdmittanceSource

    def __post_init__(self):
        if not (math.isfinite(self.l_j) and self.l_j > 0):
            raise ModelValidationError(f"l_j must be > 0, got {self.l_j}")
        if not (math.isfinite(self.cg_q) and self.cg_q > 0):
            raise ModelValidationError(f"cg_q must be > 0, got {self.cg_q}")

    @classmethod
    def tuned_to(cls, f_p: float, cg_q: float, admittance_source: AdmittanceSource) -> 'QubitModel':
        """Model whose plasmon frequency is f_p"""
        return cls(1.0 / ((2.0 * math.pi * f_p) ** 2 * cg_q), cg_q, admittance_source)

    def conductance(self, f):
        return self.admittance_source.conductance(f)


def _check_frequency(f) -> np.ndarray:
    freqs = np.asarray(f, dtype=float)
    if np.any(~np.isfinite(freqs)) or np.any(freqs <= 0):
        raise ModelValidationError("frequencies must be finite and > 0")
    return freqs


def total_admittance(model: QubitModel, f) -> complex:
    """[1 - w^2 L_J C_g + i w L_J G_a(w)] / (i w L_J), radiation susceptance neglected"""
    freqs = _check_frequency(f)
    omega = 2.0 * np.pi * freqs
    ga = model.conductance(freqs)
    result = (1.0 - omega ** 2 * model.l_j * model.cg_q + 1j * omega * model.l_j * ga) / (1j * omega * model.l_j)
    return complex(result) if np.ndim(result) == 0 else result


def q_factor(model: QubitModel, f: float) -> float:
    """w C_g / G_a(w); math.inf where the capacitor does not radiate"""
    omega = 2.0 * math.pi * float(_check_frequency(f))
    ga = float(model.conductance(f))
    if ga == 0:
        return math.inf
    return omega * model.cg_q / ga


def loss_rate(model: QubitModel, f: float) -> float:
    """G_a / C_g in 1/s"""
    _check_frequency(f)
    return float(model.conductance(f)) / model.cg_q


def t1(model: QubitModel, f_q: float) -> float:
    """Relaxation time C_g / G_a(w_q) = Q / w_q"""
    rate = loss_rate(model, f_q)
    if rate == 0:
        return math.inf
    return 1.0 / rate


def plasmon_frequency(model: QubitModel) -> float:
    return 1.0 / (2.0 * math.pi * math.sqrt(model.l_j * model.cg_q))


def charging_frequency(cg_q: float) -> float:
    """E_C / h with E_C = e^2 / (2 C_g)"""
    return constants.e ** 2 / (2.0 * cg_q) / constants.h


def qubit_frequency(model: QubitModel) -> float:
    """Transmon frequency f_p - E_C / h"""
    return plasmon_frequency(model) - charging_frequency(model.cg_q)


def q_from_table(table: AdmittanceTable, cg_q: float, f: float) -> float:
    """Quality factor from an interpolated table conductance"""
    if not (math.isfinite(cg_q) and cg_q > 0):
        raise ModelValidationError(f"cg_q must be > 0, got {cg_q}")
    omega = 2.0 * math.pi * float(_check_frequency(f))
    ga = float(table.conductance(f))
    return math.inf if ga == 0 else omega * cg_q / ga


def conductance_for_q(q: float, cg_q: float, f: float) -> float:
    """Inverse of the quality factor relation: G_a = w C_g / Q"""
    if not q > 0:
        raise ModelValidationError(f"q must be > 0, got {q}")
    if math.isinf(q):
        return 0.0
    return 2.0 * math.pi * float(_check_frequency(f)) * cg_q / q


def q_spectrum(model: QubitModel, frequencies: Sequence[float]) -> List[dict]:
    """Rows of f, G_a, Q, T1 and loss rate for Q(f) curves, inf across sinc nulls"""
    rows = []
    for f in _check_frequency(frequencies).reshape(-1):
        rows.append({
            'f_hz': float(f),
            'ga_s': float(model.conductance(f)),
            'q': q_factor(model, f),
            't1_s': t1(model, f),
            'loss_rate_per_s': loss_rate(model, f),
        })
    return rows
