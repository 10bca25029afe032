"""
Shared records for the piezosaw toolkit.

Nothing here is stored in a database: sweeps, grids and their metadata are
immutable in-memory records that every pipeline stage passes along and that
the Touchstone/CSV layer serializes.
"""

import math
from dataclasses import dataclass, field, replace
from typing import Optional, Sequence, Tuple

import numpy as np


class ModelValidationError(ValueError):
    """A precondition of a toolkit operation was violated"""
    pass


class GridError(ModelValidationError):
    """Frequency or time grid unusable for the requested operation"""
    pass


@dataclass(frozen=True)
class SweepMeta:
    """
    Acquisition metadata travelling with a sweep.

    Attributes:
        distance_d: IDT separation in m (None when unknown)
        temperature: Sample temperature in K
        bias: Back-contact bias in V
        label: Free-text label, also used for artifact file names
        comments: Touchstone comment lines, kept verbatim
    """
    distance_d: Optional[float] = None
    temperature: Optional[float] = None
    bias: Optional[float] = None
    label: str = ''
    comments: Tuple[str, ...] = ()


@dataclass(frozen=True)
class FrequencyGrid:
    """Uniform frequency grid: f_start + k * f_step, k = 0 .. n_points - 1"""
    f_start: float
    f_step: float
    n_points: int

    def __post_init__(self):
        if not (math.isfinite(self.f_step) and self.f_step > 0):
            raise GridError(f"f_step must be > 0, got {self.f_step}")
        if not math.isfinite(self.f_start) or self.f_start <= 0:
            raise GridError(f"f_start must be > 0, got {self.f_start}")
        if self.n_points < 2:
            raise GridError(f"a grid needs at least 2 points, got {self.n_points}")

    @property
    def f_stop(self) -> float:
        return self.f_start + (self.n_points - 1) * self.f_step

    @property
    def frequencies(self) -> np.ndarray:
        return self.f_start + self.f_step * np.arange(self.n_points)

    @classmethod
    def centered(cls, f_center: float, half_span: float, n_points: int) -> 'FrequencyGrid':
        """Grid of n_points spanning f_center +/- half_span, with f_center on a grid point when n_points is odd"""
        if n_points < 2:
            raise GridError(f"a grid needs at least 2 points, got {n_points}")
        step = 2.0 * half_span / (n_points - 1)
        return cls(f_start=f_center - half_span, f_step=step, n_points=n_points)


@dataclass(frozen=True, eq=False)
class FrequencySweep:
    """
    Complex two-port transmission S21 on a uniform frequency grid.

    Attributes:
        f_start: First frequency in Hz
        f_step: Grid spacing in Hz, > 0
        points: Complex S21 amplitudes, one per grid point
        meta: Acquisition metadata
    """
    f_start: float
    f_step: float
    points: np.ndarray
    meta: SweepMeta = field(default_factory=SweepMeta)

    def __post_init__(self):
        points = np.array(self.points, dtype=complex).reshape(-1)
        if not (math.isfinite(self.f_step) and self.f_step > 0):
            raise GridError(f"f_step must be > 0, got {self.f_step}")
        if not math.isfinite(self.f_start):
            raise GridError(f"f_start must be finite, got {self.f_start}")
        if not np.all(np.isfinite(points)):
            raise ModelValidationError("sweep points must all be finite")
        points.setflags(write=False)
        object.__setattr__(self, 'points', points)

    @property
    def n_points(self) -> int:
        return int(self.points.size)

    @property
    def frequencies(self) -> np.ndarray:
        return self.f_start + self.f_step * np.arange(self.n_points)

    @property
    def grid(self) -> FrequencyGrid:
        return FrequencyGrid(self.f_start, self.f_step, self.n_points)

    @property
    def magnitude(self) -> np.ndarray:
        return np.abs(self.points)

    def with_points(self, points: Sequence[complex], **meta_changes) -> 'FrequencySweep':
        """Same grid, new samples; keyword arguments update the metadata"""
        meta = replace(self.meta, **meta_changes) if meta_changes else self.meta
        return FrequencySweep(self.f_start, self.f_step, points, meta)

    @classmethod
    def from_frequencies(cls, frequencies: Sequence[float], points: Sequence[complex],
                         meta: Optional[SweepMeta] = None, rtol: float = 1e-6) -> 'FrequencySweep':
        """
        Build a sweep from explicit frequencies, checking that they are uniform

        Args:
            frequencies: Frequencies in Hz, strictly increasing
            points: Complex samples, same length
            meta: Optional metadata
            rtol: Allowed deviation of each spacing from the mean spacing, relative

        Returns:
            FrequencySweep on the equivalent uniform grid

        Raises:
            GridError: If fewer than two points are given or spacing is not uniform
        """
        freqs = np.asarray(frequencies, dtype=float)
        if freqs.size != np.asarray(points).size:
            raise GridError("frequencies and points must have the same length")
        if freqs.size < 2:
            raise GridError("at least two frequency points are needed to define a sweep grid")
        steps = np.diff(freqs)
        step = (freqs[-1] - freqs[0]) / (freqs.size - 1)
        if step <= 0 or np.any(steps <= 0):
            raise GridError("frequencies must be strictly increasing")
        if np.max(np.abs(steps - step)) > rtol * step:
            raise GridError("frequency grid is not uniform")
        return cls(float(freqs[0]), float(step), points, meta or SweepMeta())
