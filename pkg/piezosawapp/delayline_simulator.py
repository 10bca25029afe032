"""
Delay-line transmission synthesis

Forward model of a two-port SAW delay line: frequency-flat electromagnetic
crosstalk plus the acoustic path through both transducers, delayed by
t_c + d/v and attenuated by exp(-d / 2l).
"""

import logging
import math
from dataclasses import dataclass, replace
from typing import List, Optional, Sequence

import numpy as np

from .idt_circuit import IdtDesign, ga_at_resonance, ga_spectrum, insertion_loss_curve
from .models import FrequencyGrid, FrequencySweep, GridError, ModelValidationError, SweepMeta
from .units import db_to_amplitude

logger = logging.getLogger(__name__)

DEFAULT_V_SAW = 5063.0
DEFAULT_T_CROSSTALK = 2.5e-9
DEFAULT_CROSSTALK_DB = -55.0
DEFAULT_GRID_POINTS = 1601
DEFAULT_GRID_HALF_SPAN = 0.6e9


@dataclass(frozen=True)
class DelayLineScenario:
    """
    Full forward-model parameter set

    Attributes:
        idt: Transmitter design
        k2: Electromechanical coupling
        distance_d: IDT separation in m
        v_saw: SAW phase velocity in m/s
        t_crosstalk: Electromagnetic path delay t_c in s
        crosstalk_amp: Complex coupling of the electromagnetic path
        decay_length_l: Amplitude decay length in m (inf = lossless)
        noise_floor_db: Additive noise level, None for a noiseless sweep
        receiver: Receiver design, None when identical to the transmitter
        temperature: Metadata only, in K
        label: Metadata only
    """
    idt: IdtDesign
    k2: float
    distance_d: float
    v_saw: float = DEFAULT_V_SAW
    t_crosstalk: float = DEFAULT_T_CROSSTALK
    crosstalk_amp: complex = complex(db_to_amplitude(DEFAULT_CROSSTALK_DB))
    decay_length_l: float = math.inf
    noise_floor_db: Optional[float] = None
    receiver: Optional[IdtDesign] = None
    temperature: Optional[float] = None
    label: str = ''

    def __post_init__(self):
        if not (math.isfinite(self.distance_d) and self.distance_d >= 0):
            raise ModelValidationError(f"distance_d must be >= 0, got {self.distance_d}")
        if not (math.isfinite(self.v_saw) and self.v_saw > 0):
            raise ModelValidationError(f"v_saw must be > 0, got {self.v_saw}")
        if not (math.isfinite(self.t_crosstalk) and self.t_crosstalk >= 0):
            raise ModelValidationError(f"t_crosstalk must be >= 0, got {self.t_crosstalk}")
        if not abs(self.crosstalk_amp) < 1:
            raise ModelValidationError(f"|crosstalk_amp| must be < 1, got {abs(self.crosstalk_amp)}")
        if not self.decay_length_l > 0:
            raise ModelValidationError(f"decay_length_l must be > 0, got {self.decay_length_l}")
        if self.noise_floor_db is not None and not self.noise_floor_db < 0:
            raise ModelValidationError(f"noise_floor_db must be < 0, got {self.noise_floor_db}")
        # weak-coupling range is enforced here rather than at synthesis time
        ga_at_resonance(self.idt, self.k2)

    @property
    def acoustic_delay(self) -> float:
        """d / v, the excess delay of the acoustic path over crosstalk"""
        return self.distance_d / self.v_saw

    @property
    def saw_arrival(self) -> float:
        """t_s = t_c + d / v"""
        return self.t_crosstalk + self.acoustic_delay

    @property
    def prop_loss(self) -> float:
        """Amplitude transmission L = exp(-d / 2l) of the acoustic path"""
        if math.isinf(self.decay_length_l):
            return 1.0
        return math.exp(-self.distance_d / (2.0 * self.decay_length_l))

    def swapped(self) -> 'DelayLineScenario':
        """Same scenario with transmitter and receiver exchanged"""
        receiver = self.receiver or self.idt
        return replace(self, idt=receiver, receiver=self.idt)


def default_grid(idt: IdtDesign) -> FrequencyGrid:
    """1601 points spanning f0 +/- 0.6 GHz"""
    return FrequencyGrid.centered(idt.f0, DEFAULT_GRID_HALF_SPAN, DEFAULT_GRID_POINTS)


def _check_grid_span(scenario: DelayLineScenario, grid: FrequencyGrid) -> None:
    for design in filter(None, (scenario.idt, scenario.receiver)):
        lobe_lo = design.f0 * (1.0 - 2.0 / design.n_periods)
        lobe_hi = design.f0 * (1.0 + 2.0 / design.n_periods)
        # one part in 1e9 of slack for grids built from rounded steps
        slack = 1e-9 * design.f0
        if grid.f_start > lobe_lo + slack or grid.f_stop < lobe_hi - slack:
            raise GridError(
                f"grid [{grid.f_start:.6e}, {grid.f_stop:.6e}] Hz is too narrow: it must span "
                f"[{lobe_lo:.6e}, {lobe_hi:.6e}] Hz, f0 (1 -/+ 2/N), to contain the transducer response"
            )


def saw_amplitude(scenario: DelayLineScenario, freqs: np.ndarray) -> np.ndarray:
    """sqrt(IL_t(f) IL_r(f)) with each conductance following the sinc² spectrum"""
    receiver = scenario.receiver or scenario.idt
    il_t, il_r = (
        insertion_loss_curve(design, ga_spectrum(design, ga_at_resonance(design, scenario.k2), freqs))
        for design in (scenario.idt, receiver)
    )
    return np.sqrt(il_t * il_r)


def synth_sweep(scenario: DelayLineScenario, grid: Optional[FrequencyGrid] = None) -> FrequencySweep:
    """
    Synthesize S21 for one scenario

    Args:
        scenario: Forward-model parameters
        grid: Frequency grid, default_grid(scenario.idt) when omitted

    Returns:
        FrequencySweep with distance and temperature metadata, with noise
        seeded by 0 added when the scenario has a noise floor

    Raises:
        GridError: If the grid does not cover the transducer main lobes
        ModelValidationError: If the synthesized sweep is not passive
    """
    grid = grid or default_grid(scenario.idt)
    _check_grid_span(scenario, grid)

    freqs = grid.frequencies
    crosstalk = scenario.crosstalk_amp * np.exp(-2j * np.pi * freqs * scenario.t_crosstalk)
    acoustic = (saw_amplitude(scenario, freqs) * scenario.prop_loss
                * np.exp(-2j * np.pi * freqs * scenario.saw_arrival))
    points = crosstalk + acoustic

    peak = float(np.max(np.abs(points)))
    if peak >= 1.0:
        raise ModelValidationError(f"scenario is not passive: max |S21| = {peak:.6f} >= 1")

    meta = SweepMeta(distance_d=scenario.distance_d, temperature=scenario.temperature,
                     label=scenario.label or f"d{scenario.distance_d * 1e6:.0f}um")
    logger.debug(f"Synthesized {grid.n_points} points for d = {scenario.distance_d * 1e6:.1f} um")
    sweep = FrequencySweep(grid.f_start, grid.f_step, points, meta)
    if scenario.noise_floor_db is not None:
        sweep = add_noise(sweep, scenario.noise_floor_db)
    return sweep


def synth_distance_series(base: DelayLineScenario, distances: Sequence[float],
                          grid: Optional[FrequencyGrid] = None, seed: int = 0) -> List[FrequencySweep]:
    """
    One sweep per IDT separation, all on the same grid

    When the base scenario has a noise floor, sweep i gets noise seeded with seed + i.
    """
    if len(distances) == 0:
        raise ModelValidationError("distances must not be empty")
    grid = grid or default_grid(base.idt)
    logger.info(f"Synthesizing {len(distances)} delay lines on {grid.n_points} frequency points")

    sweeps = []
    for index, distance in enumerate(distances):
        distance_label = f"d{float(distance) * 1e6:.0f}um"
        label = f"{base.label}_{distance_label}" if base.label else distance_label
        sweep = synth_sweep(replace(base, distance_d=float(distance), label=label, noise_floor_db=None), grid)
        if base.noise_floor_db is not None:
            sweep = add_noise(sweep, base.noise_floor_db, seed=seed + index)
        sweeps.append(sweep)
    return sweeps


def add_noise(sweep: FrequencySweep, floor_db: float, seed: Optional[int] = 0) -> FrequencySweep:
    """
    Add circular complex Gaussian noise of RMS amplitude 10^(floor_db / 20)

    The same seed always yields the same noise realization.
    """
    if not floor_db < 0:
        raise ModelValidationError(f"floor_db must be < 0, got {floor_db}")
    rng = np.random.default_rng(seed)
    sigma = db_to_amplitude(floor_db) / math.sqrt(2.0)
    noise = sigma * (rng.standard_normal(sweep.n_points) + 1j * rng.standard_normal(sweep.n_points))
    return sweep.with_points(sweep.points + noise)
