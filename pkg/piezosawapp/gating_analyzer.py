"""
Time-domain gating analysis of delay-line sweeps

Handles:
- Frequency <-> time transforms with zero padding and an optional Kaiser spectral window
- Peak detection on the impulse response and crosstalk/SAW peak pairing
- Time gating back onto the original frequency grid
- Resonance extraction, velocity and decay-length fits, resonance ratios
"""

import logging
import math
from dataclasses import dataclass, field, replace
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
from scipy import signal, stats

from .models import FrequencySweep, GridError, ModelValidationError, SweepMeta

logger = logging.getLogger(__name__)

DEFAULT_PAD_FACTOR = 8
DEFAULT_KAISER_BETA = 20.0
DEFAULT_PEAK_THRESHOLD_DB = -140.0
# Spectral weights below this are not divided out of a gated sweep
WINDOW_FLOOR = 1e-3
PEAK_MIN_SEPARATION = 5
DEFAULT_GATE_BEFORE = 25e-9
DEFAULT_GATE_AFTER = 75e-9

SPECTRAL_WINDOWS = ('rect', 'kaiser')

FLAG_SINGLE_DISTANCE = 'single_distance'
FLAG_NO_ATTENUATION = 'no_resolvable_attenuation'


class FitError(ModelValidationError):
    """Degenerate input to a least-squares fit"""
    pass


@dataclass(frozen=True, eq=False)
class TimeTrace:
    """
    Complex impulse response on a uniform time grid, t_k = t_start + k * t_step

    The frequency grid it came from travels along so the trace can be
    transformed back onto it.
    """
    t_step: float
    points: np.ndarray
    f_start: float
    f_step: float
    n_freq: int
    source_meta: SweepMeta = field(default_factory=SweepMeta)
    spectral_window: str = 'rect'
    kaiser_beta: float = DEFAULT_KAISER_BETA
    t_start: float = 0.0

    @property
    def n_padded(self) -> int:
        return int(self.points.size)

    @property
    def times(self) -> np.ndarray:
        return self.t_start + self.t_step * np.arange(self.n_padded)

    @property
    def period(self) -> float:
        """Unambiguous time range 1 / f_step"""
        return 1.0 / self.f_step

    @property
    def magnitude(self) -> np.ndarray:
        return np.abs(self.points)


@dataclass(frozen=True)
class GateWindow:
    """Time gate [t_lo, t_hi] with cosine edges over taper_fraction of its width on each side"""
    t_lo: float
    t_hi: float
    taper_fraction: float = 0.0

    def __post_init__(self):
        if not (math.isfinite(self.t_lo) and math.isfinite(self.t_hi) and self.t_lo < self.t_hi):
            raise ModelValidationError(f"gate needs t_lo < t_hi, got [{self.t_lo}, {self.t_hi}]")
        if not 0.0 <= self.taper_fraction <= 0.5:
            raise ModelValidationError(f"taper_fraction must be in [0, 0.5], got {self.taper_fraction}")

    @property
    def width(self) -> float:
        return self.t_hi - self.t_lo


@dataclass(frozen=True)
class Peak:
    time: float
    amplitude: float


@dataclass(frozen=True)
class ResonanceMetrics:
    f0_est: float
    s21_res: float
    ambiguous: bool = False


@dataclass(frozen=True, eq=False)
class FitResult:
    """
    Least-squares estimate

    Attributes:
        params: Named estimates
        units: Unit of each estimate
        covariance: Covariance matrix in the order of params
        residual_rms: Dimensionless residual level of the fit
        flags: Diagnostic flags raised during the fit
    """
    params: Dict[str, float]
    units: Dict[str, str]
    covariance: np.ndarray
    residual_rms: float
    flags: Tuple[str, ...] = ()

    def stderr(self, name: str) -> float:
        index = list(self.params).index(name)
        return float(math.sqrt(self.covariance[index, index]))

    def __getitem__(self, name: str) -> float:
        return self.params[name]


@dataclass(frozen=True, eq=False)
class DelayLineAnalysis:
    """Everything the gating pipeline derives from one sweep"""
    sweep: FrequencySweep
    trace: TimeTrace
    peaks: List[Peak]
    t_c: float
    t_s: float
    gate: GateWindow
    gated: FrequencySweep
    resonance: ResonanceMetrics

    @property
    def delay(self) -> float:
        """Acoustic excess delay t_s - t_c"""
        return self.t_s - self.t_c


def spectral_window(n_points: int, kind: str = 'kaiser', beta: float = DEFAULT_KAISER_BETA) -> np.ndarray:
    """Weights applied to a sweep before the inverse transform"""
    if kind == 'rect':
        return np.ones(n_points)
    if kind == 'kaiser':
        return signal.windows.kaiser(n_points, beta, sym=True)
    raise ModelValidationError(f"unknown spectral window '{kind}' (choose from {', '.join(SPECTRAL_WINDOWS)})")


def to_time_domain(sweep: FrequencySweep, pad_factor: int = DEFAULT_PAD_FACTOR,
                   window: str = 'kaiser', kaiser_beta: float = DEFAULT_KAISER_BETA) -> TimeTrace:
    """
    Impulse response of a sweep

    h(t_k) = n_pad * df * ifft(W * S, n_pad) with t_step = 1 / (n_pad * df), so that
    sum |S|^2 df = sum |h|^2 dt for the rectangular window.

    Args:
        sweep: Uniform-grid sweep
        pad_factor: Zero-padding factor, >= 1
        window: 'rect' or 'kaiser'
        kaiser_beta: Kaiser shape parameter

    Returns:
        TimeTrace with n_pad = pad_factor * n points
    """
    if int(pad_factor) != pad_factor or pad_factor < 1:
        raise ModelValidationError(f"pad_factor must be an integer >= 1, got {pad_factor}")
    if sweep.n_points < 2:
        raise GridError("a sweep needs at least 2 points to be transformed")

    n_pad = int(pad_factor) * sweep.n_points
    weights = spectral_window(sweep.n_points, window, kaiser_beta)
    points = n_pad * sweep.f_step * np.fft.ifft(weights * sweep.points, n=n_pad)
    return TimeTrace(
        t_step=1.0 / (n_pad * sweep.f_step),
        points=points,
        f_start=sweep.f_start,
        f_step=sweep.f_step,
        n_freq=sweep.n_points,
        source_meta=sweep.meta,
        spectral_window=window,
        kaiser_beta=kaiser_beta,
    )


def to_frequency_domain(trace: TimeTrace) -> FrequencySweep:
    """Back onto the trace's source grid; the spectral window is not divided out"""
    spectrum = np.fft.fft(trace.points)[:trace.n_freq] / (trace.n_padded * trace.f_step)
    return FrequencySweep(trace.f_start, trace.f_step, spectrum, trace.source_meta)


def _parabolic_vertex(left: float, centre: float, right: float) -> Tuple[float, float]:
    """Offset and value of the parabola through (-1, left), (0, centre), (1, right)"""
    curvature = left - 2.0 * centre + right
    if curvature >= 0:
        return 0.0, centre
    offset = 0.5 * (left - right) / curvature
    return offset, centre - 0.25 * (left - right) * offset


def detect_peaks(trace: TimeTrace, threshold_db: float = DEFAULT_PEAK_THRESHOLD_DB) -> List[Peak]:
    """
    Local maxima of |h| above a threshold relative to the global maximum

    At most one peak is reported per PEAK_MIN_SEPARATION samples; times are
    refined below one sample with a parabola through the log magnitude.
    """
    if not threshold_db < 0:
        raise ModelValidationError(f"threshold_db must be < 0, got {threshold_db}")
    magnitude = trace.magnitude
    top = float(magnitude.max()) if magnitude.size else 0.0
    if top == 0.0:
        return []

    height = top * 10.0 ** (threshold_db / 20.0)
    indices, _ = signal.find_peaks(magnitude, height=height, distance=PEAK_MIN_SEPARATION)

    peaks = []
    with np.errstate(divide='ignore'):
        log_mag = np.log(magnitude)
    for index in indices:
        offset, log_value = 0.0, log_mag[index]
        if 0 < index < magnitude.size - 1 and np.all(np.isfinite(log_mag[index - 1:index + 2])):
            offset, log_value = _parabolic_vertex(*log_mag[index - 1:index + 2])
        peaks.append(Peak(time=trace.t_start + (index + offset) * trace.t_step,
                          amplitude=float(math.exp(log_value))))
    logger.debug(f"Found {len(peaks)} peaks above {threshold_db} dB")
    return peaks


def pair_peaks(peaks: Sequence[Peak]) -> Tuple[float, float]:
    """
    Label crosstalk and acoustic arrivals

    The earliest peak is the crosstalk arrival t_c; the largest later peak is
    the SAW arrival t_s.
    """
    if len(peaks) < 2:
        raise ModelValidationError(
            f"need a crosstalk and a SAW peak, found {len(peaks)} peak(s) in the time trace"
        )
    ordered = sorted(peaks, key=lambda peak: peak.time)
    saw = max(ordered[1:], key=lambda peak: peak.amplitude)
    return ordered[0].time, saw.time


def default_gate(t_s: float, taper_fraction: float = 0.0,
                 before: float = DEFAULT_GATE_BEFORE, after: float = DEFAULT_GATE_AFTER) -> GateWindow:
    """[t_s - 25 ns, t_s + 75 ns] unless other offsets are given"""
    return GateWindow(t_s - before, t_s + after, taper_fraction)


def gate_weights(trace: TimeTrace, window: GateWindow) -> np.ndarray:
    """
    Gate evaluated on the trace's time samples

    Samples are mapped into [t_lo, t_lo + period) so gates starting before t = 0
    pick up the wrapped end of the trace.
    """
    period = trace.period
    if window.width > period or window.t_lo <= -period or window.t_hi > period:
        raise GridError(
            f"gate [{window.t_lo:.4e}, {window.t_hi:.4e}] s is outside the alias-free range "
            f"of {period:.4e} s (1 / f_step)"
        )
    position = np.mod(trace.times - window.t_lo, period)
    weights = (position <= window.width).astype(float)

    edge = window.taper_fraction * window.width
    if edge > 0:
        rising = position < edge
        falling = (position > window.width - edge) & (position <= window.width)
        weights[rising] = 0.5 * (1.0 - np.cos(np.pi * position[rising] / edge))
        weights[falling] = 0.5 * (1.0 - np.cos(np.pi * (window.width - position[falling]) / edge))
    return weights


def apply_gate(sweep: FrequencySweep, window: GateWindow, pad_factor: int = DEFAULT_PAD_FACTOR,
               spectral: str = 'kaiser', kaiser_beta: float = DEFAULT_KAISER_BETA) -> FrequencySweep:
    """
    Keep only the part of the impulse response inside the gate

    The spectral window is divided back out of the gated spectrum wherever its
    weight is at least WINDOW_FLOOR, so the gated sweep keeps the raw sweep's
    amplitude scale at any resonance position on the grid. The outermost bins,
    where the Kaiser weight falls below the floor, keep a residual taper. A gate
    covering the whole trace returns the sweep unchanged.

    Args:
        sweep: Raw sweep
        window: Gate in absolute time
        pad_factor: Zero-padding factor of the transform
        spectral: Spectral window used for the transform ('rect' or 'kaiser')
        kaiser_beta: Kaiser shape parameter

    Returns:
        Gated sweep on the original grid with the original metadata

    Raises:
        GridError: If the gate does not fit in the alias-free time range
    """
    trace = to_time_domain(sweep, pad_factor, spectral, kaiser_beta)
    weights = gate_weights(trace, window)
    if np.all(weights == 1.0):
        return sweep
    gated = to_frequency_domain(replace(trace, points=trace.points * weights))
    compensation = np.maximum(spectral_window(sweep.n_points, spectral, kaiser_beta), WINDOW_FLOOR)
    return gated.with_points(gated.points / compensation)


def resonance_metrics(gated: FrequencySweep) -> ResonanceMetrics:
    """
    Resonance frequency and amplitude of a gated sweep

    The maximum of |S21| is refined with a 3-point parabola on the log magnitude.
    Equal maxima resolve to the lowest frequency and set the ambiguity flag.
    """
    magnitude = gated.magnitude
    if magnitude.size == 0:
        raise ModelValidationError("gated sweep is empty")
    top = magnitude.max()
    candidates = np.flatnonzero(magnitude == top)
    index = int(candidates[0])
    frequencies = gated.frequencies

    if candidates.size > 1:
        logger.warning(f"{candidates.size} equal maxima of |S21|, reporting the lowest frequency "
                       f"{frequencies[index]:.6e} Hz")
        return ResonanceMetrics(float(frequencies[index]), float(top), ambiguous=True)

    if 0 < index < magnitude.size - 1 and np.all(magnitude[index - 1:index + 2] > 0):
        offset, log_value = _parabolic_vertex(*np.log(magnitude[index - 1:index + 2]))
        return ResonanceMetrics(float(frequencies[index] + offset * gated.f_step), float(math.exp(log_value)))
    return ResonanceMetrics(float(frequencies[index]), float(top))


def fit_velocity(pairs: Sequence[Tuple[float, float]]) -> FitResult:
    """
    SAW velocity from (distance, excess delay) pairs: d = v * delta_t through the origin

    v = sum(d * dt) / sum(dt^2); its variance is s^2 / sum(dt^2) with
    s^2 the residual variance on n - 1 degrees of freedom.
    """
    data = np.asarray(pairs, dtype=float).reshape(-1, 2)
    if data.shape[0] == 0:
        raise FitError("fit_velocity needs at least one (d, delta_t) pair")
    if not np.all(np.isfinite(data)):
        raise FitError("distances and delays must be finite")
    distances, delays = data[:, 0], data[:, 1]
    denominator = float(np.sum(delays ** 2))
    if denominator == 0.0:
        raise FitError("all delays are zero: the velocity is unresolvable")

    velocity = float(np.sum(distances * delays)) / denominator
    residuals = distances - velocity * delays
    flags = []
    if np.unique(distances).size < 2:
        logger.warning("Velocity fitted from a single distance; no uncertainty estimate")
        flags.append(FLAG_SINGLE_DISTANCE)
        variance = 0.0
    else:
        variance = float(np.sum(residuals ** 2)) / (distances.size - 1) / denominator

    scale = math.sqrt(float(np.mean(distances ** 2)))
    residual_rms = math.sqrt(float(np.mean(residuals ** 2))) / scale if scale > 0 else 0.0
    return FitResult({'v': velocity}, {'v': 'm/s'}, np.array([[variance]]), residual_rms, tuple(flags))


def fit_decay(points: Sequence[Tuple[float, float]]) -> FitResult:
    """
    Amplitude prefactor and decay length from |S21,0| = A exp(-d / 2l)

    Linear least squares of ln|S21,0| against d. A non-negative slope gives
    l = inf; the no_resolvable_attenuation flag is raised when the slope is
    non-negative or within two standard errors of zero.

    Raises:
        FitError: On fewer than two distinct distances or a non-positive amplitude
    """
    data = np.asarray(points, dtype=float).reshape(-1, 2)
    if data.shape[0] < 2:
        raise FitError(f"fit_decay needs at least 2 points, got {data.shape[0]}")
    distances, amplitudes = data[:, 0], data[:, 1]
    if not np.all(np.isfinite(data)):
        raise FitError("distances and amplitudes must be finite")
    if np.any(amplitudes <= 0):
        raise FitError("all resonance amplitudes must be > 0 to take their logarithm")
    if np.unique(distances).size < 2:
        raise FitError("fit_decay needs at least 2 distinct distances")

    log_amp = np.log(amplitudes)
    with np.errstate(divide='ignore', invalid='ignore'):
        fit = stats.linregress(distances, log_amp)
    slope, intercept = float(fit.slope), float(fit.intercept)
    var_slope = float(fit.stderr) ** 2
    var_intercept = float(fit.intercept_stderr) ** 2
    cov_slope_intercept = -float(np.mean(distances)) * var_slope

    # numerically flat data counts as slope 0
    if abs(slope) * np.ptp(distances) <= 1e-12 * max(1.0, abs(float(np.mean(log_amp)))):
        slope = 0.0

    amplitude = math.exp(intercept)
    flags = []
    if slope >= 0:
        decay_length = math.inf
        covariance = np.array([[amplitude ** 2 * var_intercept, 0.0], [0.0, math.inf]])
    else:
        decay_length = -1.0 / (2.0 * slope)
        dl_dslope = 1.0 / (2.0 * slope ** 2)
        covariance = np.array([
            [amplitude ** 2 * var_intercept, amplitude * dl_dslope * cov_slope_intercept],
            [amplitude * dl_dslope * cov_slope_intercept, dl_dslope ** 2 * var_slope],
        ])
    if slope >= 0 or abs(slope) < 2.0 * math.sqrt(var_slope):
        logger.warning(f"No resolvable attenuation: slope {slope:.4e} 1/m, stderr {math.sqrt(var_slope):.4e} 1/m")
        flags.append(FLAG_NO_ATTENUATION)

    residuals = log_amp - (intercept + slope * distances)
    residual_rms = math.sqrt(float(np.mean(residuals ** 2)))
    return FitResult({'A': amplitude, 'l': decay_length}, {'A': '1', 'l': 'm'},
                     covariance, residual_rms, tuple(flags))


def compare_resonance(a: FrequencySweep, b: FrequencySweep) -> float:
    """Ratio of gated resonance amplitudes |S21,0(a)| / |S21,0(b)|"""
    denominator = resonance_metrics(b).s21_res
    if denominator == 0:
        raise ModelValidationError("reference sweep has zero resonance amplitude")
    return resonance_metrics(a).s21_res / denominator


def piezo_coefficient_change(ratio: float) -> float:
    """Relative change of the piezoelectric coefficient for a resonance ratio (K² ∝ |S21,0|, e ∝ K)"""
    if not ratio > 0:
        raise ModelValidationError(f"ratio must be > 0, got {ratio}")
    return math.sqrt(ratio)


def analyze_sweep(sweep: FrequencySweep, pad_factor: int = DEFAULT_PAD_FACTOR,
                  threshold_db: float = DEFAULT_PEAK_THRESHOLD_DB,
                  gate_offsets: Tuple[float, float] = (-DEFAULT_GATE_BEFORE, DEFAULT_GATE_AFTER),
                  taper_fraction: float = 0.0, spectral: str = 'kaiser',
                  kaiser_beta: float = DEFAULT_KAISER_BETA, gate: Optional[GateWindow] = None) -> DelayLineAnalysis:
    """
    Transform, find and pair peaks, gate around the SAW arrival and read the resonance

    Args:
        sweep: Raw delay-line sweep
        pad_factor: Zero-padding factor
        threshold_db: Peak threshold relative to the strongest peak
        gate_offsets: Gate limits relative to t_s, used when no gate is given
        taper_fraction: Cosine taper of the gate edges
        spectral: Spectral window of the transform
        kaiser_beta: Kaiser shape parameter
        gate: Explicit gate in absolute time

    Returns:
        DelayLineAnalysis with the trace, peaks, gate, gated sweep and resonance
    """
    trace = to_time_domain(sweep, pad_factor, spectral, kaiser_beta)
    peaks = detect_peaks(trace, threshold_db)
    t_c, t_s = pair_peaks(peaks)
    logger.debug(f"Peaks for '{sweep.meta.label}': t_c = {t_c * 1e9:.3f} ns, t_s = {t_s * 1e9:.3f} ns")

    if gate is None:
        gate = GateWindow(t_s + gate_offsets[0], t_s + gate_offsets[1], taper_fraction)
    gated = apply_gate(sweep, gate, pad_factor, spectral, kaiser_beta)
    return DelayLineAnalysis(
        sweep=sweep,
        trace=trace,
        peaks=peaks,
        t_c=t_c,
        t_s=t_s,
        gate=gate,
        gated=gated,
        resonance=resonance_metrics(gated),
    )
