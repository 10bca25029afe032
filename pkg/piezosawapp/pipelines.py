"""
Subcommand pipelines behind `manage.py saw`

Each subcommand composes the module operations, writes its CSV (and
Touchstone) artifacts into the output directory and returns a summary.
"""

import logging
import math
import re
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Dict, List, Optional, Tuple

import numpy as np

from .artifacts import write_csv, write_text
from .delayline_simulator import DelayLineScenario, synth_distance_series
from .gating_analyzer import (
    DelayLineAnalysis, analyze_sweep, fit_decay, fit_velocity,
)
from .idt_circuit import PRESETS, IdtDesign, extract_k2, preset_k2_table
from .junction_solver import JunctionSolverError, JunctionSpec, bias_sweep, sheet_charge
from .models import FrequencyGrid, FrequencySweep, ModelValidationError
from .qubit_loss import (
    AdmittanceTable, IdtAdmittanceSource, QubitModel, plasmon_frequency, q_factor,
    q_spectrum, qubit_frequency, t1,
)
from .run_config import RunConfig
from .touchstone_utils import parse_touchstone, write_touchstone
from .units import amplitude_to_db, db_to_amplitude

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_VALIDATION = 1
EXIT_SOLVER = 2

# Labels become part of artifact file names
LABEL_PATTERN = re.compile(r"[A-Za-z0-9_.-]+")


@dataclass
class RunResult:
    """Outcome of one subcommand"""
    status: int
    artifacts: List[Path] = field(default_factory=list)
    summary: List[str] = field(default_factory=list)
    error: Optional[str] = None


class SawPipelineRunner:
    """
    Runs one subcommand against a validated RunConfig

    Artifacts go to output_dir; the summary lines are what the command prints.
    """

    def __init__(self, config: RunConfig, output_dir: Path):
        self.config = config
        self.output_dir = Path(output_dir)
        self.artifacts: List[Path] = []
        self.summary: List[str] = []
        self.subcommands: Dict[str, Callable[[], None]] = {
            'simulate': self.simulate,
            'gate': self.gate,
            'fit-velocity': self.fit_velocity,
            'fit-loss': self.fit_loss,
            'extract-k2': self.extract_k2,
            'qubit-q': self.qubit_q,
            'charge-profile': self.charge_profile,
        }

    # building blocks

    def _write_csv(self, name: str, header, rows) -> None:
        self.artifacts.append(write_csv(self.output_dir / name, header, rows))

    @staticmethod
    def _artifact_stem(prefix: str, label: str) -> str:
        if not LABEL_PATTERN.fullmatch(label):
            raise ModelValidationError(
                f"label '{label}' cannot name an artifact; use letters, digits, '_', '.' and '-' only"
            )
        return f"{prefix}_{label}"

    def _write_sweep(self, prefix: str, sweep: FrequencySweep) -> None:
        stem = self._artifact_stem(prefix, sweep.meta.label or 'sweep')
        self.artifacts.append(write_text(self.output_dir / f"{stem}.s2p",
                                         write_touchstone(sweep).decode('utf-8')))
        magnitude_db = amplitude_to_db(sweep.points) if sweep.n_points else np.array([])
        self._write_csv(f"{stem}.csv", ('f_hz', 're', 'im', 'mag_db'),
                        zip(sweep.frequencies, sweep.points.real, sweep.points.imag, magnitude_db))

    def design(self) -> IdtDesign:
        config = self.config
        return IdtDesign.from_preset(config['n_periods'], config['f0'], config['cg'],
                                     config['preset'], config['z0'])

    def scenario(self) -> DelayLineScenario:
        config = self.config
        distances = config['distances']
        if not distances:
            raise ModelValidationError("distances must not be empty")
        return DelayLineScenario(
            idt=self.design(),
            k2=config['k2'],
            distance_d=distances[0],
            v_saw=config['v_saw'],
            t_crosstalk=config['t_crosstalk'],
            crosstalk_amp=complex(db_to_amplitude(config['crosstalk_db'])),
            decay_length_l=config['decay_length'],
            noise_floor_db=config['noise_floor_db'],
            temperature=config['temperature'],
            label=config['label'],
        )

    def sweeps(self) -> List[FrequencySweep]:
        """Sweeps read from the configured Touchstone inputs, or synthesized from the scenario"""
        inputs = self.config['inputs']
        if inputs:
            sweeps = []
            for path in inputs:
                logger.info(f"Reading {path}")
                try:
                    data = Path(path).read_bytes()
                except OSError as e:
                    raise ModelValidationError(f"cannot read input {path}: {e}") from e
                sweep = parse_touchstone(data)
                if not sweep.meta.label:
                    sweep = sweep.with_points(sweep.points, label=Path(path).stem)
                sweeps.append(sweep)
            return sweeps

        config = self.config
        grid = FrequencyGrid.centered(config['f0'], config['grid_half_span'], config['grid_points'])
        return synth_distance_series(self.scenario(), config['distances'], grid, seed=config['seed'])

    def analyses(self) -> List[DelayLineAnalysis]:
        config = self.config
        results = []
        for sweep in self.sweeps():
            analysis = analyze_sweep(
                sweep,
                pad_factor=config['pad_factor'],
                threshold_db=config['peak_threshold_db'],
                gate_offsets=(config['gate_lo'], config['gate_hi']),
                taper_fraction=config['gate_taper'],
                spectral=config['spectral_window'],
                kaiser_beta=config['kaiser_beta'],
            )
            logger.info(f"{sweep.meta.label}: t_c = {analysis.t_c * 1e9:.3f} ns, t_s = {analysis.t_s * 1e9:.3f} ns, "
                        f"|S21,0| = {amplitude_to_db(analysis.resonance.s21_res):.2f} dB")
            results.append(analysis)
        return results

    def _resonance_rows(self, analyses: List[DelayLineAnalysis]):
        for analysis in analyses:
            resonance = analysis.resonance
            yield (analysis.sweep.meta.label, analysis.sweep.meta.distance_d, analysis.t_c, analysis.t_s,
                   analysis.delay, resonance.f0_est, resonance.s21_res,
                   amplitude_to_db(resonance.s21_res), resonance.ambiguous)

    def _write_resonances(self, analyses: List[DelayLineAnalysis]) -> None:
        self._write_csv('resonance.csv',
                        ('label', 'distance_m', 't_c_s', 't_s_s', 'delay_s', 'f0_hz', 's21_res', 's21_res_db',
                         'ambiguous'),
                        self._resonance_rows(analyses))

    @staticmethod
    def _distance(analysis: DelayLineAnalysis) -> float:
        distance = analysis.sweep.meta.distance_d
        if distance is None:
            raise ModelValidationError(
                f"sweep '{analysis.sweep.meta.label}' has no distance; add '! distance_d_m=...' to the file"
            )
        return distance

    # subcommands

    def simulate(self) -> None:
        if self.config['inputs']:
            raise ModelValidationError("simulate synthesizes from the scenario; remove 'inputs'")
        logger.info("Step 1: synthesizing delay-line sweeps")
        sweeps = self.sweeps()
        logger.info("Step 2: writing Touchstone and CSV artifacts")
        for sweep in sweeps:
            self._write_sweep('sweep', sweep)
        self.summary.append(f"Synthesized {len(sweeps)} sweep(s) of {sweeps[0].n_points} points")

    def gate(self) -> None:
        logger.info("Step 1: transforming, detecting peaks and gating")
        analyses = self.analyses()
        logger.info("Step 2: writing traces and gated sweeps")
        for analysis in analyses:
            stem = self._artifact_stem('trace', analysis.sweep.meta.label or 'sweep')
            trace = analysis.trace
            self._write_csv(f"{stem}.csv", ('t_s', 'mag_db'), zip(trace.times, amplitude_to_db(trace.points)))
            self._write_sweep('gated', analysis.gated)
        self._write_resonances(analyses)
        for analysis in analyses:
            self.summary.append(
                f"{analysis.sweep.meta.label}: f0 = {analysis.resonance.f0_est / 1e9:.6f} GHz, "
                f"|S21,0| = {amplitude_to_db(analysis.resonance.s21_res):.2f} dB"
            )

    def fit_velocity(self) -> None:
        logger.info("Step 1: measuring acoustic delays")
        analyses = self.analyses()
        pairs = [(self._distance(analysis), analysis.delay) for analysis in analyses]
        logger.info(f"Step 2: fitting d = v * dt over {len(pairs)} sweep(s)")
        fit = fit_velocity(pairs)
        self._write_csv('delays.csv', ('label', 'distance_m', 't_c_s', 't_s_s', 'delay_s'),
                        ((a.sweep.meta.label, d, a.t_c, a.t_s, dt) for a, (d, dt) in zip(analyses, pairs)))
        self._write_csv('velocity.csv', ('v_m_per_s', 'v_stderr', 'residual_rms', 'n_points', 'flags'),
                        [(fit['v'], fit.stderr('v'), fit.residual_rms, len(pairs), ';'.join(fit.flags))])
        self.summary.append(f"v = {fit['v']:.2f} m/s (stderr {fit.stderr('v'):.2f} m/s)")

    def fit_loss(self) -> None:
        logger.info("Step 1: measuring gated resonance amplitudes")
        analyses = self.analyses()
        points = [(self._distance(analysis), analysis.resonance.s21_res) for analysis in analyses]
        logger.info(f"Step 2: fitting |S21,0| = A exp(-d / 2l) over {len(points)} sweep(s)")
        fit = fit_decay(points)
        self._write_resonances(analyses)
        self._write_csv('decay.csv', ('a', 'a_stderr', 'l_m', 'l_stderr', 'residual_rms', 'flags'),
                        [(fit['A'], fit.stderr('A'), fit['l'], fit.stderr('l'), fit.residual_rms, ';'.join(fit.flags))])
        decay = 'inf (no resolvable attenuation)' if math.isinf(fit['l']) else f"{fit['l'] * 1e3:.4f} mm"
        self.summary.append(f"A = {fit['A']:.4e}, l = {decay}")

    def _k2_inputs(self) -> List[Tuple[str, float, float]]:
        """(label, s21_res, prop_loss) from the configuration or from gated sweeps"""
        config = self.config
        s21_res = config['s21_res']
        if s21_res is None and config['s21_res_db'] is not None:
            s21_res = db_to_amplitude(config['s21_res_db'])
        if s21_res is not None:
            prop_loss = 1.0 if config['prop_loss'] is None else config['prop_loss']
            return [(config['label'], s21_res, prop_loss)]

        rows = []
        for analysis in self.analyses():
            prop_loss = config['prop_loss']
            if prop_loss is None:
                distance = analysis.sweep.meta.distance_d or 0.0
                decay = config['decay_length']
                prop_loss = 1.0 if math.isinf(decay) else math.exp(-distance / (2.0 * decay))
            rows.append((analysis.sweep.meta.label, analysis.resonance.s21_res, prop_loss))
        return rows

    def extract_k2(self) -> None:
        logger.info("Step 1: collecting resonance amplitudes")
        inputs = self._k2_inputs()
        design = self.design()
        logger.info(f"Step 2: inverting {len(inputs)} resonance(s) under {len(PRESETS)} geometry presets")
        rows = []
        for label, s21_res, prop_loss in inputs:
            for name, preset_k2 in preset_k2_table(s21_res, design, prop_loss).items():
                geometry = PRESETS[name]
                rows.append((label, name, geometry.gamma, geometry.zeta, s21_res, prop_loss, preset_k2))
            k2 = extract_k2(design, s21_res, prop_loss)
            self.summary.append(f"{label}: K² = {k2:.4e} ({self.config['preset']}, "
                                f"|S21,0| = {amplitude_to_db(s21_res):.2f} dB, L = {prop_loss:.4f})")
        self._write_csv('k2.csv', ('label', 'preset', 'gamma', 'zeta', 's21_res', 'prop_loss', 'k2'), rows)

    def qubit_q(self) -> None:
        config = self.config
        design = self.design()
        cg_q = config['cg_q'] or design.cg

        logger.info("Step 1: building the qubit model")
        if config['admittance_table'] is not None:
            source = AdmittanceTable.from_csv(config['admittance_table'])
            f_lo, f_hi = source.frequencies[0], source.frequencies[-1]
        else:
            source = IdtAdmittanceSource(design, config['k2'])
            f_lo = design.f0 * (1.0 - 2.0 / design.n_periods)
            f_hi = design.f0 * (1.0 + 2.0 / design.n_periods)
        f_lo = config['f_min'] or f_lo
        f_hi = config['f_max'] or f_hi
        if config['l_j'] is not None:
            model = QubitModel(config['l_j'], cg_q, source)
        else:
            model = QubitModel.tuned_to(design.f0, cg_q, source)
        f_q = config['f_q'] or float(np.clip(design.f0, f_lo, f_hi))

        logger.info(f"Step 2: evaluating Q over {config['q_points']} points in [{f_lo:.6e}, {f_hi:.6e}] Hz")
        if config['q_points'] < 1 or not 0 < f_lo <= f_hi:
            raise ModelValidationError(f"invalid qubit frequency range [{f_lo}, {f_hi}] with {config['q_points']} points")
        rows = q_spectrum(model, np.linspace(f_lo, f_hi, config['q_points']))
        self._write_csv('qubit_q.csv', ('f_hz', 'ga_s', 'q', 't1_s', 'loss_rate_per_s'),
                        ((row['f_hz'], row['ga_s'], row['q'], row['t1_s'], row['loss_rate_per_s']) for row in rows))

        self.summary.append(f"Q({f_q / 1e9:.4f} GHz) = {q_factor(model, f_q):.4e}, T1 = {t1(model, f_q) * 1e6:.4f} us")
        self.summary.append(f"plasmon frequency {plasmon_frequency(model) / 1e9:.4f} GHz, "
                            f"qubit frequency {qubit_frequency(model) / 1e9:.4f} GHz")

    def charge_profile(self) -> None:
        config = self.config
        spec = JunctionSpec(
            metal_work_function=config['metal_work_function'],
            semiconductor_electron_affinity=config['electron_affinity'],
            band_gap=config['band_gap'],
            intrinsic_density=config['intrinsic_density'],
            relative_permittivity=config['relative_permittivity'],
            temperature=config['junction_temperature'],
            domain_length=config['domain_length'],
            oxide_eot=config['oxide_eot'],
            h_min=config['mesh_h_min'],
            n_nodes=config['mesh_nodes'],
            max_iterations=config['max_iterations'],
        )
        logger.info(f"Step 1: solving {len(config['biases'])} bias point(s)")
        profiles = bias_sweep(spec, config['biases'])

        logger.info("Step 2: writing profiles")
        summary_rows = []
        for profile in profiles:
            tag = f"{'m' if profile.bias_v < 0 else 'p'}{abs(profile.bias_v):.3f}V"
            self._write_csv(f"profile_{tag}.csv", ('x_m', 'phi_v', 'ne_m3', 'nh_m3'),
                            zip(profile.x, profile.phi, profile.n_e, profile.n_h))
            sheet = sheet_charge(profile)
            summary_rows.append((profile.bias_v, profile.surface_potential, profile.surface_field,
                                 profile.interface_excess_density, sheet, profile.iterations))
            self.summary.append(f"bias {profile.bias_v:+.3f} V: phi_s = {profile.surface_potential:+.4f} V, "
                                f"sheet charge {sheet:.4e} C/m^2")
        self._write_csv('charge_summary.csv',
                        ('bias_v', 'phi_s_v', 'surface_field_v_per_m', 'interface_excess_m3',
                         'sheet_charge_c_per_m2', 'iterations'),
                        summary_rows)

    def run(self, name: str) -> RunResult:
        try:
            self.subcommands[name]()
        except ModelValidationError as e:
            logger.error(f"{name} rejected its input: {e}")
            return RunResult(EXIT_VALIDATION, self.artifacts, self.summary, str(e))
        except JunctionSolverError as e:
            logger.error(f"{name} solver failure: {e}")
            return RunResult(EXIT_SOLVER, self.artifacts, self.summary, str(e))
        return RunResult(EXIT_OK, self.artifacts, self.summary)


SUBCOMMANDS = ('simulate', 'gate', 'fit-velocity', 'fit-loss', 'extract-k2', 'qubit-q', 'charge-profile')

USAGE = (
    "usage: manage.py saw {" + ' | '.join(SUBCOMMANDS) + "} "
    "[--config FILE] [--set KEY=VALUE ...] [--output-dir DIR]"
)


def run_subcommand(name: str, config: RunConfig, output_dir: Path) -> RunResult:
    """
    Run one subcommand and report its exit status

    Returns:
        RunResult with status 0 on success, 1 on a validation error or an
        unknown subcommand, 2 on a junction solver failure
    """
    if name not in SUBCOMMANDS:
        return RunResult(EXIT_VALIDATION, error=f"unknown subcommand '{name}'\n{USAGE}")
    logger.info(f"Running {name} into {output_dir}")
    return SawPipelineRunner(config, output_dir).run(name)
