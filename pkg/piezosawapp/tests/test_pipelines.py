import csv
import tempfile
from pathlib import Path

import numpy as np
from django.test import SimpleTestCase

from piezosawapp.idt_circuit import IdtDesign, preset_k2_table
from piezosawapp.models import FrequencySweep, SweepMeta
from piezosawapp.pipelines import EXIT_OK, EXIT_SOLVER, EXIT_VALIDATION, SUBCOMMANDS, USAGE, run_subcommand
from piezosawapp.qubit_loss import AdmittanceTable, Q_PIEZO_PPC, REFERENCE_CG, conductance_for_q
from piezosawapp.run_config import load_run_config
from piezosawapp.touchstone_utils import parse_touchstone, write_touchstone
from piezosawapp.units import db_to_amplitude

FOUR_DISTANCES = 'distances=323um,823um,1323um,1823um'


def read_rows(path: Path):
    with open(path, newline='', encoding='utf-8') as handle:
        return list(csv.DictReader(handle))


class PipelineTestCase(SimpleTestCase):
    def setUp(self):
        self.tmp = tempfile.TemporaryDirectory()
        self.addCleanup(self.tmp.cleanup)
        self.root = Path(self.tmp.name)

    def run_pipeline(self, name, *overrides, output='out'):
        result = run_subcommand(name, load_run_config(overrides=overrides), self.root / output)
        return result, self.root / output


class SimulateTests(PipelineTestCase):
    def test_writes_touchstone_and_csv(self):
        result, out = self.run_pipeline('simulate')
        self.assertEqual(result.status, EXIT_OK)
        self.assertEqual(sorted(path.name for path in result.artifacts),
                         ['sweep_run_d1323um.csv', 'sweep_run_d1323um.s2p'])
        sweep = parse_touchstone((out / 'sweep_run_d1323um.s2p').read_bytes())
        self.assertEqual(sweep.n_points, 1601)
        self.assertAlmostEqual(sweep.meta.distance_d, 1323e-6, places=12)
        rows = read_rows(out / 'sweep_run_d1323um.csv')
        self.assertEqual(list(rows[0]), ['f_hz', 're', 'im', 'mag_db'])
        self.assertAlmostEqual(float(rows[0]['mag_db']), -55.0, delta=0.01)

    def test_reruns_are_byte_identical(self):
        first, _ = self.run_pipeline('simulate', FOUR_DISTANCES, 'noise_floor_db=-120', output='a')
        second, _ = self.run_pipeline('simulate', FOUR_DISTANCES, 'noise_floor_db=-120', output='b')
        self.assertEqual(len(first.artifacts), 8)
        for a, b in zip(first.artifacts, second.artifacts):
            self.assertEqual(a.name, b.name)
            self.assertEqual(a.read_bytes(), b.read_bytes())

    def test_refuses_inputs(self):
        result, _ = self.run_pipeline('simulate', 'inputs=missing.s2p')
        self.assertEqual(result.status, EXIT_VALIDATION)

    def test_invalid_scenario(self):
        result, _ = self.run_pipeline('simulate', 'k2=0.5')
        self.assertEqual(result.status, EXIT_VALIDATION)
        self.assertIn('k2', result.error.lower())

    def test_label_cannot_leave_output_directory(self):
        result, _ = self.run_pipeline('simulate', 'label=../../escaped')
        self.assertEqual(result.status, EXIT_VALIDATION)
        self.assertIn("label '../../escaped_d1323um'", result.error)
        self.assertEqual(result.artifacts, [])
        self.assertEqual(list(self.root.rglob('*escaped*')), [])


class GateTests(PipelineTestCase):
    def test_artifacts(self):
        result, out = self.run_pipeline('gate')
        self.assertEqual(result.status, EXIT_OK)
        for name in ('trace_run_d1323um.csv', 'gated_run_d1323um.s2p', 'gated_run_d1323um.csv', 'resonance.csv'):
            self.assertTrue((out / name).exists(), name)
        (row,) = read_rows(out / 'resonance.csv')
        self.assertAlmostEqual(float(row['delay_s']) * 1e9, 261.3, delta=0.3)
        self.assertAlmostEqual(float(row['s21_res_db']), -99.0, delta=0.1)
        self.assertEqual(row['ambiguous'], 'false')
        self.assertIn('|S21,0| = ', result.summary[0])

    def test_reads_touchstone_inputs(self):
        _, simulated = self.run_pipeline('simulate', output='sim')
        source = simulated / 'sweep_run_d1323um.s2p'
        result, out = self.run_pipeline('gate', f'inputs={source}')
        self.assertEqual(result.status, EXIT_OK)
        (row,) = read_rows(out / 'resonance.csv')
        self.assertEqual(row['label'], 'run_d1323um')

    def test_missing_input(self):
        result, _ = self.run_pipeline('gate', f'inputs={self.root / "absent.s2p"}')
        self.assertEqual(result.status, EXIT_VALIDATION)
        self.assertIn('cannot read input', result.error)

    def test_malformed_input(self):
        path = self.root / 'broken.s2p'
        path.write_text('# HZ S RI\n1 0 0 1 0\n')
        result, _ = self.run_pipeline('gate', f'inputs={path}')
        self.assertEqual(result.status, EXIT_VALIDATION)
        self.assertIn('line 2', result.error)

    def test_touchstone_label_cannot_leave_output_directory(self):
        _, simulated = self.run_pipeline('simulate', output='sim')
        source = simulated / 'sweep_run_d1323um.s2p'
        source.write_bytes(source.read_bytes().replace(b'! label=run_d1323um', b'! label=../escaped'))
        result, _ = self.run_pipeline('gate', f'inputs={source}')
        self.assertEqual(result.status, EXIT_VALIDATION)
        self.assertEqual(list(self.root.rglob('*escaped*')), [])

    def test_reruns_are_byte_identical(self):
        self.run_pipeline('gate', FOUR_DISTANCES, output='a')
        self.run_pipeline('gate', FOUR_DISTANCES, output='b')
        names = sorted(path.name for path in (self.root / 'a').iterdir())
        self.assertEqual(names, sorted(path.name for path in (self.root / 'b').iterdir()))
        for name in names:
            self.assertEqual((self.root / 'a' / name).read_bytes(), (self.root / 'b' / name).read_bytes(), name)


class FitTests(PipelineTestCase):
    def test_velocity_from_four_delay_lines(self):
        result, out = self.run_pipeline('fit-velocity', FOUR_DISTANCES)
        self.assertEqual(result.status, EXIT_OK)
        (row,) = read_rows(out / 'velocity.csv')
        self.assertAlmostEqual(float(row['v_m_per_s']) / 5063.0, 1.0, delta=5e-3)
        self.assertEqual(row['n_points'], '4')
        self.assertEqual(row['flags'], '')
        self.assertEqual(len(read_rows(out / 'delays.csv')), 4)

    def test_single_distance_is_flagged(self):
        result, out = self.run_pipeline('fit-velocity')
        self.assertEqual(result.status, EXIT_OK)
        (row,) = read_rows(out / 'velocity.csv')
        self.assertEqual(row['flags'], 'single_distance')

    def test_sweep_without_distance(self):
        _, simulated = self.run_pipeline('simulate', output='sim')
        sweep = parse_touchstone((simulated / 'sweep_run_d1323um.s2p').read_bytes())
        path = self.root / 'nodistance.s2p'
        path.write_bytes(write_touchstone(FrequencySweep(sweep.f_start, sweep.f_step, sweep.points,
                                                         SweepMeta(label='nodistance'))))
        result, _ = self.run_pipeline('fit-velocity', f'inputs={path}')
        self.assertEqual(result.status, EXIT_VALIDATION)
        self.assertIn('has no distance', result.error)

    def test_decay_length(self):
        result, out = self.run_pipeline('fit-loss', FOUR_DISTANCES, 'decay_length=0.6mm')
        self.assertEqual(result.status, EXIT_OK)
        (row,) = read_rows(out / 'decay.csv')
        self.assertAlmostEqual(float(row['l_m']) / 0.6e-3, 1.0, delta=0.01)
        self.assertAlmostEqual(float(row['a']) / 1.1221e-5, 1.0, delta=0.01)
        self.assertEqual(len(read_rows(out / 'resonance.csv')), 4)

    def test_decay_length_with_noise(self):
        result, out = self.run_pipeline('fit-loss', FOUR_DISTANCES, 'decay_length=0.6mm', 'k2=4.05e-8',
                                        'noise_floor_db=-150', 'peak_threshold_db=-100', 'seed=7')
        self.assertEqual(result.status, EXIT_OK)
        (row,) = read_rows(out / 'decay.csv')
        self.assertAlmostEqual(float(row['l_m']) / 0.6e-3, 1.0, delta=0.1)
        self.assertAlmostEqual(float(row['a']) / 1.96e-6, 1.0, delta=0.1)

    def test_lossless_line_has_no_decay(self):
        result, out = self.run_pipeline('fit-loss', FOUR_DISTANCES)
        self.assertEqual(result.status, EXIT_OK)
        (row,) = read_rows(out / 'decay.csv')
        self.assertGreater(float(row['l_m']), 1.0)


class ExtractK2Tests(PipelineTestCase):
    def test_from_configured_amplitude(self):
        result, out = self.run_pipeline('extract-k2', 's21_res_db=-99')
        self.assertEqual(result.status, EXIT_OK)
        self.assertTrue(result.summary[0].startswith('run: K² = 2.3'))
        rows = {row['preset']: float(row['k2']) for row in read_rows(out / 'k2.csv')}
        self.assertEqual(set(rows), {'split-finger-supplement', 'split-finger-maintext', 'unity-ratio'})
        self.assertAlmostEqual(rows['unity-ratio'] / 2.32e-7, 1.0, delta=0.01)
        table = preset_k2_table(db_to_amplitude(-99.0), IdtDesign.from_preset(50, 4.583e9, 318e-15))
        for name, k2 in table.items():
            self.assertAlmostEqual(rows[name] / k2, 1.0, places=9)

    def test_from_synthesized_sweeps(self):
        result, out = self.run_pipeline('extract-k2', FOUR_DISTANCES, 'decay_length=1.5mm')
        self.assertEqual(result.status, EXIT_OK)
        rows = [row for row in read_rows(out / 'k2.csv') if row['preset'] == 'unity-ratio']
        self.assertEqual(len(rows), 4)
        for row in rows:
            with self.subTest(label=row['label']):
                self.assertAlmostEqual(float(row['k2']) / 2.32e-7, 1.0, delta=0.01)

    def test_noisy_sweeps(self):
        result, out = self.run_pipeline('extract-k2', 'distances=323um,823um,1323um,1823um,2323um',
                                        'noise_floor_db=-110', 'peak_threshold_db=-65', 'seed=3')
        self.assertEqual(result.status, EXIT_OK)
        values = [float(row['k2']) for row in read_rows(out / 'k2.csv') if row['preset'] == 'unity-ratio']
        self.assertEqual(len(values), 5)
        for value in values:
            self.assertAlmostEqual(value / 2.32e-7, 1.0, delta=0.15)

    def test_unknown_preset(self):
        result, _ = self.run_pipeline('extract-k2', 's21_res_db=-99', 'preset=double-electrode')
        self.assertEqual(result.status, EXIT_VALIDATION)

    def test_recovers_random_scenarios(self):
        rng = np.random.default_rng(1234)
        for index in range(20):
            k2 = 10 ** rng.uniform(-8, -5)
            distance = rng.uniform(0.3e-3, 3e-3)
            overrides = (f'k2={float(k2)!r}', f'distances={float(distance)!r}', 'temperature=0.01')
            with self.subTest(k2=k2, distance=distance):
                result, out = self.run_pipeline('extract-k2', *overrides, output=f'k2_{index}')
                self.assertEqual(result.status, EXIT_OK)
                (row,) = [row for row in read_rows(out / 'k2.csv') if row['preset'] == 'unity-ratio']
                self.assertAlmostEqual(float(row['k2']) / k2, 1.0, delta=0.05)

                result, out = self.run_pipeline('fit-velocity', *overrides, output=f'v_{index}')
                self.assertEqual(result.status, EXIT_OK)
                (row,) = read_rows(out / 'velocity.csv')
                self.assertAlmostEqual(float(row['v_m_per_s']) / 5063.0, 1.0, delta=5e-3)


class QubitTests(PipelineTestCase):
    def test_idt_capacitor(self):
        result, out = self.run_pipeline('qubit-q')
        self.assertEqual(result.status, EXIT_OK)
        self.assertTrue(result.summary[0].startswith('Q(4.5830 GHz) = '))
        q_value = float(result.summary[0].split(' = ')[1].split(',')[0])
        self.assertAlmostEqual(q_value / 6.77e4, 1.0, delta=2e-3)
        rows = read_rows(out / 'qubit_q.csv')
        self.assertEqual(len(rows), 401)
        self.assertEqual(rows[0]['q'], 'inf')
        self.assertEqual(rows[-1]['t1_s'], 'inf')

    def test_admittance_table(self):
        table = AdmittanceTable([4.0e9, 5.0e9], [conductance_for_q(Q_PIEZO_PPC, REFERENCE_CG, f) for f in (4.0e9, 5.0e9)])
        path = table.to_csv(self.root / 'ppc.csv')
        result, out = self.run_pipeline('qubit-q', f'admittance_table={path}', 'cg_q=125fF', 'f_q=4.5GHz',
                                        'q_points=11')
        self.assertEqual(result.status, EXIT_OK)
        self.assertTrue(result.summary[0].startswith('Q(4.5000 GHz) = 7.0000e+04'))
        for row in read_rows(out / 'qubit_q.csv'):
            self.assertAlmostEqual(float(row['q']) / Q_PIEZO_PPC, 1.0, places=9)

    def test_frequency_outside_table(self):
        path = AdmittanceTable([4.0e9, 5.0e9], [1e-8, 1e-8]).to_csv(self.root / 'flat.csv')
        result, _ = self.run_pipeline('qubit-q', f'admittance_table={path}', 'f_max=6GHz')
        self.assertEqual(result.status, EXIT_VALIDATION)


class ChargeProfileTests(PipelineTestCase):
    def test_bias_series(self):
        result, out = self.run_pipeline('charge-profile')
        self.assertEqual(result.status, EXIT_OK)
        for tag in ('m2.000V', 'm1.000V', 'p0.000V', 'p1.000V', 'p2.000V'):
            self.assertTrue((out / f'profile_{tag}.csv').exists(), tag)
        summary = read_rows(out / 'charge_summary.csv')
        excess = [float(row['interface_excess_m3']) for row in summary]
        self.assertEqual(excess, sorted(excess))
        for row in summary:
            expected = -11.7 * 8.8541878128e-12 * float(row['surface_field_v_per_m'])
            self.assertLess(abs(float(row['sheet_charge_c_per_m2']) - expected), 1e-6 * abs(expected))

    def test_short_domain_is_a_solver_failure(self):
        result, _ = self.run_pipeline('charge-profile', 'domain_length=50um', 'biases=0')
        self.assertEqual(result.status, EXIT_SOLVER)
        self.assertIn('domain too short', result.error)

    def test_coarse_mesh(self):
        result, _ = self.run_pipeline('charge-profile', 'mesh_nodes=5', 'biases=0')
        self.assertIn(result.status, (EXIT_OK, EXIT_SOLVER))

    def test_invalid_junction(self):
        result, _ = self.run_pipeline('charge-profile', 'band_gap=0')
        self.assertEqual(result.status, EXIT_VALIDATION)


class RunSubcommandTests(PipelineTestCase):
    def test_unknown_subcommand(self):
        result, out = self.run_pipeline('sing')
        self.assertEqual(result.status, EXIT_VALIDATION)
        self.assertIn(USAGE, result.error)
        self.assertFalse(out.exists())

    def test_subcommand_names(self):
        self.assertEqual(SUBCOMMANDS, ('simulate', 'gate', 'fit-velocity', 'fit-loss', 'extract-k2', 'qubit-q',
                                       'charge-profile'))
        self.assertTrue(all(name in USAGE for name in SUBCOMMANDS))
        self.assertEqual((EXIT_OK, EXIT_VALIDATION, EXIT_SOLVER), (0, 1, 2))
