import math
import tempfile
from pathlib import Path

from django.test import SimpleTestCase

from piezosawapp.run_config import SCHEMA, RunConfigError, load_run_config, parse_value
from piezosawapp.units import amplitude_to_db, db_to_amplitude, parse_quantity
from piezosawapp.models import ModelValidationError

DOCUMENT = """
# delay line under test
label=sampleA
f0=4.583 GHz
cg=318fF
distances=323um, 823um,1323 um
decay_length=inf
temperature=10mK
"""


class UnitTests(SimpleTestCase):
    def test_db_convention(self):
        self.assertAlmostEqual(db_to_amplitude(-99.0), 1.1220e-5, delta=1e-9)
        self.assertAlmostEqual(amplitude_to_db(1.1220e-5), -99.0, delta=1e-4)
        self.assertEqual(amplitude_to_db(0.0), -math.inf)
        self.assertIsInstance(db_to_amplitude(-20.0), float)

    def test_suffixes(self):
        cases = (
            ('4.583 GHz', 'frequency', 4.583e9),
            ('318fF', 'capacitance', 318e-15),
            ('1323um', 'length', 1323e-6),
            ('1323µm', 'length', 1323e-6),
            ('2.5ns', 'time', 2.5e-9),
            ('5063 m/s', 'velocity', 5063.0),
            ('-55 dB', 'decibel', -55.0),
            ('4.28eV', 'energy', 4.28),
            ('1e16', 'number', 1e16),
            ('inf', 'length', math.inf),
        )
        for text, kind, expected in cases:
            with self.subTest(text=text):
                self.assertAlmostEqual(parse_quantity(text, kind), expected, delta=abs(expected) * 1e-12)

    def test_rejected_values(self):
        for text, kind in (('4.583 GHz', 'length'), ('fast', 'velocity'), ('', 'number'), ('1 2', 'number')):
            with self.subTest(text=text), self.assertRaises(ModelValidationError):
                parse_quantity(text, kind)


class ParseValueTests(SimpleTestCase):
    def test_schema_names_are_unique(self):
        names = [key.name for key in SCHEMA]
        self.assertEqual(len(names), len(set(names)))

    def test_scalar_and_list_values(self):
        self.assertEqual(parse_value('n_periods', '50'), 50)
        self.assertEqual(parse_value('preset', 'split-finger-maintext'), 'split-finger-maintext')
        self.assertEqual(parse_value('biases', '-1V, 0, 500mV'), [-1.0, 0.0, 0.5])
        self.assertEqual(parse_value('inputs', ''), [])
        self.assertEqual(parse_value('inputs', 'a.s2p,b.s2p'), [Path('a.s2p'), Path('b.s2p')])

    def test_rejections(self):
        for name, text in (('nonsense', '1'), ('n_periods', '50.5'), ('f0', ''), ('f0', None), ('cg', '318 nH')):
            with self.subTest(name=name, text=text), self.assertRaises(RunConfigError):
                parse_value(name, text)


class LoadRunConfigTests(SimpleTestCase):
    def test_defaults(self):
        config = load_run_config()
        self.assertEqual(config['n_periods'], 50)
        self.assertEqual(config['f0'], 4.583e9)
        self.assertEqual(config['k2'], 2.32e-7)
        self.assertEqual(config['distances'], [1323e-6])
        self.assertIsNone(config['s21_res'])
        self.assertFalse(config.explicitly_set('f0'))

    def test_document(self):
        config = load_run_config(text=DOCUMENT)
        self.assertEqual(config['label'], 'sampleA')
        self.assertAlmostEqual(config['f0'], 4.583e9, delta=1e-3)
        self.assertAlmostEqual(config['cg'], 318e-15, delta=1e-27)
        self.assertEqual(len(config['distances']), 3)
        self.assertAlmostEqual(config['distances'][2], 1323e-6, delta=1e-18)
        self.assertEqual(config['decay_length'], math.inf)
        self.assertTrue(config.explicitly_set('label'))

    def test_temperature_unit_mismatch(self):
        with self.assertRaises(RunConfigError):
            load_run_config(text=DOCUMENT.replace('temperature=10mK', 'temperature=10 mV'))

    def test_keys_are_case_insensitive(self):
        self.assertEqual(load_run_config(text='N_PERIODS=40\n')['n_periods'], 40)

    def test_no_interpolation(self):
        config = load_run_config(text='label=${HOME}\n')
        self.assertEqual(config['label'], '${HOME}')

    def test_overrides_win(self):
        config = load_run_config(text=DOCUMENT, overrides=['label=sampleE', 'k2=1e-7'])
        self.assertEqual(config['label'], 'sampleE')
        self.assertEqual(config['k2'], 1e-7)

    def test_malformed_override(self):
        with self.assertRaisesMessage(RunConfigError, 'KEY=VALUE'):
            load_run_config(overrides=['k2'])

    def test_unknown_key(self):
        with self.assertRaisesMessage(RunConfigError, "unknown configuration key 'colour'"):
            load_run_config(text='colour=blue\n')

    def test_key_without_value(self):
        with self.assertRaises(RunConfigError):
            load_run_config(text='f0\n')

    def test_file(self):
        with tempfile.TemporaryDirectory() as directory:
            path = Path(directory) / 'run.env'
            path.write_text(DOCUMENT, encoding='utf-8')
            config = load_run_config(path=path)
        self.assertEqual(config.source, str(path))
        self.assertEqual(config['label'], 'sampleA')

    def test_missing_file(self):
        with self.assertRaises(RunConfigError):
            load_run_config(path='/nonexistent/run.env')

    def test_unknown_lookup(self):
        with self.assertRaises(KeyError):
            load_run_config()['colour']
