import math

import numpy as np
from django.test import SimpleTestCase

from piezosawapp.idt_circuit import (
    PRESETS, IdtDesign, RadiationAdmittance, extract_k2, ga_at_resonance, ga_spectrum,
    insertion_loss, preset_k2_table, s21_resonance, s21_transducer_pair,
)
from piezosawapp.models import ModelValidationError
from piezosawapp.units import amplitude_to_db

# Al IDT on Si(100): N = 50, f0 = 4.583 GHz, Cg = 318 fF
SAMPLE_DESIGN = IdtDesign(n_periods=50, f0=4.583e9, cg=318e-15)
SAMPLE_K2 = 2.32e-7
SAMPLE_S21_RES = 1.1221e-5


class IdtDesignTests(SimpleTestCase):
    def test_presets_are_shipped(self):
        self.assertEqual(set(PRESETS), {'split-finger-supplement', 'split-finger-maintext', 'unity-ratio'})
        self.assertEqual((PRESETS['split-finger-supplement'].gamma, PRESETS['split-finger-supplement'].zeta),
                         (1.0836, 1.414))
        self.assertEqual((PRESETS['split-finger-maintext'].gamma, PRESETS['split-finger-maintext'].zeta),
                         (1.414, 1.0836))

    def test_from_preset_defaults_to_unity_ratio(self):
        design = IdtDesign.from_preset(50, 4.583e9, 318e-15)
        self.assertEqual((design.gamma, design.zeta), (1.0, 1.0))

    def test_invalid_designs_rejected(self):
        for kwargs in ({'n_periods': 0}, {'f0': 0.0}, {'cg': -1e-15}, {'gamma': 0.0}, {'z0': math.nan}):
            params = dict(n_periods=50, f0=4.583e9, cg=318e-15)
            params.update(kwargs)
            with self.subTest(kwargs=kwargs), self.assertRaises(ModelValidationError):
                IdtDesign(**params)

    def test_unknown_preset_rejected(self):
        with self.assertRaises(ModelValidationError):
            IdtDesign.from_preset(50, 4.583e9, 318e-15, preset='double-electrode')

    def test_negative_conductance_rejected(self):
        with self.assertRaises(ModelValidationError):
            RadiationAdmittance(-1e-9)


class RadiationConductanceTests(SimpleTestCase):
    def test_zero_coupling_radiates_nothing(self):
        self.assertEqual(ga_at_resonance(SAMPLE_DESIGN, 0.0), 0.0)

    def test_sample_design_conductance(self):
        self.assertAlmostEqual(ga_at_resonance(SAMPLE_DESIGN, SAMPLE_K2) / 1.353e-7, 1.0, delta=1e-3)

    def test_supplement_preset_conductance(self):
        design = IdtDesign.from_preset(50, 4.583e9, 318e-15, preset='split-finger-supplement')
        self.assertAlmostEqual(ga_at_resonance(design, SAMPLE_K2) / 1.037e-7, 1.0, delta=1e-3)

    def test_linear_in_k2(self):
        self.assertAlmostEqual(ga_at_resonance(SAMPLE_DESIGN, 2e-6) / ga_at_resonance(SAMPLE_DESIGN, 1e-6), 2.0,
                               places=12)

    def test_strong_coupling_rejected(self):
        for k2 in (0.01, 0.2, -1e-9):
            with self.subTest(k2=k2), self.assertRaises(ModelValidationError):
                ga_at_resonance(SAMPLE_DESIGN, k2)

    def test_spectrum_peak_and_nulls(self):
        ga0 = 1.0e-7
        f0, n = SAMPLE_DESIGN.f0, SAMPLE_DESIGN.n_periods
        self.assertEqual(ga_spectrum(SAMPLE_DESIGN, ga0, f0), ga0)
        for k in (1, 2, 3):
            with self.subTest(k=k):
                self.assertEqual(ga_spectrum(SAMPLE_DESIGN, ga0, f0 * (1 + k / n)), 0.0)
                self.assertEqual(ga_spectrum(SAMPLE_DESIGN, ga0, f0 * (1 - k / n)), 0.0)

    def test_spectrum_half_way_to_first_null(self):
        f = SAMPLE_DESIGN.f0 * (1 + 1 / (2 * SAMPLE_DESIGN.n_periods))
        self.assertAlmostEqual(ga_spectrum(SAMPLE_DESIGN, 1.0, f), (2 / math.pi) ** 2, places=12)

    def test_spectrum_bounded_by_resonance_value(self):
        ga0 = ga_at_resonance(SAMPLE_DESIGN, SAMPLE_K2)
        freqs = np.linspace(3.5e9, 5.5e9, 4001)
        spectrum = ga_spectrum(SAMPLE_DESIGN, ga0, freqs)
        self.assertTrue(np.all(spectrum <= ga0))
        self.assertTrue(np.all(spectrum[freqs != SAMPLE_DESIGN.f0] < ga0))


class InsertionLossTests(SimpleTestCase):
    def test_no_transduction(self):
        self.assertEqual(insertion_loss(SAMPLE_DESIGN, RadiationAdmittance(0.0)), 0.0)

    def test_sample_value(self):
        loss = insertion_loss(SAMPLE_DESIGN, RadiationAdmittance(1.357e-7))
        self.assertAlmostEqual(loss / 1.122e-5, 1.0, delta=1e-3)

    def test_matched_limit_is_one_half(self):
        matched = RadiationAdmittance(1.0 / SAMPLE_DESIGN.z0, -(SAMPLE_DESIGN.omega0 * SAMPLE_DESIGN.cg))
        self.assertAlmostEqual(insertion_loss(SAMPLE_DESIGN, matched), 0.5, places=14)

    def test_passivity(self):
        rng = np.random.default_rng(7)
        for g_a, b_a in zip(rng.uniform(0, 1, 200), rng.uniform(-1, 1, 200)):
            loss = insertion_loss(SAMPLE_DESIGN, RadiationAdmittance(g_a, b_a))
            self.assertGreaterEqual(loss, 0.0)
            self.assertLessEqual(loss, 1.0)


class ResonanceTransmissionTests(SimpleTestCase):
    def test_sample_resonance_level(self):
        s21 = s21_resonance(SAMPLE_DESIGN, 1.357e-7, 1.0)
        self.assertAlmostEqual(s21 / 1.122e-5, 1.0, delta=1e-3)
        self.assertAlmostEqual(amplitude_to_db(s21), -99.0, delta=0.01)

    def test_zero_cases(self):
        self.assertEqual(s21_resonance(SAMPLE_DESIGN, 1.357e-7, 0.0), 0.0)
        self.assertEqual(s21_resonance(SAMPLE_DESIGN, 0.0, 1.0), 0.0)

    def test_monotone_in_conductance_and_path_loss(self):
        values = [s21_resonance(SAMPLE_DESIGN, ga0, 0.5) for ga0 in (1e-9, 1e-8, 1e-7)]
        self.assertEqual(values, sorted(values))
        values = [s21_resonance(SAMPLE_DESIGN, 1e-7, loss) for loss in (0.1, 0.5, 1.0)]
        self.assertEqual(values, sorted(values))

    def test_prop_loss_range(self):
        with self.assertRaises(ModelValidationError):
            s21_resonance(SAMPLE_DESIGN, 1e-7, 1.5)

    def test_transducer_pair_reduces_to_weak_coupling_form(self):
        ga0 = ga_at_resonance(SAMPLE_DESIGN, SAMPLE_K2)
        exact = s21_transducer_pair(SAMPLE_DESIGN, RadiationAdmittance(ga0), prop_loss=0.8)
        approx = s21_resonance(SAMPLE_DESIGN, ga0, 0.8)
        self.assertLess(abs(exact - approx) / approx, 2 * ga0 * SAMPLE_DESIGN.z0)

    def test_transducer_pair_is_reciprocal(self):
        receiver = IdtDesign(40, 4.583e9, 250e-15)
        tx, rx = RadiationAdmittance(1e-7), RadiationAdmittance(2e-7)
        forward = s21_transducer_pair(SAMPLE_DESIGN, tx, rx, receiver=receiver)
        backward = s21_transducer_pair(receiver, rx, tx, receiver=SAMPLE_DESIGN)
        self.assertAlmostEqual(forward, backward, places=18)


class ExtractK2Tests(SimpleTestCase):
    def test_reproduces_published_coupling(self):
        self.assertAlmostEqual(extract_k2(SAMPLE_DESIGN, SAMPLE_S21_RES, 1.0) / SAMPLE_K2, 1.0, delta=0.01)

    def test_published_presets_disagree(self):
        table = preset_k2_table(SAMPLE_S21_RES, SAMPLE_DESIGN)
        self.assertAlmostEqual(table['split-finger-maintext'] / 1.78e-7, 1.0, delta=0.01)
        self.assertAlmostEqual(table['split-finger-supplement'] / 3.04e-7, 1.0, delta=0.01)
        self.assertAlmostEqual(table['unity-ratio'] / 2.32e-7, 1.0, delta=0.01)

    def test_preset_ratio(self):
        table = preset_k2_table(SAMPLE_S21_RES, SAMPLE_DESIGN)
        ratio = table['split-finger-supplement'] / table['split-finger-maintext']
        self.assertAlmostEqual(ratio / (1.414 / 1.0836) ** 2, 1.0, places=12)

    def test_inverse_of_forward_chain(self):
        for name in PRESETS:
            design = IdtDesign.from_preset(50, 4.583e9, 318e-15, preset=name)
            for k2 in np.logspace(-9, -4, 11):
                for loss in (0.3, 1.0):
                    s21 = s21_resonance(design, ga_at_resonance(design, k2), loss)
                    with self.subTest(preset=name, k2=k2, loss=loss):
                        self.assertAlmostEqual(extract_k2(design, s21, loss) / k2, 1.0, delta=1e-12)

    def test_rejects_out_of_range_inputs(self):
        for s21, loss in ((0.0, 1.0), (1.0, 1.0), (1e-5, 0.0), (1e-5, 1.2)):
            with self.subTest(s21=s21, loss=loss), self.assertRaises(ModelValidationError):
                extract_k2(SAMPLE_DESIGN, s21, loss)
