import math
import tempfile
from pathlib import Path

import numpy as np
from django.test import SimpleTestCase

from piezosawapp.artifacts import format_value, write_csv
from piezosawapp.models import FrequencyGrid, FrequencySweep, GridError, ModelValidationError, SweepMeta


class FrequencyGridTests(SimpleTestCase):
    def test_centered_grid_hits_center(self):
        grid = FrequencyGrid.centered(4.583e9, 200e6, 401)
        self.assertAlmostEqual(grid.frequencies[200], 4.583e9, delta=1e-3)
        self.assertAlmostEqual(grid.f_stop, 4.783e9, delta=1e-3)
        self.assertAlmostEqual(grid.f_step, 1e6, delta=1e-6)

    def test_rejects_degenerate_grids(self):
        for args in ((4e9, 0.0, 10), (4e9, -1e6, 10), (0.0, 1e6, 10), (4e9, 1e6, 1), (4e9, math.nan, 10)):
            with self.subTest(args=args), self.assertRaises(GridError):
                FrequencyGrid(*args)


class FrequencySweepTests(SimpleTestCase):
    def test_points_are_read_only(self):
        sweep = FrequencySweep(4e9, 1e6, [1 + 1j, 2, 3])
        self.assertEqual(sweep.n_points, 3)
        with self.assertRaises(ValueError):
            sweep.points[0] = 0

    def test_non_finite_points(self):
        with self.assertRaises(ModelValidationError):
            FrequencySweep(4e9, 1e6, [1, complex(math.inf, 0)])

    def test_with_points_keeps_grid_and_updates_meta(self):
        sweep = FrequencySweep(4e9, 1e6, [1, 2], SweepMeta(distance_d=1e-3, label='a'))
        gated = sweep.with_points([3, 4], label='b')
        self.assertEqual(gated.grid, sweep.grid)
        self.assertEqual((gated.meta.label, gated.meta.distance_d), ('b', 1e-3))
        self.assertEqual(sweep.meta.label, 'a')

    def test_from_frequencies(self):
        sweep = FrequencySweep.from_frequencies([1e9, 2e9, 3e9], [1, 2, 3])
        self.assertEqual((sweep.f_start, sweep.f_step), (1e9, 1e9))
        cases = (
            ([1e9], [1], 'at least two'),
            ([1e9, 2e9], [1], 'same length'),
            ([2e9, 1e9], [1, 2], 'strictly increasing'),
            ([1e9, 2e9, 4e9], [1, 2, 3], 'not uniform'),
        )
        for freqs, points, fragment in cases:
            with self.subTest(fragment=fragment), self.assertRaisesMessage(GridError, fragment):
                FrequencySweep.from_frequencies(freqs, points)


class ArtifactTests(SimpleTestCase):
    def test_format_value(self):
        self.assertEqual(format_value(True), 'true')
        self.assertEqual(format_value(None), '')
        self.assertEqual(format_value(7), '7')
        self.assertEqual(format_value(0.1), '1.000000000000e-01')
        self.assertEqual(format_value(np.float64(-math.inf)), '-inf')
        self.assertEqual(format_value(math.inf), 'inf')
        self.assertEqual(format_value('single_distance'), 'single_distance')

    def test_write_csv(self):
        with tempfile.TemporaryDirectory() as directory:
            path = write_csv(Path(directory) / 'nested' / 'table.csv', ('a', 'b'), [(1, 2.5), ('x,y', False)])
            self.assertEqual(path.read_bytes(), b'a,b\n1,2.500000000000e+00\n"x,y",false\n')
            self.assertEqual([p.name for p in path.parent.iterdir()], ['table.csv'])
