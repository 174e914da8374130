import math

import numpy as np

from convex_dynamics import counterexample
from convex_dynamics.base_test import BaseDynamicsTest
from convex_dynamics.regions import RegionError


class TestCounterexample(BaseDynamicsTest):
    """Test for the octahedral polytope without invariant face translations."""

    def test_translated_polytope(self):
        polytope, region = counterexample.translated_polytope(0.0, 0.0)
        self.assertEqual(len(polytope), 12)
        self.assertEqual(len(region.offsets), 8)
        for vertex in polytope.vertices:
            self.assertTrue(region.contains(vertex))
        self.assertFalse(region.contains((1.0, 0.0, 1.0)))

        _, moved = counterexample.translated_polytope(0.5, 0.25)
        self.assertTrue(moved.contains((1.0, 0.0, 1.0)))
        self.assertTrue(moved.contains((-0.25, 0.5, 0.5)))

        with self.assertRaises(RegionError):
            counterexample.translated_polytope(-0.1, 0.0)

    def test_named_points(self):
        middle, corner = counterexample.named_points()
        self.assertAllClose(middle, (0.625, 0.625, 1.0))
        self.assertAllClose(corner, (1.0, 0.0, 1.0))

    def test_failure_a_without_translation(self):
        check = counterexample.counterexample_3d(0.0)
        self.assertTrue(check.failure_a.fails)
        self.assertLess(check.failure_a.margin, -0.2)
        self.assertIn('a', check.mode)
        self.assertFalse(check.passed)

        # m + d - g crosses the lower hexagonal plane
        self.assertAlmostEqual(check.failure_a.named_slack, -0.5 / math.sqrt(3.0))

    def test_failure_b_with_raised_hexagons(self):
        check = counterexample.counterexample_3d(0.5)
        self.assertTrue(check.failure_b.fails)
        self.assertIn('b', check.mode)

        # (1, 0, 1) + b - c = (1, -0.25, 0.75) lies below the face y = 0
        self.assertAlmostEqual(check.failure_b.named_slack, -0.25)
        self.assertEqual(check.failure_b.cell, 'c')
        self.assertEqual(check.failure_b.gamma, 'b')

    def test_no_translation_is_invariant(self):
        result = counterexample.sweep([0.0, 0.1, 0.25, 0.5, 1.0], [0.0, 0.1, 0.5], workers=2)
        self.assertEqual(len(result.checks), 15)
        self.assertEqual(result.passing, [])
        self.assertEqual(sum(result.counts().values()), 15)
        self.assertNotIn('-', result.counts())

        lines = result.to_text().splitlines()
        self.assertEqual(len(lines), 6)
        self.assertTrue(lines[0].startswith('hex\\face'))

        record = result.to_dict()
        self.assertEqual(record['grid_points'], 15)
        self.assertEqual(record['passing'], 0)
        self.assertEqual(sorted(record['checks'][0]), ['face_shift', 'failure_a', 'failure_b', 'hex_shift', 'mode', 'pass'])

    def test_witness_leaves_the_region(self):
        polytope, region = counterexample.translated_polytope(0.0, 0.0)
        result = counterexample.push_out(polytope, region, 'g', 'd')
        witness = np.array(result.witness)
        shift = polytope.vertices[3] - polytope.vertices[6]
        self.assertTrue(region.contains(witness, tolerance=1e-7))
        self.assertFalse(region.contains(witness + shift))
