import numpy as np

from convex_dynamics import regions
from convex_dynamics import polytope as geometry
from convex_dynamics.base_test import BaseDynamicsTest
from convex_dynamics.polytope import DimensionError
from convex_dynamics.regions import IntervalRegion, HalfspaceRegion, RegionError, RegionVerdict


class TestIntervalRegion(BaseDynamicsTest):
    """Test for the exact interval check."""

    def test_half_width_is_the_threshold(self):
        region, verdict = regions.interval_region(geometry.interval(), 0.5)
        self.assertVerdictPassed(verdict)
        self.assertEqual(verdict.margin, 0.0)
        self.assertEqual((region.low, region.high), (-0.5, 1.5))

        _, verdict = regions.interval_region(geometry.interval(), 0.4)
        self.assertVerdictFailed(verdict)
        self.assertAlmostEqual(verdict.margin, -0.1)
        self.assertEqual(verdict.method, 'exact-interval')

    def test_verify_delegates_to_the_exact_check(self):
        verdict = regions.verify_invariance(IntervalRegion(-1.0, 2.0), geometry.interval())
        self.assertVerdictPassed(verdict)
        self.assertEqual(verdict.method, 'exact-interval')

    def test_errors(self):
        with self.assertRaises(RegionError):
            regions.interval_region(geometry.interval(), -0.1)

        with self.assertRaises(RegionError):
            regions.interval_region(geometry.preset('square'), 0.5)

        with self.assertRaises(RegionError):
            IntervalRegion(1.0, 0.0)

        with self.assertRaises(DimensionError):
            regions.verify_invariance(IntervalRegion(-1.0, 2.0), geometry.preset('square'))

    def test_find_min_t(self):
        result = regions.find_min_t(geometry.interval(), resolution=0.01)
        self.assertEqual(result.t, 0.5)
        self.assertTrue(result.monotonic)
        self.assertVerdictPassed(result.verdict)
        self.assertVerdictFailed(result.below)

    def test_critical_points(self):
        points = IntervalRegion(-0.5, 1.5).critical_points(geometry.interval())
        self.assertEqual(sorted(points[:, 0].tolist()), [-0.5, 0.5, 1.5])


class TestHalfspaceRegion(BaseDynamicsTest):
    """Test for half-space regions and the square's translated polygons."""
    SEED = 99

    def test_geometry(self):
        region = HalfspaceRegion([(2, 0), (-1, 0), (0, 1), (0, -1)], [2, 1, 1, 1])
        self.assertTrue(region.contains((0.5, -0.5)))
        self.assertFalse(region.contains((1.5, 0.0)))
        self.assertAllClose(region.slack([(0.0, 0.0), (1.0, 1.0)]), [1.0, 0.0])

        center, radius = region.interior_point()
        self.assertAllClose(center, (0.0, 0.0))
        self.assertAlmostEqual(radius, 1.0)

        vertices = region.vertices()
        self.assertEqual(len(vertices), 4)
        self.assertAllClose(sorted(map(tuple, vertices)), [(-1, -1), (-1, 1), (1, -1), (1, 1)])
        self.assertEqual(len(region.to_text().splitlines()), 4)

        boundary = region.boundary_points(100)
        self.assertEqual(len(boundary), 100)
        self.assertLessEqual(np.max(np.abs(region.slack(boundary))), 1e-9)

    def test_degenerate_regions(self):
        with self.assertRaises(RegionError):
            HalfspaceRegion([(1, 0)], [1, 2])

        with self.assertRaises(RegionError):
            HalfspaceRegion([(0, 0)], [1])

        with self.assertRaises(RegionError):
            HalfspaceRegion([(1, 0)], [1]).interior_point()

        with self.assertRaises(RegionError):
            HalfspaceRegion([(1, 0), (-1, 0)], [-1, -1]).interior_point()

        with self.assertRaises(RegionError):
            HalfspaceRegion(np.vstack([np.eye(3), -np.eye(3)]), np.ones(6)).to_text()

    def test_one_dimensional_vertices(self):
        region = HalfspaceRegion([(1,), (-1,)], [2, 1])
        self.assertAllClose(region.vertices(), [[-1.0], [2.0]])

    def test_polygon_region(self):
        region = regions.polygon_region(geometry.preset('square'), 0.5)
        self.assertAllClose(sorted(map(tuple, region.vertices())), [(-0.5, -0.5), (-0.5, 1.5), (1.5, -0.5), (1.5, 1.5)])

        with self.assertRaises(RegionError):
            regions.polygon_region(geometry.preset('square'), -1)

        with self.assertRaises(RegionError):
            regions.polygon_region(geometry.interval(), 0.5)

        with self.assertRaises(RegionError):
            regions.polygon_region(geometry.Polytope([(0, 0), (1, 1), (2, 2)]), 0.5)

        with self.assertRaises(RegionError):
            regions.polygon_region(geometry.Polytope([(0, 0), (2, 0), (0, 2), (0.5, 0.5)]), 0.5)

    def test_translated_regions_are_nested(self):
        """Q_s lies inside Q_t whenever s <= t."""
        for name in ('square', 'triangle', 'polygon5'):
            polytope = geometry.preset(name)
            for s, t in ((0.0, 0.1), (0.2, 0.5), (0.5, 0.5), (0.3, 2.0)):
                inner, outer = regions.polygon_region(polytope, s), regions.polygon_region(polytope, t)
                self.assertTrue(np.all(outer.contains_many(inner.vertices(), tolerance=1e-9)))
                self.assertTrue(np.all(outer.contains_many(inner.random_points(self.rng, 500))))

                points = self.rng.uniform(-3, 3, size=(500, 2))
                self.assertAllClose(outer.slack(points), inner.slack(points) + (t - s), atol=1e-12)

    def test_exact_invariance_of_the_square(self):
        square = geometry.preset('square')
        self.assertVerdictPassed(regions.exact_invariance(regions.polygon_region(square, 0.5), square))

        verdict = regions.exact_invariance(regions.polygon_region(square, 0.3), square)
        self.assertVerdictFailed(verdict)
        self.assertAlmostEqual(verdict.margin, -0.2, places=6)
        self.assertEqual(verdict.method, 'exact-lp')

    def test_sampled_invariance_of_the_square(self):
        square = geometry.preset('square')
        verdict = regions.verify_invariance(regions.polygon_region(square, 0.6), square,
                                            boundary_samples=200, gamma_samples=8, rng=self.rng)
        self.assertVerdictPassed(verdict)
        self.assertEqual(verdict.method, 'sampling')

        verdict = regions.verify_invariance(regions.polygon_region(square, 0.3), square,
                                            boundary_samples=200, gamma_samples=8, rng=self.rng, workers=2)
        self.assertVerdictFailed(verdict)
        self.assertEqual(sorted(verdict.to_dict()), ['margin', 'method', 'pass', 'samples', 'witness'])

        # The witness is a genuine escape through a vertex translation
        witness = verdict.witness
        self.assertLess(regions.polygon_region(square, 0.3).slack(witness['image'])[0], 0.0)
        vertex = np.array(witness['x']) + np.array(witness['gamma']) - np.array(witness['image'])
        self.assertLessEqual(np.min(np.linalg.norm(square.vertices - vertex, axis=1)), 1e-9)

    def test_find_min_t_of_the_square(self):
        result = regions.find_min_t(geometry.preset('square'), resolution=0.01, exact=True)
        self.assertGreaterEqual(result.t, 0.5 - 1e-6)
        self.assertLessEqual(result.t, 0.51 + 1e-9)
        self.assertTrue(result.monotonic)
        self.assertEqual(result.to_dict()['verdict']['t'], result.t)

    def test_verdict_to_dict(self):
        verdict = RegionVerdict(passed=True, margin=0.25, samples=10, method='sampling', rho=2.0)
        self.assertEqual(verdict.to_dict(), {'pass': True, 'margin': 0.25, 'samples': 10, 'method': 'sampling', 'rho': 2.0})


class TestAbsorption(BaseDynamicsTest):
    """Test for orbits started outside an invariant region."""
    SEED = 7

    def test_constant_input_enters_and_stays(self):
        region, _ = regions.interval_region(geometry.interval(), 0.5)
        result = regions.absorption_test(region, geometry.interval(), 0.1, [100.0],
                                         gammas=lambda k: [0.5], confirm_steps=10)
        self.assertEqual(result.entry_step, 197)
        self.assertTrue(result.stayed)
        self.assertEqual(len(result.excess), 197)
        self.assertEqual(result.to_dict()['initial_excess'], 98.5)

    def test_random_inputs_on_the_square(self):
        square = geometry.preset('square')
        region = regions.polygon_region(square, 0.5)
        result = regions.absorption_test(region, square, 0.1, [5.0, -3.0], rng=self.rng, confirm_steps=200)
        self.assertGreater(result.entry_step, 0)
        self.assertTrue(result.stayed)

    def test_start_inside(self):
        region, _ = regions.interval_region(geometry.interval(), 0.5)
        result = regions.absorption_test(region, geometry.interval(), 0.1, [0.25], rng=self.rng, confirm_steps=5)
        self.assertEqual(result.entry_step, 0)
        self.assertEqual(result.to_dict()['initial_excess'], 0.0)

    def test_no_entry(self):
        region, _ = regions.interval_region(geometry.interval(), 0.5)
        with self.assertRaises(RegionError):
            regions.absorption_test(region, geometry.interval(), 0.1, [100.0], max_steps=10, gammas=lambda k: [0.5])
