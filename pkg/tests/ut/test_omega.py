import math

import numpy as np

from convex_dynamics import omega
from convex_dynamics import polytope as geometry
from convex_dynamics.base_test import BaseDynamicsTest
from convex_dynamics.omega import Omega2D, ConvexRegion2D
from convex_dynamics.polytope import DimensionError
from convex_dynamics.regions import RegionError


class TestOmega(BaseDynamicsTest):
    """Test for the marked directions and the retained part of the circle."""

    def test_marked_directions_of_the_square(self):
        marked = omega.marked_directions([geometry.preset('square')])
        self.assertAllClose(marked, np.arange(8) * math.pi / 4)

        built = omega.build_omega_2d(geometry.preset('square'))
        self.assertAlmostEqual(built.min_gap, math.pi / 4)
        self.assertAlmostEqual(built.theta, math.pi / 12)
        self.assertTrue(built.antipodal())

    def test_marked_directions_need_the_plane(self):
        with self.assertRaises(DimensionError):
            omega.marked_directions([geometry.interval()])

    def test_distance_to_the_retained_set(self):
        circle = Omega2D([0.0, math.pi], 0.2)
        self.assertAllClose(circle.distance([0.0, 0.05, 0.1, 0.3, -0.05]), [0.0, 0.05, 0.1, 0.0, 0.05])
        self.assertTrue(circle.retains(0.0))
        self.assertTrue(circle.retains(math.pi))
        self.assertFalse(circle.retains(0.05))
        self.assertTrue(circle.antipodal())
        self.assertFalse(Omega2D([0.0, 1.0], 0.2).antipodal())
        self.assertEqual(circle.arcs, [(0.0, 0.2), (math.pi, 0.2)])

    def test_interfering_arcs(self):
        with self.assertRaises(RegionError):
            Omega2D([0.0, 0.3], 0.2)

        with self.assertRaises(RegionError):
            Omega2D([0.0, math.pi], 0.0)


class TestConvexRegion(BaseDynamicsTest):
    """Test for rho * Q_inf and its invariance."""
    SEED = 2024

    def setUp(self):
        super(TestConvexRegion, self).setUp()
        self.square = geometry.preset('square')
        self.omega = omega.build_omega_2d(self.square)

    def test_boundary(self):
        region = omega.build_q_infinity(self.omega, 2.0)
        self.assertEqual(len(region.boundary), 32)
        self.assertTrue(region.check_convex())

        lines = region.to_text().splitlines()
        self.assertEqual(len(lines), 32)
        self.assertEqual(sum(1 for line in lines if line.startswith('arc ')), 8)
        self.assertAlmostEqual(region.scale, 2.0 / math.cos(math.pi / 24))

    def test_membership(self):
        region = omega.build_q_infinity(self.omega, 2.0)
        angles = np.linspace(0, 2 * math.pi, 50, endpoint=False)
        disc = 2.0 * np.column_stack([np.cos(angles), np.sin(angles)])
        self.assertTrue(np.all(region.contains_many(disc)))

        self.assertLessEqual(np.max(np.abs(region.slack(region.corners()))), 1e-9)
        self.assertLessEqual(np.max(np.abs(region.slack(region.boundary_points(200)))), 1e-9)
        self.assertTrue(np.all(region.contains_many(region.random_points(self.rng, 200))))
        self.assertFalse(region.contains(2.02 * np.array([1.0, 0.0])))
        self.assertTrue(region.contains((0.0, 0.0)))

    def test_full_circle(self):
        region = ConvexRegion2D(Omega2D([]), 1.5)
        self.assertEqual(len(region.boundary), 1)
        self.assertTrue(region.to_text().startswith('arc 0.0 0.0 1.5 0.0 '))
        self.assertAllClose(region.radius([0.0, 1.0]), [1.5, 1.5])

        with self.assertRaises(RegionError):
            ConvexRegion2D(Omega2D([]), 0.0)

    def test_find_rho(self):
        rho, region, verdicts = omega.find_rho([self.square], self.omega, boundary_samples=300, gamma_samples=8,
                                               rng_factory=lambda: np.random.default_rng(self.seed))
        self.assertGreaterEqual(rho, self.square.diameter())
        self.assertEqual(region.rho, rho)
        self.assertEqual(len(verdicts), 1)
        self.assertVerdictPassed(verdicts[0])
        self.assertEqual(verdicts[0].to_dict()['rho'], rho)

    def test_shared_region(self):
        polytopes = [self.square, geometry.preset('triangle')]
        region, verdicts = omega.shared_region(polytopes, boundary_samples=300, gamma_samples=8)
        self.assertEqual(len(verdicts), 2)
        for verdict in verdicts:
            self.assertVerdictPassed(verdict)

        # Verified again at the scale found
        _, again = omega.shared_region(polytopes, rho=region.rho, boundary_samples=300, gamma_samples=8)
        self.assertTrue(all(verdict.passed for verdict in again))
        self.assertEqual(again[0].rho, region.rho)

    def test_membership_scales_with_rho(self):
        """x lies in rho * Q_inf exactly when x / rho lies in Q_inf."""
        unit = ConvexRegion2D(self.omega, 1.0)
        points = self.rng.uniform(-4, 4, size=(5000, 2))
        for rho in (0.5, 2.0, 3.7):
            region = ConvexRegion2D(self.omega, rho)
            self.assertEqual(region.contains_many(points).tolist(), unit.contains_many(points / rho).tolist())
            self.assertAllClose(region.slack(points), rho * unit.slack(points / rho), atol=1e-12)
            self.assertAlmostEqual(region.scale, rho * unit.scale)

    def test_critical_points_of_a_bisector_clipping_a_notch(self):
        """A bisector missing the circle of radius rho still crosses the region near a notch corner."""
        region = ConvexRegion2D(Omega2D([0.0, math.pi], 0.6), 1.0)
        direction = np.array([math.cos(0.45), math.sin(0.45)])
        polytope = geometry.Polytope([(0.0, 0.0), 2.04 * direction, (-5.0, 0.0)])

        # The foot of the bisector x . direction = 1.02 lies outside the region
        self.assertFalse(region.contains(1.02 * direction))

        points = region.critical_points(polytope)
        on_line = points[np.abs(points.dot(direction) - 1.02) <= 1e-9]
        self.assertEqual(len(on_line), 2)
        self.assertGreater(np.linalg.norm(on_line[0] - on_line[1]), 1e-3)
        self.assertLessEqual(np.max(np.abs(region.slack(on_line))), 1e-9)
