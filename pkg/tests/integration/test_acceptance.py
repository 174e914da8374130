"""Desk-scale acceptance runs of the dynamics, the regions and the classical models."""
import logging
from fractions import Fraction

import numpy as np

from convex_dynamics import omega
from convex_dynamics import regions
from convex_dynamics import halftone
from convex_dynamics import dynamics
from convex_dynamics import classical
from convex_dynamics import counterexample
from convex_dynamics import polytope as geometry
from convex_dynamics import utils
from convex_dynamics.base_test import BaseDynamicsTest
from convex_dynamics.stats import FieldStats

log = logging.getLogger(__name__)

SAMPLING = {'boundary_samples': 500, 'gamma_samples': 16}


class BoundednessTest(BaseDynamicsTest):
    """The cumulative error of the greedy algorithm stays bounded and averages converge."""
    STEPS = 200000
    POLYTOPES = ('interval', 'cube2', 'cube3', 'simplex2', 'simplex3', 'tristimulus')

    def test_orbits_plateau(self):
        for name in self.POLYTOPES:
            polytope = geometry.preset(name)
            trace = dynamics.run_orbit(polytope, dynamics.random_gammas(polytope, self.STEPS, self.rng), strict=self.strict)

            early = dynamics.sup_error(trace, self.STEPS // 10, self.STEPS // 2)
            log.info('Validating the error of %r plateaus at %.6g', polytope, early)
            self.assertPlateau(trace, self.STEPS // 10, self.STEPS // 2, tolerance=0.1 * early)

            ns = [10 ** power for power in range(2, 6)]
            sup = dynamics.sup_error(trace)
            for n, gap in zip(ns, dynamics.average_gaps(trace, ns)):
                self.assertLessEqual(gap, 2 * sup / n)

    def test_general_diffusion_plateaus(self):
        img = halftone.Raster(self.rng.random((512, 512)))
        for name in ('fs3', 'uniform12'):
            _, errors = halftone.halftone(img, geometry.interval(), name, strict=self.strict)
            field = FieldStats(errors)
            log.info('Validating the %s error field plateaus: %r', name, field.quarter_maxima)
            self.assertLessEqual(field.summary.max, 0.5 + 1e-9)
            self.assertTrue(field.plateaus(0.05), field.to_dict())


class ScalingTest(BaseDynamicsTest):
    """Local window errors grow at most linearly with the window size."""
    SIZES = [8, 16, 32, 64, 128]

    def assertLinearScaling(self, result):
        self.assertFalse(result.degenerate, result.to_dict())
        self.assertLessEqual(result.slope, 1.2, result.to_dict())
        self.assertTrue(result.excludes(2.0), result.to_dict())

    def test_constant_image(self):
        # A constant 1/2 gives only two positive window maxima under fs3 and no slope error, so 1/3 is used
        img = halftone.Raster(np.full((512, 512), 1 / 3.0))
        for scheme in ('simple', 'fs3'):
            result = halftone.scaling_experiment(img, geometry.interval(), scheme, self.SIZES, anchors=64, rng=self.rng)
            log.info('Scaling of %s diffusion: %r', scheme, result.to_dict())
            self.assertLinearScaling(result)

    def test_random_image(self):
        img = halftone.Raster(self.rng.random((256, 256)))
        result = halftone.scaling_experiment(img, geometry.interval(), 'fs3', self.SIZES, anchors=64, rng=self.rng)
        log.info('Scaling of fs3 diffusion of a random image: %r', result.to_dict())
        self.assertLinearScaling(result)


class IntervalRegionTest(BaseDynamicsTest):
    """The interval verdict flips exactly at half the interval width."""

    def test_random_intervals(self):
        for _ in range(20):
            low, width = self.rng.uniform(-10, 10), self.rng.uniform(0.01, 10)
            polytope = geometry.Polytope([[low], [low + width]])
            v0, v1 = sorted(polytope.vertices[:, 0])
            threshold = (Fraction(v1) - Fraction(v0)) / 2

            self.assertVerdictPassed(regions.interval_region(polytope, threshold)[1])
            self.assertVerdictFailed(regions.interval_region(polytope, threshold - Fraction(1, 10 ** 12))[1])


class PolygonRegionTest(BaseDynamicsTest):
    """The bisection finds the smallest invariant Q_t of convex polygons."""

    def random_hexagon(self):
        angles = np.arange(6) * np.pi / 3 + self.rng.uniform(-0.2, 0.2, size=6)
        return geometry.Polytope(np.column_stack([np.cos(angles), np.sin(angles)]), name='hexagon')

    def test_find_min_t(self):
        for polytope in (geometry.preset('square'), geometry.preset('polygon5'), self.random_hexagon()):
            result = regions.find_min_t(polytope, resolution=1e-3, seed=self.seed, **SAMPLING)
            log.info('Smallest invariant Q_t of %r: %r', polytope, result.to_dict())
            self.assertVerdictPassed(result.verdict)

            self.assertTrue(result.monotonic, result.to_dict())
            self.assertVerdictFailed(result.below)


class CounterexampleTest(BaseDynamicsTest):
    """No outward translation of the octahedral polytope's faces is invariant."""

    def test_sweep(self):
        shifts = utils.parse_range('0:2:0.05')
        result = counterexample.sweep(shifts, shifts)
        log.info('Failure modes over the sweep: %r', result.counts())
        self.assertEqual(len(result.checks), 1600)
        self.assertEqual(result.passing, [])


class QInfinityTest(BaseDynamicsTest):
    """rho * Q_inf is invariant for a large enough rho."""

    def test_single_polytopes(self):
        for name in ('square', 'triangle'):
            polytope = geometry.preset(name)
            region, verdicts = omega.shared_region([polytope], rng_factory=lambda: utils.make_rng(self.seed), **SAMPLING)
            self.assertLessEqual(region.rho, 100 * polytope.diameter())
            self.assertTrue(region.check_convex())
            self.assertVerdictPassed(verdicts[0])

    def test_shared_region(self):
        polytopes = [geometry.preset('square'), geometry.Polytope([(0, 0), (1, 0), (0.5, 0.8)], name='wedge')]
        region, verdicts = omega.shared_region(polytopes, rng_factory=lambda: utils.make_rng(self.seed), **SAMPLING)
        self.assertTrue(region.check_convex())
        for verdict in verdicts:
            self.assertVerdictPassed(verdict)


class ClassicalTest(BaseDynamicsTest):
    """Sturmian words, the absorbing interval and the pursuit."""

    def test_sturmian(self):
        self.assertEqual(classical.sturmian(1 / 3.0, 0.0, 9, strict=self.strict).to_string(), '001001001')

        n = 100000
        stats = classical.sturmian_stats(classical.sturmian(classical.GOLDEN, classical.GOLDEN, n), max_window=200)
        self.assertLessEqual(abs(stats.frequency - classical.GOLDEN), 2.0 / n)
        self.assertLessEqual(stats.balance_defect, 1)

    def test_absorbing_interval(self):
        for _ in range(100):
            gamma, x0 = self.rng.uniform(0.05, 0.95), self.rng.uniform(-1000, 1000)
            self.assertTrue(classical.absorbing_interval_check(gamma, [x0], horizon=200).passed)

    def test_absorption_into_the_square_region(self):
        square = geometry.preset('square')
        region = regions.polygon_region(square, 0.5)
        start = 1000 * np.array([np.cos(1.0), np.sin(1.0)])
        result = regions.absorption_test(region, square, 0.2, start, max_steps=10 ** 5, rng=self.rng)
        self.assertTrue(result.stayed)

    def test_pursuit(self):
        for name in ('interval', 'square'):
            polytope = geometry.preset(name)
            trace = classical.pursuit(polytope, dynamics.random_gammas(polytope, 10000, self.rng),
                                      polytope.vertices[0], polytope.vertices[-1], strict=self.strict)
            self.assertLess(trace.distances[-1], 0.05)
            self.assertLessEqual(trace.identity_residual(), 1e-9)
