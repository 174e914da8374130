import unittest

import numpy as np

from convex_dynamics import utils
from convex_dynamics import dynamics
from convex_dynamics.config import Config


class BaseDynamicsTest(unittest.TestCase):
    """Basic dynamics test.

    Provide a seeded random generator per test and assertions for the
    boundedness and invariance properties.

    When subclassing, you can set these attributes:

    * SEED: Override the configured seed of the test's random generator.
    * STRICT: Force strict mode on for the test (it follows the configuration otherwise).
    """
    # Override to pin the seed of the test's random generator.
    SEED = None

    # Override to force strict mode on.
    STRICT = False

    def setUp(self):
        """Set up the configuration and the random generator of the test."""
        if getattr(self, 'config', None) is None:
            self.config = Config()

        self.seed = self.config.seed if self.SEED is None else self.SEED
        self.strict = self.STRICT or self.config.strict
        self.rng = utils.make_rng(self.seed)

    def assertAllClose(self, actual, expected, atol=1e-9, rtol=0.0, msg=None):
        actual = np.asarray(actual, dtype=float)
        expected = np.asarray(expected, dtype=float)
        if actual.shape != expected.shape or not np.allclose(actual, expected, atol=atol, rtol=rtol):
            self.fail(msg or "Arrays differ (atol=%g, rtol=%g):\n%r\n%r" % (atol, rtol, actual, expected))

    def assertPlateau(self, trace, burn_in, split, tolerance=1e-9, norm='l2'):
        """Assert sup ||eps|| over [burn_in, split) equals the sup over [burn_in, end) within tolerance."""
        early = dynamics.sup_error(trace, burn_in, split, norm=norm)
        late = dynamics.sup_error(trace, burn_in, norm=norm)
        self.assertLessEqual(late - early, tolerance,
                             "Error keeps growing after step %d: %.12g then %.12g" % (split, early, late))

    def assertVerdictPassed(self, verdict):
        self.assertTrue(verdict.passed, "Invariance check failed: %r" % (verdict.to_dict(),))

    def assertVerdictFailed(self, verdict, witness=True):
        """Assert the check failed, with a witness point unless witness is False."""
        self.assertFalse(verdict.passed, "Invariance check unexpectedly passed: %r" % (verdict.to_dict(),))
        if witness:
            self.assertIsNotNone(verdict.witness, "Failed check without a witness: %r" % (verdict.to_dict(),))
