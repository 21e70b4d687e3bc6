"""
Unit tests for the sampling policies and built-in triggers.
"""

import unittest

import numpy as np

from src.exceptions import ConfigurationError, ContractViolation
from src.isochron import IsochronEngine, RegionPartition, build_time_grid
from src.schedulers import (
    BaselineSTCPolicy,
    ETCPolicy,
    RegionSTCPolicy,
    baseline_stc_dwell,
    make_policy,
    make_trigger,
    region_stc_dwell,
)


class TestTriggers(unittest.TestCase):
    """Test the Lebesgue and mixed triggering functions."""

    def test_mixed_trigger_value(self):
        """Test the benchmark trigger at zeta = (1, 0), eps = 0."""
        trigger = make_trigger("mixed", {"sigma": 0.0049, "eps_bar": 4.0}, n=2)
        self.assertAlmostEqual(float(trigger.value(np.array([1.0, 0.0, 0.0, 0.0]))), -16.0049, places=12)

    def test_lebesgue_trigger_value(self):
        """Test the Lebesgue trigger is -eps_bar^2 at eps = 0."""
        trigger = make_trigger("lebesgue", {"eps_bar": 0.5}, n=1)
        self.assertAlmostEqual(float(trigger.value(np.array([3.0, 0.0]))), -0.25)
        self.assertAlmostEqual(float(trigger.value(np.array([3.0, 0.5]))), 0.0)

    def test_sigma_zero_is_lebesgue(self):
        """Test mixed with sigma = 0 matches the Lebesgue trigger."""
        mixed = make_trigger("mixed", {"sigma": 0.0, "eps_bar": 0.5}, n=2)
        lebesgue = make_trigger("lebesgue", {"eps_bar": 0.5}, n=2)
        xi = np.random.default_rng(0).uniform(-1, 1, (20, 4))
        np.testing.assert_array_equal(mixed.value(xi), lebesgue.value(xi))

    def test_analytic_gradient(self):
        """Test the gradient (-2 sigma zeta, 2 eps)."""
        trigger = make_trigger("mixed", {"sigma": 0.5, "eps_bar": 1.0}, n=1)
        np.testing.assert_allclose(trigger.grad(np.array([2.0, 3.0])), [-2.0, 6.0])

    def test_continuation_only_for_theta_one(self):
        """Test the exact continuation exists only for theta = 1."""
        self.assertTrue(make_trigger("lebesgue", {"eps_bar": 1.0}, n=1).has_continuation)
        self.assertFalse(make_trigger("lebesgue", {"eps_bar": 1.0}, n=1, theta=2.0).has_continuation)

    def test_invalid_parameters(self):
        """Test bad trigger parameters are configuration errors."""
        cases = [
            ("mixed", {"sigma": -0.1, "eps_bar": 1.0}),
            ("mixed", {"sigma": 0.1, "eps_bar": 0.0}),
            ("mixed", {"eps_bar": 1.0}),
            ("lebesgue", {"eps_bar": 1.0, "sigma": 0.1}),
            ("lebesgue", {"eps_bar": "big"}),
            ("relative", {"eps_bar": 1.0}),
        ]
        for kind, params in cases:
            with self.subTest(kind=kind, params=params):
                with self.assertRaises(ConfigurationError):
                    make_trigger(kind, params, n=2)


class TestPolicies(unittest.TestCase):
    """Test the three sampling policies."""

    def setUp(self):
        trigger = make_trigger("lebesgue", {"eps_bar": 1.0}, n=2)
        engine = IsochronEngine(delta0=0.0, delta1=1.0, r=1.0, alpha=1.0, theta=1.0,
                                trigger=trigger, w_lower=0.5)
        self.partition = RegionPartition(engine, build_time_grid(0.25, 2.0, 3))

    def test_baseline_dwell(self):
        """Test 1.54 / (28 (|x| + 4) + 29)."""
        self.assertAlmostEqual(baseline_stc_dwell([0.0, 0.0]), 1.54 / 141.0, places=15)
        self.assertAlmostEqual(baseline_stc_dwell([3.0, 4.0]), 1.54 / (28.0 * 9.0 + 29.0), places=15)
        self.assertLess(baseline_stc_dwell([30.0, 40.0]), baseline_stc_dwell([3.0, 4.0]))

    def test_region_dwell(self):
        """Test the region policy returns the grid time of the region."""
        self.assertEqual(region_stc_dwell(self.partition, [0.0, 0.0]), 1.0)
        self.assertEqual(region_stc_dwell(self.partition, [0.5, 0.0]), 0.5)
        self.assertEqual(RegionSTCPolicy(self.partition).dwell([1.0, 0.0]), 0.25)

    def test_make_policy(self):
        """Test the policy factory."""
        self.assertIsInstance(make_policy("region-stc", self.partition), RegionSTCPolicy)
        self.assertIsInstance(make_policy("baseline-stc"), BaselineSTCPolicy)
        etc = make_policy("etc", tol=1e-8)
        self.assertIsInstance(etc, ETCPolicy)
        self.assertTrue(etc.event_triggered)
        self.assertEqual(etc.tol, 1e-8)
        with self.assertRaises(ConfigurationError):
            make_policy("region-stc")
        with self.assertRaises(ConfigurationError):
            make_policy("periodic")

    def test_etc_has_no_dwell(self):
        """Test asking the event-triggered policy for a dwell is a contract violation."""
        with self.assertRaises(ContractViolation):
            ETCPolicy().dwell([0.0, 0.0])


if __name__ == "__main__":
    unittest.main()
