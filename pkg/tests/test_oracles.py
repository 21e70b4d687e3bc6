"""
Unit tests for the brute-force cross-checks.
"""

import math
import unittest

import numpy as np

from src.exceptions import ConfigurationError
from src.isochron import IsochronEngine, in_cone, mu, psi, tau_down
from src.models import disturbed_linear
from src.oracles import (
    OracleBudget,
    b1_agreement,
    di_worst_case_refine,
    mu_matrix,
    mu_root_bisect,
    phi_box_containment,
    psi_numeric,
    volume_fraction,
)
from src.schedulers import make_trigger
from src.setsynth import build_sets, make_box


class TestComparisonOracles(unittest.TestCase):
    """Test numeric psi, matrix mu and the bisection root."""

    def setUp(self):
        trigger = make_trigger("mixed", {"sigma": 0.0049, "eps_bar": 4.0}, n=2)
        self.engine = IsochronEngine(0.0353, 0.344, 0.099, 1.0, 1.0, trigger, 1e-6)

    def test_psi_numeric(self):
        """Test RK4 psi against known values and the closed form."""
        self.assertAlmostEqual(psi_numeric(-1.0, 1.0, 2.0, math.log(2.0)), 0.0, delta=1e-11)
        self.assertEqual(psi_numeric(-3.0, 0.0, 0.0, 2.0), -3.0)
        self.assertAlmostEqual(psi_numeric(-16.0, 0.0353, 0.344, 1.0), psi(-16.0, 0.0353, 0.344, 1.0),
                               delta=1e-10)

    def test_mu_matrix_matches_closed_form(self):
        """Test the matrix-exponential mu against the closed form."""
        for x, t in (([0.0, 0.0], 0.01), ([1.0, -0.5], 0.02), ([-0.3, 0.2], 0.0)):
            self.assertAlmostEqual(mu_matrix(self.engine, np.array(x), 1.0, t), mu(self.engine, x, 1.0, t),
                                   delta=1e-9 * max(1.0, abs(mu(self.engine, x, 1.0, t))))

    def test_root_matches_tau_down(self):
        """Test bisection on mu reproduces the closed-form zero."""
        rng = np.random.default_rng(0)
        for x in rng.uniform(-2.0, 2.0, (25, 2)):
            w = float(rng.uniform(0.1, 2.0))
            if not in_cone(self.engine, x, w):
                continue
            closed = tau_down(self.engine, x, w)
            self.assertAlmostEqual(mu_root_bisect(self.engine, x, w, 2.0 * closed), closed,
                                   delta=1e-9 * (1.0 + closed))

    def test_root_without_bracket(self):
        """Test the bracket search finds the zero on its own."""
        closed = tau_down(self.engine, [0.5, 0.5], 1.0)
        self.assertAlmostEqual(mu_root_bisect(self.engine, [0.5, 0.5], 1.0), closed, delta=1e-9)

    def test_b1_agreement(self):
        """Test the B1 radius formula agrees with the cone test."""
        out = b1_agreement(self.engine, n=10000, seed=3)
        self.assertEqual(out["fraction"], 1.0)


class TestSetOracles(unittest.TestCase):
    """Test rejection-sampling oracles."""

    def test_empty_predicate(self):
        """Test an empty set has no hits."""
        out = volume_fraction(lambda p: np.zeros(len(p), dtype=bool), [0.0, 0.0], [1.0, 1.0], 500, seed=0)
        self.assertEqual(out["hits"], 0)
        full = volume_fraction(lambda p: np.ones(len(p), dtype=bool), [0.0], [1.0], 500, seed=0)
        self.assertEqual(full["fraction"], 1.0)

    def test_lebesgue_set_contained(self):
        """Test every sampled trigger-set point lies in the Phi box."""
        trigger = make_trigger("lebesgue", {"eps_bar": 0.5}, n=2)
        sets = build_sets(trigger, make_box([-1.0, -1.0], [1.0, 1.0]), make_box([0.1], [0.5]))
        out = phi_box_containment(trigger, sets, n=20000, seed=1)
        self.assertEqual(out["fraction_contained"], 1.0)
        self.assertEqual(out["contained"], out["hits"])


class TestWorstCaseRefinement(unittest.TestCase):
    """Test nested realization families."""

    def test_running_minimum_non_increasing(self):
        """Test more realizations never raise the minimum."""
        budget = OracleBudget(di_levels=(1, 3, 6), di_switches=4, di_h=1e-3)
        out = di_worst_case_refine(disturbed_linear(), make_trigger("mixed", {"sigma": 0.01, "eps_bar": 0.5}, n=2),
                                   [0.5, -0.5], budget=budget, seed=2)
        self.assertEqual(len(out), 3)
        self.assertTrue(all(b <= a for a, b in zip(out, out[1:])))

    def test_invalid_budget(self):
        """Test non-positive budgets are rejected."""
        with self.assertRaises(ConfigurationError):
            OracleBudget(psi_h=0.0)
        with self.assertRaises(ConfigurationError):
            OracleBudget(di_levels=())


if __name__ == "__main__":
    unittest.main()
