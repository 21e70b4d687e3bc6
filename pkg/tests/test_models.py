"""
Unit tests for the plant and trigger models.
"""

import unittest

import numpy as np

from src.exceptions import ConfigurationError, ContractViolation, DomainError
from src.models import (
    DisturbanceBox,
    HomPoint,
    TriggerSpec,
    disturbed_linear,
    homogenize_field,
    homogenize_trigger,
    homogenize_trigger_limit,
    homogenized_gradient,
    make_plant,
    perturbed_backstepping,
)
from src.schedulers import make_trigger


class TestExtendedField(unittest.TestCase):
    """Test the sampled-data loop in (zeta, eps) coordinates."""

    def setUp(self):
        self.plant = perturbed_backstepping()
        self.rng = np.random.default_rng(7)

    def test_first_row_with_disturbance(self):
        """Test zeta1' = zeta2 + 0.1 d2 zeta1 + 0.1 d1 at a worked point."""
        rate = self.plant.extended_field(np.array([1.0, 0.0, 0.0, 0.0]), np.array([4.0, 1.0, 0.0]))
        self.assertAlmostEqual(rate[0], 0.5, places=12)
        self.assertAlmostEqual(rate[2], -0.5, places=12)

    def test_controller_on_held_state(self):
        """Test zeta2' is the backstepping input at the held state."""
        zeta = np.array([0.3, -0.2])
        s = -0.2 + 2.1 * 0.3
        expected = -(7.02 * abs(s) + 25.515) * s
        rate = self.plant.extended_field(np.concatenate([zeta, np.zeros(2)]), np.zeros(3))
        self.assertAlmostEqual(rate[1], expected, places=10)

    def test_error_rate_is_opposite(self):
        """Test eps' = -zeta' at random points."""
        xi = self.rng.uniform(-1, 1, (50, 4))
        d = self.plant.box.sample(self.rng, 50)
        rate = self.plant.extended_field(xi, d)
        np.testing.assert_array_equal(rate[:, 2:], -rate[:, :2])

    def test_dimension_mismatch(self):
        """Test wrong input widths are contract violations."""
        with self.assertRaises(ContractViolation):
            self.plant.extended_field(np.zeros(3), np.zeros(3))
        with self.assertRaises(ContractViolation):
            self.plant.extended_field(np.zeros(4), np.zeros(2))


class TestHomogenizedField(unittest.TestCase):
    """Test the homogenized field and its scaling."""

    def setUp(self):
        self.plant = perturbed_backstepping()
        self.rng = np.random.default_rng(11)

    def test_unit_level_matches_extended_field(self):
        """Test f~(xi, 1, d) = (f_e(xi, d), 0)."""
        xi = self.rng.uniform(-1, 1, 4)
        d = np.array([1.0, -0.5, 0.25])
        out = homogenize_field(self.plant, xi, 1.0, d)
        np.testing.assert_allclose(out[:4], self.plant.extended_field(xi, d), rtol=1e-14)
        self.assertEqual(out[4], 0.0)

    def test_degree_alpha_plus_one(self):
        """Test f~(2 xi, 2 w, d) = 2^(alpha+1) f~(xi, w, d)."""
        xi = self.rng.uniform(-1, 1, (40, 4))
        w = self.rng.uniform(0.05, 1.0, 40)
        d = self.plant.box.sample(self.rng, 40)
        base = homogenize_field(self.plant, xi, w, d)
        scaled = homogenize_field(self.plant, 2.0 * xi, 2.0 * w, d)
        np.testing.assert_allclose(scaled, 4.0 * base, rtol=1e-10, atol=1e-12)

    def test_first_row_polynomial(self):
        """Test the first row equals w zeta2 + 0.1 d2 w zeta1 + 0.1 d1 w^2."""
        xi = self.rng.uniform(-1, 1, (20, 4))
        w = self.rng.uniform(0.1, 1.0, 20)
        d = self.plant.box.sample(self.rng, 20)
        row = homogenize_field(self.plant, xi, w, d)[:, 0]
        expected = w * xi[:, 1] + 0.1 * d[:, 1] * w * xi[:, 0] + 0.1 * d[:, 0] * w ** 2
        np.testing.assert_allclose(row, expected, rtol=1e-10, atol=1e-14)

    def test_non_positive_level(self):
        """Test w <= 0 is outside the homogenized domain."""
        with self.assertRaises(DomainError):
            homogenize_field(self.plant, np.zeros(4), 0.0, np.zeros(3))

    def test_fixed_level_plant(self):
        """Test at_level(w) reproduces the homogenized field."""
        w = 0.3
        level = self.plant.at_level(w)
        xi = self.rng.uniform(-1, 1, (10, 4))
        d = self.plant.box.sample(self.rng, 10)
        np.testing.assert_allclose(
            level.extended_field(xi, d), homogenize_field(self.plant, xi, np.full(10, w), d)[:, :4],
            rtol=1e-12, atol=1e-14,
        )
        with self.assertRaises(DomainError):
            self.plant.at_level(0.0)


class TestHomogenizedTrigger(unittest.TestCase):
    """Test the homogenized triggering function."""

    def setUp(self):
        self.trigger = make_trigger("mixed", {"sigma": 0.0049, "eps_bar": 4.0}, n=2)
        self.rng = np.random.default_rng(3)

    def test_continuation_matches_scaling(self):
        """Test the exact continuation equals w^2 phi(xi / w) for w > 0."""
        xi = self.rng.uniform(-1, 1, (30, 4))
        w = self.rng.uniform(0.1, 2.0, 30)
        scaled = w ** 2 * self.trigger.value(xi / w[:, None])
        np.testing.assert_allclose(homogenize_trigger(self.trigger, xi, w), scaled, rtol=1e-12)

    def test_zero_level_with_continuation(self):
        """Test w = 0 is allowed and not flagged with a continuation."""
        value, flagged = homogenize_trigger_limit(self.trigger, np.array([0.0, 0.0, 1.0, 0.0]))
        self.assertFalse(flagged)
        self.assertAlmostEqual(float(value), 1.0)

    def test_zero_level_without_continuation(self):
        """Test w = 0 needs a continuation and the limit path is flagged."""
        bare = TriggerSpec(name="bare", n=1, theta=1.0, phi=lambda xi: np.sum(xi * xi, axis=-1) - 1.0)
        with self.assertRaises(DomainError):
            homogenize_trigger(bare, np.array([1.0, 0.0]), 0.0)
        value, flagged = homogenize_trigger_limit(bare, np.array([1.0, 0.0]))
        self.assertTrue(flagged)
        self.assertAlmostEqual(float(value), 1.0, places=12)

    def test_negative_at_fresh_sample(self):
        """Test phi((x, 0)) < 0 for the built-in triggers."""
        for trigger in (self.trigger, make_trigger("lebesgue", {"eps_bar": 0.5}, n=2)):
            x = self.rng.uniform(-10, 10, (100, 2))
            self.assertTrue(np.all(trigger.value(np.concatenate([x, np.zeros_like(x)], axis=1)) < 0))

    def test_finite_difference_gradient(self):
        """Test the default gradient agrees with the analytic one."""
        bare = TriggerSpec(name="fd", n=2, theta=1.0, phi=self.trigger.phi)
        xi = self.rng.uniform(-2, 2, (100, 4))
        exact = self.trigger.grad(xi)
        approx = bare.grad(xi)
        err = np.linalg.norm(approx - exact, axis=1) / (1.0 + np.linalg.norm(exact, axis=1))
        self.assertLess(float(np.max(err)), 1e-5)

    def test_homogenized_gradient(self):
        """Test grad phi~ = w^theta grad phi(xi / w)."""
        xi = self.rng.uniform(-1, 1, 4)
        expected = 0.5 * self.trigger.grad(xi / 0.5)
        np.testing.assert_allclose(homogenized_gradient(self.trigger, xi, 0.5), expected)

    def test_fixed_level_trigger(self):
        """Test at_level(w) evaluates phi~ at that level."""
        xi = self.rng.uniform(-1, 1, (5, 4))
        np.testing.assert_allclose(
            self.trigger.at_level(0.7).value(xi), homogenize_trigger(self.trigger, xi, np.full(5, 0.7))
        )


class TestBoxesAndRegistry(unittest.TestCase):
    """Test disturbance boxes, homogenized points and the plant registry."""

    def test_box_vertices_and_samples(self):
        """Test corners and samples of the benchmark box."""
        box = perturbed_backstepping().box
        self.assertEqual(len(box.vertices()), 8)
        samples = box.sample(np.random.default_rng(0), 500)
        self.assertTrue(box.contains(samples))

    def test_degenerate_and_empty_boxes(self):
        """Test a point box collapses to one vertex and lo > hi is rejected."""
        self.assertEqual(len(DisturbanceBox((0.2, 0.2), (0.2, 0.2)).vertices()), 1)
        self.assertEqual(DisturbanceBox((), ()).vertices().shape, (1, 0))
        with self.assertRaises(ConfigurationError):
            DisturbanceBox((1.0,), (0.0,))

    def test_hom_point(self):
        """Test the homogeneous norm and the w > 0 requirement."""
        p = HomPoint(np.array([3.0]), 4.0)
        self.assertAlmostEqual(p.norm, 5.0)
        self.assertAlmostEqual(p.scaled(2.0).norm, 10.0)
        with self.assertRaises(DomainError):
            HomPoint(np.array([1.0]), 0.0)

    def test_make_plant(self):
        """Test registry lookup and parameter validation."""
        plant = make_plant("disturbed_linear", {"n": 3})
        self.assertEqual((plant.n, plant.m_d), (3, 3))
        self.assertEqual(make_plant("perturbed_backstepping").params["linear_gain"], 25.515)
        with self.assertRaises(ConfigurationError):
            make_plant("pendulum")
        with self.assertRaises(ConfigurationError):
            make_plant("disturbed_linear", {"poles": 1})

    def test_alpha_must_be_positive(self):
        """Test a non-positive homogeneity degree is rejected."""
        with self.assertRaises(ConfigurationError):
            disturbed_linear(alpha=0.0)


if __name__ == "__main__":
    unittest.main()
