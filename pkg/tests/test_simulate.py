"""
Unit tests for the sampled-data loop simulator.
"""

import math
import unittest

import numpy as np

from src.exceptions import ContractViolation, DivergenceError, PreconditionError
from src.isochron import IsochronEngine, RegionPartition, build_time_grid
from src.models import DisturbanceBox, TriggerSpec, constant_drift, disturbed_linear, linear_decay, zero_field
from src.schedulers import BaselineSTCPolicy, ETCPolicy, RegionSTCPolicy, baseline_stc_dwell, make_trigger
from src.simulate import (
    PiecewiseConstantSignal,
    benchmark_disturbance,
    closed_loop_run,
    di_intersample_oracle,
    etc_intersample_time,
    integrate_held,
    random_piecewise_signal,
    uniform_ball,
)

NO_DISTURBANCE = PiecewiseConstantSignal.constant([])


class TestIntegrator(unittest.TestCase):
    """Test fixed-step RK4 without resets."""

    def test_zero_field_is_constant(self):
        """Test the state does not move under a zero field."""
        xi0 = np.array([0.3, -0.2, 0.1, 0.0])
        traj = integrate_held(zero_field(), xi0, NO_DISTURBANCE, h=0.01, T=0.5)
        np.testing.assert_array_equal(traj.states, np.tile(xi0, (len(traj.times), 1)))

    def test_linear_decay(self):
        """Test zeta(1) = exp(-1) for zeta' = -zeta."""
        traj = integrate_held(linear_decay(), [1.0, 0.0], NO_DISTURBANCE, h=1e-3, T=1.0)
        self.assertAlmostEqual(traj.times[-1], 1.0, places=12)
        self.assertAlmostEqual(traj.final_state[0], math.exp(-1.0), delta=1e-8)
        self.assertAlmostEqual(traj.final_state[1], 1.0 - math.exp(-1.0), delta=1e-8)

    def test_fourth_order_convergence(self):
        """Test halving h divides the error by about 16."""
        errors = []
        for h in (0.1, 0.05):
            traj = integrate_held(linear_decay(), [1.0, 0.0], NO_DISTURBANCE, h=h, T=1.0)
            errors.append(abs(traj.final_state[0] - math.exp(-1.0)))
        self.assertTrue(14.0 < errors[0] / errors[1] < 18.0)

    def test_invalid_horizon(self):
        """Test T < h is rejected."""
        with self.assertRaises(ContractViolation):
            integrate_held(linear_decay(), [1.0, 0.0], NO_DISTURBANCE, h=0.1, T=0.05)

    def test_divergence(self):
        """Test a blow-up is reported with its time."""
        with self.assertRaises(DivergenceError) as ctx:
            integrate_held(linear_decay(rate=-1000.0), [1.0, 0.0], NO_DISTURBANCE, h=0.01, T=2.0)
        self.assertLessEqual(ctx.exception.time, 2.0)


class TestSignals(unittest.TestCase):
    """Test disturbance realizations."""

    def test_piecewise_lookup(self):
        """Test interval lookup and the held last value."""
        signal = PiecewiseConstantSignal([0.0, 1.0, 2.0], [[1.0], [2.0], [3.0]])
        self.assertEqual(signal.value(0.5)[0], 1.0)
        self.assertEqual(signal.value(1.0)[0], 2.0)
        self.assertEqual(signal.value(50.0)[0], 3.0)
        self.assertEqual(signal.rescaled(2.0).value(0.75)[0], 2.0)

    def test_piecewise_rejects_bad_input(self):
        """Test decreasing grids and out-of-box values are rejected."""
        with self.assertRaises(ContractViolation):
            PiecewiseConstantSignal([1.0, 0.0], [[0.0], [0.0]])
        with self.assertRaises(ContractViolation):
            PiecewiseConstantSignal([0.0], [[2.0]], DisturbanceBox((-1.0,), (1.0,)))

    def test_random_realization_in_box(self):
        """Test random realizations stay in the box."""
        box = DisturbanceBox((-4.0, -1.0, -1.0), (4.0, 1.0, 1.0))
        signal = random_piecewise_signal(box, 1.0, 8, np.random.default_rng(0))
        self.assertEqual(len(signal.grid), 9)
        self.assertTrue(all(box.contains(v) for v in signal.values))

    def test_benchmark_disturbance_in_box(self):
        """Test the benchmark disturbance respects its bounds."""
        box = DisturbanceBox((-4.0, -1.0, -1.0), (4.0, 1.0, 1.0))
        signal = benchmark_disturbance()
        for t in np.linspace(0.0, 2.0, 41):
            self.assertTrue(box.contains(signal.value(t, np.array([t * 10.0, -t]))))

    def test_uniform_ball(self):
        """Test ball samples respect the radius."""
        pts = uniform_ball(np.random.default_rng(1), 1000, 3, 2.0)
        self.assertEqual(pts.shape, (1000, 3))
        self.assertLessEqual(float(np.max(np.linalg.norm(pts, axis=1))), 2.0 + 1e-12)


class TestEventTimes(unittest.TestCase):
    """Test event-triggered inter-sampling times."""

    def setUp(self):
        self.plant = constant_drift([3.0, 4.0])
        self.trigger = make_trigger("lebesgue", {"eps_bar": 0.5}, n=2)

    def test_lebesgue_constant_drift(self):
        """Test |eps| = 5 t reaches 0.5 at t = 0.1."""
        tau = etc_intersample_time(self.plant, self.trigger, [0.0, 0.0], NO_DISTURBANCE, h=1e-3, tol=1e-9)
        self.assertAlmostEqual(tau, 0.1, delta=1e-6)

    def test_no_crossing(self):
        """Test a missed horizon returns infinity."""
        tau = etc_intersample_time(zero_field(), self.trigger, [1.0, 1.0], NO_DISTURBANCE, h=1e-3, t_max=0.01)
        self.assertEqual(tau, math.inf)

    def test_precondition(self):
        """Test a fresh sample with phi >= 0 is rejected."""
        ring = TriggerSpec(name="ring", n=2, theta=1.0, phi=lambda xi: np.sum(xi * xi, axis=-1) - 1.0)
        with self.assertRaises(PreconditionError):
            etc_intersample_time(self.plant, ring, [2.0, 0.0], NO_DISTURBANCE, h=1e-3)

    def test_realization_scaling(self):
        """Test tau at level 2 from 2x under d(2t) is half of tau at level 1."""
        plant = disturbed_linear()
        trigger = make_trigger("mixed", {"sigma": 0.01, "eps_bar": 0.5}, n=2)
        signal = PiecewiseConstantSignal([0.0, 0.1, 0.2], [[1.0, -1.0], [-1.0, 0.5], [0.2, 1.0]])
        x0 = np.array([0.5, 0.5])
        base = etc_intersample_time(plant.at_level(1.0), trigger.at_level(1.0), x0, signal, h=1e-4)
        scaled = etc_intersample_time(plant.at_level(2.0), trigger.at_level(2.0), 2.0 * x0,
                                      signal.rescaled(2.0), h=1e-4)
        self.assertTrue(math.isfinite(base))
        self.assertAlmostEqual(scaled / base, 0.5, delta=5e-4)


class TestWorstCaseOracle(unittest.TestCase):
    """Test the differential-inclusion oracle."""

    def setUp(self):
        self.plant = disturbed_linear()
        self.trigger = make_trigger("mixed", {"sigma": 0.01, "eps_bar": 0.5}, n=2)

    def test_degenerate_box(self):
        """Test a point box reproduces the constant-disturbance time."""
        box = DisturbanceBox((0.2, 0.2), (0.2, 0.2))
        oracle = di_intersample_oracle(self.plant, self.trigger, [0.5, -0.5], box, n_realizations=3, h=1e-3)
        direct = etc_intersample_time(self.plant, self.trigger, [0.5, -0.5],
                                      PiecewiseConstantSignal.constant([0.2, 0.2]), h=1e-3)
        self.assertAlmostEqual(oracle, direct, places=12)

    def test_more_realizations_never_increase(self):
        """Test nested realization families give a non-increasing minimum."""
        few = di_intersample_oracle(self.plant, self.trigger, [0.5, -0.5], n_realizations=2, h=1e-3, seed=4)
        many = di_intersample_oracle(self.plant, self.trigger, [0.5, -0.5], n_realizations=6, h=1e-3, seed=4)
        self.assertLessEqual(many, few)


class TestClosedLoop(unittest.TestCase):
    """Test the closed-loop runner under each scheduler."""

    def test_single_sampling_when_horizon_short(self):
        """Test T below the first dwell gives one sampling."""
        result = closed_loop_run(zero_field(), make_trigger("lebesgue", {"eps_bar": 1.0}, n=2),
                                 BaselineSTCPolicy(), [0.0, 0.0], NO_DISTURBANCE, T=0.005, h=1e-3)
        self.assertEqual(result.n_samplings, 1)

    def test_baseline_sampling_count(self):
        """Test constant baseline dwells on a frozen state."""
        result = closed_loop_run(zero_field(), make_trigger("lebesgue", {"eps_bar": 1.0}, n=2),
                                 BaselineSTCPolicy(), [0.0, 0.0], NO_DISTURBANCE, T=0.1, h=1e-3)
        self.assertEqual(result.n_samplings, 10)
        self.assertAlmostEqual(result.min_dwell, baseline_stc_dwell([0.0, 0.0]), places=15)
        self.assertEqual(result.scheme, "baseline-stc")

    def test_event_triggered_run(self):
        """Test event times every 0.1 s for |c| = 5 and eps_bar = 0.5."""
        trigger = make_trigger("lebesgue", {"eps_bar": 0.5}, n=2)
        result = closed_loop_run(constant_drift([3.0, 4.0]), trigger, ETCPolicy(1e-9), [0.0, 0.0],
                                 NO_DISTURBANCE, T=0.35, h=1e-3)
        self.assertEqual(result.n_samplings, 4)
        np.testing.assert_allclose(result.sampling_times, [0.0, 0.1, 0.2, 0.3], atol=1e-6)
        self.assertLessEqual(result.max_phi, 1e-6)

    def test_error_reset_at_samplings(self):
        """Test eps is zero right after every sampling instant."""
        plant = disturbed_linear()
        trigger = make_trigger("mixed", {"sigma": 0.01, "eps_bar": 0.5}, n=2)
        result = closed_loop_run(plant, trigger, BaselineSTCPolicy(), [0.5, -0.5],
                                 PiecewiseConstantSignal.constant([0.3, -0.3]), T=0.05, h=1e-3)
        traj = result.trajectory
        for t in result.sampling_times:
            rows = np.flatnonzero(traj.times == t)
            self.assertTrue(any(np.all(traj.states[i, 2:] == 0.0) for i in rows))

    def test_region_scheduler_abort(self):
        """Test a state outside the cone aborts the run with a flag."""
        trigger = make_trigger("lebesgue", {"eps_bar": 1.0}, n=2)
        engine = IsochronEngine(0.0, 1.0, 1.0, 1.0, 1.0, trigger, 0.5)
        partition = RegionPartition(engine, build_time_grid(0.25, 2.0, 3))
        result = closed_loop_run(zero_field(), trigger, RegionSTCPolicy(partition), [2.0, 0.0],
                                 NO_DISTURBANCE, T=1.0, h=1e-2)
        self.assertTrue(result.aborted)
        self.assertEqual(result.metadata["abort_which"], "B1")
        self.assertEqual(result.n_samplings, 1)

    def test_region_scheduler_dwell(self):
        """Test a frozen state inside the cone is sampled at its grid time."""
        trigger = make_trigger("lebesgue", {"eps_bar": 1.0}, n=2)
        engine = IsochronEngine(0.0, 1.0, 1.0, 1.0, 1.0, trigger, 0.5)
        partition = RegionPartition(engine, build_time_grid(0.25, 2.0, 3))
        result = closed_loop_run(zero_field(), trigger, RegionSTCPolicy(partition), [0.5, 0.0],
                                 NO_DISTURBANCE, T=1.2, h=1e-2)
        self.assertFalse(result.aborted)
        np.testing.assert_allclose(result.sampling_times, [0.0, 0.5, 1.0])

    def test_non_positive_dwell(self):
        """Test a scheduler returning a zero dwell is a contract violation."""

        class Stuck:
            kind = "stuck"

            def dwell(self, x):
                return 0.0

        with self.assertRaises(ContractViolation):
            closed_loop_run(zero_field(), make_trigger("lebesgue", {"eps_bar": 1.0}, n=2), Stuck(),
                            [0.0, 0.0], NO_DISTURBANCE, T=1.0, h=1e-2)


if __name__ == "__main__":
    unittest.main()
