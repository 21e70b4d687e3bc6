"""
Sampled-data loop simulation.

Fixed-step RK4 on the extended field (zeta, eps), event detection for
triggering crossings, the brute-force worst-case oracle over disturbance
realizations, and the closed-loop runner used by every scheduler.
"""

import logging
import math
from dataclasses import dataclass, field
from functools import partial
from typing import Any, Callable, Dict, List, Optional, Sequence

import numpy as np

from .config import EVENT_HORIZON, EVENT_TOLERANCE
from .exceptions import ContractViolation, CoverageError, DivergenceError, PreconditionError
from .models import DisturbanceBox, PlantModel, TriggerSpec, assemble_extended_field

logger = logging.getLogger(__name__)


class DisturbanceSignal:
    """A realization t -> d(t) in Delta. Signals may read the current plant state."""

    name = "signal"

    def value(self, t: float, zeta: np.ndarray) -> np.ndarray:
        raise NotImplementedError


class PiecewiseConstantSignal(DisturbanceSignal):
    """Constant value per interval [grid[k], grid[k+1]); the last value holds forever.

    Times before grid[0] use the first value.
    """

    name = "piecewise"

    def __init__(self, grid: Sequence[float], values, box: Optional[DisturbanceBox] = None):
        self.grid = np.asarray(grid, dtype=float).reshape(-1)
        self.values = np.asarray(values, dtype=float)
        if self.values.ndim == 1:
            self.values = self.values.reshape(self.grid.size, -1)
        if self.grid.size == 0 or self.values.shape[0] != self.grid.size:
            raise ContractViolation("piecewise signal needs one value row per grid time")
        if np.any(np.diff(self.grid) <= 0):
            raise ContractViolation("piecewise signal grid must be strictly increasing")
        if box is not None and not all(box.contains(v) for v in self.values):
            raise ContractViolation("piecewise signal leaves the disturbance box")

    @classmethod
    def constant(cls, value, box: Optional[DisturbanceBox] = None) -> "PiecewiseConstantSignal":
        return cls([0.0], [np.asarray(value, dtype=float).reshape(-1)], box)

    def value(self, t: float, zeta: np.ndarray = None) -> np.ndarray:
        idx = int(np.searchsorted(self.grid, t, side="right")) - 1
        return self.values[max(idx, 0)]

    def rescaled(self, factor: float) -> "PiecewiseConstantSignal":
        """The signal t -> d(factor * t)."""
        if not factor > 0:
            raise ContractViolation(f"time rescaling factor must be positive, got {factor}")
        return PiecewiseConstantSignal(self.grid / factor, self.values)


class ClosedFormSignal(DisturbanceSignal):
    """d(t, zeta) given by a function; ``fn`` must stay inside the disturbance box."""

    def __init__(self, fn: Callable[[float, np.ndarray], np.ndarray], name: str = "closed_form"):
        self.fn = fn
        self.name = name

    def value(self, t: float, zeta: np.ndarray) -> np.ndarray:
        return np.asarray(self.fn(t, zeta), dtype=float)


def _benchmark_value(amplitude: float, t: float, zeta: np.ndarray) -> np.ndarray:
    return np.array([amplitude * math.sin(2.0 * math.pi * t), math.sin(zeta[0]), math.sin(zeta[1])])


def benchmark_disturbance(amplitude: float = 4.0) -> ClosedFormSignal:
    """d1 = amplitude sin(2 pi t), d2 = sin(zeta1), d3 = sin(zeta2)."""
    return ClosedFormSignal(partial(_benchmark_value, amplitude), name="benchmark")


def random_piecewise_signal(box: DisturbanceBox, horizon: float, n_switches: int,
                            rng: np.random.Generator, vertex_prob: float = 0.5) -> PiecewiseConstantSignal:
    """n_switches uniform switching times on (0, horizon), vertex-biased values."""
    grid = np.linspace(0.0, horizon, n_switches + 2)[:-1]
    return PiecewiseConstantSignal(grid, box.sample(rng, grid.size, vertex_prob))


def uniform_ball(rng: np.random.Generator, count: int, dim: int, radius: float) -> np.ndarray:
    """Points uniformly distributed in the closed ball of the given radius."""
    g = rng.standard_normal((count, dim))
    g /= np.linalg.norm(g, axis=1, keepdims=True)
    return g * (radius * rng.random(count) ** (1.0 / dim))[:, None]


@dataclass
class Trajectory:
    """Time-stamped extended states and trigger values.

    Times are spaced by h within a segment; a shortened step closes each
    segment and a sampling instant appears twice (before and after the reset).
    """

    h: float
    times: np.ndarray
    states: np.ndarray
    phi: np.ndarray

    def __post_init__(self):
        if not (len(self.times) == len(self.states) == len(self.phi)):
            raise ContractViolation("trajectory arrays have inconsistent lengths")

    @property
    def final_state(self) -> np.ndarray:
        return self.states[-1]


@dataclass
class SimResult:
    """Outcome of one closed-loop run."""

    scheme: str
    trajectory: Optional[Trajectory]
    sampling_times: np.ndarray
    dwell_times: np.ndarray
    max_phi: float
    aborted: bool = False
    metadata: Dict[str, Any] = field(default_factory=dict)

    @property
    def n_samplings(self) -> int:
        return int(self.sampling_times.size)

    @property
    def min_dwell(self) -> float:
        return float(self.dwell_times.min()) if self.dwell_times.size else math.inf


@dataclass
class _Segment:
    times: List[float]
    states: List[np.ndarray]
    phis: List[float]
    final_state: np.ndarray
    max_phi: float
    event: Optional[float] = None


def _rk4_step(plant: PlantModel, signal: DisturbanceSignal, t: float, xi: np.ndarray, dt: float) -> np.ndarray:
    n = plant.n

    def rate(s, y):
        return assemble_extended_field(plant, y, signal.value(s, y[:n]))

    k1 = rate(t, xi)
    k2 = rate(t + 0.5 * dt, xi + 0.5 * dt * k1)
    k3 = rate(t + 0.5 * dt, xi + 0.5 * dt * k2)
    k4 = rate(t + dt, xi + dt * k3)
    return xi + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)


def _march(plant: PlantModel, trigger: Optional[TriggerSpec], signal: DisturbanceSignal, xi0: np.ndarray,
           t0: float, h: float, duration: float, tol: Optional[float] = None, record: bool = True) -> _Segment:
    """Integrate from t0 for `duration` seconds; with `tol`, stop at the first phi >= 0."""

    def phi(y):
        return float(trigger.value(y)) if trigger is not None else math.nan

    xi = np.array(xi0, dtype=float)
    first = phi(xi)
    seg = _Segment([t0], [xi.copy()], [first], xi, first)
    elapsed = 0.0
    end_slack = 1e-12 * max(1.0, duration)
    while elapsed < duration - end_slack:
        dt = min(h, duration - elapsed)
        nxt = _rk4_step(plant, signal, t0 + elapsed, xi, dt)
        if not np.all(np.isfinite(nxt)):
            raise DivergenceError(t0 + elapsed + dt)
        val = phi(nxt)
        if tol is not None and val >= 0:
            lo, hi, hit, hit_val = 0.0, dt, nxt, val
            while hi - lo > tol:
                mid = 0.5 * (lo + hi)
                cand = _rk4_step(plant, signal, t0 + elapsed, xi, mid)
                cand_val = phi(cand)
                if cand_val >= 0:
                    hi, hit, hit_val = mid, cand, cand_val
                else:
                    lo = mid
            elapsed += hi
            xi, val = hit, hit_val
            seg.event = elapsed
        else:
            xi = nxt
            elapsed += dt
        seg.max_phi = max(seg.max_phi, val)
        if record or seg.event is not None:
            seg.times.append(t0 + elapsed)
            seg.states.append(xi.copy())
            seg.phis.append(val)
        if seg.event is not None:
            break
    seg.final_state = xi
    return seg


def integrate_held(plant: PlantModel, xi0, signal: DisturbanceSignal, h: float, T: float,
                   trigger: Optional[TriggerSpec] = None, t0: float = 0.0) -> Trajectory:
    """RK4 on the extended field without sampling resets."""
    if not h > 0 or not T >= h:
        raise ContractViolation(f"integrate_held requires h > 0 and T >= h, got h={h}, T={T}")
    xi0 = np.asarray(xi0, dtype=float)
    if xi0.shape != (2 * plant.n,):
        raise ContractViolation(f"expected xi0 with {2 * plant.n} components, got shape {xi0.shape}")
    seg = _march(plant, trigger, signal, xi0, t0, h, T)
    return Trajectory(h, np.asarray(seg.times), np.vstack(seg.states), np.asarray(seg.phis))


def _fresh_sample(plant: PlantModel, x0) -> np.ndarray:
    x0 = np.asarray(x0, dtype=float).reshape(-1)
    if x0.size != plant.n:
        raise ContractViolation(f"expected a state with {plant.n} components, got {x0.size}")
    return np.concatenate([x0, np.zeros(plant.n)])


def etc_intersample_time(plant: PlantModel, trigger: TriggerSpec, x0, signal: DisturbanceSignal,
                         h: float, tol: float = EVENT_TOLERANCE, t_max: float = EVENT_HORIZON,
                         t0: float = 0.0) -> float:
    """Time to the first phi >= 0 crossing from a fresh sample at x0; inf past t_max."""
    xi0 = _fresh_sample(plant, x0)
    phi0 = float(trigger.value(xi0))
    if phi0 >= 0:
        raise PreconditionError(f"phi((x0, 0)) = {phi0:.6g} >= 0 at x0={np.asarray(x0).tolist()}")
    seg = _march(plant, trigger, signal, xi0, t0, h, t_max, tol=tol, record=False)
    return seg.event if seg.event is not None else math.inf


def di_intersample_oracle(plant: PlantModel, trigger: TriggerSpec, x0, box: Optional[DisturbanceBox] = None,
                          n_realizations: int = 200, n_switches: int = 8, h: float = 1e-4,
                          tol: float = EVENT_TOLERANCE, seed: int = 0, vertex_prob: float = 0.5,
                          t_max: float = EVENT_HORIZON) -> float:
    """Smallest inter-sampling time over random piecewise-constant realizations.

    An upper bound on the worst case over all admissible disturbances. The
    k-th realization depends only on (seed, k), so the value is non-increasing
    in n_realizations.
    """
    box = box or plant.box
    center = PiecewiseConstantSignal.constant(box.center)
    tau_center = etc_intersample_time(plant, trigger, x0, center, h, tol, t_max)
    horizon = 2.0 * tau_center if math.isfinite(tau_center) else t_max

    rng = np.random.default_rng(seed)
    best = math.inf
    for _ in range(n_realizations):
        signal = random_piecewise_signal(box, horizon, n_switches, rng, vertex_prob)
        best = min(best, etc_intersample_time(plant, trigger, x0, signal, h, tol, t_max))
    logger.debug("DI oracle at x0=%s: %.6g over %d realizations", np.asarray(x0).tolist(), best, n_realizations)
    return best


def closed_loop_run(plant: PlantModel, trigger: TriggerSpec, scheduler, x0, signal: DisturbanceSignal,
                    T: float, h: float, tol: float = EVENT_TOLERANCE, record: bool = True) -> SimResult:
    """Sample, hold and integrate until T under the given scheduler.

    STC schedulers provide ``dwell(x)``; an event-triggered scheduler
    (``event_triggered = True``) ends each segment at the detected crossing.
    A coverage error aborts the run and is reported in the result.
    """
    xi = _fresh_sample(plant, x0)
    n = plant.n
    event_triggered = bool(getattr(scheduler, "event_triggered", False))
    tol = getattr(scheduler, "tol", tol)

    t = 0.0
    samplings: List[float] = []
    dwells: List[float] = []
    times: List[float] = []
    states: List[np.ndarray] = []
    phis: List[float] = []
    max_phi = -math.inf
    aborted, metadata = False, {}

    while t < T:
        xi = np.concatenate([xi[:n], np.zeros(n)])
        samplings.append(t)
        if event_triggered:
            seg = _march(plant, trigger, signal, xi, t, h, T - t, tol=tol, record=record)
            t_next = t + seg.event if seg.event is not None else T
            if seg.event is not None:
                dwells.append(seg.event)
        else:
            try:
                dwell = float(scheduler.dwell(xi[:n]))
            except CoverageError as e:
                aborted = True
                metadata.update(abort_reason=str(e), abort_which=e.which, abort_time=t)
                logger.warning("run aborted at t=%.6g: %s", t, e)
                max_phi = max(max_phi, float(trigger.value(xi)))
                if record:
                    times.append(t)
                    states.append(xi.copy())
                    phis.append(float(trigger.value(xi)))
                break
            if not (dwell > 0 and math.isfinite(dwell)):
                raise ContractViolation(f"scheduler returned a non-positive dwell {dwell} at t={t}")
            dwells.append(dwell)
            seg = _march(plant, trigger, signal, xi, t, h, min(dwell, T - t), record=record)
            t_next = t + dwell
        max_phi = max(max_phi, seg.max_phi)
        if record:
            times.extend(seg.times)
            states.extend(seg.states)
            phis.extend(seg.phis)
        xi = seg.final_state
        t = t_next

    trajectory = None
    if record and times:
        trajectory = Trajectory(h, np.asarray(times), np.vstack(states), np.asarray(phis))
    return SimResult(
        scheme=getattr(scheduler, "kind", type(scheduler).__name__),
        trajectory=trajectory,
        sampling_times=np.asarray(samplings),
        dwell_times=np.asarray(dwells),
        max_phi=max_phi,
        aborted=aborted,
        metadata=metadata,
    )
