"""
Inner approximations of isochronous manifolds and the region partition.

For a point p = (x, w) with rho = |p|, the bound
    mu(p, t) = (rho / r)^(theta+1) * psi(phi~(r p / rho), (rho / r)^alpha t)
dominates the homogenized trigger along every trajectory from p inside the
cone C, and its unique zero tau_down(p) lower-bounds the inter-sampling time.
Regions are the bands between consecutive zero-level sets of mu for a
geometric time grid.
"""

import logging
import math
from dataclasses import dataclass, field
from typing import Optional, Tuple

import numpy as np

from .exceptions import (
    ConfigurationError,
    CoverageError,
    DomainError,
    PreconditionError,
    SynthesisInconsistencyError,
)
from .models import TriggerSpec, homogenize_trigger
from .simulate import uniform_ball

logger = logging.getLogger(__name__)

LINEAR_LIMIT = 1e-12


def _out(value):
    value = np.asarray(value, dtype=float)
    return float(value) if value.ndim == 0 else value


def psi(phi0, delta0, delta1, t):
    """Solution of psi' = delta0 psi + delta1, psi(0) = phi0, at time t >= 0."""
    phi0, delta0, delta1, t = (np.asarray(v, dtype=float) for v in (phi0, delta0, delta1, t))
    a = delta0 * t
    linear = np.abs(a) < LINEAR_LIMIT
    safe_delta0 = np.where(linear, 1.0, delta0)
    grown = np.exp(a) * phi0 + np.expm1(a) / safe_delta0 * delta1
    return _out(np.where(linear, phi0 + delta1 * t, grown))


@dataclass(frozen=True)
class IsochronEngine:
    """Closed-form mu and tau_down for fixed comparison coefficients."""

    delta0: float
    delta1: float
    r: float
    alpha: float
    theta: float
    trigger: TriggerSpec
    w_lower: float
    z_inradius: Optional[float] = None

    def __post_init__(self):
        if not self.delta0 >= 0 or not self.delta1 > 0:
            raise ConfigurationError(f"need delta0 >= 0 and delta1 > 0, got ({self.delta0}, {self.delta1})")
        if not self.w_lower > 0 or not self.r > self.w_lower:
            raise ConfigurationError(f"need r > w_lower > 0, got r={self.r}, w_lower={self.w_lower}")
        if self.z_inradius is not None and math.sqrt(self.r ** 2 - self.w_lower ** 2) > self.z_inradius * (1 + 1e-12):
            raise ConfigurationError(f"D_r with r={self.r} does not fit inside Z")

    @property
    def n(self) -> int:
        return self.trigger.n

    @property
    def b1_radius2(self) -> float:
        return (self.r ** 2 - self.w_lower ** 2) / self.w_lower ** 2

    def _lift(self, x, w):
        x = np.asarray(x, dtype=float)
        w = np.asarray(w, dtype=float)
        if x.shape[-1] != self.n:
            raise DomainError(f"expected states with {self.n} components, got {x.shape[-1]}")
        if np.any(w <= 0):
            raise DomainError("homogenizing coordinate must be positive")
        rho = np.sqrt(np.sum(x * x, axis=-1) + w * w)
        return x, w, rho

    def projection_value(self, x, w) -> Tuple[np.ndarray, np.ndarray]:
        """phi~ at the D_r projection (r x / rho, 0, r w / rho), and rho."""
        x, w, rho = self._lift(x, w)
        scale = self.r / rho
        z = np.concatenate([x * scale[..., None], np.zeros(x.shape)], axis=-1)
        return homogenize_trigger(self.trigger, z, w * scale), rho


def mu(engine: IsochronEngine, x, w, t):
    """The bound mu((x, w), t)."""
    phi0, rho = engine.projection_value(x, w)
    ratio = rho / engine.r
    s = ratio ** engine.alpha * np.asarray(t, dtype=float)
    return _out(ratio ** (engine.theta + 1.0) * psi(phi0, engine.delta0, engine.delta1, s))


def tau_down(engine: IsochronEngine, x, w):
    """Unique zero of mu((x, w), .) in closed form."""
    phi0, rho = engine.projection_value(x, w)
    if np.any(phi0 >= 0):
        raise PreconditionError("trigger is non-negative at a D_r projection")
    slope = engine.delta0 * phi0 + engine.delta1
    if np.any(slope <= 0):
        raise SynthesisInconsistencyError(
            f"delta0 * phi0 + delta1 = {float(np.min(slope)):.6g} <= 0 at a D_r projection"
        )
    if engine.delta0 == 0:
        s_star = -phi0 / engine.delta1
    else:
        s_star = -np.log1p(engine.delta0 * phi0 / engine.delta1) / engine.delta0
    return _out(s_star * (engine.r / rho) ** engine.alpha)


def in_cone(engine: IsochronEngine, x, w):
    """|x|^2 + w^2 <= (w / w_lower)^2 r^2."""
    x, w, rho = engine._lift(x, w)
    inside = rho ** 2 <= (w / engine.w_lower) ** 2 * engine.r ** 2
    return bool(inside) if np.ndim(inside) == 0 else inside


@dataclass(frozen=True)
class TimeGrid:
    """tau_i = tau1 * ratio^(i-1), i = 1..q."""

    tau1: float
    ratio: float
    q: int
    times: Tuple[float, ...] = field(init=False, repr=False)

    def __post_init__(self):
        object.__setattr__(self, "times", tuple((self.tau1 * self.ratio ** np.arange(self.q)).tolist()))

    @property
    def tau_q(self) -> float:
        return self.times[-1]

    def as_array(self) -> np.ndarray:
        return np.asarray(self.times)


def build_time_grid(tau1: float, ratio: float, q: int) -> TimeGrid:
    if not (isinstance(tau1, (int, float)) and tau1 > 0 and math.isfinite(tau1)):
        raise ConfigurationError(f"tau1 must be a positive number, got {tau1!r}")
    if not (isinstance(ratio, (int, float)) and ratio > 1 and math.isfinite(ratio)):
        raise ConfigurationError(f"grid ratio must be > 1, got {ratio!r}")
    if not isinstance(q, (int, np.integer)) or isinstance(q, bool) or q < 1:
        raise ConfigurationError(f"q must be an integer >= 1, got {q!r}")
    return TimeGrid(float(tau1), float(ratio), int(q))


def auto_time_grid(engine: IsochronEngine, radius: float, ratio: float = 1.01, n_dirs: int = 4096,
                   seed: int = 0) -> TimeGrid:
    """tau1 covers the sphere of `radius` on the w = 1 plane; tau_q is tau_down at (0, 1)."""
    rng = np.random.default_rng(seed)
    dirs = rng.standard_normal((n_dirs, engine.n))
    dirs /= np.linalg.norm(dirs, axis=1, keepdims=True)
    dirs = np.vstack([dirs, np.eye(engine.n), -np.eye(engine.n)])
    tau1 = float(np.min(tau_down(engine, radius * dirs, np.ones(len(dirs))))) * (1.0 - 1e-9)
    tau_q = float(tau_down(engine, np.zeros(engine.n), 1.0))
    q = 1 if tau_q <= tau1 else int(math.floor(math.log(tau_q / tau1) / math.log(ratio))) + 1
    logger.info("auto grid: tau1=%.6g, tau_q=%.6g, q=%d", tau1, tau_q, q)
    return build_time_grid(tau1, ratio, q)


@dataclass(frozen=True)
class RegionPartition:
    """Regions R_i = {tau_i <= tau_down((x, 1)) < tau_(i+1)} inside the cone."""

    engine: IsochronEngine
    grid: TimeGrid

    @property
    def b1_radius2(self) -> float:
        return self.engine.b1_radius2

    def covered(self, X) -> np.ndarray:
        """Vectorized membership of B = B1 n B2 on the w = 1 plane."""
        X = np.atleast_2d(np.asarray(X, dtype=float))
        ones = np.ones(len(X))
        cone = np.atleast_1d(in_cone(self.engine, X, ones))
        return cone & (np.atleast_1d(tau_down(self.engine, X, ones)) >= self.grid.tau1)


def region_index(partition: RegionPartition, x) -> int:
    """1-based index of the region containing (x, 1); ties go to the lower index."""
    x = np.asarray(x, dtype=float).reshape(-1)
    if not in_cone(partition.engine, x, 1.0):
        raise CoverageError("B1", x.tolist(), f"state {x.tolist()} lies outside the cone")
    tau = tau_down(partition.engine, x, 1.0)
    if tau < partition.grid.tau1:
        raise CoverageError("B2", x.tolist(), f"state {x.tolist()} has tau_down={tau:.6g} < tau1")
    return int(np.searchsorted(partition.grid.as_array(), tau, side="right"))


def region_dwell(partition: RegionPartition, x) -> float:
    return partition.grid.times[region_index(partition, x) - 1]


@dataclass(frozen=True)
class CoverageReport:
    b1_radius2: float
    ball_radius: float
    ball_in_b1: bool
    b2_fraction: float
    b_fraction: float
    n_samples: int

    def to_dict(self):
        return {
            "b1_radius2": self.b1_radius2,
            "b1_radius": math.sqrt(self.b1_radius2),
            "ball_radius": self.ball_radius,
            "ball_in_b1": self.ball_in_b1,
            "b2_fraction": self.b2_fraction,
            "b_fraction": self.b_fraction,
            "n_samples": self.n_samples,
        }


def coverage_report(partition: RegionPartition, ball_radius: float = 2.0, n: int = 10000,
                    seed: int = 0) -> CoverageReport:
    """B1 radius^2 and Monte-Carlo fractions of a ball covered by B2 and B."""
    engine = partition.engine
    X = uniform_ball(np.random.default_rng(seed), n, engine.n, ball_radius)
    ones = np.ones(n)
    b1 = np.atleast_1d(in_cone(engine, X, ones))
    b2 = np.atleast_1d(tau_down(engine, X, ones)) >= partition.grid.tau1
    return CoverageReport(
        b1_radius2=engine.b1_radius2,
        ball_radius=ball_radius,
        ball_in_b1=ball_radius ** 2 <= engine.b1_radius2,
        b2_fraction=float(np.mean(b2)),
        b_fraction=float(np.mean(b1 & b2)),
        n_samples=n,
    )
