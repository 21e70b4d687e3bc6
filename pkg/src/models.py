"""
Plant dynamics, triggering functions and the homogenization operators.

Every field and trigger evaluates batched inputs: the last array axis holds
the components, all leading axes are broadcast. Models are immutable after
construction and safe to share across worker processes.
"""

import itertools
import logging
from dataclasses import dataclass, field, replace
from functools import partial
from typing import Any, Callable, Dict, Mapping, Optional, Tuple

import numpy as np

from .config import CONTINUATION_W, FD_STEP
from .exceptions import ConfigurationError, ContractViolation, DomainError

logger = logging.getLogger(__name__)

FieldFn = Callable[[np.ndarray, np.ndarray, np.ndarray], np.ndarray]
ControllerFn = Callable[[np.ndarray], np.ndarray]
TriggerFn = Callable[[np.ndarray], np.ndarray]


@dataclass(frozen=True)
class DisturbanceBox:
    """Axis-aligned disturbance set Delta = [lo_1, hi_1] x ... x [lo_m, hi_m]."""

    lo: Tuple[float, ...]
    hi: Tuple[float, ...]

    def __post_init__(self):
        lo, hi = tuple(float(v) for v in self.lo), tuple(float(v) for v in self.hi)
        if len(lo) != len(hi):
            raise ConfigurationError("disturbance box bounds have different lengths")
        if any(l > h for l, h in zip(lo, hi)):
            raise ConfigurationError(f"empty disturbance box: lo={lo}, hi={hi}")
        if not all(np.isfinite(lo + hi)):
            raise ConfigurationError("disturbance box must be bounded")
        object.__setattr__(self, "lo", lo)
        object.__setattr__(self, "hi", hi)

    @property
    def dim(self) -> int:
        return len(self.lo)

    @property
    def center(self) -> np.ndarray:
        return 0.5 * (np.asarray(self.lo) + np.asarray(self.hi))

    def vertices(self) -> np.ndarray:
        """All 2^m corners (duplicates collapse for degenerate intervals)."""
        if self.dim == 0:
            return np.zeros((1, 0))
        corners = {tuple(c) for c in itertools.product(*zip(self.lo, self.hi))}
        return np.array(sorted(corners), dtype=float).reshape(-1, self.dim)

    def contains(self, d: np.ndarray, tol: float = 1e-12) -> bool:
        d = np.asarray(d, dtype=float)
        return bool(np.all(d >= np.asarray(self.lo) - tol) and np.all(d <= np.asarray(self.hi) + tol))

    def sample(self, rng: np.random.Generator, count: int, vertex_prob: float = 0.5) -> np.ndarray:
        """Vertex-biased samples: a corner with probability vertex_prob, uniform otherwise."""
        lo, hi = np.asarray(self.lo), np.asarray(self.hi)
        uniform = lo + rng.random((count, self.dim)) * (hi - lo)
        corners = np.where(rng.integers(0, 2, size=(count, self.dim)) == 1, hi, lo)
        pick = rng.random(count) < vertex_prob
        return np.where(pick[:, None], corners, uniform)


@dataclass(frozen=True)
class HomPoint:
    """A point (x, w) of the homogenized space with w > 0."""

    x: np.ndarray
    w: float

    def __post_init__(self):
        if not self.w > 0:
            raise DomainError(f"homogenizing coordinate must be positive, got w={self.w}")
        object.__setattr__(self, "x", np.asarray(self.x, dtype=float))

    @property
    def norm(self) -> float:
        return float(np.sqrt(np.dot(self.x, self.x) + self.w ** 2))

    def scaled(self, lam: float) -> "HomPoint":
        return HomPoint(lam * self.x, lam * self.w)


@dataclass(frozen=True)
class PlantModel:
    """Perturbed plant zeta' = f(zeta, u, d) under the held feedback u = controller(zeta + eps)."""

    name: str
    n: int
    m_u: int
    m_d: int
    field: FieldFn
    controller: ControllerFn
    alpha: float
    box: DisturbanceBox
    params: Mapping[str, Any] = field(default_factory=dict)

    def __post_init__(self):
        if self.n < 1 or self.m_u < 0 or self.m_d < 0:
            raise ConfigurationError(f"invalid plant dimensions n={self.n}, m_u={self.m_u}, m_d={self.m_d}")
        if not self.alpha > 0:
            raise ConfigurationError(f"homogeneity degree alpha must be > 0, got {self.alpha}")
        if self.box.dim != self.m_d:
            raise ConfigurationError(f"disturbance box has dimension {self.box.dim}, plant expects {self.m_d}")

    def extended_field(self, xi: np.ndarray, d: np.ndarray) -> np.ndarray:
        return assemble_extended_field(self, xi, d)

    def at_level(self, w: float) -> "PlantModel":
        """The homogenized loop at a fixed level w, itself a plant on R^{2n}."""
        if not w > 0:
            raise DomainError(f"homogenizing coordinate must be positive, got w={w}")
        return replace(
            self,
            name=f"{self.name}@w={w:.6g}",
            field=partial(_level_field, self.field, float(w), self.alpha),
            controller=partial(_level_controller, self.controller, float(w)),
        )


def _level_field(base: FieldFn, w: float, alpha: float, zeta, u, d):
    return w ** (alpha + 1.0) * base(zeta / w, u, d)


def _level_controller(base: ControllerFn, w: float, zeta_held):
    return base(zeta_held / w)


def _fd_gradient(phi: TriggerFn, xi: np.ndarray, step: float = FD_STEP) -> np.ndarray:
    xi = np.asarray(xi, dtype=float)
    grad = np.empty_like(xi)
    for j in range(xi.shape[-1]):
        bump = np.zeros(xi.shape[-1])
        bump[j] = step
        grad[..., j] = (phi(xi + bump) - phi(xi - bump)) / (2.0 * step)
    return grad


@dataclass(frozen=True)
class TriggerSpec:
    """Triggering function phi(xi) on R^{2n}, its gradient and homogenized form.

    ``homogenized`` (optional) is the exact phi~(xi, w) valid for all w >= 0,
    including the continuation at w = 0. Without it phi~ is formed from phi.
    """

    name: str
    n: int
    theta: float
    phi: TriggerFn
    gradient: Optional[TriggerFn] = None
    homogenized: Optional[Callable[[np.ndarray, np.ndarray], np.ndarray]] = None
    params: Mapping[str, Any] = field(default_factory=dict)

    def __post_init__(self):
        if not self.theta > 0:
            raise ConfigurationError(f"trigger degree theta must be > 0, got {self.theta}")

    def value(self, xi: np.ndarray) -> np.ndarray:
        return self.phi(np.asarray(xi, dtype=float))

    def grad(self, xi: np.ndarray) -> np.ndarray:
        xi = np.asarray(xi, dtype=float)
        if self.gradient is not None:
            return self.gradient(xi)
        return _fd_gradient(self.phi, xi)

    @property
    def has_continuation(self) -> bool:
        return self.homogenized is not None

    def at_level(self, w: float) -> "TriggerSpec":
        """phi~(., w) at a fixed level w, itself a trigger on R^{2n}."""
        if not w > 0:
            raise DomainError(f"homogenizing coordinate must be positive, got w={w}")
        return TriggerSpec(
            name=f"{self.name}@w={w:.6g}",
            n=self.n,
            theta=self.theta,
            phi=partial(_level_phi, self, float(w)),
            gradient=partial(_level_gradient, self, float(w)),
        )


def _level_phi(trigger: TriggerSpec, w: float, xi):
    return homogenize_trigger(trigger, xi, w)


def _level_gradient(trigger: TriggerSpec, w: float, xi):
    return homogenized_gradient(trigger, xi, w)


def _split(plant: PlantModel, xi: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    xi = np.asarray(xi, dtype=float)
    if xi.shape[-1] != 2 * plant.n:
        raise ContractViolation(f"{plant.name}: expected xi with {2 * plant.n} components, got {xi.shape[-1]}")
    return xi[..., : plant.n], xi[..., plant.n:]


def assemble_extended_field(plant: PlantModel, xi: np.ndarray, d: np.ndarray) -> np.ndarray:
    """f_e(xi, d) = (f(zeta, u, d), -f(zeta, u, d)) with u = controller(zeta + eps)."""
    zeta, eps = _split(plant, xi)
    d = np.asarray(d, dtype=float)
    if d.shape[-1] != plant.m_d:
        raise ContractViolation(f"{plant.name}: expected d with {plant.m_d} components, got {d.shape[-1]}")
    u = plant.controller(zeta + eps)
    rate = plant.field(zeta, u, d)
    return np.concatenate([rate, -rate], axis=-1)


def homogenize_field(plant: PlantModel, xi: np.ndarray, w, d: np.ndarray) -> np.ndarray:
    """(w^(alpha+1) f_e(xi / w, d), 0) on R^{2n+1}."""
    w = np.asarray(w, dtype=float)
    if np.any(w <= 0):
        raise DomainError("homogenized field requires w > 0")
    wc = w[..., None]
    rate = wc ** (plant.alpha + 1.0) * assemble_extended_field(plant, np.asarray(xi, dtype=float) / wc, d)
    return np.concatenate([rate, np.zeros(rate.shape[:-1] + (1,))], axis=-1)


def homogenize_trigger(trigger: TriggerSpec, xi: np.ndarray, w) -> np.ndarray:
    """phi~(xi, w) = w^(theta+1) phi(xi / w); w = 0 only through an exact continuation."""
    xi = np.asarray(xi, dtype=float)
    w = np.asarray(w, dtype=float)
    if trigger.homogenized is not None:
        if np.any(w < 0):
            raise DomainError("homogenized trigger requires w >= 0")
        return trigger.homogenized(xi, w)
    if np.any(w <= 0):
        raise DomainError(f"{trigger.name}: no analytic continuation, w must be > 0")
    return w ** (trigger.theta + 1.0) * trigger.phi(xi / w[..., None])


def homogenize_trigger_limit(trigger: TriggerSpec, xi: np.ndarray) -> Tuple[np.ndarray, bool]:
    """phi~(xi, 0): exact when the trigger provides a continuation, else the w -> 0+ limit (flagged)."""
    xi = np.asarray(xi, dtype=float)
    if trigger.has_continuation:
        return trigger.homogenized(xi, np.zeros(xi.shape[:-1])), False
    logger.warning("%s: evaluating phi~ at w=0 via w=%g (no exact continuation)", trigger.name, CONTINUATION_W)
    return homogenize_trigger(trigger, xi, np.full(xi.shape[:-1], CONTINUATION_W)), True


def homogenized_gradient(trigger: TriggerSpec, xi: np.ndarray, w) -> np.ndarray:
    """Gradient of phi~ with respect to xi: w^theta grad phi(xi / w)."""
    w = np.asarray(w, dtype=float)
    if np.any(w <= 0):
        raise DomainError("homogenized gradient requires w > 0")
    wc = w[..., None]
    return wc ** trigger.theta * trigger.grad(np.asarray(xi, dtype=float) / wc)


# Built-in plants -----------------------------------------------------------


def _backstepping_field(g1_state, g1_dist, g2, zeta, u, d):
    z1, z2 = zeta[..., 0], zeta[..., 1]
    dz1 = z2 + g1_state * d[..., 1] * z1 + g1_dist * d[..., 0]
    dz2 = u[..., 0] + g2 * d[..., 2] * z2 ** 2
    return np.stack([dz1, dz2], axis=-1)


def _backstepping_controller(quadratic_gain, linear_gain, virtual_gain, zeta_held):
    s = zeta_held[..., 1] + virtual_gain * zeta_held[..., 0]
    return (-(quadratic_gain * np.abs(s) + linear_gain) * s)[..., None]


def _disturbed_linear_field(pole, dist_gain, zeta, u, d):
    return pole * zeta + u + dist_gain * d


def _linear_feedback(gain, zeta_held):
    return -gain * zeta_held


def _drift_field(velocity, zeta, u, d):
    return np.broadcast_to(velocity, zeta.shape).copy()


def _decay_field(rate, zeta, u, d):
    return -rate * zeta


def _zero_field(zeta, u, d):
    return np.zeros_like(zeta)


def _no_input(m_u, zeta_held):
    return np.zeros(zeta_held.shape[:-1] + (m_u,))


def perturbed_backstepping(quadratic_gain: float = 7.02, linear_gain: float = 25.515,
                           virtual_gain: float = 2.1, g1_state: float = 0.1, g1_dist: float = 0.1,
                           g2: float = 0.2, dist_bound: float = 4.0, alpha: float = 1.0) -> PlantModel:
    """Second-order uncertain plant with backstepping feedback.

    zeta1' = zeta2 + g1_state d2 zeta1 + g1_dist d1
    zeta2' = u + g2 d3 zeta2^2
    u = -(quadratic_gain |s| + linear_gain) s,  s = zeta2_held + virtual_gain zeta1_held
    d in [-dist_bound, dist_bound] x [-1, 1]^2
    """
    return PlantModel(
        name="perturbed_backstepping",
        n=2,
        m_u=1,
        m_d=3,
        field=partial(_backstepping_field, g1_state, g1_dist, g2),
        controller=partial(_backstepping_controller, quadratic_gain, linear_gain, virtual_gain),
        alpha=alpha,
        box=DisturbanceBox((-dist_bound, -1.0, -1.0), (dist_bound, 1.0, 1.0)),
        params=dict(quadratic_gain=quadratic_gain, linear_gain=linear_gain, virtual_gain=virtual_gain,
                    g1_state=g1_state, g1_dist=g1_dist, g2=g2, dist_bound=dist_bound),
    )


def disturbed_linear(n: int = 2, pole: float = -1.0, gain: float = 1.0, dist_gain: float = 0.5,
                     alpha: float = 1.0) -> PlantModel:
    """zeta' = pole zeta - gain zeta_held + dist_gain d, d in [-1, 1]^n."""
    return PlantModel(
        name="disturbed_linear",
        n=n,
        m_u=n,
        m_d=n,
        field=partial(_disturbed_linear_field, pole, dist_gain),
        controller=partial(_linear_feedback, gain),
        alpha=alpha,
        box=DisturbanceBox((-1.0,) * n, (1.0,) * n),
        params=dict(n=n, pole=pole, gain=gain, dist_gain=dist_gain),
    )


def constant_drift(velocity=(1.0,), alpha: float = 1.0) -> PlantModel:
    """zeta' = velocity (no input, no disturbance)."""
    velocity = np.asarray(velocity, dtype=float).reshape(-1)
    return PlantModel(
        name="constant_drift",
        n=velocity.size,
        m_u=0,
        m_d=0,
        field=partial(_drift_field, velocity),
        controller=partial(_no_input, 0),
        alpha=alpha,
        box=DisturbanceBox((), ()),
        params=dict(velocity=velocity.tolist()),
    )


def linear_decay(n: int = 1, rate: float = 1.0, alpha: float = 1.0) -> PlantModel:
    """zeta' = -rate zeta."""
    return PlantModel(
        name="linear_decay",
        n=n,
        m_u=0,
        m_d=0,
        field=partial(_decay_field, rate),
        controller=partial(_no_input, 0),
        alpha=alpha,
        box=DisturbanceBox((), ()),
        params=dict(n=n, rate=rate),
    )


def zero_field(n: int = 2, m_d: int = 0, alpha: float = 1.0) -> PlantModel:
    """zeta' = 0."""
    return PlantModel(
        name="zero_field",
        n=n,
        m_u=0,
        m_d=m_d,
        field=_zero_field,
        controller=partial(_no_input, 0),
        alpha=alpha,
        box=DisturbanceBox((-1.0,) * m_d, (1.0,) * m_d),
        params=dict(n=n, m_d=m_d),
    )


PLANTS: Dict[str, Callable[..., PlantModel]] = {
    "perturbed_backstepping": perturbed_backstepping,
    "disturbed_linear": disturbed_linear,
    "constant_drift": constant_drift,
    "linear_decay": linear_decay,
    "zero_field": zero_field,
}


def make_plant(name: str, params: Optional[Mapping[str, Any]] = None, alpha: float = 1.0) -> PlantModel:
    """Build a built-in plant by name."""
    if name not in PLANTS:
        raise ConfigurationError(f"unknown plant '{name}', expected one of {sorted(PLANTS)}")
    try:
        return PLANTS[name](alpha=alpha, **dict(params or {}))
    except TypeError as e:
        raise ConfigurationError(f"invalid parameters for plant '{name}': {e}") from e
