"""
Brute-force oracles for cross-checking the closed-form machinery.

These are slow and deliberately independent of the production code paths:
the comparison bound is integrated or exponentiated numerically, roots are
found by bisection and sets are checked by rejection sampling.

They ship with the package because the verify command runs them; the unit
tests import them from here as well.
"""

import logging
import math
from dataclasses import dataclass
from typing import Callable, Dict, List, Optional, Sequence

import numpy as np
from scipy.linalg import expm
from scipy.optimize import bisect

from .config import EVENT_HORIZON, EVENT_TOLERANCE
from .exceptions import ConfigurationError, PreconditionError
from .isochron import IsochronEngine, in_cone
from .models import DisturbanceBox, PlantModel, TriggerSpec, homogenize_trigger
from .setsynth import WorkingSets
from .simulate import PiecewiseConstantSignal, etc_intersample_time, random_piecewise_signal

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class OracleBudget:
    """Sample counts and tolerances for the oracles."""

    psi_h: float = 1e-4
    root_tol: float = 1e-13
    reject_samples: int = 100000
    di_levels: Sequence[int] = (1, 10, 100, 200)
    di_switches: int = 8
    di_h: float = 1e-4
    di_tol: float = EVENT_TOLERANCE

    def __post_init__(self):
        for name in ("psi_h", "root_tol", "di_h", "di_tol"):
            if not getattr(self, name) > 0:
                raise ConfigurationError(f"oracle budget {name} must be positive")
        if self.reject_samples < 1 or self.di_switches < 0:
            raise ConfigurationError("oracle sample counts must be positive")
        if not self.di_levels or any(k < 1 for k in self.di_levels):
            raise ConfigurationError("oracle nesting levels must be positive")


def psi_numeric(phi0: float, delta0: float, delta1: float, t: float, h: float = 1e-4) -> float:
    """RK4 on psi' = delta0 psi + delta1 from psi(0) = phi0."""
    if not h > 0:
        raise ConfigurationError(f"step must be positive, got {h}")
    steps = max(1, int(math.ceil(t / h))) if t > 0 else 0
    dt = t / steps if steps else 0.0
    y = float(phi0)
    for _ in range(steps):
        k1 = delta0 * y + delta1
        k2 = delta0 * (y + 0.5 * dt * k1) + delta1
        k3 = delta0 * (y + 0.5 * dt * k2) + delta1
        k4 = delta0 * (y + dt * k3) + delta1
        y += dt / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
    return y


def mu_matrix(engine: IsochronEngine, x, w: float, t: float) -> float:
    """mu through the 2x2 comparison system [[delta0, 1], [0, 0]] and its exponential."""
    x = np.asarray(x, dtype=float)
    rho = math.sqrt(float(x @ x) + w * w)
    z = np.concatenate([engine.r * x / rho, np.zeros(x.size)])
    phi0 = float(homogenize_trigger(engine.trigger, z, engine.r * w / rho))
    A = np.array([[engine.delta0, 1.0], [0.0, 0.0]])
    y = np.array([phi0, engine.delta1])
    s = (rho / engine.r) ** engine.alpha * t
    return (rho / engine.r) ** (engine.theta + 1.0) * float((expm(A * s) @ y)[0])


def mu_root_bisect(engine: IsochronEngine, x, w: float, t_hi: Optional[float] = None,
                   tol: float = 1e-13) -> float:
    """Zero of t -> mu((x, w), t) by bisection."""
    if mu_matrix(engine, x, w, 0.0) >= 0:
        raise PreconditionError("mu is non-negative at t = 0")
    if t_hi is None:
        t_hi = 1e-6
        while mu_matrix(engine, x, w, t_hi) <= 0:
            t_hi *= 2.0
            if t_hi > 1e12:
                raise PreconditionError("mu has no zero below 1e12 s")
    return bisect(lambda t: mu_matrix(engine, x, w, t), 0.0, t_hi, xtol=tol, rtol=4 * np.finfo(float).eps,
                  maxiter=400)


def volume_fraction(predicate: Callable[[np.ndarray], np.ndarray], lo, hi, n: int, seed: int) -> Dict[str, float]:
    """Monte-Carlo fraction of the box [lo, hi] where `predicate` holds."""
    lo, hi = np.asarray(lo, dtype=float), np.asarray(hi, dtype=float)
    rng = np.random.default_rng(seed)
    pts = lo + rng.random((n, lo.size)) * (hi - lo)
    hits = int(np.count_nonzero(predicate(pts)))
    return {"hits": hits, "samples": n, "fraction": hits / n}


def phi_box_containment(trigger: TriggerSpec, sets: WorkingSets, n: int, seed: int,
                        phi_factor: float = 1.0) -> Dict[str, float]:
    """Rejection-sample the exact trigger set and count how much of it falls in the Phi box.

    Points (x0, x, w) come from Z x (Phi inflated by phi_factor) x W; a hit
    is phi~((x, x0 - x), w) <= 0.
    """
    rng = np.random.default_rng(seed)
    wide = sets.phi.inflated(phi_factor)
    n_dim = sets.Z.dim
    x0 = sets.Z.sample(rng, n)
    x = wide.sample(rng, n)
    w = sets.W.sample(rng, n)[:, 0]
    hit = homogenize_trigger(trigger, np.concatenate([x, x0 - x], axis=1), w) <= 0
    inside = sets.phi.contains(x[hit])
    hits = int(np.count_nonzero(hit))
    return {
        "hits": hits,
        "contained": int(np.count_nonzero(inside)),
        "fraction_contained": float(np.mean(inside)) if hits else 1.0,
        "samples": n,
        "dim": n_dim,
    }


def b1_agreement(engine: IsochronEngine, n: int, seed: int, radius_factor: float = 2.0) -> Dict[str, float]:
    """Compare |x|^2 <= (r^2 - w_lower^2) / w_lower^2 with the cone test at w = 1."""
    rng = np.random.default_rng(seed)
    bound = math.sqrt(engine.b1_radius2)
    dirs = rng.standard_normal((n, engine.n))
    dirs /= np.linalg.norm(dirs, axis=1, keepdims=True)
    x = dirs * (radius_factor * bound * rng.random(n))[:, None]
    formula = np.sum(x * x, axis=1) <= engine.b1_radius2
    direct = np.asarray(in_cone(engine, x, np.ones(n)))
    agree = int(np.count_nonzero(formula == direct))
    return {"agree": agree, "samples": n, "fraction": agree / n}


def di_worst_case_refine(plant: PlantModel, trigger: TriggerSpec, x0, box: Optional[DisturbanceBox] = None,
                         budget: OracleBudget = OracleBudget(), seed: int = 0,
                         t_max: float = EVENT_HORIZON) -> List[float]:
    """Running minimum of the inter-sampling time over nested realization families.

    Entry k is the minimum over the first budget.di_levels[k] realizations, so
    the list is non-increasing.
    """
    box = box or plant.box
    levels = sorted(budget.di_levels)
    rng = np.random.default_rng(seed)
    horizon = 2.0 * etc_intersample_time(
        plant, trigger, x0, PiecewiseConstantSignal.constant(box.center), budget.di_h, budget.di_tol, t_max
    )
    if not math.isfinite(horizon):
        horizon = t_max
    best, out = math.inf, []
    for k in range(1, levels[-1] + 1):
        signal = random_piecewise_signal(box, horizon, budget.di_switches, rng)
        best = min(best, etc_intersample_time(plant, trigger, x0, signal, budget.di_h, budget.di_tol, t_max))
        if k in levels:
            out.append(best)
    return out