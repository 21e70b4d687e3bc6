"""
Working sets and comparison-coefficient synthesis.

The sets are axis-aligned boxes: Z (states), W (homogenizing levels),
Phi (where the trigger can still be non-positive), E (measurement errors)
and Xi = Phi x E x W. The coefficients (delta0, delta1) bound the Lie
derivative of the homogenized trigger by an affine function of its value,
    L = grad phi~ . f~  <=  delta0 * phi~ + delta1   on Xi x Delta,
and are fitted by an exact two-variable LP over sampled rows, verified on a
dense independent sample and refitted with cutting planes on failure.

Rows come from one of three domains:
  reach  the slice of Xi visited between samplings from the spherical
         segment D_r: (x0 - e, e, w) with (x0, w) on D_r and phi~ <= 0,
         e inflated by (1 + inflation)
  held   (x, x0 - x, w) with x0 in Z and x in Phi
  box    all of Phi x E x W
"""

import itertools
import logging
import math
from dataclasses import dataclass, field, replace
from typing import Any, Dict, Optional, Tuple

import numpy as np
from joblib import Parallel, delayed
from tenacity import Retrying, retry_if_exception_type, stop_after_attempt

from .config import EPS_DELTA, INFLATION, REFIT_CUT_SIZE, SynthesisConfig
from .exceptions import (
    ConfigurationError,
    ContractViolation,
    DeltaVerificationError,
    UnboundedSetError,
)
from .models import (
    DisturbanceBox,
    PlantModel,
    TriggerSpec,
    homogenize_field,
    homogenize_trigger,
    homogenized_gradient,
)

logger = logging.getLogger(__name__)

GROWTH_CAP = 1e6
BISECTION_STEPS = 60
FACE_FRACTION = 0.2
BOUNDARY_LATTICE = 21
VERIFY_LATTICE = 3
VERIFY_CHUNKS = 16
SPHERE_LATTICE = 9
DELTA1_PAD = 0.02


@dataclass(frozen=True)
class BoxSet:
    """Product of closed intervals."""

    lo: Tuple[float, ...]
    hi: Tuple[float, ...]
    label: str = ""

    def __post_init__(self):
        lo, hi = tuple(float(v) for v in self.lo), tuple(float(v) for v in self.hi)
        if len(lo) != len(hi) or not lo:
            raise ConfigurationError(f"box {self.label}: bounds must have the same non-zero length")
        if any(l > h for l, h in zip(lo, hi)):
            raise ConfigurationError(f"box {self.label} is empty: lo={lo}, hi={hi}")
        object.__setattr__(self, "lo", lo)
        object.__setattr__(self, "hi", hi)

    @property
    def dim(self) -> int:
        return len(self.lo)

    @property
    def lo_arr(self) -> np.ndarray:
        return np.asarray(self.lo)

    @property
    def hi_arr(self) -> np.ndarray:
        return np.asarray(self.hi)

    @property
    def center(self) -> np.ndarray:
        return 0.5 * (self.lo_arr + self.hi_arr)

    @property
    def inradius(self) -> float:
        """Distance from the origin to the nearest face (<= 0 when 0 is not interior)."""
        return float(np.min(np.minimum(-self.lo_arr, self.hi_arr)))

    def contains(self, points: np.ndarray, tol: float = 0.0) -> np.ndarray:
        points = np.asarray(points, dtype=float)
        return np.all((points >= self.lo_arr - tol) & (points <= self.hi_arr + tol), axis=-1)

    def inflated(self, factor: float, label: Optional[str] = None) -> "BoxSet":
        """Half-widths scaled by (1 + factor) about the center."""
        half = 0.5 * (self.hi_arr - self.lo_arr) * (1.0 + factor)
        return BoxSet(tuple(self.center - half), tuple(self.center + half), label or self.label)

    def product(self, *others: "BoxSet", label: str = "") -> "BoxSet":
        boxes = (self,) + others
        return BoxSet(sum((b.lo for b in boxes), ()), sum((b.hi for b in boxes), ()), label)

    def lattice(self, per_axis: int) -> np.ndarray:
        axes = [np.linspace(l, h, per_axis) for l, h in zip(self.lo, self.hi)]
        return np.array(list(itertools.product(*axes)), dtype=float)

    def sample(self, rng: np.random.Generator, count: int, face_fraction: float = 0.0) -> np.ndarray:
        """Uniform samples; a `face_fraction` share is snapped to a random face."""
        pts = self.lo_arr + rng.random((count, self.dim)) * (self.hi_arr - self.lo_arr)
        on_face = rng.random(count) < face_fraction
        axis = rng.integers(0, self.dim, size=count)
        side = rng.integers(0, 2, size=count)
        rows = np.flatnonzero(on_face)
        pts[rows, axis[rows]] = np.where(side[rows] == 1, self.hi_arr[axis[rows]], self.lo_arr[axis[rows]])
        return pts

    def to_dict(self) -> Dict[str, Any]:
        return {"lo": list(self.lo), "hi": list(self.hi)}


@dataclass(frozen=True)
class WorkingSets:
    """Z, W, Phi, E and Xi = Phi x E x W, plus the un-inflated Phi box."""

    Z: BoxSet
    W: BoxSet
    phi: BoxSet
    error: BoxSet
    xi: BoxSet
    phi_raw: BoxSet
    inflation: float
    domain: str = "reach"
    radius: Optional[float] = None

    @property
    def w_lower(self) -> float:
        return self.W.lo[0]

    @property
    def w_upper(self) -> float:
        return self.W.hi[0]

    @property
    def reach_w_upper(self) -> float:
        """Largest level on D_r."""
        return min(self.w_upper, self.radius)


@dataclass
class ConstraintRows:
    """Sampled rows (phi~_i, L_i) with the points they came from."""

    phi: np.ndarray
    lie: np.ndarray
    z: np.ndarray
    w: np.ndarray
    d: np.ndarray

    def __len__(self) -> int:
        return int(self.phi.size)

    def take(self, idx) -> "ConstraintRows":
        return ConstraintRows(self.phi[idx], self.lie[idx], self.z[idx], self.w[idx], self.d[idx])

    def concat(self, other: "ConstraintRows") -> "ConstraintRows":
        return ConstraintRows(
            np.concatenate([self.phi, other.phi]),
            np.concatenate([self.lie, other.lie]),
            np.concatenate([self.z, other.z]),
            np.concatenate([self.w, other.w]),
            np.concatenate([self.d, other.d]),
        )


@dataclass(frozen=True)
class DeltaCoefficients:
    """Comparison coefficients and how they were obtained."""

    delta0: float
    delta1: float
    eps_delta: float
    margin: Optional[float] = None
    boundary_margin: Optional[float] = None
    objective: Optional[float] = None
    n_rows: int = 0
    n_boundary: int = 0
    n_verify: int = 0
    refits: int = 0
    degenerate_ties: int = 0
    source: str = "fit"

    def __post_init__(self):
        if not self.delta0 >= 0:
            raise ContractViolation(f"delta0 must be >= 0, got {self.delta0}")
        if not self.delta1 > 0:
            raise ContractViolation(f"delta1 must be > 0, got {self.delta1}")


@dataclass
class DeltaVerification:
    """Margin report of a dense verification pass."""

    min_margin: float
    boundary_margin: float
    max_lie: float
    n_points: int
    n_boundary: int
    worst_point: Dict[str, Any] = field(default_factory=dict)
    worst_rows: Optional[ConstraintRows] = None

    @property
    def passed(self) -> bool:
        return self.min_margin >= 0 and self.boundary_margin >= 0

    def to_dict(self) -> Dict[str, Any]:
        return {
            "min_margin": self.min_margin,
            "boundary_margin": self.boundary_margin,
            "max_lie": self.max_lie,
            "n_points": self.n_points,
            "n_boundary": self.n_boundary,
            "passed": self.passed,
            "worst_point": self.worst_point,
        }


def make_box(lo, hi, label: str = "") -> BoxSet:
    return BoxSet(tuple(lo), tuple(hi), label)


# Set construction -----------------------------------------------------------


def _ray_exits(trigger: TriggerSpec, x0: np.ndarray, w: np.ndarray, dirs: np.ndarray, start: float,
               cap: float) -> np.ndarray:
    """Largest s found with phi~((x0 + s d, -s d), w) <= 0 along each ray (outer bisection bound)."""
    lo = np.zeros(len(x0))
    hi = np.full(len(x0), start)

    def inside(s):
        x = x0 + s[:, None] * dirs
        return homogenize_trigger(trigger, np.concatenate([x, -s[:, None] * dirs], axis=1), w) <= 0

    mask = inside(hi)
    while np.any(mask):
        lo[mask] = hi[mask]
        hi[mask] *= 2.0
        if np.max(hi) > cap:
            raise UnboundedSetError(
                f"Phi ray search exceeded the growth cap {cap:g}: the trigger set is not bounded along some ray"
            )
        mask = inside(hi)
    for _ in range(BISECTION_STEPS):
        mid = 0.5 * (lo + hi)
        ok = inside(mid)
        lo = np.where(ok, mid, lo)
        hi = np.where(ok, hi, mid)
    return hi


def pick_radius(Z: BoxSet, W: BoxSet, safety: float = 0.99) -> float:
    """Radius r > w_lower of the spherical segment D_r with sqrt(r^2 - w_lower^2) <= inradius(Z)."""
    inradius = Z.inradius
    w_lower = W.lo[0]
    if inradius <= 0:
        raise ConfigurationError("0 must lie in the interior of Z")
    if not 0 < safety <= 1:
        raise ConfigurationError(f"radius safety factor must lie in (0, 1], got {safety}")
    if w_lower >= inradius:
        raise ConfigurationError(f"w_lower={w_lower:g} leaves no room inside Z (inradius {inradius:g})")
    r = safety * math.sqrt(inradius ** 2 + w_lower ** 2)
    if r <= w_lower:
        raise ConfigurationError(f"no feasible radius: r={r:g} <= w_lower={w_lower:g}")
    return r


def build_sets(trigger: TriggerSpec, Z: BoxSet, W: BoxSet, inflation: float = INFLATION, domain: str = "reach",
               n_lattice: int = 5, n_levels: int = 5, n_random_dirs: int = 16, seed: int = 0,
               growth_cap: float = GROWTH_CAP, radius: Optional[float] = None) -> WorkingSets:
    """Trace Phi along rays from a lattice of fresh samples and build E and Xi around it.

    ``radius`` fixes D_r for the reach domain; it defaults to ``pick_radius(Z, W)``.
    """
    if Z.inradius <= 0:
        raise ConfigurationError("0 must lie in the interior of Z")
    if W.dim != 1 or not W.lo[0] > 0:
        raise ConfigurationError("W must be an interval [w_lower, w_upper] with w_lower > 0")
    if inflation < 0:
        raise ConfigurationError(f"inflation must be >= 0, got {inflation}")
    if radius is None:
        radius = pick_radius(Z, W)
    elif not radius > W.lo[0]:
        raise ConfigurationError(f"radius must exceed w_lower={W.lo[0]:g}, got {radius}")
    n = Z.dim

    rng = np.random.default_rng(seed)
    random_dirs = rng.standard_normal((n_random_dirs, n))
    random_dirs /= np.linalg.norm(random_dirs, axis=1, keepdims=True)
    dirs = np.vstack([np.eye(n), -np.eye(n), random_dirs])

    x0s = Z.lattice(n_lattice)
    levels = np.linspace(W.lo[0], W.hi[0], n_levels)
    grid = np.array(list(itertools.product(range(len(x0s)), range(len(levels)), range(len(dirs)))))
    x0 = x0s[grid[:, 0]]
    w = levels[grid[:, 1]]
    d = dirs[grid[:, 2]]

    start = float(np.max(Z.hi_arr - Z.lo_arr))
    s = _ray_exits(trigger, x0, w, d, start, growth_cap)
    boundary = x0 + s[:, None] * d
    pts = np.vstack([boundary, x0s])
    raw = BoxSet(tuple(pts.min(axis=0)), tuple(pts.max(axis=0)), "Phi_raw")
    phi_box = raw.inflated(inflation, "Phi")
    error = BoxSet(tuple(Z.lo_arr - phi_box.hi_arr), tuple(Z.hi_arr - phi_box.lo_arr), "E")
    xi = phi_box.product(error, W, label="Xi")
    logger.info("Phi = %s x %s (raw %s x %s)", phi_box.lo, phi_box.hi, raw.lo, raw.hi)
    return WorkingSets(Z, W, phi_box, error, xi, raw, inflation, domain, float(radius))


def _with_phi(sets: WorkingSets, phi_box: BoxSet) -> WorkingSets:
    Z = sets.Z
    error = BoxSet(tuple(Z.lo_arr - phi_box.hi_arr), tuple(Z.hi_arr - phi_box.lo_arr), "E")
    return replace(sets, phi=phi_box, error=error, xi=phi_box.product(error, sets.W, label="Xi"))


# Constraint sampling ----------------------------------------------------------


def _unit(rng: np.random.Generator, count: int, n: int) -> np.ndarray:
    dirs = rng.standard_normal((count, n))
    return dirs / np.linalg.norm(dirs, axis=1, keepdims=True)


def reach_points(trigger: TriggerSpec, sets: WorkingSets, u: np.ndarray, w: np.ndarray, v: np.ndarray,
                 fraction: np.ndarray) -> np.ndarray:
    """z = (x0 - e, e) with x0 = sqrt(r^2 - w^2) u on D_r and e = fraction * rho* (1 + inflation) v,
    where rho* is the first zero of phi~ along v."""
    w = np.asarray(w, dtype=float)
    x0 = np.sqrt(np.maximum(sets.radius ** 2 - w ** 2, 0.0))[:, None] * u
    rho = _ray_exits(trigger, x0, w, -v, sets.radius, GROWTH_CAP)
    e = (np.asarray(fraction, dtype=float) * rho * (1.0 + sets.inflation))[:, None] * v
    return np.concatenate([x0 - e, e], axis=1)


def _draw(trigger: TriggerSpec, sets: WorkingSets, box: DisturbanceBox, count: int, rng: np.random.Generator,
          domain: Optional[str] = None, vertex_prob: float = 0.5):
    domain = domain or sets.domain
    n = sets.Z.dim
    if domain == "reach":
        raw = BoxSet((sets.w_lower, 0.0), (sets.reach_w_upper, 1.0)).sample(rng, count, FACE_FRACTION)
        w = raw[:, 0]
        z = reach_points(trigger, sets, _unit(rng, count, n), w, _unit(rng, count, n), raw[:, 1])
    elif domain == "held":
        raw = sets.Z.product(sets.phi, sets.W).sample(rng, count, FACE_FRACTION)
        x0, x, w = raw[:, :n], raw[:, n:2 * n], raw[:, 2 * n]
        z = np.concatenate([x, x0 - x], axis=1)
    elif domain == "box":
        raw = sets.xi.sample(rng, count, FACE_FRACTION)
        z, w = raw[:, :2 * n], raw[:, 2 * n]
    else:
        raise ConfigurationError(f"unknown sampling domain '{domain}'")
    return z, w, box.sample(rng, count, vertex_prob)


def evaluate_rows(plant: PlantModel, trigger: TriggerSpec, z: np.ndarray, w: np.ndarray,
                  d: np.ndarray) -> ConstraintRows:
    """phi~ and its Lie derivative along the homogenized field at the given points."""
    z, w, d = np.atleast_2d(z), np.asarray(w, dtype=float).reshape(-1), np.atleast_2d(d)
    if len(z) == 0:
        return ConstraintRows(np.empty(0), np.empty(0), z, w, d)
    phi = homogenize_trigger(trigger, z, w)
    grad = homogenized_gradient(trigger, z, w)
    rate = homogenize_field(plant, z, w, d)[:, :-1]
    return ConstraintRows(phi, np.sum(grad * rate, axis=1), z, w, d)


def sample_constraints(plant: PlantModel, trigger: TriggerSpec, sets: WorkingSets, box: DisturbanceBox,
                       n: int, seed: int, domain: Optional[str] = None) -> ConstraintRows:
    """n rows (phi~_i, L_i) drawn from the sampling domain and Delta."""
    rng = np.random.default_rng(seed)
    z, w, d = _draw(trigger, sets, box, n, rng, domain)
    return evaluate_rows(plant, trigger, z, w, d)


def sphere_lattice(n: int, per_axis: int = SPHERE_LATTICE) -> np.ndarray:
    """Unit directions through the non-zero points of a cube lattice."""
    pts = BoxSet((-1.0,) * n, (1.0,) * n).lattice(per_axis)
    pts = pts[np.linalg.norm(pts, axis=1) > 0]
    return pts / np.linalg.norm(pts, axis=1, keepdims=True)


def boundary_rows(trigger: TriggerSpec, sets: WorkingSets, per_axis: int = BOUNDARY_LATTICE,
                  domain: Optional[str] = None) -> np.ndarray:
    """phi~((x, 0), w) on a dense lattice of D_r (reach) or of Z x {0} x W."""
    n = sets.Z.dim
    if (domain or sets.domain) == "reach":
        levels = np.linspace(sets.w_lower, sets.reach_w_upper, per_axis)
        dirs = sphere_lattice(n)
        idx = np.array(list(itertools.product(range(len(levels)), range(len(dirs)))))
        w = levels[idx[:, 0]]
        x = np.sqrt(np.maximum(sets.radius ** 2 - w ** 2, 0.0))[:, None] * dirs[idx[:, 1]]
    else:
        pts = sets.Z.product(sets.W).lattice(per_axis)
        x, w = pts[:, :n], pts[:, n]
    z = np.concatenate([x, np.zeros((len(x), n))], axis=1)
    return homogenize_trigger(trigger, z, w)


# LP -----------------------------------------------------------------------------


def _upper_envelope(a: np.ndarray, b: np.ndarray):
    """Lines y = a + b x forming max_i(a_i + b_i x), sorted by slope."""
    order = np.lexsort((a, b))
    a, b = a[order], b[order]
    # keep the largest intercept per slope
    last = np.append(b[1:] != b[:-1], True)
    a, b = a[last], b[last]
    hull_a, hull_b = [], []
    for ai, bi in zip(a.tolist(), b.tolist()):
        while len(hull_a) >= 2:
            a1, b1, a2, b2 = hull_a[-2], hull_b[-2], hull_a[-1], hull_b[-1]
            if (a1 - ai) * (b2 - b1) <= (a1 - a2) * (bi - b1):
                hull_a.pop()
                hull_b.pop()
            else:
                break
        hull_a.append(ai)
        hull_b.append(bi)
    return np.asarray(hull_a), np.asarray(hull_b)


def fit_delta(rows: ConstraintRows, boundary_phi: np.ndarray, eps_delta: float = EPS_DELTA) -> DeltaCoefficients:
    """Solve  min delta1 + kappa*delta0  s.t. L_i <= delta0 phi_i + delta1,
    delta0 phi_b + delta1 >= eps, delta0 >= 0, delta1 >= eps, exactly.

    Each constraint is a line delta1 >= a + b*delta0; the optimum sits at
    delta0 = 0 or at a breakpoint of their upper envelope.
    """
    if len(rows) == 0:
        raise ContractViolation("fit_delta needs at least one constraint row")
    if not eps_delta > 0:
        raise ConfigurationError(f"eps_delta must be > 0, got {eps_delta}")
    boundary_phi = np.asarray(boundary_phi, dtype=float).reshape(-1)
    kappa = float(np.mean(np.abs(rows.phi)))

    a = np.concatenate([rows.lie, np.full(boundary_phi.size + 1, eps_delta)])
    b = np.concatenate([-rows.phi, -boundary_phi, [0.0]])
    hull_a, hull_b = _upper_envelope(a, b)

    breaks = (hull_a[:-1] - hull_a[1:]) / (hull_b[1:] - hull_b[:-1])
    candidates = np.unique(np.concatenate([[0.0], breaks[breaks > 0]]))
    envelope = np.max(a[None, :] + b[None, :] * candidates[:, None], axis=1)
    objective = envelope + kappa * candidates
    best = float(np.min(objective))
    ties = np.flatnonzero(objective <= best + 1e-12 * max(1.0, abs(best)))
    pick = int(ties[0])
    if ties.size > 1:
        logger.debug("LP optimum attained at %d vertices; taking the smallest delta0", ties.size)
    return DeltaCoefficients(
        delta0=float(candidates[pick]),
        delta1=float(envelope[pick]),
        eps_delta=eps_delta,
        objective=float(objective[pick]),
        n_rows=len(rows),
        n_boundary=int(boundary_phi.size),
        degenerate_ties=int(ties.size - 1),
    )


def fallback_delta(rows: ConstraintRows, eps_delta: float = EPS_DELTA, slack: float = 0.0) -> DeltaCoefficients:
    """delta0 = 0, delta1 = max(eps, max L + slack): feasible for any rows."""
    top = float(np.max(rows.lie)) + slack if len(rows) else eps_delta
    return DeltaCoefficients(0.0, max(eps_delta, top), eps_delta, n_rows=len(rows), source="fallback")


# Verification ---------------------------------------------------------------------


def _residual_chunk(plant, trigger, delta0, delta1, z, w, d):
    rows = evaluate_rows(plant, trigger, z, w, d)
    return delta0 * rows.phi + delta1 - rows.lie, rows.lie


def _vertex_lattice(trigger: TriggerSpec, sets: WorkingSets, box: DisturbanceBox, domain: str):
    n = sets.Z.dim
    if domain == "reach":
        dirs = sphere_lattice(n, VERIFY_LATTICE)
        levels = np.linspace(sets.w_lower, sets.reach_w_upper, VERIFY_LATTICE)
        fractions = np.array([0.5, 1.0])
        raw = np.array(list(itertools.product(range(len(dirs)), range(len(levels)), range(len(dirs)),
                                              range(len(fractions)))))
        w = levels[raw[:, 1]]
        z = reach_points(trigger, sets, dirs[raw[:, 0]], w, dirs[raw[:, 2]], fractions[raw[:, 3]])
    elif domain == "held":
        raw = sets.Z.product(sets.phi, sets.W).lattice(VERIFY_LATTICE)
        z = np.concatenate([raw[:, n:2 * n], raw[:, :n] - raw[:, n:2 * n]], axis=1)
        w = raw[:, 2 * n]
    else:
        raw = sets.xi.lattice(VERIFY_LATTICE)
        z, w = raw[:, :2 * n], raw[:, 2 * n]
    verts = box.vertices()
    if len(verts) == 0:
        verts = np.zeros((1, 0))
    idx = np.array(list(itertools.product(range(len(raw)), range(len(verts)))))
    return z[idx[:, 0]], w[idx[:, 0]], verts[idx[:, 1]]


def verify_delta(plant: PlantModel, trigger: TriggerSpec, sets: WorkingSets, box: DisturbanceBox,
                 coeffs: DeltaCoefficients, n_fine: int, seed: int, workers: int = 1,
                 cut_size: int = REFIT_CUT_SIZE, domain: Optional[str] = None,
                 raise_on_failure: bool = True) -> DeltaVerification:
    """Evaluate delta0 phi~ + delta1 - L on fresh samples plus Delta vertices x a coarse lattice."""
    domain = domain or sets.domain
    rng = np.random.default_rng(seed)
    z, w, d = _draw(trigger, sets, box, n_fine, rng, domain)
    lz, lw, ld = _vertex_lattice(trigger, sets, box, domain)
    z, w, d = np.vstack([z, lz]), np.concatenate([w, lw]), np.vstack([d, ld])

    chunks = np.array_split(np.arange(len(w)), VERIFY_CHUNKS)
    parts = Parallel(n_jobs=workers)(
        delayed(_residual_chunk)(plant, trigger, coeffs.delta0, coeffs.delta1, z[c], w[c], d[c])
        for c in chunks if c.size
    )
    residual = np.concatenate([p[0] for p in parts])
    lie = np.concatenate([p[1] for p in parts])

    bphi = boundary_rows(trigger, sets, domain=domain)
    boundary_margin = float(np.min(coeffs.delta0 * bphi + coeffs.delta1 - coeffs.eps_delta))

    worst = int(np.argmin(residual))
    violating = np.flatnonzero(residual < 0)
    cut = violating[np.argsort(residual[violating])][:cut_size]
    report = DeltaVerification(
        min_margin=float(residual[worst]),
        boundary_margin=boundary_margin,
        max_lie=float(np.max(lie)),
        n_points=int(len(w)),
        n_boundary=int(bphi.size),
        worst_point={"z": z[worst].tolist(), "w": float(w[worst]), "d": d[worst].tolist()},
        worst_rows=evaluate_rows(plant, trigger, z[cut], w[cut], d[cut]),
    )
    logger.info("verification: margin %.6g, boundary margin %.6g over %d points",
                report.min_margin, report.boundary_margin, report.n_points)
    if raise_on_failure and not report.passed:
        raise DeltaVerificationError(report)
    return report


def synthesize_deltas(plant: PlantModel, trigger: TriggerSpec, sets: WorkingSets, box: DisturbanceBox,
                      cfg: SynthesisConfig, workers: int = 1) -> Tuple[DeltaCoefficients, DeltaVerification]:
    """Fit, verify, and refit with the worst violating points until verification passes.

    After ``max_refits`` refits delta1 is raised by the remaining violation.
    The verified delta1 is then padded by DELTA1_PAD of its excess over eps.
    """
    rows = sample_constraints(plant, trigger, sets, box, cfg.n_rows, cfg.seed)
    bphi = boundary_rows(trigger, sets)
    verify_seed = cfg.seed + 1
    attempts = 0

    def check(coeffs):
        return verify_delta(plant, trigger, sets, box, coeffs, cfg.n_verify, verify_seed, workers, cfg.cut_size)

    coeffs = None
    try:
        for attempt in Retrying(stop=stop_after_attempt(cfg.max_refits + 1),
                                retry=retry_if_exception_type(DeltaVerificationError), reraise=True):
            with attempt:
                attempts = attempt.retry_state.attempt_number
                coeffs = fit_delta(rows, bphi, cfg.eps_delta)
                logger.info("fit %d: delta0=%.6g delta1=%.6g (%d rows)", attempts, coeffs.delta0,
                            coeffs.delta1, len(rows))
                try:
                    report = check(coeffs)
                except DeltaVerificationError as e:
                    rows = rows.concat(e.report.worst_rows)
                    raise
    except DeltaVerificationError as e:
        shortfall = -min(e.report.min_margin, e.report.boundary_margin)
        logger.warning("refit cap reached; raising delta1 by %.6g", shortfall + cfg.eps_delta)
        coeffs = replace(coeffs, delta1=coeffs.delta1 + shortfall + cfg.eps_delta, source="inflated")
        report = check(coeffs)

    pad = DELTA1_PAD * max(coeffs.delta1 - cfg.eps_delta, 0.0)
    if pad > 0:
        coeffs = replace(coeffs, delta1=coeffs.delta1 + pad)
        report = check(coeffs)

    coeffs = replace(coeffs, margin=report.min_margin, boundary_margin=report.boundary_margin,
                     n_verify=report.n_points, refits=attempts - 1)
    return coeffs, report


def inflation_ratio(plant: PlantModel, trigger: TriggerSpec, sets: WorkingSets, box: DisturbanceBox,
                    n: int, seed: int) -> Dict[str, float]:
    """max L over the inflated domain against max L over the un-inflated one.

    The reach domain inflates the error radius; the others inflate the Phi box.
    """
    m_box = float(np.max(sample_constraints(plant, trigger, sets, box, n, seed).lie))
    if sets.domain == "reach":
        raw_sets = replace(sets, inflation=0.0)
    else:
        raw_sets = _with_phi(sets, sets.phi_raw)
    m_raw = float(np.max(sample_constraints(plant, trigger, raw_sets, box, n, seed).lie))
    ratio = m_box / m_raw if m_raw > 0 else math.nan
    return {"max_lie_box": m_box, "max_lie_raw": m_raw, "ratio": ratio}
