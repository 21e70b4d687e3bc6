"""
Sampling policies and the built-in triggering functions.
"""

import logging
from dataclasses import dataclass
from functools import partial
from typing import Any, Mapping, Optional

import numpy as np

from .config import EVENT_TOLERANCE
from .exceptions import ConfigurationError, ContractViolation
from .isochron import RegionPartition, region_dwell
from .models import TriggerSpec

logger = logging.getLogger(__name__)

# Baseline small-gain sampler: 1.54 / (28 (|x| + 4) + 29)
BASELINE_NUMERATOR = 1.54
BASELINE_GAIN = 28.0
BASELINE_OFFSET = 4.0
BASELINE_CONSTANT = 29.0


def region_stc_dwell(partition: RegionPartition, x) -> float:
    """Grid time of the region containing (x, 1)."""
    return region_dwell(partition, x)


def baseline_stc_dwell(x) -> float:
    """1.54 / (28 (|x| + 4) + 29)."""
    norm = float(np.linalg.norm(np.asarray(x, dtype=float)))
    return BASELINE_NUMERATOR / (BASELINE_GAIN * (norm + BASELINE_OFFSET) + BASELINE_CONSTANT)


@dataclass(frozen=True)
class RegionSTCPolicy:
    """Region-based self-triggered sampling."""

    partition: RegionPartition
    kind: str = "region-stc"
    event_triggered: bool = False

    def dwell(self, x) -> float:
        return region_stc_dwell(self.partition, x)


@dataclass(frozen=True)
class BaselineSTCPolicy:
    """Closed-form small-gain self-triggered sampling."""

    kind: str = "baseline-stc"
    event_triggered: bool = False

    def dwell(self, x) -> float:
        return baseline_stc_dwell(x)


@dataclass(frozen=True)
class ETCPolicy:
    """Event-triggered sampling; the loop runner detects the crossing."""

    tol: float = EVENT_TOLERANCE
    kind: str = "etc"
    event_triggered: bool = True

    def dwell(self, x) -> float:
        raise ContractViolation("event-triggered sampling has no precomputable dwell")


def make_policy(kind: str, partition: Optional[RegionPartition] = None, tol: float = EVENT_TOLERANCE):
    """
    Build a scheduler policy by name.

    Args:
        kind: One of "region-stc", "baseline-stc", "etc"
        partition: Region partition, required for "region-stc"
        tol: Event-detection tolerance in seconds for "etc"

    Returns:
        The policy object consumed by closed_loop_run
    """
    if kind == "region-stc":
        if partition is None:
            raise ConfigurationError("region-stc needs a region partition")
        return RegionSTCPolicy(partition)
    if kind == "baseline-stc":
        return BaselineSTCPolicy()
    if kind == "etc":
        return ETCPolicy(tol)
    raise ConfigurationError(f"unknown scheduler '{kind}'")


# Triggering functions -------------------------------------------------------------


def _quadratic_phi(n, sigma, eps_bar, xi):
    zeta, eps = xi[..., :n], xi[..., n:]
    return np.sum(eps * eps, axis=-1) - sigma * np.sum(zeta * zeta, axis=-1) - eps_bar ** 2


def _quadratic_gradient(n, sigma, xi):
    return np.concatenate([-2.0 * sigma * xi[..., :n], 2.0 * xi[..., n:]], axis=-1)


def _quadratic_homogenized(n, sigma, eps_bar, xi, w):
    zeta, eps = xi[..., :n], xi[..., n:]
    return np.sum(eps * eps, axis=-1) - sigma * np.sum(zeta * zeta, axis=-1) - eps_bar ** 2 * w * w


def _number(params: Mapping[str, Any], key: str, default=None) -> float:
    value = params.get(key, default)
    if value is None:
        raise ConfigurationError(f"trigger parameter '{key}' is required")
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigurationError(f"trigger parameter '{key}' must be a number, got {value!r}")
    return float(value)


def make_trigger(kind: str, params: Optional[Mapping[str, Any]], n: int, theta: float = 1.0) -> TriggerSpec:
    """
    Build a built-in triggering function on R^{2n}.

    "lebesgue": |eps|^2 - eps_bar^2
    "mixed":    |eps|^2 - sigma |zeta|^2 - eps_bar^2   (sigma = 0 is Lebesgue)

    With theta = 1 the homogenized form |e|^2 - sigma |x|^2 - eps_bar^2 w^2 is
    exact for every w >= 0.
    """
    params = dict(params or {})
    if kind == "lebesgue":
        sigma = 0.0
        unknown = set(params) - {"eps_bar"}
    elif kind == "mixed":
        sigma = _number(params, "sigma")
        unknown = set(params) - {"eps_bar", "sigma"}
    else:
        raise ConfigurationError(f"unknown trigger kind '{kind}', expected 'lebesgue' or 'mixed'")
    if unknown:
        raise ConfigurationError(f"unknown parameters for trigger '{kind}': {sorted(unknown)}")
    eps_bar = _number(params, "eps_bar")
    if eps_bar <= 0:
        raise ConfigurationError(f"eps_bar must be > 0, got {eps_bar}")
    if sigma < 0:
        raise ConfigurationError(f"sigma must be >= 0, got {sigma}")
    if sigma == 0 and kind == "mixed":
        logger.info("mixed trigger with sigma = 0 reduces to the Lebesgue trigger")

    return TriggerSpec(
        name=kind,
        n=n,
        theta=theta,
        phi=partial(_quadratic_phi, n, sigma, eps_bar),
        gradient=partial(_quadratic_gradient, n, sigma),
        homogenized=partial(_quadratic_homogenized, n, sigma, eps_bar) if theta == 1.0 else None,
        params={"sigma": sigma, "eps_bar": eps_bar},
    )
