"""
Region-based self-triggered sampling for perturbed nonlinear systems.
Homogenization, comparison-coefficient synthesis, isochron regions and loop simulation.
"""

from .artifact import SynthesisArtifact, load_artifact, save_artifact
from .config import RunConfig, load_config
from .exceptions import (
    ConfigurationError,
    CoverageError,
    DeltaVerificationError,
    SelfTriggerError,
    SynthesisError,
)
from .isochron import (
    IsochronEngine,
    RegionPartition,
    TimeGrid,
    build_time_grid,
    mu,
    psi,
    region_index,
    tau_down,
)
from .models import PlantModel, TriggerSpec, make_plant
from .schedulers import baseline_stc_dwell, make_policy, make_trigger
from .setsynth import build_sets, fit_delta, pick_radius, synthesize_deltas, verify_delta
from .simulate import closed_loop_run, etc_intersample_time, integrate_held

__all__ = [
    "SynthesisArtifact",
    "load_artifact",
    "save_artifact",
    "RunConfig",
    "load_config",
    "ConfigurationError",
    "CoverageError",
    "DeltaVerificationError",
    "SelfTriggerError",
    "SynthesisError",
    "IsochronEngine",
    "RegionPartition",
    "TimeGrid",
    "build_time_grid",
    "mu",
    "pick_radius",
    "psi",
    "region_index",
    "tau_down",
    "PlantModel",
    "TriggerSpec",
    "make_plant",
    "baseline_stc_dwell",
    "make_policy",
    "make_trigger",
    "build_sets",
    "fit_delta",
    "synthesize_deltas",
    "verify_delta",
    "closed_loop_run",
    "etc_intersample_time",
    "integrate_held",
]
