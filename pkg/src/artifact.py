"""
Synthesis artifact persistence.

The artifact is a JSON document. Floats are written with their shortest
round-trip representation, so loading reproduces every double exactly and
region lookups after a reload match the ones before it.
"""

import json
import logging
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path
from typing import Any, Dict, Optional

from .exceptions import ConfigurationError
from .isochron import IsochronEngine, RegionPartition, TimeGrid, build_time_grid
from .models import TriggerSpec
from .setsynth import BoxSet

logger = logging.getLogger(__name__)

ARTIFACT_VERSION = 1


@dataclass(frozen=True)
class SynthesisArtifact:
    """Everything needed to rebuild the region partition without re-synthesizing."""

    model_hash: str
    model: Dict[str, Any]
    trigger: Dict[str, Any]
    sets: Dict[str, Dict[str, Any]]
    inflation: float
    domain: str
    delta0: float
    delta1: float
    eps_delta: float
    margin: float
    boundary_margin: float
    delta_source: str
    refits: int
    r: float
    w_lower: float
    w_upper: float
    alpha: float
    theta: float
    tau1: float
    ratio: float
    q: int
    coverage: Dict[str, Any] = field(default_factory=dict)
    report: Dict[str, Any] = field(default_factory=dict)
    version: int = ARTIFACT_VERSION

    def __post_init__(self):
        # also rejects ratio <= 1
        build_time_grid(self.tau1, self.ratio, self.q)
        if not self.delta0 >= 0 or not self.delta1 > 0:
            raise ConfigurationError(f"artifact has invalid coefficients ({self.delta0}, {self.delta1})")
        if not self.r > self.w_lower > 0:
            raise ConfigurationError(f"artifact needs r > w_lower > 0, got r={self.r}, w_lower={self.w_lower}")

    @property
    def flagged(self) -> bool:
        """Coefficients were injected or failed their verification."""
        return self.delta_source == "override" or self.margin < 0 or self.boundary_margin < 0

    def box(self, name: str) -> BoxSet:
        raw = self.sets[name]
        return BoxSet(tuple(raw["lo"]), tuple(raw["hi"]), name)

    def time_grid(self) -> TimeGrid:
        return build_time_grid(self.tau1, self.ratio, self.q)

    def engine(self, trigger: TriggerSpec) -> IsochronEngine:
        return IsochronEngine(
            delta0=self.delta0,
            delta1=self.delta1,
            r=self.r,
            alpha=self.alpha,
            theta=self.theta,
            trigger=trigger,
            w_lower=self.w_lower,
            z_inradius=self.box("Z").inradius,
        )

    def partition(self, trigger: TriggerSpec) -> RegionPartition:
        return RegionPartition(self.engine(trigger), self.time_grid())

    def to_dict(self) -> Dict[str, Any]:
        return asdict(self)

    @classmethod
    def from_dict(cls, raw: Dict[str, Any]) -> "SynthesisArtifact":
        if not isinstance(raw, dict):
            raise ConfigurationError("artifact root must be an object")
        names = {f.name for f in fields(cls)}
        missing = sorted(n for n in names - set(raw) if n not in ("coverage", "report", "version"))
        unknown = sorted(set(raw) - names)
        if missing or unknown:
            raise ConfigurationError(f"malformed artifact: missing {missing}, unknown {unknown}")
        if raw.get("version", ARTIFACT_VERSION) != ARTIFACT_VERSION:
            raise ConfigurationError(f"unsupported artifact version {raw['version']}")
        return cls(**raw)


def save_artifact(artifact: SynthesisArtifact, path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(artifact.to_dict(), indent=2, sort_keys=True), encoding="utf-8")
    logger.info("artifact written to %s", path)
    return path


def load_artifact(path, expected_hash: Optional[str] = None) -> SynthesisArtifact:
    """Read an artifact; with `expected_hash`, refuse one built for another model."""
    path = Path(path)
    try:
        raw = json.loads(path.read_text(encoding="utf-8"))
    except FileNotFoundError as e:
        raise ConfigurationError(f"artifact not found: {path}") from e
    except json.JSONDecodeError as e:
        raise ConfigurationError(f"artifact {path} is not valid JSON: {e}") from e
    artifact = SynthesisArtifact.from_dict(raw)
    if expected_hash is not None and artifact.model_hash != expected_hash:
        raise ConfigurationError(
            f"artifact {path} was synthesized for another model/trigger "
            f"(hash {artifact.model_hash[:12]} != {expected_hash[:12]})"
        )
    return artifact
