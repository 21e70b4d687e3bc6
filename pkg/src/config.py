"""
Configuration module for the self-triggered sampling toolkit.
Loads environment defaults and defines the run-configuration schema.
"""

import hashlib
import json
import math
import os
from dataclasses import asdict, dataclass, field, fields, replace
from pathlib import Path
from typing import Any, Dict, List, Optional, Tuple

from dotenv import load_dotenv

from .exceptions import ConfigurationError

# Load environment variables from .env file (for local development)
load_dotenv()

# Process-level defaults - overridable from the environment or CLI flags
WORKERS = int(os.getenv("SELFTRIG_WORKERS", "1"))
LOG_LEVEL = os.getenv("SELFTRIG_LOG_LEVEL", "INFO")
OUT_DIR = os.getenv("SELFTRIG_OUT_DIR", "results")
SEED = int(os.getenv("SELFTRIG_SEED", "2021"))

# Integrator
DEFAULT_STEP = 5e-5  # seconds; resolves tau_1 ~ 6.3e-4 with >= 12 steps
EVENT_TOLERANCE = 1e-9  # seconds
EVENT_HORIZON = 10.0  # seconds, crossing search cap when no grid is known
HORIZON_FACTOR = 10.0  # crossing search cap = HORIZON_FACTOR * tau_q

# Model evaluation
FD_STEP = 1e-6
CONTINUATION_W = 1e-9

# Synthesis
EPS_DELTA = 1e-3
INFLATION = 0.05
LP_ROWS = 20000
VERIFY_POINTS = 100000
MAX_REFITS = 20
REFIT_CUT_SIZE = 32
RADIUS_SAFETY = 0.99

DOMAINS = ("reach", "held", "box")
DISTURBANCE_KINDS = ("benchmark", "constant", "piecewise")


def _is_number(value: Any) -> bool:
    return isinstance(value, (int, float)) and not isinstance(value, bool) and math.isfinite(value)


def _vector(value: Any, where: str) -> Tuple[float, ...]:
    if not isinstance(value, (list, tuple)) or not all(_is_number(v) for v in value):
        raise ConfigurationError(f"{where}: expected a list of numbers, got {value!r}")
    return tuple(float(v) for v in value)


def _positive(value: Any, where: str, allow_zero: bool = False) -> float:
    if not _is_number(value):
        raise ConfigurationError(f"{where}: expected a number, got {value!r}")
    if value < 0 or (value == 0 and not allow_zero):
        raise ConfigurationError(f"{where}: must be {'>= 0' if allow_zero else '> 0'}, got {value}")
    return float(value)


def _count(value: Any, where: str, minimum: int = 1) -> int:
    if not isinstance(value, int) or isinstance(value, bool) or value < minimum:
        raise ConfigurationError(f"{where}: expected an integer >= {minimum}, got {value!r}")
    return value


def _build(cls, raw: Any, where: str):
    """Instantiate a config dataclass from a JSON object, rejecting unknown keys."""
    if raw is None:
        raw = {}
    if not isinstance(raw, dict):
        raise ConfigurationError(f"{where}: expected an object")
    known = {f.name for f in fields(cls)}
    unknown = sorted(set(raw) - known)
    if unknown:
        raise ConfigurationError(f"{where}: unknown keys {unknown}")
    try:
        return cls(**raw)
    except TypeError as e:
        raise ConfigurationError(f"{where}: {e}") from e


@dataclass(frozen=True)
class ModelConfig:
    """Plant selection: built-in name, its parameters and the homogeneity degree alpha."""

    name: str
    params: Dict[str, Any] = field(default_factory=dict)
    alpha: float = 1.0

    def __post_init__(self):
        if not isinstance(self.name, str) or not self.name:
            raise ConfigurationError("model.name: expected a non-empty string")
        if not isinstance(self.params, dict):
            raise ConfigurationError("model.params: expected an object")
        _positive(self.alpha, "model.alpha")


@dataclass(frozen=True)
class TriggerConfig:
    """Triggering function selection and its homogeneity degree theta."""

    kind: str
    params: Dict[str, Any] = field(default_factory=dict)
    theta: float = 1.0

    def __post_init__(self):
        if not isinstance(self.kind, str) or not self.kind:
            raise ConfigurationError("trigger.kind: expected a non-empty string")
        if not isinstance(self.params, dict):
            raise ConfigurationError("trigger.params: expected an object")
        _positive(self.theta, "trigger.theta")


@dataclass(frozen=True)
class SetsConfig:
    """State box Z (plant units), w-interval W and the Phi-box inflation."""

    Z: Dict[str, List[float]]
    W: List[float]
    inflation: float = INFLATION
    domain: str = "reach"

    def __post_init__(self):
        if not isinstance(self.Z, dict) or set(self.Z) != {"lo", "hi"}:
            raise ConfigurationError("sets.Z: expected an object with 'lo' and 'hi'")
        lo, hi = _vector(self.Z["lo"], "sets.Z.lo"), _vector(self.Z["hi"], "sets.Z.hi")
        if len(lo) != len(hi) or not lo:
            raise ConfigurationError("sets.Z: 'lo' and 'hi' must have the same non-zero length")
        if not all(l < 0 < h for l, h in zip(lo, hi)):
            raise ConfigurationError("sets.Z: 0 must lie in the interior of Z")
        w = _vector(self.W, "sets.W")
        if len(w) != 2 or not 0 < w[0] < w[1]:
            raise ConfigurationError("sets.W: expected [w_lower, w_upper] with 0 < w_lower < w_upper")
        _positive(self.inflation, "sets.inflation", allow_zero=True)
        if self.domain not in DOMAINS:
            raise ConfigurationError(f"sets.domain: expected one of {DOMAINS}")

    @property
    def z_lo(self) -> Tuple[float, ...]:
        return _vector(self.Z["lo"], "sets.Z.lo")

    @property
    def z_hi(self) -> Tuple[float, ...]:
        return _vector(self.Z["hi"], "sets.Z.hi")


@dataclass(frozen=True)
class SynthesisConfig:
    """Coefficient synthesis budgets and optional overrides."""

    eps_delta: float = EPS_DELTA
    n_rows: int = LP_ROWS
    n_verify: int = VERIFY_POINTS
    max_refits: int = MAX_REFITS
    cut_size: int = REFIT_CUT_SIZE
    radius_safety: float = RADIUS_SAFETY
    radius: Optional[float] = None
    delta_override: Optional[Dict[str, float]] = None
    seed: int = SEED

    def __post_init__(self):
        _positive(self.eps_delta, "synthesis.eps_delta")
        _count(self.n_rows, "synthesis.n_rows")
        _count(self.n_verify, "synthesis.n_verify")
        _count(self.max_refits, "synthesis.max_refits")
        _count(self.cut_size, "synthesis.cut_size")
        _count(self.seed, "synthesis.seed", minimum=0)
        if not 0 < self.radius_safety <= 1:
            raise ConfigurationError("synthesis.radius_safety: must lie in (0, 1]")
        if self.radius is not None:
            _positive(self.radius, "synthesis.radius")
        if self.delta_override is not None:
            if not isinstance(self.delta_override, dict) or set(self.delta_override) != {"delta0", "delta1"}:
                raise ConfigurationError("synthesis.delta_override: expected {'delta0': .., 'delta1': ..}")
            _positive(self.delta_override["delta0"], "synthesis.delta_override.delta0", allow_zero=True)
            _positive(self.delta_override["delta1"], "synthesis.delta_override.delta1")


@dataclass(frozen=True)
class GridConfig:
    """Time grid: explicit (tau1, ratio, q) or auto (ratio, radius)."""

    tau1: Optional[float] = None
    ratio: float = 1.01
    q: Optional[int] = None
    auto: bool = False
    radius: Optional[float] = None

    def __post_init__(self):
        if not _is_number(self.ratio) or self.ratio <= 1:
            raise ConfigurationError("grid.ratio: must be > 1")
        if self.auto:
            _positive(self.radius, "grid.radius")
        else:
            _positive(self.tau1, "grid.tau1")
            _count(self.q, "grid.q")


@dataclass(frozen=True)
class IntegratorConfig:
    """Fixed-step RK4 settings (seconds)."""

    h: float = DEFAULT_STEP
    event_tol: float = EVENT_TOLERANCE

    def __post_init__(self):
        _positive(self.h, "integrator.h")
        _positive(self.event_tol, "integrator.event_tol")


@dataclass(frozen=True)
class DisturbanceConfig:
    """Disturbance realization used for closed-loop runs."""

    kind: str = "benchmark"
    value: Optional[List[float]] = None
    grid: Optional[List[float]] = None
    values: Optional[List[List[float]]] = None

    def __post_init__(self):
        if self.kind not in DISTURBANCE_KINDS:
            raise ConfigurationError(f"disturbance.kind: expected one of {DISTURBANCE_KINDS}")
        if self.kind == "constant":
            _vector(self.value, "disturbance.value")
        if self.kind == "piecewise":
            _vector(self.grid, "disturbance.grid")
            if not isinstance(self.values, list) or len(self.values) != len(self.grid):
                raise ConfigurationError("disturbance.values: one row per grid time required")
            for i, row in enumerate(self.values):
                _vector(row, f"disturbance.values[{i}]")


@dataclass(frozen=True)
class BenchmarkConfig:
    """Batch comparison settings."""

    runs: int = 100
    ball_radius: float = 2.0
    horizon: float = 5.0
    seed: int = SEED
    x0: Optional[List[float]] = None

    def __post_init__(self):
        _count(self.runs, "benchmark.runs")
        _positive(self.ball_radius, "benchmark.ball_radius")
        _positive(self.horizon, "benchmark.horizon")
        _count(self.seed, "benchmark.seed", minimum=0)
        if self.x0 is not None:
            _vector(self.x0, "benchmark.x0")


@dataclass(frozen=True)
class VerifyConfig:
    """Budgets for the property suites run by the verify command."""

    scaling_points: int = 20
    scaling_h: float = 1e-5
    scaling_horizon: Optional[float] = None
    scaling_lambdas: List[float] = field(default_factory=lambda: [0.5, 2.0, 10.0])
    dominance_points: int = 200
    dominance_realizations: int = 20
    root_points: int = 1000
    safety_runs: int = 5
    emulation_points: int = 50
    emulation_realizations: int = 200
    emulation_switches: int = 8
    n_fine: int = VERIFY_POINTS
    seed: int = SEED

    def __post_init__(self):
        for name in ("scaling_points", "dominance_points", "dominance_realizations", "root_points",
                     "safety_runs", "emulation_points", "emulation_realizations", "n_fine"):
            _count(getattr(self, name), f"verify.{name}")
        _count(self.emulation_switches, "verify.emulation_switches", minimum=0)
        _count(self.seed, "verify.seed", minimum=0)
        _positive(self.scaling_h, "verify.scaling_h")
        if self.scaling_horizon is not None:
            _positive(self.scaling_horizon, "verify.scaling_horizon")
        for lam in _vector(self.scaling_lambdas, "verify.scaling_lambdas"):
            _positive(lam, "verify.scaling_lambdas")


@dataclass(frozen=True)
class OutputConfig:
    """Output locations."""

    dir: str = OUT_DIR
    artifact: Optional[str] = None

    @property
    def artifact_path(self) -> Path:
        return Path(self.artifact) if self.artifact else Path(self.dir) / "artifact.json"


@dataclass(frozen=True)
class RunConfig:
    """Complete, validated run configuration."""

    model: ModelConfig
    trigger: TriggerConfig
    sets: SetsConfig
    synthesis: SynthesisConfig = field(default_factory=SynthesisConfig)
    grid: GridConfig = field(default_factory=lambda: GridConfig(tau1=6.3e-4, q=434))
    integrator: IntegratorConfig = field(default_factory=IntegratorConfig)
    disturbance: DisturbanceConfig = field(default_factory=DisturbanceConfig)
    benchmark: BenchmarkConfig = field(default_factory=BenchmarkConfig)
    verify: VerifyConfig = field(default_factory=VerifyConfig)
    output: OutputConfig = field(default_factory=OutputConfig)

    _SECTIONS = {
        "model": ModelConfig,
        "trigger": TriggerConfig,
        "sets": SetsConfig,
        "synthesis": SynthesisConfig,
        "grid": GridConfig,
        "integrator": IntegratorConfig,
        "disturbance": DisturbanceConfig,
        "benchmark": BenchmarkConfig,
        "verify": VerifyConfig,
        "output": OutputConfig,
    }

    @classmethod
    def from_dict(cls, raw: Dict[str, Any]) -> "RunConfig":
        if not isinstance(raw, dict):
            raise ConfigurationError("configuration root must be an object")
        unknown = sorted(set(raw) - set(cls._SECTIONS))
        if unknown:
            raise ConfigurationError(f"unknown configuration sections {unknown}")
        for required in ("model", "trigger", "sets"):
            if required not in raw:
                raise ConfigurationError(f"missing required section '{required}'")
        sections = {name: _build(kind, raw[name], name) for name, kind in cls._SECTIONS.items() if name in raw}
        return cls(**sections)

    def model_hash(self) -> str:
        """SHA-256 of the canonical model + trigger description."""
        canonical = json.dumps({"model": asdict(self.model), "trigger": asdict(self.trigger)}, sort_keys=True)
        return hashlib.sha256(canonical.encode("utf-8")).hexdigest()

    def with_overrides(self, seed: Optional[int] = None, out: Optional[str] = None,
                       h: Optional[float] = None) -> "RunConfig":
        """Apply CLI flag overrides, returning a new config."""
        config = self
        if seed is not None:
            config = replace(
                config,
                benchmark=replace(config.benchmark, seed=seed),
                synthesis=replace(config.synthesis, seed=seed),
                verify=replace(config.verify, seed=seed),
            )
        if out is not None:
            config = replace(config, output=replace(config.output, dir=out))
        if h is not None:
            config = replace(config, integrator=IntegratorConfig(h=h, event_tol=config.integrator.event_tol))
        return config


def load_config(path) -> RunConfig:
    """Read and validate a JSON run configuration."""
    path = Path(path)
    try:
        raw = json.loads(path.read_text(encoding="utf-8"))
    except FileNotFoundError as e:
        raise ConfigurationError(f"config file not found: {path}") from e
    except json.JSONDecodeError as e:
        raise ConfigurationError(f"config file {path} is not valid JSON: {e}") from e
    return RunConfig.from_dict(raw)
