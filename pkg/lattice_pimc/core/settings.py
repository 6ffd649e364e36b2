"""
Experiment settings management.

This module provides the ExperimentConfig dataclass and loaders for the two
supported file formats: a JSON object or a flat key=value file. Both are
reduced to one mapping and parsed by config_from_mapping.
"""
import json
import math
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path
from typing import Any, Dict, Mapping, Optional, Tuple

from dotenv import dotenv_values

from lattice_pimc import config
from lattice_pimc.core.lattice_model import PATTERNS, from_spec
from lattice_pimc.models import LatticeConfig, ThermoParams
from lattice_pimc.utils.errors import ExperimentConfigError, LatticePimcError

MODES = ("exact-free", "exact-striped", "pimc", "compare")


@dataclass
class LatticeSpec:
    """Lattice description as written in a config file."""
    pattern: str = "striped"
    size: int = config.DEFAULT_LATTICE_SIZE
    epsilon: float = config.DEFAULT_EPSILON
    occupancy: Optional[Tuple[int, ...]] = None

    def build(self) -> LatticeConfig:
        return from_spec(self.pattern, self.size, self.epsilon, self.occupancy)


@dataclass
class SamplerSchedule:
    """Markov-chain schedule; burn_in None means BURN_IN_PER_BEAD * p."""
    n_samples: int = config.DEFAULT_WALKS
    burn_in: Optional[int] = None
    thin: int = config.DEFAULT_THIN
    segment_fraction: float = config.DEFAULT_SEGMENT_FRACTION
    global_fraction: float = config.DEFAULT_GLOBAL_FRACTION
    chains: int = config.DEFAULT_CHAINS
    block_size: Optional[int] = None


@dataclass
class ExperimentConfig:
    """Everything that determines a run; identical configs give identical CSV."""
    mode: str = "pimc"
    lattice: LatticeSpec = field(default_factory=LatticeSpec)
    betas: Tuple[float, ...] = config.STRIPED_BETAS
    t: float = config.DEFAULT_T
    p: int = config.DEFAULT_P
    schedule: SamplerSchedule = field(default_factory=SamplerSchedule)
    seed: int = config.DEFAULT_SEED
    out: Optional[Path] = None
    n_max: int = config.DEFAULT_N_MAX
    quad_tol: float = config.DEFAULT_QUAD_TOL
    workers: int = config.DEFAULT_WORKERS

    def validate(self) -> "ExperimentConfig":
        """
        Check the configuration and return it.

        Raises:
            ExperimentConfigError: On any inconsistent value.
        """
        if self.mode not in MODES:
            raise ExperimentConfigError(f"mode must be one of {MODES}, got {self.mode!r}")
        if self.lattice.pattern not in PATTERNS:
            raise ExperimentConfigError(
                f"lattice pattern must be one of {PATTERNS}, got {self.lattice.pattern!r}"
            )
        if not self.betas:
            raise ExperimentConfigError("at least one beta is required")
        if any(not math.isfinite(b) or b < 0 for b in self.betas):
            raise ExperimentConfigError(f"betas must be finite and >= 0, got {self.betas}")
        if self.n_max < 0:
            raise ExperimentConfigError(f"n_max must be >= 0, got {self.n_max}")
        if not 0 < self.quad_tol < 1:
            raise ExperimentConfigError(f"quad_tol must lie in (0, 1), got {self.quad_tol}")
        if self.workers < 1:
            raise ExperimentConfigError(f"workers must be >= 1, got {self.workers}")
        if not 0 <= self.seed < 2 ** 64:
            raise ExperimentConfigError(f"seed must be a 64-bit unsigned integer, got {self.seed}")
        s = self.schedule
        if s.n_samples < 1 or s.thin < 1 or s.chains < 1:
            raise ExperimentConfigError("walks, thin and chains must all be >= 1")
        if s.burn_in is not None and s.burn_in < 0:
            raise ExperimentConfigError(f"burn_in must be >= 0, got {s.burn_in}")
        if s.block_size is not None and s.block_size < 1:
            raise ExperimentConfigError(f"block_size must be >= 1, got {s.block_size}")
        if not 0 < s.segment_fraction <= 1:
            raise ExperimentConfigError(
                f"segment_fraction must lie in (0, 1], got {s.segment_fraction}"
            )
        if not 0 <= s.global_fraction <= 1:
            raise ExperimentConfigError(
                f"global_fraction must lie in [0, 1], got {s.global_fraction}"
            )
        try:
            self.lattice_config()
            self.thermo(self.betas[0])
        except LatticePimcError as exc:
            raise ExperimentConfigError(str(exc)) from exc
        return self

    def lattice_config(self) -> LatticeConfig:
        return self.lattice.build()

    def thermo(self, beta: float) -> ThermoParams:
        return ThermoParams(beta=beta, t=self.t, p=self.p)

    def to_dict(self) -> Dict[str, Any]:
        data = asdict(self)
        data["out"] = str(self.out) if self.out is not None else None
        return data


def _as_floats(value: Any) -> Tuple[float, ...]:
    if isinstance(value, str):
        parts = [v for v in value.replace(";", ",").split(",") if v.strip()]
        return tuple(float(v) for v in parts)
    if isinstance(value, (int, float)):
        return (float(value),)
    return tuple(float(v) for v in value)


def _as_ints(value: Any) -> Tuple[int, ...]:
    if isinstance(value, str):
        return tuple(int(v) for v in value.replace(";", ",").split(",") if v.strip())
    return tuple(int(v) for v in value)


def _optional_int(value: Any) -> Optional[int]:
    if value is None or (isinstance(value, str) and value.strip().lower() in ("", "none", "auto")):
        return None
    return int(value)


def _flatten(mapping: Mapping[str, Any]) -> Dict[str, Any]:
    flat: Dict[str, Any] = {}
    for key, value in mapping.items():
        key = str(key).strip().lower().replace("-", "_")
        if key in ("lattice", "schedule") and isinstance(value, Mapping):
            for sub_key, sub_value in value.items():
                sub_key = str(sub_key).strip().lower().replace("-", "_")
                if key == "lattice" and sub_key == "l":
                    sub_key = "lattice_size"
                elif key == "lattice" and sub_key == "size":
                    sub_key = "lattice_size"
                flat[sub_key] = sub_value
        else:
            flat[key] = value
    return flat


def config_from_mapping(mapping: Mapping[str, Any], base: Optional[ExperimentConfig] = None) -> ExperimentConfig:
    """
    Build an ExperimentConfig from a (possibly nested) mapping.

    Unknown keys are rejected. Values may be strings, as produced by a
    key=value file.

    Raises:
        ExperimentConfigError: If a key is unknown or a value does not parse.
    """
    cfg = base if base is not None else ExperimentConfig()
    flat = _flatten(mapping)
    lattice = replace(cfg.lattice)
    schedule = replace(cfg.schedule)
    top: Dict[str, Any] = {}

    parsers = {
        "mode": ("top", str),
        "betas": ("top", _as_floats),
        "beta": ("top", _as_floats),
        "t": ("top", float),
        "p": ("top", int),
        "seed": ("top", int),
        "out": ("top", Path),
        "n_max": ("top", int),
        "quad_tol": ("top", float),
        "workers": ("top", int),
        "pattern": ("lattice", str),
        "lattice_size": ("lattice", int),
        "epsilon": ("lattice", float),
        "occupancy": ("lattice", _as_ints),
        "walks": ("schedule", int),
        "n_samples": ("schedule", int),
        "burn_in": ("schedule", _optional_int),
        "thin": ("schedule", int),
        "segment_fraction": ("schedule", float),
        "global_fraction": ("schedule", float),
        "chains": ("schedule", int),
        "block_size": ("schedule", _optional_int),
    }

    for key, raw in flat.items():
        if key not in parsers:
            raise ExperimentConfigError(f"unknown configuration key {key!r}")
        target, parse = parsers[key]
        try:
            value = parse(raw.strip() if isinstance(raw, str) else raw)
        except (TypeError, ValueError) as exc:
            raise ExperimentConfigError(f"cannot parse {key}={raw!r}: {exc}") from exc

        if target == "top":
            top["betas" if key == "beta" else key] = value
        elif target == "lattice":
            setattr(lattice, "size" if key == "lattice_size" else key, value)
        else:
            setattr(schedule, "n_samples" if key == "walks" else key, value)

    if "mode" in top:
        top["mode"] = top["mode"].strip().lower().replace("_", "-")
    lattice.pattern = lattice.pattern.strip().lower()
    return replace(cfg, lattice=lattice, schedule=schedule, **top)


def load_config(path: Path, base: Optional[ExperimentConfig] = None) -> ExperimentConfig:
    """
    Load an experiment configuration file.

    JSON is used when the file has a .json suffix or starts with '{';
    anything else is read as key=value lines through python-dotenv.

    Raises:
        ExperimentConfigError: If the file is missing or malformed.
    """
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise ExperimentConfigError(f"cannot read config file {path}: {exc}") from exc

    if path.suffix.lower() == ".json" or text.lstrip().startswith("{"):
        try:
            mapping = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ExperimentConfigError(f"invalid JSON in {path}: {exc}") from exc
        if not isinstance(mapping, dict):
            raise ExperimentConfigError(f"{path} must contain a JSON object")
    else:
        mapping = {k: v for k, v in dotenv_values(path).items() if v is not None}

    return config_from_mapping(mapping, base)

