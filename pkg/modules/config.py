"""
PolarMap v1.0 - Run Configuration
Defaults < key=value config file < command-line flags, validated before any computation
"""

import hashlib
import json
import logging
import math
from dataclasses import dataclass, field, fields, replace
from pathlib import Path
from typing import Any, Dict, Optional, Tuple, Union

from dotenv import dotenv_values

from .errors import ConfigError, InvalidShapeError, PolarMapError
from .geometry import BoundaryCurve, ShapeSpec, make_shape, parse_shape
from .gpt import MAX_ORDER, material_lambda

logger = logging.getLogger(__name__)

FORMATS = ("json", "csv", "svg")
# Keys that do not change any computed number
NON_COMPUTATIONAL = ("out", "formats", "workers", "dump_matrices")


@dataclass(frozen=True)
class RunConfig:
    """Configuration for one PolarMap command"""

    shape: str
    nodes: int = 3072
    k: float = 0.0
    order: Optional[int] = None
    truncation: Optional[Tuple[int, ...]] = None
    modes: Union[int, str, None] = None
    out: str = "output"
    formats: Tuple[str, ...] = FORMATS
    center: Optional[Tuple[float, float]] = None
    rotation: Optional[float] = None
    scale: Optional[float] = None
    workers: int = 1
    dump_matrices: bool = False
    samples: int = 2048
    _spec: Optional[ShapeSpec] = field(default=None, repr=False, compare=False)

    @property
    def gpt_order(self) -> int:
        if self.order is not None:
            return self.order
        return max(6, max(self.truncation or (6,)))

    @property
    def mode_count(self) -> Optional[int]:
        """NP modes kept by eigs; None keeps every mode"""
        if self.modes == "all":
            return None
        if self.modes is None:
            return min(64, self.nodes // 4)
        return int(self.modes)

    @property
    def lam(self) -> float:
        return material_lambda(self.k)

    @property
    def spec(self) -> ShapeSpec:
        if self._spec is None:
            raise ConfigError("Configuration has not been validated")
        return self._spec

    def curve(self) -> BoundaryCurve:
        return make_shape(self.spec)

    def validate(self) -> "RunConfig":
        """
        Check every field and resolve the shape descriptor.

        Returns:
            Copy with the parsed ShapeSpec attached

        Raises:
            ConfigError: first invalid field found
        """
        try:
            spec = parse_shape(self.shape)
        except InvalidShapeError as e:
            raise ConfigError(str(e)) from e
        spec = spec.with_transform(
            center=None if self.center is None else complex(*self.center),
            rotation=None if self.rotation is None else math.radians(self.rotation),
            scale=self.scale,
        )
        try:
            make_shape(spec)
        except InvalidShapeError as e:
            raise ConfigError(f"Invalid shape '{self.shape}': {e}") from e

        if self.nodes < 16 or self.nodes % 2:
            raise ConfigError(f"--nodes must be an even integer >= 16, got {self.nodes}")
        try:
            material_lambda(self.k)
        except PolarMapError as e:
            raise ConfigError(f"--k: {e}") from e
        if self.truncation is not None and not self.truncation:
            raise ConfigError("--truncation needs at least one order")
        if self.truncation and min(self.truncation) < 1:
            raise ConfigError(f"--truncation orders must be >= 1, got {list(self.truncation)}")
        order = self.gpt_order
        if order < 1 or order > MAX_ORDER:
            raise ConfigError(f"--order must be in 1..{MAX_ORDER}, got {order}")
        if order * 8 > self.nodes:
            raise ConfigError(f"--order {order} needs --nodes >= {8 * order}, got {self.nodes}")
        # default truncation follows the GPT order
        truncation = self.truncation or tuple(range(1, min(6, order) + 1))
        if max(truncation) > order:
            raise ConfigError(f"--truncation {max(truncation)} exceeds GPT order {order}")
        if isinstance(self.modes, int) and not 0 <= self.modes <= self.nodes // 4:
            raise ConfigError(f"--modes must be in 0..{self.nodes // 4}, got {self.modes}")
        unknown = [f for f in self.formats if f not in FORMATS]
        if unknown or not self.formats:
            raise ConfigError(f"--format must be a subset of {','.join(FORMATS)}, got {','.join(self.formats)}")
        if self.workers < 1:
            raise ConfigError(f"--workers must be >= 1, got {self.workers}")
        if self.samples < 16:
            raise ConfigError(f"--samples must be >= 16, got {self.samples}")
        return replace(self, truncation=tuple(sorted(set(truncation))), _spec=spec)

    def to_dict(self) -> Dict[str, Any]:
        """Resolved values in a fixed key order"""
        spec = self.spec
        return {
            "shape": spec.describe(),
            "center": [spec.center.real, spec.center.imag],
            "rotation_deg": math.degrees(spec.rotation),
            "scale": spec.scale,
            "nodes": self.nodes,
            "k": self.k,
            "lambda": self.lam,
            "order": self.gpt_order,
            "truncation": list(self.truncation),
            "modes": "all" if self.mode_count is None else self.mode_count,
            "samples": self.samples,
            "out": self.out,
            "formats": list(self.formats),
            "workers": self.workers,
            "dump_matrices": self.dump_matrices,
        }

    def config_hash(self) -> str:
        """SHA-256 of the canonical computational settings"""
        payload = {k: v for k, v in self.to_dict().items() if k not in NON_COMPUTATIONAL}
        blob = json.dumps(payload, sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(blob.encode("utf-8")).hexdigest()


def _int(key: str, value: str) -> int:
    try:
        return int(value)
    except (TypeError, ValueError):
        raise ConfigError(f"{key} must be an integer, got {value!r}")


def _float(key: str, value: str) -> float:
    try:
        return float(value)
    except (TypeError, ValueError):
        raise ConfigError(f"{key} must be a number, got {value!r}")


def _list(value) -> Tuple[str, ...]:
    if isinstance(value, (list, tuple)):
        return tuple(str(v).strip() for v in value)
    return tuple(v.strip() for v in str(value).split(",") if v.strip())


def _bool(key: str, value) -> bool:
    if isinstance(value, bool):
        return value
    text = str(value).strip().lower()
    if text in ("1", "true", "yes", "on"):
        return True
    if text in ("0", "false", "no", "off", ""):
        return False
    raise ConfigError(f"{key} must be true/false, got {value!r}")


def _coerce(key: str, value: Any) -> Any:
    """Turn a raw string (or CLI value) into the RunConfig field type"""
    if value is None:
        return None
    if key in ("nodes", "workers", "samples"):
        return _int(key, value)
    if key in ("k", "rotation", "scale"):
        return _float(key, value)
    if key == "order":
        return None if str(value).lower() in ("auto", "none", "") else _int(key, value)
    if key == "modes":
        return "all" if str(value).lower() in ("all", "none") else _int(key, value)
    if key == "truncation":
        return tuple(_int(key, v) for v in _list(value))
    if key == "formats":
        return tuple(v.lower() for v in _list(value))
    if key == "center":
        parts = _list(value)
        if len(parts) != 2:
            raise ConfigError(f"center must be 'x,y', got {value!r}")
        return (_float(key, parts[0]), _float(key, parts[1]))
    if key == "dump_matrices":
        return _bool(key, value)
    return str(value)


_ALIASES = {"format": "formats", "nodes_per_component": "nodes", "n": "truncation"}
_KEYS = tuple(f.name for f in fields(RunConfig) if not f.name.startswith("_"))


def normalize_key(key: str) -> str:
    key = key.strip().lower().lstrip("-").replace("-", "_")
    return _ALIASES.get(key, key)


def load_config_file(path: str) -> Dict[str, Any]:
    """
    Parse a key=value file (flag names as keys, '#' comments allowed).

    Raises:
        ConfigError: missing file or unknown key
    """
    file_path = Path(path)
    if not file_path.is_file():
        raise ConfigError(f"Config file not found: {file_path}")
    raw = dotenv_values(file_path)
    values = {}
    for key, value in raw.items():
        name = normalize_key(key)
        if name not in _KEYS:
            raise ConfigError(f"Unknown key '{key}' in {file_path}")
        values[name] = _coerce(name, value)
    logger.debug(f"Loaded {len(values)} setting(s) from {file_path}")
    return values


def build_config(overrides: Optional[Dict[str, Any]] = None, config_file: Optional[str] = None) -> RunConfig:
    """Merge defaults, an optional config file and flag overrides (None means 'not given'), then validate"""
    merged: Dict[str, Any] = {}
    if config_file:
        merged.update(load_config_file(config_file))
    for key, value in (overrides or {}).items():
        name = normalize_key(key)
        if name not in _KEYS:
            raise ConfigError(f"Unknown setting '{key}'")
        if value is not None:
            merged[name] = _coerce(name, value)
    if "shape" not in merged:
        raise ConfigError("A shape is required (--shape or shape= in the config file)")
    return RunConfig(**merged).validate()
