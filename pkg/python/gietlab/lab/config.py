"""Experiment configuration.

A config is one JSON document mapped onto a tree of frozen dataclasses.
Precedence, lowest first: dataclass defaults, the JSON file, then
``--set key.path=value`` overrides (values parsed as JSON, falling back to
plain strings).

Example:

    {
      "system": {"permutation": [4, 3, 2, 1], "loop": "search", "max_len": 10},
      "shadowing": {"radius": 1e-3, "samples": 10},
      "seed": 7
    }
"""

from __future__ import annotations

import dataclasses
import json
import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Sequence, TypeVar, get_type_hints

from gietlab.combinatorics import Permutation, RauzyLoop, select_admissible_loop
from gietlab.exceptions import ConfigError, GietLabError

logger = logging.getLogger(__name__)

PRESETS: dict[str, tuple[tuple[int, ...], str]] = {
    "golden": ((2, 1), "bt"),
    "hyperelliptic4": ((4, 3, 2, 1), "ttbtbbtb"),
}

# Default shooting depths n_max.
PRESET_DEPTHS = {"golden": 14, "hyperelliptic4": 10}


@dataclass(frozen=True)
class SystemConfig:
    """Which periodic point of renormalisation to study.

    Either a ``preset`` or an explicit ``permutation`` with a ``loop`` code;
    ``loop = "search"`` selects the admissible loop of length at most
    ``max_len`` with the smallest Perron value.
    """

    preset: str | None = "golden"
    permutation: tuple[int, ...] | None = None
    loop: str | None = None
    max_len: int = 10

    def __post_init__(self) -> None:
        if self.permutation is not None:
            object.__setattr__(self, "permutation", tuple(int(s) for s in self.permutation))
            object.__setattr__(self, "preset", None)
        if self.preset is None and self.permutation is None:
            raise ConfigError("system needs a preset or a permutation", key="system")
        if self.preset is not None and self.preset not in PRESETS:
            raise ConfigError(f"Unknown preset {self.preset!r}", key="system.preset", value=self.preset)
        if self.permutation is not None and not self.loop:
            raise ConfigError("system.loop is required with a permutation", key="system.loop")
        if self.max_len <= 0:
            raise ConfigError("system.max_len must be positive", key="system.max_len", value=self.max_len)

    @property
    def name(self) -> str:
        if self.preset is not None:
            return self.preset
        assert self.permutation is not None
        return "p" + "".join(str(s) for s in self.permutation)


@dataclass(frozen=True)
class Tolerances:
    connection: float = 1e-12
    hyperbolicity: float = 1e-9
    fixed_point_c0: float = 1e-10
    fixed_point_c1: float = 1e-8
    cocycle: float = 1e-9
    reciprocal: float = 1e-8
    unit_gap: float = 1e-3
    delta_ratio: float = 0.05
    residual: float = 1e-5
    conjugacy: float = 1e-5
    growth: float = 0.05
    r_squared: float = 0.9
    shadow_r_squared: float = 0.95


@dataclass(frozen=True)
class Budgets:
    grid_size: int = 257
    depth: int = 8
    partition_floors: int = 2_000_000
    orbit_evaluations: int = 10_000_000
    workers: int = 1
    samples: int = 100


@dataclass(frozen=True)
class ShadowingConfig:
    """Shooting runs: ``radius`` bounds the stable coordinates, ``epsilon`` the escape ball.

    ``min_depth`` is the depth every E7 sample must reach to count as shadowed.
    """

    radius: float = 1e-3
    epsilon: float = 1e-2
    n_max: int | None = None
    samples: int = 10
    method: str = "auto"
    bump_amplitude: float = 1e-3
    cone_delta: float = 0.5
    lipschitz_pairs: int = 50
    min_depth: int = 8


@dataclass(frozen=True)
class CohomologyConfig:
    orbit_length: int = 100_000
    grid_size: int = 4097
    x0: float = 1e-7
    growth_threshold: float = 2.0
    ratio_levels: int = 6


@dataclass(frozen=True)
class ExperimentConfig:
    """Complete configuration of one experiment run."""

    system: SystemConfig = field(default_factory=SystemConfig)
    tolerances: Tolerances = field(default_factory=Tolerances)
    budgets: Budgets = field(default_factory=Budgets)
    shadowing: ShadowingConfig = field(default_factory=ShadowingConfig)
    cohomology: CohomologyConfig = field(default_factory=CohomologyConfig)
    seed: int = 0
    output_dir: str = "out"
    label: str | None = None

    def __post_init__(self) -> None:
        for section in (self.tolerances, self.shadowing, self.cohomology, self.budgets):
            for f in dataclasses.fields(section):
                value = getattr(section, f.name)
                if isinstance(value, (int, float)) and not isinstance(value, bool) and value <= 0:
                    raise ConfigError(
                        f"{f.name} must be positive, got {value!r}", key=f.name, value=value
                    )

    @property
    def run_label(self) -> str:
        return self.label or f"{self.system.name}-seed{self.seed}"

    @property
    def depth(self) -> int:
        """Shooting depth, preset-dependent unless configured."""
        if self.shadowing.n_max is not None:
            return self.shadowing.n_max
        return PRESET_DEPTHS.get(self.system.name, self.budgets.depth)

    def to_dict(self) -> dict[str, Any]:
        return dataclasses.asdict(self)


T = TypeVar("T")


def _build(cls: type[T], data: dict[str, Any], prefix: str = "") -> T:
    hints = get_type_hints(cls)
    names = {f.name for f in dataclasses.fields(cls)}  # type: ignore[arg-type]
    kwargs: dict[str, Any] = {}
    for key, value in data.items():
        path = f"{prefix}{key}"
        if key not in names:
            raise ConfigError(f"Unknown config key {path!r}", key=path, value=value)
        hint = hints[key]
        if dataclasses.is_dataclass(hint):
            if not isinstance(value, dict):
                raise ConfigError(f"{path} must be an object", key=path, value=value)
            value = _build(hint, value, prefix=f"{path}.")
        kwargs[key] = value
    try:
        return cls(**kwargs)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"Invalid value under {prefix or 'config'}: {exc}") from exc


def _parse_value(text: str) -> Any:
    try:
        return json.loads(text)
    except json.JSONDecodeError:
        return text


def apply_overrides(data: dict[str, Any], overrides: Sequence[str]) -> dict[str, Any]:
    """Apply ``key.path=value`` assignments to a nested dict (in place)."""
    for item in overrides:
        key, sep, raw = item.partition("=")
        if not sep or not key:
            raise ConfigError(f"Override {item!r} is not of the form key.path=value", key=item)
        *parents, leaf = key.strip().split(".")
        node = data
        for part in parents:
            child = node.setdefault(part, {})
            if not isinstance(child, dict):
                raise ConfigError(f"{part!r} is not a section", key=key)
            node = child
        node[leaf] = _parse_value(raw.strip())
    return data


def load_config(path: str | Path | None = None, overrides: Sequence[str] = ()) -> ExperimentConfig:
    """Defaults, then the JSON file, then overrides.

    Raises:
        ConfigError: On unreadable JSON, unknown keys or invalid values.
    """
    data: dict[str, Any] = {}
    if path is not None:
        try:
            data = json.loads(Path(path).read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"Cannot read config {path}: {exc}", key=str(path)) from exc
        if not isinstance(data, dict):
            raise ConfigError("A config must be a JSON object", key=str(path))
    config = _build(ExperimentConfig, apply_overrides(data, overrides))
    logger.info("config system=%s seed=%d label=%s", config.system.name, config.seed, config.run_label)
    return config


def resolve_system(system: SystemConfig) -> RauzyLoop:
    """The loop named by a system selector.

    Raises:
        ConfigError: If the permutation or loop is invalid, or no loop qualifies.
    """
    if system.preset is not None:
        sigma, code = PRESETS[system.preset]
        return RauzyLoop.from_code(Permutation(sigma), code)
    assert system.permutation is not None and system.loop is not None
    try:
        pi = Permutation(system.permutation)
        pi.require_irreducible()
        if system.loop == "search":
            loop, _ = select_admissible_loop(pi, system.max_len)
            return loop
        return RauzyLoop.from_code(pi, system.loop)
    except GietLabError as exc:
        raise ConfigError(str(exc), key="system", value=system.permutation) from exc
