"""Run configuration: one versioned JSON document per run."""

from __future__ import annotations

import hashlib
import json
import math
from dataclasses import asdict, dataclass, field, replace
from typing import Optional

from .errors import ConfigError, InputError
from .ifs import IfsSpec, validate_ifs

SCHEMA = 1
GRID_MIN, GRID_MAX = 2, 10**5
_TOP_KEYS = {"schema", "spec", "alpha_grid", "spectrum", "simulate", "converge", "cantor", "output"}


@dataclass(frozen=True)
class SimulateBlock:
    replicas: int = 20
    depth: int = 6
    horizon: Optional[int] = None
    tail_start: Optional[int] = None
    seed0: int = 0
    horizon_rule: str = "single"
    extra_levels: int = 6


@dataclass(frozen=True)
class ConvergeBlock:
    n_list: tuple[int, ...] = (50, 100, 200, 400)


@dataclass(frozen=True)
class CantorBlock:
    gamma: Optional[float] = None
    n_min: int = 2
    levels: int = 2
    seeds: int = 500
    seed0: int = 0
    max_orbit: int = 20_000_000


@dataclass(frozen=True)
class OutputBlock:
    format: str = "csv"
    path: Optional[str] = None


@dataclass(frozen=True)
class RunConfig:
    lambdas: tuple[float, ...]
    probs: tuple[float, ...]
    alpha_grid: tuple[float, ...]
    grid_spec: object = field(compare=False)   # the grid as written: dict or list
    simulate: SimulateBlock = SimulateBlock()
    converge: ConvergeBlock = ConvergeBlock()
    cantor: CantorBlock = CantorBlock()
    output: OutputBlock = OutputBlock()

    @property
    def spec(self) -> IfsSpec:
        return validate_ifs(self.lambdas, self.probs)

    def to_dict(self) -> dict:
        return {
            "schema": SCHEMA,
            "spec": {"lambdas": list(self.lambdas), "probs": list(self.probs)},
            "alpha_grid": self.grid_spec,
            "spectrum": {},
            "simulate": asdict(self.simulate),
            "converge": {"n_list": list(self.converge.n_list)},
            "cantor": asdict(self.cantor),
            "output": asdict(self.output),
        }

    def canonical_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, separators=(",", ":"))

    def digest(self) -> str:
        return hashlib.sha256(self.canonical_json().encode()).hexdigest()

    def with_seed(self, seed: Optional[int]) -> "RunConfig":
        if seed is None:
            return self
        return replace(self, simulate=replace(self.simulate, seed0=seed),
                       cantor=replace(self.cantor, seed0=seed))


def _block(raw: dict, name: str, cls):
    data = raw.get(name) or {}
    if not isinstance(data, dict):
        raise ConfigError(f"block {name!r} must be an object")
    known = set(cls.__dataclass_fields__)
    extra = set(data) - known
    if extra:
        raise ConfigError(f"unknown keys in {name!r}: {sorted(extra)}")
    try:
        return cls(**data)
    except TypeError as exc:
        raise ConfigError(f"bad {name!r} block: {exc}") from None


def _grid(raw) -> tuple[float, ...]:
    if isinstance(raw, list):
        values = [float(x) for x in raw]
    elif isinstance(raw, dict):
        try:
            start, stop, count = float(raw["start"]), float(raw["stop"]), int(raw["count"])
        except (KeyError, TypeError, ValueError) as exc:
            raise ConfigError(f"alpha_grid needs start, stop, count: {exc}") from None
        if not GRID_MIN <= count <= GRID_MAX:
            raise ConfigError(f"alpha_grid count {count} outside [{GRID_MIN}, {GRID_MAX}]")
        values = [start + (stop - start) * i / (count - 1) for i in range(count)]
    else:
        raise ConfigError("alpha_grid must be an object or a list")
    if not GRID_MIN <= len(values) <= GRID_MAX:
        raise ConfigError(f"alpha_grid has {len(values)} points, need {GRID_MIN}..{GRID_MAX}")
    if any(not math.isfinite(a) or a <= 0.0 for a in values):
        raise ConfigError("alpha_grid values must be positive and finite")
    return tuple(values)


def parse_config(raw: dict) -> RunConfig:
    if not isinstance(raw, dict):
        raise ConfigError("config must be a JSON object")
    if raw.get("schema") != SCHEMA:
        raise ConfigError(f"unsupported schema {raw.get('schema')!r}, expected {SCHEMA}")
    extra = set(raw) - _TOP_KEYS
    if extra:
        raise ConfigError(f"unknown top-level keys: {sorted(extra)}")
    spec = raw.get("spec")
    if not isinstance(spec, dict) or "lambdas" not in spec or "probs" not in spec:
        raise ConfigError("spec block needs lambdas and probs")
    try:
        validated = validate_ifs(spec["lambdas"], spec["probs"])
    except InputError:
        raise
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"bad spec: {exc}") from None
    if "alpha_grid" not in raw:
        raise ConfigError("alpha_grid is required")
    grid = _grid(raw["alpha_grid"])
    conv = _block(raw, "converge", ConvergeBlock)
    conv = ConvergeBlock(tuple(int(n) for n in conv.n_list))
    out = _block(raw, "output", OutputBlock)
    if out.format not in ("csv", "json"):
        raise ConfigError(f"output format {out.format!r} must be csv or json")
    sim = _block(raw, "simulate", SimulateBlock)
    if sim.horizon_rule not in ("single", "levels", "fixed"):
        raise ConfigError(f"unknown horizon_rule {sim.horizon_rule!r}")
    if sim.replicas < 1 or sim.depth < 1:
        raise ConfigError("simulate needs replicas >= 1 and depth >= 1")
    return RunConfig(validated.lambdas, validated.probs, grid, raw["alpha_grid"],
                     sim, conv, _block(raw, "cantor", CantorBlock), out)


def load_config(path: str) -> RunConfig:
    with open(path, "r", encoding="utf-8") as fh:
        text = fh.read()
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config is not valid JSON: {exc}") from None
    return parse_config(raw)
