import json
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Any, Dict, List, Optional, Tuple

from .errors import ConfigError

MAP_NAMES = ("cat", "perturbed_cat", "standard", "rotation", "linear_saddle", "affine_fixture")

DEFAULT_BUDGETS = {
    "branch_candidates": 400,
    "n_min": 1,
    "m_max": 20,
    "repair_iterations": 4,
    "seeds": 256,
    "refine_depth": 4,
    "max_word_len": 6,
    "refine_cap": 2 ** 20,
    "seed_word_length": 10,
}

DEFAULT_RECTANGLE = {
    "center": None,
    "h": 1.0,
    "gamma": 0.3,
    "ell0": 10.0,
    "horizon": 20,
    "chi": 0.5,
    "samples": 33,
}


@dataclass(frozen=True)
class ExperimentConfig:
    """
    Validated experiment description. Build it with ``from_dict`` or
    ``from_file``; every violation raises ConfigError naming the field path.
    """
    map_name: str
    map_parameters: Dict[str, float]
    family: Dict[str, Any]
    reference: Dict[str, Any]
    schedule: Tuple[Tuple[float, int], ...]
    rectangle: Dict[str, Any]
    budgets: Dict[str, int]
    seed: int = 0
    out: str = "out"
    threads: int = 1
    source: Optional[str] = None

    @classmethod
    def from_file(cls, path: str) -> "ExperimentConfig":
        try:
            data = json.loads(Path(path).read_text(encoding="utf-8"))
        except FileNotFoundError:
            raise ConfigError("<file>", f"config '{path}' not found")
        except json.JSONDecodeError as e:
            raise ConfigError("<file>", f"invalid JSON: {e}")
        return replace(cls.from_dict(data), source=str(path))

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "ExperimentConfig":
        if not isinstance(data, dict):
            raise ConfigError("<root>", "config must be a JSON object")

        map_spec = _require(data, "map", dict)
        name = _require(map_spec, "name", str, "map.name")
        if name not in MAP_NAMES:
            raise ConfigError("map.name", f"unknown map '{name}', expected one of {MAP_NAMES}")
        params = map_spec.get("parameters", {})
        if not isinstance(params, dict):
            raise ConfigError("map.parameters", "must be an object")
        for key, value in params.items():
            if not isinstance(value, (int, float)):
                raise ConfigError(f"map.parameters.{key}", "must be a number")

        family = data.get("family", {"k_max": 1})
        if "modes" in family:
            modes = family["modes"]
            if not isinstance(modes, list) or not modes:
                raise ConfigError("family.modes", "must be a non-empty list of [k1, k2]")
            for i, k in enumerate(modes):
                if not (isinstance(k, list) and len(k) == 2 and all(isinstance(v, int) for v in k)):
                    raise ConfigError(f"family.modes[{i}]", "must be a pair of integers")
        else:
            k_max = family.get("k_max", 1)
            if not isinstance(k_max, int) or k_max < 1:
                raise ConfigError("family.k_max", "must be a positive integer")

        reference = dict(data.get("reference", {"provenance": "analytic"}))
        if reference.get("provenance") not in ("analytic", "long-orbit", "fixture"):
            raise ConfigError("reference.provenance", "must be analytic, long-orbit or fixture")
        if reference["provenance"] == "long-orbit":
            length = reference.get("length", 10 ** 7)
            if not isinstance(length, int) or length < 1:
                raise ConfigError("reference.length", "must be a positive integer")

        schedule = _parse_schedule(data.get("schedule"))
        k_max = family.get("k_max", 1)
        family_size = len(family["modes"]) if "modes" in family else ((2 * k_max + 1) ** 2 - 1) // 2
        if schedule and schedule[-1][1] > family_size:
            raise ConfigError("schedule", f"s = {schedule[-1][1]} exceeds the {family_size} test functions")

        rectangle = dict(DEFAULT_RECTANGLE)
        rectangle.update(data.get("rectangle", {}))
        for key in ("h", "gamma", "ell0", "chi"):
            _number(rectangle, key, "rectangle")
        for key in ("horizon", "samples"):
            if not isinstance(rectangle[key], int) or isinstance(rectangle[key], bool) or rectangle[key] < 1:
                raise ConfigError(f"rectangle.{key}", "must be a positive integer")
        center = rectangle["center"]
        if center is not None and not (isinstance(center, list) and len(center) == 2
                                       and all(_is_number(c) for c in center)):
            raise ConfigError("rectangle.center", "must be null or a pair of numbers")
        if not 0 < float(rectangle["h"]) <= 1:
            raise ConfigError("rectangle.h", "must lie in (0, 1]")
        if not 0 < float(rectangle["gamma"]) < 0.5:
            raise ConfigError("rectangle.gamma", "must lie in (0, 1/2)")
        if float(rectangle["ell0"]) < 1:
            raise ConfigError("rectangle.ell0", "must be >= 1")

        budgets = dict(DEFAULT_BUDGETS)
        budgets.update(data.get("budgets", {}))
        for key, value in budgets.items():
            if not isinstance(value, int) or value < 0:
                raise ConfigError(f"budgets.{key}", "must be a non-negative integer")
        for key in ("m_max", "n_min", "refine_depth", "max_word_len", "refine_cap", "seed_word_length"):
            if budgets[key] < 1:
                raise ConfigError(f"budgets.{key}", "must be positive")

        seed = data.get("seed", 0)
        if not isinstance(seed, int):
            raise ConfigError("seed", "must be an integer")
        threads = data.get("threads", 1)
        if not isinstance(threads, int) or threads < 1:
            raise ConfigError("threads", "must be a positive integer")

        return cls(
            map_name=name,
            map_parameters={k: float(v) for k, v in params.items()},
            family=dict(family),
            reference=reference,
            schedule=schedule,
            rectangle=rectangle,
            budgets=budgets,
            seed=seed,
            out=str(data.get("out", "out")),
            threads=threads,
        )

    def with_overrides(self, seed: Optional[int] = None, out: Optional[str] = None,
                       threads: Optional[int] = None) -> "ExperimentConfig":
        changes = {}
        if seed is not None:
            changes["seed"] = seed
        if out is not None:
            changes["out"] = out
        if threads is not None:
            if threads < 1:
                raise ConfigError("threads", "must be a positive integer")
            changes["threads"] = threads
        return replace(self, **changes)

    def to_dict(self) -> Dict[str, Any]:
        return {
            "map": {"name": self.map_name, "parameters": self.map_parameters},
            "family": self.family,
            "reference": self.reference,
            "schedule": [list(stage) for stage in self.schedule],
            "rectangle": self.rectangle,
            "budgets": self.budgets,
            "seed": self.seed,
            "threads": self.threads,
        }


def _require(data: dict, key: str, kind, path: Optional[str] = None):
    path = path or key
    if key not in data:
        raise ConfigError(path, "is required")
    if not isinstance(data[key], kind):
        raise ConfigError(path, f"must be of type {kind.__name__}")
    return data[key]


def _is_number(value) -> bool:
    return isinstance(value, (int, float)) and not isinstance(value, bool)


def _number(data: dict, key: str, section: str) -> float:
    if not _is_number(data[key]):
        raise ConfigError(f"{section}.{key}", "must be a number")
    return float(data[key])


def _parse_schedule(raw) -> Tuple[Tuple[float, int], ...]:
    if raw is None:
        raise ConfigError("schedule", "is required")
    if not isinstance(raw, list):
        raise ConfigError("schedule", "must be a list of [rho, s] pairs")
    stages: List[Tuple[float, int]] = []
    for i, stage in enumerate(raw):
        if isinstance(stage, dict):
            rho, s = stage.get("rho"), stage.get("s")
        elif isinstance(stage, list) and len(stage) == 2:
            rho, s = stage
        else:
            raise ConfigError(f"schedule[{i}]", "must be [rho, s] or {rho, s}")
        if not isinstance(rho, (int, float)) or rho <= 0:
            raise ConfigError(f"schedule[{i}].rho", "must be a positive number")
        if not isinstance(s, int) or s < 1:
            raise ConfigError(f"schedule[{i}].s", "must be a positive integer")
        if stages and not rho < stages[-1][0]:
            raise ConfigError(f"schedule[{i}].rho", "schedule rho must be strictly decreasing")
        if stages and s < stages[-1][1]:
            raise ConfigError(f"schedule[{i}].s", "schedule s must be nondecreasing")
        stages.append((float(rho), int(s)))
    return tuple(stages)
