"""Experiment configuration: defaults, JSON loading, schema validation, overrides."""

from __future__ import annotations

import dataclasses
import json
import os
from dataclasses import dataclass, field
from importlib import resources
from typing import Any

import jsonschema

from pinpat.errors import ConfigError

# Fields that only steer execution; they are kept out of the deterministic
# config echo so that outputs do not depend on them.
EXECUTION_FIELDS = ("threads", "out")


@dataclass
class ExperimentConfig:
    experiment: str = ""
    k: int = 3
    d: int = 2
    epsilon0: float = 1.0
    C_d: float = 1.0
    eta: float = 0.05
    prime: int | None = None
    prime_floor: int = 11
    h: float = 0.02
    tol: float | None = None
    r_grid: dict = field(default_factory=lambda: {"start": 0.1, "stop": 0.9, "count": 40, "scale": "absolute"})
    pins: int = 3
    pin_norm: list = field(default_factory=lambda: [0.0, 0.5])
    seed: int = 0
    threads: int = 1
    out: str = "pinpat-out"

    source: str = "grid-disk"
    radius: float = 1.0
    point_file: str | None = None
    ball_radius: float = 0.3
    lattice_spacing: float = 1.0
    balls: int = 12
    patterns: list | None = None
    path: str = "auto"

    N_min: int = 2
    N_max: int = 40
    m_values: list = field(default_factory=lambda: [2, 3, 4])
    exact_limit: int = 40

    torus_primes: list = field(default_factory=lambda: [11, 101, 499])
    search_iterations: int = 200
    random_sets: int = 100
    perturbations: int = 50

    pattern: str = "equilateral"
    shrink_exponent: int = 11
    slack_exponent: int = 10
    mc_samples: int = 1_000_000
    abundance: bool = True

    dims: list = field(default_factory=lambda: [2, 3, 4, 5])
    nodes: int = 48
    area_tolerance: float = 1e-5
    volume_tolerance: float = 1e-4

    @property
    def tolerance(self) -> float:
        """Detector tolerance; defaults to twice the grid pitch."""
        return 2.0 * self.h if self.tol is None else float(self.tol)

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)

    def echo(self) -> dict:
        """The config as recorded in reports (execution-only fields removed)."""
        d = self.to_dict()
        for k in EXECUTION_FIELDS:
            d.pop(k, None)
        return d


# per-experiment defaults layered over the dataclass defaults
EXPERIMENT_DEFAULTS: dict[str, dict] = {
    "rm-table": {},
    "torus-verify": {"k": 3},
    "cone-demo": {
        "h": 0.02,
        "pins": 10,
        "pin_norm": [0.25, 1.0],
        "r_grid": {"start": 1.0, "stop": 10.0, "count": 2000, "scale": "cone_R"},
    },
    "catalog": {},
    "pinned-scan": {"pins": 3, "patterns": None},
    "sphere-check": {
        "source": "cone",
        "h": 0.05,
        "radius": 20.0,
        "r_grid": {"start": 0.5, "stop": 19.5, "count": 60, "scale": "absolute"},
    },
    "distance-density": {"pins": 3},
}


def _schema() -> dict:
    text = resources.files("pinpat").joinpath("config.schema.json").read_text(encoding="utf-8")
    return json.loads(text)


def validate(data: dict) -> None:
    try:
        jsonschema.validate(data, _schema())
    except jsonschema.ValidationError as exc:
        where = "/".join(str(p) for p in exc.absolute_path) or "<root>"
        raise ConfigError(f"config {where}: {exc.message}") from None


def _semantic_checks(cfg: ExperimentConfig) -> None:
    if cfg.N_min > cfg.N_max:
        raise ConfigError("N_min must not exceed N_max")
    g = cfg.r_grid
    if g["start"] >= g["stop"] and g["count"] > 1:
        raise ConfigError("r_grid.start must be below r_grid.stop")
    if cfg.pin_norm[0] > cfg.pin_norm[1]:
        raise ConfigError("pin_norm must be [low, high]")
    if cfg.source == "file" and not cfg.point_file:
        raise ConfigError("source 'file' needs point_file")


def load_config(experiment: str, path: str | None = None, overrides: dict | None = None) -> ExperimentConfig:
    """Defaults, then the JSON file at ``path``, then ``overrides``.

    ``threads`` falls back to the PINPAT_THREADS environment variable when
    neither the file nor the overrides set it.
    """
    data: dict[str, Any] = dict(EXPERIMENT_DEFAULTS.get(experiment, {}))
    if path:
        try:
            with open(path, encoding="utf-8") as fh:
                user = json.load(fh)
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from None
        if not isinstance(user, dict):
            raise ConfigError("config must be a JSON object")
        validate(user)
        data.update(user)
    for key, val in (overrides or {}).items():
        if val is None:
            continue
        if key == "r_grid" and isinstance(val, dict):
            merged = dict(data.get("r_grid", ExperimentConfig().r_grid))
            merged.update(val)
            val = merged
        data[key] = val
    if "threads" not in data and os.environ.get("PINPAT_THREADS"):
        try:
            data["threads"] = int(os.environ["PINPAT_THREADS"])
        except ValueError:
            raise ConfigError("PINPAT_THREADS must be an integer") from None
    data["experiment"] = experiment
    base = ExperimentConfig().to_dict()
    base.update(data)
    base["r_grid"] = {**ExperimentConfig().r_grid, **base["r_grid"]}
    validate(base)
    cfg = ExperimentConfig(**base)
    _semantic_checks(cfg)
    return cfg
