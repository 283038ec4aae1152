"""YAML run configuration with defaults."""
import copy
from dataclasses import dataclass
import math
from pathlib import Path

import yaml

from .errors import ConfigError
from .pattern_aware import AngularGrid, PatternAwareConfig
from .scan_oracle import SensorSpec, frontal_plate

DEFAULTS = {
    "dataset_root": None,
    "split_file": None,
    "classes": ["Car", "Pedestrian", "Cyclist"],
    "seed": 0,
    "workers": 1,
    "output_dir": "output",
    "database": {
        "path": None,  # defaults to <output_dir>/gt_database
        "min_points": {"Car": 5, "Pedestrian": 5, "Cyclist": 5},
    },
    "sampling": {
        "sample_groups": {"Car": 15, "Pedestrian": 10, "Cyclist": 10},
    },
    "pattern_aware": {
        "enabled": True,
        "grid": {"W": 512, "H": 64, "theta_min_deg": -180.0, "theta_max_deg": 180.0,
                 "phi_min_deg": -24.8, "phi_max_deg": 2.0},
        "apply_probability": 0.4,
        "relocation_factor": 2,
        "min_points": {"Car": 5, "Pedestrian": 200, "Cyclist": 200},
        "relocated_range": [20.0, 70.0],
    },
    "baselines": {
        "frustum_dropout": {"enabled": False, "p": 0.3},
        "frustum_noise": {"enabled": False, "sigma": 0.02},
        "random_drop": {"enabled": False, "p": 0.3},
        "global": {"enabled": False, "flip": True, "rotation_range_deg": [-45.0, 45.0],
                   "scale_range": [0.95, 1.05], "translation_std": 0.0},
    },
    "evaluation": {
        "classes": ["Car"],
        "bins": 10,
        "iou_thresholds": {"Car": 0.7, "Pedestrian": 0.5, "Cyclist": 0.5},
        "recall_positions": 40,
    },
    "analysis": {"class": "Car", "samples": 5000, "bins": 10},
    "simulate": {
        "sensor": {"vertical_resolution": 0.4, "horizontal_resolution": 0.17,
                   "fov": [-24.8, 2.0], "max_range": 120.0},
        "target": {"distance": 15.0, "width": 2.0, "height": 1.5, "center_z": -0.9,
                   "thickness": 0.02, "azimuth_deg": 0.0},
        "factor": 2,
        "count_bounds": [0.85, 1.15],
    },
}


def _merge(base, override, path=""):
    out = copy.deepcopy(base)
    for key, val in (override or {}).items():
        if key not in base:
            raise ConfigError(f"unknown config key {path}{key}")
        if isinstance(base[key], dict) and key not in ("min_points", "sample_groups", "iou_thresholds"):
            if not isinstance(val, dict):
                raise ConfigError(f"{path}{key} must be a mapping")
            out[key] = _merge(base[key], val, f"{path}{key}.")
        else:
            out[key] = val
    return out


@dataclass
class RunConfig:
    raw: dict
    base_dir: Path

    def __getitem__(self, key):
        return self.raw[key]

    def path(self, key):
        val = self.raw[key]
        if val is None:
            raise ConfigError(f"config needs {key}")
        p = Path(val)
        return p if p.is_absolute() else self.base_dir / p

    @property
    def output_dir(self):
        return self.path("output_dir")

    @property
    def database_dir(self):
        db = self.raw["database"]["path"]
        if db is None:
            return self.output_dir / "gt_database"
        p = Path(db)
        return p if p.is_absolute() else self.base_dir / p

    @property
    def seed(self):
        return int(self.raw["seed"])

    def pattern_aware(self):
        pa = self.raw["pattern_aware"]
        g = pa["grid"]
        try:
            grid = AngularGrid(math.radians(g["theta_min_deg"]), math.radians(g["theta_max_deg"]), int(g["W"]),
                               math.radians(g["phi_min_deg"]), math.radians(g["phi_max_deg"]), int(g["H"]))
            return PatternAwareConfig(
                grid=grid,
                apply_probability=float(pa["apply_probability"]) if pa["enabled"] else 0.0,
                relocation_factor=pa["relocation_factor"],
                min_points_per_class=dict(pa["min_points"]),
                relocated_range=tuple(float(v) for v in pa["relocated_range"]),
            )
        except (TypeError, ValueError, KeyError) as err:
            raise ConfigError(f"invalid pattern_aware block: {err}") from None

    def sensor(self):
        s = self.raw["simulate"]["sensor"]
        return SensorSpec(float(s["vertical_resolution"]), float(s["horizontal_resolution"]),
                          float(s["fov"][0]), float(s["fov"][1]), float(s["max_range"]))

    def target(self):
        t = self.raw["simulate"]["target"]
        return frontal_plate(float(t["distance"]), float(t["width"]), float(t["height"]),
                             float(t["center_z"]), float(t["thickness"]), math.radians(t["azimuth_deg"]))


def load_config(path=None, overrides=None):
    """Read a YAML config (optional) and apply top-level ``overrides``."""
    data = {}
    base_dir = Path.cwd()
    if path is not None:
        path = Path(path)
        try:
            data = yaml.safe_load(path.read_text()) or {}
        except yaml.YAMLError as err:
            raise ConfigError(f"{path}: {err}") from None
        if not isinstance(data, dict):
            raise ConfigError(f"{path}: top level must be a mapping")
        base_dir = path.resolve().parent
    for key, val in (overrides or {}).items():
        if val is not None:
            data[key] = val
    raw = _merge(DEFAULTS, data)
    seed = raw["seed"]
    if not isinstance(seed, int) or not 0 <= seed < 2 ** 64:
        raise ConfigError(f"seed must be an unsigned 64-bit integer, got {seed!r}")
    return RunConfig(raw, base_dir)
