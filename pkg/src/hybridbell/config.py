"""Experiment configuration: TOML files, dotted overrides and validation.

A config is a nested mapping with one required top-level key, ``experiment``.
Every other key must already exist in that experiment's defaults; values
are merged over the defaults.  Sweep axes are either explicit lists or
``{start, stop, num}`` tables.
"""

from __future__ import annotations

import copy
import json
import os
from dataclasses import dataclass
from pathlib import Path

import numpy as np

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib

from .errors import ConfigError

OUTPUT_ENV = "HYBRIDBELL_OUTPUT_DIR"
DEFAULT_OUTPUT = "results"

_T10 = {"start": 0.0, "stop": 10.0, "num": 201}
_T20 = {"start": 0.0, "stop": 20.0, "num": 201}
_T40 = {"start": 0.0, "stop": 40.0, "num": 400}

_NUMERICS = {"cutoff": 0, "tail_tol": 1e-10, "q_range": [0, 1, 2, 3, 4, 5]}
_DYNAMICS = {"lam": 1.0, "omega0": 0.0, "picture": "interaction"}
_DISORDER = {"lambda_bar": 1.0, "sigma_lambda": [0.1], "n_realizations": 7000, "seed": 20240607, "workers": 0}
_DETECT = {"window": 50, "tol": 0.02}

DEFAULTS = {
    "fock_dynamics": {
        "state": {"k": [0, 4, 8]},
        "dynamics": _DYNAMICS,
        "sweep": {"t": _T10},
        "numerics": _NUMERICS,
    },
    "smsv_dynamics": {
        "state": {"r": [0.2, 1.0], "theta": 0.0},
        "dynamics": _DYNAMICS,
        "sweep": {"t": _T10},
        "numerics": _NUMERICS,
    },
    "coherent_heatmap": {
        "state": {},
        "dynamics": _DYNAMICS,
        "sweep": {"alpha": {"start": 0.0, "stop": 2.0, "num": 41}, "t": _T20},
        "numerics": _NUMERICS,
    },
    "classical_mixture": {
        "state": {"alpha": [0.2, 0.5, 1.0], "p": [0.2, 0.5, 0.8]},
        "dynamics": _DYNAMICS,
        "sweep": {"t": _T10},
        "numerics": _NUMERICS,
    },
    "cat_dynamics": {
        "state": {"alpha": [0.2, 1.0], "a1": 0.7071067811865476, "a2": 0.7071067811865476},
        "dynamics": _DYNAMICS,
        "sweep": {"t": _T10},
        "numerics": _NUMERICS,
    },
    "cat_heatmap": {
        "state": {"a1": 0.7071067811865476, "a2": 0.7071067811865476},
        "dynamics": _DYNAMICS,
        "sweep": {"alpha": {"start": 0.05, "stop": 2.0, "num": 40}, "t": _T20},
        "numerics": _NUMERICS,
    },
    "disorder_oracle": {
        "state": {"family": "fock", "k": [0, 4, 8], "alpha": [0.2]},
        "disorder": _DISORDER,
        "sweep": {"t": _T40},
        "detect": _DETECT,
        "numerics": _NUMERICS,
    },
    "disorder_realistic": {
        "state": {"family": "coherent", "k": [0], "alpha": [0.2]},
        "disorder": dict(_DISORDER, sigma_lambda=[0.04, 0.06, 0.08, 0.1, 0.2]),
        "sweep": {"t": _T40},
        "detect": _DETECT,
        "numerics": dict(_NUMERICS, rule="frozen"),
    },
    "wigner_comparison": {
        "state": {"alpha": 1.0, "a1": 0.7071067811865476, "a2": 0.7071067811865476},
        "dynamics": _DYNAMICS,
        "sweep": {"t": {"start": 0.0, "stop": 10.0, "num": 41}},
        "numerics": dict(_NUMERICS, n_r=96, n_phi_beta=96, n_theta=32, n_phi=32, quad_tol=1e-6, radius=0.0),
    },
}


@dataclass(frozen=True)
class ExperimentConfig:
    experiment: str
    params: dict

    def section(self, name: str) -> dict:
        return self.params.get(name, {})

    def as_dict(self) -> dict:
        return {"experiment": self.experiment, **copy.deepcopy(self.params)}


def default_output_dir() -> Path:
    return Path(os.environ.get(OUTPUT_ENV, DEFAULT_OUTPUT))


def default_config(experiment: str) -> dict:
    if experiment not in DEFAULTS:
        raise ConfigError(f"unknown experiment {experiment!r}; choose from {sorted(DEFAULTS)}")
    return {"experiment": experiment, **copy.deepcopy(DEFAULTS[experiment])}


def load_config(path) -> dict:
    """Read a TOML config, or the config echo stored in a result's JSON metadata."""
    path = Path(path)
    try:
        if path.suffix == ".json":
            data = json.loads(path.read_text())
            return data.get("config", data)
        with open(path, "rb") as fh:
            return tomllib.load(fh)
    except FileNotFoundError as exc:
        raise ConfigError(f"config file not found: {path}") from exc
    except (tomllib.TOMLDecodeError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot parse {path}: {exc}") from exc


def _parse_value(text: str):
    try:
        return tomllib.loads(f"v = {text}")["v"]
    except tomllib.TOMLDecodeError:
        return text


def apply_overrides(cfg: dict, overrides) -> dict:
    """Apply ``key.sub=value`` strings; values use TOML syntax, bare words are strings."""
    cfg = copy.deepcopy(cfg)
    for item in overrides or ():
        if "=" not in item:
            raise ConfigError(f"override {item!r} is not of the form key=value")
        key, text = item.split("=", 1)
        parts = key.strip().split(".")
        node = cfg
        for p in parts[:-1]:
            node = node.setdefault(p, {})
            if not isinstance(node, dict):
                raise ConfigError(f"override {key!r} descends into a non-table value")
        node[parts[-1]] = _parse_value(text.strip())
    return cfg


def _merge(defaults: dict, given: dict, where: str) -> dict:
    out = copy.deepcopy(defaults)
    for k, v in given.items():
        if k not in defaults:
            raise ConfigError(f"unknown key {where}{k!r}")
        if isinstance(defaults[k], dict) and isinstance(v, dict) and not _is_axis(defaults[k]):
            out[k] = _merge(defaults[k], v, f"{where}{k}.")
        else:
            out[k] = v
    return out


def _is_axis(v) -> bool:
    return isinstance(v, dict) and set(v) == {"start", "stop", "num"}


def axis_values(spec) -> np.ndarray:
    """Materialize a sweep axis from a list, scalar or ``{start, stop, num}`` table."""
    if _is_axis(spec):
        if int(spec["num"]) < 1:
            raise ConfigError("axis 'num' must be positive")
        return np.linspace(float(spec["start"]), float(spec["stop"]), int(spec["num"]))
    if isinstance(spec, dict):
        raise ConfigError(f"axis table needs exactly start/stop/num, got {sorted(spec)}")
    arr = np.atleast_1d(np.asarray(spec, dtype=float))
    if arr.size == 0:
        raise ConfigError("sweep axis is empty")
    return arr


def _check_positive(params: dict):
    num = params.get("numerics", {})
    for key in ("tail_tol", "quad_tol", "n_r", "n_phi_beta", "n_theta", "n_phi"):
        if key in num and not num[key] > 0:
            raise ConfigError(f"numerics.{key} must be positive")
    if num.get("cutoff", 0) < 0:
        raise ConfigError("numerics.cutoff must be non-negative (0 selects automatically)")
    q = num.get("q_range")
    if q is not None and (not q or any(int(x) < 0 for x in q)):
        raise ConfigError("numerics.q_range must be a nonempty list of non-negative integers")
    dis = params.get("disorder")
    if dis:
        if dis["n_realizations"] < 1:
            raise ConfigError("disorder.n_realizations must be positive")
        if min(np.atleast_1d(dis["sigma_lambda"])) < 0:
            raise ConfigError("disorder.sigma_lambda must be non-negative")
    det = params.get("detect")
    if det and (det["window"] < 2 or det["tol"] <= 0):
        raise ConfigError("detect.window must be >= 2 and detect.tol positive")
    for name, spec in params.get("sweep", {}).items():
        vals = axis_values(spec)
        if name == "t" and vals.min() < 0:
            raise ConfigError("time axis must be non-negative")
    fam = params.get("state", {}).get("family")
    if fam is not None and fam not in ("fock", "coherent"):
        raise ConfigError("state.family must be 'fock' or 'coherent'")


def validate(cfg: dict) -> ExperimentConfig:
    if not isinstance(cfg, dict) or "experiment" not in cfg:
        raise ConfigError("config must name exactly one 'experiment'")
    name = cfg["experiment"]
    if not isinstance(name, str):
        raise ConfigError("'experiment' must be a single name")
    base = default_config(name)
    body = {k: v for k, v in cfg.items() if k != "experiment"}
    params = _merge({k: v for k, v in base.items() if k != "experiment"}, body, "")
    _check_positive(params)
    return ExperimentConfig(name, params)
