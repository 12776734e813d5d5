"""Run-configuration resolution and validation.

A run is described by a JSON document with nested blocks (model, scan, mc,
grid, output, verify) whose leaves are flat key = value entries.  Command
line flags override file values.  Validation happens before any computation
and aggregates every violation into a single ConfigError report.
"""

from __future__ import annotations

import json
from typing import Optional

from ..errors import ConfigError

_BLOCKS = ("model", "scan", "mc", "grid", "output", "verify", "points")

_DEFAULTS = {
    "model": {"N": 16, "nu": 0, "masses": [], "spectrum": None, "tol": 1e-14},
    "scan": {"variable": None, "from": None, "to": None, "points": 20, "scale": "linear"},
    "grid": {"zeta_min": 0.1, "zeta_max": 10.0, "zeta_points": 40, "n_list": []},
    "mc": {"samples": 10000, "seed": 0, "workers": 1, "bins": 60,
           "microscopic": True, "overlay": False},
    "output": {"path": None, "format": "csv", "plot": True},
    "verify": {"tolerances": {}},
    "points": {"tuples": [], "k": 1, "mode": "micro", "connected": False},
}


def load_config(path: Optional[str]) -> dict:
    config = {block: dict(values) for block, values in _DEFAULTS.items()}
    if path is None:
        return config
    try:
        with open(path) as fh:
            data = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from None
    problems = []
    for block, values in data.items():
        if block not in _BLOCKS:
            problems.append(f"unknown config block {block!r}")
            continue
        if not isinstance(values, dict):
            problems.append(f"config block {block!r} must be an object")
            continue
        for key, val in values.items():
            if key not in config[block]:
                problems.append(f"unknown key {block}.{key}")
            else:
                config[block][key] = val
    if problems:
        raise ConfigError("invalid config: " + "; ".join(problems))
    return config


def apply_flag(config: dict, block: str, key: str, value) -> None:
    if value is not None:
        config[block][key] = value


def parse_float_list(text) -> list:
    if text is None or text == "":
        return []
    if isinstance(text, (list, tuple)):
        return [float(v) for v in text]
    return [float(v) for v in str(text).split(",") if v.strip()]


def parse_int_list(text) -> list:
    if text is None or text == "":
        return []
    if isinstance(text, (list, tuple)):
        return [int(v) for v in text]
    return [int(v) for v in str(text).split(",") if v.strip()]


def parse_tuples(text) -> list:
    """Point tuples: 'a,b;c,d' -> [[a, b], [c, d]]."""
    if text is None or text == "":
        return []
    if isinstance(text, list):
        return [[float(v) for v in group] for group in text]
    groups = [g for g in str(text).split(";") if g.strip()]
    return [[float(v) for v in g.split(",") if v.strip()] for g in groups]


def validate_model(config: dict, problems: list, need_spectrum: bool = False) -> None:
    model = config["model"]
    n = model["N"]
    if not isinstance(n, int) or not (1 <= n <= 256):
        problems.append(f"model.N must be an integer in [1, 256], got {n!r}")
    nu = model["nu"]
    if not isinstance(nu, int) or not (0 <= nu <= 16):
        problems.append(f"model.nu must be an integer in [0, 16], got {nu!r}")
    masses = model["masses"]
    if len(masses) > 8:
        problems.append(f"model.masses supports at most 8 flavours, got {len(masses)}")
    if any(m <= 0 for m in masses):
        problems.append("model.masses must all be > 0")
    if need_spectrum and not model["spectrum"]:
        problems.append("this command needs model.spectrum (preset or list)")


def finish_validation(problems: list) -> None:
    if problems:
        raise ConfigError("invalid configuration: " + "; ".join(problems))


def resolved_json(config: dict, command: str) -> str:
    payload = {"command": command}
    payload.update({k: config[k] for k in _BLOCKS if k in config})
    return json.dumps(payload, sort_keys=True)
