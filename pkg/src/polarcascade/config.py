"""Run configuration: schema, validation, precedence and the meta.json sidecar.

Resolution order for every field is: built-in default, then the JSON
config file (``--config``), then explicit command-line flags. The fully
resolved configuration is written verbatim to ``meta.json`` so a run can
be repeated from that file alone.
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass, field
from pathlib import Path

from . import __version__

SCHEMA_VERSION = 1
OUTDIR_ENV = "POLARCASCADE_OUTDIR"


class ConfigError(ValueError):
    """Schema violation; ``key`` is the dotted path of the offending entry."""

    def __init__(self, key: str, message: str):
        self.key = key
        super().__init__(f"{key}: {message}")


class ConfigFileError(ValueError):
    """Config file unreadable or not JSON (a data error, not a usage error)."""


def _num(lo=None, hi=None, lo_open=False, hi_open=False, integer=False):
    def check(key, x):
        if isinstance(x, bool) or not isinstance(x, (int, float)):
            raise ConfigError(key, f"expected a number, got {x!r}")
        if integer and int(x) != x:
            raise ConfigError(key, f"expected an integer, got {x!r}")
        bad = ((lo is not None and (x < lo or (lo_open and x == lo)))
               or (hi is not None and (x > hi or (hi_open and x == hi))))
        if bad:
            left = "(" if lo_open else "["
            right = ")" if hi_open else "]"
            lo_s = "-inf" if lo is None else lo
            hi_s = "inf" if hi is None else hi
            raise ConfigError(key, f"{x!r} outside legal range {left}{lo_s}, {hi_s}{right}")
        return int(x) if integer else float(x)
    return check


def _opt(check):
    def inner(key, x):
        return None if x is None else check(key, x)
    return inner


def _choice(*options):
    def check(key, x):
        if x not in options:
            raise ConfigError(key, f"{x!r} not one of {', '.join(options)}")
        return x
    return check


def _theta0(key, x):
    if isinstance(x, (int, float)) and not isinstance(x, bool):
        x = [x, x]
    if not isinstance(x, (list, tuple)) or len(x) not in (1, 2):
        raise ConfigError(key, "expected [theta_b, theta_r]")
    if len(x) == 1:
        x = [x[0], x[0]]
    return [_num(0, 1)(f"{key}[{i}]", v) for i, v in enumerate(x)]


def _string(key, x):
    if not isinstance(x, str):
        raise ConfigError(key, f"expected a string, got {x!r}")
    return x


def _bool(key, x):
    if not isinstance(x, bool):
        raise ConfigError(key, f"expected true/false, got {x!r}")
    return x


def _str_list(key, x):
    if not isinstance(x, list) or not all(isinstance(v, str) for v in x):
        raise ConfigError(key, "expected a list of strings")
    return list(x)


def _num_list(check):
    def inner(key, x):
        if not isinstance(x, list) or not x:
            raise ConfigError(key, "expected a non-empty list of numbers")
        return [check(f"{key}[{i}]", v) for i, v in enumerate(x)]
    return inner


# name -> (default, validator)
FIELDS = {
    "alpha": (0.8, _num(0, 1)),
    "beta": (0.7, _num(0, 1)),
    "delta": (0.0, _num(0, 1)),
    "red_fraction": (0.5, _num(0, 1, lo_open=True, hi_open=True)),
    "homophily": (0.5, _num(0, 1, lo_open=True, hi_open=True)),
    "topology": ("complete", _choice("complete", "sbm")),
    "theta0": ([0.7, 0.7], _theta0),
    "n": (1000, _num(2, integer=True)),
    "n_blue": (None, _opt(_num(0, integer=True))),
    "n_red": (None, _opt(_num(0, integer=True))),
    "seed": (0, _num(0, integer=True)),
    "graph_seed": (None, _opt(_num(0, integer=True))),
    "init_mode": ("quota", _choice("quota", "bernoulli")),
    "horizon_t": (None, _opt(_num(0, lo_open=True))),
    "record_stride": (None, _opt(_num(1, integer=True))),
    "step_h": (1e-3, _num(0, lo_open=True)),
    "reps": (1, _num(1, integer=True)),
    "jobs": (1, _num(1, integer=True)),
    "edges": (None, _opt(_string)),
    "parties": (None, _opt(_string)),
    "tol": (1e-12, _num(0)),
    "kind": (None, _opt(_string)),
    "axes": ([], _str_list),
    "mode": ("classify", _choice("classify", "integrate", "simulate")),
    "rho_values": ([0.7, 0.5, 0.3], _num_list(_num(0, 1, lo_open=True, hi_open=True))),
    "name": (None, _opt(_string)),
    "stochastic": (True, _bool),
    "a": (None, _opt(_string)),
    "b": (None, _opt(_string)),
}

_MODEL = ["alpha", "beta", "delta", "red_fraction", "homophily", "topology"]

COMMAND_FIELDS = {
    "simulate": _MODEL + ["theta0", "n", "n_blue", "n_red", "seed", "graph_seed",
                          "init_mode", "horizon_t", "record_stride", "reps", "jobs",
                          "edges", "parties"],
    "integrate": _MODEL + ["theta0", "step_h", "horizon_t", "record_stride"],
    "classify": _MODEL + ["theta0", "tol"],
    "consensus-check": _MODEL + ["theta0", "tol"],
    "sweep": _MODEL + ["theta0", "kind", "axes", "mode", "rho_values", "n", "seed",
                       "horizon_t", "step_h", "tol", "jobs"],
    "scenario": ["name", "stochastic", "n", "seed"],
    "compare": ["a", "b"],
    "gen-graph": ["kind", "n_blue", "n_red", "homophily", "seed"],
    "inspect-graph": ["edges", "parties"],
}

COMMAND_DEFAULTS = {
    "simulate": {"horizon_t": 15.0},
    "integrate": {"horizon_t": 30.0, "record_stride": 10},
    "sweep": {"kind": "phase", "horizon_t": 30.0, "n": 10_000},
    "gen-graph": {"kind": "complete", "n_blue": 500, "n_red": 500},
    # None means "use the scenario file's own value"
    "scenario": {"n": None, "seed": None},
}


@dataclass
class RunConfig:
    command: str
    values: dict = field(default_factory=dict)

    def __getitem__(self, key):
        return self.values[key]

    def get(self, key, default=None):
        return self.values.get(key, default)

    def to_dict(self) -> dict:
        return {"schema_version": SCHEMA_VERSION, "command": self.command, **self.values}


def resolve(command: str, file_values: dict | None = None,
            flag_values: dict | None = None) -> RunConfig:
    """Merge defaults, config-file values and flags; validate every field."""
    if command not in COMMAND_FIELDS:
        raise ConfigError("command", f"unknown command {command!r}")
    allowed = COMMAND_FIELDS[command]
    merged = {k: FIELDS[k][0] for k in allowed}
    merged.update(COMMAND_DEFAULTS.get(command, {}))
    for source in (file_values or {}), (flag_values or {}):
        for key, value in source.items():
            if key not in allowed:
                raise ConfigError(key, f"not a valid key for command {command!r}")
            merged[key] = value
    nullable = {k for k, v in COMMAND_DEFAULTS.get(command, {}).items() if v is None}
    values = {k: None if (k in nullable and merged[k] is None) else FIELDS[k][1](k, merged[k])
              for k in allowed}
    return RunConfig(command, values)


def load_config(path) -> tuple[str | None, dict]:
    """Read a config file or an emitted meta.json; returns (command, values)."""
    path = Path(path)
    try:
        doc = json.loads(path.read_text(encoding="utf-8"))
    except OSError as exc:
        raise ConfigFileError(f"{path}: cannot read config ({exc.strerror})")
    except json.JSONDecodeError as exc:
        raise ConfigFileError(f"{path}:{exc.lineno}: invalid JSON ({exc.msg})")
    if not isinstance(doc, dict):
        raise ConfigError("<root>", "config must be a JSON object")
    if "config" in doc and isinstance(doc["config"], dict):
        # an emitted meta.json
        doc = doc["config"]
    version = doc.get("schema_version")
    if version != SCHEMA_VERSION:
        raise ConfigError("schema_version", f"expected {SCHEMA_VERSION}, got {version!r}")
    values = {k: v for k, v in doc.items() if k not in ("schema_version", "command")}
    return doc.get("command"), values


def default_outdir(command: str) -> Path:
    return Path(os.environ.get(OUTDIR_ENV, "polarcascade-out")) / command


def write_meta(outdir, cfg: RunConfig, extra: dict | None = None) -> Path:
    meta = {
        "schema_version": SCHEMA_VERSION,
        "tool": "polarcascade",
        "version": __version__,
        "command": cfg.command,
        "config": cfg.to_dict(),
    }
    if extra:
        meta.update(extra)
    path = Path(outdir) / "meta.json"
    path.write_text(json.dumps(meta, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    return path
