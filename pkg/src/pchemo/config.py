"""Run configuration: JSON file, defaults, overrides and validation.

A config has the sections ``params``, ``grid``, ``stepper``, ``initial``,
``atlas`` and ``io``.  Unknown keys are rejected so that a typo cannot
silently fall back to a default.  The hash covers everything except the
``io`` section, so moving the output directory does not change it.
"""

from __future__ import annotations

import copy
import hashlib
import json
from dataclasses import dataclass
from pathlib import Path

from .atlas.steady import K_MAX, K_MIN, PER_DECADE
from .core import Grid1D, Params, make_params
from .errors import ValidationError
from .initial import KINDS
from .stepper import StepperConfig

COMMANDS = ("simulate", "atlas", "period-table", "steady", "validate")

DEFAULTS = {
    "command": "simulate",
    "params": {"chi": 1.0, "p": 1.5, "M": 1.0, "length": 1.0, "elliptic_mode": "poisson", "eps_reg": 0.0},
    "grid": {"n_cells": 256},
    "stepper": {
        "t_end": 1.0,
        "dt": "auto",
        "cfl_safety": 0.5,
        "output_every": 100,
        "nonneg_clip": False,
        "dt_max": 1e-3,
        "blowup_factor": 1e6,
        "scheme": "upwind",
        "norms_q": [2.0],
    },
    "initial": {"kind": "cosine", "amplitude": 0.1, "mode": 1},
    "atlas": {
        "n_max": 3,
        "n": 1,
        "k_min": K_MIN,
        "k_max": K_MAX,
        "per_decade": PER_DECADE,
        "n_points": None,
        "oracle": False,
    },
    "io": {"out_dir": "out", "formats": ["csv"], "fields": True},
}

# initial specs take free-form keys per kind
_OPEN_SECTIONS = ("initial",)
FORMATS = ("csv", "json")


def _merge(base: dict, extra: dict, where="config") -> dict:
    out = copy.deepcopy(base)
    for key, val in extra.items():
        if key not in base:
            if where.split(".")[-1] in _OPEN_SECTIONS:
                out[key] = val
                continue
            raise ValidationError(f"unknown key {where}.{key}")
        if isinstance(base[key], dict):
            if not isinstance(val, dict):
                raise ValidationError(f"{where}.{key} must be an object")
            out[key] = _merge(base[key], val, f"{where}.{key}")
        else:
            out[key] = val
    return out


@dataclass(frozen=True)
class RunConfig:
    data: dict

    def __post_init__(self):
        d = self.data
        if d["command"] not in COMMANDS:
            raise ValidationError(f"command must be one of {COMMANDS}, got {d['command']!r}")
        # building the typed objects runs their validation
        self.params()
        self.grid()
        self.stepper()
        a = d["atlas"]
        for key in ("n_max", "n", "per_decade"):
            if not isinstance(a[key], int) or isinstance(a[key], bool) or a[key] < 1:
                raise ValidationError(f"atlas.{key} must be a positive integer, got {a[key]!r}")
        if a["n_points"] is not None and (not isinstance(a["n_points"], int) or a["n_points"] < 2):
            raise ValidationError(f"atlas.n_points must be null or an integer >= 2, got {a['n_points']!r}")
        try:
            ok = 0 < float(a["k_min"]) < float(a["k_max"])
        except (TypeError, ValueError):
            ok = False
        if not ok:
            raise ValidationError(f"need 0 < atlas.k_min < atlas.k_max, got {a['k_min']!r}, {a['k_max']!r}")
        if d["initial"].get("kind") not in KINDS:
            raise ValidationError(f"initial.kind must be one of {KINDS}, got {d['initial'].get('kind')!r}")
        bad = [f for f in d["io"]["formats"] if f not in FORMATS]
        if bad:
            raise ValidationError(f"io.formats entries must be in {FORMATS}, got {bad}")

    @property
    def command(self) -> str:
        return self.data["command"]

    def params(self) -> Params:
        pr = self.data["params"]
        return make_params(pr["chi"], pr["p"], pr["M"], pr["length"], pr["elliptic_mode"], pr["eps_reg"])

    def grid(self) -> Grid1D:
        n = self.data["grid"]["n_cells"]
        if not isinstance(n, int) or isinstance(n, bool):
            raise ValidationError(f"grid.n_cells must be an integer, got {n!r}")
        return Grid1D(n, float(self.data["params"]["length"]))

    def stepper(self) -> StepperConfig:
        s = dict(self.data["stepper"])
        s["norms_q"] = tuple(s["norms_q"])
        try:
            return StepperConfig(**s)
        except TypeError as exc:
            raise ValidationError(f"bad stepper section: {exc}") from exc
        except ValueError as exc:
            raise ValidationError(str(exc)) from exc

    @property
    def atlas(self) -> dict:
        return self.data["atlas"]

    @property
    def io(self) -> dict:
        return self.data["io"]

    def hashed_part(self) -> dict:
        return {k: v for k, v in self.data.items() if k != "io"}

    def hash(self) -> str:
        blob = json.dumps(self.hashed_part(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(blob.encode()).hexdigest()[:16]


def set_path(data: dict, dotted: str, value) -> None:
    """Assign ``value`` at ``section.key`` inside ``data``."""
    parts = dotted.split(".")
    node = data
    for part in parts[:-1]:
        node = node.setdefault(part, {})
        if not isinstance(node, dict):
            raise ValidationError(f"cannot set {dotted}: {part} is not a section")
    node[parts[-1]] = value


def build_config(raw: dict | None = None, overrides: dict | None = None) -> RunConfig:
    """Merge ``raw`` and then dotted ``overrides`` over the defaults and validate."""
    raw = copy.deepcopy(raw or {})
    for key, val in (overrides or {}).items():
        set_path(raw, key, val)
    if not isinstance(raw, dict):
        raise ValidationError("config must be a JSON object")
    return RunConfig(_normalize(_merge(DEFAULTS, raw)))


_FLOAT_KEYS = {
    "params": ("chi", "p", "M", "length", "eps_reg"),
    "stepper": ("t_end", "cfl_safety", "dt_max", "blowup_factor"),
    "atlas": ("k_min", "k_max"),
}


def _normalize(d: dict) -> dict:
    # 2 and 2.0 must hash alike; non-numeric values are left for validation to reject
    for section, keys in _FLOAT_KEYS.items():
        for key in keys:
            val = d[section][key]
            if isinstance(val, int) and not isinstance(val, bool):
                d[section][key] = float(val)
    st = d["stepper"]
    if isinstance(st["dt"], int) and not isinstance(st["dt"], bool):
        st["dt"] = float(st["dt"])
    if isinstance(st["norms_q"], list):
        st["norms_q"] = [float(q) if isinstance(q, int) else q for q in st["norms_q"]]
    return d


def load_config(path: str | Path | None, overrides: dict | None = None) -> RunConfig:
    raw = {}
    if path is not None:
        path = Path(path)
        try:
            raw = json.loads(path.read_text())
        except OSError as exc:
            raise ValidationError(f"cannot read config {path}: {exc.strerror or exc}") from exc
        except json.JSONDecodeError as exc:
            raise ValidationError(f"config {path} is not valid JSON: {exc}") from exc
        if not isinstance(raw, dict):
            raise ValidationError(f"config {path} must hold a JSON object")
    return build_config(raw, overrides)
