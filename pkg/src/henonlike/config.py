"""Run configuration for the command-line tools.

A config file is a JSON object::

    {
      "command": "simulate",                    # optional
      "map": {"kind": "quadratic", "mu": 1.4, "b": 0.3, "a": []},
      "seed": 0,
      "out": "cloud.csv",                       # optional, stdout if absent
      "format": "csv",                          # "csv" or "json"
      "options": {"points": 100000}             # per-command, see DEFAULTS
    }

Polynomial maps use ``"coeffs"`` (lowest degree first) instead of ``"mu"``.
Unknown keys anywhere are rejected.
"""

from __future__ import annotations

import copy
import json
from dataclasses import dataclass, field
from typing import Optional

from .map_core import POLYNOMIAL, MapParams, Nonlinearity, ParameterError

FORMATS = ("csv", "json")

DEFAULTS = {
    "simulate": {"transient": 1000, "points": 100_000, "x0": None},
    "certify": {"samples": 10_000, "grid_density": 100, "iterations": 1000, "workers": 1,
                "alpha_minus": None, "alpha_plus": None},
    "horseshoe": {"line_count": 100, "points_per_line": 10_000, "arc_lines": 5,
                  "arc_points": 200, "arc_out": None, "half_width": None, "gamma": None},
    "sweep": {"mu_min": 0.05, "mu_max": 3.0, "mu_count": 60, "b_min": 0.0, "b_max": 0.5,
              "b_count": 26, "probe_iterations": 1000, "workers": 1},
    "spectrum": {"x": None, "orbit_file": None},
    "continue": {"period": 1, "near": None, "b_target": None, "steps": 10, "interval": None},
}
COMMANDS = tuple(DEFAULTS)
_TOP_KEYS = {"command", "map", "seed", "out", "format", "options"}
_MAP_KEYS = {"kind", "mu", "coeffs", "b", "a"}


class ConfigError(ValueError):
    def __init__(self, message: str, *, field: str, constraint: str, value=None):
        super().__init__(message)
        self.field = field
        self.constraint = constraint
        self.value = value

    def to_dict(self) -> dict:
        return {"error": "invalid_config", "field": self.field, "constraint": self.constraint,
                "value": self.value, "message": str(self)}


@dataclass
class RunConfig:
    command: str
    map: dict = field(default_factory=lambda: {"kind": "quadratic", "mu": 1.4, "b": 0.3, "a": []})
    seed: int = 0
    out: Optional[str] = None
    format: str = "csv"
    options: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.command not in DEFAULTS:
            raise ConfigError(f"unknown command {self.command!r}", field="command",
                              constraint=f"command in {COMMANDS}", value=self.command)
        unknown = set(self.map) - _MAP_KEYS
        if unknown:
            raise ConfigError(f"unknown map keys {sorted(unknown)}", field="map",
                              constraint=f"keys in {sorted(_MAP_KEYS)}", value=sorted(unknown))
        unknown = set(self.options) - set(DEFAULTS[self.command])
        if unknown:
            raise ConfigError(f"unknown options {sorted(unknown)} for {self.command}",
                              field="options", constraint=f"keys in {sorted(DEFAULTS[self.command])}",
                              value=sorted(unknown))
        if self.format not in FORMATS:
            raise ConfigError(f"unknown format {self.format!r}", field="format",
                              constraint=f"format in {FORMATS}", value=self.format)
        if isinstance(self.seed, bool) or not isinstance(self.seed, int) or not 0 <= self.seed < 2 ** 64:
            raise ConfigError("seed must be an unsigned 64-bit integer", field="seed",
                              constraint="0 <= seed < 2**64", value=self.seed)

    @property
    def opts(self) -> dict:
        merged = copy.deepcopy(DEFAULTS[self.command])
        merged.update(self.options)
        return merged

    def params(self) -> MapParams:
        m = self.map
        kind = m.get("kind", "quadratic")
        if kind == POLYNOMIAL:
            f = Nonlinearity(kind, coeffs=tuple(m.get("coeffs", ())))
        else:
            f = Nonlinearity(kind, mu=m.get("mu", 0.0))
        return MapParams(f, m.get("b", 0.0), tuple(m.get("a", ())))

    def to_dict(self) -> dict:
        return {"command": self.command, "map": dict(self.map), "seed": self.seed,
                "out": self.out, "format": self.format, "options": dict(self.options)}

    @classmethod
    def from_dict(cls, d: dict, command: Optional[str] = None) -> "RunConfig":
        if not isinstance(d, dict):
            raise ConfigError("config must be a JSON object", field="", constraint="object")
        unknown = set(d) - _TOP_KEYS
        if unknown:
            raise ConfigError(f"unknown keys {sorted(unknown)}", field="",
                              constraint=f"keys in {sorted(_TOP_KEYS)}", value=sorted(unknown))
        cmd = d.get("command", command)
        if command is not None and cmd != command:
            raise ConfigError(f"config is for {cmd!r}, not {command!r}", field="command",
                              constraint=f"command == {command!r}", value=cmd)
        kw = {k: v for k, v in d.items() if k != "command"}
        return cls(command=cmd, **kw)

    @classmethod
    def load(cls, path: str, command: Optional[str] = None) -> "RunConfig":
        with open(path) as fh:
            try:
                data = json.load(fh)
            except json.JSONDecodeError as e:
                raise ConfigError(f"not valid JSON: {e}", field="", constraint="valid JSON") from e
        return cls.from_dict(data, command)

    def dump(self, path: str):
        with open(path, "w") as fh:
            json.dump(self.to_dict(), fh, indent=2)
            fh.write("\n")


def parameter_error_dict(e: ParameterError) -> dict:
    d = e.to_dict()
    d["field"] = f"map.{d['field']}"
    return d
