"""Run configuration: YAML or JSON files with dotted ``key=value`` overrides."""
from __future__ import annotations

import copy
import json
from dataclasses import dataclass
from pathlib import Path

import yaml

from .errors import InvalidConfig, InvalidParams
from .operator import OperatorParams
from .spectral import SolverConfig

DEFAULTS = {
    "params": {"alpha": 1.0, "beta": 3.0, "dim": 3, "theta": 1.0, "pure_laplacian": False},
    "grid": {"n_cells": 512, "r_max": "auto", "grading": 1.0, "truncation_tol": 1e-14},
    "spectral": {"l_max": 12, "n_per_mode": 8},
    # asymptotic checks look at the far tail, so they use a deeper truncation
    "asymptotics": {"n_cells": 1024, "truncation_tol": 1e-40, "gradient_tol": 0.05, "n_modes": 3},
    "kernel": {
        "b_factor": 1.1,
        "l_max": 40,
        "n_per_mode": 128,
        "t_min": 0.01,
        "t_max": 10.0,
        "n_t": 25,
        "n_diag": 20,
        "n_pairs": 30,
        "n_samples": 1000,
        "ck_pairs": 100,
        "seed": 0,
    },
    "evolve": {"datum": "gaussian", "t_final": 0.5, "tol": 1e-8, "ell": 0},
    "resolvent": {"omega": 1.0, "tau_max": 100.0, "n_samples": 1000, "dense": False},
    "output": {"format": "csv", "directory": "out"},
}


def _merge(base: dict, extra: dict, path: str = "") -> dict:
    out = copy.deepcopy(base)
    for key, value in extra.items():
        where = f"{path}{key}"
        if key not in out:
            raise InvalidConfig(f"unknown config key '{where}'")
        if isinstance(out[key], dict):
            if not isinstance(value, dict):
                raise InvalidConfig(f"config key '{where}' must be a mapping")
            out[key] = _merge(out[key], value, where + ".")
        else:
            out[key] = value
    return out


def parse_override(text: str):
    """'a.b=value' -> (['a', 'b'], parsed value); values are read as YAML scalars."""
    if "=" not in text:
        raise InvalidConfig(f"override '{text}' is not of the form key=value")
    key, raw = text.split("=", 1)
    keys = key.strip().split(".")
    if not all(keys):
        raise InvalidConfig(f"bad override key '{key}'")
    try:
        value = yaml.safe_load(raw)
    except yaml.YAMLError as exc:
        raise InvalidConfig(f"cannot parse override value '{raw}'") from exc
    return keys, value


def apply_overrides(raw: dict, overrides) -> dict:
    raw = copy.deepcopy(raw)
    for text in overrides or ():
        keys, value = parse_override(text)
        node = raw
        for k in keys[:-1]:
            node = node.setdefault(k, {})
            if not isinstance(node, dict):
                raise InvalidConfig(f"override '{text}' descends into a scalar")
        node[keys[-1]] = value
    return raw


@dataclass
class RunConfig:
    params: OperatorParams
    grid: dict
    spectral: dict
    asymptotics: dict
    kernel: dict
    evolve: dict
    resolvent: dict
    output: dict

    @classmethod
    def from_dict(cls, raw: dict | None) -> RunConfig:
        data = _merge(DEFAULTS, raw or {})
        try:
            params = OperatorParams(**data["params"])
        except (TypeError, InvalidParams) as exc:
            raise InvalidConfig(f"invalid params {data['params']}: {exc}") from exc
        cfg = cls(params, data["grid"], data["spectral"], data["asymptotics"], data["kernel"], data["evolve"],
                  data["resolvent"], data["output"])
        cfg.validate()
        return cfg

    @classmethod
    def load(cls, path, overrides=None) -> RunConfig:
        path = Path(path)
        if not path.is_file():
            raise InvalidConfig(f"config file not found: {path}")
        text = path.read_text()
        try:
            raw = json.loads(text) if path.suffix == ".json" else yaml.safe_load(text)
        except (json.JSONDecodeError, yaml.YAMLError) as exc:
            raise InvalidConfig(f"cannot parse {path}: {exc}") from exc
        if raw is not None and not isinstance(raw, dict):
            raise InvalidConfig(f"{path} must contain a mapping")
        return cls.from_dict(apply_overrides(raw or {}, overrides))

    def validate(self):
        g = self.grid
        if not (isinstance(g["n_cells"], int) and g["n_cells"] >= 16):
            raise InvalidConfig(f"grid.n_cells must be an integer >= 16, got {g['n_cells']}")
        if g["r_max"] != "auto" and not (isinstance(g["r_max"], (int, float)) and g["r_max"] > 0):
            raise InvalidConfig(f"grid.r_max must be 'auto' or positive, got {g['r_max']}")
        if not float(self.kernel["b_factor"]) > 1.0:
            raise InvalidConfig(f"kernel.b_factor must exceed 1, got {self.kernel['b_factor']}")
        if self.output["format"] not in ("csv", "json"):
            raise InvalidConfig(f"output.format must be csv or json, got {self.output['format']}")
        for key in ("l_max", "n_per_mode"):
            for section in (self.spectral, self.kernel):
                if not (isinstance(section[key], int) and section[key] >= (0 if key == "l_max" else 1)):
                    raise InvalidConfig(f"{key} must be a nonnegative integer, got {section[key]}")

    def solver(self) -> SolverConfig:
        g = self.grid
        r_max = None if g["r_max"] == "auto" else float(g["r_max"])
        return SolverConfig(n_cells=g["n_cells"], r_max=r_max, grading=float(g["grading"]),
                            truncation_tol=float(g["truncation_tol"]))

    def resolved(self) -> dict:
        """Full configuration with the truncation radius made explicit."""
        grid = dict(self.grid)
        if grid["r_max"] == "auto" and self.params.regime().discrete_spectrum:
            grid["r_max"] = self.solver().resolve_r_max(self.params)
        return {
            "params": self.params.to_dict(),
            "grid": grid,
            "spectral": dict(self.spectral),
            "asymptotics": dict(self.asymptotics),
            "kernel": dict(self.kernel),
            "evolve": dict(self.evolve),
            "resolvent": dict(self.resolvent),
            "output": dict(self.output),
        }
