"""Experiment configuration: JSON in, JSON out, plus field and domain construction."""
from __future__ import annotations

import json
import os
from dataclasses import dataclass, field as dfield

from .errors import ConfigError
from .fields import GridField, field_from_dict, solve_dirichlet
from .geometry import ConvexDomain
from .presets import preset

DEFAULT_PRESET = "poly_Im_z2"
COMMANDS = ("solve", "freq", "strata", "beta", "reif", "cover", "blowup", "verify")


@dataclass
class ExperimentConfig:
    field: dict = dfield(default_factory=dict)
    domain: dict | None = None
    params: dict = dfield(default_factory=dict)
    out: str = "out"
    seed: int = 0
    threads: int = 1

    def to_dict(self):
        return {"field": self.field, "domain": self.domain, "params": self.params,
                "out": self.out, "seed": self.seed, "threads": self.threads}

    def to_json(self):
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)

    @classmethod
    def from_dict(cls, d):
        unknown = set(d) - {"field", "domain", "params", "out", "seed", "threads"}
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        cfg = cls(field=d.get("field", {}), domain=d.get("domain"),
                  params=dict(d.get("params", {})), out=d.get("out", "out"),
                  seed=int(d.get("seed", 0)), threads=int(d.get("threads", 1)))
        cfg.validate()
        return cfg

    @classmethod
    def from_json(cls, text):
        try:
            return cls.from_dict(json.loads(text))
        except json.JSONDecodeError as e:
            raise ConfigError(f"config is not valid JSON: {e}") from None

    @classmethod
    def load(cls, path):
        with open(path) as fh:
            cfg = cls.from_json(fh.read())
        cfg._base = os.path.dirname(os.path.abspath(path))
        cfg.validate(check_files=True)
        return cfg

    def save(self, path):
        with open(path, "w") as fh:
            fh.write(self.to_json() + "\n")
        return path

    def resolve(self, rel):
        base = getattr(self, "_base", os.getcwd())
        return rel if os.path.isabs(rel) else os.path.join(base, rel)

    def validate(self, check_files=False):
        if not isinstance(self.field, dict):
            raise ConfigError("field must be an object")
        if not (0 <= self.seed < 2**64):
            raise ConfigError("seed must be an unsigned 64-bit integer")
        if self.threads < 1:
            raise ConfigError("threads must be >= 1")
        if check_files:
            for key in ("grid", "measure", "family", "sample"):
                ref = self.field.get(key) if key == "grid" else self.params.get(key)
                if isinstance(ref, str):
                    path = self.resolve(ref) + (".json" if key == "grid" else "")
                    if not os.path.exists(path):
                        raise ConfigError(f"referenced file does not exist: {path}")


def build_domain(cfg, fld=None):
    if cfg.domain is not None:
        try:
            return ConvexDomain.from_dict(cfg.domain)
        except (KeyError, TypeError, ValueError) as e:
            raise ConfigError(f"bad domain description: {e}") from None
    return None if fld is None else fld.domain


def build_field(cfg):
    """Field from {"preset": name}, an analytic field dict, {"grid": stem} or {"solve": {...}}."""
    spec = cfg.field or {"preset": DEFAULT_PRESET}
    if "preset" in spec:
        return preset(spec["preset"], int(spec.get("dim", 2)))
    if "grid" in spec:
        return GridField.load(cfg.resolve(spec["grid"]))
    if "solve" in spec:
        s = spec["solve"]
        base = preset(s["preset"]) if "preset" in s else field_from_dict(s["boundary"])
        dom = build_domain(cfg, base) or ConvexDomain.whole_space(base.dim)
        return solve_dirichlet(dom, base.eval, int(s.get("resolution", 128)))
    if "kind" in spec:
        try:
            return field_from_dict(spec)
        except (KeyError, TypeError) as e:
            raise ConfigError(f"bad field description: {e}") from None
    raise ConfigError("field needs one of preset, grid, solve or kind")
