"""Run configuration: an INI file with one section per computation, validated against a schema.

Keys are addressed as ``section.key`` on the command line (``--set
mesh.h=0.05``).  Unknown sections or keys and unparsable values raise
ConfigError naming the offending key.
"""
from __future__ import annotations

import configparser
import hashlib
import json
from dataclasses import dataclass, field

SUBCOMMANDS = ("cap", "cell", "soft-cell", "regime", "limit1d", "sweep", "verify")


class ConfigError(ValueError):
    pass


def _floats(s: str) -> list:
    return [float(x) for x in s.replace(";", ",").split(",") if x.strip()]


def _vectors(s: str) -> list:
    """'1,0; 0,1' -> [[1.0, 0.0], [0.0, 1.0]]"""
    return [_floats(part) for part in s.split(";") if part.strip()]


def _bool(s: str) -> bool:
    v = s.strip().lower()
    if v in ("1", "true", "yes", "on"):
        return True
    if v in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {s!r}")


def _str(s: str) -> str:
    return s.strip()


# section -> key -> (parser, default)
SCHEMA = {
    "run": {"seed": (int, "0"), "output": (_str, "")},
    "energy": {"kind": (_str, "isotropic"), "lam": (float, "1.0"), "mu": (float, "1.0"), "p": (float, "2.0"),
               "c": (float, "1.0"), "d": (float, "0.5"), "table": (_floats, "")},
    "section": {"shape": (_str, "disc"), "scale": (float, "1.0")},
    "mesh": {"h": (float, "0.1"), "grading": (_str, "log")},
    "cap": {"mode": (_str, "annulus"), "a": (_floats, "1,0,0"), "zeta": (float, "0.0"),
            "radii": (_floats, "4"), "ks": (_floats, "6,7,8,9,10,11,12,13,14")},
    "cell": {"regime": (_str, "finite_k"), "scalar": (float, "1.0"), "loads": (_vectors, "1,0; 0,1"),
             "form": (_bool, "true"), "density": (_str, "energy")},
    "soft": {"radius": (float, "0.3"), "motions": (_vectors, "1,0,0,0; 0,0,1,0; 0,0,0,1"),
             "recession": (_bool, "true")},
    "regime": {"r": (_str, "exp(-1/eps**2)"), "l": (_str, "eps**2/exp(-5/eps**2)"), "p": (float, "2.0"),
               "area": (float, "3.141592653589793"), "radius_at": (float, "0.0")},
    "limit1d": {"domain": (_str, "finite_kappa"), "length": (float, "1.0"), "nodes": (int, "200"),
                "scalar": (float, "1.0"), "gamma": (float, "1.0"), "u": (_str, "0, 0, 0"),
                "g0": (_str, "0, 0, 0"), "a0": (_str, "0"), "beta0": (_str, "0"), "cell": (_str, "isotropic"),
                "cell_h": (float, "0.05")},
    "sweep": {"command": (_str, "cap"), "parameter": (_str, "mesh.h"), "values": (_str, "0.2, 0.1")},
    "verify": {"suite": (_str, "quick")},
}


@dataclass
class RunConfig:
    subcommand: str
    values: dict = field(default_factory=dict)
    raw: dict = field(default_factory=dict)

    def __getitem__(self, dotted: str):
        sec, key = dotted.split(".", 1)
        return self.values[sec][key]

    def with_override(self, dotted: str, text: str) -> "RunConfig":
        raw = {s: dict(kv) for s, kv in self.raw.items()}
        sec, key = _split_key(dotted)
        raw.setdefault(sec, {})[key] = text
        return build_config(self.subcommand, raw)

    def resolved(self) -> dict:
        """Every section with every key, as text, in schema order."""
        return {"subcommand": self.subcommand,
                **{s: {k: self.raw.get(s, {}).get(k, SCHEMA[s][k][1]) for k in SCHEMA[s]} for s in SCHEMA}}

    def digest(self) -> str:
        blob = json.dumps(self.resolved(), sort_keys=True).encode()
        return hashlib.sha256(blob).hexdigest()[:16]


def _split_key(dotted: str):
    if "." not in dotted:
        raise ConfigError(f"key {dotted!r} must look like section.key")
    sec, key = dotted.split(".", 1)
    if sec not in SCHEMA:
        raise ConfigError(f"unknown section {sec!r} in {dotted!r}")
    if key not in SCHEMA[sec]:
        raise ConfigError(f"unknown key {dotted!r}")
    return sec, key


def build_config(subcommand: str, raw: dict) -> RunConfig:
    if subcommand not in SUBCOMMANDS:
        raise ConfigError(f"unknown subcommand {subcommand!r}")
    values = {}
    for sec, keys in SCHEMA.items():
        given = raw.get(sec, {})
        for k in given:
            _split_key(f"{sec}.{k}")
        values[sec] = {}
        for k, (parse, default) in keys.items():
            text = given.get(k, default)
            try:
                values[sec][k] = parse(text)
            except ValueError as exc:
                raise ConfigError(f"bad value for {sec}.{k}: {text!r} ({exc})") from None
    for sec in raw:
        if sec not in SCHEMA:
            raise ConfigError(f"unknown section {sec!r}")
    return RunConfig(subcommand, values, {s: dict(kv) for s, kv in raw.items()})


def load_config(subcommand: str, path=None, overrides=()) -> RunConfig:
    """Read an INI file (optional) and apply ``section.key=value`` overrides."""
    raw: dict = {}
    if path:
        cp = configparser.ConfigParser(interpolation=None)
        cp.optionxform = str
        if not cp.read(path):
            raise ConfigError(f"cannot read config file {path}")
        raw = {s: dict(cp[s]) for s in cp.sections()}
    for item in overrides:
        if "=" not in item:
            raise ConfigError(f"override {item!r} must look like section.key=value")
        k, v = item.split("=", 1)
        sec, key = _split_key(k.strip())
        raw.setdefault(sec, {})[key] = v.strip()
    return build_config(subcommand, raw)
