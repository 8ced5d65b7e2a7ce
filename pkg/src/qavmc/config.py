"""Run configuration: YAML file + ``--set`` overrides, validation, seeds and provenance."""
from __future__ import annotations

import copy
import hashlib
import json
import os
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import yaml

SCHEMA_VERSION = 1
OUTPUT_ROOT_ENV = "QAVMC_OUTPUT_ROOT"

SUBCOMMANDS = ("gap-scan", "gap-size", "tau-threshold", "histogram", "mcmc-observable", "vmc", "mixing-time")

# evolution-time scan ranges per system family: (start, stop, step)
DEFAULT_TAU_GRIDS = {"hubbard": (0.1, 20.0, 0.2), "hchain": (0.1, 60.0, 0.2), "h2o": (0.1, 40.0, 0.2)}


class ConfigError(ValueError):
    pass


def tau_grid(start: float, stop: float, step: float) -> np.ndarray:
    if step <= 0 or stop < start:
        raise ConfigError(f"empty tau grid ({start}, {stop}, {step})")
    count = int(np.floor((stop - start) / step + 1e-9)) + 1
    return np.round(start + step * np.arange(count), 10)


def set_path(tree: dict, dotted: str, value) -> None:
    keys = dotted.split(".")
    node = tree
    for k in keys[:-1]:
        node = node.setdefault(k, {})
        if not isinstance(node, dict):
            raise ConfigError(f"cannot set {dotted}: {k} is not a section")
    node[keys[-1]] = value


def parse_override(text: str) -> tuple[str, object]:
    if "=" not in text:
        raise ConfigError(f"override {text!r} is not of the form key.path=value")
    key, raw = text.split("=", 1)
    return key.strip(), yaml.safe_load(raw)


def config_hash(tree: dict) -> str:
    blob = json.dumps(tree, sort_keys=True, separators=(",", ":"), default=str)
    return hashlib.sha256(blob.encode()).hexdigest()[:16]


def stream(seed: int, path: str) -> np.random.SeedSequence:
    """Random stream for a named place in the config tree, derived from the master seed."""
    key = int.from_bytes(hashlib.sha256(path.encode()).digest()[:8], "little")
    return np.random.SeedSequence(entropy=seed, spawn_key=(key,))


@dataclass
class RunConfig:
    subcommand: str
    system: dict
    proposals: list
    experiment: dict
    output: Path
    seed: int
    base_dir: Path = field(default_factory=Path.cwd)
    raw: dict = field(default_factory=dict, repr=False)

    @property
    def hash(self) -> str:
        # where results are written is not part of what was computed
        return config_hash({k: v for k, v in self.raw.items() if k != "output"})

    @property
    def family(self) -> str:
        if "hubbard" in self.system:
            return "hubbard"
        return self.system["molecule"].get("family", "hchain")

    def resolve(self, p) -> Path:
        """Relative paths are looked up next to the config file first, then in the working directory."""
        p = Path(p)
        if p.is_absolute() or not (self.base_dir / p).exists():
            return p
        return self.base_dir / p

    def taus(self, block: dict | None = None) -> np.ndarray:
        g = (block or {}).get("tau_grid") or self.experiment.get("tau_grid")
        if g is None:
            return tau_grid(*DEFAULT_TAU_GRIDS[self.family])
        if isinstance(g, dict):
            return tau_grid(float(g["start"]), float(g["stop"]), float(g["step"]))
        arr = np.asarray(g, dtype=np.float64)
        if arr.size == 0:
            raise ConfigError("tau_grid is empty")
        return arr

    def tau_interval(self, block: dict | None = None) -> tuple[float, float]:
        iv = (block or {}).get("tau_interval") or self.experiment.get("tau_interval")
        if iv is None:
            start, stop, _ = DEFAULT_TAU_GRIDS[self.family]
            return (start, stop)
        lo, hi = (float(x) for x in iv)
        if not hi > lo:
            raise ConfigError(f"tau_interval {iv} is empty")
        return (lo, hi)

    def provenance(self) -> dict:
        return {"schema_version": SCHEMA_VERSION, "config_hash": self.hash, "seed": self.seed,
                "subcommand": self.subcommand}


def load_config(path, subcommand: str, overrides=(), seed: int | None = None, output: str | None = None) -> RunConfig:
    path = Path(path)
    if not path.is_file():
        raise ConfigError(f"config file {path} not found")
    try:
        tree = yaml.safe_load(path.read_text()) or {}
    except yaml.YAMLError as exc:
        raise ConfigError(f"{path}: invalid YAML: {exc}") from exc
    tree = copy.deepcopy(tree)
    for item in overrides:
        key, value = parse_override(item) if isinstance(item, str) else item
        set_path(tree, key, value)
    if seed is not None:
        tree["seed"] = seed
    if output is not None:
        tree["output"] = output
    return validate(tree, subcommand, path.parent)


def validate(tree: dict, subcommand: str, base_dir: Path) -> RunConfig:
    if subcommand not in SUBCOMMANDS:
        raise ConfigError(f"unknown subcommand {subcommand!r}")
    if "seed" not in tree or not isinstance(tree["seed"], int):
        raise ConfigError("seed: an integer master seed is required")
    system = tree.get("system")
    if not isinstance(system, dict) or len(system) != 1 or next(iter(system)) not in ("hubbard", "molecule"):
        raise ConfigError("system: exactly one of 'hubbard' or 'molecule' is required")
    if "molecule" in system:
        mol = system["molecule"]
        if "fcidump" not in mol:
            raise ConfigError("system.molecule.fcidump: path is required")
        if not (base_dir / mol["fcidump"]).is_file() and not Path(mol["fcidump"]).is_file():
            raise ConfigError(f"system.molecule.fcidump: file {mol['fcidump']} does not exist")
        if mol.get("family", "hchain") not in DEFAULT_TAU_GRIDS:
            raise ConfigError(f"system.molecule.family: unknown family {mol['family']!r}")
    else:
        hub = system["hubbard"]
        if "U" not in hub:
            raise ConfigError("system.hubbard.U: on-site interaction is required")
        lat = hub.get("lattice", {})
        if not lat.get("dims"):
            raise ConfigError("system.hubbard.lattice.dims: site counts are required")
    proposals = tree.get("proposals", [])
    if not isinstance(proposals, list):
        raise ConfigError("proposals: must be a list")
    for k, p in enumerate(proposals):
        if not isinstance(p, dict) or "kind" not in p:
            raise ConfigError(f"proposals[{k}].kind: required")
        from .proposals import KINDS

        if p["kind"] not in KINDS:
            raise ConfigError(f"proposals[{k}].kind: unknown proposal {p['kind']!r}")
        for key in ("fcidump",):
            if key in p and not (base_dir / p[key]).is_file() and not Path(p[key]).is_file():
                raise ConfigError(f"proposals[{k}].{key}: file {p[key]} does not exist")
    experiment = tree.get("experiment", {}) or {}
    for key in ("fcidumps",):
        for k, f in enumerate(experiment.get(key, []) or []):
            f = f["path"] if isinstance(f, dict) else f
            if not (base_dir / f).is_file() and not Path(f).is_file():
                raise ConfigError(f"experiment.{key}[{k}]: file {f} does not exist")
    for key in ("U_values", "sizes", "c", "fcidumps"):
        if key in experiment and not experiment[key]:
            raise ConfigError(f"experiment.{key}: grid is empty")
    out = Path(tree.get("output", f"out/{subcommand}"))
    root = os.environ.get(OUTPUT_ROOT_ENV)
    if root and not out.is_absolute():
        out = Path(root) / out
    return RunConfig(subcommand, system, proposals, experiment, out, int(tree["seed"]), base_dir, tree)
