"""Run configuration shared by the command-line front end and the scripts."""

from __future__ import annotations

import json
import math
import os
from dataclasses import dataclass, field, replace

import numpy as np

from .errors import ConfigError
from .shift import CylinderFunction

#: Name of the generator behind every randomized battery; recorded in reports.
RNG_NAME = "numpy.random.Generator(PCG64)"


@dataclass(frozen=True)
class BetaGrid:
    """``count`` evenly spaced values from ``start`` to ``stop`` inclusive."""

    start: float
    stop: float
    count: int

    def __post_init__(self):
        if int(self.count) != self.count or self.count < 1:
            raise ConfigError(f"beta grid count must be an integer >= 1, got {self.count!r}")

    def values(self):
        if self.count == 1:
            return [float(self.start)]
        return [float(b) for b in np.linspace(self.start, self.stop, int(self.count))]


@dataclass(frozen=True)
class RunConfig:
    """Everything a CLI run depends on; equal configs give byte-identical outputs.

    ``H`` is the positive potential, ``p`` the reference Jacobian (``None``
    means the uniform ``1/k``).  ``tol`` is the verification tolerance of the
    KMS battery; ``solver_tol`` drives the power iteration.
    """

    k: int = 2
    depth: int = 6
    H: CylinderFunction = None
    p: CylinderFunction = None
    beta: float = 1.0
    grid: BetaGrid = field(default_factory=lambda: BetaGrid(0.0, 2.0, 21))
    betas: tuple = ()
    tol: float = 1e-8
    solver_tol: float = 1e-12
    relation_tol: float = 1e-12
    probe_tol: float = 1e-6
    probe_steps: int = 6
    battery_levels: int = 3
    axiom_trials: int = 50
    seed: int = 0
    out: str = "."
    ff_gamma: float = 3.0
    ff_kmax: int = 10000
    ff_tol: float = 1e-10
    ff_betas: tuple = (0.0, 0.25, 0.5, 0.75, 1.0, 2.0, 5.0)

    def __post_init__(self):
        if int(self.k) != self.k or self.k < 2:
            raise ConfigError(f"k must be an integer >= 2, got {self.k!r}")
        if int(self.depth) != self.depth or self.depth < 1:
            raise ConfigError(f"depth must be an integer >= 1, got {self.depth!r}")
        for name in ("tol", "solver_tol", "relation_tol", "probe_tol", "ff_tol"):
            v = getattr(self, name)
            if not (isinstance(v, (int, float)) and math.isfinite(v) and v > 0):
                raise ConfigError(f"{name} must be a finite number > 0, got {v!r}")
        if self.H is None:
            object.__setattr__(self, "H", CylinderFunction.constant(self.k, 1.0))
        for name in ("H", "p"):
            f = getattr(self, name)
            if f is not None and f.k != self.k:
                raise ConfigError(f"{name} lives on {f.k} symbols, config has k={self.k}")
        if not self.H.is_positive():
            raise ConfigError("H must be strictly positive")
        if self.p is not None and not self.p.is_positive():
            raise ConfigError("p must be strictly positive")
        if self.probe_steps < 0 or self.battery_levels < 0 or self.axiom_trials < 0:
            raise ConfigError("probe_steps, battery_levels and axiom_trials must be >= 0")

    @property
    def jacobian(self):
        return self.p if self.p is not None else CylinderFunction.constant(self.k, 1.0 / self.k)

    def beta_values(self):
        return [float(b) for b in self.betas] if self.betas else self.grid.values()

    def with_overrides(self, **kw):
        kw = {k: v for k, v in kw.items() if v is not None}
        return replace(self, **kw) if kw else self


def parse_function(spec, k, base_dir=".", what="potential"):
    """Potential spec: a number, a value list, a ``{"values": ...}`` dict or a JSON file path.

    A bare value list of length ``k**d`` is read as a depth-``d`` function.
    """
    if isinstance(spec, str):
        path = spec if os.path.isabs(spec) else os.path.join(base_dir, spec)
        if not os.path.isfile(path):
            raise ConfigError(f"{what} file not found: {spec}")
        try:
            with open(path, encoding="utf-8") as fh:
                spec = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"{what} file {spec} is not valid JSON: {exc}") from exc
    if isinstance(spec, (int, float)) and not isinstance(spec, bool):
        return CylinderFunction.constant(k, float(spec))
    if isinstance(spec, dict):
        if "values" not in spec:
            raise ConfigError(f"{what} dict needs a 'values' entry")
        kk = spec.get("k", k)
        if kk != k:
            raise ConfigError(f"{what} has k={kk}, config has k={k}")
        vals = spec["values"]
        depth = spec.get("depth")
    elif isinstance(spec, (list, tuple)):
        vals, depth = spec, None
    else:
        raise ConfigError(f"cannot read {what} from {type(spec).__name__}")
    if vals and isinstance(vals[0], (list, tuple)):
        raise ConfigError(f"{what} must be real")
    n = len(vals)
    if depth is None:
        depth = round(math.log(n, k)) if n > 0 else -1
    if depth < 0 or k**depth != n:
        raise ConfigError(f"{what} has {n} values, not a power of k={k}")
    try:
        return CylinderFunction(k, depth, [float(v) for v in vals])
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"bad {what}: {exc}") from exc


def parse_grid(spec):
    """``{"start", "stop", "count"}``, ``"start:stop:count"`` or ``[start, stop, count]``."""
    try:
        if isinstance(spec, BetaGrid):
            return spec
        if isinstance(spec, dict):
            return BetaGrid(float(spec["start"]), float(spec["stop"]), int(spec["count"]))
        if isinstance(spec, str):
            spec = spec.split(":")
        start, stop, count = spec
        if float(count) != int(float(count)):
            raise ConfigError(f"grid count must be an integer, got {count!r}")
        return BetaGrid(float(start), float(stop), int(float(count)))
    except (KeyError, TypeError, ValueError) as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigError(f"bad beta grid {spec!r}: {exc}") from exc


def parse_beta_list(spec):
    """Comma-separated string or list of numbers."""
    try:
        if isinstance(spec, str):
            spec = [s for s in spec.split(",") if s.strip()]
        vals = tuple(float(s) for s in spec)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"bad beta list {spec!r}: {exc}") from exc
    if not vals:
        raise ConfigError("beta list is empty")
    if not all(math.isfinite(v) for v in vals):
        raise ConfigError("beta values must be finite")
    return vals


_FIELDS = {
    "k", "depth", "H", "p", "beta", "grid", "betas", "tol", "solver_tol", "relation_tol",
    "probe_tol", "probe_steps", "battery_levels", "axiom_trials", "seed", "out", "ff",
}


def config_from_dict(d, base_dir="."):
    if not isinstance(d, dict):
        raise ConfigError("config must be a JSON object")
    unknown = set(d) - _FIELDS
    if unknown:
        raise ConfigError(f"unknown config keys: {sorted(unknown)}")
    kw = {}
    k = d.get("k", 2)
    if not isinstance(k, int) or k < 2:
        raise ConfigError(f"k must be an integer >= 2, got {k!r}")
    kw["k"] = k
    for name in ("depth", "seed", "probe_steps", "battery_levels", "axiom_trials"):
        if name in d:
            if not isinstance(d[name], int) or isinstance(d[name], bool):
                raise ConfigError(f"{name} must be an integer")
            kw[name] = d[name]
    for name in ("beta", "tol", "solver_tol", "relation_tol", "probe_tol"):
        if name in d:
            if not isinstance(d[name], (int, float)) or isinstance(d[name], bool):
                raise ConfigError(f"{name} must be a number")
            kw[name] = float(d[name])
    if "H" in d:
        kw["H"] = parse_function(d["H"], k, base_dir, "H")
    if "p" in d and d["p"] is not None:
        kw["p"] = parse_function(d["p"], k, base_dir, "p")
    if "grid" in d:
        kw["grid"] = parse_grid(d["grid"])
    if "betas" in d:
        kw["betas"] = parse_beta_list(d["betas"])
    if "out" in d:
        kw["out"] = str(d["out"])
    ff = d.get("ff", {})
    if not isinstance(ff, dict):
        raise ConfigError("ff must be an object")
    bad = set(ff) - {"gamma", "kmax", "tol", "betas"}
    if bad:
        raise ConfigError(f"unknown ff keys: {sorted(bad)}")
    if "gamma" in ff:
        kw["ff_gamma"] = float(ff["gamma"])
    if "kmax" in ff:
        kw["ff_kmax"] = int(ff["kmax"])
    if "tol" in ff:
        kw["ff_tol"] = float(ff["tol"])
    if "betas" in ff:
        kw["ff_betas"] = parse_beta_list(ff["betas"])
    return RunConfig(**kw)


def load_config(path):
    if not os.path.isfile(path):
        raise ConfigError(f"config file not found: {path}")
    try:
        with open(path, encoding="utf-8") as fh:
            d = json.load(fh)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config {path} is not valid JSON: {exc}") from exc
    return config_from_dict(d, os.path.dirname(os.path.abspath(path)))
