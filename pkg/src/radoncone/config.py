"""Run configuration: one JSON document, validated field by field.

Example::

    {
      "suite": "mecke",
      "seed": 42,
      "replicates": 100000,
      "law": {
        "nu": {"tag": "gamma", "theta": 1.0},
        "sigma": {"box": [[0, 1]], "density": 1.0},
        "tol": 1e-3
      }
    }

A law is sampled through its ``window`` when one is given; a Gamma law
without a window is sampled on the whole ``sigma`` box with truncation
``tol``.  Numbers are checked here so that later stages never see a
malformed parameter.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

from radoncone.errors import ConfigError
from radoncone.intensity import BaseMeasure, BetaIntensity, GammaIntensity, LevyIntensity, UniformIntensity
from radoncone.measures import Box, Window
from radoncone.sampling import GammaConeSampler, PoissonWindowSampler

COMMANDS = ("sample", "check", "estimate")
SUITE_NAMES = ("ktransform", "mecke", "correlation", "calculus", "polynomials", "all")
FORMATS = ("json", "csv")
ESTIMATES = ("laplace", "moment", "correlation")
TOP_LEVEL = {"command", "suite", "seed", "replicates", "instances", "max_atoms", "law", "estimate", "out", "format"}


def _number(obj, key, path, *, default=None, positive=False, nonneg=False):
    if key not in obj:
        if default is None:
            raise ConfigError(f"{path}.{key}" if path else key, "missing")
        return default
    v = obj[key]
    where = f"{path}.{key}" if path else key
    if isinstance(v, bool) or not isinstance(v, (int, float)) or not math.isfinite(v):
        raise ConfigError(where, f"expected a finite number, got {v!r}")
    if positive and not v > 0:
        raise ConfigError(where, f"must be > 0, got {v!r}")
    if nonneg and v < 0:
        raise ConfigError(where, f"must be >= 0, got {v!r}")
    return float(v)


def _integer(obj, key, default, minimum, path=""):
    where = f"{path}.{key}" if path else key
    v = obj.get(key, default)
    if isinstance(v, bool) or not isinstance(v, int):
        raise ConfigError(where, f"expected an integer, got {v!r}")
    if v < minimum:
        raise ConfigError(where, f"must be >= {minimum}, got {v}")
    return v


def _box(obj, path) -> Box:
    if not isinstance(obj, list) or not obj:
        raise ConfigError(path, "expected a list of [lo, hi] pairs")
    for k, pair in enumerate(obj):
        if not (isinstance(pair, list) and len(pair) == 2 and all(isinstance(t, (int, float)) for t in pair)):
            raise ConfigError(f"{path}[{k}]", f"expected [lo, hi], got {pair!r}")
        if not (math.isfinite(pair[0]) and math.isfinite(pair[1]) and pair[0] < pair[1]):
            raise ConfigError(f"{path}[{k}]", f"need finite lo < hi, got {pair!r}")
    return Box.from_bounds(obj)


def _dict(obj, key, path, required=True):
    where = f"{path}.{key}" if path else key
    if key not in obj:
        if required:
            raise ConfigError(where, "missing")
        return None
    if not isinstance(obj[key], dict):
        raise ConfigError(where, "expected an object")
    return obj[key]


def parse_intensity(obj: dict, path: str = "law.nu") -> LevyIntensity:
    tag = obj.get("tag")
    if tag == "gamma":
        return GammaIntensity(_number(obj, "theta", path, default=1.0, positive=True))
    if tag == "truncated-uniform":
        lo = _number(obj, "lo", path, positive=True)
        hi = _number(obj, "hi", path, positive=True)
        if not lo < hi:
            raise ConfigError(f"{path}.hi", f"need lo < hi, got lo={lo}, hi={hi}")
        return UniformIntensity(lo, hi, _number(obj, "density", path, default=1.0, nonneg=True))
    if tag == "finite-beta":
        return BetaIntensity(_number(obj, "alpha", path, positive=True), _number(obj, "beta", path, positive=True),
                             _number(obj, "mass", path, default=1.0, nonneg=True))
    raise ConfigError(f"{path}.tag", f"unknown intensity {tag!r}; use gamma, truncated-uniform or finite-beta")


def parse_window(obj: dict, path: str) -> Window:
    if "lambda" not in obj:
        raise ConfigError(f"{path}.lambda", "missing")
    region = _box(obj["lambda"], f"{path}.lambda")
    a = _number(obj, "a", path)
    b = _number(obj, "b", path)
    if not a > 0:
        raise ConfigError(f"{path}.a", f"must be > 0, got {a}")
    if not a < b:
        raise ConfigError(f"{path}.b", f"need a < b, got a={a}, b={b}")
    return Window(region, a, b)


@dataclass
class LawConfig:
    nu: LevyIntensity
    sigma: BaseMeasure
    window: Window | None = None
    tol: float | None = None

    def sampler(self) -> PoissonWindowSampler:
        if self.window is not None:
            if self.window.region.dim != self.sigma.dim:
                raise ConfigError("law.window.lambda", "dimension differs from law.sigma.box")
            if self.sigma.box.intersect(self.window.region) is None:
                raise ConfigError("law.window.lambda", "misses the sigma box")
            return PoissonWindowSampler(self.nu, self.sigma, self.window)
        if isinstance(self.nu, GammaIntensity):
            return GammaConeSampler(self.nu.theta, self.sigma, self.sigma.box, self.tol)
        lo, hi = self.nu.support
        if isinstance(self.nu, UniformIntensity):
            return PoissonWindowSampler(self.nu, self.sigma, Window(self.sigma.box, lo, hi))
        raise ConfigError("law.window", f"required for intensity {self.nu.tag!r}")

    def to_json(self) -> dict:
        out = {"nu": self.nu.to_json(), "sigma": self.sigma.to_json()}
        if self.window is not None:
            out["window"] = self.window.to_json()
        if self.tol is not None:
            out["tol"] = self.tol
        return out


def parse_law(obj: dict, path: str = "law") -> LawConfig:
    nu = parse_intensity(_dict(obj, "nu", path), f"{path}.nu")
    sig = _dict(obj, "sigma", path)
    if "box" not in sig:
        raise ConfigError(f"{path}.sigma.box", "missing")
    sigma = BaseMeasure(_box(sig["box"], f"{path}.sigma.box"), _number(sig, "density", f"{path}.sigma", default=1.0, nonneg=True))
    w = _dict(obj, "window", path, required=False)
    window = parse_window(w, f"{path}.window") if w is not None else None
    tol = None
    if "tol" in obj:
        tol = _number(obj, "tol", path, positive=True)
    elif window is None and isinstance(nu, GammaIntensity):
        raise ConfigError(f"{path}.tol", "a Gamma law without a window needs a truncation tolerance")
    if window is None and isinstance(nu, GammaIntensity) and sigma(sigma.box) <= 0:
        raise ConfigError(f"{path}.sigma.density", "must be > 0 to sample a Gamma law")
    return LawConfig(nu, sigma, window, tol)


@dataclass
class RunConfig:
    command: str = "check"
    suite: str = "all"
    seed: int = 0
    replicates: int = 100_000
    instances: int = 100
    max_atoms: int = 10
    law: LawConfig | None = None
    estimate: dict = field(default_factory=dict)
    out: str | None = None
    format: str = "json"

    def echo(self) -> dict:
        """JSON-ready copy of the parameters that determine a run's output."""
        out = {"command": self.command, "suite": self.suite, "seed": self.seed, "replicates": self.replicates,
               "instances": self.instances, "max_atoms": self.max_atoms, "format": self.format}
        if self.law is not None:
            out["law"] = self.law.to_json()
        if self.estimate:
            out["estimate"] = self.estimate
        return out


def parse_config(obj: dict) -> RunConfig:
    """Validate a decoded configuration document.

    Raises
    ------
    ConfigError
        Naming the first offending field.
    """
    if not isinstance(obj, dict):
        raise ConfigError("$", "configuration must be a JSON object")
    unknown = sorted(set(obj) - TOP_LEVEL)
    if unknown:
        raise ConfigError(unknown[0], "unknown field")
    cfg = RunConfig()
    cfg.command = obj.get("command", "check")
    if cfg.command not in COMMANDS:
        raise ConfigError("command", f"unknown command {cfg.command!r}")
    cfg.suite = obj.get("suite", "all")
    if cfg.suite not in SUITE_NAMES:
        raise ConfigError("suite", f"unknown suite {cfg.suite!r}; choose from {', '.join(SUITE_NAMES)}")
    cfg.seed = _integer(obj, "seed", 0, 0)
    cfg.replicates = _integer(obj, "replicates", 100_000, 1)
    cfg.instances = _integer(obj, "instances", 100, 1)
    cfg.max_atoms = _integer(obj, "max_atoms", 10, 1)
    if cfg.max_atoms > 12:
        raise ConfigError("max_atoms", "exact suites enumerate 3**m partitions; use at most 12")
    if "law" in obj:
        cfg.law = parse_law(_dict(obj, "law", ""))
    est = obj.get("estimate", {})
    if not isinstance(est, dict):
        raise ConfigError("estimate", "expected an object")
    if est:
        kind = est.get("kind")
        if kind not in ESTIMATES:
            raise ConfigError("estimate.kind", f"unknown estimate {kind!r}; choose from {', '.join(ESTIMATES)}")
        if kind == "moment":
            _integer(est, "n", 1, 1, "estimate")
    cfg.estimate = est
    cfg.out = obj.get("out")
    if cfg.out is not None and not isinstance(cfg.out, str):
        raise ConfigError("out", "expected a path string")
    cfg.format = obj.get("format", "json")
    if cfg.format not in FORMATS:
        raise ConfigError("format", f"unknown format {cfg.format!r}")
    return cfg


def load_config(path: str) -> RunConfig:
    try:
        with open(path) as fh:
            obj = json.load(fh)
    except OSError as exc:
        raise ConfigError("--config", f"cannot read {path}: {exc.strerror}") from None
    except json.JSONDecodeError as exc:
        raise ConfigError("--config", f"{path} is not valid JSON: {exc.msg} at line {exc.lineno}") from None
    return parse_config(obj)
