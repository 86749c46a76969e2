"""Experiment configs: YAML or JSON text, validated before any compute.

Schema errors name the offending field and, when the value came from a
file, its line.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field
from pathlib import Path

import yaml

from .errors import ConfigError
from .observables import (
    CenteredCoordinate,
    Const,
    PinskerFn,
    Tensor,
    TorusCharacter,
    add,
    conj,
    prod,
    scale,
    shift,
)
from .systems import Bernoulli, Product, Rotation, Skew

EXPERIMENTS = ("ww-decay", "bourgain", "vdc", "seminorm", "return-times", "rt-chain", "classical")

NAMED_ANGLES = {
    "sqrt2-1": math.sqrt(2) - 1,
    "golden": (math.sqrt(5) - 1) / 2,
}
ANGLE_NOTE = (
    "decay bounds for skew products hold for almost every angle; "
    "no specific angle carries a guarantee"
)


# ---------------------------------------------------------------- located data


class Source:
    """Maps field paths to line numbers of the text they came from."""

    def __init__(self, name: str = "<config>", lines: dict | None = None):
        self.name = name
        self.lines = lines or {}

    def where(self, path) -> str:
        path = tuple(path)
        label = ".".join(str(p) for p in path) or "<root>"
        while path and path not in self.lines:
            path = path[:-1]
        line = self.lines.get(path)
        return f"{self.name}:{line}: field '{label}'" if line else f"{self.name}: field '{label}'"

    def error(self, path, msg) -> ConfigError:
        return ConfigError(f"{self.where(path)}: {msg}")


def _construct(node, path, lines):
    lines[path] = node.start_mark.line + 1
    if isinstance(node, yaml.MappingNode):
        out = {}
        for k, v in node.value:
            key = yaml.safe_load(yaml.serialize(k)) if not isinstance(k, yaml.ScalarNode) else _scalar(k)
            out[key] = _construct(v, path + (key,), lines)
        return out
    if isinstance(node, yaml.SequenceNode):
        return [_construct(v, path + (i,), lines) for i, v in enumerate(node.value)]
    return _scalar(node)


def _scalar(node):
    return yaml.safe_load(yaml.serialize(node))


def parse_text(text: str, name: str = "<config>") -> tuple[dict, Source]:
    try:
        node = yaml.compose(text, Loader=yaml.SafeLoader)
    except yaml.YAMLError as e:
        raise ConfigError(f"{name}: not valid YAML/JSON: {e}") from e
    lines: dict = {}
    data = {} if node is None else _construct(node, (), lines)
    if not isinstance(data, dict):
        raise ConfigError(f"{name}: top level must be a mapping")
    return data, Source(name, lines)


def load_text(path) -> tuple[dict, Source]:
    p = Path(path)
    return parse_text(p.read_text(encoding="utf-8"), str(p))


# ---------------------------------------------------------------- field readers


def _get(d, key, src, path, kind, default=...):
    if key not in d:
        if default is ...:
            raise src.error(path + (key,), "required field is missing")
        return default
    v = d[key]
    p = path + (key,)
    if kind is int:
        if isinstance(v, bool) or not isinstance(v, int):
            raise src.error(p, f"expected an integer, got {v!r}")
    elif kind is float:
        if isinstance(v, bool) or not isinstance(v, (int, float)):
            raise src.error(p, f"expected a number, got {v!r}")
        v = float(v)
    elif kind is str:
        if not isinstance(v, str):
            raise src.error(p, f"expected a string, got {v!r}")
    elif kind is list:
        if not isinstance(v, list):
            raise src.error(p, f"expected a list, got {v!r}")
    elif kind is dict:
        if not isinstance(v, dict):
            raise src.error(p, f"expected a mapping, got {v!r}")
    return v


def parse_angle(v, src, path) -> float:
    if isinstance(v, str):
        if v in NAMED_ANGLES:
            return NAMED_ANGLES[v]
        try:
            v = float(v)
        except ValueError:
            raise src.error(path, f"unknown angle {v!r}; use a decimal or one of {sorted(NAMED_ANGLES)}")
    if isinstance(v, bool) or not isinstance(v, (int, float)) or not 0 < v < 1:
        raise src.error(path, f"angle must be a number in (0, 1), got {v!r}")
    return float(v)


def parse_system(d, src, path=("system",)):
    if not isinstance(d, dict):
        raise src.error(path, "expected a mapping with a 'kind' field")
    kind = _get(d, "kind", src, path, str)
    try:
        if kind == "rotation":
            return Rotation(parse_angle(_get(d, "angle", src, path, object), src, path + ("angle",)))
        if kind == "skew":
            dim = _get(d, "dim", src, path, int)
            return Skew(dim, parse_angle(_get(d, "angle", src, path, object), src, path + ("angle",)))
        if kind == "bernoulli":
            probs = _get(d, "probs", src, path, list, [0.5, 0.5])
            return Bernoulli(tuple(float(p) for p in probs))
        if kind == "product":
            return Product(parse_system(_get(d, "left", src, path, dict), src, path + ("left",)),
                           parse_system(_get(d, "right", src, path, dict), src, path + ("right",)))
    except (ValueError, TypeError) as e:
        if isinstance(e, ConfigError):
            raise
        raise src.error(path, str(e)) from e
    raise src.error(path + ("kind",), f"unknown system kind {kind!r}; use rotation, skew, bernoulli or product")


def _number(v, src, path) -> complex:
    if isinstance(v, list) and len(v) == 2:
        return complex(float(v[0]), float(v[1]))
    if isinstance(v, bool) or not isinstance(v, (int, float)):
        raise src.error(path, f"expected a number or [re, im], got {v!r}")
    return float(v)


def parse_observable(d, src, path, system):
    if not isinstance(d, dict):
        raise src.error(path, "expected a mapping with a 'kind' field")
    kind = _get(d, "kind", src, path, str)
    sub = lambda key, sys=system: parse_observable(_get(d, key, src, path, dict), src, path + (key,), sys)  # noqa: E731
    try:
        if kind == "character":
            freq = _get(d, "freq", src, path, list)
            if not all(isinstance(a, int) and not isinstance(a, bool) for a in freq):
                raise src.error(path + ("freq",), "frequencies must be integers")
            dim = getattr(system, "dim", None)
            if dim is not None and len(freq) != dim:
                raise src.error(path + ("freq",), f"expected {dim} frequencies, got {len(freq)}")
            return TorusCharacter(tuple(freq))
        if kind == "pinsker":
            cyl = _get(d, "cylinder", src, path, object)
            items = cyl.items() if isinstance(cyl, dict) else cyl
            return PinskerFn(tuple((int(i), int(s)) for i, s in items),
                             _get(d, "cutoff", src, path, int), _get(d, "level", src, path, int, 0))
        if kind == "centered":
            index = _get(d, "index", src, path, int, 0)
            if isinstance(system, Bernoulli):
                default = sum(s * p for s, p in enumerate(system.probs))
            else:
                default = 0.5
            return CenteredCoordinate(index, _get(d, "mean", src, path, float, default))
        if kind == "const":
            return Const(_number(_get(d, "value", src, path, object), src, path + ("value",)))
        if kind == "tensor":
            if not isinstance(system, Product):
                raise src.error(path, "tensor observables need a product system")
            return Tensor(sub("left", system.left), sub("right", system.right))
        if kind in ("prod", "sum"):
            items = _get(d, "of", src, path, list)
            parts = [parse_observable(e, src, path + ("of", i), system) for i, e in enumerate(items)]
            if not parts:
                raise src.error(path + ("of",), "needs at least one term")
            return prod(*parts) if kind == "prod" else add(*parts)
        if kind == "conj":
            return conj(sub("of"))
        if kind == "scale":
            return scale(_number(_get(d, "c", src, path, object), src, path + ("c",)), sub("of"))
        if kind == "shift":
            return shift(_get(d, "m", src, path, int), sub("of"))
    except ConfigError:
        raise
    except (ValueError, TypeError) as e:
        raise src.error(path, str(e)) from e
    raise src.error(path + ("kind",), f"unknown observable kind {kind!r}")


# ---------------------------------------------------------------- experiment config


@dataclass
class ExperimentConfig:
    experiment: str
    system: object = None
    observables: list = field(default_factory=list)
    order: int = 2
    Ns: list = field(default_factory=list)
    p: int = 2
    beta: float = 0.5
    seed: int = 0
    samples: int = 256
    scheme: str = "pseudorandom"
    oversample: int = 8
    refine: str = "parabolic"
    exponent: float = 2.0 / 3.0
    workers: int = 1
    trials: int = 1
    exponents: list = field(default_factory=list)
    H: int = 64
    h_cap: int = 16
    system_y: object = None
    observables_y: list = field(default_factory=list)
    exponents_y: list = field(default_factory=list)
    extra: dict = field(default_factory=dict)
    out: str = "results/run"
    raw: dict = field(default_factory=dict, repr=False)

    def describe(self) -> dict:
        """Every setting, defaults included, as plain data."""
        d = {k: v for k, v in asdict(self).items() if k != "raw"}
        d["system"] = self.system.describe() if self.system is not None else None
        d["system_y"] = self.system_y.describe() if self.system_y is not None else None
        d["observables"] = [repr(o) for o in self.observables]
        d["observables_y"] = [repr(o) for o in self.observables_y]
        return d


DEFAULTS = {
    "ww-decay": {"Ns": {"start": 256, "stop": 16384, "factor": 2}, "order": 2, "p": 2, "samples": 256,
                 "oversample": 4},
    "bourgain": {"Ns": [64, 256, 1024], "samples": 1024, "trials": 50, "exponents": [1, 2]},
    "vdc": {"Ns": {"start": 8, "stop": 1024, "factor": 2}, "trials": 1000, "oversample": 32},
    "seminorm": {"Ns": [64, 256, 1024], "order": 2, "samples": 64, "H": 64},
    "return-times": {"Ns": {"start": 64, "stop": 4096, "factor": 2}, "samples": 256, "exponents_y": [1, 2]},
    "rt-chain": {"Ns": [64, 256, 1024], "samples": 256, "trials": 20, "refine": "golden"},
    "classical": {"Ns": [512], "samples": 256, "trials": 100, "refine": "golden"},
}

KNOWN = {
    "experiment", "system", "observable", "observables", "order", "Ns", "p", "beta", "seed", "samples",
    "scheme", "oversample", "refine", "exponent", "flat", "workers", "trials", "exponents", "H", "h_cap",
    "system_y", "observable_y", "observables_y", "exponents_y", "extra", "out",
}


def parse_Ns(v, src, path=("Ns",)) -> list:
    if isinstance(v, dict):
        start = _get(v, "start", src, path, int)
        stop = _get(v, "stop", src, path, int)
        factor = _get(v, "factor", src, path, int, 2)
        if factor < 2 or start < 1 or stop < start:
            raise src.error(path, "geometric grid needs 1 <= start <= stop and factor >= 2")
        out, N = [], start
        while N <= stop:
            out.append(N)
            N *= factor
        v = out
    if not isinstance(v, list):
        raise src.error(path, f"expected a list of integers or {{start, stop, factor}}, got {v!r}")
    if not v:
        raise src.error(path, "N list must not be empty")
    for i, N in enumerate(v):
        if isinstance(N, bool) or not isinstance(N, int) or N < 1:
            raise src.error(path + (i,), f"N must be a positive integer, got {N!r}")
    return list(v)


def _observables(data, src, one, many, system):
    if many in data:
        items = _get(data, many, src, (), list)
        return [parse_observable(o, src, (many, i), system) for i, o in enumerate(items)]
    if one in data:
        return [parse_observable(_get(data, one, src, (), dict), src, (one,), system)]
    return []


def build_config(data: dict, src: Source | None = None) -> ExperimentConfig:
    """Validate parsed config data."""
    src = src or Source()
    exp = _get(data, "experiment", src, (), str)
    if exp not in EXPERIMENTS:
        raise src.error(("experiment",), f"unknown experiment {exp!r}; use one of {list(EXPERIMENTS)}")
    unknown = sorted(set(data) - KNOWN)
    if unknown:
        raise src.error((unknown[0],), f"unknown field; allowed fields are {sorted(KNOWN)}")
    merged = dict(DEFAULTS[exp])
    merged.update(data)
    data = merged
    cfg = ExperimentConfig(experiment=exp, raw=data)
    if "system" in data:
        cfg.system = parse_system(data["system"], src)
    if "system_y" in data:
        cfg.system_y = parse_system(data["system_y"], src, ("system_y",))
    cfg.observables = _observables(data, src, "observable", "observables", cfg.system)
    cfg.observables_y = _observables(data, src, "observable_y", "observables_y", cfg.system_y)
    cfg.Ns = parse_Ns(data.get("Ns"), src)
    for key, kind in (("order", int), ("p", int), ("seed", int), ("samples", int), ("oversample", int),
                      ("workers", int), ("trials", int), ("H", int), ("h_cap", int), ("beta", float),
                      ("exponent", float), ("refine", str), ("scheme", str), ("out", str)):
        if key in data:
            setattr(cfg, key, _get(data, key, src, (), kind))
    if data.get("flat"):
        cfg.exponent = 1.0
    for key in ("exponents", "exponents_y"):
        if key in data:
            vals = _get(data, key, src, (), list)
            if not all(isinstance(a, int) and not isinstance(a, bool) for a in vals):
                raise src.error((key,), "exponents must be integers")
            setattr(cfg, key, list(vals))
    cfg.extra = dict(_get(data, "extra", src, (), dict, {}))
    _fill_observables(cfg)
    _check_ranges(cfg, src)
    return cfg


def default_observable(system):
    """Centered coordinate 0 on Bernoulli systems, the last-coordinate character on tori."""
    if isinstance(system, Bernoulli):
        return CenteredCoordinate(0, sum(s * p for s, p in enumerate(system.probs)))
    if isinstance(system, Rotation):
        return TorusCharacter((1,))
    if isinstance(system, Skew):
        return TorusCharacter((0,) * (system.dim - 1) + (1,))
    return None


def _fill_observables(cfg: ExperimentConfig):
    if not cfg.observables and cfg.system is not None:
        f = default_observable(cfg.system)
        cfg.observables = [f] if f is not None else []
    if cfg.experiment == "bourgain" and len(cfg.observables) == 1:
        cfg.observables = cfg.observables * len(cfg.exponents)
    if not cfg.observables_y and cfg.system_y is not None:
        g = default_observable(cfg.system_y)
        n = 2 if cfg.experiment == "rt-chain" else len(cfg.exponents_y)
        cfg.observables_y = [g] * n if g is not None else []


def _check_ranges(cfg: ExperimentConfig, src: Source):
    if cfg.p not in (1, 2):
        raise src.error(("p",), f"p must be 1 or 2, got {cfg.p}")
    if not 0 < cfg.beta <= 1:
        raise src.error(("beta",), "beta must lie in (0, 1]")
    if cfg.order < 1:
        raise src.error(("order",), "order must be >= 1")
    if cfg.samples < 1:
        raise src.error(("samples",), "samples must be >= 1")
    if not 0 <= cfg.seed < 1 << 64:
        raise src.error(("seed",), "seed must be a 64-bit unsigned integer")
    if cfg.oversample < 2:
        raise src.error(("oversample",), "oversample must be >= 2")
    if cfg.refine not in ("none", "parabolic", "golden"):
        raise src.error(("refine",), "refine must be none, parabolic or golden")
    if cfg.scheme not in ("pseudorandom", "lattice"):
        raise src.error(("scheme",), "scheme must be pseudorandom or lattice")
    if cfg.workers < 1 or cfg.trials < 1:
        raise src.error(("workers",) if cfg.workers < 1 else ("trials",), "must be >= 1")
    if cfg.trials != 1 and cfg.experiment in ("ww-decay", "seminorm", "return-times"):
        raise src.error(("trials",), f"{cfg.experiment} uses one sample set; trials must be 1")
    needs_system = {"ww-decay", "bourgain", "seminorm", "return-times", "rt-chain"}
    if cfg.experiment in needs_system and cfg.system is None:
        raise src.error(("system",), "required field is missing")
    if cfg.experiment in ("ww-decay", "seminorm") and len(cfg.observables) != 1:
        raise src.error(("observable",), "exactly one observable is required")
    if cfg.experiment == "bourgain":
        if len(cfg.observables) != len(cfg.exponents) or len(cfg.exponents) < 2:
            raise src.error(("exponents",), "need J >= 2 observables with one exponent each")
    if cfg.experiment in ("return-times", "rt-chain"):
        if cfg.system_y is None:
            raise src.error(("system_y",), "required field is missing")
        if not cfg.observables or not cfg.observables_y:
            raise src.error(("observables",), "need observables on both systems")
        if cfg.experiment == "rt-chain" and len(cfg.observables_y) != 2:
            raise src.error(("observables_y",), "the chain needs exactly two observables g1, g2")
        if cfg.experiment == "return-times":
            if len(cfg.exponents) not in (0, len(cfg.observables)):
                raise src.error(("exponents",), "need one exponent per observable")
            if len(cfg.exponents_y) != len(cfg.observables_y):
                raise src.error(("exponents_y",), "need one exponent per observable")
    if cfg.experiment == "ww-decay" and min(cfg.Ns) < 4:
        raise src.error(("Ns",), "WW averages need N >= 4")


def load_config(path, overrides: dict | None = None) -> ExperimentConfig:
    data, src = load_text(path)
    data.update(overrides or {})
    return build_config(data, src)
