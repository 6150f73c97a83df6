"""Experiment configuration files.

Grammar: an INI file with exactly two sections.

    [experiment]
    name        = survival | yaglom | box-law | clusters | poisson |
                  oracle-check | duality | goodpoints
    replicas    = <int>                 # main replica count
    seed        = <int>                 # 0 .. 2^64-1
    time_grid   = <a>:<b>:<step> | <t1>, <t2>, ...
    ... experiment specific keys (see EXPERIMENT_KEYS)

    [params]
    d = <int>   lambda = <float>   W = <int>   beta = <float>
    margin = <int>   ring = <int>   horizon = <float>

``rt_rule`` accepts ``c*t^k``, ``t^k`` or a bare number.  Unknown sections or
keys are rejected; there are no hidden defaults beyond those in DEFAULTS.
"""

from __future__ import annotations

import configparser
import io
import itertools
import math
import re
from dataclasses import dataclass, field

from .errors import ParameterError, UsageError
from .params import SimParams

EXPERIMENTS = ("survival", "yaglom", "box-law", "clusters", "poisson", "oracle-check",
               "duality", "goodpoints")

COMMON_KEYS = {"name", "replicas", "seed", "time_grid", "output_dir", "level"}

EXPERIMENT_KEYS = {
    "survival": {"tail_start", "initial", "compare_initial"},
    "yaglom": {"times", "width_cap", "initial"},
    "box-law": {"times", "rt_rule", "width_cap", "tail_start", "yaglom_replicas",
                "min_survivors"},
    "clusters": {"times", "rt_rule", "norm", "K", "alpha", "max_diameter_fraction"},
    "poisson": {"rt_rule", "boxes", "tail_start", "width_cap", "yaglom_replicas",
                "retry_seed", "norm"},
    "oracle-check": {"tail_start", "yaglom_time", "yaglom_replicas", "width_cap"},
    "duality": {"times"},
    "goodpoints": {"times"},
}

PARAM_KEYS = {"d", "lambda", "W", "beta", "margin", "ring", "horizon"}

DEFAULTS = {"seed": 0, "level": 0.01, "tail_start": 0.5, "width_cap": 20, "norm": "sup",
            "min_survivors": 2000, "initial": "ball:0", "max_diameter_fraction": 0.5}

_NUM = r"[0-9]*\.?[0-9]+(?:[eE][-+]?[0-9]+)?"
_RT = re.compile(rf"^\s*(?:(?P<c>{_NUM})\s*\*\s*)?t\s*\^\s*(?P<k>{_NUM})\s*$")
_CONST = re.compile(rf"^\s*(?P<c>{_NUM})\s*$")


@dataclass(frozen=True)
class RtRule:
    """``R_t = floor(c * t^k)`` (at least 1)."""

    c: float
    k: float

    @classmethod
    def parse(cls, text: str) -> "RtRule":
        m = _RT.match(text)
        if m:
            return cls(float(m["c"]) if m["c"] else 1.0, float(m["k"]))
        m = _CONST.match(text)
        if m:
            return cls(float(m["c"]), 0.0)
        raise UsageError(f"R_t rule {text!r} is not of the form c*t^k")

    def __call__(self, t: float) -> int:
        return max(1, math.floor(self.c * t**self.k + 1e-9))

    def __str__(self):
        c = repr(self.c) if self.c != int(self.c) else str(int(self.c))
        k = repr(self.k) if self.k != int(self.k) else str(int(self.k))
        return f"{c}*t^{k}"


def parse_grid(text: str) -> list[float]:
    text = text.strip()
    if ":" in text:
        parts = text.split(":")
        if len(parts) != 3:
            raise UsageError(f"grid {text!r} must be a:b:step")
        a, b, h = (float(p) for p in parts)
        if h <= 0 or b < a:
            raise UsageError(f"grid {text!r} is empty or has a non-positive step")
        n = int(math.floor((b - a) / h + 1e-9))
        return [round(a + i * h, 12) for i in range(n + 1)]
    try:
        return [float(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise UsageError(f"cannot parse time list {text!r}") from None


def _fmt_num(x) -> str:
    if isinstance(x, float) and x.is_integer():
        return str(int(x)) if abs(x) < 1e15 else repr(x)
    return repr(x) if isinstance(x, float) else str(x)


def parse_initial(text: str, d: int) -> list:
    """``ball:r`` (sites with sup-norm <= r) or ``;``-separated sites like ``0,1;2,3``."""
    text = text.strip()
    if text.startswith("ball:"):
        r = int(text[5:])
        return [tuple(p) for p in itertools.product(range(-r, r + 1), repeat=d)]
    out = []
    for chunk in text.split(";"):
        site = tuple(int(c) for c in chunk.split(","))
        if len(site) != d:
            raise UsageError(f"site {chunk!r} does not have dimension {d}")
        out.append(site)
    return out


@dataclass
class ExperimentConfig:
    name: str
    replicas: int
    params: dict
    seed: int = 0
    time_grid: list = field(default_factory=list)
    level: float = 0.01
    output_dir: str | None = None
    extra: dict = field(default_factory=dict)
    source: str = field(default="", compare=False)

    # -------------------------------------------------------------- access
    def get(self, key, default=None):
        if key in self.extra:
            return self.extra[key]
        if key in DEFAULTS:
            return DEFAULTS[key]
        return default

    def require(self, key):
        v = self.get(key)
        if v is None:
            raise UsageError(f"experiment {self.name!r} needs key {key!r}")
        return v

    def times(self) -> list[float]:
        return parse_grid(self.require("times"))

    def rt_rule(self) -> RtRule:
        return RtRule.parse(self.require("rt_rule"))

    def sim_params(self, horizon: float | None = None, **over) -> SimParams:
        p = self.params
        kw = dict(d=int(p.get("d", 1)), lam=float(p["lambda"]),
                  horizon=float(horizon if horizon is not None else p.get("horizon", 0.0)),
                  W=int(p.get("W", 0)), beta=float(p.get("beta", 1.0)), seed=int(self.seed),
                  margin=int(p["margin"]) if "margin" in p else None,
                  ring=int(p["ring"]) if "ring" in p else None)
        kw.update(over)
        return SimParams(**kw)

    # -------------------------------------------------------------- io
    def to_ini(self) -> str:
        cp = configparser.ConfigParser(interpolation=None)
        cp.optionxform = str
        exp = {"name": self.name, "replicas": str(self.replicas), "seed": str(self.seed)}
        if self.time_grid:
            exp["time_grid"] = ", ".join(_fmt_num(t) for t in self.time_grid)
        exp["level"] = _fmt_num(self.level)
        if self.output_dir is not None:
            exp["output_dir"] = self.output_dir
        for k in sorted(self.extra):
            exp[k] = str(self.extra[k])
        cp["experiment"] = exp
        cp["params"] = {k: str(v) for k, v in sorted(self.params.items())}
        buf = io.StringIO()
        cp.write(buf)
        return buf.getvalue()

    def to_json(self) -> dict:
        return {"name": self.name, "replicas": self.replicas, "seed": self.seed,
                "time_grid": self.time_grid, "level": self.level,
                "params": dict(sorted(self.params.items())),
                "extra": dict(sorted(self.extra.items()))}


def parse_config(text: str, source: str = "<string>") -> ExperimentConfig:
    cp = configparser.ConfigParser(interpolation=None, inline_comment_prefixes=("#",))
    cp.optionxform = str
    try:
        cp.read_string(text, source=source)
    except configparser.Error as e:
        raise UsageError(f"{source}: {e}") from None
    extra_sections = set(cp.sections()) - {"experiment", "params"}
    if extra_sections:
        raise UsageError(f"{source}: unknown sections {sorted(extra_sections)}")
    if "experiment" not in cp or "params" not in cp:
        raise UsageError(f"{source}: need [experiment] and [params] sections")
    exp = dict(cp["experiment"])
    par = dict(cp["params"])
    name = exp.get("name")
    if name not in EXPERIMENTS:
        raise UsageError(f"{source}: unknown experiment name {name!r}")
    allowed = COMMON_KEYS | EXPERIMENT_KEYS[name]
    unknown = set(exp) - allowed
    if unknown:
        raise UsageError(f"{source}: unknown keys for {name}: {sorted(unknown)}")
    unknown = set(par) - PARAM_KEYS
    if unknown:
        raise UsageError(f"{source}: unknown [params] keys {sorted(unknown)}")
    if "lambda" not in par:
        raise UsageError(f"{source}: [params] needs lambda")
    try:
        replicas = int(exp["replicas"])
        seed = int(exp.get("seed", 0))
        level = float(exp.get("level", 0.01))
        grid = parse_grid(exp["time_grid"]) if "time_grid" in exp else []
        params = {}
        for k, v in par.items():
            params[k] = float(v) if k in ("lambda", "beta", "horizon") else int(v)
    except KeyError as e:
        raise UsageError(f"{source}: missing key {e}") from None
    except ValueError as e:
        raise UsageError(f"{source}: {e}") from None
    extra = {k: v for k, v in exp.items()
             if k not in ("name", "replicas", "seed", "level", "time_grid", "output_dir")}
    for k in ("yaglom_replicas", "min_survivors", "width_cap", "boxes",
              "retry_seed"):
        if k in extra:
            try:
                extra[k] = int(extra[k])
            except ValueError:
                raise UsageError(f"{source}: {k} must be an integer") from None
    for k in ("tail_start", "K", "alpha", "yaglom_time", "max_diameter_fraction"):
        if k in extra:
            try:
                extra[k] = float(extra[k])
            except ValueError:
                raise UsageError(f"{source}: {k} must be a number") from None
    cfg = ExperimentConfig(name, replicas, params, seed, grid, level, exp.get("output_dir"),
                           extra, source)
    validate(cfg)
    return cfg


def load_config(path) -> ExperimentConfig:
    with open(path) as fh:
        return parse_config(fh.read(), str(path))


def validate(cfg: ExperimentConfig):
    """Check everything that can be checked before simulating."""
    if cfg.replicas < 0:
        raise UsageError("replicas must be non-negative")
    if not 0 < cfg.level < 1:
        raise UsageError("level must lie in (0, 1)")
    if "rt_rule" in cfg.extra:
        cfg.rt_rule()
    if "times" in cfg.extra:
        if not cfg.times():
            raise UsageError("times must not be empty")
    if "initial" in cfg.extra or "compare_initial" in cfg.extra:
        d = int(cfg.params.get("d", 1))
        for k in ("initial", "compare_initial"):
            if k in cfg.extra:
                parse_initial(cfg.extra[k], d)
    if cfg.get("norm") not in ("sup", "l1"):
        raise UsageError("norm must be sup or l1")
    horizons = [float(cfg.params.get("horizon", 0.0))]
    if "times" in cfg.extra:
        horizons.append(max(cfg.times()))
    if cfg.time_grid:
        horizons.append(max(cfg.time_grid))
    try:
        p = cfg.sim_params(horizon=max(horizons))
    except ParameterError as e:
        raise UsageError(str(e)) from None
    if p.ring is None:
        try:
            p.require_subcritical()
        except ParameterError as e:
            raise UsageError(str(e)) from None
    if "rt_rule" in cfg.extra and p.ring is None and cfg.name in ("box-law",):
        R = max(cfg.rt_rule()(t) for t in cfg.times())
        if R > p.W:
            raise UsageError(f"R_t = {R} exceeds the window radius W = {p.W}")
