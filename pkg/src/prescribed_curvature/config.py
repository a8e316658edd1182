"""
Run configuration: a YAML document mapped onto dataclasses.

Schema (every section optional except ``metric``)::

    metric:
      terms: [{l: 2, m: 0, coeff: 0.1}]
      grid_resolution: 64
    curvature:
      constant: 0.05            # or: terms: [...], offset: 0.0
    solver: {tol: 1.0e-10, max_iter: 500, damping: 1.0, newton_on: true,
             embeddedness_monitor: true, clearance: 1.0e-4}
    schedule:
      s_target: 1.0             # L-shaped default path ...
      s_steps: 21
      t_steps: 41
      path: [[0, 0], [0, 1], [1, 1]]   # ... or an explicit one
      max_step: 0.05
      min_step: 1.0e-4
      continuity_threshold: 0.2
      small_curvature_threshold: null
      monitors: {length_bound: true, embeddedness: true, convexity: true, speed: true}
    seeds:
      N: 256
      axes: [[0, 0, 1], [1, 0, 0]]
      kappa: null               # defaults to s0 * c(axis)
      separation_threshold: 0.1
    output:
      directory: runs
      formats: [curve-table, diagnostics-table, plot-bundle]

Errors are ``ConfigError`` carrying the dotted field path and, where the
field exists in the source, its line number.
"""

import math
from dataclasses import asdict, dataclass, field, fields
from typing import List, Optional, Tuple

import yaml

from .errors import ConfigError

FORMATS = ("curve-table", "diagnostics-table", "plot-bundle")


@dataclass
class MetricConfig:
    terms: List[Tuple[int, int, float]] = field(default_factory=list)
    grid_resolution: int = 64


@dataclass
class CurvatureConfig:
    constant: Optional[float] = None
    terms: List[Tuple[int, int, float]] = field(default_factory=list)
    offset: float = 0.0


@dataclass
class SolverConfig:
    tol: float = 1e-10
    max_iter: int = 500
    damping: float = 1.0
    newton_on: bool = True
    embeddedness_monitor: bool = True
    clearance: float = 1e-4


@dataclass
class MonitorConfig:
    length_bound: bool = True
    embeddedness: bool = True
    convexity: bool = True
    speed: bool = True


@dataclass
class ScheduleConfig:
    s_target: float = 1.0
    s_steps: int = 21
    t_steps: int = 41
    path: Optional[List[Tuple[float, float]]] = None
    max_step: float = 0.05
    min_step: float = 1e-4
    continuity_threshold: float = 0.2
    small_curvature_threshold: Optional[float] = None
    monitors: MonitorConfig = field(default_factory=MonitorConfig)


@dataclass
class SeedConfig:
    N: int = 256
    axes: List[Tuple[float, float, float]] = field(default_factory=lambda: [(0.0, 0.0, 1.0), (1.0, 0.0, 0.0)])
    kappa: Optional[List[float]] = None
    separation_threshold: float = 0.1


@dataclass
class OutputConfig:
    directory: str = "runs"
    formats: List[str] = field(default_factory=lambda: list(FORMATS))


@dataclass
class RunConfig:
    metric: MetricConfig = field(default_factory=MetricConfig)
    curvature: CurvatureConfig = field(default_factory=lambda: CurvatureConfig(constant=1.0))
    solver: SolverConfig = field(default_factory=SolverConfig)
    schedule: ScheduleConfig = field(default_factory=ScheduleConfig)
    seeds: SeedConfig = field(default_factory=SeedConfig)
    output: OutputConfig = field(default_factory=OutputConfig)


# ---------------------------------------------------------------------------
# parsing


class _Source:
    """YAML node tree kept alongside the data so errors can report lines."""

    def __init__(self, text: str):
        try:
            self.root = yaml.compose(text, Loader=yaml.SafeLoader)
            self.data = yaml.safe_load(text)
        except yaml.YAMLError as exc:
            mark = getattr(exc, "problem_mark", None)
            line = mark.line + 1 if mark is not None else None
            raise ConfigError(f"invalid YAML: {getattr(exc, 'problem', exc)}", line=line) from exc

    def line(self, path):
        node = self.root
        for key in path:
            if isinstance(node, yaml.MappingNode):
                node = next((v for k, v in node.value if k.value == key), None)
            elif isinstance(node, yaml.SequenceNode) and isinstance(key, int) and key < len(node.value):
                node = node.value[key]
            else:
                node = None
            if node is None:
                return None
        return node.start_mark.line + 1


class _Parser:
    def __init__(self, src: _Source):
        self.src = src

    def fail(self, path, msg):
        raise ConfigError(msg, field=".".join(str(p) for p in path), line=self.src.line(path))

    def mapping(self, value, path, cls):
        if value is None:
            value = {}
        if not isinstance(value, dict):
            self.fail(path, f"expected a mapping for {cls.__name__}")
        known = {f.name for f in fields(cls)}
        for key in value:
            if key not in known:
                self.fail(path + [key], f"unknown field '{key}'")
        return value

    def number(self, value, path, kind=float, minimum=None, optional=False):
        if value is None and optional:
            return None
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            self.fail(path, f"expected a number, got {value!r}")
        if kind is int and not float(value).is_integer():
            self.fail(path, f"expected an integer, got {value!r}")
        if not math.isfinite(value):
            self.fail(path, "value must be finite")
        value = kind(value)
        if minimum is not None and value < minimum:
            self.fail(path, f"must be >= {minimum}, got {value!r}")
        return value

    def boolean(self, value, path):
        if not isinstance(value, bool):
            self.fail(path, f"expected true/false, got {value!r}")
        return value

    def vector(self, value, path, length):
        if not isinstance(value, (list, tuple)) or len(value) != length:
            self.fail(path, f"expected a list of {length} numbers")
        return tuple(self.number(x, path + [i]) for i, x in enumerate(value))

    def terms(self, value, path):
        if value is None:
            return []
        if not isinstance(value, list):
            self.fail(path, "expected a list of {l, m, coeff} records")
        out = []
        for i, rec in enumerate(value):
            p = path + [i]
            if not isinstance(rec, dict) or set(rec) != {"l", "m", "coeff"}:
                self.fail(p, "term must have exactly the keys l, m, coeff")
            l = self.number(rec["l"], p + ["l"], int, minimum=0)
            m = self.number(rec["m"], p + ["m"], int)
            if abs(m) > l:
                self.fail(p + ["m"], f"|m| must be <= l, got l={l}, m={m}")
            out.append((l, m, self.number(rec["coeff"], p + ["coeff"])))
        return out

    def simple(self, cls, value, path, spec):
        """Fields listed in ``spec`` as name -> callable(value, path)."""
        value = self.mapping(value, path, cls)
        kwargs = {k: conv(value[k], path + [k]) for k, conv in spec.items() if k in value}
        return cls(**kwargs)

    def parse(self) -> RunConfig:
        data = self.src.data
        if data is None:
            data = {}
        data = self.mapping(data, [], RunConfig)
        if "metric" not in data:
            self.fail(["metric"], "missing required section 'metric'")
        integer = lambda v, p: self.number(v, p, int, minimum=1)
        pos = lambda v, p: self.number(v, p, minimum=0.0)
        metric = self.simple(MetricConfig, data.get("metric"), ["metric"], {
            "terms": self.terms, "grid_resolution": lambda v, p: self.number(v, p, int, minimum=16)})

        cv = self.mapping(data.get("curvature"), ["curvature"], CurvatureConfig)
        if "constant" in cv and ("terms" in cv or "offset" in cv):
            self.fail(["curvature"], "give either 'constant' or 'terms'/'offset', not both")
        if cv:
            curvature = CurvatureConfig(
                constant=self.number(cv.get("constant"), ["curvature", "constant"], optional=True),
                terms=self.terms(cv.get("terms"), ["curvature", "terms"]),
                offset=self.number(cv.get("offset", 0.0), ["curvature", "offset"]))
        else:
            curvature = CurvatureConfig(constant=1.0)

        solver = self.simple(SolverConfig, data.get("solver"), ["solver"], {
            "tol": lambda v, p: self.number(v, p, minimum=0.0), "max_iter": integer, "damping": pos,
            "newton_on": self.boolean, "embeddedness_monitor": self.boolean, "clearance": pos})

        sv = self.mapping(data.get("schedule"), ["schedule"], ScheduleConfig)
        monitors = self.simple(MonitorConfig, sv.get("monitors"), ["schedule", "monitors"],
                               {f.name: self.boolean for f in fields(MonitorConfig)})
        sched = {"s_target": pos, "s_steps": lambda v, p: self.number(v, p, int, minimum=2),
                 "t_steps": lambda v, p: self.number(v, p, int, minimum=2), "max_step": pos, "min_step": pos,
                 "continuity_threshold": pos,
                 "small_curvature_threshold": lambda v, p: self.number(v, p, minimum=0.0, optional=True),
                 "path": lambda v, p: None if v is None else self._path(v, p)}
        schedule = ScheduleConfig(monitors=monitors, **{k: c(sv[k], ["schedule", k]) for k, c in sched.items() if k in sv})
        if schedule.min_step > schedule.max_step:
            self.fail(["schedule", "min_step"], "min_step must be <= max_step")

        seeds = self.simple(SeedConfig, data.get("seeds"), ["seeds"], {
            "N": lambda v, p: self.number(v, p, int, minimum=16),
            "axes": lambda v, p: self._axes(v, p),
            "kappa": lambda v, p: None if v is None else [self.number(x, p + [i], minimum=0.0) for i, x in
                                                         enumerate(self._list(v, p))],
            "separation_threshold": pos})
        if seeds.kappa is not None and len(seeds.kappa) != len(seeds.axes):
            self.fail(["seeds", "kappa"], "need one kappa per axis")

        output = self.simple(OutputConfig, data.get("output"), ["output"], {
            "directory": lambda v, p: v if isinstance(v, str) and v else self.fail(p, "expected a path string"),
            "formats": lambda v, p: self._formats(v, p)})
        return RunConfig(metric, curvature, solver, schedule, seeds, output)

    def _list(self, v, p):
        if not isinstance(v, list) or not v:
            self.fail(p, "expected a non-empty list")
        return v

    def _path(self, v, p):
        pts = [self.vector(x, p + [i], 2) for i, x in enumerate(self._list(v, p))]
        if pts[0][0] != 0.0:
            self.fail(p + [0], "path must start at t = 0")
        for i, (t, s) in enumerate(pts):
            if not 0.0 <= t <= 1.0 or s < 0.0:
                self.fail(p + [i], f"waypoint ({t}, {s}) outside [0,1] x [0,inf)")
        return pts

    def _axes(self, v, p):
        out = []
        for i, x in enumerate(self._list(v, p)):
            a = self.vector(x, p + [i], 3)
            if math.hypot(*a) == 0.0:
                self.fail(p + [i], "axis must be nonzero")
            out.append(a)
        return out

    def _formats(self, v, p):
        if not isinstance(v, list):
            self.fail(p, "expected a list of export formats")
        for i, f in enumerate(v):
            if f not in FORMATS:
                self.fail(p + [i], f"unknown format {f!r}; choose from {', '.join(FORMATS)}")
        return list(v)


def parse_config(text: str) -> RunConfig:
    return _Parser(_Source(text)).parse()


def load_config(path) -> RunConfig:
    try:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise ConfigError(f"cannot read config: {exc}") from exc
    return parse_config(text)


def _plain(obj):
    if isinstance(obj, tuple):
        return [_plain(x) for x in obj]
    if isinstance(obj, list):
        return [_plain(x) for x in obj]
    if isinstance(obj, dict):
        return {k: _plain(v) for k, v in obj.items()}
    return obj


def config_to_dict(cfg: RunConfig) -> dict:
    d = _plain(asdict(cfg))
    d["metric"]["terms"] = [{"l": l, "m": m, "coeff": c} for l, m, c in cfg.metric.terms]
    cv = d["curvature"]
    if cfg.curvature.constant is not None:
        d["curvature"] = {"constant": cfg.curvature.constant}
    else:
        cv.pop("constant")
        cv["terms"] = [{"l": l, "m": m, "coeff": c} for l, m, c in cfg.curvature.terms]
    return d


def serialize_config(cfg: RunConfig) -> str:
    return yaml.safe_dump(config_to_dict(cfg), sort_keys=False, default_flow_style=None)
