"""Flat ``key = value`` experiment configs with dotted sections.

Schema (all keys optional unless the experiment needs them)::

    experiment        = run | gap | sweep | bounds | tempering
    seed              = master seed (u64); chain k uses split_seed(seed, k)
    seeds             = number of chains, or an explicit comma list of seeds
    steps             = chain length for run / tempering
    record_every      = thinning for stored traces
    target.kind       = two_mode_circle | mixture
    target.L, target.nu                      (two_mode_circle)
    target.topology   = flat | circle ; target.perimeter
    target.pieces     = number of mixture pieces; then per piece k:
    target.piece.k.family     = exponential | gaussian | uniform | polyline
    target.piece.k.barycenter = comma list
    target.piece.k.rate | scale | nu
    target.piece.k.region     = interval | box | ball ; lo, hi, center, radius
    target.piece.k.knots, target.piece.k.values              (polyline)
    proposal.kind     = ball | cauchy | uniform_support | small_world
    proposal.delta, proposal.b, proposal.s, proposal.heavy_kind = cauchy | uniform
    grid.bins         = cells in 1-D, cells per axis otherwise
    grid.conductance  = auto | exact | arcs | random_search
    sweep.L, sweep.nu, sweep.delta, sweep.s  = comma lists of values
    sweep.fit         = none | loglinear | loglog
    sweep.workers     = thread count for sweep points
    ladder.temps, ladder.a, ladder.tuning = none | pilot ; ladder.pilot_steps
    check.occupancy_error = threshold on the relative mode-occupancy error
    check.min_passing     = seeds required under the threshold
    output.dir, output.traces = true | false

Values parse as int, float, fraction (``1/3``), ``inf``, booleans, comma
lists of those, or bare strings.
"""
from __future__ import annotations

import math
import re
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path

from ..errors import UsageError
from ..mh_engine import split_seed

KINDS = ("run", "gap", "sweep", "bounds", "tempering")
SWEEP_AXES = ("L", "nu", "delta", "s")
# axes each experiment kind may vary
AXES_FOR = {
    "gap": SWEEP_AXES,
    "sweep": SWEEP_AXES,
    "bounds": SWEEP_AXES,
    "run": (),
    "tempering": (),
}
KEY_RE = re.compile(r"^[A-Za-z_][A-Za-z0-9_]*(\.[A-Za-z0-9_]+)*$")


class ConfigError(UsageError):
    def __init__(self, message, line=None, key=None):
        where = []
        if line is not None:
            where.append(f"line {line}")
        if key is not None:
            where.append(f"key {key!r}")
        super().__init__(f"{', '.join(where)}: {message}" if where else message)
        self.line = line
        self.key = key


def parse_scalar(text: str):
    t = text.strip()
    low = t.lower()
    if low in ("true", "yes"):
        return True
    if low in ("false", "no"):
        return False
    if low in ("inf", "+inf", "infinity"):
        return math.inf
    if low in ("-inf", "-infinity"):
        return -math.inf
    try:
        return int(t)
    except ValueError:
        pass
    try:
        return float(t)
    except ValueError:
        pass
    if re.fullmatch(r"[+-]?\d+\s*/\s*\d+", t):
        return float(Fraction(t.replace(" ", "")))
    return t


def parse_value(text: str):
    if "," in text:
        return [parse_scalar(p) for p in text.split(",") if p.strip()]
    return parse_scalar(text)


def format_value(v) -> str:
    """Inverse of :func:`parse_value` for the types it produces."""
    if isinstance(v, (list, tuple)):
        return ",".join(format_value(x) for x in v) + ("," if len(v) == 1 else "")
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, float):
        return "inf" if v == math.inf else "-inf" if v == -math.inf else repr(v)
    return str(v)


def parse_text(text: str) -> dict:
    values, lines = {}, {}
    for n, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError("expected 'key = value'", line=n)
        key, val = (p.strip() for p in line.split("=", 1))
        if not KEY_RE.match(key):
            raise ConfigError("malformed key", line=n, key=key)
        if key in values:
            raise ConfigError(f"duplicate key (first on line {lines[key]})", line=n, key=key)
        if not val:
            raise ConfigError("missing value", line=n, key=key)
        values[key] = parse_value(val)
        lines[key] = n
    return values, lines


def apply_overrides(values: dict, overrides) -> dict:
    out = dict(values)
    for item in overrides or ():
        if "=" not in item:
            raise ConfigError(f"override {item!r} must look like key=value")
        key, val = (p.strip() for p in item.split("=", 1))
        if not KEY_RE.match(key) or not val:
            raise ConfigError("malformed override", key=key)
        out[key] = parse_value(val)
    return out


def _as_list(v):
    return list(v) if isinstance(v, (list, tuple)) else [v]


@dataclass
class ExperimentConfig:
    kind: str
    values: dict
    seeds: list
    sweep_axes: dict = field(default_factory=dict)
    output_dir: str = "out"
    lines: dict = field(default_factory=dict)
    source_text: str = ""

    def get(self, key, default=None):
        return self.values.get(key, default)

    def require(self, key):
        if key not in self.values:
            raise ConfigError("required key missing", key=key)
        return self.values[key]

    def number(self, key, default=None, positive=False):
        v = self.values.get(key, default)
        if v is None:
            raise ConfigError("required key missing", key=key)
        if isinstance(v, bool) or not isinstance(v, (int, float)):
            raise ConfigError(f"expected a number, got {v!r}", line=self.lines.get(key), key=key)
        if positive and not v > 0:
            raise ConfigError("must be positive", line=self.lines.get(key), key=key)
        return v

    def with_values(self, **updates) -> "ExperimentConfig":
        vals = dict(self.values)
        for k, v in updates.items():
            vals[k.replace("__", ".")] = v
        return ExperimentConfig(self.kind, vals, self.seeds, self.sweep_axes, self.output_dir, self.lines, self.source_text)

    def echo(self) -> str:
        return "\n".join(f"{k} = {format_value(self.values[k])}" for k in sorted(self.values))


def build_config(values: dict, lines=None, source_text: str = "") -> ExperimentConfig:
    lines = lines or {}
    kind = values.get("experiment")
    if kind not in KINDS:
        raise ConfigError(f"experiment must be one of {', '.join(KINDS)}", line=lines.get("experiment"), key="experiment")
    master = values.get("seed", 0)
    if not isinstance(master, int) or isinstance(master, bool) or master < 0:
        raise ConfigError("seed must be a nonnegative integer", line=lines.get("seed"), key="seed")
    raw = values.get("seeds", 1)
    if isinstance(raw, list):
        seeds = [int(s) for s in raw]
    elif isinstance(raw, int) and raw >= 1:
        seeds = [split_seed(master, k) for k in range(raw)]
    else:
        raise ConfigError("seeds must be a positive count or a list", line=lines.get("seeds"), key="seeds")
    if not seeds:
        raise ConfigError("seeds must be nonempty", key="seeds")
    axes = {}
    for key in values:
        if key.startswith("sweep.") and key.split(".", 1)[1] in SWEEP_AXES:
            name = key.split(".", 1)[1]
            if name not in AXES_FOR[kind]:
                raise ConfigError(f"axis not meaningful for experiment {kind!r}", line=lines.get(key), key=key)
            vals = _as_list(values[key])
            if not all(isinstance(v, (int, float)) and not isinstance(v, bool) for v in vals):
                raise ConfigError("sweep values must be numbers", line=lines.get(key), key=key)
            axes[name] = vals
    return ExperimentConfig(kind, dict(values), seeds, axes, str(values.get("output.dir", "out")), dict(lines), source_text)


def load_config(path=None, overrides=None, text: str | None = None) -> ExperimentConfig:
    if text is None:
        if path is None:
            raise ConfigError("no config given")
        p = Path(path)
        if not p.exists():
            raise ConfigError(f"config file not found: {p}")
        text = p.read_text()
    values, lines = parse_text(text)
    values = apply_overrides(values, overrides)
    return build_config(values, lines, text)


# -- object construction ---------------------------------------------------------------


def build_target(cfg: ExperimentConfig, **params):
    from .. import targets as tg

    kind = cfg.get("target.kind", "two_mode_circle")
    if kind == "two_mode_circle":
        L = params.get("L", cfg.number("target.L", 5.0, positive=True))
        nu = params.get("nu", cfg.number("target.nu", 1.0, positive=True))
        return tg.two_mode_circle_target(float(L), float(nu))
    if kind != "mixture":
        raise ConfigError("unknown target kind", line=cfg.lines.get("target.kind"), key="target.kind")
    n_pieces = cfg.number("target.pieces")
    pieces = [_build_piece(cfg, k) for k in range(int(n_pieces))]
    topology = cfg.get("target.topology", "flat")
    perimeter = cfg.get("target.perimeter")
    try:
        return tg.mixture_target(pieces, topology=topology, perimeter=perimeter)
    except UsageError as exc:
        raise ConfigError(str(exc), key="target.pieces") from exc


def _build_piece(cfg: ExperimentConfig, k: int):
    from .. import targets as tg

    pre = f"target.piece.{k}."

    def get(name, default=None):
        return cfg.get(pre + name, default)

    family = get("family")
    if family is None:
        raise ConfigError("required key missing", key=pre + "family")
    b = _as_list(get("barycenter", 0.0))
    region = _build_region(cfg, pre, len(b))
    try:
        if family == "exponential":
            return tg.exponential_piece(b, float(cfg.number(pre + "rate", positive=True)), region)
        if family == "gaussian":
            return tg.gaussian_piece(b, float(cfg.number(pre + "scale", positive=True)), region)
        if family == "uniform":
            if region is None:
                raise ConfigError("uniform pieces need a region", key=pre + "region")
            return tg.uniform_piece(region, float(cfg.number(pre + "nu", 1.0, positive=True)), b if get("barycenter") is not None else None)
        if family == "polyline":
            return tg.polyline_piece(_as_list(get("knots")), _as_list(get("values")), b,
                                     float(cfg.number(pre + "nu", 1.0, positive=True)), region)
    except ConfigError:
        raise
    except UsageError as exc:
        raise ConfigError(str(exc), line=cfg.lines.get(pre + "family"), key=pre + "family") from exc
    raise ConfigError("unknown piece family", line=cfg.lines.get(pre + "family"), key=pre + "family")


def _build_region(cfg, pre, dim):
    from .. import targets as tg

    kind = cfg.get(pre + "region")
    if kind is None:
        return None
    if kind == "interval":
        return tg.Interval(float(cfg.number(pre + "lo")), float(cfg.number(pre + "hi")))
    if kind == "box":
        return tg.Box(_as_list(cfg.require(pre + "lo")), _as_list(cfg.require(pre + "hi")))
    if kind == "ball":
        return tg.Ball(_as_list(cfg.require(pre + "center")), float(cfg.number(pre + "radius", positive=True)))
    raise ConfigError("unknown region kind", line=cfg.lines.get(pre + "region"), key=pre + "region")


def build_proposal(cfg: ExperimentConfig, target, **params):
    from .. import proposals as pp

    kind = cfg.get("proposal.kind", "ball")
    delta = float(params.get("delta", cfg.number("proposal.delta", 1.0, positive=True)))
    dim = target.dimension
    if kind == "ball":
        return pp.ball(delta, target, dim)
    if kind == "cauchy":
        b = cfg.get("proposal.b")
        return pp.cauchy(float(b) if b is not None else target.max_barycenter_distance, target, dim)
    if kind == "uniform_support":
        return pp.uniform_support(target)
    if kind == "small_world":
        s = float(params.get("s", cfg.number("proposal.s", 1.0 / 3.0)))
        heavy = cfg.get("proposal.heavy_kind", "cauchy")
        if heavy not in ("cauchy", "uniform"):
            raise ConfigError("heavy_kind must be cauchy or uniform", key="proposal.heavy_kind")
        try:
            return pp.small_world(target, delta, s, heavy, cfg.get("proposal.b"))
        except UsageError as exc:
            raise ConfigError(str(exc), key="proposal.s") from exc
    raise ConfigError("unknown proposal kind", line=cfg.lines.get("proposal.kind"), key="proposal.kind")


def build_ladder(cfg: ExperimentConfig, target):
    from ..tempering import TemperLadder

    temps = [float(t) for t in _as_list(cfg.get("ladder.temps", [1.0, math.inf]))]
    a = cfg.get("ladder.a")
    try:
        return TemperLadder(target, tuple(temps), None if a is None else tuple(float(v) for v in _as_list(a)))
    except UsageError as exc:
        raise ConfigError(str(exc), key="ladder.temps") from exc
