"""Scenario configuration: a TOML document parsed into dataclasses.

Every validation failure raises ``ConfigError`` naming the offending field by
its dotted path (``grid.step``, ``policies[1].c``, ...).
"""

from __future__ import annotations

import copy
import dataclasses
import sys
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, Optional, Tuple

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from .grid import GridSpec
from .intensities import (
    AgeAtMarriageDensity,
    ConstantRate,
    DeathDensity,
    ExponentialImprovement,
    GompertzMakeham,
    HazardDeathDensity,
    IntensityCurve,
    IntensitySet,
    MortalitySurface,
    PiecewiseLinearRate,
    TabulatedAgeDensity,
    TabulatedDeathDensity,
    TabulatedImprovement,
    TruncatedNormalAgeDensity,
    UniformAgeDensity,
)
from .marital import DEFAULT_EPS_TRUNC, DEFAULT_NU_CAP
from .payments import PolicySpec
from .valuation import AgeBasedModel, Member, ShortRate


class ConfigError(ValueError):
    pass


_MISSING = object()


class _Section:
    """Dict wrapper that remembers where it sits in the document."""

    def __init__(self, data: Any, path: str):
        if not isinstance(data, dict):
            raise ConfigError(f"{path or 'config'}: expected a table, got {type(data).__name__}")
        self.data = data
        self.path = path

    def _name(self, key: str) -> str:
        return f"{self.path}.{key}" if self.path else key

    def has(self, key: str) -> bool:
        return key in self.data

    def get(self, key: str, default=_MISSING):
        if key not in self.data:
            if default is _MISSING:
                raise ConfigError(f"missing required field `{self._name(key)}`")
            return default
        return self.data[key]

    def number(self, key: str, default=_MISSING, positive: bool = False, nonneg: bool = False) -> float:
        value = self.get(key, default)
        if value is None:
            return None
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise ConfigError(f"`{self._name(key)}` must be a number, got {value!r}")
        if positive and not value > 0:
            raise ConfigError(f"`{self._name(key)}` must be positive, got {value}")
        if nonneg and value < 0:
            raise ConfigError(f"`{self._name(key)}` must be nonnegative, got {value}")
        return float(value)

    def integer(self, key: str, default=_MISSING, minimum: Optional[int] = None) -> int:
        value = self.get(key, default)
        if isinstance(value, bool) or not isinstance(value, int):
            raise ConfigError(f"`{self._name(key)}` must be an integer, got {value!r}")
        if minimum is not None and value < minimum:
            raise ConfigError(f"`{self._name(key)}` must be >= {minimum}, got {value}")
        return value

    def string(self, key: str, default=_MISSING) -> str:
        value = self.get(key, default)
        if value is not None and not isinstance(value, str):
            raise ConfigError(f"`{self._name(key)}` must be a string, got {value!r}")
        return value

    def numbers(self, key: str, default=_MISSING) -> Tuple[float, ...]:
        value = self.get(key, default)
        if not isinstance(value, (list, tuple)) or not all(
                isinstance(v, (int, float)) and not isinstance(v, bool) for v in value):
            raise ConfigError(f"`{self._name(key)}` must be an array of numbers")
        return tuple(float(v) for v in value)

    def pairs(self, key: str) -> Tuple[Tuple[float, float], ...]:
        value = self.get(key)
        ok = isinstance(value, list) and all(
            isinstance(p, list) and len(p) == 2 and all(isinstance(v, (int, float)) for v in p) for p in value)
        if not ok:
            raise ConfigError(f"`{self._name(key)}` must be an array of [x, value] pairs")
        return tuple((float(a), float(b)) for a, b in value)

    def sub(self, key: str, default=_MISSING) -> Optional["_Section"]:
        value = self.get(key, default)
        return None if value is None else _Section(value, self._name(key))

    def build(self, fn, *args, **kwargs):
        try:
            return fn(*args, **kwargs)
        except (ValueError, TypeError) as exc:
            if isinstance(exc, ConfigError):
                raise
            raise ConfigError(f"{self.path}: {exc}") from exc


# ---------------------------------------------------------------------------
# component parsers


def parse_curve(sec: _Section, default_t_max: float = 125.0) -> IntensityCurve:
    kind = sec.string("kind")
    common = {"t_max": sec.number("t_max", default_t_max, positive=True),
              "start": sec.number("start", 0.0, nonneg=True)}
    if kind == "constant":
        return sec.build(ConstantRate, value=sec.number("rate", nonneg=True), **common)
    if kind == "piecewise_linear":
        return sec.build(PiecewiseLinearRate, knots=sec.pairs("knots"), **common)
    if kind == "gompertz_makeham":
        return sec.build(GompertzMakeham, alpha=sec.number("alpha", nonneg=True), beta=sec.number("beta", nonneg=True),
                         growth=sec.number("growth"), step=sec.number("step", 0.1, positive=True), **common)
    raise ConfigError(f"`{sec._name('kind')}`: unknown curve kind {kind!r} "
                      "(constant | piecewise_linear | gompertz_makeham)")


def parse_surface(sec: _Section, default_t_max: float = 125.0) -> MortalitySurface:
    if not sec.has("base"):
        return MortalitySurface(parse_curve(sec, default_t_max))
    base = parse_curve(sec.sub("base"), default_t_max)
    imp = sec.sub("improvement", None)
    if imp is None:
        return MortalitySurface(base)
    kind = imp.string("kind")
    if kind == "exponential":
        return MortalitySurface(base, ExponentialImprovement(imp.number("rate")))
    if kind == "table":
        return MortalitySurface(base, imp.build(TabulatedImprovement, imp.pairs("knots")))
    raise ConfigError(f"`{imp._name('kind')}`: unknown improvement kind {kind!r} (exponential | table)")


def parse_phi(sec: _Section) -> AgeAtMarriageDensity:
    kind = sec.string("kind")
    slope = sec.number("slope", 0.0)
    if kind == "uniform":
        return sec.build(UniformAgeDensity, sec.number("lo"), sec.number("hi"), slope)
    if kind == "truncated_normal":
        return sec.build(TruncatedNormalAgeDensity, sec.number("mean"), sec.number("sd", positive=True), slope)
    if kind == "tabulated":
        values = sec.get("values")
        if not isinstance(values, list) or not all(isinstance(r, list) for r in values):
            raise ConfigError(f"`{sec._name('values')}` must be a 2-D array")
        return sec.build(TabulatedAgeDensity, sec.numbers("t_knots"), sec.numbers("y_knots"),
                         tuple(tuple(float(v) for v in row) for row in values))
    raise ConfigError(f"`{sec._name('kind')}`: unknown density kind {kind!r} (uniform | truncated_normal | tabulated)")


def parse_death(sec: _Section, default_t_max: float) -> DeathDensity:
    kind = sec.string("kind")
    if kind == "hazard":
        return HazardDeathDensity(parse_curve(sec.sub("hazard"), default_t_max))
    if kind == "tabulated":
        return sec.build(TabulatedDeathDensity, sec.pairs("knots"))
    raise ConfigError(f"`{sec._name('kind')}`: unknown death density kind {kind!r} (hazard | tabulated)")


def parse_policy(sec: _Section, default_t_max: float) -> PolicySpec:
    q_ad = sec.sub("q_ad", None)
    return sec.build(
        PolicySpec,
        kind=sec.string("kind"),
        amount=sec.number("amount", 1.0),
        c=sec.number("c", None),
        q_ad=parse_surface(q_ad, default_t_max) if q_ad is not None else None,
        name=sec.string("name", None),
    )


# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class SimulationSettings:
    n_paths: int = 100_000
    seed: int = 0
    g_times: Tuple[float, ...] = (10.0, 20.0, 30.0, 40.0)
    f_times: Tuple[float, ...] = (20.0, 40.0)
    bin: float = 1.0
    time_bin: float = 1.0
    layers: int = 3
    cumulative_times: Tuple[float, ...] = ()


@dataclass(frozen=True)
class TruncationSettings:
    nu_cap: int = DEFAULT_NU_CAP
    eps: float = DEFAULT_EPS_TRUNC


@dataclass(frozen=True)
class PortfolioSettings:
    model: AgeBasedModel
    members: Tuple[Member, ...]


@dataclass(frozen=True)
class ScenarioConfig:
    grid: GridSpec
    intensities: IntensitySet
    policies: Tuple[PolicySpec, ...] = ()
    rate: Optional[ShortRate] = None
    simulation: SimulationSettings = SimulationSettings()
    truncation: TruncationSettings = TruncationSettings()
    portfolio: Optional[PortfolioSettings] = None
    mode: str = "general"
    a_min: float = 0.0
    output_stride: float = 1.0
    z_max: float = 4.0
    source: Dict[str, Any] = field(default_factory=dict, compare=False, repr=False)

    def with_step(self, step: float) -> "ScenarioConfig":
        try:
            grid = GridSpec(step, self.grid.t_max, self.grid.y_max)
        except ValueError as exc:
            raise ConfigError(f"--step: {exc}") from exc
        source = copy.deepcopy(self.source)
        source.setdefault("grid", {})["step"] = step
        return dataclasses.replace(self, grid=grid, source=source)


def parse_config(data: Dict[str, Any]) -> ScenarioConfig:
    root = _Section(data, "")
    mode = root.string("mode", "general")
    if mode not in ("general", "g82"):
        raise ConfigError(f"`mode` must be 'general' or 'g82', got {mode!r}")

    g = root.sub("grid")
    grid = g.build(GridSpec, g.number("step", positive=True), g.number("t_max", positive=True),
                   g.number("y_max", positive=True))
    horizon = max(grid.t_max, grid.y_max, 125.0)

    ins = root.sub("intensities")
    q_spouse = parse_surface(ins.sub("q_spouse"), horizon)
    death = parse_death(ins.sub("death"), horizon) if ins.has("death") else None
    intensities = ins.build(
        IntensitySet,
        gamma=parse_curve(ins.sub("gamma"), horizon),
        sigma=parse_curve(ins.sub("sigma"), horizon),
        q_spouse=q_spouse,
        phi=parse_phi(ins.sub("phi")),
        death=death,
    )
    a_min = 0.0
    if mode == "g82":
        if not q_spouse.time_independent:
            raise ConfigError("`intensities.q_spouse.improvement` is not allowed in g82 mode")
        a_min = root.sub("g82").number("a_min", nonneg=True)

    policies = tuple(parse_policy(_Section(p, f"policies[{i}]"), horizon)
                     for i, p in enumerate(root.get("policies", [])))
    labels = [p.label for p in policies]
    if len(set(labels)) != len(labels):
        raise ConfigError(f"`policies`: labels must be unique, got {labels}")

    rate = ShortRate(parse_curve(root.sub("rate"), max(horizon, 1000.0))) if root.has("rate") else None

    sim = SimulationSettings()
    if root.has("simulation"):
        s = root.sub("simulation")
        d = SimulationSettings()
        sim = SimulationSettings(
            n_paths=s.integer("n_paths", d.n_paths, minimum=1),
            seed=s.integer("seed", d.seed, minimum=0),
            g_times=s.numbers("g_times", d.g_times),
            f_times=s.numbers("f_times", d.f_times),
            bin=s.number("bin", d.bin, positive=True),
            time_bin=s.number("time_bin", d.time_bin, positive=True),
            layers=s.integer("layers", d.layers, minimum=1),
            cumulative_times=s.numbers("cumulative_times", d.cumulative_times),
        )
        for name in ("g_times", "f_times", "cumulative_times"):
            bad = [t for t in getattr(sim, name) if not 0 <= t <= grid.t_max]
            if bad:
                raise ConfigError(f"`simulation.{name}` has times outside [0, grid.t_max]: {bad}")

    trunc = TruncationSettings()
    if root.has("truncation"):
        t = root.sub("truncation")
        trunc = TruncationSettings(t.integer("nu_cap", DEFAULT_NU_CAP, minimum=1),
                                   t.number("eps", DEFAULT_EPS_TRUNC, positive=True))

    portfolio = None
    if root.has("portfolio"):
        p = root.sub("portfolio")
        m = p.sub("model")
        max_age = m.number("max_age", 125.0, positive=True)
        model = AgeBasedModel(
            gamma=parse_curve(m.sub("gamma"), max_age),
            sigma=parse_curve(m.sub("sigma"), max_age),
            q_spouse=q_spouse,
            phi=parse_phi(m.sub("phi")),
            insured_mortality=parse_curve(m.sub("insured_mortality"), max_age),
            max_age=max_age,
        )
        by_label = {pol.label: pol for pol in policies}
        members = []
        for i, raw in enumerate(p.get("members")):
            ms = _Section(raw, f"portfolio.members[{i}]")
            label = ms.string("policy")
            if label not in by_label:
                raise ConfigError(f"`{ms._name('policy')}` refers to unknown policy {label!r}")
            members.append(Member(ms.number("x0", nonneg=True), by_label[label], ms.number("weight", 1.0)))
        portfolio = PortfolioSettings(model, tuple(members))

    out = root.sub("output", {})
    stride = out.number("f_stride", 1.0, positive=True)
    z_max = root.sub("compare", {}).number("z_max", 4.0, positive=True)
    return ScenarioConfig(grid, intensities, policies, rate, sim, trunc, portfolio, mode, a_min, stride,
                          z_max, source=data)


def load_config(path) -> ScenarioConfig:
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc.strerror}") from exc
    try:
        data = tomllib.loads(text)
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"{path}: {exc}") from exc
    return parse_config(data)
