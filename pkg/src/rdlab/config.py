"""Experiment configuration: flat sectioned ``key = value`` text.

Grammar (one ``[section]`` header followed by ``key = value`` lines; ``#``
starts a comment; lists are comma separated)::

    [domain]     n, cells | length, h
    [model]      kind (pair|triplet|pcpd), lam, mu, D
    [stepper]    scheme (strang|rk4|euler), dt (number|auto), cfl_safety, dt_min, max_halvings
    [initial]    kind (constant|uniform_noise|gaussian_blobs|filtered_noise) + kind parameters
    [schedule]   end_time, t0, growth, snapshots
    [analysis]   window, tol_disc, tol_window, tol_variance, exponent_tol, floor,
                 omega_lengths, omega_tol, pcpd_lams, pcpd_h, pcpd_end_times, pcpd_growth,
                 regime_rate_tol, regime_exp_tol, variance_exp_tol
    [inequalities] dims, cases, count_1d, count_2d, count_3d, sizes
    [output]     dir, seed

``length`` is accepted in place of ``cells`` and converted to a cell count;
serialisation always writes ``cells``.  Floats are written with 17
significant digits so that parse -> serialise -> parse is exact.
"""
from __future__ import annotations

import configparser
import dataclasses
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, Optional, Tuple

from .grid import DomainSpec
from .kinetics import ModelSpec
from .stepper import InitialCondition, RunSchedule, StepperConfig


class ConfigError(ValueError):
    pass


def _fmt(v) -> str:
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, float):
        return format(v, ".17g")
    if isinstance(v, (tuple, list)):
        return ", ".join(_fmt(x) for x in v)
    if hasattr(v, "value"):
        return str(v.value)
    return str(v)


def _floats(s: str) -> Tuple[float, ...]:
    return tuple(float(x) for x in s.split(",") if x.strip())


@dataclass(frozen=True)
class ScheduleConfig:
    end_time: float = 200.0
    t0: float = 0.1
    growth: float = 1.1
    snapshots: Tuple[float, ...] = ()

    def build(self) -> RunSchedule:
        return RunSchedule.geometric(self.end_time, self.t0, self.growth, self.snapshots)


@dataclass(frozen=True)
class AnalysisConfig:
    window: Tuple[float, float] = (20.0, 200.0)
    tol_disc: float = 0.05
    tol_window: float = 0.02
    tol_variance: float = 0.05
    exponent_tol: float = 0.05
    floor: float = 0.2
    omega_lengths: Tuple[float, ...] = (100.0, 200.0, 400.0)
    omega_tol: float = 0.10
    pcpd_lams: Tuple[float, ...] = (0.5, 0.0, -0.5)
    pcpd_h: float = 1.0
    pcpd_end_times: Tuple[float, ...] = (200.0, 2000.0, 10000.0)
    pcpd_growth: float = 1.05
    regime_rate_tol: float = 0.15
    regime_exp_tol: float = 0.05
    variance_exp_tol: float = 0.15


@dataclass(frozen=True)
class InequalityConfig:
    dims: Tuple[int, ...] = (1, 2)
    cases: Tuple[str, ...] = ()          # empty: every case applicable in each dimension
    count_1d: int = 70
    count_2d: int = 40
    count_3d: int = 12
    sizes: Tuple[float, ...] = (1.0, 2.0, 4.0)


@dataclass(frozen=True)
class ExperimentConfig:
    domain: DomainSpec = field(default_factory=lambda: DomainSpec(1, (400,), 0.5))
    model: ModelSpec = field(default_factory=lambda: ModelSpec("pair", lam=1.0, mu=1.0))
    stepper: StepperConfig = field(default_factory=StepperConfig)
    initial: InitialCondition = field(
        default_factory=lambda: InitialCondition("uniform_noise", {"lo": 0.0, "hi": 2.0}))
    schedule: ScheduleConfig = field(default_factory=ScheduleConfig)
    analysis: AnalysisConfig = field(default_factory=AnalysisConfig)
    inequalities: InequalityConfig = field(default_factory=InequalityConfig)
    output_dir: str = "out"
    seed: Optional[int] = 1

    def __post_init__(self):
        if self.initial.stochastic and self.seed is None:
            raise ConfigError("a seed is mandatory for stochastic initial conditions")

    def replace(self, **kw) -> "ExperimentConfig":
        return dataclasses.replace(self, **kw)


def _section(cp: configparser.ConfigParser, name: str) -> Dict[str, str]:
    return dict(cp[name]) if cp.has_section(name) else {}


def parse_config(text: str) -> ExperimentConfig:
    cp = configparser.ConfigParser(inline_comment_prefixes=("#",), interpolation=None)
    cp.optionxform = str
    try:
        cp.read_string(text)
    except configparser.Error as exc:
        raise ConfigError(str(exc)) from exc
    known = {"domain", "model", "stepper", "initial", "schedule", "analysis", "inequalities", "output"}
    unknown = set(cp.sections()) - known
    if unknown:
        raise ConfigError(f"unknown sections: {sorted(unknown)}")
    try:
        return _build(cp)
    except ConfigError:
        raise
    except (ValueError, KeyError, TypeError) as exc:
        raise ConfigError(str(exc)) from exc


def _build(cp) -> ExperimentConfig:
    d = _section(cp, "domain")
    n = int(d.pop("n", 1))
    h = float(d.pop("h", 0.5))
    if "cells" in d and "length" in d:
        raise ConfigError("give either cells or length, not both")
    if "length" in d:
        domain = DomainSpec.box(n, float(d.pop("length")), h)
    else:
        cells = tuple(int(x) for x in d.pop("cells", "400").split(","))
        domain = DomainSpec(n, cells * n if len(cells) == 1 else cells, h)
    _no_extra("domain", d)

    mdl = _section(cp, "model")
    model = ModelSpec(mdl.pop("kind", "pair"), lam=float(mdl.pop("lam", 1.0)),
                      mu=float(mdl.pop("mu", 1.0)), D=float(mdl.pop("D", 1.0)))
    _no_extra("model", mdl)

    st = _section(cp, "stepper")
    dt = st.pop("dt", "auto")
    stepper = StepperConfig(
        scheme=st.pop("scheme", "strang"), dt=dt if dt == "auto" else float(dt),
        cfl_safety=float(st.pop("cfl_safety", 0.8)), dt_min=float(st.pop("dt_min", 1e-9)),
        max_halvings=int(st.pop("max_halvings", 20)),
    )
    _no_extra("stepper", st)

    ic = _section(cp, "initial")
    kind = ic.pop("kind", "uniform_noise")
    initial = InitialCondition(kind, {k: float(v) for k, v in ic.items()})

    sc = _section(cp, "schedule")
    schedule = ScheduleConfig(
        end_time=float(sc.pop("end_time", 200.0)), t0=float(sc.pop("t0", 0.1)),
        growth=float(sc.pop("growth", 1.1)), snapshots=_floats(sc.pop("snapshots", "")),
    )
    _no_extra("schedule", sc)

    an = _section(cp, "analysis")
    defaults = AnalysisConfig()
    kw = {}
    for f in dataclasses.fields(AnalysisConfig):
        if f.name in an:
            raw = an.pop(f.name)
            cur = getattr(defaults, f.name)
            kw[f.name] = _floats(raw) if isinstance(cur, tuple) else float(raw)
    if "window" in kw and len(kw["window"]) != 2:
        raise ConfigError("analysis.window needs two numbers")
    _no_extra("analysis", an)
    analysis = AnalysisConfig(**kw)

    iq = _section(cp, "inequalities")
    ineq = InequalityConfig(
        dims=tuple(int(x) for x in iq.pop("dims", "1, 2").split(",") if x.strip()),
        cases=tuple(x.strip() for x in iq.pop("cases", "").split(",") if x.strip()),
        count_1d=int(iq.pop("count_1d", 70)), count_2d=int(iq.pop("count_2d", 40)),
        count_3d=int(iq.pop("count_3d", 12)), sizes=_floats(iq.pop("sizes", "1, 2, 4")),
    )
    _no_extra("inequalities", iq)

    out = _section(cp, "output")
    seed = out.pop("seed", "1")
    cfg = ExperimentConfig(domain, model, stepper, initial, schedule, analysis, ineq,
                           output_dir=out.pop("dir", "out"),
                           seed=None if seed.lower() == "none" else int(seed))
    _no_extra("output", out)
    return cfg


def _no_extra(section: str, rest: Dict[str, str]) -> None:
    if rest:
        raise ConfigError(f"unknown keys in [{section}]: {sorted(rest)}")


def load_config(path) -> ExperimentConfig:
    p = Path(path)
    if not p.is_file():
        raise ConfigError(f"config file not found: {p}")
    return parse_config(p.read_text())


def serialize_config(cfg: ExperimentConfig) -> str:
    d, m, st = cfg.domain, cfg.model, cfg.stepper
    lines = ["[domain]", f"n = {d.n}", f"cells = {_fmt(d.cells)}", f"h = {_fmt(d.h)}", ""]
    lines += ["[model]", f"kind = {m.kind.value}", f"lam = {_fmt(m.lam)}", f"mu = {_fmt(m.mu)}",
              f"D = {_fmt(m.D)}", ""]
    dt = st.dt if st.dt == "auto" else _fmt(float(st.dt))
    lines += ["[stepper]", f"scheme = {st.scheme.value}", f"dt = {dt}",
              f"cfl_safety = {_fmt(st.cfl_safety)}", f"dt_min = {_fmt(st.dt_min)}",
              f"max_halvings = {st.max_halvings}", ""]
    lines += ["[initial]", f"kind = {cfg.initial.kind.value}"]
    lines += [f"{k} = {_fmt(v)}" for k, v in sorted(cfg.initial.params.items())] + [""]
    sc = cfg.schedule
    lines += ["[schedule]", f"end_time = {_fmt(sc.end_time)}", f"t0 = {_fmt(sc.t0)}",
              f"growth = {_fmt(sc.growth)}", f"snapshots = {_fmt(sc.snapshots)}", ""]
    lines += ["[analysis]"]
    lines += [f"{f.name} = {_fmt(getattr(cfg.analysis, f.name))}" for f in dataclasses.fields(AnalysisConfig)]
    iq = cfg.inequalities
    lines += ["", "[inequalities]", f"dims = {_fmt(iq.dims)}", f"cases = {_fmt(iq.cases)}",
              f"count_1d = {iq.count_1d}", f"count_2d = {iq.count_2d}", f"count_3d = {iq.count_3d}",
              f"sizes = {_fmt(iq.sizes)}", ""]
    lines += ["[output]", f"dir = {cfg.output_dir}", f"seed = {cfg.seed}", ""]
    return "\n".join(lines)


def set_value(cfg: ExperimentConfig, key: str, value: float) -> ExperimentConfig:
    """Override one numeric setting addressed as ``section.key`` (used by sweeps)."""
    text = serialize_config(cfg)
    cp = configparser.ConfigParser(interpolation=None)
    cp.optionxform = str
    cp.read_string(text)
    try:
        section, name = key.split(".", 1)
    except ValueError:
        raise ConfigError(f"axis key must look like section.key, got {key!r}") from None
    if not cp.has_section(section):
        raise ConfigError(f"unknown section {section!r}")
    if section == "domain" and name == "length":
        cp.remove_option("domain", "cells")
    elif not cp.has_option(section, name) and section != "initial":
        raise ConfigError(f"unknown key {key!r}")
    else:
        try:
            float(cp.get(section, name, fallback="0"))
        except ValueError:
            raise ConfigError(f"{key!r} is not a numeric setting") from None
    cp.set(section, name, _fmt(float(value)) if name not in ("n", "max_halvings", "seed") else str(int(value)))
    lines = []
    for sec in cp.sections():
        lines.append(f"[{sec}]")
        lines += [f"{k} = {v}" for k, v in cp[sec].items()]
    return parse_config("\n".join(lines))
