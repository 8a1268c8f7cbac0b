"""Time integration of du/dt = D*Lap(u) + R(u) with zero-flux walls."""
from __future__ import annotations

import csv
import enum
import logging
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple, Union

import numpy as np
import scipy.fft

from .grid import POS_TOL, DomainSpec, ScalarField, gradient_p_integral, laplacian_array
from .kinetics import ModelKind, ModelSpec, reaction_values

log = logging.getLogger(__name__)


class Scheme(str, enum.Enum):
    EULER = "euler"
    RK4 = "rk4"
    STRANG = "strang"


class StepFailure(RuntimeError):
    """Positivity could not be restored by halving dt down to ``dt_min``."""

    def __init__(self, msg: str, last_time: float, last_field: Optional[ScalarField] = None):
        super().__init__(msg)
        self.last_time = last_time
        self.last_field = last_field


class NonFiniteMomentError(RuntimeError):
    def __init__(self, msg: str, last_time: float, last_field: ScalarField, series: "TimeSeries"):
        super().__init__(msg)
        self.last_time = last_time
        self.last_field = last_field
        self.series = series


@dataclass(frozen=True)
class StepperConfig:
    scheme: Scheme = Scheme.STRANG
    dt: Union[float, str] = "auto"
    cfl_safety: float = 0.8
    dt_min: float = 1e-9
    max_halvings: int = 20

    def __post_init__(self):
        object.__setattr__(self, "scheme", Scheme(self.scheme))
        if not 0 < self.cfl_safety <= 1:
            raise ValueError("cfl_safety must lie in (0, 1]")
        if not self.dt_min > 0:
            raise ValueError("dt_min must be positive")
        if self.dt != "auto" and not float(self.dt) > 0:
            raise ValueError("dt must be positive or 'auto'")

    def resolve_dt(self, domain: DomainSpec, m: ModelSpec) -> float:
        if self.dt != "auto":
            dt = float(self.dt)
        elif m.D > 0:
            dt = self.cfl_safety * domain.h**2 / (2 * domain.n * m.D)
        else:
            raise ValueError("dt='auto' needs a positive diffusion constant")
        if dt < self.dt_min:
            raise ValueError(f"dt={dt} below dt_min={self.dt_min}")
        return dt


@dataclass(frozen=True)
class RunSchedule:
    end_time: float
    record_times: Tuple[float, ...]
    snapshot_times: Tuple[float, ...] = ()

    def __post_init__(self):
        rt = tuple(float(t) for t in self.record_times)
        object.__setattr__(self, "record_times", rt)
        object.__setattr__(self, "snapshot_times", tuple(float(t) for t in self.snapshot_times))
        if any(b <= a for a, b in zip(rt, rt[1:])):
            raise ValueError("record times must be strictly increasing")
        if rt and (rt[0] < 0 or rt[-1] > self.end_time):
            raise ValueError("record times must lie in [0, end_time]")
        if any(t not in rt for t in self.snapshot_times):
            raise ValueError("snapshot times must be among the record times")

    @classmethod
    def geometric(cls, end_time: float, t0: float = 0.1, growth: float = 1.1,
                  snapshot_times: Sequence[float] = ()) -> "RunSchedule":
        """Record at 0, t0*growth**k up to end_time, and end_time itself."""
        if not (t0 > 0 and growth > 1):
            raise ValueError("need t0 > 0 and growth > 1")
        k = int(np.floor(np.log(end_time / t0) / np.log(growth) + 1e-9)) if end_time >= t0 else -1
        ts = [0.0] + [t0 * growth**i for i in range(k + 1)]
        ts = [t for t in ts if t < end_time * (1 - 1e-12)] + [float(end_time)]
        snaps = [min(ts, key=lambda r: abs(r - s)) for s in snapshot_times]
        return cls(float(end_time), tuple(ts), tuple(sorted(set(snaps))))


SERIES_COLUMNS = ("t", "mean", "mean_sq", "mean_cube", "variance", "grad_sq")


@dataclass
class TimeSeries:
    t: np.ndarray
    mean: np.ndarray
    mean_sq: np.ndarray
    mean_cube: np.ndarray
    variance: np.ndarray
    grad_sq: np.ndarray

    @classmethod
    def from_rows(cls, rows: Sequence[Sequence[float]]) -> "TimeSeries":
        arr = np.asarray(rows, dtype=float).reshape(-1, len(SERIES_COLUMNS))
        return cls(*(arr[:, i].copy() for i in range(len(SERIES_COLUMNS))))

    def __len__(self) -> int:
        return len(self.t)

    def column(self, name: str) -> np.ndarray:
        if name not in SERIES_COLUMNS:
            raise KeyError(f"unknown series column {name!r}")
        return getattr(self, name)

    def rows(self) -> np.ndarray:
        return np.column_stack([self.column(c) for c in SERIES_COLUMNS])

    def slice_time(self, lo: float, hi: float) -> "TimeSeries":
        sel = (self.t >= lo) & (self.t <= hi)
        return TimeSeries(*(self.column(c)[sel] for c in SERIES_COLUMNS))

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(SERIES_COLUMNS)
            for row in self.rows():
                w.writerow([format(x, ".17g") for x in row])

    @classmethod
    def from_csv(cls, path) -> "TimeSeries":
        with open(path, newline="") as fh:
            r = csv.reader(fh)
            header = next(r)
            if tuple(header) != SERIES_COLUMNS:
                raise ValueError(f"unexpected series header {header}")
            return cls.from_rows([[float(x) for x in row] for row in r if row])


def record_moments(t: float, f: ScalarField) -> List[float]:
    u = f.values
    mean = u.mean()
    return [
        t,
        float(mean),
        float(np.mean(u * u)),
        float(np.mean(u * u * u)),
        float(np.mean((u - mean) ** 2)),
        gradient_p_integral(f, 2),
    ]


# ---------------------------------------------------------------- stepping

def _reaction_flow(m: ModelSpec, u: np.ndarray, s: float) -> np.ndarray:
    """Exact pointwise reaction flow over time s (RK4 substep for PCPD)."""
    if m.kind is ModelKind.PAIR:
        return u / (1.0 + m.lam * u * s)
    if m.kind is ModelKind.TRIPLET:
        return u / np.sqrt(1.0 + 2.0 * m.mu * u * u * s)
    k1 = reaction_values(m, u)
    k2 = reaction_values(m, u + 0.5 * s * k1)
    k3 = reaction_values(m, u + 0.5 * s * k2)
    k4 = reaction_values(m, u + s * k3)
    return u + s / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4)


def _rhs(m: ModelSpec, u: np.ndarray, h: float) -> np.ndarray:
    return m.D * laplacian_array(u, h) + reaction_values(m, u)


def _advance(u: np.ndarray, m: ModelSpec, scheme: Scheme, dt: float, h: float) -> np.ndarray:
    if scheme is Scheme.STRANG:
        v = _reaction_flow(m, u, 0.5 * dt)
        if m.D > 0:
            v = v + (dt * m.D) * laplacian_array(v, h)
        return _reaction_flow(m, v, 0.5 * dt)
    if scheme is Scheme.EULER:
        return u + dt * _rhs(m, u, h)
    k1 = _rhs(m, u, h)
    k2 = _rhs(m, u + 0.5 * dt * k1, h)
    k3 = _rhs(m, u + 0.5 * dt * k2, h)
    k4 = _rhs(m, u + dt * k3, h)
    return u + dt / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4)


def _advance_safe(u, m, cfg: StepperConfig, dt, h, t, depth=0):
    """One step of size dt; on negativity, retry as two half steps."""
    with np.errstate(over="ignore", invalid="ignore"):
        v = _advance(u, m, cfg.scheme, dt, h)
    if np.all(np.isfinite(v)) and v.min() >= -POS_TOL:
        return v
    half = 0.5 * dt
    if depth >= cfg.max_halvings or half < cfg.dt_min:
        raise StepFailure(
            f"negative or non-finite density at t={t:.6g}; dt would drop to {half:.3g}"
            f" (dt_min={cfg.dt_min:.3g})",
            last_time=t,
        )
    log.debug("halving dt to %g at t=%g", half, t)
    w = _advance_safe(u, m, cfg, half, h, t, depth + 1)
    return _advance_safe(w, m, cfg, half, h, t + half, depth + 1)


def step(f: ScalarField, m: ModelSpec, cfg: StepperConfig, dt: float) -> ScalarField:
    if not dt > 0:
        raise ValueError("dt must be positive")
    if not f.is_density():
        raise ValueError("step needs a non-negative field")
    try:
        out = _advance_safe(f.values, m, cfg, dt, f.domain.h, 0.0)
    except StepFailure as exc:
        exc.last_field = f
        raise
    return f.with_values(out)


def run(domain: DomainSpec, m: ModelSpec, ic: Union["InitialCondition", ScalarField],
        cfg: StepperConfig, sched: RunSchedule, seed: int = 0
        ) -> Tuple[TimeSeries, Dict[float, ScalarField]]:
    f0 = ic if isinstance(ic, ScalarField) else make_initial_condition(domain, ic, seed)
    if f0.domain != domain:
        raise ValueError("initial field lives on a different domain")
    if not f0.is_density():
        raise ValueError("initial condition must be non-negative")
    dt = cfg.resolve_dt(domain, m)
    h = domain.h
    u = np.array(f0.values)
    t = 0.0
    rows: List[List[float]] = []
    snaps: Dict[float, ScalarField] = {}
    snap_set = set(sched.snapshot_times)
    last_good = f0
    for tr in sched.record_times:
        while t < tr:
            # land exactly on the recording time; avoid slivers
            s = tr - t if tr - t <= dt * (1 + 1e-9) else dt
            try:
                u = _advance_safe(u, m, cfg, s, h, t)
            except StepFailure as exc:
                exc.last_field = last_good
                raise
            t = tr if s == tr - t else t + s
        fld = ScalarField(domain, u)
        row = record_moments(t, fld)
        if not all(np.isfinite(row)):
            raise NonFiniteMomentError(
                f"non-finite moment at t={t:.6g}", last_good_time(rows), last_good,
                TimeSeries.from_rows(rows),
            )
        rows.append(row)
        last_good = fld
        if tr in snap_set:
            snaps[tr] = fld
    return TimeSeries.from_rows(rows), snaps


def last_good_time(rows) -> float:
    return rows[-1][0] if rows else 0.0


# ------------------------------------------------------- initial conditions

class ICKind(str, enum.Enum):
    CONSTANT = "constant"
    UNIFORM_NOISE = "uniform_noise"
    GAUSSIAN_BLOBS = "gaussian_blobs"
    FILTERED_NOISE = "filtered_noise"


@dataclass(frozen=True)
class InitialCondition:
    """Initial-condition recipe.

    Parameters by kind: constant ``a0``; uniform_noise ``lo, hi``;
    gaussian_blobs ``count, width, amplitude`` (optional ``background``);
    filtered_noise ``cutoff`` (fraction of the highest mode kept), ``mean``,
    ``amplitude``.
    """

    kind: ICKind
    params: Dict[str, float] = field(default_factory=dict)

    def __post_init__(self):
        object.__setattr__(self, "kind", ICKind(self.kind))
        object.__setattr__(self, "params", {k: float(v) for k, v in self.params.items()})

    @property
    def stochastic(self) -> bool:
        return self.kind is not ICKind.CONSTANT


def make_initial_condition(domain: DomainSpec, ic: InitialCondition, seed: int = 0,
                           return_clamped: bool = False):
    p = ic.params
    rng = np.random.default_rng(seed)
    if ic.kind is ICKind.CONSTANT:
        vals = np.full(domain.shape, p.get("a0", 1.0))
    elif ic.kind is ICKind.UNIFORM_NOISE:
        vals = rng.uniform(p.get("lo", 0.0), p.get("hi", 2.0), size=domain.shape)
    elif ic.kind is ICKind.GAUSSIAN_BLOBS:
        x = domain.coords()
        vals = np.full(domain.shape, p.get("background", 0.0))
        width = p.get("width", 1.0)
        for _ in range(int(p.get("count", 1))):
            centre = [rng.uniform(0, L) for L in domain.lengths]
            r2 = sum((xi - ci) ** 2 for xi, ci in zip(x, centre))
            vals = vals + p.get("amplitude", 1.0) * np.exp(-r2 / (2 * width**2))
    elif ic.kind is ICKind.FILTERED_NOISE:
        noise = rng.standard_normal(domain.shape)
        spec = scipy.fft.dctn(noise, type=2, norm="ortho")
        cut = p.get("cutoff", 0.1)
        k = np.meshgrid(*[np.arange(c) / c for c in domain.cells], indexing="ij", sparse=True)
        kk = np.sqrt(sum(ki**2 for ki in k))
        spec[kk > cut] = 0.0
        spec.flat[0] = 0.0
        smooth = scipy.fft.idctn(spec, type=2, norm="ortho")
        std = smooth.std()
        if std > 0:
            smooth = smooth / std
        vals = p.get("mean", 1.0) + p.get("amplitude", 0.5) * smooth
    else:  # pragma: no cover
        raise ValueError(ic.kind)
    clamped = bool(np.any(vals < 0))
    if clamped:
        log.warning("initial condition %s had negative values; clamped at 0", ic.kind.value)
        vals = np.maximum(vals, 0.0)
    f = ScalarField(domain, vals)
    return (f, clamped) if return_clamped else f


# ---------------------------------------------------------------- snapshots

def write_snapshot(path, f: ScalarField, t: float) -> None:
    d = f.domain
    with open(path, "w") as fh:
        fh.write(f"# n={d.n} cells={','.join(map(str, d.cells))} h={d.h:.17g} t={t:.17g}\n")
        for v in f.values.ravel(order="C"):
            fh.write(f"{v:.17g}\n")


def read_snapshot(path) -> Tuple[ScalarField, float]:
    with open(path) as fh:
        header = fh.readline()
        meta = dict(kv.split("=") for kv in header.lstrip("#").split())
        vals = np.array([float(line) for line in fh if line.strip()])
    cells = tuple(int(c) for c in meta["cells"].split(","))
    d = DomainSpec(int(meta["n"]), cells, float(meta["h"]))
    return ScalarField(d, vals.reshape(cells)), float(meta["t"])
