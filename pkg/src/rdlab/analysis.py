"""Verdicts on mean-density decay, variance decay and PCPD regimes."""
from __future__ import annotations

import csv
import enum
import math
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from .kinetics import ModelKind, ModelSpec, pcpd_relaxation_rate, pcpd_steady_state
from .stepper import TimeSeries

Window = Tuple[float, float]

TOL_DISC = 0.05


class UndefinedRateError(ValueError):
    pass


class ValidityError(ValueError):
    """Window starts before the asymptotic bounds are guaranteed."""


class InsufficientDataError(ValueError):
    pass


def _annihilation_order(m: ModelSpec) -> Tuple[int, float]:
    if m.kind is ModelKind.PAIR:
        return 2, m.lam
    if m.kind is ModelKind.TRIPLET:
        return 3, m.mu
    raise ValueError("decay bounds apply to pair or triplet annihilation only")


def last_decade(t: np.ndarray) -> Window:
    hi = float(np.max(t))
    return hi / 10.0, hi


def _select(t: np.ndarray, window: Optional[Window]) -> np.ndarray:
    lo, hi = window if window is not None else last_decade(t)
    return (t >= lo) & (t <= hi)


def estimate_time_derivative(s: TimeSeries, column: str = "mean") -> Tuple[np.ndarray, np.ndarray]:
    """Second-order differences on the recording times (one-sided at the ends)."""
    if len(s) < 3:
        raise InsufficientDataError("need at least 3 samples for a derivative")
    y = s.column(column)
    return s.t.copy(), np.gradient(y, s.t, edge_order=2)


# ------------------------------------------------------------ decay sandwich

@dataclass
class BoundReport:
    t: np.ndarray
    mean: np.ndarray
    dmean: np.ndarray
    rate: np.ndarray            # (-d mean/dt) / mean**q, per sample
    upper_margin: np.ndarray    # >= 0 where the upper bound holds within tolerance
    window: Window
    passes: Dict[str, bool]
    rate_prime: float           # sup of the empirical rate over the window
    violations: List[Tuple[float, float]] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return all(self.passes.values())

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["t", "mean", "dmean_dt", "empirical_rate", "upper_margin"])
            for row in zip(self.t, self.mean, self.dmean, self.rate, self.upper_margin):
                w.writerow([format(x, ".17g") for x in row])


def check_decay_sandwich(s: TimeSeries, m: ModelSpec, window: Optional[Window] = None,
                         tol_disc: float = TOL_DISC, rate_cap: float = 1e6) -> BoundReport:
    """Upper bound pointwise; lower bound as existence of a finite sup rate."""
    q, k = _annihilation_order(m)
    t, d = estimate_time_derivative(s)
    sel = _select(t, window)
    if sel.sum() == 0:
        raise InsufficientDataError("no samples in window")
    a = s.mean[sel]
    if np.any(a <= 0):
        raise UndefinedRateError("mean density <= 0 inside the window")
    d = d[sel]
    rate = -d / a**q
    margin = -k * a**q * (1.0 - tol_disc) - d
    bad = margin < 0
    rate_prime = float(np.max(rate))
    upper_name, lower_name = ("EQ3-UPPER", "EQ3-LOWER-EXIST") if q == 2 else ("EQ3A-UPPER", "EQ3A-LOWER-EXIST")
    passes = {
        upper_name: bool(not bad.any()),
        lower_name: bool(np.isfinite(rate_prime) and 0 < rate_prime <= rate_cap),
    }
    return BoundReport(
        t=t[sel], mean=a, dmean=d, rate=rate, upper_margin=margin,
        window=(float(t[sel][0]), float(t[sel][-1])), passes=passes, rate_prime=rate_prime,
        violations=[(float(tt), float(mm)) for tt, mm in zip(t[sel][bad], margin[bad])],
    )


@dataclass
class WindowReport:
    t: np.ndarray
    scaled: np.ndarray     # t*mean (pair) or sqrt(t)*mean (triplet)
    upper: float
    floor: float
    passed_upper: bool
    passed_floor: bool
    window: Window

    @property
    def passed(self) -> bool:
        return self.passed_upper and self.passed_floor

    @property
    def margin(self) -> float:
        """Relative headroom below the upper constant (negative on failure)."""
        return float(1.0 - self.scaled.max() / self.upper)


def check_asymptotic_window(s: TimeSeries, m: ModelSpec, window: Window,
                            rate_prime: Optional[float] = None, tol: float = 0.02,
                            floor: Optional[float] = None) -> WindowReport:
    q, k = _annihilation_order(m)
    if rate_prime is None:
        rate_prime = check_decay_sandwich(s, m, window).rate_prime
    a0 = float(s.mean[0])
    t_lo = window[0]
    validity = a0 * rate_prime * t_lo if q == 2 else 2 * a0**2 * rate_prime * t_lo
    if not validity > 1:
        raise ValidityError(
            f"window starts at t={t_lo:g} before the bound holds (validity product {validity:.3g} <= 1)"
        )
    sel = _select(s.t, window)
    t = s.t[sel]
    if q == 2:
        scaled, upper = t * s.mean[sel], 1.0 / k
    else:
        scaled, upper = np.sqrt(t) * s.mean[sel], 1.0 / math.sqrt(2.0 * k)
    floor = 0.2 * upper if floor is None else floor
    return WindowReport(
        t=t, scaled=scaled, upper=upper, floor=floor,
        passed_upper=bool(np.all(scaled <= upper * (1 + tol))),
        passed_floor=bool(np.all(scaled >= floor)),
        window=(float(t[0]), float(t[-1])),
    )


@dataclass
class IdentityReport:
    t: np.ndarray
    residual: np.ndarray    # |d mean/dt + k*mean(u^q)| / (k*mean(u^q))
    tol: float
    window: Window

    @property
    def passed(self) -> bool:
        return bool(np.all(self.residual <= self.tol))

    @property
    def worst(self) -> float:
        return float(np.max(self.residual))


def check_mean_identity(s: TimeSeries, m: ModelSpec, window: Optional[Window] = None,
                        tol: float = 0.05) -> IdentityReport:
    """Boundary flux vanishes: d mean/dt = -k*mean(u^q) at interior recording times."""
    q, k = _annihilation_order(m)
    t, d = estimate_time_derivative(s)
    sel = _select(t, window)
    sel[[0, -1]] = False
    if sel.sum() == 0:
        raise InsufficientDataError("no interior samples in window")
    sink = k * (s.mean_sq if q == 2 else s.mean_cube)[sel]
    if np.any(sink <= 0):
        raise UndefinedRateError("zero reaction sink inside the window")
    res = np.abs(d[sel] + sink) / sink
    return IdentityReport(t[sel], res, tol, (float(t[sel][0]), float(t[sel][-1])))


# ----------------------------------------------------------------- fitting

@dataclass(frozen=True)
class PowerLawFit:
    exponent: float
    amplitude: float
    r2: float
    window: Window
    samples: int


def _linfit(x: np.ndarray, y: np.ndarray) -> Tuple[float, float, float]:
    slope, icpt = np.polyfit(x, y, 1)
    resid = y - (slope * x + icpt)
    ss_tot = float(np.sum((y - y.mean()) ** 2))
    r2 = 1.0 - float(np.sum(resid**2)) / ss_tot if ss_tot > 0 else 1.0
    return float(slope), float(icpt), min(max(r2, 0.0), 1.0)


def power_law_fit(t: np.ndarray, y: np.ndarray, window: Optional[Window] = None,
                  min_samples: int = 8) -> PowerLawFit:
    t = np.asarray(t, dtype=float)
    y = np.asarray(y, dtype=float)
    sel = _select(t, window) & (t > 0)
    if sel.sum() < min_samples:
        raise InsufficientDataError(f"{sel.sum()} samples in window, need {min_samples}")
    if np.any(y[sel] <= 0):
        raise ValueError("power-law fit needs positive samples")
    slope, icpt, r2 = _linfit(np.log(t[sel]), np.log(y[sel]))
    return PowerLawFit(slope, math.exp(icpt), r2, (float(t[sel][0]), float(t[sel][-1])), int(sel.sum()))


def fit_power_law(s: TimeSeries, column: str = "mean", window: Optional[Window] = None) -> PowerLawFit:
    return power_law_fit(s.t, s.column(column), window)


@dataclass(frozen=True)
class ExpFit:
    rate: float
    amplitude: float
    r2: float
    window: Window
    samples: int


def exponential_fit(t: np.ndarray, y: np.ndarray, min_samples: int = 4) -> ExpFit:
    if len(t) < min_samples:
        raise InsufficientDataError(f"{len(t)} samples, need {min_samples}")
    slope, icpt, r2 = _linfit(np.asarray(t, float), np.log(y))
    return ExpFit(-slope, math.exp(icpt), r2, (float(t[0]), float(t[-1])), len(t))


# ---------------------------------------------------------------- variance

class Regime(str, enum.Enum):
    EXPONENTIAL = "Exponential"
    CRITICAL_HALF = "CriticalHalf"
    INVERSE_T = "InverseT"


@dataclass
class VarianceReport:
    passed: bool
    margin: float
    window: Window
    detail: Dict[str, float]


def _tail_above(t, y, floor, settle: float = 0.1) -> np.ndarray:
    """Indices of the last decade of the decay of y towards ``floor``.

    The decay starts after the last time y exceeded ``settle`` times its peak
    (so a slow transient is not fitted) and ends at the first sample at or
    below ``floor`` (so roundoff noise is not fitted either).
    """
    pos = t > 0
    if not np.any(pos & (y > floor)):
        return np.array([], dtype=int)
    high = np.nonzero(pos & (y > settle * np.max(y[pos])))[0]
    start = high[-1] if len(high) else int(np.argmax(pos))
    below = np.nonzero(y[start:] <= floor)[0]
    stop = start + below[0] if len(below) else len(t)
    idx = np.arange(start, stop)
    if len(idx) == 0:
        return idx
    t_end = t[idx[-1]]
    return idx[t[idx] >= t_end / 10.0]


def check_variance_decay(s: TimeSeries, m: ModelSpec, window: Optional[Window] = None,
                         tol: float = 0.05, exponent_tol: float = 0.15,
                         rate_prime: Optional[float] = None) -> VarianceReport:
    """Variance bounds with K' = 1 for annihilation; decay-regime bounds for PCPD."""
    if m.kind is not ModelKind.PCPD:
        q, k = _annihilation_order(m)
        if window is None:
            window = last_decade(s.t)
        if rate_prime is None:
            rate_prime = check_decay_sandwich(s, m, window).rate_prime
        a0 = float(s.mean[0])
        validity = a0 * rate_prime * window[0] if q == 2 else 2 * a0**2 * rate_prime * window[0]
        if not validity > 1:
            raise ValidityError(f"window start {window[0]:g} precedes the validity time")
        sel = _select(s.t, window)
        t, var = s.t[sel], s.variance[sel]
        scaled = var * t**2 * k**2 if q == 2 else var * t * 2 * k
        worst = float(scaled.max())
        return VarianceReport(worst <= 1 + tol, 1 + tol - worst, (float(t[0]), float(t[-1])),
                              {"max_scaled_variance": worst})
    fitted = _variance_fits(s, m, window)
    if m.lam > 0:
        ok = fitted["exponential"] and fitted["rate"] > 0
        margin = fitted["rate"]
    else:
        bound = -1.0 if m.lam == 0 else -2.0
        margin = bound + exponent_tol - fitted["exponent"]
        ok = margin >= 0
    return VarianceReport(bool(ok), float(margin), (fitted["t_lo"], fitted["t_hi"]), fitted)


def _variance_fits(s: TimeSeries, m: ModelSpec, window: Optional[Window]):
    scale = max(float(np.max(s.mean)), pcpd_steady_state(m)) ** 2
    if window is None:
        idx = _tail_above(s.t, s.variance, 1e-20 * scale)
    else:
        idx = np.nonzero(_select(s.t, window) & (s.variance > 1e-20 * scale))[0]
    if len(idx) < 8:
        raise InsufficientDataError("variance decays below the roundoff floor too early")
    t, v = s.t[idx], s.variance[idx]
    e = exponential_fit(t, v)
    p = power_law_fit(t, v, window=(float(t[0]), float(t[-1])))
    return {"exponential": float(e.r2 > p.r2), "rate": e.rate, "r2_exp": e.r2, "exponent": p.exponent, "r2_pow": p.r2,
                    "t_lo": float(t[0]), "t_hi": float(t[-1])}


# -------------------------------------------------------------------- PCPD

@dataclass
class RegimeVerdict:
    regime: Regime
    value: float                 # decay rate (Exponential) or exponent (power laws)
    r2_exp: float
    r2_pow: float
    window: Window
    expected_rate: Optional[float]
    sandwich_ok: bool
    lam_prime: float
    mu_prime: float
    sandwich_worst: float        # most negative normalised slack, >= 0 when the sandwich holds

    @property
    def confidence(self) -> float:
        return abs(self.r2_exp - self.r2_pow)


def classify_pcpd_regime(s: TimeSeries, m: ModelSpec, window: Optional[Window] = None,
                         floor_rel: float = 1e-12, linear_rel: float = 1e-3,
                         tol_disc: float = TOL_DISC) -> RegimeVerdict:
    """Classify the decay of the mean density towards its steady state.

    The regime is picked from the data: an exponential law in t is preferred
    when it fits the tail of |mean - a_inf| better than a power law; otherwise
    the fitted exponent decides between t^-1/2 and t^-1.  For the exponential
    branch the rate is refit on the linear-response part of the tail.
    """
    if m.kind is not ModelKind.PCPD:
        raise ValueError("regime classification needs the PCPD model")
    a_inf = pcpd_steady_state(m)
    dev = np.abs(s.mean - a_inf)
    scale = max(a_inf, float(s.mean[0]))
    floor = floor_rel * scale
    if window is None:
        idx = _tail_above(s.t, dev, floor)
    else:
        idx = np.nonzero(_select(s.t, window) & (dev > floor))[0]
    if len(idx) < 8:
        raise InsufficientDataError("decay window has fewer than 8 usable samples")
    t, y = s.t[idx], dev[idx]
    e = exponential_fit(t, y)
    p = power_law_fit(t, y, window=(float(t[0]), float(t[-1])))
    expected = None
    if e.r2 > p.r2 and e.rate > 0:
        regime = Regime.EXPONENTIAL
        lin = idx[(dev[idx] <= linear_rel * scale)]
        if len(lin) >= 4:
            e = exponential_fit(s.t[lin], dev[lin])
        value = e.rate
        if m.lam > 0:
            expected = pcpd_relaxation_rate(m)
    else:
        value = p.exponent
        regime = Regime.CRITICAL_HALF if abs(value + 0.5) < abs(value + 1.0) else Regime.INVERSE_T
        expected = -0.5 if regime is Regime.CRITICAL_HALF else -1.0

    ok, lp, mp, worst = pcpd_sandwich(s, m, (float(t[0]), float(t[-1])), tol_disc)
    return RegimeVerdict(regime, float(value), e.r2, p.r2, (float(t[0]), float(t[-1])),
                         expected, ok, lp, mp, worst)


def pcpd_sandwich(s: TimeSeries, m: ModelSpec, window: Window, tol_disc: float = TOL_DISC):
    """Two-sided bound on d mean/dt with empirical effective rates.

    lam >= 0: lam*a^2 - mu'*a^3 <= da/dt <= lam'*a^2 - mu*a^3
    lam <= 0: -|lam'|*a^2 - mu'*a^3 <= da/dt <= -|lam|*a^2 - mu*a^3
    """
    t, d = estimate_time_derivative(s)
    sel = _select(t, window)
    a, m2, m3, d = s.mean[sel], s.mean_sq[sel], s.mean_cube[sel], d[sel]
    lam_abs = abs(m.lam)
    lam_prime = lam_abs * float(np.max(m2 / a**2))
    mu_prime = m.mu * float(np.max(m3 / a**3))
    if m.lam >= 0:
        upper = lam_prime * a**2 - m.mu * a**3
        lower = m.lam * a**2 - mu_prime * a**3
    else:
        upper = -lam_abs * a**2 - m.mu * a**3
        lower = -lam_prime * a**2 - mu_prime * a**3
    slack = tol_disc * (lam_abs * a**2 + m.mu * a**3)
    norm = lam_abs * a**2 + m.mu * a**3
    worst = float(np.min(np.minimum(upper - d + slack, d - lower + slack) / norm))
    return worst >= 0, lam_prime, mu_prime, worst


# ----------------------------------------------------- volume independence

@dataclass
class OmegaReport:
    volumes: List[float]
    rate_primes: List[float]
    spread: float
    passed: bool


def omega_independence_study(runs: Sequence[dict], window: Window, tol: float = 0.10) -> OmegaReport:
    """``runs`` items: dict(domain=..., model=..., ic=..., series=...)."""
    if len(runs) < 3:
        raise ValueError("need at least 3 runs across domain sizes")
    m0, ic0 = runs[0]["model"], runs[0]["ic"]
    for r in runs[1:]:
        if r["model"] != m0 or r["ic"] != ic0:
            raise ValueError("runs differ in model or initial-condition parameters")
    vols = [r["domain"].volume for r in runs]
    if len(set(vols)) != len(vols):
        raise ValueError("runs must differ in domain volume")
    rates = [check_decay_sandwich(r["series"], m0, window).rate_prime for r in runs]
    spread = (max(rates) - min(rates)) / min(rates)
    return OmegaReport(vols, rates, float(spread), bool(np.all(np.isfinite(rates)) and spread <= tol))
