"""Empirical checks of the interpolation inequalities behind the lower bound.

Each case is evaluated as a ratio LHS / (RHS without its constant); the
maximum over a corpus of discrete fields is a lower estimate of the constant.
"""
from __future__ import annotations

import csv
import enum
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np

from .grid import (
    DomainSpec,
    ScalarField,
    gradient_p_integral,
    mean_density,
    p_norm_integral,
    second_deriv_p_integral,
)

DEGENERATE = 1e-10
MEAN_SLACK = 1e-12


class CaseId(str, enum.Enum):
    GN1 = "GN1"
    GN2 = "GN2"
    GN_CUBIC_1 = "GN-cubic-1"
    GN_CUBIC_2 = "GN-cubic-2"
    GN_CUBIC_3 = "GN-cubic-3"
    NIRENBERG = "NirenbergInterp"
    POINCARE_P2 = "PoincareP2"
    PROPOSITION_P2 = "PropositionP2"
    PROPOSITION_P3 = "PropositionP3"
    CAUCHY_SCHWARZ = "CauchySchwarzMean"
    HOLDER = "HolderMean"


class NotApplicableError(ValueError):
    """Case requested in a dimension where the inequality is not stated."""


# (r, p, allowed n range) for the j=0, k=1, q=1 Gagliardo-Nirenberg specialisations
_GN = {
    CaseId.GN1: (2, Fraction(2), (2, 3)),
    CaseId.GN2: (2, Fraction(1), (1, 2)),
    CaseId.GN_CUBIC_1: (3, Fraction(1), (1, Fraction(3, 2))),
    CaseId.GN_CUBIC_2: (3, Fraction(3, 2), (Fraction(3, 2), 3)),
    CaseId.GN_CUBIC_3: (3, Fraction(3), (3, 3)),
}

GN_CASES = tuple(_GN)


def gn_theta(n: int, r, p, q=1, j: int = 0, k: int = 1) -> Fraction:
    """Solve 1/r - j/n = (1-theta)/q + theta*(1/p - k/n) for theta."""
    n, r, p, q = (Fraction(x) for x in (n, r, p, q))
    lhs = 1 / r - Fraction(j) / n
    return (lhs - 1 / q) / (1 / p - Fraction(k) / n - 1 / q)


def theta_admissible(n: int, theta: Fraction, p, j: int = 0, k: int = 1) -> bool:
    lo_ok = theta >= Fraction(j, k)
    if Fraction(p) == Fraction(n, k - j):
        return lo_ok and theta < 1
    return lo_ok and theta <= 1


@dataclass(frozen=True)
class InequalityCase:
    id: CaseId
    n: int
    p: float = 2.0      # Nirenberg / Proposition exponent

    def __post_init__(self):
        object.__setattr__(self, "id", CaseId(self.id))
        if self.id in _GN:
            lo, hi = _GN[self.id][2]
            if not lo <= self.n <= hi:
                raise NotApplicableError(f"{self.id.value} is not stated for n={self.n} (needs {lo} <= n <= {hi})")
        if self.id is CaseId.PROPOSITION_P2:
            object.__setattr__(self, "p", 2.0)
        if self.id is CaseId.PROPOSITION_P3:
            object.__setattr__(self, "p", 3.0)

    @property
    def theta(self) -> Optional[Fraction]:
        if self.id not in _GN:
            return None
        r, p, _ = _GN[self.id]
        return gn_theta(self.n, r, p)

    @property
    def exponents(self) -> Tuple[Fraction, Fraction]:
        """Powers on (int |u|) and (int |grad u|^p) in the integrated GN form."""
        r, p, _ = _GN[self.id]
        th = self.theta
        return r * (1 - th), r * th / p

    @property
    def lhs_power(self) -> int:
        return _GN[self.id][0]

    @property
    def gradient_power(self) -> Fraction:
        return _GN[self.id][1]


def applicable_cases(n: int) -> List[InequalityCase]:
    out = []
    for cid in CaseId:
        try:
            out.append(InequalityCase(cid, n))
        except NotApplicableError:
            pass
    return out


def evaluate_case(case: InequalityCase, f: ScalarField) -> Optional[float]:
    """LHS / constant-free RHS, or None when the field is degenerate for the case."""
    if case.n != f.domain.n:
        raise ValueError("case dimension does not match field")
    vol = f.domain.volume
    n = case.n
    cid = case.id
    if cid in _GN:
        a, b = case.exponents
        l1 = p_norm_integral(f, 1)
        gp = gradient_p_integral(f, float(case.gradient_power))
        rhs = l1 ** float(a) * gp ** float(b)
        if l1 <= DEGENERATE or gp <= DEGENERATE or rhs <= DEGENERATE:
            return None
        return p_norm_integral(f, case.lhs_power) / rhs
    if cid in (CaseId.NIRENBERG,):
        A = p_norm_integral(f, case.p)
        B = second_deriv_p_integral(f, case.p)
        if A * B <= DEGENERATE**2:
            return None
        return gradient_p_integral(f, case.p) / (2.0 * math.sqrt(A * B))
    if cid in (CaseId.PROPOSITION_P2, CaseId.PROPOSITION_P3):
        A = p_norm_integral(f, case.p)
        if A <= DEGENERATE:
            return None
        return vol ** (case.p / n) * gradient_p_integral(f, case.p) / A
    if cid is CaseId.POINCARE_P2:
        g = gradient_p_integral(f, 2)
        rhs = vol ** (2.0 / n) * g
        if rhs <= DEGENERATE:
            return None
        dev = f.values - f.values.mean()
        return float(np.sum(dev * dev) * f.domain.cell_volume) / rhs
    if cid in (CaseId.CAUCHY_SCHWARZ, CaseId.HOLDER):
        if not f.is_density():
            return None
        q = 2 if cid is CaseId.CAUCHY_SCHWARZ else 3
        mq = float(np.mean(f.values**q))
        if mq <= DEGENERATE:
            return None
        return mean_density(f) ** q / mq
    raise ValueError(cid)  # pragma: no cover


def mean_inequality_excess(case: InequalityCase, f: ScalarField) -> float:
    """mean(f)^q - mean(f^q); positive beyond MEAN_SLACK is a violation."""
    q = 2 if case.id is CaseId.CAUCHY_SCHWARZ else 3
    return mean_density(f) ** q - float(np.mean(f.values**q))


# ------------------------------------------------------------------ corpus

@dataclass(frozen=True, eq=False)
class CorpusField:
    id: str
    family: str         # profile id shared by all dilated/scaled copies
    kind: str
    dilation: float
    amplitude: float
    field: ScalarField


def _profile(kind: str, n: int, rng: np.random.Generator) -> Callable[..., np.ndarray]:
    """Random smooth profile on the unit box, returned as a function of coordinates."""
    if kind == "bumps":
        k = int(rng.integers(1, 4))
        centres = rng.uniform(0.15, 0.85, size=(k, n))
        widths = rng.uniform(0.08, 0.25, size=k)
        amps = rng.uniform(0.5, 2.0, size=k)
        bg = float(rng.choice([0.0, rng.uniform(0.0, 0.5)]))

        def g(*x):
            # mirror images across both walls of each axis keep the normal derivative ~0
            out = bg
            for c, w, a in zip(centres, widths, amps):
                term = a
                for xi, ci in zip(x, c):
                    term = term * sum(np.exp(-((xi - m) ** 2) / (2 * w * w)) for m in (ci, -ci, 2 - ci))
                out = out + term
            return out
        return g
    if kind == "cosines":
        ks = rng.integers(0, 4, size=n)
        if not ks.any():
            ks[0] = 1
        offset = float(rng.choice([0.0, 1.0, 1.5]))

        def g(*x):
            out = 1.0
            for xi, ki in zip(x, ks):
                out = out * np.cos(ki * np.pi * xi)
            return offset + out
        return g
    if kind == "filtered":
        kmax = 4
        modes = [tuple(rng.integers(0, kmax + 1, size=n)) for _ in range(6)]
        coef = rng.normal(size=len(modes)) / (1.0 + np.linalg.norm(np.array(modes, dtype=float), axis=1))

        def raw(*x):
            out = 0.0
            for mvec, c in zip(modes, coef):
                term = c
                for xi, ki in zip(x, mvec):
                    term = term * np.cos(ki * np.pi * xi)
                out = out + term
            return out
        # shift to a non-negative field using a fine probe of the minimum
        probe = np.meshgrid(*[np.linspace(0, 1, 65)] * n, indexing="ij", sparse=True)
        lift = -float(np.min(raw(*probe))) + float(rng.uniform(0.0, 0.3))

        def g(*x):
            return raw(*x) + lift
        return g
    raise ValueError(kind)


def generate_corpus(n: int, sizes: Sequence[float] = (1.0, 2.0, 4.0), count: int = 70,
                    seed: int = 0, cells_per_unit: Optional[int] = None,
                    amplitude: float = 1.0, amplitude_copies: Sequence[float] = ()) -> List[CorpusField]:
    """Smooth zero-flux-compatible fields, each family sampled at every domain size.

    A family's profile g on the base box of side ``sizes[0]`` appears on the
    box of side L as g(x * sizes[0] / L) at unchanged grid spacing.  The
    unit-interval cosine cos(pi x) is always family 0.
    """
    rng = np.random.default_rng(seed)
    if cells_per_unit is None:
        cells_per_unit = {1: 128, 2: 96, 3: 24}[n]
    base = float(sizes[0])
    h = base / cells_per_unit
    kinds = ("bumps", "cosines", "filtered")
    profiles = [("cosines", lambda *x: np.cos(np.pi * x[0]) + 0.0 * sum(x))]
    for i in range(count - 1):
        kind = kinds[i % len(kinds)]
        profiles.append((kind, _profile(kind, n, rng)))
    out: List[CorpusField] = []
    for fam, (kind, g) in enumerate(profiles):
        for L in sizes:
            s = L / base
            dom = DomainSpec(n, (int(round(cells_per_unit * s)),) * n, h)
            vals = np.broadcast_to(g(*[xi / L for xi in dom.coords()]), dom.shape)
            for amp in (1.0, *amplitude_copies):
                out.append(CorpusField(
                    id=f"n{n}-f{fam:03d}-L{L:g}-a{amp:g}", family=f"f{fam:03d}", kind=kind,
                    dilation=s, amplitude=amp, field=ScalarField(dom, amplitude * amp * vals),
                ))
    return out


# ----------------------------------------------------------------- reports

@dataclass
class InequalityReport:
    case: InequalityCase
    ratios: Dict[str, float]
    skipped: List[str]
    max_ratio: float
    argmax: str
    dilation_spread: float
    violations: List[str] = field(default_factory=list)

    @property
    def constant_estimate(self) -> float:
        """Empirical constant; the Nirenberg ratio estimates sqrt(c)."""
        return self.max_ratio**2 if self.case.id is CaseId.NIRENBERG else self.max_ratio


class DegenerateCorpusError(ValueError):
    pass


def estimate_constants(case: InequalityCase, corpus: Sequence[CorpusField]) -> InequalityReport:
    if not corpus:
        raise ValueError("empty corpus")
    ratios: Dict[str, float] = {}
    skipped: List[str] = []
    violations: List[str] = []
    by_family: Dict[Tuple[str, float], List[float]] = {}
    for cf in corpus:
        if cf.field.domain.n != case.n:
            continue
        r = evaluate_case(case, cf.field)
        if r is None:
            skipped.append(cf.id)
            continue
        ratios[cf.id] = r
        by_family.setdefault((cf.family, cf.amplitude), []).append(r)
        if case.id in (CaseId.CAUCHY_SCHWARZ, CaseId.HOLDER):
            if mean_inequality_excess(case, cf.field) > MEAN_SLACK:
                violations.append(cf.id)
    if not ratios:
        raise DegenerateCorpusError(f"every field is degenerate for {case.id.value}")
    argmax = max(ratios, key=ratios.get)
    spreads = [(max(v) - min(v)) / min(v) for v in by_family.values() if len(v) > 1 and min(v) > 0]
    return InequalityReport(case, ratios, skipped, ratios[argmax], argmax,
                            max(spreads) if spreads else 0.0, violations)


def write_report_csv(path, reports: Sequence[InequalityReport], corpus: Sequence[CorpusField]) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["case", "n", "field", "ratio", "degenerate"])
        for rep in reports:
            for cf in corpus:
                if cf.field.domain.n != rep.case.n:
                    continue
                if cf.id in rep.ratios:
                    w.writerow([rep.case.id.value, rep.case.n, cf.id, format(rep.ratios[cf.id], ".17g"), 0])
                elif cf.id in rep.skipped:
                    w.writerow([rep.case.id.value, rep.case.n, cf.id, "", 1])
            w.writerow([rep.case.id.value, rep.case.n, "SUMMARY", format(rep.max_ratio, ".17g"),
                        len(rep.skipped)])


# ------------------------------------------------------------- proposition

@dataclass(frozen=True)
class PropositionCheck:
    p: float
    lhs: float
    eps_star: float
    nirenberg_bound: float      # c*A/eps* + eps*B
    proposition_bound: float    # 2c*A/eps*, the bound for every eps < eps*
    margin: float
    second_derivs_vanish: bool

    @property
    def holds(self) -> bool:
        return self.margin >= 0


def check_proposition(f: ScalarField, p: float, c: float, eps0: float = math.inf) -> Optional[PropositionCheck]:
    """Apply the eps* selection rule to a field with Nirenberg constant ``c``.

    eps* = min(sqrt(c*A/B), eps0) minimises c*A/eps + eps*B; below eps* the
    first term dominates, giving the bound 2*c*A/eps.
    """
    if p not in (2, 3):
        raise ValueError("the proposition is checked for p in {2, 3}")
    A = p_norm_integral(f, p)
    if A <= DEGENERATE:
        return None
    B = second_deriv_p_integral(f, p)
    lhs = gradient_p_integral(f, p)
    vanish = B <= DEGENERATE * A
    eps_star = eps0 if vanish else min(math.sqrt(c * A / B), eps0)
    if math.isinf(eps_star):
        # only reachable when B vanishes and eps0 is unbounded
        nir, prop = (math.inf if B > 0 else 0.0), 0.0
    else:
        nir, prop = c * A / eps_star + eps_star * B, 2.0 * c * A / eps_star
    return PropositionCheck(p, lhs, eps_star, nir, prop, prop - lhs, vanish)


def calibrate_nirenberg(corpus: Sequence[CorpusField], p: float, n: int) -> float:
    """Corpus-calibrated c for the minimised Nirenberg form (c = max ratio**2)."""
    return estimate_constants(InequalityCase(CaseId.NIRENBERG, n, p=p), corpus).constant_estimate


def calibrate_chain_constants(corpus: Sequence[CorpusField], n: int) -> Tuple[float, float]:
    """K and K3: corpus maxima of |Omega|^(p/n) int|grad u|^p / int|u|^p for p = 2, 3."""
    k2 = estimate_constants(InequalityCase(CaseId.PROPOSITION_P2, n), corpus).max_ratio
    k3 = estimate_constants(InequalityCase(CaseId.PROPOSITION_P3, n), corpus).max_ratio
    return k2, k3


@dataclass(frozen=True)
class ChainReport:
    side_condition: bool          # int (f - mean)^2 <= |Omega| mean^2
    step_bound: bool              # int|grad f|^2 <= K |Omega|^(-2/n) int f^2
    final_bound: bool             # int|grad f|^2 <= 2K |Omega|^(1-2/n) mean^2
    margin: float                 # final RHS - LHS
    cubic_side_condition: Optional[bool] = None
    cubic_step_bound: Optional[bool] = None
    cubic_final_bound: Optional[bool] = None
    cubic_margin: Optional[float] = None

    @property
    def passed(self) -> bool:
        ok = self.side_condition and self.step_bound and self.final_bound
        if self.cubic_final_bound is not None:
            ok = ok and bool(self.cubic_side_condition and self.cubic_step_bound and self.cubic_final_bound)
        return ok


def check_gradient_bound_chain(f: ScalarField, K: float, K3: Optional[float] = None) -> ChainReport:
    mean = mean_density(f)
    if not mean > 0:
        raise ValueError("gradient-bound chain needs a positive mean")
    n, vol = f.domain.n, f.domain.volume
    dev = f.values - mean
    var_int = float(np.sum(dev**2) * f.domain.cell_volume)
    g2 = gradient_p_integral(f, 2)
    side = var_int <= vol * mean**2
    step = g2 <= K * vol ** (-2.0 / n) * p_norm_integral(f, 2) * (1 + 1e-12)
    rhs = 2.0 * K * vol ** (1.0 - 2.0 / n) * mean**2
    kw = {}
    if K3 is not None:
        abs3 = float(np.sum(np.abs(dev) ** 3) * f.domain.cell_volume)
        g3 = gradient_p_integral(f, 3)
        rhs3 = 5.0 * K3 * vol ** (1.0 - 3.0 / n) * mean**3
        kw = dict(
            cubic_side_condition=bool(side and abs3 <= vol * mean**3),
            cubic_step_bound=bool(g3 <= K3 * vol ** (-3.0 / n) * p_norm_integral(f, 3) * (1 + 1e-12)),
            cubic_final_bound=bool(g3 <= rhs3),
            cubic_margin=rhs3 - g3,
        )
    return ChainReport(bool(side), bool(step), bool(g2 <= rhs), rhs - g2, **kw)
