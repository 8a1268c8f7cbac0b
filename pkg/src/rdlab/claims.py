"""Claim-by-claim verification suite driven by an ExperimentConfig."""
from __future__ import annotations

import csv
import enum
import math
from dataclasses import dataclass
from functools import cached_property
from typing import Callable, Dict, List, Sequence

import numpy as np

from . import analysis as an
from .config import ConfigError, ExperimentConfig
from .grid import DomainSpec
from .inequality_lab import (
    GN_CASES,
    CaseId,
    InequalityCase,
    NotApplicableError,
    calibrate_nirenberg,
    check_proposition,
    estimate_constants,
    evaluate_case,
    generate_corpus,
    theta_admissible,
)
from .kinetics import ModelSpec, pcpd_relaxation_rate
from .stepper import RunSchedule, TimeSeries, run


class ClaimId(str, enum.Enum):
    EQ3_UPPER = "EQ3-UPPER"
    EQ3_LOWER_EXIST = "EQ3-LOWER-EXIST"
    EQ3A_UPPER = "EQ3A-UPPER"
    EQ3A_LOWER_EXIST = "EQ3A-LOWER-EXIST"
    EQ4_PAIR = "EQ4-PAIR"
    EQ4_TRIPLET = "EQ4-TRIPLET"
    COROLLARY_PAIR = "COROLLARY-PAIR"
    COROLLARY_TRIPLET = "COROLLARY-TRIPLET"
    EQ9_POS = "EQ9-POS"
    EQ9_ZERO = "EQ9-ZERO"
    EQ9_NEG = "EQ9-NEG"
    EQ10_11_SANDWICH = "EQ10-11-SANDWICH"
    EQ12_VARIANCE = "EQ12-VARIANCE"
    LEMMA1_GN = "LEMMA1-GN"
    LEMMA2_NIRENBERG = "LEMMA2-NIRENBERG"
    LEMMA3_POINCARE = "LEMMA3-POINCARE"
    PROPOSITION = "PROPOSITION"
    OMEGA_INDEPENDENCE = "OMEGA-INDEPENDENCE"


def parse_claims(spec: str | Sequence[str] | None) -> List[ClaimId]:
    if spec is None:
        return list(ClaimId)
    items = [s.strip() for s in (spec.split(",") if isinstance(spec, str) else spec) if s.strip()]
    if not items:
        return list(ClaimId)
    try:
        return [ClaimId(s.upper()) for s in items]
    except ValueError as exc:
        raise ConfigError(f"unknown claim id: {exc}") from None


@dataclass(frozen=True)
class Verdict:
    claim: ClaimId
    passed: bool
    margin: float
    window: str
    parameters: str


VERDICT_COLUMNS = ("claim", "pass", "margin", "window", "parameters")


def write_verdicts(path, verdicts: Sequence[Verdict]) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(VERDICT_COLUMNS)
        for v in verdicts:
            w.writerow([v.claim.value, int(v.passed), format(v.margin, ".17g"), v.window, v.parameters])


def verdict_table(verdicts: Sequence[Verdict]) -> str:
    lines = [f"{'claim':<20} {'verdict':<7} {'margin':>12}  window"]
    for v in verdicts:
        lines.append(f"{v.claim.value:<20} {'PASS' if v.passed else 'FAIL':<7} {v.margin:>12.4g}  {v.window}")
    n_ok = sum(v.passed for v in verdicts)
    lines.append(f"{n_ok}/{len(verdicts)} claims pass")
    return "\n".join(lines)


def _win(w) -> str:
    return f"[{w[0]:.6g}, {w[1]:.6g}]"


class Suite:
    """Lazily runs (and caches) the simulations and corpora the claims need."""

    def __init__(self, cfg: ExperimentConfig):
        self.cfg = cfg
        self.a = cfg.analysis
        self._pcpd: Dict[float, TimeSeries] = {}

    # ------------------------------------------------------------ runs
    def simulate(self, model: ModelSpec, domain: DomainSpec | None = None,
                 schedule: RunSchedule | None = None) -> TimeSeries:
        cfg = self.cfg
        series, _ = run(domain or cfg.domain, model, cfg.initial, cfg.stepper,
                        schedule or cfg.schedule.build(), seed=cfg.seed or 0)
        return series

    @cached_property
    def pair_model(self) -> ModelSpec:
        return ModelSpec.pair(self.cfg.model.lam)

    @cached_property
    def triplet_model(self) -> ModelSpec:
        return ModelSpec.triplet(self.cfg.model.mu)

    @cached_property
    def pair(self) -> TimeSeries:
        return self.simulate(self.pair_model)

    @cached_property
    def triplet(self) -> TimeSeries:
        return self.simulate(self.triplet_model)

    def pcpd(self, lam: float):
        a = self.a
        if lam not in self._pcpd:
            idx = list(a.pcpd_lams).index(lam)
            T = a.pcpd_end_times[idx]
            L = self.cfg.domain.lengths[0]
            dom = DomainSpec.box(self.cfg.domain.n, L, a.pcpd_h)
            m = ModelSpec.pcpd(lam, self.cfg.model.mu)
            sched = RunSchedule.geometric(T, self.cfg.schedule.t0, a.pcpd_growth)
            self._pcpd[lam] = self.simulate(m, dom, sched)
        return ModelSpec.pcpd(lam, self.cfg.model.mu), self._pcpd[lam]

    def _pcpd_lam(self, sign: int) -> float:
        for lam in self.a.pcpd_lams:
            if np.sign(lam) == sign:
                return lam
        raise ConfigError(f"analysis.pcpd_lams has no value with sign {sign}")

    @cached_property
    def corpora(self):
        iq = self.cfg.inequalities
        counts = {1: iq.count_1d, 2: iq.count_2d, 3: iq.count_3d}
        return {n: generate_corpus(n, iq.sizes, counts[n], seed=self.cfg.seed or 0) for n in iq.dims}

    def requested_cases(self, n: int, ids) -> List[InequalityCase]:
        wanted = None
        if self.cfg.inequalities.cases:
            try:
                wanted = [c for c in self.cfg.inequalities.cases if CaseId(c) in ids]
            except ValueError as exc:
                raise ConfigError(f"unknown inequality case: {exc}") from None
        out = []
        for cid in ids:
            if wanted is not None and cid.value not in wanted:
                continue
            try:
                out.append(InequalityCase(cid, n))
            except NotApplicableError:
                if wanted is not None:
                    raise ConfigError(f"{cid.value} requested for n={n}: not stated in that dimension") from None
        return out

    # ---------------------------------------------------------- claims
    def sandwich(self, which: str) -> List[Verdict]:
        s, m = (self.pair, self.pair_model) if which == "pair" else (self.triplet, self.triplet_model)
        rep = an.check_decay_sandwich(s, m, self.a.window, self.a.tol_disc)
        up, lo = list(rep.passes)
        k = m.lam if which == "pair" else m.mu
        rel = float(np.min(rep.upper_margin / (k * rep.mean ** (2 if which == "pair" else 3))))
        par = f"{m.kind.value} lam={m.lam:g} mu={m.mu:g} tol_disc={self.a.tol_disc:g}"
        return [Verdict(ClaimId(up), rep.passes[up], rel, _win(rep.window), par),
                Verdict(ClaimId(lo), rep.passes[lo], rep.rate_prime, _win(rep.window), par + " (margin=rate')")]

    def eq4(self, which: str) -> Verdict:
        s, m, target, cid = ((self.pair, self.pair_model, -1.0, ClaimId.EQ4_PAIR) if which == "pair"
                             else (self.triplet, self.triplet_model, -0.5, ClaimId.EQ4_TRIPLET))
        fit = an.fit_power_law(s, "mean", self.a.window)
        k = m.lam if which == "pair" else m.mu
        upper = 1.0 / k if which == "pair" else 1.0 / math.sqrt(2 * k)
        rep = an.check_asymptotic_window(s, m, self.a.window, tol=self.a.tol_window,
                                         floor=self.a.floor * upper)
        exp_margin = self.a.exponent_tol - abs(fit.exponent - target)
        margin = min(exp_margin, rep.margin + self.a.tol_window)
        return Verdict(cid, bool(exp_margin >= 0 and rep.passed), margin, _win(rep.window),
                       f"exponent={fit.exponent:.6g} max_scaled={rep.scaled.max():.6g} min_scaled={rep.scaled.min():.6g}")

    def corollary(self, which: str) -> Verdict:
        s, m, cid = ((self.pair, self.pair_model, ClaimId.COROLLARY_PAIR) if which == "pair"
                     else (self.triplet, self.triplet_model, ClaimId.COROLLARY_TRIPLET))
        rep = an.check_variance_decay(s, m, self.a.window, tol=self.a.tol_variance)
        return Verdict(cid, rep.passed, rep.margin, _win(rep.window),
                       f"K'=1 max_scaled_variance={rep.detail['max_scaled_variance']:.6g}")

    def eq9(self, sign: int) -> Verdict:
        lam = self._pcpd_lam(sign)
        m, s = self.pcpd(lam)
        v = an.classify_pcpd_regime(s, m)
        cid = {1: ClaimId.EQ9_POS, 0: ClaimId.EQ9_ZERO, -1: ClaimId.EQ9_NEG}[sign]
        want = {1: an.Regime.EXPONENTIAL, 0: an.Regime.CRITICAL_HALF, -1: an.Regime.INVERSE_T}[sign]
        if sign > 0:
            expected = pcpd_relaxation_rate(m)
            margin = self.a.regime_rate_tol - abs(v.value / expected - 1)
        else:
            expected = -0.5 if sign == 0 else -1.0
            margin = self.a.regime_exp_tol - abs(v.value - expected)
        return Verdict(cid, bool(v.regime is want and margin >= 0), margin, _win(v.window),
                       f"lam={lam:g} regime={v.regime.value} value={v.value:.6g} expected={expected:.6g}")

    def eq10_11(self) -> Verdict:
        worst, parts = math.inf, []
        for lam in self.a.pcpd_lams:
            m, s = self.pcpd(lam)
            v = an.classify_pcpd_regime(s, m)
            worst = min(worst, v.sandwich_worst)
            parts.append(f"lam={lam:g}:lam'={v.lam_prime:.4g},mu'={v.mu_prime:.4g}")
        return Verdict(ClaimId.EQ10_11_SANDWICH, worst >= 0, worst, "classification windows", " ".join(parts))

    def eq12(self) -> Verdict:
        worst, parts = math.inf, []
        for lam in self.a.pcpd_lams:
            m, s = self.pcpd(lam)
            rep = an.check_variance_decay(s, m, exponent_tol=self.a.variance_exp_tol)
            ok_margin = rep.margin if rep.passed else -abs(rep.margin)
            worst = min(worst, ok_margin)
            key = "rate" if lam > 0 else "exponent"
            parts.append(f"lam={lam:g}:{key}={rep.detail[key]:.4g}")
        return Verdict(ClaimId.EQ12_VARIANCE, worst >= 0, worst, "last decade above roundoff", " ".join(parts))

    def lemma1(self) -> Verdict:
        worst, parts = math.inf, []
        ok = True
        for n, corpus in self.corpora.items():
            for case in self.requested_cases(n, GN_CASES):
                th = case.theta
                ok &= theta_admissible(n, th, case.gradient_power)
                rep = estimate_constants(case, corpus)
                finite = all(np.isfinite(list(rep.ratios.values())))
                homog = _amplitude_drift(case, corpus)
                ok &= finite and homog <= 1e-12 and rep.dilation_spread <= 0.01
                worst = min(worst, 0.01 - rep.dilation_spread)
                parts.append(f"n={n}:{case.id.value}:C={rep.max_ratio:.4g}:spread={rep.dilation_spread:.2e}")
        return Verdict(ClaimId.LEMMA1_GN, bool(ok), worst, "corpus", " ".join(parts))

    def lemma2(self) -> Verdict:
        parts, ok, largest = [], True, 0.0
        for n, corpus in self.corpora.items():
            for p in (2.0, 3.0):
                rep = estimate_constants(InequalityCase(CaseId.NIRENBERG, n, p=p), corpus)
                finite = all(np.isfinite(list(rep.ratios.values())))
                ok &= finite
                largest = max(largest, rep.constant_estimate)
                parts.append(f"n={n}:p={p:g}:c={rep.constant_estimate:.4g}")
        return Verdict(ClaimId.LEMMA2_NIRENBERG, bool(ok), largest, "corpus", "margin=max c " + " ".join(parts))

    def lemma3(self) -> Verdict:
        if 1 not in self.corpora:
            raise ConfigError("LEMMA3-POINCARE needs dimension 1 in inequalities.dims")
        unit = [cf for cf in self.corpora[1] if cf.dilation == 1.0]
        rep = estimate_constants(InequalityCase(CaseId.POINCARE_P2, 1), unit)
        target = 1.0 / math.pi**2
        lo, hi = target * 0.99, target * 1.05
        margin = min(rep.max_ratio - lo, hi - rep.max_ratio) / target
        return Verdict(ClaimId.LEMMA3_POINCARE, bool(lo <= rep.max_ratio <= hi), margin, "unit interval",
                       f"max_ratio={rep.max_ratio:.6g} target=1/pi^2 argmax={rep.argmax}")

    def proposition(self) -> Verdict:
        worst, parts = math.inf, []
        for n, corpus in self.corpora.items():
            for p in (2, 3):
                c = calibrate_nirenberg(corpus, float(p), n)
                for cf in corpus:
                    chk = check_proposition(cf.field, p, c)
                    if chk is None:
                        continue
                    scale = chk.proposition_bound if chk.proposition_bound > 0 else 1.0
                    worst = min(worst, chk.margin / scale)
                parts.append(f"n={n}:p={p}:c={c:.4g}")
        return Verdict(ClaimId.PROPOSITION, worst >= -1e-12, worst, "corpus", " ".join(parts))

    def omega(self) -> Verdict:
        runs = []
        for L in self.a.omega_lengths:
            dom = DomainSpec.box(self.cfg.domain.n, L, self.cfg.domain.h)
            runs.append(dict(domain=dom, model=self.pair_model, ic=self.cfg.initial,
                             series=self.simulate(self.pair_model, dom)))
        rep = an.omega_independence_study(runs, self.a.window, self.a.omega_tol)
        return Verdict(ClaimId.OMEGA_INDEPENDENCE, rep.passed, self.a.omega_tol - rep.spread, _win(self.a.window),
                       " ".join(f"L={L:g}:lam'={r:.5g}" for L, r in zip(self.a.omega_lengths, rep.rate_primes)))


def _amplitude_drift(case: InequalityCase, corpus) -> float:
    drift = 0.0
    for cf in corpus[:: max(1, len(corpus) // 20)]:
        r1 = evaluate_case(case, cf.field)
        if r1 is None:
            continue
        r2 = evaluate_case(case, cf.field.with_values(3.7 * cf.field.values))
        drift = max(drift, abs(r2 / r1 - 1))
    return drift


def verify(cfg: ExperimentConfig, claims: Sequence[ClaimId]) -> List[Verdict]:
    suite = Suite(cfg)
    # validate case selection before any heavy work
    if ClaimId.LEMMA1_GN in claims:
        for n in cfg.inequalities.dims:
            suite.requested_cases(n, GN_CASES)
    table: Dict[ClaimId, Callable[[], List[Verdict] | Verdict]] = {
        ClaimId.EQ3_UPPER: lambda: suite.sandwich("pair")[0],
        ClaimId.EQ3_LOWER_EXIST: lambda: suite.sandwich("pair")[1],
        ClaimId.EQ3A_UPPER: lambda: suite.sandwich("triplet")[0],
        ClaimId.EQ3A_LOWER_EXIST: lambda: suite.sandwich("triplet")[1],
        ClaimId.EQ4_PAIR: lambda: suite.eq4("pair"),
        ClaimId.EQ4_TRIPLET: lambda: suite.eq4("triplet"),
        ClaimId.COROLLARY_PAIR: lambda: suite.corollary("pair"),
        ClaimId.COROLLARY_TRIPLET: lambda: suite.corollary("triplet"),
        ClaimId.EQ9_POS: lambda: suite.eq9(1),
        ClaimId.EQ9_ZERO: lambda: suite.eq9(0),
        ClaimId.EQ9_NEG: lambda: suite.eq9(-1),
        ClaimId.EQ10_11_SANDWICH: suite.eq10_11,
        ClaimId.EQ12_VARIANCE: suite.eq12,
        ClaimId.LEMMA1_GN: suite.lemma1,
        ClaimId.LEMMA2_NIRENBERG: suite.lemma2,
        ClaimId.LEMMA3_POINCARE: suite.lemma3,
        ClaimId.PROPOSITION: suite.proposition,
        ClaimId.OMEGA_INDEPENDENCE: suite.omega,
    }
    return [table[c]() for c in claims]
