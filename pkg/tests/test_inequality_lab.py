import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from rdlab.grid import DomainSpec, ScalarField
from rdlab.inequality_lab import (
    CaseId,
    DegenerateCorpusError,
    InequalityCase,
    NotApplicableError,
    applicable_cases,
    calibrate_chain_constants,
    calibrate_nirenberg,
    check_gradient_bound_chain,
    check_proposition,
    estimate_constants,
    evaluate_case,
    generate_corpus,
    theta_admissible,
    write_report_csv,
)

GAUSS_DOMAIN = DomainSpec(1, (4000,), 0.005)


@pytest.fixture(scope="module")
def gaussian():
    return ScalarField.from_function(GAUSS_DOMAIN, lambda x: np.exp(-((x - 10.0) ** 2) / 2))


@pytest.fixture(scope="module")
def corpus1():
    return generate_corpus(1, count=30, seed=5)


def test_gaussian_gn2(gaussian):
    r = evaluate_case(InequalityCase(CaseId.GN2, 1), gaussian)
    assert r == pytest.approx(math.sqrt(math.pi) / (math.sqrt(2 * math.pi) * 2), rel=1e-4)


def test_gaussian_nirenberg(gaussian):
    r = evaluate_case(InequalityCase(CaseId.NIRENBERG, 1, p=2), gaussian)
    assert r == pytest.approx(1 / (2 * math.sqrt(3)), rel=1e-4)


def test_poincare_linear_field():
    cells = 1000
    f = ScalarField.from_function(DomainSpec(1, (cells,), 1.0 / cells), lambda x: x)
    assert evaluate_case(InequalityCase(CaseId.POINCARE_P2, 1), f) == pytest.approx(1 / 12, rel=0.01)


@pytest.mark.parametrize("cid,n,theta", [
    (CaseId.GN1, 2, Fraction(1, 2)), (CaseId.GN1, 3, Fraction(3, 5)),
    (CaseId.GN2, 1, Fraction(1, 2)), (CaseId.GN2, 2, Fraction(1)),
    (CaseId.GN_CUBIC_1, 1, Fraction(2, 3)),
    (CaseId.GN_CUBIC_2, 2, Fraction(4, 5)), (CaseId.GN_CUBIC_2, 3, Fraction(1)),
    (CaseId.GN_CUBIC_3, 3, Fraction(2, 3)),
])
def test_theta_table(cid, n, theta):
    case = InequalityCase(cid, n)
    assert case.theta == theta
    assert theta_admissible(n, theta, case.gradient_power)
    a, b = case.exponents
    assert a == case.lhs_power * (1 - theta) and b == case.lhs_power * theta / case.gradient_power


def test_applicability():
    ids = lambda n: {c.id for c in applicable_cases(n)} & set(CaseId)  # noqa: E731
    assert {CaseId.GN2, CaseId.GN_CUBIC_1} <= ids(1) and CaseId.GN1 not in ids(1)
    assert {CaseId.GN1, CaseId.GN2, CaseId.GN_CUBIC_2} <= ids(2)
    assert {CaseId.GN1, CaseId.GN_CUBIC_2, CaseId.GN_CUBIC_3} <= ids(3) and CaseId.GN2 not in ids(3)
    with pytest.raises(NotApplicableError):
        InequalityCase(CaseId.GN1, 1)
    # p = n at theta = 1 is excluded
    assert not theta_admissible(2, Fraction(1), 2)


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 10_000), st.floats(1e-3, 1e3), st.sampled_from([1, 2]))
def test_amplitude_homogeneity(seed, alpha, n):
    d = DomainSpec(n, (12,) * n, 0.3)
    u = np.random.default_rng(seed).uniform(0.0, 1.0, size=d.shape)
    f, g = ScalarField(d, u), ScalarField(d, alpha * u)
    for case in applicable_cases(n):
        r1, r2 = evaluate_case(case, f), evaluate_case(case, g)
        if r1 is not None and r2 is not None:
            assert r2 == pytest.approx(r1, rel=1e-12)


def test_corpus_reproducible_and_sized(corpus1):
    again = generate_corpus(1, count=30, seed=5)
    assert [c.id for c in again] == [c.id for c in corpus1]
    assert all(np.array_equal(a.field.values, b.field.values) for a, b in zip(again, corpus1))
    assert len(corpus1) == 30 * 3
    assert all(cf.field.is_density() for cf in corpus1 if cf.kind != "cosines")


def test_zero_amplitude_corpus_is_degenerate():
    corpus = generate_corpus(1, count=6, seed=1, amplitude=0.0)
    for case in applicable_cases(1):
        assert all(evaluate_case(case, cf.field) is None for cf in corpus)
        with pytest.raises(DegenerateCorpusError):
            estimate_constants(case, corpus)


def test_signed_field_skipped_for_mean_inequalities():
    f = ScalarField(DomainSpec(1, (3,), 1.0), np.array([1.0, -1.0, 2.0]))
    assert evaluate_case(InequalityCase(CaseId.CAUCHY_SCHWARZ, 1), f) is None


def test_dilation_invariance_corpus(corpus1):
    for case in applicable_cases(1):
        rep = estimate_constants(case, corpus1)
        if case.id in (CaseId.GN2, CaseId.GN_CUBIC_1, CaseId.NIRENBERG, CaseId.POINCARE_P2):
            assert rep.dilation_spread <= 0.01, case.id
        assert not rep.violations


def test_poincare_corpus_max_near_neumann(corpus1):
    rep = estimate_constants(InequalityCase(CaseId.POINCARE_P2, 1), corpus1)
    assert 1 / math.pi**2 * 0.99 <= rep.max_ratio <= 1 / math.pi**2 * 1.05


def test_report_csv(tmp_path, corpus1):
    reps = [estimate_constants(c, corpus1) for c in applicable_cases(1)]
    write_report_csv(tmp_path / "r.csv", reps, corpus1)
    lines = (tmp_path / "r.csv").read_text().splitlines()
    assert lines[0] == "case,n,field,ratio,degenerate"
    assert sum("SUMMARY" in ln for ln in lines) == len(reps)
    assert len(lines) == 1 + len(reps) * (len(corpus1) + 1)


def test_proposition_cases(gaussian, corpus1):
    c = calibrate_nirenberg(corpus1, 2, 1)
    res = check_proposition(gaussian, 2, max(c, 1 / 12))
    assert res.holds and res.nirenberg_bound >= res.lhs
    lin = ScalarField.from_function(DomainSpec(1, (200,), 0.01), lambda x: x + 1)
    res = check_proposition(lin, 2, c, eps0=1.0)
    assert res.holds
    const = ScalarField.constant(DomainSpec(1, (50,), 0.1), 2.0)
    res = check_proposition(const, 2, c, eps0=0.5)
    assert res.lhs == 0 and res.second_derivs_vanish
    assert res.margin == pytest.approx(res.proposition_bound)
    with pytest.raises(ValueError):
        check_proposition(gaussian, 4, c)


def test_gradient_chain(corpus1):
    K, K3 = calibrate_chain_constants(corpus1, 1)
    d = DomainSpec(1, (400,), 0.05)
    const = check_gradient_bound_chain(ScalarField.constant(d, 1.0), K, K3)
    assert const.passed and const.margin > 0
    L = d.volume
    small = ScalarField.from_function(d, lambda x: 1 + 0.1 * np.cos(np.pi * x / L))
    rep = check_gradient_bound_chain(small, K, K3)
    assert rep.side_condition and rep.passed
    spike = np.full(d.shape, 0.01)
    spike[200] = 100.0
    rep = check_gradient_bound_chain(ScalarField(d, spike), K, K3)
    assert not rep.side_condition and not rep.passed
