import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from rdlab.grid import DomainSpec, ScalarField
from rdlab.kinetics import (
    ModelSpec,
    NoExponentialRegimeError,
    PositivityError,
    homogeneous_exact,
    homogeneous_series,
    pcpd_relaxation_rate,
    pcpd_steady_state,
    reaction_rhs,
    reaction_values,
)


def test_model_validation():
    with pytest.raises(ValueError):
        ModelSpec.pair(0.0)
    with pytest.raises(ValueError):
        ModelSpec.triplet(-1.0)
    with pytest.raises(ValueError):
        ModelSpec("pair", lam=1.0, mu=1.0, D=2.0)
    ModelSpec.pcpd(-0.5, 1.0, D=2.0)


def test_reaction_examples():
    assert reaction_values(ModelSpec.pair(1.0), 2.0) == -4.0
    assert reaction_values(ModelSpec.triplet(2.0), 1.0) == -2.0
    assert reaction_values(ModelSpec.pcpd(1.0, 1.0), 1.0) == 0.0


def test_reaction_rhs_rejects_negative_density():
    f = ScalarField(DomainSpec(1, (3,), 1.0), np.array([1.0, -1e-6, 0.5]))
    with pytest.raises(PositivityError):
        reaction_rhs(ModelSpec.pair(1.0), f)


def test_homogeneous_examples():
    assert homogeneous_exact(ModelSpec.pair(1.0), 1.0, 1.0) == pytest.approx(0.5, rel=1e-15)
    assert homogeneous_exact(ModelSpec.triplet(1.0), 1.0, 4.0) == pytest.approx(1 / 3, rel=1e-15)
    assert homogeneous_exact(ModelSpec.pcpd(1.0, 2.0), 0.1, 2000.0) == pytest.approx(0.5, rel=1e-9)
    with pytest.raises(ValueError):
        homogeneous_exact(ModelSpec.pair(1.0), -1.0, 1.0)
    with pytest.raises(ValueError):
        homogeneous_exact(ModelSpec.pair(1.0), 1.0, -1.0)


def test_steady_state_and_relaxation():
    assert pcpd_steady_state(ModelSpec.pcpd(1.0, 2.0)) == 0.5
    assert pcpd_steady_state(ModelSpec.pcpd(0.0, 1.0)) == 0.0
    assert pcpd_steady_state(ModelSpec.pcpd(-1.0, 1.0)) == 0.0
    assert pcpd_relaxation_rate(ModelSpec.pcpd(1.0, 2.0)) == pytest.approx(0.5)
    assert pcpd_relaxation_rate(ModelSpec.pcpd(2.0, 1.0)) == pytest.approx(4.0)
    with pytest.raises(NoExponentialRegimeError):
        pcpd_relaxation_rate(ModelSpec.pcpd(0.0, 1.0))


@pytest.mark.parametrize("lam,mu", [(1.0, 2.0), (2.0, 1.0)])
def test_relaxation_rate_matches_fitted_decay(lam, mu):
    m = ModelSpec.pcpd(lam, mu)
    rate = pcpd_relaxation_rate(m)
    a_inf = pcpd_steady_state(m)
    t = np.linspace(0.0, 25.0 / rate, 200)
    dev = homogeneous_series(m, a_inf * 1.001, t) - a_inf
    sel = dev > 1e-11 * a_inf
    fitted = -np.polyfit(t[sel], np.log(dev[sel]), 1)[0]
    assert fitted == pytest.approx(rate, rel=1e-3)


@pytest.mark.parametrize("lam,mu,a0", [(-1.0, 1.0, 1.0), (-0.5, 1.0, 1.0), (-2.0, 0.5, 0.5)])
def test_negative_lambda_inverse_t(lam, mu, a0):
    T = 1e3 / (abs(lam) * a0)
    a = homogeneous_exact(ModelSpec.pcpd(lam, mu), a0, T)
    assert T * a == pytest.approx(1 / abs(lam), rel=0.02)


def test_series_matches_pointwise():
    m = ModelSpec.pcpd(0.3, 1.0)
    t = np.array([0.0, 0.5, 3.0, 40.0])
    np.testing.assert_allclose(homogeneous_series(m, 0.8, t), [homogeneous_exact(m, 0.8, x) for x in t], rtol=1e-9)


@settings(max_examples=40, deadline=None)
@given(st.sampled_from(["pair", "triplet"]), st.floats(0.1, 5.0), st.floats(0.01, 10.0),
       st.floats(0.0, 50.0), st.floats(1e-3, 10.0))
def test_annihilation_monotone_and_solves_ode(kind, k, a0, t, dt):
    m = ModelSpec.pair(k) if kind == "pair" else ModelSpec.triplet(k)
    a1 = homogeneous_exact(m, a0, t)
    a2 = homogeneous_exact(m, a0, t + dt)
    assert 0 < a2 <= a1 <= a0
    eps = 1e-6 * max(1.0, t)
    deriv = (homogeneous_exact(m, a0, t + eps) - homogeneous_exact(m, a0, max(t - eps, 0.0))) / (
        t + eps - max(t - eps, 0.0))
    assert deriv == pytest.approx(reaction_values(m, a1), rel=1e-3, abs=1e-9)


@settings(max_examples=15, deadline=None)
@given(st.floats(-1.0, 1.0), st.floats(0.2, 2.0), st.floats(0.01, 2.0))
def test_pcpd_approaches_steady_state_monotonically(lam, mu, a0):
    m = ModelSpec.pcpd(lam, mu)
    a_inf = pcpd_steady_state(m)
    vals = homogeneous_series(m, a0, np.linspace(0.0, 50.0, 60))
    dev = np.abs(vals - a_inf)
    assert np.all(np.diff(dev) <= 1e-10)
    assert math.isfinite(vals[-1])
