import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from rdlab.grid import (
    DomainSpec,
    InvalidFieldError,
    ScalarField,
    gradient_components,
    gradient_p_integral,
    integrate,
    laplacian,
    laplacian_array,
    mean_density,
    p_norm_integral,
    second_deriv_p_integral,
    variance_integral,
)


def field1d(values, h=1.0):
    values = np.asarray(values, dtype=float)
    return ScalarField(DomainSpec(1, (len(values),), h), values)


def test_domain_validation():
    with pytest.raises(ValueError):
        DomainSpec(4, (10,) * 4, 1.0)
    with pytest.raises(ValueError):
        DomainSpec(1, (1,), 1.0)
    with pytest.raises(ValueError):
        DomainSpec(1, (10,), 0.0)
    d = DomainSpec.box(2, 10.0, 0.5)
    assert d.shape == (20, 20) and d.volume == pytest.approx(100.0)


def test_non_finite_field_rejected():
    with pytest.raises(InvalidFieldError):
        field1d([1.0, np.nan, 1.0])


def test_laplacian_hand_example():
    lap = laplacian(field1d([2, 1, 1])).values
    np.testing.assert_allclose(lap, [-1.0, 1.0, 0.0])
    assert lap.sum() == 0.0


def test_laplacian_of_constant_is_zero():
    d = DomainSpec(2, (7, 9), 0.3)
    assert np.all(laplacian(ScalarField.constant(d, 3.5)).values == 0.0)


def _cos_laplacian_error(cells, n):
    L = 2.0
    d = DomainSpec(n, (cells,) * n, L / cells)
    x = d.coords()
    k = [np.pi / L, 2 * np.pi / L, 3 * np.pi / L][:n]
    u = np.ones(d.shape)
    for xi, ki in zip(x, k):
        u = u * np.cos(ki * xi)
    exact = -sum(ki**2 for ki in k) * u
    return np.max(np.abs(laplacian_array(u, d.h) - exact))


@pytest.mark.parametrize("n,cells", [(1, 64), (2, 32), (3, 16)])
def test_laplacian_second_order(n, cells):
    ratio = _cos_laplacian_error(cells, n) / _cos_laplacian_error(2 * cells, n)
    assert 4 * 0.8 <= ratio <= 4 * 1.2


def test_mean_and_p_norm_examples():
    assert mean_density(field1d([2, 1, 1])) == pytest.approx(4 / 3)
    assert p_norm_integral(field1d([1, 2], h=0.5), 2) == pytest.approx(2.5)
    f = field1d([0.5, 1.5, 2.0, 0.1], h=0.7)
    assert p_norm_integral(f, 1) == pytest.approx(f.domain.volume * mean_density(f))
    with pytest.raises(ValueError):
        p_norm_integral(f, 0.5)
    with pytest.raises(ValueError):
        gradient_p_integral(f, 0.5)


def test_gradient_of_linear_field():
    cells = 1000
    d = DomainSpec(1, (cells,), 1.0 / cells)
    f = ScalarField.from_function(d, lambda x: x)
    # reflected ghosts halve the slope in the two boundary cells
    assert gradient_p_integral(f, 2) == pytest.approx(1.0, abs=3.0 / cells)
    assert np.allclose(gradient_components(f)[0][1:-1], 1.0)


def test_gradient_dilation_scaling():
    g = lambda y: np.exp(-((y - 0.3) ** 2) / 0.02) + 0.5 * np.cos(3 * np.pi * y)  # noqa: E731
    cells = 200
    base = ScalarField.from_function(DomainSpec(1, (cells,), 1.0 / cells), g)
    for s in (2.0, 3.5):
        dil = ScalarField.from_function(DomainSpec(1, (cells,), s / cells), lambda x: g(x / s))
        assert gradient_p_integral(dil, 2) == pytest.approx(gradient_p_integral(base, 2) / s, rel=1e-12)


def test_second_derivative_gaussian():
    d = DomainSpec(1, (4000,), 0.005)
    f = ScalarField.from_function(d, lambda x: np.exp(-((x - 10.0) ** 2) / 2))
    assert second_deriv_p_integral(f, 2) == pytest.approx(0.75 * math.sqrt(math.pi), rel=1e-4)
    lin = ScalarField.from_function(d, lambda x: 2 * x + 1)
    # only the two boundary cells see the reflected kink
    assert second_deriv_p_integral(lin, 2) <= 2 * d.h * (2.0 / d.h) ** 2


def test_variance_example():
    assert variance_integral(field1d([2, 0])) == pytest.approx(1.0)
    assert variance_integral(ScalarField.constant(DomainSpec(1, (5,), 1.0), 2.0)) == 0.0


@settings(max_examples=60, deadline=None)
@given(arrays(np.float64, st.tuples(st.integers(3, 12), st.integers(3, 12)),
              elements=st.floats(-1e3, 1e3, allow_nan=False)),
       st.floats(0.01, 10.0))
def test_zero_flux_sum_property(u, h):
    lap = laplacian_array(u, h)
    assert abs(lap.sum()) <= 1e-10 * max(np.abs(lap).sum(), 1e-300)


@settings(max_examples=60, deadline=None)
@given(arrays(np.float64, st.integers(3, 40), elements=st.floats(0.0, 1e3, allow_nan=False)))
def test_cauchy_schwarz_and_holder_means(u):
    f = field1d(u)
    m = mean_density(f)
    assert m**2 <= np.mean(u**2) * (1 + 1e-12) + 1e-300
    assert m**3 <= np.mean(u**3) * (1 + 1e-12) + 1e-300


@settings(max_examples=40, deadline=None)
@given(arrays(np.float64, st.integers(3, 40), elements=st.floats(-10, 10, allow_nan=False)),
       st.floats(0.1, 5.0))
def test_mean_linearity(u, alpha):
    f = field1d(u)
    assert mean_density(f.with_values(alpha * u)) == pytest.approx(alpha * mean_density(f), abs=1e-9)
    assert integrate(f) == pytest.approx(mean_density(f) * f.domain.volume, abs=1e-9)
