"""Adaptive quadrature against closed-form oracles."""
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from odeuniq.quadrature import (
    IntegrandError,
    integrate,
    integrate_singular_left,
    integrate_to_infinity,
)

# (integrand, a, b, exact) closed-form proper integrals
PROPER_CASES = [
    (lambda w: w**2, 0.0, 1.0, 1.0 / 3.0),
    (lambda w: np.sin(w), 0.0, math.pi, 2.0),
    (lambda w: 1.0 / (1.0 + w**2), 0.0, 1.0, math.pi / 4.0),
    (lambda w: np.exp(w), 0.0, 1.0, math.e - 1.0),
    (lambda w: np.cos(10 * w), 0.0, 1.0, math.sin(10.0) / 10.0),
]


@pytest.mark.parametrize("g,a,b,exact", PROPER_CASES)
def test_proper_integrals(g, a, b, exact):
    res = integrate(g, a, b, tol=1e-12)
    assert res.converged and not res.diverged
    assert res.value == pytest.approx(exact, rel=1e-10)


SINGULAR_CASES = [
    (lambda w: w**-0.5, 1.0, 2.0),
    (lambda w: w**-0.9, 1.0, 10.0),
    (lambda w: np.log(1.0 / w), 1.0, 1.0),
    (lambda w: 1.0 / np.sqrt(w) + w, 1.0, 2.5),
]


@pytest.mark.parametrize("g,b,exact", SINGULAR_CASES)
def test_singular_left_endpoint(g, b, exact):
    res = integrate_singular_left(g, b, tol=1e-12)
    assert res.converged and not res.diverged
    assert res.value == pytest.approx(exact, rel=1e-8)


DIVERGENT_CASES = [
    lambda w: 1.0 / w,
    lambda w: w**-1.5,
    lambda w: 1.0 / (w * np.maximum(np.log(1.0 / w), 1e-300)),
]


@pytest.mark.parametrize("g", DIVERGENT_CASES)
def test_divergent_singular_integrals_flagged(g):
    res = integrate_singular_left(g, 1.0, tol=1e-10)
    assert res.diverged and not res.converged


def test_tail_integrals():
    res = integrate_to_infinity(lambda s: np.exp(-s), 0.0, tol=1e-12)
    assert res.converged
    assert res.value == pytest.approx(1.0, rel=1e-10)
    res = integrate_to_infinity(lambda s: s * np.exp(-s), 0.0, tol=1e-12)
    assert res.value == pytest.approx(1.0, rel=1e-8)
    res = integrate_to_infinity(lambda s: 1.0 / s**2, 1.0, tol=1e-12)
    assert res.value == pytest.approx(1.0, rel=1e-8)


def test_tail_divergence_flagged():
    res = integrate_to_infinity(lambda s: 1.0 / s, 1.0, tol=1e-10)
    assert res.diverged and not res.converged


def test_orientation():
    a = integrate(lambda w: w, 0.0, 1.0, tol=1e-12).value
    b = integrate(lambda w: w, 1.0, 0.0, tol=1e-12).value
    assert b == pytest.approx(-a)


def test_nonfinite_integrand_raises():
    with pytest.raises(IntegrandError):
        integrate(lambda w: np.full_like(np.asarray(w, dtype=float), np.nan),
                  0.0, 1.0)


def test_error_estimate_bounds_true_error():
    res = integrate(lambda w: np.sin(w), 0.0, math.pi, tol=1e-10)
    assert abs(res.value - 2.0) <= max(res.abs_error_estimate * 10, 1e-12)


def test_scalar_only_integrand_falls_back():
    def g(w):
        if isinstance(w, np.ndarray):
            raise TypeError("scalar only")
        return w * w
    res = integrate(g, 0.0, 1.0, tol=1e-12)
    assert res.value == pytest.approx(1.0 / 3.0, rel=1e-10)


@given(st.floats(min_value=0.1, max_value=2.0),
       st.floats(min_value=2.1, max_value=5.0),
       st.floats(min_value=2.1, max_value=5.0))
@settings(max_examples=40, deadline=None)
def test_interval_additivity(a, mid, c):
    b = max(mid, c)
    m = min(mid, c)
    g = lambda w: np.exp(-w) * w  # noqa: E731
    whole = integrate(g, a, b, tol=1e-12).value
    parts = integrate(g, a, m, tol=1e-12).value + integrate(g, m, b, tol=1e-12).value
    assert whole == pytest.approx(parts, abs=1e-10)


@given(st.floats(min_value=0.05, max_value=0.95))
@settings(max_examples=30, deadline=None)
def test_power_singularity_family(p):
    # int_0^1 w^-p dw = 1/(1-p) for p < 1
    res = integrate_singular_left(lambda w: w**-p, 1.0, tol=1e-12)
    assert res.converged
    assert res.value == pytest.approx(1.0 / (1.0 - p), rel=1e-8)
