from __future__ import annotations

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import special

from stochord.specfun import (
    QuadratureError,
    bessel_i0,
    bessel_i0e,
    integrate_adaptive,
    q_function,
    q_function_pow,
)


def i0_series_oracle(x: float) -> float:
    # plain power series with fsum, independent of the library code path
    terms = []
    t = 1.0
    k = 0
    while True:
        terms.append(t)
        k += 1
        t *= (x / 2.0) ** 2 / (k * k)
        if t < 1e-18 * sum(terms):
            break
    return math.fsum(terms)


class TestQFunction:
    def test_half_at_zero(self):
        assert q_function(0.0) == 0.5

    def test_far_tail_vanishes(self):
        assert q_function(40.0) < 1e-300

    def test_known_value(self):
        assert q_function(1.0) == pytest.approx(0.5 * math.erfc(1 / math.sqrt(2)), rel=1e-15)
        assert q_function(1.0) == pytest.approx(0.15865525393145707, rel=1e-14)

    def test_array_matches_scipy(self):
        x = np.linspace(-8, 8, 101)
        np.testing.assert_allclose(q_function(x), special.ndtr(-x), rtol=1e-13, atol=1e-300)

    @given(st.floats(-30, 30))
    def test_reflection(self, x):
        assert q_function(x) + q_function(-x) == pytest.approx(1.0, abs=1e-12)

    def test_strictly_decreasing(self):
        v = q_function(np.linspace(-5, 5, 200))
        assert np.all(np.diff(v) < 0)


class TestQFunctionPow:
    def test_zero_argument(self):
        assert q_function_pow(0.0, 1) == pytest.approx(0.5, abs=1e-12)
        assert q_function_pow(0.0, 2) == pytest.approx(0.25, abs=1e-12)

    def test_matches_q(self):
        assert q_function_pow(4.0, 1) == pytest.approx(q_function(2.0), rel=1e-9)
        assert q_function_pow(4.0, 1) == pytest.approx(0.02275013194817921, rel=1e-9)

    @pytest.mark.parametrize("x", np.geomspace(1e-3, 50, 12))
    def test_square_consistency(self, x):
        assert q_function_pow(x, 1) ** 2 == pytest.approx(q_function_pow(x, 2), rel=1e-7)

    def test_rejects_negative(self):
        with pytest.raises(ValueError):
            q_function_pow(-1.0, 1)

    def test_rejects_other_powers(self):
        with pytest.raises(ValueError):
            q_function_pow(1.0, 3)


class TestBessel:
    def test_values(self):
        assert bessel_i0(0.0) == 1.0
        assert bessel_i0(1.0) == pytest.approx(i0_series_oracle(1.0), rel=1e-14)
        assert bessel_i0(1.0) == pytest.approx(1.2660658777520082, rel=1e-14)
        assert bessel_i0(10.0) == pytest.approx(2815.716628466254, rel=1e-13)

    @pytest.mark.parametrize("x", [0.5, 3.0, 14.9, 15.1, 20.0, 35.0])
    def test_power_series_oracle(self, x):
        assert bessel_i0(x) == pytest.approx(i0_series_oracle(x), rel=1e-12)

    def test_relative_accuracy_range(self):
        x = np.linspace(0, 700, 3001)
        np.testing.assert_allclose(bessel_i0(x), special.i0(x), rtol=1e-12)
        np.testing.assert_allclose(bessel_i0e(x), special.i0e(x), rtol=1e-12)

    def test_asymptotic_lower_bound(self):
        x = np.linspace(5, 700, 200)
        bound = np.exp(x) / np.sqrt(2 * np.pi * x) * (1 - 1 / (8 * x))
        assert np.all(bessel_i0(x) >= bound * 0.99)

    def test_monotone(self):
        v = bessel_i0(np.linspace(0, 50, 500))
        assert np.all(np.diff(v) > 0) and v[0] == 1.0

    def test_overflow(self):
        with pytest.raises(OverflowError):
            bessel_i0(800.0)


class TestIntegrate:
    def test_exponential_mass(self):
        r = integrate_adaptive(lambda x: np.exp(-x), 0.0, math.inf)
        assert r.value == pytest.approx(1.0, abs=1e-10)
        assert r.error_estimate >= 0 and r.evaluations >= 1

    def test_constant(self):
        assert integrate_adaptive(lambda x: np.ones_like(x), 0.0, 1.0).value == pytest.approx(1.0, abs=1e-14)

    def test_craig_form(self):
        r = integrate_adaptive(lambda t: np.exp(-1.0 / np.sin(t) ** 2), 0.0, math.pi / 2)
        assert r.value / math.pi == pytest.approx(q_function_pow(2.0, 1), rel=1e-9)
        assert r.value / math.pi == pytest.approx(q_function(math.sqrt(2.0)), rel=1e-9)

    def test_endpoint_singularity(self):
        r = integrate_adaptive(lambda x: 1 / np.sqrt(x), 0.0, 1.0, max_intervals=20000)
        assert r.value == pytest.approx(2.0, rel=1e-7)

    def test_breakpoint_kink(self):
        r = integrate_adaptive(lambda x: np.abs(x - 0.3), 0.0, 1.0, breakpoints=(0.3,))
        assert r.value == pytest.approx(0.5 * (0.3 ** 2 + 0.7 ** 2), abs=1e-13)

    def test_linearity(self):
        f = lambda x: np.exp(-x) * np.cos(x)
        g = lambda x: 1 / (1 + x * x) ** 2
        a, b = 2.5, -0.75
        lhs = integrate_adaptive(lambda x: a * f(x) + b * g(x), 0.0, math.inf).value
        rhs = a * integrate_adaptive(f, 0.0, math.inf).value + b * integrate_adaptive(g, 0.0, math.inf).value
        assert lhs == pytest.approx(rhs, abs=1e-9)

    def test_reversed_limits(self):
        assert integrate_adaptive(lambda x: x, 1.0, 0.0).value == pytest.approx(-0.5, abs=1e-14)

    def test_budget_failure_carries_estimate(self):
        with pytest.raises(QuadratureError) as info:
            integrate_adaptive(lambda x: np.sin(1 / x) / x, 1e-6, 1.0, max_intervals=20)
        assert info.value.result.evaluations > 0

    def test_nonfinite_integrand(self):
        with pytest.raises(FloatingPointError):
            integrate_adaptive(lambda x: np.full_like(x, np.nan), 0.0, 1.0)

    @settings(max_examples=30, deadline=None)
    @given(st.floats(0.1, 20.0))
    def test_gaussian_moment(self, s):
        r = integrate_adaptive(lambda x: np.exp(-x * x / (2 * s * s)), 0.0, math.inf)
        assert r.value == pytest.approx(s * math.sqrt(math.pi / 2), rel=1e-8)
