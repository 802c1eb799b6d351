from __future__ import annotations

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import stats

from stochord import channels as ch
from stochord.channels import (
    DIVERGES,
    LognormalShadow,
    Nakagami,
    ParetoSinr,
    PointMass,
    Product,
    Rayleigh,
    Rician,
    Scaled,
)
from stochord.specfun import integrate_adaptive

DENSITY_MODELS = [
    Rayleigh(),
    Rician(0.0),
    Rician(2.0),
    Rician(5.0),
    Rician(20.0),
    Nakagami(0.5),
    Nakagami(1.0),
    Nakagami(2.0),
    Nakagami(3.7),
    ParetoSinr(2.0),
    ParetoSinr(5.0),
    LognormalShadow(4.0),
    LognormalShadow(8.0),
    Scaled(Rayleigh(), 2.0),
]
NORMALIZED = [Rayleigh(), Rician(2.0), Rician(5.0), Nakagami(0.5), Nakagami(2.0), LognormalShadow(6.0)]


def rng(seed=0):
    return np.random.Generator(np.random.Philox(seed))


def integral(f, a=0.0, b=math.inf):
    return integrate_adaptive(f, a, b, abs_tol=1e-12, rel_tol=1e-10, max_intervals=20000).value


class TestValidation:
    @pytest.mark.parametrize("make", [lambda: Rician(-1), lambda: Nakagami(0.4), lambda: ParetoSinr(0),
                                      lambda: LognormalShadow(0), lambda: Scaled(Rayleigh(), -1),
                                      lambda: Rician(math.inf)])
    def test_rejects_out_of_range(self, make):
        with pytest.raises(ValueError):
            make()

    def test_rician_message_names_constraint(self):
        with pytest.raises(ValueError, match="K >= 0"):
            Rician(-1)

    def test_describe_round_trip_names(self):
        m = Product(Rician(2), LognormalShadow(4))
        assert ch.describe(m) == "product(rician(k=2), lognormal(sigma_db=4))"


class TestPdf:
    def test_exponential_special_cases(self):
        x = np.linspace(0, 10, 41)
        np.testing.assert_allclose(ch.pdf(Nakagami(1), x), np.exp(-x), rtol=1e-14)
        np.testing.assert_allclose(ch.pdf(Rician(0), x), np.exp(-x), rtol=1e-14)

    def test_nakagami_value(self):
        assert ch.pdf(Nakagami(2), 1.0) == pytest.approx(4 * math.exp(-2), rel=1e-14)

    def test_rician_matches_noncentral_chi2(self):
        k = 5.0
        x = np.linspace(0.01, 5, 50)
        oracle = 2 * (k + 1) * stats.ncx2.pdf(2 * (k + 1) * x, 2, 2 * k)
        np.testing.assert_allclose(ch.pdf(Rician(k), x), oracle, rtol=1e-10)

    def test_rician_large_k_stays_finite(self):
        v = ch.pdf(Rician(500.0), np.linspace(0, 3, 31))
        assert np.all(np.isfinite(v)) and np.all(v >= 0)

    @pytest.mark.parametrize("model", DENSITY_MODELS, ids=ch.describe)
    def test_normalized(self, model):
        bp = tuple(ch.breakpoints(model))
        val = integrate_adaptive(lambda x: ch.pdf(model, x), 0.0, math.inf, abs_tol=1e-12, rel_tol=1e-10,
                                 breakpoints=bp, max_intervals=20000).value
        assert val == pytest.approx(1.0, abs=1e-6)

    @pytest.mark.parametrize("model", [m for m in DENSITY_MODELS if ch.mean(m) is not DIVERGES], ids=ch.describe)
    def test_first_moment(self, model):
        val = integral(lambda x: x * ch.pdf(model, x))
        assert val == pytest.approx(ch.mean(model), abs=1e-6)

    def test_product_density_unavailable(self):
        with pytest.raises(ch.DensityUnavailable):
            ch.pdf(Product(Rician(2), LognormalShadow(4)), 1.0)

    def test_negative_argument(self):
        with pytest.raises(ValueError):
            ch.pdf(Rayleigh(), -1.0)


class TestCdf:
    def test_pareto_values(self):
        assert ch.cdf(ParetoSinr(2), 1.0) == pytest.approx(0.5, abs=1e-15)
        assert ch.cdf(ParetoSinr(5), 2.0) == pytest.approx(32 / 33, rel=1e-14)

    def test_exponential(self):
        x = np.linspace(0, 20, 50)
        np.testing.assert_allclose(ch.cdf(Nakagami(1), x), -np.expm1(-x), rtol=1e-13, atol=1e-300)

    @pytest.mark.parametrize("model", DENSITY_MODELS, ids=ch.describe)
    def test_integral_of_pdf(self, model):
        for x in np.geomspace(0.01, 20, 20):
            assert ch.cdf(model, x) == pytest.approx(integral(lambda t: ch.pdf(model, t), 0.0, x), abs=1e-6)

    @pytest.mark.parametrize("model", DENSITY_MODELS + [Product(Rician(2), LognormalShadow(4))], ids=ch.describe)
    def test_shape(self, model):
        x = np.concatenate([[0.0], np.geomspace(1e-4, 1e4, 200)])
        f = np.asarray(ch.cdf(model, x))
        assert f[0] == 0.0
        assert np.all(np.diff(f) >= -1e-12)
        assert f[-1] == pytest.approx(1.0, abs=1e-5)
        np.testing.assert_allclose(f + np.asarray(ch.sf(model, x)), 1.0, atol=1e-12)

    def test_product_cdf_against_samples(self):
        model = Product(Rician(2), LognormalShadow(4))
        xs = ch.sample(model, rng(3), 200_000)
        for x in (0.2, 0.8, 1.5, 4.0):
            emp = np.mean(xs <= x)
            assert ch.cdf(model, x) == pytest.approx(emp, abs=4 * math.sqrt(emp * (1 - emp) / xs.size) + 1e-4)

    def test_point_mass_step(self):
        m = PointMass(2.0)
        assert ch.cdf(m, 1.999) == 0.0 and ch.cdf(m, 2.0) == 1.0


class TestLaplace:
    def test_nakagami_closed_form(self):
        assert ch.laplace(Nakagami(1), 1.0).value == pytest.approx(0.5, rel=1e-15)
        for m in (0.5, 2.0, 3.7):
            for r in np.geomspace(1e-3, 1e3, 10):
                assert ch.laplace(Nakagami(m), r).value == pytest.approx((1 + r / m) ** -m, rel=1e-12)

    def test_rician_zero_is_rayleigh(self):
        for r in (0.1, 1.0, 10.0):
            assert ch.laplace(Rician(0), r).value == pytest.approx(1 / (1 + r), rel=1e-15)

    def test_rician_against_quadrature(self):
        for k in (0.5, 2.0, 5.0):
            for r in (0.1, 1.0, 10.0):
                oracle = integral(lambda x: np.exp(-r * x) * ch.pdf(Rician(k), x))
                assert ch.laplace(Rician(k), r).value == pytest.approx(oracle, rel=1e-8)

    def test_rician_against_monte_carlo(self):
        x = ch.sample(Rician(5.0), rng(11), 1_000_000)
        v = np.exp(-x)
        se = v.std(ddof=1) / math.sqrt(v.size)
        lt = ch.laplace(Rician(5.0), 1.0)
        assert lt.value <= 1.0 and lt.method == "analytic"
        assert abs(lt.value - v.mean()) < 3 * se

    @pytest.mark.parametrize("model", DENSITY_MODELS + [Product(Rician(2), LognormalShadow(4))], ids=ch.describe)
    def test_unit_at_zero_and_decreasing(self, model):
        assert ch.laplace(model, 0.0).value == 1.0
        vals = [ch.laplace(model, r).value for r in np.geomspace(1e-3, 1e3, 25)]
        assert np.all(np.diff(vals) < 0) and all(0 < v <= 1 for v in vals)

    def test_rician_decreasing_in_k(self):
        for r in np.geomspace(1e-2, 1e2, 9):
            vals = [ch.laplace(Rician(k), r).value for k in (0, 1, 2, 5, 10)]
            assert np.all(np.diff(vals) < 0)

    def test_nakagami_decreasing_in_m(self):
        for r in np.geomspace(1e-2, 1e2, 9):
            vals = [ch.laplace(Nakagami(m), r).value for m in (0.5, 1, 2, 5, 10)]
            assert np.all(np.diff(vals) < 0)

    def test_product_by_conditioning_matches_monte_carlo(self):
        model = Product(Nakagami(2), LognormalShadow(4))
        x = ch.sample(model, rng(5), 400_000)
        v = np.exp(-2.0 * x)
        assert ch.laplace(model, 2.0).value == pytest.approx(v.mean(), abs=4 * v.std() / math.sqrt(v.size))

    def test_scaled(self):
        assert ch.laplace(Scaled(Rayleigh(), 2.0), 1.5).value == pytest.approx(1 / 4, rel=1e-15)

    def test_rejects_negative(self):
        with pytest.raises(ValueError):
            ch.laplace(Rayleigh(), -1)


class TestMoments:
    @pytest.mark.parametrize("model", [Nakagami(3.7), Rician(5.0), Rayleigh(), LognormalShadow(4)], ids=ch.describe)
    def test_unit_mean(self, model):
        assert ch.mean(model) == 1.0

    def test_pareto(self):
        assert ch.mean(ParetoSinr(1.0)) is DIVERGES
        assert ch.mean(ParetoSinr(0.5)) is DIVERGES
        # E[X] = (pi/beta) / sin(pi/beta) for the log-logistic law
        for b in (2.0, 5.0):
            assert ch.mean(ParetoSinr(b)) == pytest.approx((math.pi / b) / math.sin(math.pi / b), rel=1e-9)

    def test_product_mean(self):
        assert ch.mean(Product(Scaled(Rayleigh(), 2), LognormalShadow(3))) == pytest.approx(2.0)

    def test_inverse_mean(self):
        assert ch.inverse_mean(Nakagami(2)) == pytest.approx(2.0, rel=1e-8)
        assert ch.inverse_mean(Nakagami(4)) == pytest.approx(4 / 3, rel=1e-8)
        for m in (Rician(2), Rayleigh(), Nakagami(1), Nakagami(0.7), ParetoSinr(1.0)):
            assert ch.inverse_mean(m) is DIVERGES

    def test_inverse_mean_pareto_and_lognormal(self):
        b = 3.0
        assert ch.inverse_mean(ParetoSinr(b)) == pytest.approx((math.pi / b) / math.sin(math.pi / b), rel=1e-8)
        s = LognormalShadow(5).sigma
        assert ch.inverse_mean(LognormalShadow(5)) == pytest.approx(math.exp(s * s), rel=1e-8)

    def test_diverges_is_falsy_singleton(self):
        assert not DIVERGES and ch.mean(ParetoSinr(1)) is DIVERGES


class TestSampling:
    def test_pareto_inverse_cdf(self):
        assert ch._pareto_quantile(2.0, 0.5) == 1.0

    @pytest.mark.parametrize("m", [0.5, 1.0, 2.5, 7.0])
    def test_nakagami_mean(self, m):
        assert ch.sample(Nakagami(m), rng(1), 1_000_000).mean() == pytest.approx(1.0, abs=0.005)

    @pytest.mark.parametrize("model", [Rayleigh(), Rician(2), Rician(5), Nakagami(0.5), Nakagami(3.0),
                                       ParetoSinr(2), ParetoSinr(5), LognormalShadow(4)], ids=ch.describe)
    def test_ks_band(self, model):
        x = ch.sample(model, rng(7), 1_000_000)
        res = stats.kstest(x, lambda t: ch.cdf(model, t))
        # 99% Kolmogorov band
        assert res.statistic < 1.628 / math.sqrt(x.size)

    def test_deterministic(self):
        a = ch.sample(Rician(2), rng(9), 10)
        b = ch.sample(Rician(2), rng(9), 10)
        np.testing.assert_array_equal(a, b)

    def test_nonnegative_and_scalar(self):
        g = rng(0)
        for m in DENSITY_MODELS + [PointMass(), Product(Rician(2), LognormalShadow(4))]:
            assert float(ch.sample(m, g)) >= 0
            assert np.all(ch.sample(m, g, 100) >= 0)

    @settings(max_examples=20, deadline=None)
    @given(st.floats(0.0, 30.0))
    def test_rician_empirical_mean(self, k):
        x = ch.sample(Rician(k), rng(2), 200_000)
        assert x.mean() == pytest.approx(1.0, abs=5 * x.std() / math.sqrt(x.size))
