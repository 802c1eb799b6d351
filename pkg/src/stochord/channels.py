"""Instantaneous-SNR ("effective channel") distributions.

Every single-channel family except :class:`ParetoSinr` is normalised to unit
mean, so comparisons between parameters never mix in an average-SNR gain.
Functions here accept scalars or numpy arrays for ``x`` / ``rho``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Union

import numpy as np
from scipy import special, stats

from .specfun import bessel_i0e, integrate_adaptive

__all__ = [
    "ChannelModel",
    "Rayleigh",
    "Rician",
    "Nakagami",
    "ParetoSinr",
    "LognormalShadow",
    "Product",
    "Scaled",
    "PointMass",
    "LaplaceEval",
    "DensityUnavailable",
    "DIVERGES",
    "pdf",
    "cdf",
    "sf",
    "laplace",
    "mean",
    "inverse_mean",
    "sample",
    "describe",
    "breakpoints",
    "scale_breakpoints",
]


class DensityUnavailable(ValueError):
    """The model has no closed-form density (sampling and LT still work)."""


class _Diverges:
    """Sentinel for a moment that is infinite."""

    _instance = None

    def __new__(cls):
        if cls._instance is None:
            cls._instance = super().__new__(cls)
        return cls._instance

    def __repr__(self) -> str:
        return "DIVERGES"

    def __bool__(self) -> bool:
        return False


DIVERGES = _Diverges()


@dataclass(frozen=True)
class Rayleigh:
    pass


@dataclass(frozen=True)
class Rician:
    k: float

    def __post_init__(self):
        if not (self.k >= 0 and math.isfinite(self.k)):
            raise ValueError(f"Rician K must satisfy K >= 0, got {self.k}")


@dataclass(frozen=True)
class Nakagami:
    m: float

    def __post_init__(self):
        if not (self.m >= 0.5 and math.isfinite(self.m)):
            raise ValueError(f"Nakagami m must satisfy m >= 0.5, got {self.m}")


@dataclass(frozen=True)
class ParetoSinr:
    """SINR with cdf z**beta / (1 + z**beta); deliberately not normalised."""

    beta: float

    def __post_init__(self):
        if not (self.beta > 0 and math.isfinite(self.beta)):
            raise ValueError(f"Pareto beta must satisfy beta > 0, got {self.beta}")


@dataclass(frozen=True)
class LognormalShadow:
    """Unit-mean lognormal shadowing with dB spread ``sigma_db``."""

    sigma_db: float

    def __post_init__(self):
        if not (self.sigma_db > 0 and math.isfinite(self.sigma_db)):
            raise ValueError(f"lognormal sigma_dB must satisfy sigma_dB > 0, got {self.sigma_db}")

    @property
    def sigma(self) -> float:
        return self.sigma_db * math.log(10.0) / 10.0


@dataclass(frozen=True)
class Product:
    """Product of two independent channels (multipath times shadowing)."""

    left: "ChannelModel"
    right: "ChannelModel"


@dataclass(frozen=True)
class Scaled:
    """``factor * base``; used for scale families such as a mean-2 Rayleigh."""

    base: "ChannelModel"
    factor: float

    def __post_init__(self):
        if not (self.factor > 0 and math.isfinite(self.factor)):
            raise ValueError(f"scale factor must be positive, got {self.factor}")


@dataclass(frozen=True)
class PointMass:
    """Degenerate (non-fading) channel. Test double; not exposed to configs."""

    value: float = 1.0

    def __post_init__(self):
        if not self.value > 0:
            raise ValueError("point mass must sit at a positive value")


ChannelModel = Union[Rayleigh, Rician, Nakagami, ParetoSinr, LognormalShadow, Product, Scaled, PointMass]


@dataclass(frozen=True)
class LaplaceEval:
    rho: float
    value: float
    method: str  # "analytic" | "quadrature" | "monte_carlo"


def describe(model: ChannelModel) -> str:
    """Config-syntax rendering, e.g. ``rician(k=5)``."""
    if isinstance(model, Rayleigh):
        return "rayleigh()"
    if isinstance(model, Rician):
        return f"rician(k={model.k:g})"
    if isinstance(model, Nakagami):
        return f"nakagami(m={model.m:g})"
    if isinstance(model, ParetoSinr):
        return f"pareto(beta={model.beta:g})"
    if isinstance(model, LognormalShadow):
        return f"lognormal(sigma_db={model.sigma_db:g})"
    if isinstance(model, Product):
        return f"product({describe(model.left)}, {describe(model.right)})"
    if isinstance(model, Scaled):
        return f"scaled({describe(model.base)}, c={model.factor:g})"
    if isinstance(model, PointMass):
        return f"pointmass(value={model.value:g})"
    raise TypeError(f"not a channel model: {model!r}")


def _out(arr: np.ndarray, scalar: bool):
    return float(arr) if scalar else arr


def _is_scalar(x) -> bool:
    return np.ndim(x) == 0


# ---------------------------------------------------------------------------
# density / distribution


def pdf(model: ChannelModel, x):
    """Probability density of the instantaneous SNR at ``x >= 0``."""
    scalar = _is_scalar(x)
    x = np.asarray(x, dtype=float)
    if np.any(x < 0):
        raise ValueError("pdf defined for x >= 0")
    with np.errstate(divide="ignore", over="ignore", invalid="ignore", under="ignore"):
        if isinstance(model, Rayleigh):
            out = np.exp(-x)
        elif isinstance(model, Nakagami):
            m = model.m
            # m^m x^{m-1} e^{-mx} / Gamma(m), evaluated in log space
            out = np.exp(m * math.log(m) + special.xlogy(m - 1.0, x) - m * x - special.gammaln(m))
            if m < 1:
                out = np.where(x == 0, np.inf, out)
        elif isinstance(model, Rician):
            k = model.k
            z = 2.0 * np.sqrt(k * (k + 1.0) * x)
            # (1+K) e^{-K} e^{-(K+1)x} I0(z) with I0 scaled to avoid overflow
            out = (1.0 + k) * np.exp(-k - (k + 1.0) * x + z) * bessel_i0e(z)
        elif isinstance(model, ParetoSinr):
            b = model.beta
            zb = np.power(x, b)
            out = b * np.power(x, b - 1.0) / (1.0 + zb) ** 2
            out = np.where(np.isfinite(zb), out, 0.0)
            if b < 1:
                out = np.where(x == 0, np.inf, out)
        elif isinstance(model, LognormalShadow):
            s = model.sigma
            out = stats.lognorm.pdf(x, s, scale=math.exp(-0.5 * s * s))
        elif isinstance(model, Scaled):
            c = model.factor
            out = np.asarray(pdf(model.base, x / c), dtype=float) / c
        elif isinstance(model, (Product, PointMass)):
            raise DensityUnavailable(f"{describe(model)} has no closed-form density")
        else:
            raise TypeError(f"not a channel model: {model!r}")
    return _out(np.asarray(out, dtype=float), scalar)


def cdf(model: ChannelModel, x):
    """Cumulative distribution function Pr(X <= x)."""
    scalar = _is_scalar(x)
    x = np.asarray(x, dtype=float)
    if np.any(x < 0):
        raise ValueError("cdf defined for x >= 0")
    if isinstance(model, ParetoSinr):
        with np.errstate(over="ignore", invalid="ignore"):
            zb = np.power(x, model.beta)
            out = np.where(np.isfinite(zb), zb / (1.0 + zb), 1.0)
    elif isinstance(model, Product):
        out = np.array([_product_cdf(model, float(v)) for v in np.atleast_1d(x)]).reshape(x.shape)
    elif isinstance(model, Nakagami):
        out = special.gammainc(model.m, model.m * x)
    elif isinstance(model, Rician) and model.k > 0:
        k = model.k
        out = stats.ncx2.cdf(2.0 * (k + 1.0) * x, 2, 2.0 * k)
    elif isinstance(model, (Rayleigh, Rician)):
        out = -np.expm1(-x)
    else:
        out = 1.0 - np.asarray(sf(model, x), dtype=float)
    return _out(np.asarray(out, dtype=float), scalar)


def sf(model: ChannelModel, x):
    """Survival function Pr(X > x), computed without 1 - cdf cancellation."""
    scalar = _is_scalar(x)
    x = np.asarray(x, dtype=float)
    with np.errstate(over="ignore", invalid="ignore", under="ignore"):
        if isinstance(model, Rayleigh):
            out = np.exp(-x)
        elif isinstance(model, Nakagami):
            out = special.gammaincc(model.m, model.m * x)
        elif isinstance(model, Rician):
            k = model.k
            # 2(K+1)X is noncentral chi-square with 2 dof, noncentrality 2K
            out = stats.ncx2.sf(2.0 * (k + 1.0) * x, 2, 2.0 * k) if k > 0 else np.exp(-x)
        elif isinstance(model, ParetoSinr):
            zb = np.power(x, model.beta)
            out = np.where(np.isfinite(zb), 1.0 / (1.0 + zb), 0.0)
        elif isinstance(model, LognormalShadow):
            s = model.sigma
            out = stats.lognorm.sf(x, s, scale=math.exp(-0.5 * s * s))
        elif isinstance(model, Scaled):
            out = np.asarray(sf(model.base, x / model.factor), dtype=float)
        elif isinstance(model, PointMass):
            out = np.where(x < model.value, 1.0, 0.0)
        elif isinstance(model, Product):
            out = 1.0 - np.asarray(cdf(model, x), dtype=float)
        else:
            raise TypeError(f"not a channel model: {model!r}")
    return _out(np.asarray(out, dtype=float), scalar)


def _product_cdf(model: Product, x: float) -> float:
    if x <= 0:
        return 0.0
    outer, inner = _conditioning_split(model)
    res = integrate_adaptive(
        lambda r: np.asarray(cdf(inner, x / r), dtype=float) * pdf(outer, r),
        0.0, math.inf, abs_tol=1e-11, rel_tol=1e-9,
    )
    return min(max(res.value, 0.0), 1.0)


def _conditioning_split(model: Product):
    """Pick (outer, inner): integrate over ``outer`` which must have a pdf."""
    for outer, inner in ((model.right, model.left), (model.left, model.right)):
        if _has_density(outer):
            return outer, inner
    raise DensityUnavailable("product of two density-free factors cannot be conditioned")


def scale_breakpoints(rho: float) -> list[float]:
    """Split points around x ~ 1/rho, where exp(-rho x) weighted integrands live."""
    if not rho > 0:
        return []
    return [c / rho for c in (0.01, 0.1, 1.0, 10.0, 100.0)]


def _has_density(model: ChannelModel) -> bool:
    if isinstance(model, (Product, PointMass)):
        return False
    if isinstance(model, Scaled):
        return _has_density(model.base)
    return True


def breakpoints(model: ChannelModel) -> list[float]:
    """Atoms of the distribution, useful as quadrature breakpoints."""
    if isinstance(model, PointMass):
        return [model.value]
    if isinstance(model, Scaled):
        return [model.factor * p for p in breakpoints(model.base)]
    return []


# ---------------------------------------------------------------------------
# Laplace transform and moments


def _laplace_value(model: ChannelModel, rho: float) -> tuple[float, str]:
    if rho == 0:
        return 1.0, "analytic"
    if isinstance(model, Rayleigh):
        return 1.0 / (1.0 + rho), "analytic"
    if isinstance(model, Nakagami):
        m = model.m
        return math.exp(-m * math.log1p(rho / m)), "analytic"
    if isinstance(model, Rician):
        k = model.k
        return (1.0 + k) / (1.0 + k + rho) * math.exp(-k * rho / (1.0 + k + rho)), "analytic"
    if isinstance(model, PointMass):
        return math.exp(-rho * model.value), "analytic"
    if isinstance(model, Scaled):
        v, how = _laplace_value(model.base, rho * model.factor)
        return v, how
    if isinstance(model, Product):
        outer, inner = _conditioning_split(model)
        res = integrate_adaptive(
            lambda r: np.array([_laplace_value(inner, rho * v)[0] for v in np.atleast_1d(r)]) * pdf(outer, r),
            0.0, math.inf, abs_tol=1e-12, rel_tol=1e-10,
        )
        return res.value, "quadrature"
    # Pareto / lognormal: no closed form
    res = integrate_adaptive(
        lambda z: np.exp(-rho * z) * pdf(model, z), 0.0, math.inf, abs_tol=1e-13, rel_tol=1e-10,
        breakpoints=scale_breakpoints(rho), max_intervals=20000,
    )
    return res.value, "quadrature"


def laplace(model: ChannelModel, rho: float) -> LaplaceEval:
    """E[exp(-rho X)]."""
    if rho < 0:
        raise ValueError("Laplace argument must be nonnegative")
    value, method = _laplace_value(model, float(rho))
    return LaplaceEval(float(rho), value, method)


def mean(model: ChannelModel):
    """E[X], or ``DIVERGES``."""
    if isinstance(model, (Rayleigh, Rician, Nakagami, LognormalShadow)):
        return 1.0
    if isinstance(model, PointMass):
        return model.value
    if isinstance(model, Scaled):
        base = mean(model.base)
        return DIVERGES if base is DIVERGES else model.factor * base
    if isinstance(model, Product):
        a, b = mean(model.left), mean(model.right)
        return DIVERGES if DIVERGES in (a, b) else a * b
    if isinstance(model, ParetoSinr):
        if model.beta <= 1:
            return DIVERGES
        # E[X] = int_0^inf (1 - F) dz
        return integrate_adaptive(
            lambda z: sf(model, z), 0.0, math.inf, abs_tol=1e-12, rel_tol=1e-11, max_intervals=20000
        ).value
    raise TypeError(f"not a channel model: {model!r}")


def _origin_exponent(model: ChannelModel) -> float | None:
    """c such that pdf(x) ~ x**c at the origin (None: no density at 0)."""
    if isinstance(model, (Rayleigh, Rician)):
        return 0.0
    if isinstance(model, Nakagami):
        return model.m - 1.0
    if isinstance(model, ParetoSinr):
        return model.beta - 1.0
    if isinstance(model, Scaled):
        return _origin_exponent(model.base)
    return None  # lognormal decays faster than any power; point mass has no mass near 0


def inverse_mean(model: ChannelModel):
    """E[1/X] by quadrature, or ``DIVERGES`` when the density does not vanish fast enough at 0.

    Divergence is decided analytically from the origin exponent of each
    family rather than by watching a numeric integral blow up.
    """
    if isinstance(model, Product):
        a, b = inverse_mean(model.left), inverse_mean(model.right)
        return DIVERGES if DIVERGES in (a, b) else a * b
    if isinstance(model, PointMass):
        return 1.0 / model.value
    if isinstance(model, Scaled):
        base = inverse_mean(model.base)
        return DIVERGES if base is DIVERGES else base / model.factor
    c = _origin_exponent(model)
    if c is not None and c <= 0:
        return DIVERGES
    res = integrate_adaptive(
        lambda x: np.where(x > 0, pdf(model, x) / np.where(x > 0, x, 1.0), 0.0),
        0.0, math.inf, abs_tol=1e-12, rel_tol=1e-10, max_intervals=20000,
    )
    return res.value


# ---------------------------------------------------------------------------
# sampling


def _pareto_quantile(beta: float, u):
    return np.power(u / (1.0 - u), 1.0 / beta)


def sample(model: ChannelModel, rng: np.random.Generator, size=None):
    """Draw from ``model`` using the caller-owned generator ``rng``."""
    if isinstance(model, Rayleigh):
        return rng.exponential(1.0, size)
    if isinstance(model, Nakagami):
        # numpy's gamma is Marsaglia-Tsang squeeze/rejection
        return rng.gamma(model.m, 1.0 / model.m, size)
    if isinstance(model, Rician):
        k = model.k
        los = math.sqrt(k / (k + 1.0))
        s = math.sqrt(0.5 / (k + 1.0))
        re = los + s * rng.standard_normal(size)
        im = s * rng.standard_normal(size)
        return re * re + im * im
    if isinstance(model, ParetoSinr):
        return _pareto_quantile(model.beta, rng.random(size))
    if isinstance(model, LognormalShadow):
        s = model.sigma
        return np.exp(s * rng.standard_normal(size) - 0.5 * s * s)
    if isinstance(model, Product):
        return sample(model.left, rng, size) * sample(model.right, rng, size)
    if isinstance(model, Scaled):
        return model.factor * sample(model.base, rng, size)
    if isinstance(model, PointMass):
        return np.full(size, model.value) if size is not None else model.value
    raise TypeError(f"not a channel model: {model!r}")
