"""Instantaneous and fading-averaged performance metrics.

Error-rate metrics are completely monotone (c.m.) in the instantaneous SNR
``s``; capacity has a completely monotone derivative (c.m.d.). The averaging
routines integrate against the channel density or fall back to Monte Carlo.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
from scipy import optimize, special

from . import channels as ch
from .channels import ChannelModel
from .specfun import integrate_adaptive, q_function

__all__ = [
    "Dpsk",
    "AQsqrtB",
    "Mpsk",
    "Mqam",
    "Capacity",
    "MetricFunction",
    "Estimate",
    "CmReport",
    "instant",
    "bernstein_density",
    "bernstein_support",
    "bernstein_reconstruct",
    "mpsk_ser_quadrature",
    "oa_capacity_density",
    "certify_cm",
    "average_metric",
    "ergodic_capacity",
    "ci_capacity",
    "oa_threshold",
    "oa_capacity",
    "monotonicity_class",
    "bpsk",
]


@dataclass(frozen=True)
class Dpsk:
    """Instantaneous DPSK bit error rate 0.5 * exp(-s)."""


@dataclass(frozen=True)
class AQsqrtB:
    a: float
    b: float

    def __post_init__(self):
        if not (self.a > 0 and self.b > 0):
            raise ValueError("a Q(sqrt(b s)) needs a > 0 and b > 0")


@dataclass(frozen=True)
class Mpsk:
    m: int

    def __post_init__(self):
        if int(self.m) != self.m or self.m < 2:
            raise ValueError(f"M-PSK needs integer M >= 2, got {self.m}")

    @property
    def g(self) -> float:
        return math.sin(math.pi / self.m) ** 2


@dataclass(frozen=True)
class Mqam:
    m: int

    def __post_init__(self):
        r = math.isqrt(int(self.m))
        if int(self.m) != self.m or self.m < 4 or r * r != self.m:
            raise ValueError(f"square M-QAM needs a perfect square M >= 4, got {self.m}")

    @property
    def g(self) -> float:
        return 3.0 / (self.m - 1)

    @property
    def a(self) -> float:
        r = math.sqrt(self.m)
        return 4.0 * (r - 1.0) / r

    @property
    def b(self) -> float:
        return self.a ** 2 / 4.0


@dataclass(frozen=True)
class Capacity:
    """Instantaneous capacity log(1 + s) in nats."""


MetricFunction = Dpsk | AQsqrtB | Mpsk | Mqam | Capacity


def bpsk() -> AQsqrtB:
    return AQsqrtB(1.0, 2.0)


def monotonicity_class(metric: MetricFunction) -> str:
    return "cmd" if isinstance(metric, Capacity) else "cm"


@dataclass(frozen=True)
class Estimate:
    value: float
    stderr: float = 0.0
    n_samples: int = 0


# ---------------------------------------------------------------------------
# instantaneous metrics

def _mpsk_ser(m: int, s: np.ndarray) -> np.ndarray:
    # the angular integral splits at pi/2 into Q(h) and Owen's T(h, cot(pi/M)), h = sqrt(2 g s)
    h = np.sqrt(2.0 * math.sin(math.pi / m) ** 2 * s)
    return q_function(h) + 2.0 * special.owens_t(h, 1.0 / math.tan(math.pi / m))


def instant(metric: MetricFunction, s):
    """Instantaneous metric at SNR ``s = rho * x`` (scalar or array)."""
    scalar = np.ndim(s) == 0
    s = np.asarray(s, dtype=float)
    if np.any(s < 0):
        raise ValueError("instantaneous SNR must be nonnegative")
    if isinstance(metric, Dpsk):
        out = 0.5 * np.exp(-s)
    elif isinstance(metric, AQsqrtB):
        out = metric.a * q_function(np.sqrt(metric.b * np.atleast_1d(s))).reshape(s.shape)
    elif isinstance(metric, Mpsk):
        if metric.m == 2:
            out = q_function(np.sqrt(2.0 * np.atleast_1d(s))).reshape(s.shape)
        elif metric.m == 4:
            q = q_function(np.sqrt(np.atleast_1d(s))).reshape(s.shape)
            out = 2.0 * q - q * q
        else:
            out = _mpsk_ser(metric.m, s)
    elif isinstance(metric, Mqam):
        q = q_function(np.sqrt(metric.g * np.atleast_1d(s))).reshape(s.shape)
        out = metric.a * q - metric.b * q * q
    elif isinstance(metric, Capacity):
        out = np.log1p(s)
    else:
        raise TypeError(f"not a metric: {metric!r}")
    return float(out) if scalar else out


def mpsk_ser_quadrature(m: int, s: float) -> float:
    """M-PSK SER at one SNR by adaptive quadrature of the angular integral."""
    g = math.sin(math.pi / m) ** 2
    upper = (m - 1) * math.pi / m
    res = integrate_adaptive(
        lambda t: np.exp(-s * g / np.sin(t) ** 2), 0.0, upper, abs_tol=1e-15, rel_tol=1e-12
    )
    return res.value / math.pi


# ---------------------------------------------------------------------------
# Bernstein mixing densities


def bernstein_support(metric: MetricFunction) -> list[float]:
    """Breakpoints of the mixing density: [start, kink, ...]; density is 0 below start."""
    if isinstance(metric, Mpsk):
        g = metric.g
        return [g, 1.0] if metric.m > 2 else [g]
    if isinstance(metric, Mqam):
        g = metric.g
        return [0.5 * g, g]
    raise TypeError(f"no Bernstein density implemented for {metric!r}")


def bernstein_density(metric: MetricFunction, u):
    """Nonnegative mu(u) with instant(metric, s) = int_0^inf exp(-s u) mu(u) du.

    For M-PSK the angular range splits at pi/2: both halves map onto
    u >= g with the second half folding back over g <= u <= 1, hence the
    doubled weight on that stretch. For M-QAM the Q and Q**2 terms map onto
    u >= g/2 and u >= g respectively.
    """
    scalar = np.ndim(u) == 0
    u = np.asarray(u, dtype=float)
    with np.errstate(divide="ignore", invalid="ignore"):
        if isinstance(metric, Mpsk):
            g = metric.g
            base = math.sqrt(g) / (2.0 * math.pi) / (u * np.sqrt(u - g))
            weight = (u > g).astype(float)
            if metric.m > 2:
                weight = weight + ((u > g) & (u <= 1.0))
            out = np.where(weight > 0, weight * base, 0.0)
        elif isinstance(metric, Mqam):
            g, a, b = metric.g, metric.a, metric.b
            base = math.sqrt(g) / (2.0 * math.pi) / (u * np.sqrt(2.0 * u - g))
            weight = a * ((u > 0.5 * g) & (u <= g)) + (a - b) * (u > g)
            out = np.where(weight > 0, weight * base, 0.0)
        else:
            raise TypeError(f"no Bernstein density implemented for {metric!r}")
    return float(out) if scalar else out


def bernstein_reconstruct(metric: MetricFunction, s: float) -> float:
    """int exp(-s u) mu(u) du by adaptive quadrature, piece by piece."""
    edges = bernstein_support(metric) + [math.inf]
    total = 0.0
    for lo, hi in zip(edges[:-1], edges[1:]):
        res = integrate_adaptive(
            lambda u: np.exp(-s * u) * bernstein_density(metric, u), lo, hi,
            abs_tol=1e-12, rel_tol=1e-10, max_intervals=20000,
        )
        total += res.value
    return total


# ---------------------------------------------------------------------------
# complete monotonicity


@dataclass
class CmReport:
    passed: bool
    max_order: int
    first_failure: tuple[int, float, float] | None = None  # (order, x, signed difference)
    compact_support: bool = False
    checked: int = 0
    failures: list[tuple[int, float, float]] = field(default_factory=list)


def _binom(n: int) -> np.ndarray:
    return np.array([math.comb(n, j) for j in range(n + 1)], dtype=float)


def certify_cm(
    f: Callable,
    order_n: int,
    grid: Sequence[float],
    rel_noise: float = 1e-12,
) -> CmReport:
    """Numerically certify (-1)^k f^(k) >= 0 for k = 0..order_n on ``grid``.

    Central k-th differences with step x * 10**(-(10-k)/2) are used. A
    central difference is a B-spline average of the derivative, so for a
    c.m. ``f`` the only source of a wrong sign is rounding; anything below
    ``rel_noise`` times the magnitude of the stencil terms is treated as zero.
    A function that vanishes after being positive cannot be c.m.; that is
    reported as ``compact_support``.
    """
    if not 0 <= order_n <= 6:
        raise ValueError("order_n must be between 0 and 6 (finite-difference noise floor)")
    xs = np.asarray(sorted(grid), dtype=float)
    if np.any(xs <= 0):
        raise ValueError("grid must be positive")
    fv = np.asarray([float(f(x)) for x in xs])
    report = CmReport(passed=True, max_order=order_n)

    positive_seen = False
    for x, v in zip(xs, fv):
        if v > 0:
            positive_seen = True
        elif positive_seen and v <= 0:
            report.compact_support = True
            report.failures.append((0, float(x), float(v)))
            break
    for x, v in zip(xs, fv):
        if v < 0:
            report.failures.append((0, float(x), float(v)))

    for k in range(1, order_n + 1):
        coeffs = _binom(k) * (-1.0) ** np.arange(k + 1)
        offsets = k / 2.0 - np.arange(k + 1)
        for x in xs:
            h = x * 10.0 ** (-(10 - k) / 2.0)
            if h < np.finfo(float).tiny ** 0.25:
                raise FloatingPointError(f"finite-difference step underflows at x={x!r}")
            vals = np.array([float(f(x + o * h)) for o in offsets])
            diff = float(coeffs @ vals) / h ** k
            floor = rel_noise * float(np.abs(coeffs) @ np.abs(vals)) / h ** k
            signed = (-1.0) ** k * diff
            report.checked += 1
            if signed < -floor:
                report.failures.append((k, float(x), signed))
    if report.failures:
        report.passed = False
        report.first_failure = min(report.failures, key=lambda t: (t[0], t[1]))
    return report


# ---------------------------------------------------------------------------
# averages over fading


def average_metric(
    model: ChannelModel,
    metric: MetricFunction,
    rho: float,
    method: str = "quadrature",
    n: int = 1_000_000,
    seed: int = 0,
) -> Estimate:
    """E_X[instant(metric, rho X)] by density quadrature or Monte Carlo."""
    if rho < 0:
        raise ValueError("rho must be nonnegative")
    if method == "monte_carlo":
        rng = np.random.Generator(np.random.Philox(seed))
        vals = instant(metric, rho * ch.sample(model, rng, n))
        return Estimate(float(vals.mean()), float(vals.std(ddof=1) / math.sqrt(n)), n)
    if method != "quadrature":
        raise ValueError(f"unknown method {method!r}")
    if rho == 0:
        return Estimate(float(instant(metric, 0.0)))
    try:
        ch.pdf(model, 1.0)
    except ch.DensityUnavailable as exc:
        raise ch.DensityUnavailable(f"{exc}; use method='monte_carlo'") from None
    res = integrate_adaptive(
        lambda x: instant(metric, rho * x) * ch.pdf(model, x),
        0.0, math.inf, abs_tol=1e-13, rel_tol=1e-10, max_intervals=20000,
        breakpoints=ch.breakpoints(model) + ch.scale_breakpoints(rho),
    )
    return Estimate(res.value)


def ergodic_capacity(model: ChannelModel, rho: float) -> float:
    """E[log(1 + rho X)] via the survival-function form int rho/(1+rho z) Pr(X>z) dz.

    For the Pareto SINR family this is exactly the single integral
    rho / ((1 + rho z)(1 + z**beta)).
    """
    if rho < 0:
        raise ValueError("rho must be nonnegative")
    if rho == 0:
        return 0.0
    res = integrate_adaptive(
        lambda z: rho / (1.0 + rho * z) * ch.sf(model, z),
        0.0, math.inf, abs_tol=1e-12, rel_tol=1e-10,
        breakpoints=ch.breakpoints(model), max_intervals=20000,
    )
    return res.value


def ci_capacity(model: ChannelModel, rho: float) -> float:
    """Channel-inversion (delay-limited) capacity; 0 when E[1/X] diverges."""
    if rho < 0:
        raise ValueError("rho must be nonnegative")
    inv = ch.inverse_mean(model)
    if inv is ch.DIVERGES:
        return 0.0
    return math.log1p(rho / inv)


def _tail_integral(model: ChannelModel, weight: Callable, z: float) -> float:
    # int_z^inf weight(x) Pr(X > x) dx
    res = integrate_adaptive(
        lambda x: weight(x) * ch.sf(model, x), z, math.inf,
        abs_tol=1e-14, rel_tol=1e-12,
        breakpoints=[p for p in ch.breakpoints(model) if p > z], max_intervals=20000,
    )
    return res.value


def _power_used(model: ChannelModel, z: float) -> float:
    # int_z^inf (1/z - 1/x) dF(x), integrated by parts
    return _tail_integral(model, lambda x: 1.0 / (x * x), z)


def oa_threshold(model: ChannelModel, rho: float) -> float:
    """Water-filling cutoff z_t solving int_{z_t}^inf (1/z_t - 1/z) dF(z) = rho.

    The left side is strictly decreasing in z_t, so the root is bracketed
    on a log scale and refined by Brent's method.
    """
    if not rho > 0:
        raise ValueError("rho must be positive")
    h = lambda logz: _power_used(model, math.exp(logz)) - rho
    lo, hi = -1.0, 1.0
    for _ in range(200):
        if h(lo) > 0:
            break
        lo -= 2.0
    else:
        raise ArithmeticError("could not bracket water-filling threshold from below")
    for _ in range(200):
        if h(hi) < 0:
            break
        hi += 2.0
    else:
        raise ArithmeticError("could not bracket water-filling threshold from above")
    root = optimize.brentq(h, lo, hi, xtol=1e-15, rtol=4 * np.finfo(float).eps, maxiter=500)
    zt = math.exp(root)
    if abs(_power_used(model, zt) - rho) > 1e-8 * rho:
        raise ArithmeticError(f"water-filling residual too large at rho={rho}")
    return zt


def oa_capacity(model: ChannelModel, rho: float) -> float:
    """Optimal power and rate adaptation capacity int_{z_t}^inf log(z/z_t) dF(z).

    Integrated by parts to int_{z_t}^inf Pr(X > z) / z dz, which is
    nonnegative and needs no density.
    """
    zt = oa_threshold(model, rho)
    return _tail_integral(model, lambda x: 1.0 / x, zt)


def oa_capacity_density(model: ChannelModel, rho: float) -> float:
    """Same capacity straight from the density: int log(z/z_t) f(z) dz."""
    zt = oa_threshold(model, rho)
    res = integrate_adaptive(
        lambda z: np.log(z / zt) * ch.pdf(model, z), zt, math.inf, abs_tol=1e-13, rel_tol=1e-10
    )
    return res.value

