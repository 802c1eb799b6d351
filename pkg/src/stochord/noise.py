"""Non-Gaussian additive noise and BPSK error rates under fading.

Signal model: Z = sqrt(2 rho X) S + W with S in {-1, +1} and W of unit
variance (or unit-variance-equivalent scale), detected by sign. With
Gaussian W this gives the familiar Q(sqrt(2 s)) bit error rate.

Symmetric alpha-stable noise uses the sub-Gaussian scale for which
W = sqrt(A) G, G ~ N(0, 1) and E[exp(-t A)] = exp(-t**(alpha/2)); at
alpha = 2 this is exactly the unit-variance Gaussian.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import optimize

from . import channels as ch
from .channels import ChannelModel
from .metrics import Estimate
from .specfun import integrate_adaptive, q_function

__all__ = [
    "Gaussian",
    "SymmetricAlphaStable",
    "UniformBounded",
    "CompoundGaussian",
    "NoiseModel",
    "sample_noise",
    "sample_positive_stable",
    "stable_sf",
    "conditional_ber",
    "average_ber_fading",
    "error_indicators",
    "describe_noise",
]


@dataclass(frozen=True)
class Gaussian:
    pass


@dataclass(frozen=True)
class SymmetricAlphaStable:
    alpha: float

    def __post_init__(self):
        if not 0 < self.alpha <= 2:
            raise ValueError(f"alpha must lie in (0, 2], got {self.alpha}")

    @property
    def scale(self) -> float:
        # sqrt(A) G with LT(A) = exp(-t^{alpha/2}) has stable scale 2^{-1/2}
        return 1.0 / math.sqrt(2.0)


@dataclass(frozen=True)
class UniformBounded:
    half_width: float = math.sqrt(3.0)

    def __post_init__(self):
        if not self.half_width > 0:
            raise ValueError("half_width must be positive")


@dataclass(frozen=True)
class CompoundGaussian:
    """W = sqrt(A) G with A drawn from any positive channel-style model."""

    mixing: ChannelModel


NoiseModel = Gaussian | SymmetricAlphaStable | UniformBounded | CompoundGaussian


def describe_noise(model: NoiseModel) -> str:
    if isinstance(model, Gaussian):
        return "gaussian()"
    if isinstance(model, SymmetricAlphaStable):
        return f"sas(alpha={model.alpha:g})"
    if isinstance(model, UniformBounded):
        return f"uniform(half_width={model.half_width:g})"
    if isinstance(model, CompoundGaussian):
        return f"compound({ch.describe(model.mixing)})"
    raise TypeError(f"not a noise model: {model!r}")


# ---------------------------------------------------------------------------
# sampling


def _standard_sas(alpha: float, rng: np.random.Generator, size):
    # Chambers-Mallows-Stuck, beta = 0: characteristic function exp(-|t|^alpha)
    v = rng.uniform(-0.5 * math.pi, 0.5 * math.pi, size)
    if alpha == 1.0:
        return np.tan(v)
    e = rng.exponential(1.0, size)
    return (np.sin(alpha * v) / np.cos(v) ** (1.0 / alpha)
            * (np.cos((1.0 - alpha) * v) / e) ** ((1.0 - alpha) / alpha))


def sample_positive_stable(a: float, rng: np.random.Generator, size=None):
    """Positive stable variate with E[exp(-t A)] = exp(-t**a), 0 < a < 1 (Kanter)."""
    if not 0 < a < 1:
        raise ValueError("positive stable index must lie in (0, 1)")
    u = rng.uniform(0.0, math.pi, size)
    e = rng.exponential(1.0, size)
    kernel = (np.sin(a * u) ** (a / (1.0 - a)) * np.sin((1.0 - a) * u)
              / np.sin(u) ** (1.0 / (1.0 - a)))
    return (kernel / e) ** ((1.0 - a) / a)


def sample_noise(model: NoiseModel, rng: np.random.Generator, size=None):
    """Draw noise samples with the caller-owned generator."""
    if isinstance(model, Gaussian):
        return rng.standard_normal(size)
    if isinstance(model, SymmetricAlphaStable):
        if model.alpha == 2.0:
            return rng.standard_normal(size)
        return model.scale * _standard_sas(model.alpha, rng, size)
    if isinstance(model, UniformBounded):
        return rng.uniform(-model.half_width, model.half_width, size)
    if isinstance(model, CompoundGaussian):
        a = np.asarray(ch.sample(model.mixing, rng, size), dtype=float)
        return np.sqrt(a) * rng.standard_normal(size)
    raise TypeError(f"not a noise model: {model!r}")


# ---------------------------------------------------------------------------
# conditional error rates


def stable_sf(alpha: float, w: float) -> float:
    """Pr(W > w) for standard SaS (characteristic function exp(-|t|^alpha)), w >= 0.

    Uses the single-integral representation over theta in (0, pi/2) with
    V(theta) = (cos t / sin(alpha t))^{alpha/(alpha-1)} cos((alpha-1) t) / cos t.
    """
    if w < 0:
        raise ValueError("w must be nonnegative")
    if w == 0:
        return 0.5
    if alpha == 2.0:
        return q_function(w / math.sqrt(2.0))
    if alpha == 1.0:
        return 0.5 - math.atan(w) / math.pi
    p = alpha / (alpha - 1.0)
    log_wp = p * math.log(w)

    def log_v(t):
        with np.errstate(over="ignore", under="ignore", divide="ignore", invalid="ignore"):
            return (p * np.log(np.cos(t) / np.sin(alpha * t)) + np.log(np.cos((alpha - 1.0) * t))
                    - np.log(np.cos(t)))

    def integrand(t):
        with np.errstate(over="ignore", under="ignore", divide="ignore", invalid="ignore"):
            out = np.exp(-np.exp(log_wp + log_v(t)))
        return np.where(np.isfinite(out), out, 0.0)

    # V is monotone, so the integrand switches from 0 to 1 (or back) in a layer that
    # narrows as w grows; breakpoints where w^p V crosses fixed levels pin it down
    lo, hi = 1e-12, 0.5 * math.pi - 1e-12
    breaks = []
    for level in (-3.0, 0.0, 1.0, 2.0, 3.5):
        h = lambda t: float(log_wp + log_v(t)) - level
        try:
            if h(lo) * h(hi) < 0:
                breaks.append(optimize.brentq(h, lo, hi, xtol=1e-15))
        except (ValueError, FloatingPointError):
            pass
    val = integrate_adaptive(integrand, 0.0, 0.5 * math.pi, abs_tol=1e-16, rel_tol=1e-11,
                             breakpoints=sorted(breaks), max_intervals=20000).value / math.pi
    return val if alpha > 1 else 0.5 - val


_MIX_NODES, _MIX_WEIGHTS = np.polynomial.legendre.leggauss(400)


def _mixture_rule(mixing: ChannelModel):
    """Fixed positive nodes/weights for E_A[.] over (0, inf) via x = t/(1-t)."""
    t = 0.5 * (_MIX_NODES + 1.0)
    a = t / (1.0 - t)
    w = 0.5 * _MIX_WEIGHTS * np.asarray(ch.pdf(mixing, a), dtype=float) / (1.0 - t) ** 2
    keep = w > 0
    a, w = a[keep], w[keep]
    return a, w / w.sum()


def conditional_ber(model: NoiseModel, s):
    """BPSK bit error probability given instantaneous SNR ``s = rho x``.

    Equals Pr(W > sqrt(2 s)). For compound Gaussian noise this is
    E_A[Q(sqrt(2 s / A))], evaluated on a fixed positive quadrature rule so
    the result stays an exact mixture of c.m. functions.
    """
    scalar = np.ndim(s) == 0
    s = np.atleast_1d(np.asarray(s, dtype=float))
    if np.any(s < 0):
        raise ValueError("s must be nonnegative")
    amp = np.sqrt(2.0 * s)
    if isinstance(model, Gaussian):
        out = q_function(amp)
    elif isinstance(model, UniformBounded):
        c = model.half_width
        out = np.maximum(0.0, (c - amp) / (2.0 * c))
    elif isinstance(model, SymmetricAlphaStable):
        out = np.array([stable_sf(model.alpha, v / model.scale) for v in amp])
    elif isinstance(model, CompoundGaussian):
        nodes, weights = _mixture_rule(model.mixing)
        out = q_function(amp[:, None] / np.sqrt(nodes)[None, :]) @ weights
    else:
        raise TypeError(f"not a noise model: {model!r}")
    return float(out[0]) if scalar else out


def error_indicators(model: NoiseModel, links: np.ndarray, rho: float, rng: np.random.Generator) -> np.ndarray:
    """0/1 detection errors for transmitted S = +1 over drawn channel SNRs."""
    w = sample_noise(model, rng, links.shape)
    return (np.sqrt(2.0 * rho * links) + w < 0.0).astype(float)


def average_ber_fading(
    model: NoiseModel,
    channel: ChannelModel,
    rho: float,
    n: int = 1_000_000,
    seed: int = 0,
) -> Estimate:
    """Monte Carlo BPSK error rate over fading and noise; deterministic given ``seed``."""
    if rho < 0:
        raise ValueError("rho must be nonnegative")
    rng = np.random.Generator(np.random.Philox(seed))
    x = np.asarray(ch.sample(channel, rng, n), dtype=float)
    errs = error_indicators(model, x, rho, rng)
    p = float(errs.mean())
    return Estimate(p, math.sqrt(max(p * (1.0 - p), 0.0) / (n - 1)) if n > 1 else 0.0, n)
