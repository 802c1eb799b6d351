"""Multi-branch and multi-hop systems built from independent channels.

SNR-combining topologies (MRC, EGC, SC, multi-hop AF and the multi-branch
multi-hop AF relay network) map per-link SNRs to one end-to-end SNR.
Decode-and-forward and post-detection combining compose per-link error
probabilities instead.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from . import channels as ch
from .channels import ChannelModel
from .metrics import Estimate, MetricFunction, instant

__all__ = [
    "Topology",
    "SNR_KINDS",
    "arity",
    "combined_snr",
    "df_combined_error",
    "pdc_error",
    "pdc_average_error",
    "simulate_system",
    "draw_links",
    "evaluate_samples",
]

SNR_KINDS = ("mrc", "egc", "sc", "mh_af", "mb_mh_af")
ERROR_KINDS = ("mh_df", "pdc")


@dataclass(frozen=True)
class Topology:
    """System layout plus the per-link channels bound in positional order.

    For ``mb_mh_af`` the order is the direct link (if present) followed by
    the hops of branch 1, branch 2, ...
    """

    kind: str
    m: int = 1
    branches: tuple[int, ...] = ()
    with_direct_link: bool = True
    branch_channels: tuple[ChannelModel, ...] = field(default=(), compare=True)

    def __post_init__(self):
        if self.kind not in SNR_KINDS + ERROR_KINDS:
            raise ValueError(f"unknown topology kind {self.kind!r}")
        if self.kind == "mb_mh_af":
            if not self.branches or any(int(n) < 1 for n in self.branches):
                raise ValueError("mb_mh_af needs at least one branch with >= 1 hop")
        elif self.m < 1:
            raise ValueError("topology needs M >= 1")
        if self.kind == "pdc" and self.m % 2 == 0:
            raise ValueError("post-detection combining is defined for odd M only")
        if self.branch_channels and len(self.branch_channels) != arity(self):
            raise ValueError(
                f"{self.kind} expects {arity(self)} channels, got {len(self.branch_channels)}"
            )

    def with_channels(self, channels: Sequence[ChannelModel]) -> "Topology":
        return Topology(self.kind, self.m, self.branches, self.with_direct_link, tuple(channels))

    def iid(self, channel: ChannelModel) -> "Topology":
        return self.with_channels([channel] * arity(self))


def arity(top: Topology) -> int:
    if top.kind == "mb_mh_af":
        return sum(top.branches) + (1 if top.with_direct_link else 0)
    return top.m


def _af_chain(x: np.ndarray) -> np.ndarray:
    # [prod(1 + 1/x) - 1]^{-1} along the last axis; any zero hop gives 0
    with np.errstate(divide="ignore", over="ignore"):
        t = np.sum(np.log1p(1.0 / x), axis=-1)
        return 1.0 / np.expm1(t)


def combined_snr(top: Topology, x) -> np.ndarray | float:
    """End-to-end SNR for SNR-combining topologies; last axis indexes links."""
    if top.kind in ERROR_KINDS:
        raise ValueError(f"{top.kind} combines error probabilities, not SNRs")
    arr = np.asarray(x, dtype=float)
    if arr.shape[-1] != arity(top):
        raise ValueError(f"{top.kind} expects {arity(top)} link SNRs, got {arr.shape[-1]}")
    if np.any(arr < 0):
        raise ValueError("link SNRs must be nonnegative")
    if top.kind == "mrc":
        out = arr.sum(axis=-1)
    elif top.kind == "egc":
        out = np.sqrt(arr).sum(axis=-1) ** 2 / top.m
    elif top.kind == "sc":
        out = arr.max(axis=-1)
    elif top.kind == "mh_af":
        out = _af_chain(arr)
    else:
        start = 0
        out = np.zeros(arr.shape[:-1])
        if top.with_direct_link:
            out = out + arr[..., 0]
            start = 1
        for hops in top.branches:
            out = out + _af_chain(arr[..., start:start + hops])
            start += hops
    return float(out) if np.ndim(out) == 0 else out


def df_combined_error(per_hop_error) -> np.ndarray | float:
    """End-to-end bit error of a binary decode-and-forward chain.

    Each hop flips the bit independently, so p_{1:m} = p_{1:m-1}(1 - p_m)
    + (1 - p_{1:m-1}) p_m. The last axis indexes hops.
    """
    p = np.asarray(per_hop_error, dtype=float)
    if np.any((p < 0) | (p > 0.5)):
        raise ValueError("per-hop error probabilities must lie in [0, 1/2]")
    acc = p[..., 0]
    for i in range(1, p.shape[-1]):
        q = p[..., i]
        acc = acc * (1.0 - q) + (1.0 - acc) * q
    return float(acc) if np.ndim(acc) == 0 else acc


def pdc_error(per_branch_error) -> np.ndarray | float:
    """Majority-vote error: at least (M+1)/2 of M branches in error.

    Sums over all error subsets S_k of size k >= (M+1)/2. The last axis
    indexes branches, so this works per sample as well as on averages.
    """
    p = np.asarray(per_branch_error, dtype=float)
    m = p.shape[-1]
    if m % 2 == 0:
        raise ValueError("post-detection combining is defined for odd M only")
    if np.any((p < 0) | (p > 1)):
        raise ValueError("error probabilities must lie in [0, 1]")
    total = np.zeros(p.shape[:-1])
    for k in range((m + 1) // 2, m + 1):
        for subset in itertools.combinations(range(m), k):
            inside = np.zeros(m, dtype=bool)
            inside[list(subset)] = True
            term = np.prod(np.where(inside, p, 1.0 - p), axis=-1)
            total = total + term
    return float(total) if np.ndim(total) == 0 else total


def pdc_average_error(per_branch_avg_error: Sequence[float]) -> float:
    """Average PDC error from independent per-branch average errors."""
    return float(pdc_error(np.asarray(per_branch_avg_error, dtype=float)))


def draw_links(top: Topology, rng: np.random.Generator, n: int) -> np.ndarray:
    """(n, arity) array of independent link SNR samples."""
    if len(top.branch_channels) != arity(top):
        raise ValueError("topology has no channels bound")
    return np.stack([np.asarray(ch.sample(c, rng, n), dtype=float) for c in top.branch_channels], axis=-1)


def evaluate_samples(top: Topology, metric: MetricFunction, rho: float, links: np.ndarray) -> np.ndarray:
    """Per-sample conditional metric for already-drawn link SNRs."""
    if top.kind in SNR_KINDS:
        return instant(metric, rho * combined_snr(top, links))
    per_link = instant(metric, rho * links)
    if top.kind == "mh_df":
        return df_combined_error(per_link)
    return pdc_error(per_link)


def simulate_system(
    top: Topology,
    metric: MetricFunction,
    rho: float,
    n: int,
    seed: int,
) -> Estimate:
    """Monte Carlo average of the conditional metric; deterministic given ``seed``."""
    if rho < 0:
        raise ValueError("rho must be nonnegative")
    rng = np.random.Generator(np.random.Philox(seed))
    vals = evaluate_samples(top, metric, rho, draw_links(top, rng, n))
    se = float(vals.std(ddof=1) / math.sqrt(n)) if n > 1 else 0.0
    return Estimate(float(vals.mean()), se, n)
