"""Verifiers for the usual (st), convex (cx) and Laplace-transform (Lt) orders.

Each check evaluates both models on a grid and reports a tri-state verdict
with the smallest slack seen. Convex checks rely on sign-change conditions
that are sufficient only, so a pattern mismatch yields ``INCONCLUSIVE``.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from . import channels as ch
from .channels import ChannelModel

__all__ = [
    "Verdict",
    "Counterexample",
    "OrderVerdict",
    "SignPattern",
    "AuditReport",
    "default_x_grid",
    "default_rho_grid",
    "check_usual",
    "sign_changes",
    "check_convex",
    "check_lt",
    "implication_audit",
]

HOLD_TOL = 1e-9
MEAN_TOL = 1e-4
ZERO_REL = 1e-12


class Verdict(enum.Enum):
    HOLDS = "holds"
    FAILS = "fails"
    INCONCLUSIVE = "inconclusive"


@dataclass(frozen=True)
class Counterexample:
    point: float | None
    lhs: float
    rhs: float


@dataclass(frozen=True)
class OrderVerdict:
    order: str  # "usual" | "convex" | "laplace"
    holds: Verdict
    margin: float
    counterexample: Counterexample | None = None
    note: str = ""

    def __post_init__(self):
        if self.holds is Verdict.FAILS and self.counterexample is None:
            raise ValueError("a failing verdict needs a counterexample")


@dataclass(frozen=True)
class SignPattern:
    changes: int
    sequence: tuple[str, ...]


def default_x_grid() -> np.ndarray:
    return np.geomspace(1e-4, 1e3, 200)


def default_rho_grid() -> np.ndarray:
    return np.geomspace(1e-3, 1e3, 100)


def _grid(grid, default):
    g = default() if grid is None else np.asarray(grid, dtype=float)
    if g.size == 0:
        raise ValueError("grid must be nonempty")
    return g


def check_usual(X: ChannelModel, Y: ChannelModel, grid: Sequence[float] | None = None,
                tol: float = HOLD_TOL) -> OrderVerdict:
    """X <=st Y iff F_X(x) >= F_Y(x) at every grid point (within ``tol``)."""
    xs = _grid(grid, default_x_grid)
    fx = np.asarray(ch.cdf(X, xs), dtype=float)
    fy = np.asarray(ch.cdf(Y, xs), dtype=float)
    slack = fx - fy
    i = int(np.argmin(slack))
    margin = float(slack[i])
    if margin >= -tol:
        return OrderVerdict("usual", Verdict.HOLDS, margin)
    return OrderVerdict("usual", Verdict.FAILS, margin, Counterexample(float(xs[i]), float(fx[i]), float(fy[i])))


def sign_changes(f: Callable | Sequence[float], grid: Sequence[float], zero_rel: float = ZERO_REL) -> SignPattern:
    """Count strict sign alternations of ``f`` along an ascending grid.

    ``f`` may be a callable or precomputed values. Values below
    ``zero_rel * max|f|`` are treated as zero and skipped.
    """
    xs = np.asarray(grid, dtype=float)
    if xs.size < 3:
        raise ValueError("sign_changes needs at least 3 grid points")
    if np.any(np.diff(xs) <= 0):
        raise ValueError("grid must be strictly ascending")
    vals = np.asarray(f(xs) if callable(f) else f, dtype=float)
    scale = float(np.max(np.abs(vals))) if vals.size else 0.0
    if scale == 0.0:
        return SignPattern(0, ())
    seq: list[str] = []
    for v in vals[np.abs(vals) > zero_rel * scale]:
        s = "+" if v > 0 else "-"
        if not seq or seq[-1] != s:
            seq.append(s)
    return SignPattern(max(len(seq) - 1, 0), tuple(seq))


def check_convex(X: ChannelModel, Y: ChannelModel, grid: Sequence[float] | None = None,
                 mean_tol: float = MEAN_TOL) -> OrderVerdict:
    """Sufficient-condition test of X <=cx Y.

    Requires equal means, then either S(f_Y - f_X) = 2 with pattern
    (+, -, +) or S(F_Y - F_X) = 1 with pattern (+, -).
    """
    xs = _grid(grid, default_x_grid)
    mx, my = ch.mean(X), ch.mean(Y)
    if ch.DIVERGES in (mx, my):
        return OrderVerdict("convex", Verdict.INCONCLUSIVE, math.nan, note="infinite mean")
    gap = abs(mx - my)
    if gap > mean_tol:
        return OrderVerdict("convex", Verdict.FAILS, -gap, Counterexample(None, mx, my),
                            note="means differ (g(x) = +-x are convex)")
    notes = []
    try:
        dens = np.asarray(ch.pdf(Y, xs), dtype=float) - np.asarray(ch.pdf(X, xs), dtype=float)
        pat = sign_changes(dens, xs)
        notes.append(f"pdf pattern {''.join(pat.sequence) or '0'}")
        if pat.changes == 2 and pat.sequence == ("+", "-", "+"):
            return OrderVerdict("convex", Verdict.HOLDS, -gap, note="; ".join(notes))
    except ch.DensityUnavailable:
        notes.append("no density; cdf condition only")
    dist = np.asarray(ch.cdf(Y, xs), dtype=float) - np.asarray(ch.cdf(X, xs), dtype=float)
    pat = sign_changes(dist, xs)
    notes.append(f"cdf pattern {''.join(pat.sequence) or '0'}")
    if pat.changes == 1 and pat.sequence == ("+", "-"):
        return OrderVerdict("convex", Verdict.HOLDS, -gap, note="; ".join(notes))
    return OrderVerdict("convex", Verdict.INCONCLUSIVE, -gap, note="; ".join(notes))


def check_lt(X: ChannelModel, Y: ChannelModel, rho_grid: Sequence[float] | None = None,
             tol: float = HOLD_TOL) -> OrderVerdict:
    """X <=Lt Y iff E[exp(-rho Y)] <= E[exp(-rho X)] at every grid rho."""
    rhos = _grid(rho_grid, default_rho_grid)
    lx = np.array([ch.laplace(X, r).value for r in rhos])
    ly = np.array([ch.laplace(Y, r).value for r in rhos])
    slack = lx - ly
    i = int(np.argmin(slack))
    margin = float(slack[i])
    if margin >= -tol:
        return OrderVerdict("laplace", Verdict.HOLDS, margin)
    return OrderVerdict("laplace", Verdict.FAILS, margin, Counterexample(float(rhos[i]), float(ly[i]), float(lx[i])))


@dataclass
class AuditReport:
    verdicts: dict[str, OrderVerdict]
    violations: list[str] = field(default_factory=list)

    @property
    def consistent(self) -> bool:
        return not self.violations


def implication_audit(X: ChannelModel, Y: ChannelModel, x_grid=None, rho_grid=None) -> AuditReport:
    """Run st, cx and Lt checks both ways and flag broken implications.

    st => Lt and cx => reversed Lt are theorems, so any flagged violation
    points at a numerical problem, not at a genuine counterexample.
    """
    v = {
        "st(X,Y)": check_usual(X, Y, x_grid),
        "st(Y,X)": check_usual(Y, X, x_grid),
        "cx(X,Y)": check_convex(X, Y, x_grid),
        "cx(Y,X)": check_convex(Y, X, x_grid),
        "lt(X,Y)": check_lt(X, Y, rho_grid),
        "lt(Y,X)": check_lt(Y, X, rho_grid),
    }
    report = AuditReport(v)
    rules = [
        ("st(X,Y)", "lt(X,Y)", "X <=st Y but not X <=Lt Y"),
        ("st(Y,X)", "lt(Y,X)", "Y <=st X but not Y <=Lt X"),
        ("cx(X,Y)", "lt(Y,X)", "X <=cx Y but not Y <=Lt X"),
        ("cx(Y,X)", "lt(X,Y)", "Y <=cx X but not X <=Lt Y"),
    ]
    for premise, conclusion, msg in rules:
        if v[premise].holds is Verdict.HOLDS and v[conclusion].holds is not Verdict.HOLDS:
            report.violations.append(msg)
    return report
