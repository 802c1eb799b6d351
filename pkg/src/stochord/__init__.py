"""Stochastic ordering of fading channels: orders, metrics, systems and sweeps."""

from __future__ import annotations

from . import channels, metrics, montecarlo, noise, orders, specfun, systems
from .channels import (
    LognormalShadow,
    Nakagami,
    ParetoSinr,
    PointMass,
    Product,
    Rayleigh,
    Rician,
    Scaled,
)
from .metrics import AQsqrtB, Capacity, Dpsk, Mpsk, Mqam, bpsk
from .orders import Verdict, check_convex, check_lt, check_usual
from .systems import Topology

__version__ = "0.1.0"

__all__ = [
    "channels",
    "metrics",
    "montecarlo",
    "noise",
    "orders",
    "specfun",
    "systems",
    "Rayleigh",
    "Rician",
    "Nakagami",
    "ParetoSinr",
    "LognormalShadow",
    "Product",
    "Scaled",
    "PointMass",
    "Dpsk",
    "AQsqrtB",
    "Mpsk",
    "Mqam",
    "Capacity",
    "bpsk",
    "Verdict",
    "check_usual",
    "check_convex",
    "check_lt",
    "Topology",
]
