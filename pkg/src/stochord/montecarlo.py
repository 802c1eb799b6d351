"""Seeded SNR sweeps with standard errors and crossover detection.

Every (series, grid point, block) triple gets its own Philox stream derived
from the master seed, and blocks are merged in index order, so results do
not depend on how many worker threads evaluated them.
"""

from __future__ import annotations

import csv
import hashlib
import io
import json
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

__all__ = [
    "SweepSpec",
    "SweepPoint",
    "SweepResult",
    "SweepError",
    "db_to_linear",
    "default_grid_db",
    "stream",
    "run_sweep",
    "crossover_detect",
    "write_csv",
    "read_csv",
]

BLOCK_SIZE = 1 << 16
MIN_MC_SAMPLES = 10_000


class SweepError(RuntimeError):
    """An evaluator failed; ``point`` identifies where."""

    def __init__(self, message: str, point: float | None = None):
        super().__init__(message)
        self.point = point


def db_to_linear(db):
    return 10.0 ** (np.asarray(db, dtype=float) / 10.0)


def default_grid_db(step: float = 0.5, start: float = -10.0, stop: float = 30.0) -> tuple[float, ...]:
    n = int(round((stop - start) / step))
    return tuple(float(round(start + i * step, 10)) for i in range(n + 1))


@dataclass(frozen=True)
class SweepSpec:
    rho_grid_db: tuple[float, ...]
    n_samples: int = 1_000_000
    seed: int = 0
    method: str = "monte_carlo"  # or "quadrature"

    def __post_init__(self):
        grid = tuple(float(g) for g in self.rho_grid_db)
        object.__setattr__(self, "rho_grid_db", grid)
        if not grid:
            raise ValueError("rho grid must be nonempty")
        if any(b <= a for a, b in zip(grid, grid[1:])):
            raise ValueError("rho grid must be sorted ascending")
        if self.method not in ("monte_carlo", "quadrature"):
            raise ValueError(f"unknown sweep method {self.method!r}")
        if self.method == "monte_carlo" and self.n_samples < MIN_MC_SAMPLES:
            raise ValueError(f"monte_carlo sweeps need n_samples >= {MIN_MC_SAMPLES}")
        if not 0 <= self.seed < 2 ** 64:
            raise ValueError("seed must be a 64-bit unsigned integer")

    def digest(self) -> str:
        blob = json.dumps([self.rho_grid_db, self.n_samples, self.seed, self.method])
        return hashlib.sha256(blob.encode()).hexdigest()[:16]


@dataclass(frozen=True)
class SweepPoint:
    rho_db: float
    estimate: float
    stderr: float
    n_samples: int


@dataclass
class SweepResult:
    points: list[SweepPoint]
    metadata: dict = field(default_factory=dict)

    @property
    def rho_db(self) -> np.ndarray:
        return np.array([p.rho_db for p in self.points])

    @property
    def estimates(self) -> np.ndarray:
        return np.array([p.estimate for p in self.points])

    @property
    def stderrs(self) -> np.ndarray:
        return np.array([p.stderr for p in self.points])


def stream(seed: int, series: int, point: int, block: int) -> np.random.Generator:
    """Counter-based generator keyed by (seed, series, point, block)."""
    ss = np.random.SeedSequence(seed, spawn_key=(series, point, block))
    return np.random.Generator(np.random.Philox(ss))


def _blocks(n: int) -> list[int]:
    full, rest = divmod(n, BLOCK_SIZE)
    return [BLOCK_SIZE] * full + ([rest] if rest else [])


def _block_stats(samples: np.ndarray) -> tuple[int, float, float]:
    x = np.asarray(samples, dtype=float).ravel()
    m = float(x.mean())
    return x.size, m, float(np.sum((x - m) ** 2))


def _merge(parts: Sequence[tuple[int, float, float]]) -> tuple[int, float, float]:
    # Chan et al. pairwise update, applied in block order
    n, mean, m2 = parts[0]
    for nb, mb, m2b in parts[1:]:
        tot = n + nb
        delta = mb - mean
        mean = mean + delta * nb / tot
        m2 = m2 + m2b + delta * delta * n * nb / tot
        n = tot
    return n, mean, m2


def run_sweep(
    spec: SweepSpec,
    evaluator: Callable,
    threads: int = 1,
    series: int = 0,
    metadata: dict | None = None,
) -> SweepResult:
    """Evaluate ``evaluator`` at every grid point.

    Monte Carlo: ``evaluator(rho, rng, n)`` returns ``n`` i.i.d. samples whose
    mean is the quantity of interest. Quadrature: ``evaluator(rho)`` returns
    the value itself and the reported stderr is 0.
    """
    rhos = db_to_linear(spec.rho_grid_db)
    meta = {"spec": spec.digest(), "seed": spec.seed, "method": spec.method, "series": series}
    meta.update(metadata or {})

    if spec.method == "quadrature":
        def exact(i: int) -> SweepPoint:
            try:
                v = float(evaluator(float(rhos[i])))
            except Exception as exc:
                raise SweepError(f"evaluator failed at {spec.rho_grid_db[i]} dB: {exc}", spec.rho_grid_db[i]) from exc
            return SweepPoint(spec.rho_grid_db[i], v, 0.0, 0)

        tasks = range(len(rhos))
        if threads > 1:
            with ThreadPoolExecutor(threads) as pool:
                points = list(pool.map(exact, tasks))
        else:
            points = [exact(i) for i in tasks]
        return SweepResult(points, meta)

    sizes = _blocks(spec.n_samples)
    jobs = [(i, b) for i in range(len(rhos)) for b in range(len(sizes))]

    def work(job):
        i, b = job
        rng = stream(spec.seed, series, i, b)
        try:
            samples = evaluator(float(rhos[i]), rng, sizes[b])
        except Exception as exc:
            raise SweepError(f"evaluator failed at {spec.rho_grid_db[i]} dB: {exc}", spec.rho_grid_db[i]) from exc
        return _block_stats(samples)

    if threads > 1:
        with ThreadPoolExecutor(threads) as pool:
            stats = list(pool.map(work, jobs))
    else:
        stats = [work(j) for j in jobs]

    points = []
    nb = len(sizes)
    for i, db in enumerate(spec.rho_grid_db):
        n, mean, m2 = _merge(stats[i * nb:(i + 1) * nb])
        se = math.sqrt(m2 / (n - 1) / n) if n > 1 else 0.0
        points.append(SweepPoint(db, mean, se, n))
    return SweepResult(points, meta)


def crossover_detect(a: SweepResult, b: SweepResult, nsigma: float = 3.0) -> list[tuple[float, float]]:
    """dB intervals over which a - b changes sign significantly.

    Only points where |a - b| exceeds ``nsigma`` combined standard errors
    take part; an interval runs from the last significant point of one sign
    to the first significant point of the other.
    """
    xa, xb = a.rho_db, b.rho_db
    if xa.shape != xb.shape or not np.allclose(xa, xb):
        raise ValueError("crossover detection needs identical grids")
    diff = a.estimates - b.estimates
    sigma = np.sqrt(a.stderrs ** 2 + b.stderrs ** 2)
    sig = np.abs(diff) > nsigma * sigma
    sig &= diff != 0
    out = []
    prev = None
    for i in np.flatnonzero(sig):
        if prev is not None and np.sign(diff[i]) != np.sign(diff[prev]):
            out.append((float(xa[prev]), float(xa[i])))
        prev = i
    return out


# ---------------------------------------------------------------------------
# CSV

HEADER = ["snr_db", "estimate", "stderr", "n_samples"]


def _fmt(v: float) -> str:
    return f"{v:.12g}"


def write_csv(results: Sequence[SweepResult], labels: Sequence[str] | None = None) -> str:
    """Render one or more sweeps; a leading ``series`` column appears for several."""
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    multi = labels is not None
    w.writerow((["series"] if multi else []) + HEADER)
    for k, res in enumerate(results):
        for p in res.points:
            row = [_fmt(p.rho_db), _fmt(p.estimate), _fmt(p.stderr), str(p.n_samples)]
            w.writerow(([labels[k]] if multi else []) + row)
    return buf.getvalue()


def read_csv(text: str) -> dict[str, SweepResult]:
    """Parse CSV written by :func:`write_csv`; single-series files map to key ``""``."""
    rows = list(csv.reader(io.StringIO(text)))
    header = rows[0]
    multi = header[0] == "series"
    expected = (["series"] if multi else []) + HEADER
    if header != expected:
        raise ValueError(f"unexpected CSV header {header}")
    out: dict[str, SweepResult] = {}
    for row in rows[1:]:
        key = row[0] if multi else ""
        vals = row[1:] if multi else row
        pt = SweepPoint(float(vals[0]), float(vals[1]), float(vals[2]), int(vals[3]))
        out.setdefault(key, SweepResult([])).points.append(pt)
    return out
