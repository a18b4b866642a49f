"""Log-log fits over resolution ladders, area-trend verdicts and Riesz energies."""

from __future__ import annotations

import csv
import io
import math
import warnings
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Optional, Sequence

import numpy as np

from .errors import DomainError
from .ifs import BoxCover, IfsSystem

POSITIVE = "positive"
ZERO = "zero"
INCONCLUSIVE = "inconclusive"

TAU_POS = 0.1
TAU_ZERO = 0.15
# a decay exponent only counts when the log-log area curve is close to a line
MIN_TREND_R2 = 0.95


@dataclass(frozen=True)
class LadderRow:
    eps: float
    box_count: int
    area: float


@dataclass(frozen=True)
class ScalingLadder:
    """Rows ordered by strictly decreasing ``eps``."""

    rows: tuple

    def __post_init__(self):
        rows = tuple(r if isinstance(r, LadderRow) else LadderRow(float(r[0]), int(r[1]), float(r[2])) for r in self.rows)
        eps = [r.eps for r in rows]
        if any(b >= a for a, b in zip(eps, eps[1:])):
            raise DomainError("ladder eps values must be strictly decreasing")
        if any(e <= 0 for e in eps):
            raise DomainError("ladder eps values must be positive")
        object.__setattr__(self, "rows", rows)

    @classmethod
    def from_counts(cls, eps: Sequence[float], counts: Sequence[int]) -> "ScalingLadder":
        return cls(tuple(LadderRow(float(e), int(n), float(e) ** 2 * int(n)) for e, n in zip(eps, counts)))

    @classmethod
    def from_areas(cls, eps: Sequence[float], areas: Sequence[float]) -> "ScalingLadder":
        """Area-only ladder; counts are rounded from ``area / eps^2``."""
        return cls(tuple(LadderRow(float(e), int(round(a / e ** 2)), float(a)) for e, a in zip(eps, areas)))

    def __len__(self) -> int:
        return len(self.rows)

    @property
    def eps(self) -> np.ndarray:
        return np.array([r.eps for r in self.rows])

    @property
    def counts(self) -> np.ndarray:
        return np.array([r.box_count for r in self.rows], dtype=float)

    @property
    def areas(self) -> np.ndarray:
        return np.array([r.area for r in self.rows])

    def to_csv(self, path=None) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["eps", "box_count", "area"])
        for r in self.rows:
            w.writerow([repr(r.eps), r.box_count, repr(r.area)])
        text = buf.getvalue()
        if path is not None:
            Path(path).write_text(text)
        return text

    @classmethod
    def from_csv(cls, text: str) -> "ScalingLadder":
        reader = csv.DictReader(io.StringIO(text))
        return cls(tuple(LadderRow(float(r["eps"]), int(r["box_count"]), float(r["area"])) for r in reader))


@dataclass(frozen=True)
class DimFit:
    slope: float
    intercept: float
    r_squared: float
    window: tuple

    def to_csv(self) -> str:
        return "slope,intercept,r2,window\n" + f"{self.slope!r},{self.intercept!r},{self.r_squared!r},{self.window[0]}-{self.window[1]}\n"


def _linfit(x: np.ndarray, y: np.ndarray) -> tuple:
    slope, intercept = np.polyfit(x, y, 1)
    resid = y - (slope * x + intercept)
    ss_tot = float(np.sum((y - y.mean()) ** 2))
    r2 = 1.0 if ss_tot == 0 else max(0.0, 1.0 - float(np.sum(resid ** 2)) / ss_tot)
    return float(slope), float(intercept), r2


def _window(n: int, window: Optional[tuple]) -> tuple:
    if window is None:
        # the coarsest rung is dominated by boundary effects
        window = (1, n - 1) if n > 3 else (0, n - 1)
    lo, hi = window
    if hi < 0:
        hi += n
    if not (0 <= lo < hi < n):
        raise DomainError(f"window {window} does not fit {n} rows")
    return lo, hi


def fit_box_dimension(ladder: ScalingLadder, window: Optional[tuple] = None) -> DimFit:
    """Least-squares slope of ``log N`` against ``log(1/eps)``.

    ``window`` is an inclusive ``(first, last)`` row range; by default the
    coarsest row is dropped when at least four rows are present.
    """
    if len(ladder) < 3:
        raise DomainError(f"a dimension fit needs at least 3 rows, got {len(ladder)}")
    lo, hi = _window(len(ladder), window)
    idx = np.arange(lo, hi + 1)
    counts = ladder.counts[idx]
    if np.any(counts <= 0):
        warnings.warn("rows with zero box count are excluded from the fit", stacklevel=2)
        idx = idx[counts > 0]
        if idx.size < 2:
            raise DomainError("fewer than two nonzero rows in the fit window")
    x = np.log(1.0 / ladder.eps[idx])
    y = np.log(ladder.counts[idx])
    slope, intercept, r2 = _linfit(x, y)
    return DimFit(slope, intercept, r2, (int(idx[0]), int(idx[-1])))


@dataclass(frozen=True)
class TrendVerdict:
    verdict: str
    final_change: float
    beta: float
    r_squared: float
    tau_pos: float
    tau_zero: float
    strictly_decreasing: bool
    evidence: dict = field(default_factory=dict, compare=False)

    def describe(self) -> str:
        return (
            f"{self.verdict} (final-octave change {self.final_change:.4f} vs tau_pos={self.tau_pos}; "
            f"area exponent {self.beta:.4f} r2={self.r_squared:.4f} vs tau_zero={self.tau_zero}; "
            f"strictly decreasing={self.strictly_decreasing})"
        )


def classify_area_trend(
    ladder: ScalingLadder,
    tau_pos: float = TAU_POS,
    tau_zero: float = TAU_ZERO,
    min_r2: float = MIN_TREND_R2,
) -> TrendVerdict:
    """Three-way heuristic verdict on whether the area tends to a positive limit.

    ``positive`` when the relative area change across the final octave is
    below ``tau_pos``.  ``zero`` when the area fits ``eps^beta`` over the
    whole ladder with ``beta > tau_zero`` and ``r^2 >= min_r2``.  Otherwise
    ``inconclusive``.  The final octave is the last two rows rescaled to a
    factor-2 step in eps.
    """
    if len(ladder) < 4:
        raise DomainError(f"an area trend needs at least 4 rows, got {len(ladder)}")
    eps, areas = ladder.eps, ladder.areas
    if np.any(areas <= 0):
        raise DomainError("areas must be positive for a trend fit")
    octaves = math.log2(eps[-2] / eps[-1])
    ratio = (areas[-1] / areas[-2]) ** (1.0 / octaves)
    final_change = abs(1.0 - ratio)
    slope, _, r2 = _linfit(np.log(eps), np.log(areas))
    beta = slope
    decreasing = bool(np.all(np.diff(areas) < 0))
    if final_change < tau_pos:
        verdict = POSITIVE
    elif beta > tau_zero and r2 >= min_r2:
        verdict = ZERO
    else:
        verdict = INCONCLUSIVE
    evidence = {"last_ratio": float(areas[-1] / areas[-2]), "octaves": octaves, "min_r2": min_r2}
    return TrendVerdict(verdict, float(final_change), float(beta), float(r2), tau_pos, tau_zero, decreasing, evidence)


# ---------------------------------------------------------------- Riesz energy

Sampler = Callable[[np.random.Generator, int], np.ndarray]


def uniform_interval_sampler(lo: float = 0.0, hi: float = 1.0) -> Sampler:
    def draw(rng: np.random.Generator, n: int) -> np.ndarray:
        return rng.uniform(lo, hi, size=(n, 1))

    return draw


def ifs_sampler(system: IfsSystem, depth: int = 26) -> Sampler:
    """Natural measure of an equal-ratio IFS: uniform random words of length ``depth``.

    The point is the image of the first fixed point under the word, which
    lies within ``ratio^depth * diam`` of the attractor point the infinite
    word selects.
    """
    ratio = system.common_ratio
    if ratio is None:
        raise DomainError("ifs_sampler needs a common contraction ratio")
    r = float(ratio)
    t = np.asarray(system.translations(), dtype=float)
    start = np.asarray(system.fixed_points()[0], dtype=float)

    def draw(rng: np.random.Generator, n: int) -> np.ndarray:
        words = rng.integers(0, len(t), size=(depth, n))
        x = np.broadcast_to(start, (n, t.shape[1])).copy()
        # apply the innermost map first
        for k in range(depth - 1, -1, -1):
            x *= r
            x += t[words[k]]
        return x

    return draw


def cover_sampler(cover: BoxCover) -> Sampler:
    """Uniform over the boxes of a cover, uniform inside the chosen box."""

    def draw(rng: np.random.Generator, n: int) -> np.ndarray:
        k = rng.integers(0, len(cover), size=n)
        return cover.corners[k] + cover.side * rng.random((n, cover.dim))

    return draw


def riesz_energy_mc(sampler: Sampler, s: float, pairs: int, seed: int = 0, *, batch: int = 1 << 18) -> float:
    """Monte Carlo mean of ``|x - y|^-s`` over ``pairs`` independent pairs.

    Pairs closer than 1e-15 are redrawn.  Batch ``b`` uses its own Philox
    stream, so the result depends only on ``seed``, ``pairs`` and ``batch``.
    """
    if not 0 < s < 2:
        raise DomainError(f"s must lie in (0, 2), got {s}")
    if pairs < 1:
        raise DomainError("pairs must be positive")
    total = 0.0
    done = 0
    b = 0
    while done < pairs:
        m = min(batch, pairs - done)
        rng = np.random.Generator(np.random.Philox(key=[seed, b]))
        d = np.linalg.norm(sampler(rng, m) - sampler(rng, m), axis=1)
        bad = d < 1e-15
        while bad.any():
            k = int(bad.sum())
            d[bad] = np.linalg.norm(sampler(rng, k) - sampler(rng, k), axis=1)
            bad = d < 1e-15
        total += float(np.sum(d ** -s))
        done += m
        b += 1
    return total / pairs


@dataclass(frozen=True)
class EnergyDivergence:
    s: float
    pairs: int
    estimate: float
    estimate_4x: float
    ratio: float
    diverging: bool


def energy_divergence(sampler: Sampler, s: float, pairs: int, seed: int = 0, threshold: float = 1.5) -> EnergyDivergence:
    """Compare the energy estimate at ``pairs`` with the one at ``4 * pairs``."""
    e1 = riesz_energy_mc(sampler, s, pairs, seed)
    e4 = riesz_energy_mc(sampler, s, 4 * pairs, seed)
    ratio = e4 / e1
    return EnergyDivergence(s, pairs, e1, e4, ratio, ratio > threshold)
