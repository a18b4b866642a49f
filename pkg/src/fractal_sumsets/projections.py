"""Orthogonal projections of box covers as interval unions, and polygon sumset reports."""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Optional, Sequence, Union

import numpy as np

from .angles import Slope
from .curves import CurveSpec, side_angles
from .errors import DomainError
from .ifs import BoxCover, IfsSystem, four_corner_cover, ifs_cover

MERGE_TOL = 1e-12

Direction = Union[float, Slope]


@dataclass(frozen=True)
class ExactIntervals:
    """Integer endpoints in units of ``1 / (denominator * norm)``."""

    lefts: np.ndarray
    rights: np.ndarray
    denominator: int
    norm: float

    @property
    def total_numerator(self) -> int:
        return int(np.sum(self.rights - self.lefts))


@dataclass(frozen=True)
class IntervalUnion:
    """Sorted disjoint closed intervals with strictly positive gaps."""

    lefts: np.ndarray
    rights: np.ndarray
    exact: Optional[ExactIntervals] = None

    def __len__(self) -> int:
        return len(self.lefts)

    @property
    def count(self) -> int:
        return len(self)

    @property
    def intervals(self) -> list:
        return list(zip(self.lefts.tolist(), self.rights.tolist()))

    @property
    def total_length(self) -> float:
        if self.exact is not None:
            return self.exact.total_numerator / (self.exact.denominator * self.exact.norm)
        return float(np.sum(self.rights - self.lefts))

    @property
    def longest(self) -> float:
        return float(np.max(self.rights - self.lefts)) if len(self) else 0.0

    def to_csv(self, path=None) -> str:
        lines = ["left,right"] + [f"{a!r},{b!r}" for a, b in self.intervals]
        text = "\n".join(lines) + "\n"
        if path is not None:
            Path(path).write_text(text)
        return text


def merge_intervals(lefts: np.ndarray, rights: np.ndarray, tol: float = 0.0) -> tuple:
    """Union of closed intervals; pieces whose gap is at most ``tol`` are joined."""
    if len(lefts) == 0:
        return lefts, rights
    order = np.argsort(lefts, kind="stable")
    lo, hi = lefts[order], rights[order]
    reach = np.maximum.accumulate(hi)
    # a new component starts where the left end clears everything before it
    start = np.ones(len(lo), dtype=bool)
    start[1:] = lo[1:] > reach[:-1] + tol
    idx = np.flatnonzero(start)
    ends = np.append(idx[1:], len(lo)) - 1
    return lo[idx], reach[ends]


def _lattice_direction(slope: Slope) -> tuple:
    """Integer vector ``(a, b)`` pointing along ``slope.theta`` in [0, pi)."""
    if slope.p < 0:
        return -slope.q, -slope.p
    return slope.q, slope.p


def _direction(theta: Direction) -> tuple:
    if isinstance(theta, Slope):
        a, b = _lattice_direction(theta)
        return a / theta.norm, b / theta.norm
    return math.cos(theta), math.sin(theta)


def _float_union(corners: np.ndarray, side: float, c: float, s: float) -> IntervalUnion:
    lo = corners @ np.array([c, s]) + side * (min(c, 0.0) + min(s, 0.0))
    a, b = merge_intervals(lo, lo + side * (abs(c) + abs(s)), MERGE_TOL)
    return IntervalUnion(a, b)


def project_cover(cover: BoxCover, theta: Direction) -> IntervalUnion:
    """Union of the scalar projections of the boxes onto ``(cos theta, sin theta)``.

    A :class:`Slope` ``p/q`` together with an exact cover selects integer
    arithmetic along ``(q, p)``; endpoints are then exact and only divided
    by the norm at the end.  1-D covers ignore ``theta``.
    """
    if cover.dim == 1:
        return _project_1d(cover)
    if isinstance(theta, Slope) and cover.exact is not None:
        return _project_exact(cover, theta)
    c, s = _direction(theta)
    return _float_union(cover.corners, cover.side, c, s)


def _project_1d(cover: BoxCover) -> IntervalUnion:
    if cover.exact is not None:
        ex = cover.exact
        lo = ex.numerators[:, 0].astype(np.int64)
        a, b = merge_intervals(lo, lo + ex.side_numerator)
        exact = ExactIntervals(a, b, ex.denominator, 1.0)
        return IntervalUnion(a / ex.denominator, b / ex.denominator, exact)
    lo = cover.corners[:, 0]
    a, b = merge_intervals(lo, lo + cover.side, MERGE_TOL)
    return IntervalUnion(a, b)


def _project_exact(cover: BoxCover, slope: Slope) -> IntervalUnion:
    ex = cover.exact
    a, b = _lattice_direction(slope)
    num = ex.numerators.astype(np.int64)
    bound = int(np.abs(num).max(initial=0)) + ex.side_numerator
    if bound * (abs(a) + abs(b)) >= 2 ** 62:
        return _float_union(cover.corners, cover.side, *_direction(slope))
    lo = a * num[:, 0] + b * num[:, 1] + ex.side_numerator * (min(a, 0) + min(b, 0))
    hi = lo + ex.side_numerator * (abs(a) + abs(b))
    left, right = merge_intervals(lo, hi)
    scale = ex.denominator * slope.norm
    exact = ExactIntervals(left, right, ex.denominator, slope.norm)
    return IntervalUnion(left / scale, right / scale, exact)


def distinct_projected(cover: BoxCover, theta: Direction) -> int:
    """Number of distinct projected box intervals (coincidences counted once)."""
    if isinstance(theta, Slope) and cover.exact is not None and cover.dim == 2:
        num = cover.exact.numerators.astype(np.int64)
        a, b = _lattice_direction(theta)
        return int(np.unique(a * num[:, 0] + b * num[:, 1]).size)
    c, s = _direction(theta)
    lo = cover.corners @ np.array([c, s]) if cover.dim == 2 else cover.corners[:, 0]
    lo = np.sort(lo)
    return int(1 + np.count_nonzero(np.diff(lo) > MERGE_TOL)) if lo.size else 0


@dataclass(frozen=True)
class ProjectionRow:
    depth: int
    total_length: float
    interval_count: int
    distinct_count: int
    longest: float


def projection_ladder_system(system: IfsSystem, theta: Direction, max_depth: int, min_depth: int = 1) -> list:
    if max_depth < 1:
        raise DomainError("max_depth must be at least 1")
    rows = []
    for n in range(min_depth, max_depth + 1):
        cover = ifs_cover(system, n)
        u = project_cover(cover, theta)
        rows.append(ProjectionRow(n, u.total_length, u.count, distinct_projected(cover, theta), u.longest))
    return rows


def projection_ladder(gamma, theta: Direction, max_depth: int, min_depth: int = 1) -> list:
    """Per-depth length and component count of the projection of C(gamma)."""
    if max_depth < 1:
        raise DomainError("max_depth must be at least 1")
    rows = []
    for n in range(min_depth, max_depth + 1):
        cover = four_corner_cover(gamma, n)
        u = project_cover(cover, theta)
        rows.append(ProjectionRow(n, u.total_length, u.count, distinct_projected(cover, theta), u.longest))
    return rows


def ladder_to_csv(rows: Sequence[ProjectionRow], path=None) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["depth", "length", "count", "distinct", "longest"])
    for r in rows:
        w.writerow([r.depth, repr(r.total_length), r.interval_count, r.distinct_count, repr(r.longest)])
    text = buf.getvalue()
    if path is not None:
        Path(path).write_text(text)
    return text


def count_growth_exponent(rows: Sequence[ProjectionRow], distinct: bool = False) -> float:
    """Least-squares slope of ``log(count)`` against depth."""
    d = np.array([r.depth for r in rows], dtype=float)
    c = np.array([r.distinct_count if distinct else r.interval_count for r in rows], dtype=float)
    return float(np.polyfit(d, np.log(c), 1)[0])


def union_box_dimension(union: IntervalUnion, finest: float, octaves: int = 6) -> float:
    """1-D box-counting slope of an interval union over ``finest * 2^k``, k = 1..octaves."""
    if len(union) == 0:
        return 0.0
    eps = finest * 2.0 ** np.arange(1, octaves + 1)
    counts = []
    # cells anchored at the left end; a cell only touched at its edge is not counted
    origin = union.lefts[0]
    for e in eps:
        i0 = np.floor((union.lefts - origin) / e).astype(np.int64)
        i1 = np.maximum(i0, np.ceil((union.rights - origin) / e).astype(np.int64) - 1)
        # unions of consecutive cell ranges, counted without double counting
        a, b = merge_intervals(i0, i1 + 1)
        counts.append(int(np.sum(b - a)))
    return float(np.polyfit(np.log(1 / eps), np.log(counts), 1)[0])


@dataclass(frozen=True)
class AngleReport:
    side_angle: float
    projection_angle: float
    lengths: tuple
    longest: tuple
    count: int
    dimension: float
    measure_positive: Optional[bool]
    has_interval: bool


@dataclass(frozen=True)
class PolygonReport:
    angles: tuple
    measure_positive: Optional[bool]
    interior: bool
    dimension: float

    def to_csv(self, path=None) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["alpha", "alpha_perp", "length", "count", "dimension", "measure_positive", "has_interval"])
        for a in self.angles:
            w.writerow([repr(a.side_angle), repr(a.projection_angle), repr(a.lengths[-1]), a.count,
                        repr(a.dimension), a.measure_positive, a.has_interval])
        text = buf.getvalue()
        if path is not None:
            Path(path).write_text(text)
        return text


def _perp(alpha: float, spec: CurveSpec) -> Direction:
    if isinstance(spec.theta, Slope):
        base = spec.theta
        for cand in (base, base.perpendicular()):
            if abs(cand.theta - alpha) < 1e-12:
                return cand.perpendicular()
    return (alpha + math.pi / 2) % math.pi


def polygon_sumset_report(
    covers: Union[BoxCover, Sequence[BoxCover]],
    polygon: CurveSpec,
    tau_pos: float = 0.1,
) -> PolygonReport:
    """Reduce ``A + polygon`` to the projections of ``A`` onto each side's normal.

    ``covers`` is one cover or a depth ladder of covers (coarse to fine).
    With a ladder a side's projection counts as measure-positive when its
    length changes by less than ``tau_pos`` over the last step.  A
    projection contains an interval when its longest component is at least
    four projected boxes long and loses less than ``tau_pos`` of its length
    at every step of the ladder.  The sumset dimension is one plus the largest projected
    box dimension.
    """
    if not polygon.is_polygonal:
        raise DomainError("polygon_sumset_report needs a polygonal curve")
    if isinstance(covers, BoxCover):
        covers = [covers]
    covers = list(covers)
    reports = []
    for alpha in side_angles(polygon):
        direction = _perp(alpha, polygon)
        unions = [project_cover(c, direction) for c in covers]
        lengths = tuple(u.total_length for u in unions)
        longest = tuple(u.longest for u in unions)
        fine = covers[-1]
        c, s = _direction(direction)
        box_len = fine.side * (abs(c) + abs(s))
        dim = union_box_dimension(unions[-1], max(box_len, 1e-300)) if fine.side > 0 else 0.0
        measure = None
        if len(covers) >= 2 and lengths[-2] > 0:
            measure = abs(1 - lengths[-1] / lengths[-2]) < tau_pos
        has_interval = longest[-1] >= 4 * box_len
        if len(covers) >= 2:
            kept = min(b / a for a, b in zip(longest, longest[1:]) if a > 0)
            has_interval = has_interval and kept >= 1 - tau_pos
        proj_angle = direction.theta if isinstance(direction, Slope) else float(direction)
        reports.append(AngleReport(alpha, proj_angle, lengths, longest, unions[-1].count,
                                   min(dim, 1.0), measure, bool(has_interval)))
    measures = [r.measure_positive for r in reports]
    if any(m is True for m in measures):
        measure_all: Optional[bool] = True
    elif all(m is False for m in measures):
        measure_all = False
    else:
        measure_all = None
    return PolygonReport(
        tuple(reports),
        measure_all,
        any(r.has_interval for r in reports),
        1.0 + max(r.dimension for r in reports),
    )
