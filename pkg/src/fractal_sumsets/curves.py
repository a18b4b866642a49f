"""Summand curves: circles, rotated unit-square perimeters, graphs, polylines."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Optional, Sequence, Union

import numpy as np

from .angles import Slope
from .errors import DomainError

CIRCLE = "circle"
POLYGON_NTHETA = "polygonNtheta"
GRAPH = "graph"
POLYLINE = "polyline"

NONVANISHING = "nonvanishing-curvature"
PIECEWISE_LINEAR = "piecewise-linear"


@dataclass(frozen=True)
class CurveSpec:
    """A curve description.  Build instances with the constructor functions below."""

    kind: str
    center: tuple = (0.0, 0.0)
    radius: float = 1.0
    theta: Union[float, Slope, None] = None
    f: Optional[Callable] = field(default=None, compare=False)
    fprime: Optional[Callable] = field(default=None, compare=False)
    domain: tuple = (0.0, 1.0)
    C: Optional[float] = None
    vertices: Optional[tuple] = None

    @property
    def is_polygonal(self) -> bool:
        return self.kind in (POLYGON_NTHETA, POLYLINE)

    @property
    def closed(self) -> bool:
        return self.kind in (CIRCLE, POLYGON_NTHETA)

    @property
    def angle(self) -> float:
        if isinstance(self.theta, Slope):
            return self.theta.theta
        return float(self.theta or 0.0)

    def vertex_array(self) -> np.ndarray:
        return np.array(self.vertices, dtype=float)

    def segments(self) -> list:
        """Pairs of consecutive vertices; N_theta includes the closing side."""
        v = self.vertex_array()
        if self.kind == POLYGON_NTHETA:
            v = np.vstack([v, v[:1]])
        return [(v[i], v[i + 1]) for i in range(len(v) - 1)]


def circle(center=(0.0, 0.0), radius: float = 1.0) -> CurveSpec:
    if not radius > 0:
        raise DomainError(f"circle radius must be positive, got {radius}")
    return CurveSpec(CIRCLE, center=tuple(float(c) for c in center), radius=float(radius))


def polygon_ntheta(theta: Union[float, Slope]) -> CurveSpec:
    """Perimeter of [0,1]^2 rotated by ``theta`` about the origin.

    ``theta`` may be a :class:`Slope` so that projection code can stay exact.
    """
    if isinstance(theta, Slope):
        # rotate by the angle in [0, pi), matching float input
        sign = -1 if theta.p < 0 else 1
        c, s = sign * theta.q / theta.norm, sign * theta.p / theta.norm
    else:
        c, s = math.cos(theta), math.sin(theta)
    square = [(0.0, 0.0), (1.0, 0.0), (1.0, 1.0), (0.0, 1.0)]
    verts = tuple((c * x - s * y, s * x + c * y) for x, y in square)
    return CurveSpec(POLYGON_NTHETA, theta=theta, vertices=verts)


def graph(f: Callable, domain=(0.0, 1.0), fprime: Optional[Callable] = None, C: Optional[float] = None) -> CurveSpec:
    """Graph of ``f`` over ``domain``; with ``C`` the slope must satisfy 1/C < f' < C."""
    a, b = (float(v) for v in domain)
    if not b > a:
        raise DomainError("graph domain must be a nondegenerate interval")
    spec = CurveSpec(GRAPH, f=f, fprime=fprime, domain=(a, b), C=C)
    if C is not None:
        xs = np.linspace(a, b, 101)
        d = fprime(xs) if fprime is not None else np.gradient(f(xs), xs)
        if not (np.all(d > 1 / C) and np.all(d < C)):
            raise DomainError(f"graph slope leaves ({1 / C}, {C}) on the domain")
    return spec


def polyline(vertices: Sequence) -> CurveSpec:
    verts = tuple((float(x), float(y)) for x, y in vertices)
    if len(verts) < 2:
        raise DomainError("a polyline needs at least two vertices")
    return CurveSpec(POLYLINE, vertices=verts)


def side_angles(spec: CurveSpec, tol: float = 1e-12) -> list:
    """Distinct side directions in [0, pi) of a polygonal curve."""
    if not spec.is_polygonal:
        raise DomainError("side angles are only defined for polygonal curves")
    if spec.kind == POLYGON_NTHETA:
        a = spec.angle % math.pi
        return sorted({a, (a + math.pi / 2) % math.pi})
    out: list = []
    for p0, p1 in spec.segments():
        d = p1 - p0
        if np.hypot(*d) == 0:
            continue
        a = math.atan2(d[1], d[0]) % math.pi
        if a > math.pi - tol:
            a = 0.0
        if all(abs(a - b) > tol for b in out):
            out.append(a)
    return sorted(out)


@dataclass(frozen=True)
class CurveSample:
    points: np.ndarray
    max_gap: float
    hausdorff_bound: float
    closed: bool = False

    def __len__(self) -> int:
        return len(self.points)

    def consecutive_distances(self) -> np.ndarray:
        pts = self.points
        if self.closed:
            pts = np.vstack([pts, pts[:1]])
        return np.hypot(*np.diff(pts, axis=0).T)

    def to_csv(self, path=None) -> str:
        lines = ["x,y"] + [f"{x!r},{y!r}" for x, y in self.points.tolist()]
        text = "\n".join(lines) + "\n"
        if path is not None:
            Path(path).write_text(text)
        return text


def _sample_segments(segments, gap: float, closed: bool) -> CurveSample:
    pts = []
    piece = 0.0
    for p0, p1 in segments:
        length = float(np.hypot(*(p1 - p0)))
        k = max(1, math.ceil(length / gap))
        t = np.arange(k)[:, None] / k
        pts.append(p0 + t * (p1 - p0))
        piece = max(piece, length / k)
    if not closed:
        pts.append(segments[-1][1][None, :])
    pts = np.vstack(pts)
    return CurveSample(pts, piece, piece / 2, closed)


def _sample_graph(spec: CurveSpec, gap: float) -> CurveSample:
    a, b = spec.domain
    f = spec.f
    fine_n = 2049
    while True:
        xs = np.linspace(a, b, fine_n)
        ys = np.asarray(f(xs), dtype=float)
        seg = np.hypot(np.diff(xs), np.diff(ys))
        arc = np.concatenate([[0.0], np.cumsum(seg)])
        k = max(1, math.ceil(arc[-1] / (0.9 * gap)))
        targets = np.linspace(0.0, arc[-1], k + 1)
        sx = np.interp(targets, arc, xs)
        sy = np.asarray(f(sx), dtype=float)
        pts = np.column_stack([sx, sy])
        steps = np.hypot(*np.diff(pts, axis=0).T)
        if steps.max() <= gap or fine_n > 2 ** 22:
            break
        fine_n = 4 * fine_n - 3
    # distance from each fine point to the nearest of its two bracketing samples
    idx = np.clip(np.searchsorted(targets, arc, side="right") - 1, 0, k - 1)
    fine = np.column_stack([xs, ys])
    d0 = np.hypot(*(fine - pts[idx]).T)
    d1 = np.hypot(*(fine - pts[idx + 1]).T)
    haus = float(np.minimum(d0, d1).max()) + float(seg.max())
    return CurveSample(pts, float(steps.max()), min(haus, float(steps.max())), False)


def sample_curve(spec: CurveSpec, gap: float) -> CurveSample:
    """Points along the curve, consecutive ones at most ``gap`` apart."""
    if not gap > 0:
        raise DomainError(f"sampling gap must be positive, got {gap}")
    if spec.kind == CIRCLE:
        r = spec.radius
        n = max(3, math.ceil(2 * math.pi * r / gap))
        t = 2 * math.pi * np.arange(n) / n
        cx, cy = spec.center
        pts = np.column_stack([cx + r * np.cos(t), cy + r * np.sin(t)])
        chord = 2 * r * math.sin(math.pi / n)
        # farthest curve point from the samples is the arc midpoint
        haus = 2 * r * math.sin(math.pi / (2 * n))
        return CurveSample(pts, chord, haus, True)
    if spec.kind in (POLYGON_NTHETA, POLYLINE):
        return _sample_segments(spec.segments(), gap, spec.kind == POLYGON_NTHETA)
    if spec.kind == GRAPH:
        return _sample_graph(spec, gap)
    raise DomainError(f"unknown curve kind {spec.kind!r}")


def curvature_class(spec: CurveSpec, threshold: float = 0.01, fraction: float = 0.05, n: int = 201) -> str:
    """Nonvanishing curvature vs piecewise linear.

    Graphs are judged by second differences: nonvanishing when
    ``|f(x+h) - 2 f(x) + f(x-h)| / h^2 > threshold`` on at least ``fraction``
    of the grid.
    """
    if spec.kind == CIRCLE:
        return NONVANISHING
    if spec.is_polygonal:
        return PIECEWISE_LINEAR
    a, b = spec.domain
    xs = np.linspace(a, b, n)
    h = xs[1] - xs[0]
    ys = np.asarray(spec.f(xs), dtype=float)
    second = np.abs(ys[2:] - 2 * ys[1:-1] + ys[:-2]) / h ** 2
    if np.mean(second > threshold) >= fraction:
        return NONVANISHING
    return PIECEWISE_LINEAR


def curve_points(spec: CurveSpec, t: np.ndarray) -> np.ndarray:
    """Evaluate a smooth curve at parameter values (angle for circles, x for graphs)."""
    t = np.asarray(t, dtype=float)
    if spec.kind == CIRCLE:
        cx, cy = spec.center
        return np.stack([cx + spec.radius * np.cos(t), cy + spec.radius * np.sin(t)], axis=-1)
    if spec.kind == GRAPH:
        return np.stack([t, np.asarray(spec.f(t), dtype=float)], axis=-1)
    raise DomainError("curve_points needs a circle or a graph")


def parameter_range(spec: CurveSpec) -> tuple:
    if spec.kind == CIRCLE:
        return (0.0, 2 * math.pi)
    if spec.kind == GRAPH:
        return spec.domain
    raise DomainError("parameter_range needs a circle or a graph")
