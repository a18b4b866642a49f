"""Slice maps onto vertical lines, the polar shear Psi_x, wedge densities and audits.

Polar angles about a centre ``x`` live in ``(-pi, pi]``.  The upper half
disk ``D_x^+`` holds angles in ``[0, pi)`` and the lower half ``D_x^-``
holds ``[-pi, 0)``; the angle ``pi`` is identified with ``-pi``.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Optional

import numpy as np

from .curves import NONVANISHING, CurveSpec, curvature_class, curve_points, parameter_range
from .errors import DomainError
from .ifs import BoxCover

PLUS = "plus"
MINUS = "minus"
INVERSE_PLUS = "inverse-plus"
INVERSE_MINUS = "inverse-minus"
BRANCHES = (PLUS, MINUS, INVERSE_PLUS, INVERSE_MINUS)


def lipschitz_bound(r2):
    """Upper bound ``1 + 1.4 r + (2/3) r^2`` on the Psi_x distance ratio."""
    return 1.0 + 1.4 * r2 + (2.0 / 3.0) * r2 ** 2


# ------------------------------------------------------------------ pairs (x, alpha)


@dataclass(frozen=True)
class AdmissiblePair:
    """A point ``x`` of the closed unit square with a vertical line ``x = alpha``.

    Requires ``tau_margin < alpha - x1 < 1 - tau_margin``.
    """

    x: tuple
    alpha: float
    tau_margin: float = 0.0

    def __post_init__(self):
        x1, x2 = (float(v) for v in self.x)
        object.__setattr__(self, "x", (x1, x2))
        if not (0.0 <= x1 <= 1.0 and 0.0 <= x2 <= 1.0):
            raise DomainError(f"x={self.x} is outside [0,1]^2")
        if not 0.0 < self.alpha < 2.0:
            raise DomainError(f"alpha={self.alpha} is outside (0, 2)")
        if self.tau_margin < 0:
            raise DomainError("tau_margin must be nonnegative")
        d = self.alpha - x1
        t = self.tau_margin
        if not d > t:
            raise DomainError(f"alpha - x1 = {d:.12g} is not > {t:g}")
        if not d < 1 - t:
            raise DomainError(f"alpha - x1 = {d:.12g} is not < {1 - t:g}")

    @property
    def offset(self) -> float:
        return self.alpha - self.x[0]


def phi_alpha(pair: AdmissiblePair) -> tuple:
    """Upper intersection of the unit circle about ``x`` with the line ``x = alpha``."""
    d = pair.offset
    return (pair.alpha, pair.x[1] + math.sqrt(1.0 - d * d))


def theta_of(pair: AdmissiblePair) -> float:
    return math.acos(pair.offset) + math.pi / 2


def tau_map(pair: AdmissiblePair) -> tuple:
    return pair.x, theta_of(pair)


def tau_inverse(x, theta: float) -> AdmissiblePair:
    if not math.pi / 2 < theta < math.pi:
        raise DomainError(f"theta={theta} is outside (pi/2, pi)")
    return AdmissiblePair(tuple(x), float(x[0]) + math.cos(theta - math.pi / 2))


def h_map(pair: AdmissiblePair) -> tuple:
    """``(alpha - arcsin(alpha - x1), x2 + sqrt(1 - (alpha - x1)^2) - 1)``."""
    if not pair.tau_margin > 0:
        raise DomainError("h_map needs a pair with a positive tau margin")
    d = pair.offset
    return (pair.alpha - math.asin(d), pair.x[1] + math.sqrt(1.0 - d * d) - 1.0)


def varphi_derivative(fprime_at_x: float, alpha_minus_x: float) -> float:
    """Derivative of ``x -> f(x) + sqrt(1 - (alpha - x)^2)``.

    ``alpha_minus_x = 0`` is accepted as the continuous endpoint value.
    """
    t = float(alpha_minus_x)
    if not 0.0 <= t < 1.0:
        raise DomainError(f"alpha - x = {t} is outside (0, 1)")
    return float(fprime_at_x) + t / math.sqrt(1.0 - t * t)


# ------------------------------------------------------------------ polar coordinates


def wrap_angle(phi):
    """Map angles into ``(-pi, pi]``."""
    phi = np.asarray(phi, dtype=float)
    # values already in range pass through untouched, so branch maps invert exactly
    inside = (phi > -np.pi) & (phi <= np.pi)
    out = np.where(inside, phi, np.pi - np.mod(np.pi - phi, 2 * np.pi))
    return float(out) if np.ndim(out) == 0 else out


@dataclass(frozen=True)
class PolarAboutX:
    center: tuple
    r: float
    phi: float

    def __post_init__(self):
        if self.r < 0:
            raise DomainError("polar radius must be nonnegative")
        object.__setattr__(self, "center", tuple(float(v) for v in self.center))
        object.__setattr__(self, "phi", wrap_angle(self.phi))

    @classmethod
    def of_point(cls, center, y) -> "PolarAboutX":
        dx, dy = y[0] - center[0], y[1] - center[1]
        return cls(tuple(center), math.hypot(dx, dy), math.atan2(dy, dx))

    def point(self) -> tuple:
        return (self.center[0] + self.r * math.cos(self.phi), self.center[1] + self.r * math.sin(self.phi))

    @property
    def upper(self) -> bool:
        return 0.0 <= self.phi < math.pi


def _shift(r):
    return np.arcsin(np.asarray(r, dtype=float) / 2)


def psi_polar(r, phi):
    """Vectorised Psi_x in polar form; ``phi`` in ``(-pi, pi]``."""
    r = np.asarray(r, dtype=float)
    phi = wrap_angle(phi)
    upper = (phi >= 0) & (phi < np.pi)
    return r, np.where(upper, phi - _shift(r), wrap_angle(phi + _shift(r)))


def psi_x(x, u: PolarAboutX) -> PolarAboutX:
    """Rotate ``u`` about ``x`` by ``-arcsin(r/2)`` (upper half) or ``+arcsin(r/2)`` (lower)."""
    if u.r > 1:
        raise DomainError(f"psi_x needs r <= 1, got {u.r}")
    if u.r == 0:
        return u
    _, phi = psi_polar(u.r, u.phi)
    return PolarAboutX(tuple(x), u.r, float(phi))


def branch_map(branch: str, r, phi):
    """Apply one injective branch (or its inverse) to polar coordinates.

    Returns the image angle and a mask of inputs inside the branch domain.
    """
    r = np.asarray(r, dtype=float)
    phi = wrap_angle(phi)
    a = _shift(r)
    if branch == PLUS:
        ok = (phi >= 0) & (phi < np.pi)
        out = phi - a
    elif branch == MINUS:
        ok = (phi < 0) | (phi == np.pi)
        phi = np.where(phi == np.pi, -np.pi, phi)
        out = phi + a
    elif branch == INVERSE_PLUS:
        out = phi + a
        ok = (out >= 0) & (out < np.pi)
    elif branch == INVERSE_MINUS:
        phi = np.where(phi + a >= np.pi, phi - 2 * np.pi, phi)
        out = phi - a
        ok = (out >= -np.pi) & (out < 0)
    else:
        raise DomainError(f"unknown branch {branch!r}")
    return out, ok & (r > 0) & (r <= 1)


def psi_ratio(x, y1: PolarAboutX, y2: PolarAboutX, branch: str) -> float:
    """``|F(y1) - F(y2)| / |y1 - y2|`` for the requested branch ``F``."""
    p1, p2 = np.array(y1.point()), np.array(y2.point())
    dist = float(np.hypot(*(p1 - p2)))
    if dist == 0.0:
        raise DomainError("psi_ratio needs two distinct points")
    phis, ok = branch_map(branch, [y1.r, y2.r], [y1.phi, y2.phi])
    if not ok.all():
        raise DomainError(f"points are outside the domain of branch {branch!r}")
    img = np.column_stack([np.array([y1.r, y2.r]) * np.cos(phis), np.array([y1.r, y2.r]) * np.sin(phis)])
    return float(np.hypot(*(img[0] - img[1])) / dist)


def _random_branch_pairs(rng: np.random.Generator, branch: str, n: int):
    """Polar pairs inside the branch domain, ``r1 <= r2`` after sorting."""
    r = np.sqrt(rng.random((n, 2)))
    r = np.clip(r, 1e-12, 1.0)
    if branch == PLUS:
        phi = rng.uniform(0.0, np.pi, (n, 2))
    elif branch == MINUS:
        phi = rng.uniform(-np.pi, 0.0, (n, 2))
    elif branch == INVERSE_PLUS:
        phi = rng.uniform(0.0, np.pi, (n, 2)) - _shift(r)
    else:
        phi = wrap_angle(rng.uniform(-np.pi, 0.0, (n, 2)) + _shift(r))
    return r, phi


def lipschitz_audit(branch: str, samples: int, seed: int = 0) -> dict:
    """Sample point pairs in a branch domain and test the squared ratio bound.

    Half of the pairs are drawn globally, half as close neighbours, where the
    ratio is largest.
    """
    rng = np.random.Generator(np.random.Philox(key=[seed, BRANCHES.index(branch)]))
    half = samples // 2
    r, phi = _random_branch_pairs(rng, branch, samples)
    # local pairs: perturb the first point slightly
    scale = 10.0 ** rng.uniform(-6, -1, half)
    r[:half, 1] = np.clip(r[:half, 0] + scale * rng.normal(size=half), 1e-12, 1.0)
    phi[:half, 1] = phi[:half, 0] + scale * rng.normal(size=half)
    _, ok0 = branch_map(branch, r[:, 0], phi[:, 0])
    _, ok1 = branch_map(branch, r[:, 1], phi[:, 1])
    keep = ok0 & ok1
    r, phi = r[keep], phi[keep]
    pts = np.stack([r * np.cos(phi), r * np.sin(phi)], axis=-1)
    out, _ = branch_map(branch, r, phi)
    img = np.stack([r * np.cos(out), r * np.sin(out)], axis=-1)
    d = np.hypot(*(pts[:, 0] - pts[:, 1]).T)
    keep = d > 1e-13
    ratio = np.hypot(*(img[:, 0] - img[:, 1]).T)[keep] / d[keep]
    r2 = r.max(axis=1)[keep]
    bound = lipschitz_bound(r2)
    worst = float(np.max(ratio ** 2 / bound))
    violations = int(np.count_nonzero(ratio ** 2 >= bound + 1e-9))
    return {"branch": branch, "samples": int(keep.sum()), "violations": violations,
            "worst_fraction": worst, "max_ratio": float(ratio.max())}


# ------------------------------------------------------------------ wedges


@dataclass(frozen=True)
class WedgeSpec:
    """Two-sided sector about ``x``: angles in ``I`` and the antipodal ``I - pi``."""

    x: tuple
    interval: tuple
    r: float

    def __post_init__(self):
        lo, hi = (float(v) for v in self.interval)
        if not 0.0 < lo < hi < math.pi:
            raise DomainError(f"wedge interval {self.interval} is not a nondegenerate subinterval of (0, pi)")
        if not 0.0 < self.r <= 1.0:
            raise DomainError(f"wedge radius must lie in (0, 1], got {self.r}")
        object.__setattr__(self, "interval", (lo, hi))
        object.__setattr__(self, "x", tuple(float(v) for v in self.x))

    @property
    def width(self) -> float:
        return self.interval[1] - self.interval[0]


def _in_interval(phi, lo, hi):
    return (phi >= lo) & (phi <= hi)


def in_wedge(wedge: WedgeSpec, points: np.ndarray) -> np.ndarray:
    v = np.asarray(points, dtype=float) - wedge.x
    rho = np.hypot(v[:, 0], v[:, 1])
    phi = np.arctan2(v[:, 1], v[:, 0])
    lo, hi = wedge.interval
    ang = _in_interval(phi, lo, hi) | _in_interval(phi, lo - np.pi, hi - np.pi)
    return (rho <= wedge.r) & (rho > 0) & ang


def in_circular_wedge(wedge: WedgeSpec, points: np.ndarray) -> np.ndarray:
    """Membership in the Psi_x image of the wedge, tested through the inverse branches."""
    v = np.asarray(points, dtype=float) - wedge.x
    rho = np.hypot(v[:, 0], v[:, 1])
    phi = np.arctan2(v[:, 1], v[:, 0])
    lo, hi = wedge.interval
    up, ok_up = branch_map(INVERSE_PLUS, np.minimum(rho, 1.0), phi)
    dn, ok_dn = branch_map(INVERSE_MINUS, np.minimum(rho, 1.0), phi)
    hit = (ok_up & _in_interval(up, lo, hi)) | (ok_dn & _in_interval(dn, lo - np.pi, hi - np.pi))
    return (rho <= wedge.r) & (rho > 0) & hit


def wedge_density(cover: BoxCover, wedge: WedgeSpec, length_scale: Optional[float] = None,
                  circular: bool = False) -> float:
    """Cover-length proxy of ``H^1(E cap W) / (2 r |I|)``.

    Each box whose centre lies in the wedge contributes ``length_scale``
    (the box side by default).
    """
    if wedge.r < 3 * cover.side:
        raise DomainError(f"wedge radius {wedge.r} is below 3 x cover side {cover.side}")
    centers = cover.corners + cover.side / 2
    inside = in_circular_wedge(wedge, centers) if circular else in_wedge(wedge, centers)
    weight = cover.side if length_scale is None else float(length_scale)
    return float(np.count_nonzero(inside) * weight / (2 * wedge.r * wedge.width))


def circular_wedge_spread(pair: AdmissiblePair, r: float, width: float, samples: int = 4096, seed: int = 0) -> float:
    """Largest ``|Phi_alpha(x) - Phi_alpha(z)| / (r |I|)`` over sampled ``z`` in the circular wedge.

    ``I`` is centred on ``theta(x, alpha)``; sample points come from the
    straight wedge pushed through Psi_x.
    """
    theta = theta_of(pair)
    lo, hi = theta - width / 2, theta + width / 2
    if not 0 < lo < hi < math.pi:
        raise DomainError("wedge interval leaves (0, pi)")
    rng = np.random.Generator(np.random.Philox(key=[seed, 0]))
    rho = r * np.sqrt(rng.random(samples))
    phi = rng.uniform(lo, hi, samples)
    # the extremal rays and the outer rim are included explicitly
    edge = np.linspace(0, r, 64)[1:]
    rho = np.concatenate([rho, edge, edge, np.full(64, r)])
    phi = np.concatenate([phi, np.full(63, lo), np.full(63, hi), np.linspace(lo, hi, 64)])
    rho = np.concatenate([rho, rho])
    phi = np.concatenate([phi, phi - np.pi])
    _, img = psi_polar(rho, phi)
    x1, x2 = pair.x
    z1 = x1 + rho * np.cos(img)
    z2 = x2 + rho * np.sin(img)
    d = pair.alpha - z1
    if np.any((d <= 0) | (d >= 1)):
        raise DomainError("wedge leaves the admissible strip; shrink r")
    y_x = phi_alpha(pair)[1]
    y_z = z2 + np.sqrt(1 - d * d)
    return float(np.max(np.abs(y_z - y_x)) / (r * width))


# ------------------------------------------------------------------ transversality


@dataclass(frozen=True)
class ArcGeometry:
    """A short sub-arc of a curve rotated so its tangent at the start point is at 3pi/4.

    ``points(t)`` maps parameter values in ``[t0, t1]`` into the rotated and
    centred frame; ``y`` increases along the arc.
    """

    spec: CurveSpec
    t0: float
    t1: float
    rotation: np.ndarray
    shift: np.ndarray
    length: float
    curvature: float

    def points(self, t) -> np.ndarray:
        raw = curve_points(self.spec, t)
        return raw @ self.rotation.T - self.shift


def arc_geometry(spec: CurveSpec, length: float = 0.05) -> ArcGeometry:
    if curvature_class(spec) != NONVANISHING:
        raise DomainError("transversality needs a curve with nonvanishing curvature")
    a, b = parameter_range(spec)
    ts = np.linspace(a, b, 4001)
    pts = curve_points(spec, ts)
    d1 = np.gradient(pts, ts, axis=0)
    d2 = np.gradient(d1, ts, axis=0)
    speed = np.hypot(*d1.T)
    kappa = np.abs(d1[:, 0] * d2[:, 1] - d1[:, 1] * d2[:, 0]) / speed ** 3
    # start where curvature is largest, away from the parameter ends
    interior = slice(200, -200)
    k = 200 + int(np.argmax(kappa[interior]))
    t0 = ts[k]
    dt = length / speed[k]
    if t0 + dt > b:
        t0, dt = ts[k] - dt, dt
    t1 = t0 + dt
    tangent = d1[k] / speed[k]
    ang = 3 * math.pi / 4 - math.atan2(tangent[1], tangent[0])
    rot = np.array([[math.cos(ang), -math.sin(ang)], [math.sin(ang), math.cos(ang)]])
    mid = curve_points(spec, np.array([(t0 + t1) / 2]))[0] @ rot.T
    geom = ArcGeometry(spec, float(t0), float(t1), rot, mid, length, float(kappa[k]))
    ends = geom.points(np.array([t0, t1]))
    if ends[1, 1] < ends[0, 1]:
        raise DomainError("arc does not move upward; choose a shorter arc")
    return geom


def slice_points(geom: ArcGeometry, a: np.ndarray, lam: np.ndarray, iters: int = 60) -> np.ndarray:
    """x-coordinate of the point of ``a + arc`` on the line ``y = lam``.

    Broadcasts ``a`` of shape (m, 2) against ``lam`` of shape (k,).
    """
    a = np.asarray(a, dtype=float)[:, None, :]
    lam = np.asarray(lam, dtype=float)[None, :]
    lo = np.full(np.broadcast_shapes(a.shape[:2], lam.shape), geom.t0)
    hi = np.full_like(lo, geom.t1)
    for _ in range(iters):
        mid = (lo + hi) / 2
        y = geom.points(mid)[..., 1] + a[..., 1]
        up = y < lam
        lo = np.where(up, mid, lo)
        hi = np.where(up, hi, mid)
    t = (lo + hi) / 2
    return geom.points(t)[..., 0] + a[..., 0]


@dataclass(frozen=True)
class TransversalityResult:
    h1: float
    h2: float
    pairs: int
    grid: int
    seed: int


def transversality_audit(spec: CurveSpec, pairs: int = 1000, lambda_grid: int = 401, seed: int = 0,
                         length: float = 0.05) -> TransversalityResult:
    """Empirical constants for the Lipschitz (H1) and transversality (H2) hypotheses.

    The ball ``B`` has radius ``length / 200`` about the origin and the
    parameter interval ``U = [0, lambda_0]`` sits inside the height range
    of the middle third of the arc.
    """
    geom = arc_geometry(spec, length)
    h = length / 200
    third = geom.points(np.array([geom.t0 + (geom.t1 - geom.t0) / 3, geom.t1 - (geom.t1 - geom.t0) / 3]))
    lam0 = 0.9 * (third[1, 1] - h)
    if not lam0 > 0:
        raise DomainError("parameter interval is empty; lengthen the arc")
    lam = np.linspace(0.0, lam0, lambda_grid)
    step = lam[1] - lam[0]
    rng = np.random.Generator(np.random.Philox(key=[seed, 0]))
    rad = h * np.sqrt(rng.random((pairs, 2)))
    ang = rng.uniform(0, 2 * np.pi, (pairs, 2))
    a = np.column_stack([rad[:, 0] * np.cos(ang[:, 0]), rad[:, 0] * np.sin(ang[:, 0])])
    b = np.column_stack([rad[:, 1] * np.cos(ang[:, 1]), rad[:, 1] * np.sin(ang[:, 1])])
    d = np.hypot(*(a - b).T)
    keep = d > 0
    a, b, d = a[keep], b[keep], d[keep]
    h1 = 0.0
    h2 = 0.0
    chunk = max(1, 2 ** 20 // lambda_grid)
    for s in range(0, len(d), chunk):
        gap = np.abs(slice_points(geom, a[s:s + chunk], lam) - slice_points(geom, b[s:s + chunk], lam))
        dd = d[s:s + chunk]
        h1 = max(h1, float(np.max(gap / dd[:, None])))
        for i, di in enumerate(dd):
            # below r_min the set {gap < r} spans fewer than ~4 grid steps
            r_min = 4 * di * step * geom.curvature
            r = di
            g = gap[i]
            while r >= r_min:
                meas = np.count_nonzero(g < r) * step
                h2 = max(h2, meas * di / r)
                r /= 2
    return TransversalityResult(h1, h2, int(len(d)), lambda_grid, seed)


# ------------------------------------------------------------------ reports


def audit_csv(rows, path=None) -> str:
    """Rows of ``(quantity, value, samples, seed)``."""
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["quantity", "value", "samples", "seed"])
    for q, v, n, s in rows:
        w.writerow([q, repr(float(v)) if isinstance(v, float) else v, n, s])
    text = buf.getvalue()
    if path is not None:
        Path(path).write_text(text)
    return text
