"""Self-similar sets as depth-n box covers.

Everything here works with homotheties ``x -> ratio * x + t`` only.  When
the ratio and translations are rational the covers are enumerated in exact
integer arithmetic (numerators over a common denominator) and only converted
to floats at the boundary, so deep covers do not drift.
"""

from __future__ import annotations

import csv
import io
import itertools
import math
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path
from typing import Iterable, Optional, Sequence, Union

import numpy as np
from scipy.spatial import cKDTree

from .errors import (
    CapacityError,
    ConstructionError,
    DomainError,
    UnsupportedConfigurationError,
)

Number = Union[int, float, Fraction]

MAX_BOXES = 2 ** 24
_INT64_LIMIT = 2 ** 62
_FLOAT_EXACT_LIMIT = 2 ** 53


def as_rational(value: Number | str, max_denominator: int = 10 ** 6) -> Optional[Fraction]:
    """Return ``value`` as a Fraction when it is (or plainly denotes) a rational.

    Floats are accepted when a small-denominator fraction reproduces them
    bit for bit, so ``0.3`` becomes ``3/10`` while ``math.sqrt(2)`` gives None.
    """
    if isinstance(value, Fraction):
        return value
    if isinstance(value, (int, np.integer)):
        return Fraction(int(value))
    if isinstance(value, str):
        try:
            return Fraction(value.strip())
        except (ValueError, ZeroDivisionError):
            return as_rational(float(value), max_denominator)
    x = float(value)
    if not math.isfinite(x):
        return None
    approx = Fraction(x).limit_denominator(max_denominator)
    if float(approx) == x:
        return approx
    return None


def _coerce(value: Number | str) -> Number:
    """Rational if possible, float otherwise."""
    r = as_rational(value)
    return r if r is not None else float(value)


@dataclass(frozen=True)
class Homothety:
    """The map ``x -> ratio * x + translation`` (1-D or 2-D)."""

    ratio: Number
    translation: tuple

    def __post_init__(self):
        ratio = _coerce(self.ratio)
        if not 0 < ratio < 1:
            raise DomainError(f"homothety ratio must lie in (0, 1), got {self.ratio}")
        t = tuple(_coerce(v) for v in self.translation)
        if len(t) not in (1, 2):
            raise DomainError("translation must have 1 or 2 coordinates")
        object.__setattr__(self, "ratio", ratio)
        object.__setattr__(self, "translation", t)

    @property
    def dim(self) -> int:
        return len(self.translation)

    @property
    def is_exact(self) -> bool:
        return all(isinstance(v, Fraction) for v in (self.ratio, *self.translation))

    def __call__(self, point):
        return tuple(self.ratio * p + t for p, t in zip(point, self.translation))


# The maps in this package are planar homotheties unless projected.
Homothety2 = Homothety


@dataclass(frozen=True)
class IfsSystem:
    """A finite family of homotheties sharing a dimension."""

    maps: tuple

    def __post_init__(self):
        maps = tuple(self.maps)
        if not maps:
            raise DomainError("an IFS needs at least one map")
        dims = {m.dim for m in maps}
        if len(dims) != 1:
            raise DomainError("all maps of an IFS must have the same dimension")
        object.__setattr__(self, "maps", maps)

    @classmethod
    def from_translations(cls, ratio: Number, translations: Iterable[Sequence[Number]]) -> "IfsSystem":
        return cls(tuple(Homothety(ratio, tuple(t)) for t in translations))

    @property
    def dim(self) -> int:
        return self.maps[0].dim

    @property
    def n_maps(self) -> int:
        return len(self.maps)

    @property
    def common_ratio(self) -> Optional[Number]:
        first = self.maps[0].ratio
        if all(m.ratio == first for m in self.maps):
            return first
        return None

    @property
    def is_exact(self) -> bool:
        return all(m.is_exact for m in self.maps)

    def translations(self) -> np.ndarray:
        return np.array([[float(v) for v in m.translation] for m in self.maps])

    def fixed_points(self) -> list:
        return [tuple(t / (1 - m.ratio) for t in m.translation) for m in self.maps]

    def bounding_box(self):
        """Lower-left corner and side of a square mapped into itself by every map.

        Any square containing all fixed points works; we take the tightest
        one anchored at the componentwise minimum.
        """
        fixed = self.fixed_points()
        lows = tuple(min(p[k] for p in fixed) for k in range(self.dim))
        highs = tuple(max(p[k] for p in fixed) for k in range(self.dim))
        side = max(h - lo for h, lo in zip(highs, lows))
        if side == 0:
            side = Fraction(1) if self.is_exact else 1.0
        return lows, side


@dataclass(frozen=True)
class ExactCorners:
    """Integer numerators of box corners and side over a common denominator."""

    numerators: np.ndarray
    side_numerator: int
    denominator: int

    def corner(self, index: int) -> tuple:
        return tuple(Fraction(int(v), self.denominator) for v in self.numerators[index])

    @property
    def side(self) -> Fraction:
        return Fraction(self.side_numerator, self.denominator)


@dataclass(frozen=True)
class BoxCover:
    """Equal-sided boxes (squares, or intervals in 1-D) given by lower corners."""

    depth: int
    side: float
    corners: np.ndarray
    exact: Optional[ExactCorners] = field(default=None, compare=False)

    def __post_init__(self):
        corners = np.asarray(self.corners, dtype=float)
        if corners.ndim == 1:
            corners = corners[:, None]
        corners.setflags(write=False)
        object.__setattr__(self, "corners", corners)
        if self.side < 0:
            raise DomainError("box side must be nonnegative")

    @property
    def dim(self) -> int:
        return self.corners.shape[1]

    def __len__(self) -> int:
        return self.corners.shape[0]

    @property
    def count(self) -> int:
        return len(self)

    @property
    def exact_side(self) -> Optional[Fraction]:
        return self.exact.side if self.exact is not None else None

    def intervals(self) -> list:
        """Boxes as ``(lo, hi)`` tuples (1-D covers), exact when possible."""
        if self.dim != 1:
            raise DomainError("intervals() is only defined for 1-D covers")
        if self.exact is not None:
            d = self.exact.denominator
            s = self.exact.side_numerator
            return [(Fraction(int(v), d), Fraction(int(v) + s, d)) for v in self.exact.numerators[:, 0]]
        return [(float(v), float(v) + self.side) for v in self.corners[:, 0]]

    def bounds(self):
        lo = self.corners.min(axis=0)
        hi = self.corners.max(axis=0) + self.side
        return lo, hi

    def translated(self, offset: Sequence[float]) -> "BoxCover":
        return BoxCover(self.depth, self.side, self.corners + np.asarray(offset, dtype=float))

    def total_measure(self) -> float:
        return len(self) * self.side ** self.dim

    def to_csv(self, path: Optional[Path] = None) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        if self.dim == 2:
            writer.writerow(["x", "y", "side"])
            for x, y in self.corners:
                writer.writerow([repr(float(x)), repr(float(y)), repr(float(self.side))])
        else:
            writer.writerow(["x", "side"])
            for (x,) in self.corners:
                writer.writerow([repr(float(x)), repr(float(self.side))])
        text = buf.getvalue()
        if path is not None:
            Path(path).write_text(text)
        return text


def _check_depth(n_maps: int, depth: int, max_boxes: int = MAX_BOXES) -> None:
    if depth < 0:
        raise DomainError(f"depth must be nonnegative, got {depth}")
    if n_maps > 1 and depth * math.log(n_maps) > math.log(max_boxes) + 1e-12:
        raise CapacityError(
            f"{n_maps}^{depth} boxes exceeds the cap of {max_boxes}; lower the depth"
        )


def _enumerate_exact(ratio: Fraction, translations, origin, side0: Fraction, depth: int):
    """Word-ordered level-``depth`` corners as int64 numerators, or None on overflow."""
    a, b = ratio.numerator, ratio.denominator
    dens = [side0.denominator] + [v.denominator for v in origin]
    dens += [v.denominator for t in translations for v in t]
    base = math.lcm(*dens)
    reach = max([abs(v) for v in origin] + [abs(v) for t in translations for v in t] + [Fraction(1)])
    scale = base * b ** depth
    span = (reach / (1 - ratio) + side0 + 1) * scale
    if span >= _INT64_LIMIT:
        return None
    nums = np.array([[int(v * base) for v in origin]], dtype=np.int64)
    tnum = np.array([[int(v * base) for v in t] for t in translations], dtype=np.int64)
    for k in range(1, depth + 1):
        bk = b ** k
        # level k = union_i S_i(level k-1); S_i applied outermost keeps word order
        nums = (a * nums[None, :, :] + (tnum * bk)[:, None, :]).reshape(-1, nums.shape[1])
    side_num = int(side0 * base) * a ** depth
    return nums, side_num, scale


def _enumerate_float(ratio: float, translations, origin, side0: float, depth: int):
    pts = np.array([[float(v) for v in origin]])
    t = np.array([[float(v) for v in tr] for tr in translations])
    for _ in range(depth):
        pts = (ratio * pts[None, :, :] + t[:, None, :]).reshape(-1, pts.shape[1])
    return pts, float(side0) * float(ratio) ** depth


def _build_cover(ratio, translations, origin, side0, depth: int, dedupe: bool) -> BoxCover:
    exact = None
    rational = (
        isinstance(ratio, Fraction)
        and isinstance(side0, Fraction)
        and all(isinstance(v, Fraction) for v in origin)
        and all(isinstance(v, Fraction) for t in translations for v in t)
    )
    if rational:
        out = _enumerate_exact(ratio, translations, origin, side0, depth)
        if out is not None:
            nums, side_num, scale = out
            if dedupe:
                nums = np.unique(nums, axis=0)
            exact = ExactCorners(nums, side_num, scale)
            corners = nums / scale
            side = side_num / scale
            return BoxCover(depth, side, corners, exact)
    corners, side = _enumerate_float(float(ratio), translations, origin, side0, depth)
    if dedupe:
        key = np.round(corners / max(side, 1e-300) * 1e6)
        _, idx = np.unique(key, axis=0, return_index=True)
        corners = corners[np.sort(idx)]
        order = np.lexsort(corners.T[::-1])
        corners = corners[order]
    return BoxCover(depth, side, corners)


def _check_gamma(gamma) -> Number:
    g = _coerce(gamma)
    if not 0 < g <= Fraction(1, 2):
        raise DomainError(f"gamma must lie in (0, 1/2], got {gamma}")
    return g


def cantor_system(gamma: Number | str) -> IfsSystem:
    """The two maps ``gamma*x`` and ``gamma*x + 1 - gamma`` generating C_gamma."""
    g = _check_gamma(gamma)
    return IfsSystem.from_translations(g, [(0 * g,), (1 - g,)])


def four_corner_system(gamma: Number | str = Fraction(1, 4)) -> IfsSystem:
    g = _check_gamma(gamma)
    c = 1 - g
    zero = 0 * g
    return IfsSystem.from_translations(g, [(zero, zero), (zero, c), (c, zero), (c, c)])


def cantor_intervals(gamma: Number | str, depth: int) -> BoxCover:
    """Level-``depth`` intervals of the symmetric Cantor set C_gamma (1-D cover)."""
    g = _check_gamma(gamma)
    _check_depth(2, depth)
    one = Fraction(1) if isinstance(g, Fraction) else 1.0
    return _build_cover(g, [(0 * g,), (1 - g,)], (0 * one,), one, depth, dedupe=True)


def four_corner_cover(gamma: Number | str, depth: int) -> BoxCover:
    """Level-``depth`` squares of C(gamma) = C_gamma x C_gamma."""
    system = four_corner_system(gamma)
    _check_depth(4, depth)
    g = system.common_ratio
    one = Fraction(1) if isinstance(g, Fraction) else 1.0
    return _build_cover(
        g, [m.translation for m in system.maps], (0 * one, 0 * one), one, depth, dedupe=True
    )


def ifs_cover(
    system: IfsSystem,
    depth: int,
    *,
    initial: Optional[tuple] = None,
    dedupe: bool = True,
    max_boxes: int = MAX_BOXES,
) -> BoxCover:
    """Images of the bounding square under all length-``depth`` compositions.

    ``initial`` overrides the starting box as ``(lower_corner, side)``.  With
    ``dedupe=False`` the boxes come out in word order (first letter slowest),
    which lets callers match boxes across related systems.
    """
    ratio = system.common_ratio
    if ratio is None:
        raise UnsupportedConfigurationError("ifs_cover needs equal contraction ratios")
    _check_depth(system.n_maps, depth, max_boxes)
    if initial is None:
        origin, side0 = system.bounding_box()
    else:
        origin, side0 = initial
        origin = tuple(_coerce(v) for v in origin)
        side0 = _coerce(side0)
    return _build_cover(
        ratio, [m.translation for m in system.maps], tuple(origin), side0, depth, dedupe
    )


def similarity_dimension(system: IfsSystem) -> float:
    """``log N / -log ratio`` for an equal-ratio system."""
    ratio = system.common_ratio
    if ratio is None:
        raise UnsupportedConfigurationError("similarity dimension needs equal ratios")
    return math.log(system.n_maps) / -math.log(float(ratio))


def _branch_boxes(system: IfsSystem, depth: int):
    """Depth-level boxes with the index of their first-generation branch."""
    cover = ifs_cover(system, depth, dedupe=False)
    per_branch = len(cover) // system.n_maps
    labels = np.repeat(np.arange(system.n_maps), per_branch)
    return cover, labels


def verify_ssc(system: IfsSystem, depth: int = 1) -> bool:
    """Certify separation: boxes of distinct first-level branches have disjoint interiors.

    Boxes that only share boundary points do not count as overlapping.
    """
    if depth < 1:
        raise DomainError("verify_ssc needs depth >= 1")
    cover, labels = _branch_boxes(system, depth)
    if cover.exact is not None and np.abs(cover.exact.numerators).max(initial=0) < _FLOAT_EXACT_LIMIT:
        pts = cover.exact.numerators.astype(float)
        # integer corners: interiors meet iff every coordinate differs by < side
        radius = cover.exact.side_numerator - 0.5
    else:
        pts = cover.corners
        radius = cover.side * (1 - 1e-9)
    if radius < 0:
        return len(np.unique(pts, axis=0)) == len(pts) or system.n_maps == 1
    tree = cKDTree(pts)
    pairs = tree.query_pairs(radius, p=np.inf, output_type="ndarray")
    if len(pairs) == 0:
        return True
    return bool(np.all(labels[pairs[:, 0]] == labels[pairs[:, 1]]))


def projected_ifs(system: IfsSystem, theta: float) -> IfsSystem:
    """The 1-D system of scalar projections onto the unit vector (cos theta, sin theta).

    Maps that become identical are kept; use :func:`distinct_maps` to count them.
    """
    if system.dim != 2:
        raise DomainError("projected_ifs expects a planar system")
    if system.common_ratio is None:
        raise UnsupportedConfigurationError("projection needs equal ratios")
    c, s = math.cos(theta), math.sin(theta)
    maps = []
    for m in system.maps:
        tx, ty = (float(v) for v in m.translation)
        maps.append(Homothety(float(m.ratio), (tx * c + ty * s,)))
    return IfsSystem(tuple(maps))


def distinct_maps(system: IfsSystem, tol: float = 1e-12) -> int:
    keys = set()
    for m in system.maps:
        keys.add((round(float(m.ratio) / tol),) + tuple(round(float(t) / tol) for t in m.translation))
    return len(keys)


@dataclass(frozen=True)
class CounterexampleIfs:
    """A counterexample IFS plus the pairs aligned with each projection angle."""

    system: IfsSystem
    angles: tuple
    aligned_pairs: tuple
    mode: str
    attempts: int


def counterexample_ifs(
    angles: Sequence[float],
    lam: float,
    mode: str = "a-prime",
    *,
    n_maps: Optional[int] = None,
    step: Optional[float] = None,
    seed: int = 0,
    max_attempts: int = 200_000,
) -> CounterexampleIfs:
    """Equal-ratio planar IFS whose projection onto each angle loses one map.

    For every angle ``alpha_i`` two maps get translations differing by a
    multiple of the direction perpendicular to ``(cos alpha_i, sin alpha_i)``,
    so their projections coincide, while all first-level squares stay pairwise
    disjoint.  Mode ``a-prime`` needs ``1/N < lam < 1/(N-1)`` (dimension above
    one), mode ``b-prime`` needs ``0 < lam < 1/N``.  Translations come from a
    lattice of spacing ``step`` (default ``1/(4N)``) visited in a seeded order;
    the first consistent assignment is returned.
    """
    angles = tuple(float(a) for a in angles)
    n = len(angles)
    if n < 1:
        raise DomainError("at least one angle is required")
    if mode not in ("a-prime", "b-prime"):
        raise DomainError(f"unknown mode {mode!r}")
    if n_maps is None:
        n_maps = 2 * n
        if mode == "a-prime" and n_maps == 2:
            # two equal-ratio maps have a collinear attractor, so SSC caps its dimension at 1
            n_maps = 4
    if n_maps < 2 * n:
        raise DomainError(f"n_maps={n_maps} cannot host {n} aligned pairs")
    N = n_maps
    lam = float(lam)
    if mode == "a-prime" and not (1 / N < lam < 1 / (N - 1)):
        raise DomainError(f"mode a-prime needs 1/{N} < lambda < 1/{N - 1}, got {lam}")
    if mode == "b-prime" and not (0 < lam < 1 / N):
        raise DomainError(f"mode b-prime needs 0 < lambda < 1/{N}, got {lam}")
    if step is None:
        step = 1 / (4 * N)
    hi = 1 - lam
    grid = np.arange(0.0, hi + 1e-12, step)
    rng = np.random.default_rng(seed)
    lattice = [(float(x), float(y)) for x, y in itertools.product(grid, grid)]
    lattice = [lattice[i] for i in rng.permutation(len(lattice))]
    offsets = [k * step for k in range(1, len(grid) + 1)]
    offsets = [s for pair in zip(offsets, [-o for o in offsets]) for s in pair]

    def fits(p):
        return -1e-12 <= p[0] <= hi + 1e-12 and -1e-12 <= p[1] <= hi + 1e-12

    def separated(p, placed):
        return all(max(abs(p[0] - q[0]), abs(p[1] - q[1])) >= lam - 1e-12 for q in placed)

    attempts = 0

    def candidates(slot):
        if slot < n:
            a = angles[slot]
            d = (-math.sin(a), math.cos(a))
            for t1 in lattice:
                for s in offsets:
                    t2 = (t1[0] + s * d[0], t1[1] + s * d[1])
                    yield (t1, t2)
        else:
            for t in lattice:
                yield (t,)

    slots = n + (N - 2 * n)

    def search(slot, placed):
        nonlocal attempts
        if slot == slots:
            return placed
        for cand in candidates(slot):
            attempts += 1
            if attempts > max_attempts:
                raise ConstructionError("no SSC translation assignment found", attempts)
            if not all(fits(p) for p in cand):
                continue
            if len(cand) == 2 and not separated(cand[1], [cand[0]]):
                continue
            if not all(separated(p, placed) for p in cand):
                continue
            found = search(slot + 1, placed + list(cand))
            if found is not None:
                return found
        return None

    placed = search(0, [])
    if placed is None:
        raise ConstructionError("translation lattice exhausted", attempts)
    system = IfsSystem.from_translations(lam, placed)
    if not verify_ssc(system, 1):
        raise ConstructionError("constructed system failed the SSC check", attempts)
    pairs = tuple((2 * i, 2 * i + 1) for i in range(n))
    return CounterexampleIfs(system, angles, pairs, mode, attempts)


def format_ifs(system: IfsSystem) -> str:
    """One map per line: ``ratio tx ty`` (``ratio tx`` in 1-D)."""
    lines = []
    for m in system.maps:
        fields = [_fmt(m.ratio)] + [_fmt(t) for t in m.translation]
        lines.append(" ".join(fields))
    return "\n".join(lines) + "\n"


def _fmt(v) -> str:
    if isinstance(v, Fraction):
        return str(v)
    return repr(float(v))


def parse_ifs(text: str) -> IfsSystem:
    maps = []
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.split()
        if len(parts) not in (2, 3):
            raise DomainError(f"line {lineno}: expected 'ratio tx [ty]', got {line!r}")
        vals = [_coerce(p) for p in parts]
        maps.append(Homothety(vals[0], tuple(vals[1:])))
    return IfsSystem(tuple(maps))


def read_ifs(path) -> IfsSystem:
    return parse_ifs(Path(path).read_text())


def write_ifs(system: IfsSystem, path) -> None:
    Path(path).write_text(format_ifs(system))
