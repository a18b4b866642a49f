"""Occupancy-grid rasterization of Minkowski sums and the random-circle experiment."""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from pathlib import Path
from typing import Optional, Sequence

import numpy as np
from scipy import ndimage

from .curves import CurveSample
from .errors import CapacityError, DomainError
from .ifs import BoxCover

MAX_CELLS = 2 ** 26
_CHUNK = 2 ** 21


@dataclass(frozen=True)
class GridRaster:
    """Boolean grid over ``window = (x0, y0, x1, y1)``; ``occupancy[i, j]`` is cell
    ``[x0 + i*eps, x0 + (i+1)*eps) x [y0 + j*eps, y0 + (j+1)*eps)``."""

    window: tuple
    eps: float
    occupancy: np.ndarray
    slack: float = 0.0

    @property
    def shape(self) -> tuple:
        return self.occupancy.shape

    def cell_center(self, i: int, j: int) -> tuple:
        x0, y0 = self.window[:2]
        return (x0 + (i + 0.5) * self.eps, y0 + (j + 0.5) * self.eps)

    def cell_index(self, points: np.ndarray) -> np.ndarray:
        x0, y0 = self.window[:2]
        return np.floor((np.asarray(points) - (x0, y0)) / self.eps).astype(np.int64)


def grid_shape(window: Sequence[float], eps: float) -> tuple:
    x0, y0, x1, y1 = window
    # round away float noise before the ceiling so exact multiples of eps stay exact
    nx = math.ceil(round((x1 - x0) / eps, 9))
    ny = math.ceil(round((y1 - y0) / eps, 9))
    return max(nx, 1), max(ny, 1)


def empty_raster(window: Sequence[float], eps: float, max_cells: int = MAX_CELLS) -> GridRaster:
    if not eps > 0:
        raise DomainError(f"eps must be positive, got {eps}")
    nx, ny = grid_shape(window, eps)
    if nx * ny > max_cells:
        raise CapacityError(f"{nx}x{ny} grid exceeds the cap of {max_cells} cells")
    return GridRaster(tuple(float(v) for v in window), float(eps), np.zeros((nx, ny), dtype=bool))


def auto_window(cover: BoxCover, sample: CurveSample, eps: float) -> tuple:
    lo, hi = cover.bounds()
    pmin = sample.points.min(axis=0)
    pmax = sample.points.max(axis=0)
    pad = 2 * eps + sample.hausdorff_bound
    return (
        float(lo[0] + pmin[0] - pad),
        float(lo[1] + pmin[1] - pad),
        float(hi[0] + pmax[0] + pad),
        float(hi[1] + pmax[1] + pad),
    )


def stamp_rectangles(occ: np.ndarray, window, eps: float, lo: np.ndarray, hi: np.ndarray) -> None:
    """Mark every cell meeting a closed rectangle ``[lo, hi]`` (arrays of shape (m, 2))."""
    nx, ny = occ.shape
    x0, y0 = window[:2]
    i0 = np.floor((lo[:, 0] - x0) / eps).astype(np.int64)
    i1 = np.floor((hi[:, 0] - x0) / eps).astype(np.int64)
    j0 = np.floor((lo[:, 1] - y0) / eps).astype(np.int64)
    j1 = np.floor((hi[:, 1] - y0) / eps).astype(np.int64)
    keep = (i1 >= 0) & (i0 < nx) & (j1 >= 0) & (j0 < ny)
    if not keep.all():
        i0, i1, j0, j1 = i0[keep], i1[keep], j0[keep], j1[keep]
    if i0.size == 0:
        return
    np.clip(i0, 0, nx - 1, out=i0)
    np.clip(i1, 0, nx - 1, out=i1)
    np.clip(j0, 0, ny - 1, out=j0)
    np.clip(j1, 0, ny - 1, out=j1)
    flat = occ.reshape(-1)
    span_i = int((i1 - i0).max()) + 1
    span_j = int((j1 - j0).max()) + 1
    for di in range(span_i):
        ii = i0 + di
        mi = ii <= i1
        for dj in range(span_j):
            jj = j0 + dj
            m = mi & (jj <= j1)
            if di == 0 and dj == 0:
                flat[ii * ny + jj] = True
            else:
                flat[ii[m] * ny + jj[m]] = True


def minkowski_raster(
    cover: BoxCover,
    sample: CurveSample,
    eps: float,
    window: Optional[Sequence[float]] = None,
    *,
    max_cells: int = MAX_CELLS,
) -> GridRaster:
    """Occupancy grid of (cover boxes) + (curve samples).

    Each box translated by each sample point, grown by the sample's
    Hausdorff bound, marks every cell it meets, so the grid contains the
    cell cover of the true sumset.
    """
    if not eps > 0:
        raise DomainError(f"eps must be positive, got {eps}")
    if len(cover) == 0:
        raise DomainError("cover is empty")
    if len(sample) == 0:
        raise DomainError("curve sample is empty")
    if cover.dim != 2:
        raise DomainError("minkowski_raster needs a planar cover")
    if cover.side > eps * (1 + 1e-12):
        warnings.warn(f"cover side {cover.side:.3g} exceeds eps {eps:.3g}", stacklevel=2)
    if sample.max_gap > eps * (1 + 1e-12):
        warnings.warn(f"sample gap {sample.max_gap:.3g} exceeds eps {eps:.3g}", stacklevel=2)
    if window is None:
        window = auto_window(cover, sample, eps)
    raster = empty_raster(window, eps, max_cells)
    h = sample.hausdorff_bound
    s = cover.side
    boxes = cover.corners
    pts = sample.points
    per = max(1, _CHUNK // len(boxes))
    for start in range(0, len(pts), per):
        p = pts[start:start + per]
        lo = (boxes[:, None, :] + p[None, :, :]).reshape(-1, 2) - h
        stamp_rectangles(raster.occupancy, raster.window, eps, lo, lo + (s + 2 * h))
    slack = s + h + eps * math.sqrt(2)
    return GridRaster(raster.window, eps, raster.occupancy, slack)


def box_count(raster: GridRaster) -> int:
    return int(np.count_nonzero(raster.occupancy))


def area_estimate(raster: GridRaster) -> float:
    return raster.eps ** 2 * box_count(raster)


def interior_probe(raster: GridRaster, rho: float) -> Optional[tuple]:
    """A cell centre whose closed ``rho``-disk lies inside occupied cells, if any.

    Cells outside the window count as empty.  Among qualifying cells the one
    deepest inside the occupied region is returned.
    """
    if rho < 3 * raster.eps * (1 - 1e-12):
        raise DomainError(f"rho={rho} is below 3*eps={3 * raster.eps}")
    occ = raster.occupancy
    if not occ.any():
        return None
    padded = np.pad(occ, 1, constant_values=False)
    depth = ndimage.distance_transform_edt(padded)[1:-1, 1:-1]
    # a cell meeting the disk has its centre within rho + eps/sqrt(2) of ours
    need = rho / raster.eps + math.sqrt(0.5)
    best = np.unravel_index(int(np.argmax(depth)), depth.shape)
    if depth[best] <= need:
        return None
    return raster.cell_center(*best)


def write_pgm(raster: GridRaster, path) -> None:
    """Binary PGM (P5): 255 for occupied cells, top row = largest y."""
    nx, ny = raster.shape
    img = np.where(raster.occupancy.T[::-1], 255, 0).astype(np.uint8)
    header = f"P5\n{nx} {ny}\n255\n".encode("ascii")
    Path(path).write_bytes(header + img.tobytes())


def read_pgm(path) -> np.ndarray:
    """Inverse of :func:`write_pgm`; returns the occupancy array."""
    data = Path(path).read_bytes()
    parts = data.split(b"\n", 3)
    if parts[0] != b"P5":
        raise DomainError("not a binary PGM file")
    nx, ny = (int(v) for v in parts[1].split())
    img = np.frombuffer(parts[3], dtype=np.uint8).reshape(ny, nx)
    return (img[::-1].T > 0)


# --- random circles ---------------------------------------------------------


@dataclass(frozen=True)
class McEstimate:
    hits: int
    trials: int
    p_hat: float
    ci95_halfwidth: float
    seed: int

    @classmethod
    def from_counts(cls, hits: int, trials: int, seed: int) -> "McEstimate":
        p = hits / trials
        return cls(hits, trials, p, 1.96 * math.sqrt(p * (1 - p) / trials), seed)

    def csv_row(self) -> str:
        return f"{self.seed},{self.trials},{self.hits},{self.p_hat!r},{self.ci95_halfwidth!r}"


MC_CSV_HEADER = "seed,trials,hits,p_hat,ci95"


def disk_cover(radius: float = 1.0, side: float = 1 / 256, center=(0.0, 0.0)) -> BoxCover:
    """Grid squares of the given side whose centres lie in the closed disk."""
    n = math.ceil(radius / side)
    k = np.arange(-n, n)
    gx, gy = np.meshgrid(k, k, indexing="ij")
    corners = np.column_stack([gx.ravel(), gy.ravel()]) * side
    centres = corners + side / 2
    inside = np.hypot(*centres.T) <= radius
    return BoxCover(0, side, corners[inside] + np.asarray(center, dtype=float))


def _split_boundary(cover: BoxCover):
    """Boxes touching the complement of the union, and a membership lookup.

    On an aligned grid a box whose eight neighbours are all present lies in
    the interior of the union.  Unaligned covers treat every box as boundary.
    """
    corners = cover.corners
    s = cover.side
    origin = corners.min(axis=0)
    rel = (corners - origin) / s if s > 0 else np.zeros_like(corners)
    idx = np.rint(rel).astype(np.int64)
    aligned = s > 0 and np.allclose(rel, idx, atol=1e-9)
    if not aligned:
        return corners, None
    width = int(idx[:, 1].max()) + 3
    keys = np.unique((idx[:, 0] + 1) * width + (idx[:, 1] + 1))
    inner = np.ones(len(idx), dtype=bool)
    for di in (-1, 0, 1):
        for dj in (-1, 0, 1):
            if di == 0 and dj == 0:
                continue
            nb = (idx[:, 0] + 1 + di) * width + (idx[:, 1] + 1 + dj)
            pos = np.clip(np.searchsorted(keys, nb), 0, len(keys) - 1)
            inner &= keys[pos] == nb
    lookup = (origin, s, width, keys)
    return corners[~inner], lookup


def _contains(lookup, points: np.ndarray) -> np.ndarray:
    origin, s, width, keys = lookup
    idx = np.floor((points - origin) / s).astype(np.int64)
    nb = (idx[:, 0] + 1) * width + (idx[:, 1] + 1)
    ok = (idx[:, 0] >= 0) & (idx[:, 1] >= 0) & (idx[:, 1] < width - 2)
    pos = np.clip(np.searchsorted(keys, nb), 0, len(keys) - 1)
    return ok & (keys[pos] == nb)


@dataclass(frozen=True)
class _BoxTree:
    """Coarsening levels over the boxes; level 0 is the boxes themselves."""

    lo: list
    hi: list
    child_start: list
    child_index: list


def _box_tree(corners: np.ndarray, side: float) -> _BoxTree:
    lo = [corners]
    hi = [corners + side]
    child_start: list = []
    child_index: list = []
    if len(corners) == 0:
        return _BoxTree(lo, hi, child_start, child_index)
    origin = corners.min(axis=0)
    cell = side if side > 0 else 1.0
    keys = np.floor((corners - origin) / cell).astype(np.int64)
    while len(lo[-1]) > 1:
        keys = keys // 2
        flat = keys[:, 0] * (int(keys[:, 1].max()) + 1) + keys[:, 1]
        order = np.argsort(flat, kind="stable")
        first = np.flatnonzero(np.r_[True, np.diff(flat[order]) != 0])
        lo.append(np.minimum.reduceat(lo[-1][order], first, axis=0))
        hi.append(np.maximum.reduceat(hi[-1][order], first, axis=0))
        child_start.append(np.append(first, len(order)))
        child_index.append(order)
        keys = keys[order][first]
    return _BoxTree(lo, hi, child_start, child_index)


def _ring_meets(c: np.ndarray, lo: np.ndarray, hi: np.ndarray, r2: float) -> np.ndarray:
    dx = np.maximum(np.maximum(lo[:, 0] - c[:, 0], c[:, 0] - hi[:, 0]), 0.0)
    dy = np.maximum(np.maximum(lo[:, 1] - c[:, 1], c[:, 1] - hi[:, 1]), 0.0)
    fx = np.maximum(np.abs(lo[:, 0] - c[:, 0]), np.abs(hi[:, 0] - c[:, 0]))
    fy = np.maximum(np.abs(lo[:, 1] - c[:, 1]), np.abs(hi[:, 1] - c[:, 1]))
    return (dx * dx + dy * dy <= r2) & (r2 <= fx * fx + fy * fy)


def circle_hits(cover: BoxCover, centers: np.ndarray, radius: float, *, chunk: int = 8192) -> np.ndarray:
    """For each centre, whether the circle of ``radius`` meets some cover box.

    A circle meets a closed box iff the nearest and farthest box points from
    the centre straddle the radius.  The same test on the bounding rectangle
    of a group of boxes is necessary for meeting any of them, so the search
    descends a coarsening tree and only opens groups that pass.
    """
    boundary, lookup = _split_boundary(cover)
    tree = _box_tree(boundary, cover.side)
    centers = np.asarray(centers, dtype=float)
    out = np.zeros(len(centers), dtype=bool)
    r2 = radius * radius
    top = len(tree.lo) - 1
    if len(boundary):
        for start in range(0, len(centers), chunk):
            c = centers[start:start + chunk]
            ci = np.repeat(np.arange(len(c)), len(tree.lo[top]))
            node = np.tile(np.arange(len(tree.lo[top])), len(c))
            keep = _ring_meets(c[ci], tree.lo[top][node], tree.hi[top][node], r2)
            ci, node = ci[keep], node[keep]
            for level in range(top, 0, -1):
                bounds = tree.child_start[level - 1]
                counts = bounds[node + 1] - bounds[node]
                ci = np.repeat(ci, counts)
                offs = np.arange(int(counts.sum())) - np.repeat(np.cumsum(counts) - counts, counts)
                node = tree.child_index[level - 1][np.repeat(bounds[node], counts) + offs]
                keep = _ring_meets(c[ci], tree.lo[level - 1][node], tree.hi[level - 1][node], r2)
                ci, node = ci[keep], node[keep]
            out[start + np.unique(ci)] = True
    if lookup is not None:
        # circles avoiding every boundary box can still lie wholly inside the union
        rest = ~out
        probe = centers[rest] + (radius, 0.0)
        out[rest] = _contains(lookup, probe)
    return out


def random_circle_mc(
    cover: BoxCover,
    window: Sequence[float],
    radius: float,
    trials: int,
    seed: int,
    *,
    batch: int = 65536,
) -> McEstimate:
    """Fraction of uniformly placed circles (centres in ``window``) meeting the cover.

    Centres come from a Philox counter-based stream keyed by ``seed``; batch
    ``k`` uses its own key so batches are independent of scheduling.
    """
    if trials < 1:
        raise DomainError("trials must be at least 1")
    if not radius > 0:
        raise DomainError("radius must be positive")
    x0, y0, x1, y1 = (float(v) for v in window)
    hits = 0
    for k, start in enumerate(range(0, trials, batch)):
        n = min(batch, trials - start)
        rng = np.random.Generator(np.random.Philox(key=[seed, k]))
        u = rng.random((n, 2))
        centers = np.column_stack([x0 + (x1 - x0) * u[:, 0], y0 + (y1 - y0) * u[:, 1]])
        hits += int(np.count_nonzero(circle_hits(cover, centers, radius)))
    return McEstimate.from_counts(hits, trials, seed)
