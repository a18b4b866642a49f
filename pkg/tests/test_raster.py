import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from fractal_sumsets.curves import circle, polygon_ntheta, sample_curve
from fractal_sumsets.errors import CapacityError, DomainError
from fractal_sumsets.ifs import BoxCover, four_corner_cover
from fractal_sumsets.raster import (
    area_estimate,
    box_count,
    circle_hits,
    disk_cover,
    empty_raster,
    interior_probe,
    minkowski_raster,
    random_circle_mc,
    read_pgm,
    write_pgm,
)


def _brute_hits(cover, centers, radius):
    lo, hi = cover.corners, cover.corners + cover.side
    out = []
    for c in centers:
        near = np.hypot(np.clip(c[0], lo[:, 0], hi[:, 0]) - c[0], np.clip(c[1], lo[:, 1], hi[:, 1]) - c[1])
        far = np.hypot(np.maximum(abs(lo[:, 0] - c[0]), abs(hi[:, 0] - c[0])),
                       np.maximum(abs(lo[:, 1] - c[1]), abs(hi[:, 1] - c[1])))
        out.append(bool(np.any((near <= radius) & (radius <= far))))
    return np.array(out)


def test_raster_contains_true_sumset():
    cover = four_corner_cover("1/4", 3)
    eps = 2.0 ** -6
    grid = minkowski_raster(cover, sample_curve(circle(), eps), eps)
    rng = np.random.default_rng(0)
    k = rng.integers(0, len(cover), 5000)
    a = cover.corners[k] + cover.side * rng.random((5000, 2))
    t = rng.uniform(0, 2 * math.pi, 5000)
    pts = a + np.column_stack([np.cos(t), np.sin(t)])
    idx = grid.cell_index(pts)
    assert grid.occupancy[idx[:, 0], idx[:, 1]].all()


def test_single_box_plus_segment_area():
    # a point-sized box plus the unit square perimeter covers a thin band
    cover = BoxCover(0, 0.0, np.array([[0.0, 0.0]]))
    eps = 2.0 ** -7
    grid = minkowski_raster(cover, sample_curve(polygon_ntheta(0.0), eps), eps)
    # perimeter 4 times a band of two or three cells
    assert 4 * eps <= area_estimate(grid) <= 4 * 3 * eps + 16 * eps ** 2
    assert box_count(grid) == int(np.count_nonzero(grid.occupancy))


def test_pgm_roundtrip(tmp_path):
    cover = four_corner_cover("1/4", 2)
    grid = minkowski_raster(cover, sample_curve(circle(), 2.0 ** -4), 2.0 ** -4)
    write_pgm(grid, tmp_path / "g.pgm")
    assert np.array_equal(read_pgm(tmp_path / "g.pgm"), grid.occupancy)


def test_interior_probe():
    cover = disk_cover(0.5, 1 / 64)
    grid = minkowski_raster(cover, sample_curve(circle(radius=1e-9), 1e-9), 1 / 64)
    hit = interior_probe(grid, 1 / 16)
    assert hit is not None and math.hypot(*hit) < 0.5 - 1 / 16
    point = BoxCover(0, 0.0, np.array([[0.0, 0.0]]))
    ring = minkowski_raster(point, sample_curve(circle(), 2.0 ** -6), 2.0 ** -6)
    assert interior_probe(ring, 2.0 ** -4) is None
    with pytest.raises(DomainError):
        interior_probe(grid, 1 / 128)


def test_capacity_refusal():
    with pytest.raises(CapacityError):
        empty_raster((0, 0, 1, 1), 2.0 ** -14)


@settings(max_examples=10, deadline=None)
@given(st.integers(0, 2 ** 32 - 1), st.floats(0.3, 1.5))
def test_circle_hits_match_brute_force(seed, radius):
    rng = np.random.default_rng(seed)
    centers = rng.uniform(-1.5, 2.5, (300, 2))
    for cover in (four_corner_cover("1/4", 3), disk_cover(1.0, 1 / 16)):
        assert np.array_equal(circle_hits(cover, centers, radius), _brute_hits(cover, centers, radius))


def test_mc_disk_and_determinism():
    a = random_circle_mc(disk_cover(), (-2, -2, 2, 2), 1.0, 20_000, 3)
    b = random_circle_mc(disk_cover(), (-2, -2, 2, 2), 1.0, 20_000, 3, batch=4096)
    assert abs(a.p_hat - math.pi / 4) <= 3 * a.ci95_halfwidth
    assert a == random_circle_mc(disk_cover(), (-2, -2, 2, 2), 1.0, 20_000, 3)
    assert b.trials == a.trials
    with pytest.raises(DomainError):
        random_circle_mc(disk_cover(), (-2, -2, 2, 2), 1.0, 0, 0)
