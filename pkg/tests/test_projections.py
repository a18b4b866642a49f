import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, strategies as st

from fractal_sumsets.angles import Slope
from fractal_sumsets.curves import polygon_ntheta
from fractal_sumsets.errors import DomainError
from fractal_sumsets.ifs import cantor_intervals, four_corner_cover
from fractal_sumsets.projections import (
    IntervalUnion,
    count_growth_exponent,
    distinct_projected,
    ladder_to_csv,
    merge_intervals,
    polygon_sumset_report,
    project_cover,
    projection_ladder,
    union_box_dimension,
)


@given(st.lists(st.tuples(st.integers(0, 60), st.integers(0, 8)), min_size=1, max_size=25))
def test_merge_matches_point_coverage(pairs):
    lo = np.array([a for a, _ in pairs])
    hi = lo + np.array([w for _, w in pairs])
    a, b = merge_intervals(lo, hi)
    # components are disjoint with gaps, and cover exactly the same half-integer grid
    assert np.all(a[1:] > b[:-1])
    grid = np.arange(-1, 140) / 2
    want = np.any((grid[:, None] >= lo) & (grid[:, None] <= hi), axis=1)
    got = np.any((grid[:, None] >= a) & (grid[:, None] <= b), axis=1)
    assert np.array_equal(want, got)


@pytest.mark.parametrize("depth", [1, 3, 6])
def test_half_slope_projection_is_full_interval(depth):
    u = project_cover(four_corner_cover("1/4", depth), Slope(1, 2))
    assert u.count == 1
    ex = u.exact
    assert Fraction(ex.total_numerator, ex.denominator) == 3
    assert u.total_length == pytest.approx(3 / math.sqrt(5), rel=1e-15)


@pytest.mark.parametrize("depth", [1, 2, 4, 6])
def test_diagonal_projection_counts(depth):
    cover = four_corner_cover("1/4", depth)
    u = project_cover(cover, Slope(1, 1))
    assert u.count == 3 ** depth
    assert distinct_projected(cover, Slope(1, 1)) == 3 ** depth


def test_axis_projection_is_cantor_set():
    for n in range(1, 6):
        u = project_cover(four_corner_cover("1/4", n), Slope(0, 1))
        c = cantor_intervals("1/4", n)
        assert u.count == len(c)
        assert u.total_length == pytest.approx(0.5 ** n)


@pytest.mark.parametrize("slope", [Slope(1, 2), Slope(1, 1), Slope(2, 3), Slope(-1, 3)])
def test_exact_and_float_projection_agree(slope):
    cover = four_corner_cover("1/4", 4)
    exact = project_cover(cover, slope)
    approx = project_cover(cover, slope.theta)
    assert exact.count == approx.count
    assert np.allclose(exact.lefts, approx.lefts, atol=1e-12)
    assert np.allclose(exact.rights, approx.rights, atol=1e-12)


@pytest.mark.parametrize("direction", [Slope(1, 2), Slope(1, 1), math.atan(math.sqrt(2))])
def test_projection_commutes_with_refinement(direction):
    # the projection of a finer cover lies inside the projection of the coarser one
    for n in range(1, 6):
        coarse = project_cover(four_corner_cover("1/4", n), direction)
        fine = project_cover(four_corner_cover("1/4", n + 1), direction)
        k = np.searchsorted(coarse.lefts, fine.lefts, side="right") - 1
        assert np.all(k >= 0)
        assert np.all(fine.rights <= coarse.rights[k] + 1e-12)
        assert fine.total_length <= coarse.total_length + 1e-12


def test_irrational_length_decreases():
    rows = projection_ladder("1/4", math.atan(math.sqrt(2)), 7, 3)
    lengths = [r.total_length for r in rows]
    assert all(b <= a + 1e-12 for a, b in zip(lengths, lengths[1:]))
    assert lengths[-1] < lengths[0]
    assert ladder_to_csv(rows).startswith("depth,length,count,distinct,longest\n")


def test_growth_exponent():
    rows = projection_ladder("1/4", Slope(1, 1), 6)
    assert count_growth_exponent(rows) == pytest.approx(math.log(3))


def test_union_box_dimension():
    single = IntervalUnion(np.array([0.0]), np.array([1.0]))
    assert union_box_dimension(single, 2.0 ** -12) == pytest.approx(1.0)
    c = cantor_intervals("1/3", 10)
    u = project_cover(c, 0.0)
    assert union_box_dimension(u, 3.0 ** -10) == pytest.approx(math.log(2) / math.log(3), abs=0.08)


def test_polygon_report():
    covers = [four_corner_cover("1/4", n) for n in range(4, 7)]
    big = polygon_sumset_report(covers, polygon_ntheta(Slope(1, 2)))
    assert big.interior and big.measure_positive and big.dimension == pytest.approx(2.0)
    small = polygon_sumset_report(covers, polygon_ntheta(Slope(1, 1)))
    assert not small.interior
    assert small.dimension < 2.0
    assert small.to_csv().count("\n") == 3


def test_polygon_report_needs_polygon():
    from fractal_sumsets.curves import circle

    with pytest.raises(DomainError):
        polygon_sumset_report(four_corner_cover("1/4", 2), circle())
