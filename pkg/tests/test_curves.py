import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from fractal_sumsets.angles import Slope
from fractal_sumsets.curves import (
    NONVANISHING,
    PIECEWISE_LINEAR,
    circle,
    curvature_class,
    graph,
    polygon_ntheta,
    polyline,
    sample_curve,
    side_angles,
)
from fractal_sumsets.errors import DomainError


@settings(max_examples=30, deadline=None)
@given(st.floats(0.1, 3.0), st.floats(1e-3, 0.2))
def test_circle_samples_respect_gap(radius, gap):
    sample = sample_curve(circle(radius=radius), gap)
    assert sample.consecutive_distances().max() <= gap * (1 + 1e-12)
    assert np.allclose(np.hypot(*sample.points.T), radius)
    # the arc midpoint between two samples is the farthest curve point
    n = len(sample)
    assert sample.hausdorff_bound == pytest.approx(2 * radius * math.sin(math.pi / (2 * n)))


@pytest.mark.parametrize("theta", [0.0, 0.3, Slope(1, 2), math.atan(math.sqrt(2))])
def test_polygon_perimeter(theta):
    spec = polygon_ntheta(theta)
    sample = sample_curve(spec, 0.01)
    assert sample.closed
    assert sample.consecutive_distances().max() <= 0.01 + 1e-12
    assert sum(np.hypot(*(b - a)) for a, b in spec.segments()) == pytest.approx(4.0)
    ang = side_angles(spec)
    assert len(ang) == 2
    assert (ang[1] - ang[0]) == pytest.approx(math.pi / 2)


def test_polyline_side_angles_dedupe():
    spec = polyline([(0, 0), (1, 0), (1, 1), (2, 1)])
    assert side_angles(spec) == pytest.approx([0.0, math.pi / 2])


def test_graph_sampling_and_slope_bounds():
    spec = graph(lambda x: x * x, (0.0, 1.0), lambda x: 2 * x)
    sample = sample_curve(spec, 0.01)
    assert sample.max_gap <= 0.01
    assert np.allclose(sample.points[:, 1], sample.points[:, 0] ** 2)
    with pytest.raises(DomainError):
        graph(lambda x: x * x, (0.0, 1.0), lambda x: 2 * x, C=3.0)
    graph(lambda x: x + x * x / 4, (0.0, 1.0), lambda x: 1 + x / 2, C=3.0)


def test_curvature_classes():
    assert curvature_class(circle()) == NONVANISHING
    assert curvature_class(polygon_ntheta(0.2)) == PIECEWISE_LINEAR
    assert curvature_class(graph(lambda x: x * x)) == NONVANISHING
    assert curvature_class(graph(lambda x: 2 * x)) == PIECEWISE_LINEAR


def test_bad_inputs():
    with pytest.raises(DomainError):
        circle(radius=0)
    with pytest.raises(DomainError):
        sample_curve(circle(), 0.0)
    with pytest.raises(DomainError):
        polyline([(0, 0)])
