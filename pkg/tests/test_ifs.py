import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from fractal_sumsets.errors import CapacityError, DomainError
from fractal_sumsets.ifs import (
    IfsSystem,
    as_rational,
    cantor_intervals,
    counterexample_ifs,
    distinct_maps,
    format_ifs,
    four_corner_cover,
    four_corner_system,
    ifs_cover,
    parse_ifs,
    projected_ifs,
    similarity_dimension,
    verify_ssc,
)


def test_cantor_thirds_exact():
    cover = cantor_intervals("1/3", 3)
    ivs = cover.intervals()
    assert len(ivs) == 8
    assert all(b - a == Fraction(1, 27) for a, b in ivs)
    assert ivs[0] == (0, Fraction(1, 27))
    assert ivs[-1] == (Fraction(26, 27), 1)
    assert sum(b - a for a, b in ivs) == Fraction(8, 27)


@pytest.mark.parametrize("gamma", ["1/4", "1/9", "3/10", "1/3"])
@pytest.mark.parametrize("depth", [0, 1, 3])
def test_four_corner_counts(gamma, depth):
    cover = four_corner_cover(gamma, depth)
    assert len(cover) == 4 ** depth
    assert cover.side == pytest.approx(float(Fraction(gamma)) ** depth, rel=1e-15)
    assert cover.exact is not None


@pytest.mark.parametrize("gamma", ["1/4", "3/10"])
def test_cover_refines(gamma):
    for n in range(1, 5):
        a, b = four_corner_cover(gamma, n), four_corner_cover(gamma, n + 1)
        scale = b.exact.denominator // a.exact.denominator
        parent = a.exact.numerators * scale
        child = b.exact.numerators
        s_par = a.exact.side_numerator * scale
        s_child = b.exact.side_numerator
        inside = np.all(
            (child[:, None, :] >= parent[None, :, :]) & (child[:, None, :] + s_child <= parent[None, :, :] + s_par),
            axis=2,
        )
        assert inside.any(axis=1).all()


def test_similarity_dimension():
    assert similarity_dimension(four_corner_system("1/4")) == pytest.approx(1.0)
    assert similarity_dimension(four_corner_system("1/9")) == pytest.approx(math.log(4) / math.log(9))


def test_ssc():
    assert verify_ssc(four_corner_system("1/4"), 3)
    assert verify_ssc(four_corner_system("1/2"), 2)  # squares touch only at edges
    overlap = IfsSystem.from_translations("3/5", [(0, 0), ("1/5", "1/5")])
    assert not verify_ssc(overlap)


def test_as_rational():
    assert as_rational(0.3) == Fraction(3, 10)
    assert as_rational("1/9") == Fraction(1, 9)
    assert as_rational(math.sqrt(2)) is None


def test_gamma_domain():
    with pytest.raises(DomainError):
        four_corner_cover("3/5", 1)
    with pytest.raises(DomainError):
        four_corner_cover(0, 1)


def test_capacity_refusal():
    with pytest.raises(CapacityError):
        four_corner_cover("1/4", 20)


def test_format_parse_roundtrip():
    system = four_corner_system("1/4")
    again = parse_ifs(format_ifs(system))
    assert again == system
    assert parse_ifs("# comment\n0.5 0 0\n0.5 0.5 0.5\n").n_maps == 2
    with pytest.raises(DomainError):
        parse_ifs("0.5\n")


def test_projection_at_axis_merges_maps():
    proj = projected_ifs(four_corner_system("1/4"), 0.0)
    assert proj.n_maps == 4
    assert distinct_maps(proj) == 2


@pytest.mark.parametrize("mode,lam", [("a-prime", 0.3), ("b-prime", 0.4)])
def test_counterexample_aligned_pairs(mode, lam):
    angle = 0.7
    built = counterexample_ifs([angle], lam, mode)
    system = built.system
    assert verify_ssc(system)
    c, s = math.cos(angle), math.sin(angle)
    for i, j in built.aligned_pairs:
        ti, tj = system.maps[i].translation, system.maps[j].translation
        assert (ti[0] - tj[0]) * c + (ti[1] - tj[1]) * s == pytest.approx(0.0, abs=1e-12)
    assert distinct_maps(projected_ifs(system, angle), tol=1e-9) == system.n_maps - 1


def test_counterexample_lambda_window():
    with pytest.raises(DomainError):
        counterexample_ifs([0.0], 0.5, "a-prime")
    with pytest.raises(DomainError):
        counterexample_ifs([0.0], 0.6, "b-prime")
    with pytest.raises(DomainError):
        counterexample_ifs([0.0, 1.0], 0.2, "b-prime", n_maps=3)


@settings(max_examples=25, deadline=None)
@given(st.fractions(min_value=Fraction(1, 20), max_value=Fraction(1, 2), max_denominator=40), st.integers(1, 4))
def test_exact_and_float_covers_agree(gamma, depth):
    exact = four_corner_cover(gamma, depth)
    approx = ifs_cover(IfsSystem.from_translations(
        float(gamma), [(0.0, 0.0), (0.0, 1 - float(gamma)), (1 - float(gamma), 0.0), (1 - float(gamma), 1 - float(gamma))]
    ), depth)
    a = np.sort(exact.corners.view("f8,f8"), axis=0).view(float)
    b = np.sort(approx.corners.view("f8,f8"), axis=0).view(float)
    assert np.allclose(a, b, atol=1e-12)


def test_two_map_system_collapses_at_zero():
    built = counterexample_ifs([0.0], 0.4, "b-prime", n_maps=2)
    (a, b), = built.aligned_pairs
    assert built.system.maps[a].translation[0] == pytest.approx(built.system.maps[b].translation[0])
    assert built.system.maps[a].translation[1] != built.system.maps[b].translation[1]
    assert distinct_maps(projected_ifs(built.system, 0.0)) == 1


def test_a_prime_dimension_exceeds_one():
    for lam in (0.26, 0.3, 0.33):
        assert similarity_dimension(counterexample_ifs([1.0], lam, "a-prime").system) > 1
