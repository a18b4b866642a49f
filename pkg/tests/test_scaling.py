
import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from fractal_sumsets.errors import DomainError
from fractal_sumsets.ifs import four_corner_system
from fractal_sumsets.scaling import (
    INCONCLUSIVE,
    POSITIVE,
    ZERO,
    ScalingLadder,
    classify_area_trend,
    cover_sampler,
    energy_divergence,
    fit_box_dimension,
    ifs_sampler,
    riesz_energy_mc,
    uniform_interval_sampler,
)

EPS = [2.0 ** -k for k in range(4, 11)]


@settings(max_examples=30, deadline=None)
@given(st.floats(0.5, 2.0), st.floats(1.0, 100.0))
def test_power_law_slope_recovered(d, c):
    counts = [max(1, round(c * e ** -d)) for e in EPS]
    fit = fit_box_dimension(ScalingLadder.from_counts(EPS, counts))
    assert fit.slope == pytest.approx(d, abs=0.02)
    assert fit.window == (1, len(EPS) - 1)


def test_zero_rows_warn():
    ladder = ScalingLadder.from_counts(EPS[:5], [0, 10, 40, 160, 640])
    with pytest.warns(UserWarning):
        fit = fit_box_dimension(ladder, (0, 4))
    assert fit.slope == pytest.approx(2.0)


def test_trend_verdicts():
    assert classify_area_trend(ScalingLadder.from_areas(EPS, [3.0] * 7)).verdict == POSITIVE
    decay = [e ** 0.5 for e in EPS]
    v = classify_area_trend(ScalingLadder.from_areas(EPS, decay))
    assert v.verdict == ZERO and v.beta == pytest.approx(0.5) and v.strictly_decreasing
    # large drops that do not follow a power law stay undecided
    messy = ScalingLadder.from_areas(EPS[:4], [0.5, 0.47, 0.40, 0.30])
    assert classify_area_trend(messy).verdict == INCONCLUSIVE


def test_ladder_validation_and_csv():
    with pytest.raises(DomainError):
        ScalingLadder.from_counts([0.1, 0.2], [1, 2])
    ladder = ScalingLadder.from_counts(EPS, [4 ** k for k in range(7)])
    assert ScalingLadder.from_csv(ladder.to_csv()) == ladder
    with pytest.raises(DomainError):
        classify_area_trend(ScalingLadder.from_counts(EPS[:3], [1, 2, 3]))


def test_uniform_energy_closed_form():
    # E|X - Y|^-s for X, Y uniform on [0,1] is 2 / ((1 - s)(2 - s))
    for s in (0.3, 0.5):
        est = riesz_energy_mc(uniform_interval_sampler(), s, 200_000, seed=1)
        assert est == pytest.approx(2 / ((1 - s) * (2 - s)), rel=0.03)


def test_energy_monotone_in_s():
    sampler = uniform_interval_sampler()
    vals = [riesz_energy_mc(sampler, s, 20_000, seed=5) for s in (0.2, 0.4, 0.6, 0.8)]
    assert all(b >= a for a, b in zip(vals, vals[1:]))


def test_energy_deterministic_by_seed():
    sampler = ifs_sampler(four_corner_system("1/4"))
    assert riesz_energy_mc(sampler, 0.8, 10_000, 7) == riesz_energy_mc(sampler, 0.8, 10_000, 7)
    assert riesz_energy_mc(sampler, 0.8, 10_000, 7) != riesz_energy_mc(sampler, 0.8, 10_000, 8)


def test_ifs_sampler_lands_on_attractor():
    system = four_corner_system("1/4")
    pts = ifs_sampler(system, depth=12)(np.random.default_rng(0), 2000)
    # every coordinate must have base-4 digits in {0, 3}
    digits = np.floor(pts[:, :, None] * 4.0 ** np.arange(1, 8)) % 4
    assert np.all((digits == 0) | (digits == 3))


def test_subcritical_energy_stable():
    res = energy_divergence(ifs_sampler(four_corner_system("1/4")), 0.8, 50_000, seed=0)
    assert not res.diverging


def test_cover_sampler_bounds():
    from fractal_sumsets.ifs import four_corner_cover

    cover = four_corner_cover("1/4", 2)
    pts = cover_sampler(cover)(np.random.default_rng(0), 1000)
    assert pts.min() >= 0 and pts.max() <= 1


def test_energy_domain():
    with pytest.raises(DomainError):
        riesz_energy_mc(uniform_interval_sampler(), 2.0, 10)
