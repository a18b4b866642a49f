import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from fractal_sumsets.angles import BIG, SMALL, Slope, classify_angle, parse_slope, predict_sumset, star
from fractal_sumsets.errors import DomainError


def _star_oracle(m: int) -> int:
    # strip factors of 4 through the 2-adic valuation, independently of the loop
    v = (m & -m).bit_length() - 1
    return (m >> (2 * (v // 2))) % 4


def test_star_examples():
    assert star(6) == 2
    assert star(112) == 3
    assert star(4) == 1
    assert star(1) == 1


def test_star_exhaustive_scaling():
    for m in range(1, 250_001):
        assert star(4 * m) == star(m)


def test_star_matches_oracle_to_a_million():
    m = np.arange(1, 10 ** 6 + 1)
    v = np.zeros_like(m)
    x = m.copy()
    while True:
        div = x % 4 == 0
        if not div.any():
            break
        x[div] //= 4
        v[div] += 1
    sample = range(1, 10 ** 6 + 1, 997)
    assert all(star(k) == int(x[k - 1] % 4) for k in sample)
    assert all(star(k) == _star_oracle(k) for k in range(1, 20_000))


def test_star_rejects_nonpositive():
    with pytest.raises(DomainError):
        star(0)


def test_small_big_partition_exhaustive():
    small = big = 0
    for p in range(1, 201):
        for q in range(1, 201):
            if math.gcd(p, q) != 1:
                continue
            c = classify_angle(p, q)
            odd = c.p_star % 2 == 1 and c.q_star % 2 == 1
            assert c.kind == (SMALL if odd else BIG)
            small += c.kind == SMALL
            big += c.kind == BIG
    assert small > 0 and big > 0


@given(st.integers(1, 10 ** 6), st.integers(1, 10 ** 6), st.integers(1, 50))
def test_classification_is_scale_invariant(p, q, k):
    assert classify_angle(k * p, k * q) == classify_angle(p, q)


@given(st.integers(-500, 500), st.integers(-500, 500))
def test_slope_normalisation(p, q):
    if p == 0 and q == 0:
        with pytest.raises(DomainError):
            Slope.of(p, q)
        return
    s = Slope.of(p, q)
    assert math.gcd(s.p, s.q) == 1
    assert s.q > 0 or (s.q == 0 and s.p == 1)
    perp = s.perpendicular()
    assert s.p * perp.p + s.q * perp.q == 0
    assert 0 <= s.theta < math.pi


def test_parse_slope():
    assert parse_slope("2/4") == Slope(1, 2)
    assert parse_slope("3") == Slope(3, 1)


def test_predictions_for_named_angles():
    assert predict_sumset((1, 1)).summary == "dim<2"
    assert predict_sumset((1, 2)).summary == "interior-nonempty"
    assert predict_sumset(math.sqrt(2)).summary == "measure-zero,dim=2"
    assert predict_sumset((0, 1)).angle.kind == SMALL
