from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from engine.errors import DomainError
from engine.params import Params
from engine.profiles import lp_quantity
from engine.rearrangement import (
    StepFunction,
    check_reversed_riesz,
    decreasing_rearrangement,
    distribution_function,
    line_bilinear,
    line_neg_exponent_norm,
    line_potential,
    lp_step,
    random_step_function,
    read_step_json,
    step_to_profile,
    write_step_json,
    zero_step,
)

INDICATOR_1_2 = StepFunction(breakpoints=(1, 2), levels=(1.0,))
TWO_LEVELS = StepFunction(breakpoints=(0, 1, 3, 5), levels=(2.0, 0.0, 1.0))


def _levels_of(f):
    return sorted({0.0, *f.levels})


# --- Tests for distribution_function ---


def test_distribution_of_indicator():
    assert distribution_function(INDICATOR_1_2, 0.5) == 1
    assert distribution_function(INDICATOR_1_2, 1.0) == 0


def test_distribution_two_levels():
    assert distribution_function(TWO_LEVELS, 0.5) == 3
    assert isinstance(distribution_function(TWO_LEVELS, 0.5), Fraction)


def test_distribution_rejects_negative_level():
    with pytest.raises(DomainError):
        distribution_function(INDICATOR_1_2, -1.0)


# --- Tests for decreasing_rearrangement ---


def test_rearrange_indicator():
    star = decreasing_rearrangement(INDICATOR_1_2)
    assert star.breakpoints == (Fraction(-1, 2), Fraction(1, 2))
    assert star.levels == (1.0,)


def test_rearrange_two_levels():
    star = decreasing_rearrangement(TWO_LEVELS)
    assert star.breakpoints == (Fraction(-3, 2), Fraction(-1, 2), Fraction(1, 2), Fraction(3, 2))
    assert star.levels == (1.0, 2.0, 1.0)
    assert star.is_symmetric()


def test_rearrangement_is_idempotent():
    star = decreasing_rearrangement(TWO_LEVELS)
    assert decreasing_rearrangement(star) == star


def test_rearrange_zero():
    assert decreasing_rearrangement(zero_step()).levels == ()


@given(st.integers(min_value=0, max_value=2**32 - 1), st.sampled_from([1, 2, 3]))
def test_rearrangement_is_equimeasurable(seed, n):
    f = random_step_function(np.random.default_rng(seed), n)
    star = decreasing_rearrangement(f)
    for a in _levels_of(f) + [0.5 * (x + y) for x, y in zip(_levels_of(f), _levels_of(f)[1:])]:
        expected = distribution_function(f, a)
        if n == 1:
            assert distribution_function(star, a) == expected
        else:
            assert distribution_function(star, a) == pytest.approx(expected, rel=1e-12, abs=1e-12)


@pytest.mark.parametrize("p", [0.5, 2.0 / 3.0, 1.0, 2.0])
def test_rearrangement_preserves_lp(p):
    rng = np.random.default_rng(42)
    for _ in range(50):
        f = random_step_function(rng, 1)
        assert lp_step(decreasing_rearrangement(f), p) == pytest.approx(lp_step(f, p), rel=1e-10)


def test_profile_norm_matches_step_norm():
    rng = np.random.default_rng(3)
    for n in (1, 2, 3):
        star = decreasing_rearrangement(random_step_function(rng, n))
        profile = step_to_profile(star)
        assert lp_quantity(profile, 0.5) ** 0.5 == pytest.approx(lp_step(star, 0.5), rel=1e-10)


def test_step_to_profile_needs_even_function():
    with pytest.raises(DomainError):
        step_to_profile(INDICATOR_1_2)


# --- Tests for the exact line integrals ---


def test_line_bilinear_rectangles():
    g = StepFunction(breakpoints=(-2, -1), levels=(1.0,))
    assert line_bilinear(INDICATOR_1_2, g, 1.0) == pytest.approx(3.0, rel=1e-14)
    star = decreasing_rearrangement(INDICATOR_1_2)
    assert line_bilinear(star, star, 1.0) == pytest.approx(1.0 / 3.0, rel=1e-14)


def test_line_potential_of_ball():
    ball = StepFunction(breakpoints=(-1, 1), levels=(1.0,))
    values = line_potential(ball, 1.0, np.array([0.0, 0.5, 2.0]))
    assert values == pytest.approx([1.0, 1.25, 4.0], rel=1e-14)


def test_line_neg_exponent_norm_ball():
    ball = StepFunction(breakpoints=(-1, 1), levels=(1.0,))
    assert line_neg_exponent_norm(ball, 1.0, -2.0) == pytest.approx((1.0 + np.pi / 4.0) ** -0.5, rel=1e-6)


# --- Tests for check_reversed_riesz ---


def test_riesz_pair_of_intervals():
    g = StepFunction(breakpoints=(-2, -1), levels=(1.0,))
    check = check_reversed_riesz(INDICATOR_1_2, g, 1.0)
    assert check.lhs == pytest.approx(3.0, rel=1e-14)
    assert check.rhs == pytest.approx(1.0 / 3.0, rel=1e-14)
    assert check.passed


def test_riesz_equality_for_rearranged_input():
    star = decreasing_rearrangement(TWO_LEVELS)
    check = check_reversed_riesz(star, star, 1.0)
    assert check.lhs == check.rhs


def test_riesz_equality_for_common_translation():
    star = decreasing_rearrangement(TWO_LEVELS)
    shift = Fraction(7, 3)
    moved = StepFunction(breakpoints=tuple(b + shift for b in star.breakpoints), levels=star.levels)
    check = check_reversed_riesz(moved, moved, 0.5)
    assert check.lhs == pytest.approx(check.rhs, rel=1e-10)


@pytest.mark.parametrize("lam", [0.5, 1.0, 2.0])
def test_riesz_random_pairs(lam):
    rng = np.random.default_rng(2024)
    for _ in range(50):
        f = random_step_function(rng, 1)
        g = random_step_function(rng, 1)
        assert check_reversed_riesz(f, g, lam).passed


def test_riesz_radial_pair(coarse_spec):
    rng = np.random.default_rng(5)
    f = random_step_function(rng, 2)
    g = random_step_function(rng, 2)
    assert check_reversed_riesz(f, g, 1.0, coarse_spec).passed


def test_riesz_dimension_mismatch():
    with pytest.raises(DomainError):
        check_reversed_riesz(INDICATOR_1_2, random_step_function(np.random.default_rng(0), 2), 1.0)


def test_rearrangement_lowers_potential_norm():
    rng = np.random.default_rng(99)
    params = Params.diagonal(1, 1.0)
    for _ in range(20):
        f = random_step_function(rng, 1)
        if not any(level > 0.0 for level in f.levels):
            continue
        star = decreasing_rearrangement(f)
        original = line_neg_exponent_norm(f, params.lam, params.q)
        rearranged = line_neg_exponent_norm(star, params.lam, params.q)
        assert original >= rearranged * (1.0 - 1e-6)


# --- Tests for JSON round trip and the generator ---


def test_step_json_round_trip(tmp_path):
    path = tmp_path / "f.json"
    write_step_json(TWO_LEVELS, path)
    assert read_step_json(path) == TWO_LEVELS


def test_step_json_missing_field(tmp_path):
    path = tmp_path / "bad.json"
    path.write_text('{"n": 1, "levels": [1.0]}')
    with pytest.raises(DomainError):
        read_step_json(path)


def test_random_step_function_ranges():
    rng = np.random.default_rng(1)
    for n in (1, 2):
        for _ in range(20):
            f = random_step_function(rng, n)
            assert 1 <= len(f.levels) <= 8
            assert all(0.0 <= v <= 4.0 for v in f.levels)
            assert all(-10.0 <= float(b) <= 10.0 for b in f.breakpoints)


def test_random_step_function_is_seeded():
    first = random_step_function(np.random.default_rng(8), 1)
    second = random_step_function(np.random.default_rng(8), 1)
    assert first == second
