import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from engine.constants import (
    lower_bound_constant,
    provable_lower_bound_constant,
    sharp_reversed_constant,
    unit_ball_volume,
)
from engine.errors import DivergenceError, DomainError
from engine.params import Params, QuadSpec
from engine.profiles import (
    ExtremizerKind,
    GridSpec,
    RadialProfile,
    TailSpec,
    ball_profile,
    bubble_function,
    build_profile,
    dilate_profile,
    extremizer,
    lp_quantity,
    scale_profile,
)
from engine.quadrature import (
    angular_average,
    ball_pair_integral,
    bilinear_functional,
    build_kernel_table,
    estimate_bilinear,
    kernel_values,
    log_bilinear_functional,
    neg_exponent_norm,
    overlap_volume,
    potential_at,
    potential_values,
    quotient,
    verify_inequality,
    verify_log_inequality,
)
from engine.rearrangement import (
    StepFunction,
    decreasing_rearrangement,
    line_bilinear,
    lp_step,
    random_step_function,
    step_to_profile,
)


@pytest.fixture(scope="module")
def bubble_2d():
    return extremizer(ExtremizerKind.INEQUALITY_EXTREMIZER, Params.diagonal(2, 1.0))


# --- Tests for angular averages and kernel tables ---


def test_angular_average_line():
    assert angular_average(1, 1.0, 2.0, 1.0) == 4.0


def test_angular_average_plane_at_origin():
    assert angular_average(2, 1.0, 3.0, 0.0) == pytest.approx(6.0 * math.pi, rel=1e-10)


def test_angular_average_space_lambda2():
    assert angular_average(3, 2.0, 1.0, 1.0) == pytest.approx(8.0 * math.pi, rel=1e-8)


def test_angular_average_rejects_negative_radius():
    with pytest.raises(DomainError):
        angular_average(2, 1.0, -1.0, 1.0)


@settings(max_examples=30, deadline=None)
@given(
    st.integers(min_value=2, max_value=5),
    st.floats(min_value=0.1, max_value=4.0),
    st.floats(min_value=0.0, max_value=10.0),
    st.floats(min_value=0.0, max_value=10.0),
)
def test_angular_average_matches_closed_form(n, lam, r, s):
    if r + s == 0.0:
        return
    closed = float(kernel_values(n, lam, np.array(r), np.array(s)))
    assert angular_average(n, lam, r, s) == pytest.approx(closed, rel=1e-6)


def test_kernel_table_small_grid():
    table = build_kernel_table(np.array([0.0, 1.0]), np.array([0.0, 1.0]), 2, 1.0)
    assert table.entries[0, 0] == 0.0
    assert table.entries[0, 1] == pytest.approx(2.0 * math.pi, rel=1e-10)
    assert table.entries[1, 0] == table.entries[0, 1]
    assert table.entries[1, 1] == pytest.approx(8.0, rel=1e-6)
    assert table.is_symmetric()


def test_kernel_table_homogeneity():
    grid = np.array([0.3, 1.0, 2.5])
    table = build_kernel_table(grid, grid, 3, 1.0)
    scaled = build_kernel_table(2.0 * grid, 2.0 * grid, 3, 1.0)
    assert np.allclose(scaled.entries, 2.0 * table.entries, rtol=1e-6)
    assert np.all(table.entries > 0.0)


# --- Tests for the bilinear functional ---


def test_bilinear_ball_line():
    ball = ball_profile(1)
    assert bilinear_functional(ball, ball, 1.0) == pytest.approx(8.0 / 3.0, rel=1e-6)


def test_bilinear_bubble_plane(bubble_2d):
    value = bilinear_functional(bubble_2d, bubble_2d, 1.0)
    assert value == pytest.approx(2.0 * math.pi**2 / 3.0, rel=1e-4)
    ratio = value / lp_quantity(bubble_2d, 0.8) ** 2
    assert ratio == pytest.approx(sharp_reversed_constant(2, 1.0).value, rel=1e-4)


def test_bilinear_small_lambda_is_product_of_masses():
    ball = ball_profile(1)
    assert bilinear_functional(ball, ball, 1e-6) == pytest.approx(4.0, rel=1e-4)


def test_bilinear_is_symmetric(bubble_2d):
    ball = ball_profile(2)
    assert bilinear_functional(ball, bubble_2d, 1.0) == bilinear_functional(bubble_2d, ball, 1.0)


@pytest.mark.parametrize("s", [0.5, 2.0])
def test_bilinear_dilation_covariance(bubble_2d, s):
    base = bilinear_functional(bubble_2d, bubble_2d, 1.0)
    dilated = dilate_profile(bubble_2d, s)
    assert bilinear_functional(dilated, dilated, 1.0) == pytest.approx(s**5 * base, rel=1e-6)


def test_bilinear_divergent_tail():
    slow = build_profile(
        lambda r: np.power(1.0 + r * r, -0.5), 1, GridSpec(R=50.0, M=63), TailSpec(tau=-1.0, c=50.0 / math.sqrt(2501.0))
    )
    with pytest.raises(DivergenceError):
        bilinear_functional(slow, slow, 1.0)


def test_bilinear_zero_profile():
    zero = ball_profile(1, height=0.0)
    estimate = estimate_bilinear(zero, ball_profile(1), 1.0)
    assert estimate.value == 0.0


# --- Tests for the potential ---


@pytest.mark.parametrize("x,expected", [(0.0, 1.0), (2.0, 4.0), (0.5, 1.25)])
def test_potential_of_ball(x, expected):
    assert potential_at(ball_profile(1), 1.0, x) == pytest.approx(expected, rel=1e-8)


def test_potential_far_field_tends_to_mass():
    assert potential_at(ball_profile(1), 1.0, 1e3) / 1e3 == pytest.approx(2.0, rel=1e-3)


def test_potential_of_rearranged_step_is_increasing(coarse_spec):
    rng = np.random.default_rng(11)
    f_star = decreasing_rearrangement(random_step_function(rng, 2))
    radii = np.linspace(0.0, 15.0, 31)
    values = potential_values(step_to_profile(f_star), 1.0, radii, coarse_spec)
    assert np.all(np.diff(values) >= -1e-6 * values[1:])


# --- Tests for the negative-exponent norm ---


def test_neg_exponent_norm_ball():
    value = neg_exponent_norm(ball_profile(1), 1.0, -2.0)
    assert value == pytest.approx((1.0 + math.pi / 4.0) ** -0.5, rel=1e-6)


def test_quotient_of_ball_exceeds_lower_bound():
    params = Params.diagonal(1, 1.0)
    value = quotient(ball_profile(1), params)
    assert value == pytest.approx(0.74838 / 2.0**1.5, rel=1e-4)
    assert value >= lower_bound_constant(params)


def test_neg_exponent_norm_is_homogeneous():
    ball = ball_profile(1)
    base = neg_exponent_norm(ball, 1.0, -2.0)
    assert neg_exponent_norm(scale_profile(ball, 3.0), 1.0, -2.0) == pytest.approx(3.0 * base, rel=1e-10)


def test_neg_exponent_norm_divergent():
    with pytest.raises(DivergenceError):
        neg_exponent_norm(ball_profile(2), 1.0, -1.5)


def test_neg_exponent_norm_rejects_positive_q():
    with pytest.raises(DomainError):
        neg_exponent_norm(ball_profile(1), 1.0, 2.0)


# --- Tests for the logarithmic functional ---


def test_log_bilinear_ball_line():
    ball = ball_profile(1)
    assert log_bilinear_functional(ball, ball) == pytest.approx(6.0 - 4.0 * math.log(2.0), rel=1e-6)


def test_log_bilinear_is_lambda_derivative():
    step = StepFunction(breakpoints=(-1, 1), levels=(1.0,))
    lam = 1e-4
    difference = (line_bilinear(step, step, lam) - 4.0) / lam
    ball = ball_profile(1)
    assert difference == pytest.approx(-log_bilinear_functional(ball, ball), rel=1e-3)


def test_verify_log_inequality_ball():
    ball = ball_profile(1)
    result = verify_log_inequality(ball, ball)
    assert result.lhs == pytest.approx(-(6.0 - 4.0 * math.log(2.0)), rel=1e-6)
    assert result.rhs == pytest.approx(-4.0 * math.log(2.0 * math.pi) + 4.0 * math.log(2.0), rel=1e-10)
    assert result.passed
    assert result.margin == pytest.approx(1.35, abs=0.01)


def _cauchy_line(R=50.0):
    return build_profile(
        bubble_function(1.0, 1.0, -2.0), 1, GridSpec(R=R), TailSpec(tau=-2.0, c=R * R / (1.0 + R * R))
    )


def test_verify_log_inequality_tailed_equality_case():
    # (1 + x^2)^-1 attains equality: both sides are pi^2 ln 2
    f = _cauchy_line()
    result = verify_log_inequality(f, f)
    expected = math.pi**2 * math.log(2.0)
    assert result.rhs == pytest.approx(expected, rel=1e-8)
    assert result.lhs == pytest.approx(expected, rel=1e-5)
    assert abs(result.margin) < 1e-4 * expected
    assert result.passed


def test_verify_log_inequality_tailed_against_ball():
    result = verify_log_inequality(_cauchy_line(), ball_profile(1))
    assert math.isfinite(result.lhs)
    assert math.isfinite(result.rhs)
    assert result.passed
    assert result.margin > 0.0


# --- Tests for verify_inequality ---


def test_verify_ball_line():
    ball = ball_profile(1)
    result = verify_inequality(ball, ball, Params.diagonal(1, 1.0))
    assert result.lhs == pytest.approx(8.0 / 3.0, rel=1e-6)
    assert result.rhs_lower == pytest.approx(27.0 / 32.0, rel=1e-10)
    assert result.rhs_printed == pytest.approx(81.0 / 64.0, rel=1e-10)
    assert result.rhs_sharp is None
    assert result.passed
    report = result.to_dict()
    assert set(report) == {
        "n", "p", "r", "lambda", "lhs", "rhs_lower", "rhs_printed", "rhs_sharp", "margin", "rel_err_estimate", "pass"
    }


def test_verify_bubble_is_sharp(bubble_2d):
    result = verify_inequality(bubble_2d, bubble_2d, Params.diagonal(2, 1.0))
    assert result.passed
    assert abs(result.margin) < 1e-3 * result.lhs


def test_verify_zero_profile():
    zero = ball_profile(1, height=0.0)
    result = verify_inequality(zero, zero, Params.diagonal(1, 1.0))
    assert result.lhs == 0.0
    assert result.rhs_lower == 0.0
    assert result.passed


def test_verify_dimension_mismatch():
    with pytest.raises(DomainError):
        verify_inequality(ball_profile(2), ball_profile(2), Params.diagonal(1, 1.0))


def test_verify_uses_provable_constant():
    # (1 - x^2)^2 with lambda = 2: I(f, f) = 512/1575 and ||f||_(1/2) = 16/9,
    # below the printed C = 1/8 but above C * min(p, r)^(lambda/n) = 1/32
    f = build_profile(lambda r: (1.0 - r * r) ** 2, 1, GridSpec(R=1.0))
    result = verify_inequality(f, f, Params.diagonal(1, 2.0))
    norms = (16.0 / 9.0) ** 2
    assert result.lhs == pytest.approx(512.0 / 1575.0, rel=1e-6)
    assert result.rhs_printed == pytest.approx(norms / 8.0, rel=1e-6)
    assert result.lhs < result.rhs_printed
    assert result.rhs_lower == pytest.approx(norms / 32.0, rel=1e-6)
    assert result.rhs_sharp is None
    assert result.passed


def test_line_step_pairs_meet_provable_constant():
    params = Params.diagonal(1, 2.0)
    constant = provable_lower_bound_constant(params)
    assert constant == pytest.approx(1.0 / 32.0, rel=1e-12)
    rng = np.random.default_rng(11)
    for case in range(100):
        f = decreasing_rearrangement(random_step_function(rng, 1))
        g = decreasing_rearrangement(random_step_function(rng, 1))
        lhs = line_bilinear(f, g, params.lam)
        rhs = constant * lp_step(f, params.p) ** (1.0 / params.p) * lp_step(g, params.r) ** (1.0 / params.r)
        assert lhs >= rhs, f"case {case}: lhs={lhs}, rhs={rhs}"


def test_verify_random_step_pairs():
    rng = np.random.default_rng(20240601)
    spec = QuadSpec()
    for case in range(100):
        n = (1, 2, 3)[case % 3]
        lam = (0.5, 1.0, 2.0)[(case // 3) % 3]
        params = Params.diagonal(n, lam)
        f = step_to_profile(decreasing_rearrangement(random_step_function(rng, n)))
        g = step_to_profile(decreasing_rearrangement(random_step_function(rng, n)))
        result = verify_inequality(f, g, params, spec)
        assert result.passed, f"case {case}: {result.to_dict()}"
        assert result.rel_err_estimate < spec.target_rel_tol
        if n == 2 and lam == 1.0:
            assert result.rhs_sharp is not None


# --- Tests for ball pairs ---


def test_ball_pair_line_matches_rectangles():
    rng = np.random.default_rng(5)
    for _ in range(20):
        a, b = rng.uniform(0.1, 5.0, size=2)
        lam = float(rng.uniform(0.1, 3.0))
        expected = line_bilinear(
            StepFunction(breakpoints=(-a, a), levels=(1.0,)), StepFunction(breakpoints=(-b, b), levels=(1.0,)), lam
        )
        assert float(ball_pair_integral(1, lam, a, b)) == pytest.approx(expected, rel=1e-10)


@pytest.mark.parametrize("n", [1, 2, 3, 4])
def test_ball_pair_second_moment(n):
    # |x - y|^2 integrates to |B_a| |B_b| n (a^2 + b^2) / (n + 2)
    a = np.array([0.3, 1.0, 1.0, 2.5])
    b = np.array([1.7, 1.0, 0.999, 0.4])
    volume = unit_ball_volume(n)
    expected = volume**2 * a**n * b**n * n * (a * a + b * b) / (n + 2.0)
    np.testing.assert_allclose(ball_pair_integral(n, 2.0, a, b), expected, rtol=1e-11)


@pytest.mark.parametrize("n", [1, 2, 3])
def test_ball_pair_zero_lambda_is_product_of_volumes(n):
    a, b = 0.8, 2.3
    volume = unit_ball_volume(n)
    assert float(ball_pair_integral(n, 0.0, a, b)) == pytest.approx(volume**2 * a**n * b**n, rel=1e-12)


@pytest.mark.parametrize("n", [1, 2, 3])
def test_overlap_volume_limits(n):
    volume = unit_ball_volume(n)
    assert float(overlap_volume(n, 1.0, 2.0, 1.0 + 1e-12)) == pytest.approx(volume, rel=1e-9)
    assert float(overlap_volume(n, 1.0, 2.0, 3.0 - 1e-9)) == pytest.approx(0.0, abs=1e-8)
    # two unit balls at distance 1 in the plane: the lens 2 pi / 3 - sqrt(3) / 2
    if n == 2:
        assert float(overlap_volume(2, 1.0, 1.0, 1.0)) == pytest.approx(2.0 * math.pi / 3.0 - math.sqrt(3.0) / 2.0, rel=1e-12)


def test_step_pairs_match_line_bilinear():
    rng = np.random.default_rng(12)
    for _ in range(25):
        f = decreasing_rearrangement(random_step_function(rng, 1))
        g = decreasing_rearrangement(random_step_function(rng, 1))
        lam = float(rng.uniform(0.2, 2.5))
        assert bilinear_functional(step_to_profile(f), step_to_profile(g), lam) == pytest.approx(
            line_bilinear(f, g, lam), rel=1e-10
        )


def test_step_pair_is_exactly_symmetric():
    rng = np.random.default_rng(4)
    f = step_to_profile(decreasing_rearrangement(random_step_function(rng, 2)))
    g = step_to_profile(decreasing_rearrangement(random_step_function(rng, 2)))
    assert bilinear_functional(f, g, 1.0) == bilinear_functional(g, f, 1.0)


def test_step_pair_agrees_with_radial_quadrature(coarse_spec):
    ball = ball_profile(2, radius=1.0, height=2.0)
    shell = RadialProfile(radii=np.array([0.0, 0.5, 1.5]), values=np.array([1.0, 3.0, 0.0]), n=2, kind="step")
    smooth_shell = RadialProfile(
        radii=shell.radii, values=shell.values, n=2, kind="step", source=lambda r: shell.interpolate(r)
    )
    exact = bilinear_functional(ball, shell, 1.0)
    generic = bilinear_functional(ball, smooth_shell, 1.0, coarse_spec)
    assert generic == pytest.approx(exact, rel=1e-3)
