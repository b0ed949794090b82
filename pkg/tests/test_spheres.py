import math

import numpy as np
import pytest
from hypothesis import assume, given
from hypothesis import strategies as st

from engine.errors import DomainError, SingularPointError
from engine.extremal import SystemState, bubble_height, exact_bubble_state, smooth_noise
from engine.profiles import spline_profile
from engine.spheres import (
    CriticalSearch,
    PointFunction,
    SphereMap,
    annulus_cloud,
    conformal_residual,
    critical_radius,
    distance_identity_residual,
    invert_point,
    jacobian_factor,
    kernel_factorization_residual,
    kernel_k,
    kernel_k_gradient,
    residual_report,
    transform_eval,
    transformed_profile,
)

coordinate = st.floats(min_value=-5.0, max_value=5.0, allow_nan=False)
radius = st.floats(min_value=0.1, max_value=4.0)


def points(n):
    return st.lists(coordinate, min_size=n, max_size=n).map(np.array)


def _far(a, b, gap=1e-2):
    return np.linalg.norm(np.asarray(a) - np.asarray(b)) > gap


IDENTITY_SAMPLES = 100_000


def _sphere(rng, n):
    return SphereMap(center=rng.uniform(-2.0, 2.0, n), radius=float(rng.uniform(0.5, 3.0)))


def _shell(rng, sphere, count, inner=0.2, outer=5.0):
    # inner <= |y - x| / lambda <= outer, log-uniform in radius
    directions = rng.normal(size=(count, sphere.n))
    directions /= np.linalg.norm(directions, axis=1, keepdims=True)
    radii = sphere.radius * np.exp(rng.uniform(math.log(inner), math.log(outer), count))
    return sphere.center + radii[:, None] * directions


def _separated_pairs(rng, sphere, count, gap=0.05):
    xi = _shell(rng, sphere, count)
    z = _shell(rng, sphere, count)
    keep = np.linalg.norm(xi - z, axis=1) > gap * sphere.radius
    return xi[keep], z[keep]


# --- Tests for SphereMap and the inversion ---


def test_sphere_map_validation():
    with pytest.raises(DomainError):
        SphereMap(center=np.zeros(2), radius=0.0)
    assert SphereMap(center=[1.0, 2.0], radius=1.5).to_dict() == {"center": [1.0, 2.0], "radius": 1.5}


def test_invert_point_example():
    sphere = SphereMap(center=np.zeros(2), radius=2.0)
    np.testing.assert_allclose(invert_point(sphere, np.array([1.0, 0.0])), [4.0, 0.0])


@given(st.sampled_from([1, 2, 3]).flatmap(lambda n: st.tuples(points(n), points(n), radius)))
def test_inversion_is_an_involution(case):
    xi, x, lam = case
    assume(_far(xi, x, 1e-2 * lam))
    sphere = SphereMap(center=x, radius=lam)
    np.testing.assert_allclose(invert_point(sphere, invert_point(sphere, xi)), xi, rtol=1e-9, atol=1e-9)


def test_inversion_fixes_the_sphere():
    sphere = SphereMap(center=np.array([1.0, -1.0]), radius=2.0)
    on_sphere = sphere.center + 2.0 * np.array([[1.0, 0.0], [0.6, 0.8], [0.0, -1.0]])
    np.testing.assert_allclose(invert_point(sphere, on_sphere), on_sphere, atol=1e-12)


def test_jacobian_factor():
    sphere = SphereMap(center=np.zeros(3), radius=2.0)
    assert jacobian_factor(sphere, np.array([4.0, 0.0, 0.0])) == pytest.approx(0.5**6)


def test_singular_point():
    sphere = SphereMap(center=np.array([1.0, 1.0]), radius=1.0)
    with pytest.raises(SingularPointError):
        invert_point(sphere, np.array([1.0, 1.0]))
    with pytest.raises(SingularPointError):
        kernel_k(sphere, 2.0, np.array([2.0, 3.0]), np.array([1.0, 1.0]))


def test_dimension_mismatch():
    sphere = SphereMap(center=np.zeros(2), radius=1.0)
    with pytest.raises(DomainError):
        invert_point(sphere, np.array([1.0, 0.0, 0.0]))


# --- Tests for the distance and kernel identities ---


@given(st.sampled_from([1, 2, 3]).flatmap(lambda n: st.tuples(points(n), points(n), points(n), radius)))
def test_distance_identity(case):
    xi, z, x, lam = case
    assume(_far(xi, x) and _far(z, x) and _far(xi, z))
    sphere = SphereMap(center=x, radius=lam)
    assert float(distance_identity_residual(sphere, xi, z)) < 1e-9


@given(st.sampled_from([1, 2, 3]).flatmap(lambda n: st.tuples(points(n), points(n), points(n), radius)))
def test_kernel_factorization(case):
    xi, z, x, lam = case
    assume(_far(xi, x) and _far(z, x))
    sphere = SphereMap(center=x, radius=lam)
    assert float(kernel_factorization_residual(sphere, xi, z)) < 1e-9


@pytest.mark.parametrize("n", [1, 2, 3])
def test_inversion_is_an_involution_on_clouds(n):
    rng = np.random.default_rng(100 + n)
    for _ in range(10):
        sphere = _sphere(rng, n)
        xi = _shell(rng, sphere, IDENTITY_SAMPLES // 10)
        np.testing.assert_allclose(invert_point(sphere, invert_point(sphere, xi)), xi, rtol=1e-10, atol=1e-9)


@pytest.mark.parametrize("n", [1, 2, 3])
def test_distance_identity_on_clouds(n):
    rng = np.random.default_rng(200 + n)
    checked = 0
    for _ in range(10):
        sphere = _sphere(rng, n)
        xi, z = _separated_pairs(rng, sphere, IDENTITY_SAMPLES // 10)
        assert np.max(distance_identity_residual(sphere, xi, z)) < 1e-9
        checked += xi.shape[0]
    assert checked > 0.8 * IDENTITY_SAMPLES


@pytest.mark.parametrize("n", [1, 2, 3])
def test_kernel_factorization_on_clouds(n):
    rng = np.random.default_rng(300 + n)
    for _ in range(10):
        sphere = _sphere(rng, n)
        xi, z = _separated_pairs(rng, sphere, IDENTITY_SAMPLES // 10)
        assert np.max(kernel_factorization_residual(sphere, xi, z)) < 1e-9


@pytest.mark.parametrize("n", [1, 2, 3])
def test_kernel_positive_when_both_points_outside(n):
    rng = np.random.default_rng(n)
    sphere = SphereMap(center=rng.uniform(-1.0, 1.0, n), radius=1.5)
    count = IDENTITY_SAMPLES
    xi = annulus_cloud(sphere.center, 1.01 * sphere.radius, 30.0, count, seed=1)
    z = annulus_cloud(sphere.center, 1.01 * sphere.radius, 30.0, count, seed=2)[rng.permutation(count)]
    for p_exp in (0.5, 1.0, 2.0, 3.0):
        assert np.all(kernel_k(sphere, p_exp, xi, z) > 0.0)


def test_kernel_vanishes_on_the_sphere():
    sphere = SphereMap(center=np.zeros(2), radius=1.0)
    xi = np.array([0.6, 0.8])
    assert kernel_k(sphere, 2.0, xi, np.array([3.0, 1.0])) == pytest.approx(0.0, abs=1e-12)


@pytest.mark.parametrize("n", [1, 2, 3])
@pytest.mark.parametrize("p_exp", [0.5, 1.0, 2.0, 3.5])
def test_kernel_gradient_matches_finite_differences(n, p_exp):
    rng = np.random.default_rng(7 * n)
    checked = 0
    for _ in range(10):
        sphere = _sphere(rng, n)
        xi, z = _separated_pairs(rng, sphere, 200, gap=0.1)
        z_image = invert_point(sphere, z)
        keep = np.linalg.norm(xi - z_image, axis=1) > 0.1 * sphere.radius
        xi, z, z_image = xi[keep][:100], z[keep][:100], z_image[keep][:100]
        h = 1e-6 * sphere.radius
        numeric = np.stack(
            [(kernel_k(sphere, p_exp, xi + h * e, z) - kernel_k(sphere, p_exp, xi - h * e, z)) / (2.0 * h) for e in np.eye(n)],
            axis=1,
        )
        analytic = kernel_k_gradient(sphere, p_exp, xi, z)
        # size of the two terms of the gradient, before they cancel
        z_distance = np.linalg.norm(z - sphere.center, axis=1)
        scale = p_exp * (
            np.linalg.norm(xi - z, axis=1) ** (p_exp - 1.0)
            + (z_distance / sphere.radius) ** p_exp * np.linalg.norm(xi - z_image, axis=1) ** (p_exp - 1.0)
        )
        assert np.all(np.linalg.norm(numeric - analytic, axis=1) <= 1e-5 * scale)
        checked += xi.shape[0]
    assert checked == 1000


def test_kernel_gradient_singular_at_z():
    sphere = SphereMap(center=np.zeros(2), radius=1.0)
    z = np.array([2.0, 0.0])
    with pytest.raises(SingularPointError):
        kernel_k_gradient(sphere, 2.0, z, z)
    with pytest.raises(SingularPointError):
        kernel_k_gradient(sphere, 2.0, invert_point(sphere, z), z)


# --- Tests for transform_eval ---


def test_bubble_is_invariant_at_its_own_radius():
    b, p_exp = 1.7, 2.0
    bubble = PointFunction.bubble(bubble_height(2, p_exp, b), b, p_exp)
    sphere = SphereMap(center=np.zeros(2), radius=b)
    cloud = annulus_cloud(np.zeros(2), 0.05, 50.0, 500)
    np.testing.assert_allclose(transform_eval(bubble, sphere, p_exp, cloud), bubble(cloud), rtol=1e-12)


def test_transform_eval_scalar():
    bubble = PointFunction.bubble(1.0, 1.0, 2.0)
    sphere = SphereMap(center=np.zeros(1), radius=2.0)
    # (1/2)^2 * (1 + 16) at xi = 1
    assert transform_eval(bubble, sphere, 2.0, np.array([1.0])) == pytest.approx(17.0 / 4.0)


def test_transformed_profile_matches_pointwise_transform():
    state = exact_bubble_state(2, 1.0, b=0.8)
    lam = 1.5
    profile = transformed_profile(state.u, lam, 1.0)
    pointwise = PointFunction.from_profile(state.u)
    sphere = SphereMap(center=np.zeros(2), radius=lam)
    cloud = annulus_cloud(np.zeros(2), 0.1, 100.0, 200)
    expected = transform_eval(pointwise, sphere, 1.0, cloud)
    np.testing.assert_allclose(profile.evaluate(np.linalg.norm(cloud, axis=1)), expected, rtol=1e-6)


def test_transformed_profile_needs_matching_tail():
    state = exact_bubble_state(1, 2.0)
    with pytest.raises(DomainError):
        transformed_profile(state.u, 1.0, 1.0)


# --- Tests for annulus_cloud ---


def test_annulus_cloud_bounds_and_determinism():
    center = np.array([1.0, 2.0, 3.0])
    cloud = annulus_cloud(center, 0.5, 40.0, 1000, seed=4)
    distance = np.linalg.norm(cloud - center, axis=1)
    assert cloud.shape == (1000, 3)
    assert np.all(distance >= 0.5 * (1.0 - 1e-12))
    assert np.all(distance <= 40.0 * (1.0 + 1e-12))
    np.testing.assert_array_equal(cloud, annulus_cloud(center, 0.5, 40.0, 1000, seed=4))


def test_annulus_cloud_rejects_empty_annulus():
    with pytest.raises(DomainError):
        annulus_cloud(np.zeros(2), 2.0, 1.0)


# --- Tests for critical_radius ---


@pytest.mark.parametrize("n,b", [(1, 1.0), (2, 0.7), (3, 2.0)])
def test_critical_radius_centered_bubble(n, b):
    bubble = PointFunction.bubble(1.0, b, 2.0)
    result = critical_radius(bubble, bubble, 2.0, np.zeros(n), CriticalSearch(samples=2000))
    assert result.witnessed
    assert not result.infinite
    assert result.lambda_bar == pytest.approx(b, abs=2e-3)


def test_critical_radius_off_center():
    b = 1.0
    x = np.array([0.6, 0.8])
    bubble = PointFunction.bubble(1.0, b, 2.0)
    result = critical_radius(bubble, bubble, 2.0, x, CriticalSearch(samples=4000))
    assert result.lambda_bar == pytest.approx(math.sqrt(b * b + 1.0), abs=5e-3)


def test_critical_radius_infinite_branch():
    """A constant only grows under the transform outside every sphere."""
    constant = PointFunction(lambda y: np.ones(y.shape[0]), provenance="1")
    result = critical_radius(constant, constant, 2.0, np.zeros(2), CriticalSearch(samples=500))
    assert result.infinite
    assert result.lambda_bar is None
    assert result.to_dict()["infinite"] is True


# --- Tests for conformal_residual ---


def test_conformal_residual_exact_bubble():
    b = 1.2
    state = exact_bubble_state(1, 2.0, b=b)
    sphere = SphereMap(center=np.zeros(1), radius=b)
    cloud = annulus_cloud(np.zeros(1), 0.1 * b, 10.0 * b, 64)
    assert conformal_residual(state, sphere, cloud) < 1e-4


def test_conformal_residual_detects_noise():
    state = exact_bubble_state(1, 2.0)
    grid = state.u.radii
    noisy_values = state.u.values * smooth_noise(grid, np.random.default_rng(3), amplitude=0.2)
    noisy = spline_profile(grid, noisy_values, 1, 2.0)
    noisy_state = SystemState(u=noisy, v=noisy, p_exp=2.0, q_exp=2.0)
    sphere = SphereMap(center=np.zeros(1), radius=1.0)
    cloud = annulus_cloud(np.zeros(1), 0.1, 10.0, 64)
    assert conformal_residual(noisy_state, sphere, cloud) > 1e-2


def test_conformal_residual_requires_centered_map():
    state = exact_bubble_state(1, 2.0)
    sphere = SphereMap(center=np.array([0.5]), radius=1.0)
    with pytest.raises(DomainError):
        conformal_residual(state, sphere, np.array([[2.0]]))


def test_residual_report_keys():
    state = exact_bubble_state(1, 2.0)
    report = residual_report(state, SphereMap(center=np.zeros(1), radius=1.0), samples=16, seed=9)
    assert set(report) == {"map", "p", "q", "residual", "samples", "seed"}
    assert report["samples"] == 16
    assert report["seed"] == 9
    assert report["residual"] < 1e-4
