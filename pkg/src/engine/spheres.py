"""
Moving-spheres toolkit: sphere inversion, Kelvin-type transforms, the kernel k
and sampled estimates of the critical radius
"""

import logging
import math
from collections.abc import Callable
from dataclasses import dataclass, field

import numpy as np
from scipy.stats import norm, qmc

from engine.errors import DomainError, SingularPointError
from engine.extremal import SystemState, system_map
from engine.params import QuadSpec
from engine.profiles import RadialProfile

logger = logging.getLogger(__name__)

SINGULAR_FRACTION = 1e-12
CLOUD_SIZE = 10_000
CLOUD_OUTER_RADIUS = 1e3
DEFAULT_SEED = 20240601
INCONCLUSIVE_FACTOR = 10.0


@dataclass(frozen=True, eq=False)
class SphereMap:
    """Inversion in the sphere of the given center and radius."""

    center: np.ndarray
    radius: float

    def __post_init__(self):
        center = np.atleast_1d(np.asarray(self.center, dtype=float))
        if center.ndim != 1:
            raise DomainError("sphere center must be a point")
        if not self.radius > 0.0:
            raise DomainError(f"sphere radius must be positive, got {self.radius}")
        object.__setattr__(self, "center", center)

    @property
    def n(self) -> int:
        return self.center.size

    def to_dict(self) -> dict:
        return {"center": self.center.tolist(), "radius": self.radius}


@dataclass(frozen=True)
class PointFunction:
    """Non-negative function on R^n, evaluated on arrays of shape (k, n)."""

    evaluator: Callable[[np.ndarray], np.ndarray] = field(repr=False)
    provenance: str = ""

    def __call__(self, points: np.ndarray) -> np.ndarray:
        return np.asarray(self.evaluator(_as_points(points)), dtype=float)

    @classmethod
    def bubble(cls, a: float, b: float, p_exp: float, center: np.ndarray | float = 0.0) -> "PointFunction":
        """a (b^2 + |y - center|^2)^(p/2)."""
        if not (a > 0.0 and b > 0.0):
            raise DomainError(f"bubble parameters must be positive, got a={a}, b={b}")
        offset = np.atleast_1d(np.asarray(center, dtype=float))

        def evaluate(points: np.ndarray) -> np.ndarray:
            distance_sq = np.sum((points - offset) ** 2, axis=-1)
            return a * np.power(b * b + distance_sq, 0.5 * p_exp)

        return cls(evaluate, provenance=f"bubble(a={a}, b={b}, p={p_exp}, center={offset.tolist()})")

    @classmethod
    def from_profile(cls, profile: RadialProfile, center: np.ndarray | float = 0.0) -> "PointFunction":
        """The radial profile recentered at `center`."""
        offset = np.atleast_1d(np.asarray(center, dtype=float))

        def evaluate(points: np.ndarray) -> np.ndarray:
            return profile.evaluate(np.linalg.norm(points - offset, axis=-1))

        return cls(evaluate, provenance=f"profile({profile.label or 'unnamed'}, center={offset.tolist()})")


def _as_points(points: np.ndarray) -> np.ndarray:
    points = np.asarray(points, dtype=float)
    return points[None, :] if points.ndim == 1 else points


def _offset(sphere: SphereMap, points: np.ndarray, label: str = "point") -> tuple[np.ndarray, np.ndarray]:
    points = np.asarray(points, dtype=float)
    if points.shape[-1] != sphere.n:
        raise DomainError(f"{label} has dimension {points.shape[-1]}, sphere lives in R^{sphere.n}")
    delta = points - sphere.center
    distance = np.linalg.norm(delta, axis=-1)
    if np.any(distance <= SINGULAR_FRACTION * sphere.radius):
        raise SingularPointError(f"{label} coincides with the inversion center {sphere.center.tolist()}")
    return delta, distance


def invert_point(sphere: SphereMap, xi: np.ndarray) -> np.ndarray:
    """xi -> x + lambda^2 (xi - x) / |xi - x|^2; accepts one point or an array of points."""
    delta, distance = _offset(sphere, xi)
    return sphere.center + sphere.radius**2 * delta / (distance**2)[..., None]


def jacobian_factor(sphere: SphereMap, z: np.ndarray) -> np.ndarray | float:
    """(lambda / |z - x|)^(2n), the Jacobian of the inversion at z."""
    _, distance = _offset(sphere, z)
    factor = (sphere.radius / distance) ** (2 * sphere.n)
    return float(factor) if np.ndim(factor) == 0 else factor


def transform_eval(w: PointFunction, sphere: SphereMap, p_exp: float, xi: np.ndarray) -> np.ndarray | float:
    """w_{x,lambda}(xi) = (|xi - x| / lambda)^p w(xi^{x,lambda})."""
    _, distance = _offset(sphere, xi)
    image = invert_point(sphere, xi)
    values = (distance / sphere.radius) ** p_exp * w(image).reshape(np.shape(distance))
    return float(values) if np.ndim(values) == 0 else values


def kernel_k(sphere: SphereMap, p_exp: float, xi: np.ndarray, z: np.ndarray) -> np.ndarray | float:
    """k = (|xi - x| / lambda)^p |xi^{x,lambda} - z|^p - |xi - z|^p."""
    _, distance = _offset(sphere, xi)
    _offset(sphere, z, "z")
    image = invert_point(sphere, xi)
    value = (distance / sphere.radius) ** p_exp * np.linalg.norm(image - z, axis=-1) ** p_exp - np.linalg.norm(
        np.asarray(xi, dtype=float) - z, axis=-1
    ) ** p_exp
    return float(value) if np.ndim(value) == 0 else value


def kernel_k_gradient(sphere: SphereMap, p_exp: float, xi: np.ndarray, z: np.ndarray) -> np.ndarray:
    """Gradient of k in xi.

    With |xi - x| |xi* - z| = |z - x| |z* - xi| the first term depends on xi
    only through |xi - z*|, which gives
    p (|z - x| / lambda)^p |xi - z*|^(p-2) (xi - z*) - p |xi - z|^(p-2) (xi - z).

    Raises:
        SingularPointError: at xi in {x, z, z*} or z = x.
    """
    xi = np.asarray(xi, dtype=float)
    z = np.asarray(z, dtype=float)
    _offset(sphere, xi)
    _, z_distance = _offset(sphere, z, "z")
    z_image = invert_point(sphere, z)
    to_image = xi - z_image
    to_z = xi - z
    gap_image = np.linalg.norm(to_image, axis=-1)
    gap_z = np.linalg.norm(to_z, axis=-1)
    floor = SINGULAR_FRACTION * sphere.radius
    if np.any(gap_image <= floor) or np.any(gap_z <= floor):
        raise SingularPointError("the kernel gradient is singular at xi = z and at xi = z*")
    first = (z_distance / sphere.radius) ** p_exp * gap_image ** (p_exp - 2.0)
    second = gap_z ** (p_exp - 2.0)
    return p_exp * (np.asarray(first)[..., None] * to_image - np.asarray(second)[..., None] * to_z)


def distance_identity_residual(sphere: SphereMap, xi: np.ndarray, z: np.ndarray) -> np.ndarray:
    """Relative defect of |z - x| |xi - x| |xi* - z*| = lambda^2 |xi - z|."""
    _, xi_distance = _offset(sphere, xi)
    _, z_distance = _offset(sphere, z, "z")
    lhs = z_distance * xi_distance * np.linalg.norm(invert_point(sphere, xi) - invert_point(sphere, z), axis=-1)
    rhs = sphere.radius**2 * np.linalg.norm(np.asarray(xi, dtype=float) - z, axis=-1)
    return np.abs(lhs - rhs) / np.maximum(np.abs(rhs), np.finfo(float).tiny)


def kernel_factorization_residual(sphere: SphereMap, xi: np.ndarray, z: np.ndarray) -> np.ndarray:
    """Defect of (|xi-x|/lambda)^2 |xi*-z|^2 - |xi-z|^2 = (lambda^2-|z-x|^2)(lambda^2-|xi-x|^2)/lambda^2.

    Relative to the size of the two terms on the left.
    """
    _, xi_distance = _offset(sphere, xi)
    _, z_distance = _offset(sphere, z, "z")
    lam_sq = sphere.radius**2
    first = (xi_distance**2 / lam_sq) * np.sum((invert_point(sphere, xi) - z) ** 2, axis=-1)
    second = np.sum((np.asarray(xi, dtype=float) - z) ** 2, axis=-1)
    rhs = (lam_sq - z_distance**2) * (lam_sq - xi_distance**2) / lam_sq
    return np.abs(first - second - rhs) / np.maximum(first + second, np.finfo(float).tiny)


# ---------------------------------------------------------------------------
# Sampled clouds
# ---------------------------------------------------------------------------


def _unit_cloud(n: int, count: int, seed: int) -> np.ndarray:
    return qmc.Halton(d=n + 1, seed=seed).random(count)


def annulus_cloud(
    center: np.ndarray, inner: float, outer: float, count: int = CLOUD_SIZE, seed: int = DEFAULT_SEED
) -> np.ndarray:
    """Deterministic quasi-random points with inner <= |y - center| <= outer, log-uniform in radius."""
    center = np.atleast_1d(np.asarray(center, dtype=float))
    if not 0.0 < inner < outer:
        raise DomainError(f"annulus needs 0 < inner < outer, got {inner}, {outer}")
    n = center.size
    unit = np.clip(_unit_cloud(n, count, seed), 1e-12, 1.0 - 1e-12)
    directions = norm.ppf(unit[:, :n])
    directions /= np.linalg.norm(directions, axis=1, keepdims=True)
    radii = inner * (outer / inner) ** unit[:, n]
    return center + radii[:, None] * directions


@dataclass(frozen=True)
class CriticalSearch:
    lambda_max: float = 10.0
    tol: float = 1e-3
    margin: float = 1e-9
    samples: int = CLOUD_SIZE
    outer_radius: float = CLOUD_OUTER_RADIUS
    seed: int = DEFAULT_SEED


@dataclass(frozen=True)
class CriticalRadius:
    lambda_bar: float | None
    infinite: bool
    witnessed: bool
    deficit: float
    warnings: tuple[str, ...] = ()

    def to_dict(self) -> dict:
        return {
            "lambda_bar": self.lambda_bar,
            "infinite": self.infinite,
            "witnessed": self.witnessed,
            "deficit": self.deficit,
            "warnings": list(self.warnings),
        }


def _worst_deficit(
    u: PointFunction, v: PointFunction, p_exp: float, x: np.ndarray, lam: float, search: CriticalSearch
) -> float:
    """Most negative relative gap w_{x,lambda}/w - 1 over the annulus cloud, for w = u and v."""
    outer = max(search.outer_radius, 10.0 * lam)
    cloud = annulus_cloud(x, lam, outer, search.samples, search.seed)
    sphere = SphereMap(center=x, radius=lam)
    worst = math.inf
    for w in (u, v):
        base = w(cloud)
        gap = transform_eval(w, sphere, p_exp, cloud) / base - 1.0
        worst = min(worst, float(np.min(gap)))
    return worst


def critical_radius(
    u: PointFunction,
    v: PointFunction,
    p_exp: float,
    x: np.ndarray,
    search: CriticalSearch | None = None,
) -> CriticalRadius:
    """Sampled sup of the radii at which u_{x,lambda} >= u and v_{x,lambda} >= v outside the sphere.

    Bisection on lambda of the predicate "relative deficit >= -margin" on a
    fixed quasi-random annulus cloud. Holding at lambda_max is reported as the
    infinite branch ("no violation up to lambda_max").
    """
    search = search or CriticalSearch()
    x = np.atleast_1d(np.asarray(x, dtype=float))

    def holds(lam: float) -> tuple[bool, float]:
        deficit = _worst_deficit(u, v, p_exp, x, lam, search)
        return deficit >= -search.margin, deficit

    ok, deficit = holds(search.lambda_max)
    if ok:
        logger.info(f"No violation up to lambda_max={search.lambda_max} at x={x.tolist()}")
        return CriticalRadius(lambda_bar=None, infinite=True, witnessed=False, deficit=deficit)

    lo = search.lambda_max * 1e-6
    ok_lo, deficit_lo = holds(lo)
    if not ok_lo:
        message = f"predicate fails already at lambda={lo}; the moving spheres cannot start"
        logger.warning(message)
        return CriticalRadius(lambda_bar=lo, infinite=False, witnessed=False, deficit=deficit_lo, warnings=(message,))
    hi = search.lambda_max
    hi_deficit = deficit
    while hi - lo > search.tol:
        mid = 0.5 * (lo + hi)
        ok_mid, deficit_mid = holds(mid)
        if ok_mid:
            lo = mid
        else:
            hi, hi_deficit = mid, deficit_mid
    warnings = ()
    if abs(hi_deficit) < INCONCLUSIVE_FACTOR * search.margin:
        message = f"deficit {hi_deficit:.3e} at lambda={hi} is within sampling noise"
        logger.warning(message)
        warnings = (message,)
    logger.info(f"Critical radius at x={x.tolist()}: {lo:.6g} (bracket width {hi - lo:.1e})")
    return CriticalRadius(lambda_bar=lo, infinite=False, witnessed=True, deficit=hi_deficit, warnings=warnings)


# ---------------------------------------------------------------------------
# Transformed integral equation
# ---------------------------------------------------------------------------


def transformed_profile(w: RadialProfile, radius: float, p_exp: float) -> RadialProfile:
    """w_{0,lambda}(r) = (r / lambda)^p w(lambda^2 / r) for a centered inversion, as a profile.

    Its tail is w(0) r^p / lambda^p; its value at 0 is the limit c lambda^p of
    the tail c r^p of w.
    """
    if not w.has_tail or w.tail_exponent != p_exp:
        raise DomainError("the transform needs a profile with tail c * r^p")
    lam = radius

    def source(r: np.ndarray) -> np.ndarray:
        r = np.asarray(r, dtype=float)
        safe = np.where(r > 0.0, r, 1.0)
        inside = (safe / lam) ** p_exp * w.evaluate(lam * lam / safe)
        return np.where(r > 0.0, inside, w.tail_coefficient * lam**p_exp)

    radii = w.radii
    origin = float(w.evaluate(np.array([0.0]))[0])
    return RadialProfile(
        radii=radii,
        values=source(radii),
        n=w.n,
        tail_exponent=p_exp,
        tail_coefficient=origin / lam**p_exp,
        source=source,
        label=f"{w.label}_(0,{lam})",
    )


def conformal_residual(
    state: SystemState, sphere: SphereMap, sample_points: np.ndarray, spec: QuadSpec | None = None
) -> float:
    """max |u_{x,lambda}(xi) - int |xi - z|^p v_{x,lambda}(z)^(-q) dz| / u_{x,lambda}(xi) over the samples.

    The inversion must be centered at the origin, the center of the radial state.
    """
    if sphere.n != state.n:
        raise DomainError(f"sphere lives in R^{sphere.n}, state in R^{state.n}")
    if np.any(sphere.center != 0.0):
        raise DomainError("conformal residuals are computed for inversions centered at the origin")
    p, q = state.p_exp, state.q_exp
    points = _as_points(sample_points)
    lhs = np.atleast_1d(transform_eval(PointFunction.from_profile(state.u), sphere, p, points))
    v_transformed = transformed_profile(state.v, sphere.radius, p)
    rhs = system_map(v_transformed, p, q, np.linalg.norm(points, axis=-1), spec)
    residual = float(np.max(np.abs(lhs - rhs) / lhs))
    logger.debug(f"Conformal residual for radius {sphere.radius}: {residual:.3e}")
    return residual


def residual_report(
    state: SystemState,
    sphere: SphereMap,
    samples: int = 64,
    seed: int = DEFAULT_SEED,
    spec: QuadSpec | None = None,
) -> dict:
    """Conformal residual on a seeded cloud with lambda/10 <= |xi| <= 10 lambda."""
    cloud = annulus_cloud(sphere.center, 0.1 * sphere.radius, 10.0 * sphere.radius, samples, seed)
    residual = conformal_residual(state, sphere, cloud, spec)
    return {
        "map": sphere.to_dict(),
        "p": state.p_exp,
        "q": state.q_exp,
        "residual": residual,
        "samples": samples,
        "seed": seed,
    }
