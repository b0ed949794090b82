"""
Radial quadratures for the reversed HLS functional

For radial f and g the 2n-dimensional integral collapses to

    I(f, g) = |S^(n-1)| * int int f(r) g(s) A(r, s) r^(n-1) s^(n-1) dr ds,

where A(r, s) is the integral of |r e_1 - s w|^lambda over the unit sphere.
Integrals over [0, R] use composite Gauss-Legendre panels graded towards the
kinks of the integrand; power tails beyond R are integrated after the change
of variables w = (R / s)^beta, which turns c * s^(-beta - 1) into a constant.
Pairs of plain radial step functions skip both: they are sums of ball
indicators, and two balls interact through a one-dimensional integral over
the distance of their centers.
"""

import logging
import math
from collections.abc import Callable
from dataclasses import dataclass

import numpy as np
from scipy.special import betainc, hyp2f1

from engine.constants import (
    log_limit_constant,
    lower_bound_constant,
    provable_lower_bound_constant,
    sharp_reversed_constant,
    sphere_area,
    unit_ball_volume,
)
from engine.errors import DivergenceError, DomainError, RefinementExhaustedError
from engine.grids import GL_ORDER, graded_breakpoints, log_breakpoints, panel_rule
from engine.grids import tail_rule as grid_tail_rule
from engine.params import Params, QuadSpec
from engine.profiles import RadialProfile, l1_entropy, lp_quantity

logger = logging.getLogger(__name__)

INNER_FRACTION = 1e-4
TAIL_W_MIN = 1e-12
MAX_LOG_RADIUS = 600.0
MAX_GRADED_MARKS = 64
LOG_KERNEL_STEP = 1e-5
BALL_PAIR_PANELS = 8
BALL_GRADING_DECADES = 12.0
MAX_BALL_PAIRS = 4096

Kernel = Callable[[np.ndarray, np.ndarray], np.ndarray]


@dataclass(frozen=True)
class Estimate:
    """A quadrature value with the relative change of its last refinement."""

    value: float
    rel_err: float
    level: int = 0


@dataclass(frozen=True)
class KernelTable:
    radii_row: np.ndarray
    radii_col: np.ndarray
    entries: np.ndarray
    lam: float
    n: int

    def is_symmetric(self, tol: float = 1e-12) -> bool:
        if self.entries.shape[0] != self.entries.shape[1]:
            return False
        scale = max(float(np.max(np.abs(self.entries))), 1e-300)
        return bool(np.max(np.abs(self.entries - self.entries.T)) <= tol * scale)


@dataclass(frozen=True)
class VerificationResult:
    n: int
    p: float
    r: float
    lam: float
    lhs: float
    rhs_lower: float
    rhs_printed: float
    rhs_sharp: float | None
    margin: float
    rel_err_estimate: float
    passed: bool

    def to_dict(self) -> dict:
        return {
            "n": self.n,
            "p": self.p,
            "r": self.r,
            "lambda": self.lam,
            "lhs": self.lhs,
            "rhs_lower": self.rhs_lower,
            "rhs_printed": self.rhs_printed,
            "rhs_sharp": self.rhs_sharp,
            "margin": self.margin,
            "rel_err_estimate": self.rel_err_estimate,
            "pass": self.passed,
        }


@dataclass(frozen=True)
class LogVerificationResult:
    n: int
    lhs: float
    rhs: float
    constant: float
    margin: float
    rel_err_estimate: float
    passed: bool

    def to_dict(self) -> dict:
        return {
            "n": self.n,
            "lhs": self.lhs,
            "rhs": self.rhs,
            "constant": self.constant,
            "margin": self.margin,
            "rel_err_estimate": self.rel_err_estimate,
            "pass": self.passed,
        }


# ---------------------------------------------------------------------------
# Kernels
# ---------------------------------------------------------------------------


def _hypergeometric_mean(n: int, lam: float, z: np.ndarray) -> np.ndarray:
    # mean of |e - rho w|^lam over S^(n-1), z = rho^2 <= 1
    return hyp2f1(-0.5 * lam, 1.0 - 0.5 * (n + lam), 0.5 * n, z)


def kernel_values(n: int, lam: float, r: np.ndarray, s: np.ndarray) -> np.ndarray:
    """Closed-form A(r, s) with broadcasting; exact two-point sum for n = 1."""
    r = np.asarray(r, dtype=float)
    s = np.asarray(s, dtype=float)
    if n == 1:
        return np.abs(r - s) ** lam + (r + s) ** lam
    big = np.maximum(r, s)
    small = np.minimum(r, s)
    with np.errstate(divide="ignore", invalid="ignore"):
        rho = np.where(big > 0.0, small / big, 0.0)
    return sphere_area(n) * big**lam * _hypergeometric_mean(n, lam, rho * rho)


def log_kernel_values(n: int, r: np.ndarray, s: np.ndarray) -> np.ndarray:
    """Spherical integral of log|r e_1 - s w|, the lambda-derivative of A at 0.

    For n >= 2 the derivative of the hypergeometric factor is taken by central
    differences with one Richardson step.
    """
    r = np.asarray(r, dtype=float)
    s = np.asarray(s, dtype=float)
    with np.errstate(divide="ignore"):
        if n == 1:
            return np.log(np.abs(r - s)) + np.log(r + s)
        big = np.maximum(r, s)
        small = np.minimum(r, s)
        with np.errstate(invalid="ignore"):
            rho = np.where(big > 0.0, small / big, 0.0)
        z = rho * rho

        def central(h: float) -> np.ndarray:
            return (_hypergeometric_mean(n, h, z) - _hypergeometric_mean(n, -h, z)) / (2.0 * h)

        h = LOG_KERNEL_STEP
        derivative = (4.0 * central(0.5 * h) - central(h)) / 3.0
        return sphere_area(n) * (np.log(big) + derivative)


def _angular_rule(nodes: int) -> tuple[np.ndarray, np.ndarray]:
    panels = max(2, nodes // GL_ORDER)
    uniform = np.linspace(0.0, math.pi, panels + 1)
    # grading towards theta = 0 where |x - y|^lambda has its kink when r = s
    graded = (math.pi / panels) * 0.25 ** np.arange(1, panels // 2 + 1)
    return panel_rule(np.concatenate((uniform, graded)))


def _angular_sum(n: int, lam: float, r: np.ndarray, s: np.ndarray, nodes: int) -> np.ndarray:
    theta, weights = _angular_rule(nodes)
    cosine = np.cos(theta)
    distance_sq = r[..., None] ** 2 + s[..., None] ** 2 - 2.0 * r[..., None] * s[..., None] * cosine
    integrand = np.maximum(distance_sq, 0.0) ** (0.5 * lam)
    if n > 2:
        integrand = integrand * np.sin(theta) ** (n - 2)
    return sphere_area(n - 1) * np.sum(integrand * weights, axis=-1)


def _refine_angular(n: int, lam: float, r: np.ndarray, s: np.ndarray, spec: QuadSpec) -> np.ndarray:
    previous = _angular_sum(n, lam, r, s, spec.angular_nodes)
    for level in range(1, spec.max_refinements + 1):
        current = _angular_sum(n, lam, r, s, spec.angular_nodes * 2**level)
        scale = np.maximum(np.abs(current), 1e-300)
        change = float(np.max(np.abs(current - previous) / scale))
        logger.debug(f"Angular refinement level {level}: max relative change {change:.3e}")
        if change <= spec.target_rel_tol:
            return current
        previous = current
    raise RefinementExhaustedError(
        f"angular average did not reach {spec.target_rel_tol} after {spec.max_refinements} refinements",
        previous=float(np.ravel(previous)[0]),
        last=float(np.ravel(current)[0]),
    )


def _check_kernel_args(n: int, lam: float) -> None:
    if int(n) != n or n < 1:
        raise DomainError(f"dimension must be a positive integer, got {n}")
    if not lam > 0.0:
        raise DomainError(f"lambda must be positive, got {lam}")


def angular_average(n: int, lam: float, r: float, s: float, spec: QuadSpec | None = None) -> float:
    """Integral of |r e_1 - s w|^lambda over the unit sphere S^(n-1).

    n = 1 is the exact two-point sum. For n >= 2 the polar angle is integrated
    with weight |S^(n-2)| sin^(n-2), doubling the nodes until two estimates
    agree within spec.target_rel_tol.

    Raises:
        RefinementExhaustedError: with the last two estimates.
    """
    _check_kernel_args(n, lam)
    if r < 0.0 or s < 0.0:
        raise DomainError(f"radii must be non-negative, got r={r}, s={s}")
    if n == 1:
        return abs(r - s) ** lam + (r + s) ** lam
    spec = spec or QuadSpec()
    return float(_refine_angular(n, lam, np.array(float(r)), np.array(float(s)), spec))


def build_kernel_table(
    f_grid: np.ndarray, g_grid: np.ndarray, n: int, lam: float, spec: QuadSpec | None = None
) -> KernelTable:
    """Dense table A[i][j] = angular_average(f_grid[i], g_grid[j])."""
    _check_kernel_args(n, lam)
    rows = np.asarray(f_grid, dtype=float)
    cols = np.asarray(g_grid, dtype=float)
    if np.any(rows < 0.0) or np.any(cols < 0.0):
        raise DomainError("kernel table radii must be non-negative")
    r, s = np.meshgrid(rows, cols, indexing="ij")
    if n == 1:
        entries = kernel_values(1, lam, r, s)
    else:
        entries = _refine_angular(n, lam, r, s, spec or QuadSpec())
    if rows.shape == cols.shape and np.array_equal(rows, cols):
        entries = 0.5 * (entries + entries.T)
    logger.debug(f"Built {entries.shape[0]}x{entries.shape[1]} kernel table for n={n}, lambda={lam}")
    return KernelTable(radii_row=rows, radii_col=cols, entries=entries, lam=lam, n=n)


# ---------------------------------------------------------------------------
# Panel construction
# ---------------------------------------------------------------------------


def _grading_levels(spec: QuadSpec) -> int:
    return max(4, spec.radial_nodes_per_decade // 16)


def _panels_per_decade(spec: QuadSpec) -> int:
    return max(2, spec.radial_nodes_per_decade // GL_ORDER)


def segment_rule(
    lo: float, hi: float, marks: np.ndarray | list[float], spec: QuadSpec
) -> tuple[np.ndarray, np.ndarray]:
    """Panels on [lo, hi]: geometric towards lo, graded on both sides of each mark."""
    if hi <= lo:
        return np.empty(0), np.empty(0)
    per = _panels_per_decade(spec)
    start = hi * INNER_FRACTION if lo == 0.0 else lo
    decades = math.log10(hi / start) if start > 0.0 else 0.0
    if decades > 20.0:
        per = max(2, per // 2)
    marks = np.asarray(marks, dtype=float)
    marks = marks[(marks > lo) & (marks <= hi)]
    edges = np.unique(np.concatenate(([lo, hi], log_breakpoints(start, hi, per), marks)))
    if 0 < marks.size <= MAX_GRADED_MARKS:
        levels = _grading_levels(spec)
        extra = []
        for mark in np.unique(marks):
            index = int(np.searchsorted(edges, mark))
            left = edges[index - 1] if index > 0 else mark
            right = edges[index + 1] if index + 1 < edges.size else mark
            extra.append(graded_breakpoints(mark, left, right, levels))
        edges = np.unique(np.concatenate([edges, *extra]))
    return panel_rule(edges)


def tail_rule(start: float, beta: float, spec: QuadSpec) -> tuple[np.ndarray, np.ndarray]:
    """Nodes and weights on [start, inf) for integrands decaying like s^(-beta - 1)."""
    per = max(2, _panels_per_decade(spec) // 2)
    return grid_tail_rule(start, beta, per, w_min=TAIL_W_MIN, max_log=MAX_LOG_RADIUS)


def _tail_beta(profile: RadialProfile, growth: float) -> float:
    """Decay rate beta of f(s) s^(n-1) s^growth, as s^(-beta - 1).

    Raises:
        DivergenceError: when beta <= 0.
    """
    beta = -(profile.tail_exponent + profile.n + growth)
    if beta <= 0.0:
        raise DivergenceError(
            f"tail r^{profile.tail_exponent} against growth r^{growth} is not integrable in R^{profile.n}"
        )
    return beta


def _kinks(profile: RadialProfile) -> np.ndarray:
    return profile.breakpoints()


# ---------------------------------------------------------------------------
# Potentials and functionals
# ---------------------------------------------------------------------------


def _potential_one(f: RadialProfile, kernel: Kernel, growth: float, x: float, spec: QuadSpec) -> float:
    R = f.R
    marks = list(_kinks(f))
    if x < R:
        marks.append(x)
    parts = [segment_rule(0.0, R, marks, spec)]
    if f.has_tail:
        beta = _tail_beta(f, growth)
        if x <= R:
            parts.append(tail_rule(R, beta, spec))
        else:
            parts.append(segment_rule(R, x, [x], spec))
            parts.append(tail_rule(x, beta, spec))
    nodes = np.concatenate([p[0] for p in parts])
    weights = np.concatenate([p[1] for p in parts])
    integrand = f.evaluate(nodes) * kernel(np.full_like(nodes, x), nodes) * nodes ** (f.n - 1)
    return float(np.sum(weights * integrand))


def _potential_many(f: RadialProfile, kernel: Kernel, growth: float, radii: np.ndarray, spec: QuadSpec) -> np.ndarray:
    return np.array([_potential_one(f, kernel, growth, float(x), spec) for x in np.ravel(radii)])


def potential_values(f: RadialProfile, lam: float, radii: np.ndarray, spec: QuadSpec | None = None) -> np.ndarray:
    """I_lambda f at each radius, at the resolution of `spec` (no refinement)."""
    _check_kernel_args(f.n, lam)
    spec = spec or QuadSpec()
    radii = np.asarray(radii, dtype=float)
    if np.any(radii < 0.0):
        raise DomainError("radii must be non-negative")
    if f.is_zero:
        return np.zeros(radii.size)
    kernel = lambda x, s: kernel_values(f.n, lam, x, s)  # noqa: E731
    return _potential_many(f, kernel, lam, radii, spec)


def _refine(compute: Callable[[QuadSpec], float], spec: QuadSpec, label: str) -> Estimate:
    previous = compute(spec)
    last = previous
    for level in range(1, spec.max_refinements + 1):
        last = compute(spec.refined(level))
        change = abs(last - previous) / max(abs(last), 1e-300)
        logger.debug(f"{label} refinement level {level}: {last:.12g} (relative change {change:.3e})")
        if change <= spec.target_rel_tol or last == previous:
            return Estimate(value=last, rel_err=change, level=level)
        previous = last
    raise RefinementExhaustedError(
        f"{label} did not reach relative tolerance {spec.target_rel_tol} after {spec.max_refinements} refinements",
        previous=previous,
        last=last,
    )


def estimate_potential(f: RadialProfile, lam: float, x_radius: float, spec: QuadSpec | None = None) -> Estimate:
    _check_kernel_args(f.n, lam)
    if x_radius < 0.0:
        raise DomainError(f"radius must be non-negative, got {x_radius}")
    spec = spec or QuadSpec()
    if f.is_zero:
        return Estimate(0.0, 0.0)
    if f.has_tail:
        _tail_beta(f, lam)
    return _refine(lambda s: float(potential_values(f, lam, [x_radius], s)[0]), spec, "potential")


def potential_at(f: RadialProfile, lam: float, x_radius: float, spec: QuadSpec | None = None) -> float:
    """(I_lambda f)(x) for any x with |x| = x_radius.

    Raises:
        DivergenceError: if the tail of f is too heavy for the kernel.
    """
    return estimate_potential(f, lam, x_radius, spec).value


def _outer_pass(
    f: RadialProfile, g: RadialProfile, kernel: Kernel, growth: float, spec: QuadSpec
) -> float:
    # |S^(n-1)| * int g(r) P_f(r) r^(n-1) dr
    parts = [segment_rule(0.0, g.R, np.concatenate((_kinks(g), _kinks(f))), spec)]
    if g.has_tail:
        parts.append(tail_rule(g.R, _tail_beta(g, growth), spec))
    nodes = np.concatenate([p[0] for p in parts])
    weights = np.concatenate([p[1] for p in parts])
    g_values = g.evaluate(nodes)
    live = g_values > 0.0
    potential = np.zeros_like(nodes)
    potential[live] = _potential_many(f, kernel, growth, nodes[live], spec)
    return sphere_area(f.n) * float(np.sum(weights * g_values * potential * nodes ** (g.n - 1)))


def _symmetric_pair(f: RadialProfile, g: RadialProfile, kernel: Kernel, growth: float, spec: QuadSpec) -> float:
    forward = _outer_pass(f, g, kernel, growth, spec)
    if g is f:
        return forward
    # both orders, averaged, so that swapping f and g gives the same float
    return 0.5 * (forward + _outer_pass(g, f, kernel, growth, spec))


# ---------------------------------------------------------------------------
# Radial step functions as sums of balls
# ---------------------------------------------------------------------------


def _is_plain_step(profile: RadialProfile) -> bool:
    return profile.kind == "step" and not profile.has_tail and profile.source is None


def _ball_weights(profile: RadialProfile) -> tuple[np.ndarray, np.ndarray]:
    """Radii r_i and weights w_i with f = sum_i w_i 1_{|x| < r_i} almost everywhere."""
    levels = profile.values[:-1]
    weights = levels - np.append(levels[1:], 0.0)
    radii = profile.radii[1:]
    keep = weights != 0.0
    return radii[keep], weights[keep]


def _cap_volume(n: int, radius: np.ndarray, offset: np.ndarray) -> np.ndarray:
    """Volume of {|y| <= radius, y_1 >= offset} for |offset| <= radius."""
    ratio = np.clip(offset / radius, -1.0, 1.0)
    half = 0.5 * betainc(0.5 * (n + 1), 0.5, 1.0 - ratio * ratio)
    return unit_ball_volume(n) * radius**n * np.where(ratio >= 0.0, half, 1.0 - half)


def overlap_volume(n: int, a: np.ndarray, b: np.ndarray, t: np.ndarray) -> np.ndarray:
    """|B(0, a) and B(t e_1, b) intersected| for |a - b| <= t <= a + b."""
    a, b, t = np.broadcast_arrays(*(np.asarray(v, dtype=float) for v in (a, b, t)))
    offset = (t * t + a * a - b * b) / (2.0 * t)
    return _cap_volume(n, a, offset) + _cap_volume(n, b, t - offset)


def _angle_rule(panels: int) -> tuple[np.ndarray, np.ndarray]:
    # uniform panels on [0, pi], graded geometrically into the first one
    uniform = np.linspace(0.0, math.pi, panels + 1)
    graded = uniform[1] * np.logspace(-BALL_GRADING_DECADES, 0.0, 3 * panels, endpoint=False)
    return panel_rule(np.unique(np.concatenate(([0.0], graded, uniform))))


def ball_pair_integral(
    n: int, lam: float, a: np.ndarray, b: np.ndarray, panels: int = BALL_PAIR_PANELS, log: bool = False
) -> np.ndarray:
    """Integral over B(0, a) x B(0, b) of |x - y|^lam, or of log|x - y| when `log` is set.

    Uses the distance distribution: the pair integral equals
    |S^(n-1)| * int t^(n-1) k(t) V(t) dt with V the overlap volume of the two
    balls at center distance t. V is the smaller ball's volume up to
    t = |a - b|; beyond, t = |a - b| + min(a, b) (1 - cos phi) smooths the
    square-root behaviour at both tangencies.
    """
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    lo, hi = np.minimum(a, b), np.maximum(a, b)
    gap = hi - lo
    phi, weights = _angle_rule(panels)
    t = gap[..., None] + 2.0 * lo[..., None] * np.sin(0.5 * phi) ** 2
    jacobian = lo[..., None] * np.sin(phi)
    kernel = np.log(t) if log else t**lam
    volume = overlap_volume(n, lo[..., None], hi[..., None], t)
    lens = np.sum(weights * t ** (n - 1) * kernel * volume * jacobian, axis=-1)
    if log:
        with np.errstate(divide="ignore", invalid="ignore"):
            inner = np.where(gap > 0.0, gap**n * (np.log(gap) / n - 1.0 / n**2), 0.0)
    else:
        inner = gap ** (lam + n) / (lam + n)
    return sphere_area(n) * (unit_ball_volume(n) * lo**n * inner + lens)


def _step_pair_estimate(f: RadialProfile, g: RadialProfile, lam: float, log: bool = False) -> Estimate | None:
    """Double integral of f(x) k(|x - y|) g(y) for plain radial steps; None when the pair grid is too large."""
    radii_f, weights_f = _ball_weights(f)
    radii_g, weights_g = _ball_weights(g)
    if radii_f.size * radii_g.size > MAX_BALL_PAIRS:
        return None
    a, b = np.meshgrid(radii_f, radii_g, indexing="ij")
    products = np.outer(weights_f, weights_g)
    coarse = math.fsum((products * ball_pair_integral(f.n, lam, a, b, BALL_PAIR_PANELS, log)).ravel())
    value = math.fsum((products * ball_pair_integral(f.n, lam, a, b, 2 * BALL_PAIR_PANELS, log)).ravel())
    change = abs(value - coarse) / max(abs(value), 1e-300)
    logger.debug(f"ball-pair sum over {products.size} pairs: {value:.12g} (relative change {change:.3e})")
    return Estimate(value=value, rel_err=change, level=1)


def _check_pair(f: RadialProfile, g: RadialProfile) -> None:
    if f.n != g.n:
        raise DomainError(f"profiles live in different dimensions ({f.n} and {g.n})")


def estimate_bilinear(f: RadialProfile, g: RadialProfile, lam: float, spec: QuadSpec | None = None) -> Estimate:
    """I(f, g) with the relative change of its last refinement."""
    _check_pair(f, g)
    _check_kernel_args(f.n, lam)
    spec = spec or QuadSpec()
    if f.is_zero or g.is_zero:
        return Estimate(0.0, 0.0)
    for profile in (f, g):
        if profile.has_tail:
            _tail_beta(profile, lam)
    if _is_plain_step(f) and _is_plain_step(g):
        exact = _step_pair_estimate(f, g, lam)
        if exact is not None:
            return exact
    kernel = lambda x, s: kernel_values(f.n, lam, x, s)  # noqa: E731
    return _refine(lambda level_spec: _symmetric_pair(f, g, kernel, lam, level_spec), spec, "bilinear")


def bilinear_functional(f: RadialProfile, g: RadialProfile, lam: float, spec: QuadSpec | None = None) -> float:
    """I(f, g) = double integral of f(x) |x - y|^lambda g(y).

    Raises:
        DivergenceError: when a tail decays no faster than |x|^(-n - lambda).
        RefinementExhaustedError: when refinement stalls above the tolerance.
    """
    return estimate_bilinear(f, g, lam, spec).value


def _norm_of_potential(f: RadialProfile, lam: float, q: float, spec: QuadSpec) -> float:
    R = f.R
    beta = -(lam * q + f.n)
    parts = [segment_rule(0.0, R, _kinks(f), spec), tail_rule(R, beta, spec)]
    nodes = np.concatenate([p[0] for p in parts])
    weights = np.concatenate([p[1] for p in parts])
    potential = potential_values(f, lam, nodes, spec)
    if np.any(potential <= 0.0):
        raise DomainError("negative exponents need a strictly positive potential")
    return sphere_area(f.n) * float(np.sum(weights * potential**q * nodes ** (f.n - 1)))


def estimate_neg_exponent_norm(
    f: RadialProfile, lam: float, q: float, spec: QuadSpec | None = None, refine: bool = True
) -> Estimate:
    """Negative-exponent norm of the potential; `refine=False` evaluates once at `spec`."""
    _check_kernel_args(f.n, lam)
    if not q < 0.0:
        raise DomainError(f"q must be negative, got {q}")
    if not lam * q < -f.n:
        raise DivergenceError(f"(I f)^q ~ |x|^(lambda q) is not integrable: lambda*q={lam * q} >= -n={-f.n}")
    if f.is_zero:
        raise DomainError("the potential of the zero profile has no negative-exponent norm")
    if f.has_tail:
        _tail_beta(f, lam)
    spec = spec or QuadSpec()
    if not refine:
        return Estimate(_norm_of_potential(f, lam, q, spec) ** (1.0 / q), float("nan"))
    integral = _refine(lambda level_spec: _norm_of_potential(f, lam, q, level_spec), spec, "negative-exponent norm")
    return Estimate(integral.value ** (1.0 / q), abs(integral.rel_err / q), integral.level)


def neg_exponent_norm(f: RadialProfile, lam: float, q: float, spec: QuadSpec | None = None) -> float:
    """(int (I_lambda f)^q dx)^(1/q) for q < 0.

    Raises:
        DivergenceError: unless lambda * q < -n.
    """
    return estimate_neg_exponent_norm(f, lam, q, spec).value


def quotient(f: RadialProfile, params: Params, spec: QuadSpec | None = None) -> float:
    """||I_lambda f||_q / ||f||_p, the quantity minimized over f."""
    if f.n != params.n:
        raise DomainError(f"profile dimension {f.n} does not match n={params.n}")
    return neg_exponent_norm(f, params.lam, params.q, spec) / lp_quantity(f, params.p)


def estimate_log_bilinear(f: RadialProfile, g: RadialProfile, spec: QuadSpec | None = None) -> Estimate:
    _check_pair(f, g)
    spec = spec or QuadSpec()
    if f.is_zero or g.is_zero:
        return Estimate(0.0, 0.0)
    for profile in (f, g):
        if profile.has_tail:
            _tail_beta(profile, 0.0)
    if _is_plain_step(f) and _is_plain_step(g):
        exact = _step_pair_estimate(f, g, 0.0, log=True)
        if exact is not None:
            return Estimate(-exact.value, exact.rel_err, exact.level)
    kernel = lambda x, s: log_kernel_values(f.n, x, s)  # noqa: E731
    estimate = _refine(lambda level_spec: _symmetric_pair(f, g, kernel, 0.0, level_spec), spec, "log bilinear")
    return Estimate(-estimate.value, estimate.rel_err, estimate.level)


def log_bilinear_functional(f: RadialProfile, g: RadialProfile, spec: QuadSpec | None = None) -> float:
    """-double integral of f(x) log|x - y| g(y)."""
    return estimate_log_bilinear(f, g, spec).value


def _acceptance(lhs: float, rhs: float, tolerance: float) -> bool:
    return lhs >= rhs - tolerance * abs(rhs)


def verify_inequality(
    f: RadialProfile, g: RadialProfile, params: Params, spec: QuadSpec | None = None
) -> VerificationResult:
    """Check I(f, g) >= C ||f||_p ||g||_r.

    `pass` uses the provable layer-cake constant and, for diagonal exponents with
    0 < lambda < n, the sharp one. The printed constant is reported as rhs_printed.
    """
    _check_pair(f, g)
    if f.n != params.n:
        raise DomainError(f"profile dimension {f.n} does not match n={params.n}")
    spec = spec or QuadSpec()
    estimate = estimate_bilinear(f, g, params.lam, spec)
    norms = lp_quantity(f, params.p) * lp_quantity(g, params.r)
    rhs_lower = provable_lower_bound_constant(params) * norms
    rhs_printed = lower_bound_constant(params) * norms
    rhs_sharp = None
    if params.is_diagonal and 0.0 < params.lam < params.n:
        rhs_sharp = sharp_reversed_constant(params.n, params.lam).value * norms
    tolerance = 10.0 * spec.target_rel_tol + estimate.rel_err
    strongest = rhs_lower if rhs_sharp is None else max(rhs_lower, rhs_sharp)
    passed = _acceptance(estimate.value, rhs_lower, tolerance)
    if rhs_sharp is not None:
        passed = passed and _acceptance(estimate.value, rhs_sharp, tolerance)
    logger.info(
        f"Reversed HLS check n={params.n}, lambda={params.lam}: lhs={estimate.value:.10g}, "
        f"rhs={strongest:.10g}, pass={passed}"
    )
    return VerificationResult(
        n=params.n,
        p=params.p,
        r=params.r,
        lam=params.lam,
        lhs=estimate.value,
        rhs_lower=rhs_lower,
        rhs_printed=rhs_printed,
        rhs_sharp=rhs_sharp,
        margin=estimate.value - strongest,
        rel_err_estimate=estimate.rel_err,
        passed=passed,
    )


def verify_log_inequality(f: RadialProfile, g: RadialProfile, spec: QuadSpec | None = None) -> LogVerificationResult:
    """Check the logarithmic limit of the diagonal inequality.

    lhs = double integral of f log|x - y| g, and
    rhs = C* |f|_1 |g|_1 + (|f|_1 ln|f|_1 - int f ln f) |g|_1 / 2n + (same with f, g swapped).
    """
    _check_pair(f, g)
    spec = spec or QuadSpec()
    n = f.n
    estimate = estimate_log_bilinear(f, g, spec)
    lhs = -estimate.value
    mass_f, entropy_f = l1_entropy(f)
    mass_g, entropy_g = l1_entropy(g)
    if mass_f <= 0.0 or mass_g <= 0.0:
        raise DomainError("the logarithmic inequality needs profiles with positive mass")
    constant = log_limit_constant(n)
    rhs = (
        constant * mass_f * mass_g
        + (mass_f * math.log(mass_f) - entropy_f) * mass_g / (2.0 * n)
        + (mass_g * math.log(mass_g) - entropy_g) * mass_f / (2.0 * n)
    )
    passed = _acceptance(lhs, rhs, 10.0 * spec.target_rel_tol + estimate.rel_err)
    logger.info(f"Log HLS check n={n}: lhs={lhs:.10g}, rhs={rhs:.10g}, pass={passed}")
    return LogVerificationResult(
        n=n,
        lhs=lhs,
        rhs=rhs,
        constant=constant,
        margin=lhs - rhs,
        rel_err_estimate=estimate.rel_err,
        passed=passed,
    )
