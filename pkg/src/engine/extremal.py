"""
Euler-Lagrange integral system and the variational quotient

The system is u(x) = T(v)(x), v(x) = T(u)(x) with
T(w)(x) = int |x - y|^p w(y)^(-q) dy and q = 1 + 2n/p. T has scaling degree
-q, so iterates are renormalized to the anchor u(0) = target after every
step; the converged shape is then rescaled and dilated onto an exact solution.
"""

import logging
import math
from dataclasses import dataclass, field

import numpy as np

from engine.constants import sphere_area
from engine.errors import ConvergenceError, DivergenceError, DomainError
from engine.grids import make_grid, panel_rule
from engine.params import Params, QuadSpec
from engine.profiles import (
    ExtremizerKind,
    RadialProfile,
    extremizer,
    fit_extremizer,
    lp_quantity,
    radial_integral,
    spline_profile,
)
from engine.quadrature import estimate_neg_exponent_norm, potential_values, quotient
from engine.special import log_gamma

logger = logging.getLogger(__name__)

ANCHOR_VALUE_AT_ZERO = "value_at_zero"
DEFAULT_THETA = 0.5
MIN_THETA = 1.0 / 64.0
DEFAULT_TOL = 1e-6
DEFAULT_MAX_ITER = 200
SOLVER_NODES = 256
SOLVER_RADIUS = 50.0
NOISE_AMPLITUDE = 0.05
NOISE_MODES = 3
FAR_FIELD_FACTOR = 1e3
QUOTIENT_EVERY = 5
MONOTONE_SLACK = 1e-8
STALL_WINDOW = 10
STALL_GAIN = 0.05
MAX_SOLVER_REFINEMENTS = 2


def critical_q(n: int, p_exp: float) -> float:
    """q = 1 + 2n/p, the only exponent admitting solutions."""
    if not p_exp > 0.0:
        raise DomainError(f"p must be positive, got {p_exp}")
    q_exp = 1.0 + 2.0 * n / p_exp
    # 2n - pq + p = 0 is what makes the Kelvin transform preserve the system
    if not math.isclose(2.0 * n - p_exp * q_exp + p_exp, 0.0, abs_tol=1e-9 * max(1.0, n)):
        raise DomainError(f"exponent identity fails for n={n}, p={p_exp}, q={q_exp}")
    return q_exp


@dataclass
class Residuals:
    res_u: float
    res_v: float

    @property
    def worst(self) -> float:
        return max(self.res_u, self.res_v)

    def to_dict(self) -> dict:
        return {"res_u": self.res_u, "res_v": self.res_v}


@dataclass
class SystemState:
    """A (u, v) pair for the integral system with its iteration diagnostics."""

    u: RadialProfile
    v: RadialProfile
    p_exp: float
    q_exp: float
    iteration: int = 0
    residual_history: list[float] = field(default_factory=list)
    normalization: dict = field(default_factory=lambda: {"anchor": ANCHOR_VALUE_AT_ZERO, "target": 1.0})
    fitted_a: float | None = None
    fitted_b: float | None = None
    fit_rms: float | None = None
    converged: bool = False
    quad: QuadSpec | None = None
    refinements: int = 0

    def __post_init__(self):
        if not self.p_exp > 0.0 or not self.q_exp > 0.0:
            raise DomainError(f"exponents must be positive, got p={self.p_exp}, q={self.q_exp}")
        if self.u.n != self.v.n:
            raise DomainError("u and v live in different dimensions")
        if self.q_exp > 1.0 + 2.0 * self.n / self.p_exp + 1e-12:
            raise DomainError(f"q={self.q_exp} exceeds 1 + 2n/p = {1.0 + 2.0 * self.n / self.p_exp}")
        if np.any(self.u.values <= 0.0) or np.any(self.v.values <= 0.0):
            raise DomainError("u and v must be strictly positive")
        for name, profile in (("u", self.u), ("v", self.v)):
            if profile.tail_exponent != self.p_exp:
                logger.debug(f"{name} has tail exponent {profile.tail_exponent}, expected {self.p_exp}")

    @property
    def n(self) -> int:
        return self.u.n

    @property
    def symmetric(self) -> bool:
        return self.u is self.v


@dataclass(frozen=True)
class GrowthLimits:
    lim_u: float
    lim_v: float
    mass_u: float
    mass_v: float
    match_u: float
    match_v: float
    r_far: float
    envelope_min: float
    envelope_max: float

    def to_dict(self) -> dict:
        return {
            "lim_u": self.lim_u,
            "lim_v": self.lim_v,
            "mass_u": self.mass_u,
            "mass_v": self.mass_v,
            "match_u": self.match_u,
            "match_v": self.match_v,
            "r_far": self.r_far,
            "envelope_min": self.envelope_min,
            "envelope_max": self.envelope_max,
        }


@dataclass
class MinimizationResult:
    f: RadialProfile
    quotient: float
    iterations: int
    residual_history: list[float]
    quotient_history: list[float]
    experimental: bool
    monotone: bool

    def to_dict(self) -> dict:
        return {
            "quotient": self.quotient,
            "iterations": self.iterations,
            "residuals": self.residual_history,
            "quotient_history": self.quotient_history,
            "experimental": self.experimental,
            "quotient_monotone": self.monotone,
            "decreasing": self.f.decreasing,
        }


# ---------------------------------------------------------------------------
# The integral map
# ---------------------------------------------------------------------------


def _inverse_power(w: RadialProfile, q_exp: float) -> RadialProfile:
    if not w.has_tail:
        raise DivergenceError("w^(-q) is infinite where w vanishes beyond its grid")
    if np.any(w.values <= 0.0):
        raise DomainError("w must be strictly positive")
    return RadialProfile(
        radii=w.radii,
        values=w.values ** (-q_exp),
        n=w.n,
        tail_exponent=-q_exp * w.tail_exponent,
        tail_coefficient=w.tail_coefficient ** (-q_exp),
        source=lambda r: w.evaluate(r) ** (-q_exp),
        label=f"({w.label})^-q",
    )


def system_map(
    w: RadialProfile, p_exp: float, q_exp: float, radii: np.ndarray, spec: QuadSpec | None = None
) -> np.ndarray:
    """T(w) = int |x - y|^p w(y)^(-q) dy at each radius.

    Raises:
        DivergenceError: when w^(-q) decays too slowly for the kernel.
    """
    return potential_values(_inverse_power(w, q_exp), p_exp, radii, spec)


def _relative_gap(values: np.ndarray, image: np.ndarray) -> float:
    return float(np.max(np.abs(values - image) / values))


def el_residual(state: SystemState, spec: QuadSpec | None = None) -> Residuals:
    """Relative sup-norm deviation of u from T(v) and of v from T(u) on the grid nodes.

    Without an explicit `spec` the resolution the state was solved at is used.
    """
    spec = spec or state.quad or QuadSpec()
    u_nodes = state.u.evaluate(state.u.radii)
    res_u = _relative_gap(u_nodes, system_map(state.v, state.p_exp, state.q_exp, state.u.radii, spec))
    if state.symmetric:
        return Residuals(res_u=res_u, res_v=res_u)
    v_nodes = state.v.evaluate(state.v.radii)
    res_v = _relative_gap(v_nodes, system_map(state.u, state.p_exp, state.q_exp, state.v.radii, spec))
    return Residuals(res_u=res_u, res_v=res_v)


# ---------------------------------------------------------------------------
# Solver
# ---------------------------------------------------------------------------


def smooth_noise(radii: np.ndarray, rng: np.random.Generator, amplitude: float = NOISE_AMPLITUDE) -> np.ndarray:
    """Multiplicative factor 1 + amplitude * (a few sine modes in ln(1 + r)), within [1 - amplitude, 1 + amplitude]."""
    t = np.log1p(np.asarray(radii, dtype=float))
    coefficients = rng.uniform(-1.0, 1.0, NOISE_MODES)
    phases = rng.uniform(0.0, 2.0 * math.pi, NOISE_MODES)
    modes = sum(c * np.sin((k + 1) * t + phi) for k, (c, phi) in enumerate(zip(coefficients, phases)))
    return 1.0 + amplitude * modes / np.sum(np.abs(coefficients))


def default_initial_state(
    n: int,
    p_exp: float,
    seed: int | None = None,
    nodes: int = SOLVER_NODES,
    radius: float = SOLVER_RADIUS,
    target: float = 1.0,
) -> SystemState:
    """Bubble with a = b = 1 under smooth 5% noise, anchored at u(0) = target, with u = v."""
    q_exp = critical_q(n, p_exp)
    grid = make_grid(radius, nodes)
    values = np.power(1.0 + grid * grid, 0.5 * p_exp) * smooth_noise(grid, np.random.default_rng(seed))
    values *= target / values[0]
    u = spline_profile(grid, values, n, p_exp, label="u0")
    return SystemState(
        u=u,
        v=u,
        p_exp=p_exp,
        q_exp=q_exp,
        normalization={"anchor": ANCHOR_VALUE_AT_ZERO, "target": target},
    )


def bubble_height(n: int, p_exp: float, b: float = 1.0) -> float:
    """The a for which u = v = a (b^2 + r^2)^(p/2) solves the system exactly.

    T maps the bubble to a^(-q) b^(-n-p) K times itself, with
    K = |S^(n-1)| B((n + p)/2, n/2) / 2, so a^(1+q) b^(n+p) = K.
    """
    if not (p_exp > 0.0 and b > 0.0):
        raise DomainError(f"bubble needs p > 0 and b > 0, got p={p_exp}, b={b}")
    q_exp = critical_q(n, p_exp)
    log_k = (
        math.log(0.5 * sphere_area(n))
        + log_gamma(0.5 * (n + p_exp))
        + log_gamma(0.5 * n)
        - log_gamma(0.5 * p_exp + n)
    )
    return math.exp((log_k - (n + p_exp) * math.log(b)) / (1.0 + q_exp))


def exact_bubble_state(
    n: int, p_exp: float, b: float = 1.0, nodes: int = SOLVER_NODES, radius: float | None = None
) -> SystemState:
    """The symmetric bubble solution with parameter b."""
    a = bubble_height(n, p_exp, b)
    u = extremizer(ExtremizerKind.SYSTEM_BUBBLE, p_exp, a=a, b=b, n=n, radius=radius, nodes=nodes)
    return SystemState(
        u=u,
        v=u,
        p_exp=p_exp,
        q_exp=critical_q(n, p_exp),
        normalization={"anchor": ANCHOR_VALUE_AT_ZERO, "target": float(u.values[0])},
        fitted_a=a,
        fitted_b=b,
        fit_rms=0.0,
        converged=True,
    )


def _fit(state: SystemState) -> None:
    fit = fit_extremizer(state.u, ExtremizerKind.SYSTEM_BUBBLE, exponent=state.p_exp)
    state.fitted_a = fit["a"]
    state.fitted_b = fit["b"]
    state.fit_rms = fit["rms_residual"]


def _onto_solution(
    state: SystemState, kappa_u: float, kappa_v: float, log_u: np.ndarray, log_v: np.ndarray
) -> tuple[RadialProfile, RadialProfile]:
    """Rescale T(v) = kappa_u u, T(u) = kappa_v v to an exact solution and dilate back to the anchor."""
    n, p, q = state.n, state.p_exp, state.q_exp
    target = state.normalization["target"]
    log_cu = (math.log(kappa_u) - q * math.log(kappa_v)) / (1.0 - q * q)
    log_cv = math.log(kappa_v) - q * log_cu
    gamma = (n + p) / (1.0 + q)
    grid_u, grid_v = state.u.radii, state.v.radii
    u = spline_profile(grid_u, np.exp(log_u), n, p)
    v = u if state.symmetric else spline_profile(grid_v, np.exp(log_v), n, p)
    # u_mu(x) = mu^gamma c u(x / mu) solves the system whenever c u does
    log_mu = (math.log(target) - log_cu - float(log_u[0])) / gamma
    mu = math.exp(log_mu)
    scale_u = math.exp(gamma * log_mu + log_cu)
    new_u = spline_profile(grid_u, scale_u * u.evaluate(grid_u / mu), n, p, label="u")
    if state.symmetric:
        return new_u, new_u
    scale_v = math.exp(gamma * log_mu + log_cv)
    new_v = spline_profile(grid_v, scale_v * v.evaluate(grid_v / mu), n, p, label="v")
    return new_u, new_v


def _stalled(history: list[float]) -> bool:
    """True when the last STALL_WINDOW residuals gained less than STALL_GAIN on the best before them."""
    if len(history) <= STALL_WINDOW:
        return False
    return min(history[-STALL_WINDOW:]) > (1.0 - STALL_GAIN) * min(history[:-STALL_WINDOW])


def solve_system(
    n: int,
    p_exp: float,
    init: SystemState | None = None,
    spec: QuadSpec | None = None,
    max_iter: int = DEFAULT_MAX_ITER,
    tol: float = DEFAULT_TOL,
    theta: float = DEFAULT_THETA,
    seed: int | None = None,
) -> SystemState:
    """Damped fixed-point iteration for u = T(v), v = T(u) with q = 1 + 2n/p.

    Both halves are updated from the previous iterate, so a symmetric start
    stays symmetric. The damping factor is halved whenever the residual grows.
    The residual floor is set by the quadrature of T, so when STALL_WINDOW
    iterations gain less than STALL_GAIN the quadrature is refined, at most
    MAX_SOLVER_REFINEMENTS times.

    Raises:
        ConvergenceError: with the residual history when max_iter is reached,
            or when the residual still stalls after the last refinement.
        DivergenceError: when the map is not defined for the iterate.
    """
    q_exp = critical_q(n, p_exp)
    base = spec or QuadSpec()
    spec = base
    state = init or default_initial_state(n, p_exp, seed=seed)
    if state.n != n or not math.isclose(state.p_exp, p_exp) or not math.isclose(state.q_exp, q_exp):
        raise DomainError("initial state does not match (n, p, q = 1 + 2n/p)")
    logger.info(f"Solving integral system n={n}, p={p_exp}, q={q_exp} (theta={theta}, tol={tol})")

    initial = el_residual(state, spec)
    state.residual_history = [initial.worst]
    if initial.worst < tol:
        logger.info(f"Initial state already solves the system (residual {initial.worst:.3e})")
        state.converged = True
        state.quad = spec
        _fit(state)
        return state

    symmetric = state.symmetric
    grid_u, grid_v = state.u.radii, state.v.radii
    log_u = np.log(state.u.evaluate(grid_u))
    log_v = log_u if symmetric else np.log(state.v.evaluate(grid_v))
    log_target = math.log(state.normalization["target"])
    u, v = state.u, state.v
    previous = math.inf
    step = theta
    refinements = 0
    since = 0
    for iteration in range(1, max_iter + 1):
        image_u = system_map(v, p_exp, q_exp, grid_u, spec)
        image_v = image_u if symmetric else system_map(u, p_exp, q_exp, grid_v, spec)
        kappa_u = float(image_u[0] / np.exp(log_u[0]))
        kappa_v = float(image_v[0] / np.exp(log_v[0]))
        shape_u = np.log(image_u / kappa_u)
        shape_v = shape_u if symmetric else np.log(image_v / kappa_v)
        residual = max(
            _relative_gap(np.exp(log_u), np.exp(shape_u)),
            _relative_gap(np.exp(log_v), np.exp(shape_v)),
        )
        state.residual_history.append(residual)
        logger.debug(f"Iteration {iteration}: shape residual {residual:.3e}, theta={step}")
        if residual < tol:
            state.iteration = iteration
            break
        if _stalled(state.residual_history[since:]):
            if refinements == MAX_SOLVER_REFINEMENTS:
                raise ConvergenceError(
                    f"integral system stalled at residual {residual:.3e} after {refinements} quadrature refinements",
                    history=state.residual_history,
                )
            refinements += 1
            spec = base.refined(refinements)
            since = len(state.residual_history)
            previous, step = math.inf, theta
            logger.info(f"Residual stalled at {residual:.3e}; refining the quadrature (level {refinements})")
            # the same iterate is mapped again at the finer resolution
            continue
        if residual > previous and step > MIN_THETA:
            step = max(MIN_THETA, 0.5 * step)
            logger.debug(f"Residual grew; damping reduced to {step}")
        previous = residual
        log_u = (1.0 - step) * log_u + step * shape_u
        log_u += log_target - log_u[0]
        u = spline_profile(grid_u, np.exp(log_u), n, p_exp, label="u")
        if symmetric:
            log_v, v = log_u, u
        else:
            log_v = (1.0 - step) * log_v + step * shape_v
            log_v += log_target - log_v[0]
            v = spline_profile(grid_v, np.exp(log_v), n, p_exp, label="v")
    else:
        raise ConvergenceError(
            f"integral system did not converge in {max_iter} iterations (last residual {state.residual_history[-1]:.3e})",
            history=state.residual_history,
        )

    state.u, state.v = _onto_solution(state, kappa_u, kappa_v, log_u, log_v)
    state.quad, state.refinements = spec, refinements
    final = el_residual(state, spec)
    state.residual_history.append(final.worst)
    state.converged = True
    _fit(state)
    logger.info(
        f"Integral system converged after {state.iteration} iterations: residual {final.worst:.3e}, "
        f"a={state.fitted_a:.8g}, b={state.fitted_b:.8g}"
    )
    return state


def growth_limits(state: SystemState, spec: QuadSpec | None = None) -> GrowthLimits:
    """Far-field limits u(R)/R^p, v(R)/R^p against the masses of v^(-q), u^(-q).

    R = 10^3 b with b from the bubble fit.
    """
    if state.fitted_b is None:
        _fit(state)
    p, q = state.p_exp, state.q_exp
    r_far = FAR_FIELD_FACTOR * state.fitted_b
    lim_u = float(state.u.evaluate(np.array([r_far]))[0]) / r_far**p
    lim_v = float(state.v.evaluate(np.array([r_far]))[0]) / r_far**p
    mass_v = radial_integral(state.v, -q)
    mass_u = mass_v if state.symmetric else radial_integral(state.u, -q)
    lower, upper = _envelope_range(state)
    return GrowthLimits(
        lim_u=lim_u,
        lim_v=lim_v,
        mass_u=mass_u,
        mass_v=mass_v,
        match_u=abs(lim_u - mass_v) / mass_v,
        match_v=abs(lim_v - mass_u) / mass_u,
        r_far=r_far,
        envelope_min=lower,
        envelope_max=upper,
    )


def _envelope_range(state: SystemState) -> tuple[float, float]:
    ratios = []
    for profile in (state.u, state.v):
        r = profile.radii
        ratios.append(profile.evaluate(r) / (1.0 + r**state.p_exp))
    joined = np.concatenate(ratios)
    return float(np.min(joined)), float(np.max(joined))


def envelope_constant(state: SystemState) -> float:
    """Smallest C with (1 + r^p)/C <= u, v <= C (1 + r^p) on the grid."""
    lower, upper = _envelope_range(state)
    return max(upper, 1.0 / lower)


def system_report(state: SystemState, quotient_value: float | None = None) -> dict:
    a, b = state.fitted_a, state.fitted_b
    return {
        "n": state.n,
        "p": state.p_exp,
        "q": state.q_exp,
        "iterations": state.iteration,
        "residuals": list(state.residual_history),
        "fitted_a": a,
        "fitted_b": b,
        "ab_product": None if a is None or b is None else a * b,
        "fit_rms": state.fit_rms,
        "converged": state.converged,
        "quad_refinements": state.refinements,
        "quotient_if_applicable": quotient_value,
    }


# ---------------------------------------------------------------------------
# Quotient minimization
# ---------------------------------------------------------------------------


def _half_mass_radius(f: RadialProfile) -> float:
    nodes, weights = panel_rule(f.radii)
    cumulative = np.cumsum(weights * f.evaluate(nodes) * nodes ** (f.n - 1))
    if cumulative[-1] <= 0.0:
        raise DomainError("the initial profile has no mass")
    return float(nodes[np.searchsorted(cumulative, 0.5 * cumulative[-1])])


def _shape_gap(values: np.ndarray, image: np.ndarray) -> float:
    if np.any(values <= 0.0):
        return math.inf
    return _relative_gap(values / values[0], image / image[0])


def minimize_quotient(
    params: Params,
    init: RadialProfile,
    spec: QuadSpec | None = None,
    max_iter: int = DEFAULT_MAX_ITER,
    tol: float = DEFAULT_TOL,
    theta: float = DEFAULT_THETA,
) -> MinimizationResult:
    """Minimize ||I_lambda f||_q / ||f||_p over radial profiles.

    Diagonal case: iterate f <- (I_lambda f)^(q - 1), damped in log-space and
    normalized to ||f||_p = 1. Otherwise the two-step relation
    f^(p - 1) ~ I_lambda((I_lambda f)^(q - 1)) is iterated and the result is
    flagged experimental. The quotient is sampled every few iterations as a
    diagnostic; its monotone decrease is reported, not enforced.

    Raises:
        ConvergenceError: with the residual history when max_iter is reached.
    """
    if init.n != params.n:
        raise DomainError(f"profile dimension {init.n} does not match n={params.n}")
    spec = spec or QuadSpec()
    n, lam, p, q = params.n, params.lam, params.p, params.q
    experimental = not params.is_diagonal
    if experimental:
        logger.warning(f"Non-diagonal exponents p={p}, r={params.r}: minimization is experimental")
    tail_exponent = lam * (q - 1.0) if not experimental else lam / (p - 1.0)
    grid = make_grid(SOLVER_RADIUS * _half_mass_radius(init), SOLVER_NODES)
    logger.info(f"Minimizing quotient n={n}, lambda={lam}, p={p}, r={params.r} on R={grid[-1]:.4g}")

    def image_of(profile: RadialProfile) -> np.ndarray:
        potential = potential_values(profile, lam, grid, spec)
        if not experimental:
            return potential ** (q - 1.0)
        inner = spline_profile(grid, potential ** (q - 1.0), n, lam * (q - 1.0))
        return potential_values(inner, lam, grid, spec) ** (1.0 / (p - 1.0))

    def sampled_quotient(profile: RadialProfile) -> float:
        norm = estimate_neg_exponent_norm(profile, lam, q, spec, refine=False).value
        return norm / lp_quantity(profile, p)

    profile = init
    values = init.evaluate(grid)
    residuals: list[float] = []
    quotients = [sampled_quotient(init)]
    step = theta
    previous = math.inf
    iteration = 0
    for iteration in range(max_iter + 1):
        image = image_of(profile)
        residual = _shape_gap(values, image)
        residuals.append(residual)
        logger.debug(f"Minimizer iteration {iteration}: residual {residual:.3e}")
        if residual < tol:
            break
        if iteration == max_iter:
            raise ConvergenceError(
                f"quotient minimization did not converge in {max_iter} iterations", history=residuals
            )
        if residual > previous and step > MIN_THETA:
            step = max(MIN_THETA, 0.5 * step)
        previous = residual
        if np.all(values > 0.0):
            log_values = (1.0 - step) * np.log(values) + step * np.log(image)
        else:
            log_values = np.log(image)
        candidate = spline_profile(grid, np.exp(log_values - log_values[0]), n, tail_exponent)
        values = np.exp(log_values - log_values[0]) / lp_quantity(candidate, p)
        profile = spline_profile(grid, values, n, tail_exponent, label="minimizer")
        if (iteration + 1) % QUOTIENT_EVERY == 0:
            quotients.append(sampled_quotient(profile))

    final = quotient(profile, params, spec)
    quotients.append(final)
    monotone = all(b <= a * (1.0 + MONOTONE_SLACK) for a, b in zip(quotients, quotients[1:]))
    if not monotone:
        logger.warning("Quotient did not decrease monotonically along the iteration")
    logger.info(f"Quotient minimization finished after {iteration} iterations: {final:.10g}")
    return MinimizationResult(
        f=profile,
        quotient=final,
        iterations=iteration,
        residual_history=residuals,
        quotient_history=quotients,
        experimental=experimental,
        monotone=monotone,
    )
