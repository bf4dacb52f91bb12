"""
Regular (cusp-normalized) solutions of the radial Schrödinger equation

    u″ = [ℓ(ℓ+1)/r² + v(r) − ε] u        (ħ²/2μ = 1)

on a log-then-linear grid. Solutions start at r_min from the analytic cusp
function of the model's dominant term and are propagated segment by segment
with an embedded Runge-Kutta method; each segment is rescaled so that values
never leave the double range, and the probability integral ∫₀ʳ u² is carried
as a third ODE component.
"""
import math
from typing import Dict, List, Optional, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator
from scipy.integrate import solve_ivp

from cuspkit import hermite
from cuspkit.cuspfn import CuspSpec, CuspValue, cusp_value, strict_cusp
from cuspkit.data_classes import CuspFamily, ShortRangeTag
from cuspkit.errors import (
    DomainError,
    EvaluationAtNode,
    ExtrapolationDiverged,
    NonphysicalPotential,
    StepFailure,
    StiffnessLimit,
)
from cuspkit.log_bus import CuspLogBus
from cuspkit.potential import PotentialModel, ShortRangeClass, classify

RTOL = 1e-11
ATOL = 1e-14
SEGMENT_POINTS = 16
RESCALE_BOUND = 1e100
MIN_GRID_POINTS = 64
ORIGIN_FACTOR = 1e-6
RVDW_START_Y = 60.0
MAX_START_Y = 1e4
MAX_SHRINK_DECADES = 30
DOMINANCE_TOLERANCE = 1e-6
MAX_ENERGY_SCALES = 1e6
NODE_THRESHOLD = 1e-14


class RadialGrid(BaseModel):
    """Strictly increasing radii, log-spaced near the origin then linear."""
    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    r_min: float = Field(..., gt=0.0, description="Start radius of the propagation (not a grid point)")
    points: np.ndarray = Field(..., description="Grid radii")

    @field_validator("points", mode="before")
    @classmethod
    def _as_array(cls, value) -> np.ndarray:
        array = np.array(value, dtype=float)
        array.setflags(write=False)
        return array

    @model_validator(mode="after")
    def _check_points(self) -> "RadialGrid":
        p = self.points
        if p.ndim != 1 or len(p) < MIN_GRID_POINTS:
            raise ValueError(f"a radial grid needs at least {MIN_GRID_POINTS} points")
        if not np.all(np.isfinite(p)) or np.any(np.diff(p) <= 0.0):
            raise ValueError("grid points must be finite and strictly increasing")
        if not self.r_min < p[0]:
            raise ValueError("r_min must lie below the first grid point")
        return self

    @property
    def r_max(self) -> float:
        return float(self.points[-1])

    @classmethod
    def build(cls, r_min: float, r_max: float, r_switch: Optional[float] = None,
              n_log: int = 160, n_lin: int = 640) -> "RadialGrid":
        """Log-spaced points from just above ``r_min`` up to ``r_switch``, then ``n_lin`` linear points to ``r_max``.

        Raises:
            DomainError: for r_max ≤ r_min or too few points.
        """
        if not 0.0 < r_min < r_max:
            raise DomainError(f"grid needs 0 < r_min < r_max, got r_min={r_min}, r_max={r_max}")
        if n_log + n_lin < MIN_GRID_POINTS or n_log < 2 or n_lin < 1:
            raise DomainError(f"grid needs at least {MIN_GRID_POINTS} points, got {n_log}+{n_lin}")
        if r_switch is None:
            r_switch = 0.5 * r_max
        r_switch = min(max(r_switch, 10.0 * r_min), r_max)
        log_part = np.geomspace(r_min, r_switch, n_log + 1)[1:]
        if r_switch >= r_max:
            return cls(r_min=r_min, points=np.geomspace(r_min, r_max, n_log + n_lin + 1)[1:])
        lin_part = np.linspace(r_switch, r_max, n_lin + 1)[1:]
        return cls(r_min=r_min, points=np.concatenate([log_part, lin_part]))

    @classmethod
    def for_class(cls, short_range: ShortRangeClass, r_max: float, free_scale: float = 1.0,
                  n_log: int = 160, n_lin: int = 640) -> "RadialGrid":
        """Class-dependent grid: r_min = 1e-6·min(scale, r_max) for F/GC/alCD, y(r_min) = 60 for rVdW."""
        family = short_range.family
        scale = short_range.beta_alpha if short_range.beta_alpha is not None else free_scale
        if family == CuspFamily.rvdw:
            alpha = short_range.dominant_alpha
            r_min = scale * (2.0 / ((alpha - 2.0) * RVDW_START_Y)) ** (2.0 / (alpha - 2.0))
        else:
            r_min = ORIGIN_FACTOR * min(scale, r_max)
        return cls.build(r_min, r_max, r_switch=0.5 * min(scale, r_max), n_log=n_log, n_lin=n_lin)


class StartState(BaseModel):
    """Initial data at r_min: ln|u|, u′/u and how they were obtained."""
    model_config = ConfigDict(frozen=True)

    log_u: float
    logderiv: float
    r_start: float = Field(..., description="Radius where the dominant-term cusp function was imposed")
    shrink_decades: int = Field(default=0, ge=0)


class RadialSolution(BaseModel):
    """
    Regular solution on a grid. ``u`` and ``du`` are stored scaled: the actual
    values at point i are ``u[i]*exp(log_scale[i])``; ``prob`` is ∫₀ʳ u² in units
    of ``exp(2*log_scale[i])``.
    """
    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    grid: RadialGrid
    l: int = Field(..., ge=0)
    energy: float
    model: PotentialModel
    short_range: ShortRangeClass
    spec: CuspSpec
    u: np.ndarray
    du: np.ndarray
    log_scale: np.ndarray
    prob: np.ndarray
    start: StartState

    @model_validator(mode="after")
    def _freeze_arrays(self) -> "RadialSolution":
        for array in (self.u, self.du, self.log_scale, self.prob):
            array.setflags(write=False)
        return self

    @property
    def points(self) -> np.ndarray:
        return self.grid.points

    @property
    def logderiv(self) -> np.ndarray:
        """L = u′/u per grid point (signed infinity where u vanishes)."""
        with np.errstate(divide="ignore", invalid="ignore"):
            return np.where(self.u != 0.0, self.du / np.where(self.u != 0.0, self.u, 1.0),
                            np.copysign(np.inf, self.du))

    @property
    def rmatrix(self) -> np.ndarray:
        """R = u/u′ per grid point (signed infinity where u′ vanishes)."""
        with np.errstate(divide="ignore", invalid="ignore"):
            return np.where(self.du != 0.0, self.u / np.where(self.du != 0.0, self.du, 1.0),
                            np.copysign(np.inf, self.u))

    @property
    def u_values(self) -> np.ndarray:
        return self.u * np.exp(self.log_scale)

    @property
    def du_values(self) -> np.ndarray:
        return self.du * np.exp(self.log_scale)

    @property
    def prob_values(self) -> np.ndarray:
        return self.prob * np.exp(2.0 * self.log_scale)

    def check_radius(self, r: float) -> float:
        r = float(r)
        if not self.grid.r_min <= r <= self.grid.r_max:
            raise DomainError(f"r={r} lies outside the solution range [{self.grid.r_min}, {self.grid.r_max}]")
        return r

    def _initial_scaled(self) -> Tuple[float, float]:
        return 1.0, self.start.logderiv

    def patch(self, r: float) -> Tuple[int, Tuple[float, float, float, float], float]:
        """Hermite data (u0, u1, du0, du1) around r, expressed in the scale of the right node.

        Radii below the first grid point use the start state at r_min as left node (index −1).
        """
        r = self.check_radius(r)
        points = self.points
        if r < points[0]:
            scale = float(self.log_scale[0])
            u0, du0 = self._initial_scaled()
            factor = math.exp(self.start.log_u - scale)
            return -1, (u0 * factor, float(self.u[0]), du0 * factor, float(self.du[0])), scale
        i = hermite.locate(points, r)
        scale = float(self.log_scale[i + 1])
        factor = math.exp(float(self.log_scale[i]) - scale)
        return i, (float(self.u[i]) * factor, float(self.u[i + 1]),
                   float(self.du[i]) * factor, float(self.du[i + 1])), scale

    def patch_bounds(self, i: int) -> Tuple[float, float]:
        if i < 0:
            return self.grid.r_min, float(self.points[0])
        return float(self.points[i]), float(self.points[i + 1])

    def scaled_value(self, r: float) -> Tuple[float, float, float]:
        """(u, u′, log_scale) at r with actual values u·e^{log_scale}."""
        i, (u0, u1, d0, d1), scale = self.patch(r)
        x0, x1 = self.patch_bounds(i)
        value, slope = hermite.interpolate(x0, x1, u0, u1, d0, d1, r)
        return value, slope, scale

    def value(self, r: float) -> Tuple[float, float]:
        """Actual (u, u′) at r (may under- or overflow for strongly scaled solutions)."""
        value, slope, scale = self.scaled_value(r)
        factor = math.exp(scale)
        return value * factor, slope * factor

    def rows(self) -> List[Dict[str, float]]:
        """Export rows with columns r, u, du, L, R."""
        return [
            {"r": float(r), "u": float(u), "du": float(du), "L": float(ld), "R": float(rm)}
            for r, u, du, ld, rm in zip(self.points, self.u_values, self.du_values, self.logderiv, self.rmatrix)
        ]


def _centrifugal_q(model: PotentialModel, l: int, energy: float):
    ll = l * (l + 1.0)

    def q(r: float) -> float:
        return ll / (r * r) + model.evaluate(r, extrapolate=True) - energy

    return q


def _dominant_value(short_range: ShortRangeClass, r: float) -> float:
    return short_range.dominant_strength * r ** (-short_range.dominant_alpha)


def _start_radius(model: PotentialModel, short_range: ShortRangeClass, r_min: float) -> Tuple[float, int]:
    """Shrink r by decades until the dominant term carries v to within 1e-6."""
    source = "radial.solve_regular"
    if model.is_single_power:
        return r_min, 0
    r = r_min
    for decade in range(MAX_SHRINK_DECADES + 1):
        dominant = _dominant_value(short_range, r)
        total = model.evaluate(r, extrapolate=True)
        if dominant != 0.0 and abs(total - dominant) <= DOMINANCE_TOLERANCE * abs(dominant):
            if decade:
                CuspLogBus.debug(f"start radius shrunk by {decade} decades", source=source,
                                 action="radial.shrink_start", r_min=r_min, r_start=r, decades=decade)
            return r, decade
        r /= 10.0
        if short_range.family == CuspFamily.rvdw:
            alpha = short_range.dominant_alpha
            y = 2.0 * (r / short_range.beta_alpha) ** (-(alpha - 2.0) / 2.0) / (alpha - 2.0)
            if y > MAX_START_Y:
                break
    CuspLogBus.warn("dominant-term start radius not reached", source=source,
                    action="radial.stiffness_limit", r_min=r_min, r_reached=r)
    raise StiffnessLimit(
        f"subdominant terms still exceed {DOMINANCE_TOLERANCE} of the dominant term at r={r:.3e}"
    )


def _start_state(model: PotentialModel, spec: CuspSpec, l: int, energy: float, r_min: float) -> StartState:
    r_start, decades = _start_radius(model, spec.short_range, r_min)
    at_min = cusp_value(spec, r_min)
    if r_start >= r_min:
        return StartState(log_u=at_min.log_abs, logderiv=at_min.logderiv, r_start=r_min)
    q = _centrifugal_q(model, l, energy)

    def riccati(r, state):
        # state: L = u′/u and ln(u/f_dom)
        logderiv, _ = state
        return [q(r) - logderiv * logderiv, logderiv - cusp_value(spec, r).logderiv]

    initial = cusp_value(spec, r_start)
    result = solve_ivp(riccati, (r_start, r_min), [initial.logderiv, 0.0], method="LSODA",
                       rtol=1e-10, atol=1e-12)
    if not result.success:
        raise StiffnessLimit(f"near-origin approach from r={r_start:.3e} failed: {result.message}")
    logderiv, log_ratio = result.y[0, -1], result.y[1, -1]
    return StartState(log_u=at_min.log_abs + log_ratio, logderiv=float(logderiv),
                      r_start=r_start, shrink_decades=decades)


def _tail_integral(family: CuspFamily, r_min: float, logderiv: float) -> float:
    """∫₀^{r_min} u² in units of u(r_min)²."""
    if family == CuspFamily.rvdw:
        return 1.0 / (2.0 * logderiv)
    power = r_min * logderiv
    return r_min / (2.0 * power + 1.0)


def solve_regular(model: PotentialModel, l: int, energy: float, grid: Optional[RadialGrid] = None,
                  free_scale: float = 1.0, r_max: float = 10.0,
                  short_range: Optional[ShortRangeClass] = None) -> RadialSolution:
    """Propagate the cusp-normalized regular solution outwards.

    Args:
        model: Pair potential.
        l: Partial wave.
        energy: Scaled energy ε.
        grid: Radial grid (default :meth:`RadialGrid.for_class` up to ``r_max``).
        free_scale: sL of free and alCD cusp functions.
        r_max: Outer radius of the default grid.
        short_range: Precomputed classification.

    Raises:
        NonphysicalPotential: for NONPHYSICAL-* classes.
        DomainError: for |ε| > 1e6·s_E.
        StepFailure: when the integrator cannot reach the tolerance.
        StiffnessLimit: when a multi-term model cannot be started at a dominant-term radius.
    """
    source = "radial.solve_regular"
    if l < 0:
        raise DomainError(f"partial wave must be non-negative, got {l}")
    short_range = short_range if short_range is not None else classify(model)
    if not short_range.is_physical:
        raise NonphysicalPotential(f"potential class {short_range.tag} has no physical cusp solution")
    spec = CuspSpec.from_class(short_range, l, free_scale=free_scale)
    if abs(energy) > MAX_ENERGY_SCALES * short_range.energy_scale:
        raise DomainError(f"|energy| = {abs(energy)} exceeds {MAX_ENERGY_SCALES} energy scales")
    if grid is None:
        grid = RadialGrid.for_class(short_range, r_max, free_scale=free_scale)

    start = _start_state(model, spec, l, energy, grid.r_min)
    q = _centrifugal_q(model, l, energy)

    def rhs(r, state):
        u, du, _ = state
        return [du, q(r) * u, u * u]

    points = grid.points
    n = len(points)
    u = np.empty(n)
    du = np.empty(n)
    prob = np.empty(n)
    log_scale = np.empty(n)

    r_prev = grid.r_min
    scale = start.log_u
    state = np.array([1.0, start.logderiv, _tail_integral(spec.family, grid.r_min, start.logderiv)])
    for first in range(0, n, SEGMENT_POINTS):
        segment = points[first:first + SEGMENT_POINTS]
        result = solve_ivp(rhs, (r_prev, segment[-1]), state, method="DOP853", t_eval=segment,
                           rtol=RTOL, atol=ATOL)
        if not result.success or result.y.shape[1] != len(segment):
            CuspLogBus.error("radial propagation failed", source=source, action="radial.step_failure",
                             r=float(r_prev), message=result.message)
            raise StepFailure(f"propagation failed near r={r_prev:.6g}: {result.message}")
        u[first:first + len(segment)] = result.y[0]
        du[first:first + len(segment)] = result.y[1]
        prob[first:first + len(segment)] = result.y[2]
        log_scale[first:first + len(segment)] = scale
        state = result.y[:, -1].copy()
        r_prev = float(segment[-1])
        norm = max(abs(state[0]), abs(state[1]) * r_prev)
        if not np.all(np.isfinite(state)) or norm == 0.0:
            raise StepFailure(f"solution lost finiteness near r={r_prev:.6g}")
        if norm > RESCALE_BOUND or norm < 1.0 / RESCALE_BOUND:
            CuspLogBus.trace("segment rescaled", source=source, action="radial.rescale",
                             r=r_prev, log_factor=math.log(norm))
            state = state / np.array([norm, norm, norm * norm])
            scale += math.log(norm)

    return RadialSolution(grid=grid, l=l, energy=energy, model=model, short_range=short_range, spec=spec,
                          u=u, du=du, log_scale=log_scale, prob=prob, start=start)


def solve_pinned(model: PotentialModel, energy: float, grid: Optional[RadialGrid] = None,
                 r_max: float = 10.0) -> RadialSolution:
    """One-dimensional solution pinned at the origin, u(0) = 0 (the s-wave problem)."""
    return solve_regular(model, 0, energy, grid=grid, r_max=r_max)


def _interpolated(sol: RadialSolution, r: float) -> Tuple[float, float, float]:
    value, slope, _ = sol.scaled_value(r)
    i, (u0, u1, d0, d1), _ = sol.patch(r)
    x0, x1 = sol.patch_bounds(i)
    reference = max(abs(u0), abs(u1), abs(d0) * x0, abs(d1) * x1)
    if abs(value) <= NODE_THRESHOLD * reference and abs(slope) * r <= NODE_THRESHOLD * reference:
        raise EvaluationAtNode(f"u and u' both vanish at r={r}; the solution is degenerate")
    return value, slope, reference


def log_derivative(sol: RadialSolution, r: float) -> float:
    """L = u′/u at r; a pole of L is reported as a signed infinity."""
    value, slope, _ = _interpolated(sol, r)
    if value == 0.0:
        return math.copysign(math.inf, slope)
    return slope / value


def r_matrix(sol: RadialSolution, r: float) -> float:
    """R = u/u′ at r; a pole of R is reported as a signed infinity."""
    value, slope, _ = _interpolated(sol, r)
    if slope == 0.0:
        return math.copysign(math.inf, value)
    return value / slope


def kato_limit(sol: RadialSolution, r_floor: Optional[float] = None) -> float:
    """Extrapolate lim_{r→0} (L(r) − 1/r) for an ℓ = 0 Coulomb-dominated solution.

    A quadratic through the three smallest grid radii above ``r_floor`` (default
    1e-4 of the class length scale) is evaluated at r = 0; the result is G̃₁/2.

    Raises:
        DomainError: unless the class is F or SR-GC with α = 1 and ℓ = 0.
        ExtrapolationDiverged: when the extrapolated value is not finite.
    """
    short_range = sol.short_range
    coulomb = short_range.tag == ShortRangeTag.gc and short_range.dominant_alpha == 1.0
    if sol.l != 0 or not (coulomb or short_range.tag == ShortRangeTag.free):
        raise DomainError("the Kato limit is defined for l = 0 Coulomb-type or free solutions")
    scale = short_range.beta_alpha if short_range.beta_alpha is not None else sol.spec.free_scale
    floor = r_floor if r_floor is not None else 1e-4 * scale
    points = sol.points
    radii = points[points >= floor][:3]
    if len(radii) < 3:
        raise ExtrapolationDiverged(f"fewer than three grid radii above r = {floor}")
    excess = np.array([log_derivative(sol, r) - 1.0 / r for r in radii])
    coefficients = np.polyfit(radii, excess, 2)
    limit = float(coefficients[-1])
    if not math.isfinite(limit):
        raise ExtrapolationDiverged(f"Kato extrapolation produced {limit}")
    CuspLogBus.debug("Kato limit extrapolated", source="radial.kato_limit", action="radial.kato",
                     limit=limit, radii=[float(r) for r in radii])
    return limit


def _ratio_to(sol: RadialSolution, r: float, f: CuspValue) -> float:
    value, _, scale = sol.scaled_value(r)
    return math.copysign(1.0, value) * f.sign * math.exp(math.log(abs(value)) + scale - f.log_abs)


def strict_ratio(sol: RadialSolution, r: float) -> float:
    """u(r)/F^cp(r), tending to 1 at coalescence for every physical class."""
    return _ratio_to(sol, r, strict_cusp(sol.spec, r))


def cusp_ratio(sol: RadialSolution, r: float) -> float:
    """u(r)/f^cp(r) against the single-term cusp function of the dominant term."""
    return _ratio_to(sol, r, cusp_value(sol.spec, r))
