"""
Energy-Taylor structure of the cusp solution.

The cusp-normalized regular solution is entire in energy,

    u(r, ε) = f^cp(r) + Σ_j εʲ x⁽ʲ⁾(r),

where f^cp is the zero-energy cusp solution and every coefficient solves
x⁽ʲ⁾″ = [ℓ(ℓ+1)/r² + v] x⁽ʲ⁾ − x⁽ʲ⁻¹⁾ with x⁽ʲ⁾/f^cp → 0 at the origin. The
coefficients are built by variation of parameters with a zero-energy pair
(f, g), integrating from the origin so that the regular branch is selected.
"""
import math
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, model_validator
from scipy import special
from scipy.integrate import solve_ivp

from cuspkit import hermite
from cuspkit.cuspfn import CuspSpec, cusp_value, irregular_g
from cuspkit.errors import CompanionUnavailable, DomainError, StepFailure
from cuspkit.log_bus import CuspLogBus
from cuspkit.potential import PotentialModel, classify
from cuspkit.radial import ATOL, RTOL, RadialGrid, solve_regular

MAX_ORDER = 6
DEFAULT_ORDER = 4
COMPANION_TOLERANCE = 1e-6
EXPONENTIAL_TAIL = 10.0


class EnergySeries(BaseModel):
    """
    Zero-energy cusp solution and its energy-Taylor coefficients.

    All profiles live on ``radii`` = [r_min, grid points...] and carry
    derivatives so that they can be interpolated by cubic Hermite patches.
    """
    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    l: int = Field(..., ge=0)
    j_max: int = Field(..., ge=1, le=MAX_ORDER)
    radii: np.ndarray
    f_cp: np.ndarray
    df_cp: np.ndarray
    g: np.ndarray
    dg: np.ndarray
    wronskian: float = Field(..., description="W_r(f, g) = f g′ − f′ g of the pair used")
    x: List[np.ndarray] = Field(..., description="x⁽ʲ⁾ for j = 1..j_max")
    dx: List[np.ndarray]
    companion: str = Field(..., description="'analytic' or 'numerical'")
    model: PotentialModel
    spec: CuspSpec

    @model_validator(mode="after")
    def _shapes(self) -> "EnergySeries":
        if len(self.x) != self.j_max or len(self.dx) != self.j_max:
            raise ValueError("one coefficient profile is needed per order")
        for array in [self.radii, self.f_cp, self.df_cp, self.g, self.dg, *self.x, *self.dx]:
            array.setflags(write=False)
        return self

    def profile(self, j: int) -> Tuple[np.ndarray, np.ndarray]:
        """(x⁽ʲ⁾, x⁽ʲ⁾′) with x⁽⁰⁾ = f^cp."""
        if j == 0:
            return self.f_cp, self.df_cp
        if not 1 <= j <= self.j_max:
            raise DomainError(f"order {j} is outside 0..{self.j_max}")
        return self.x[j - 1], self.dx[j - 1]

    def at(self, j: int, r: float) -> float:
        """x⁽ʲ⁾(r) by Hermite interpolation."""
        r = float(r)
        if not self.radii[0] <= r <= self.radii[-1]:
            raise DomainError(f"r={r} lies outside the series range [{self.radii[0]}, {self.radii[-1]}]")
        values, slopes = self.profile(j)
        i = hermite.locate(self.radii, r)
        value, _ = hermite.interpolate(self.radii[i], self.radii[i + 1], values[i], values[i + 1],
                                       slopes[i], slopes[i + 1], r)
        return value

    def rows(self) -> List[Dict[str, float]]:
        """Export rows with columns r, f_cp, x1..x_jmax."""
        rows = []
        for k, r in enumerate(self.radii):
            row = {"r": float(r), "f_cp": float(self.f_cp[k])}
            row.update({f"x{j + 1}": float(profile[k]) for j, profile in enumerate(self.x)})
            rows.append(row)
        return rows


def _zero_energy_q(model: PotentialModel, l: int, radii: np.ndarray) -> np.ndarray:
    return l * (l + 1.0) / radii ** 2 + np.asarray([model.evaluate(r, extrapolate=True) for r in radii])


def _analytic_companion(spec: CuspSpec, radii: np.ndarray) -> Tuple[np.ndarray, np.ndarray, float]:
    values = [irregular_g(spec, r) for r in radii]
    g = np.array([v.value for v in values])
    dg = np.array([v.value * v.logderiv for v in values])
    reference = float(radii[len(radii) // 2])
    f = cusp_value(spec, reference)
    h = irregular_g(spec, reference)
    wronskian = f.sign * h.sign * math.exp(f.log_abs + h.log_abs) * (h.logderiv - f.logderiv)
    return g, dg, wronskian


def _numerical_companion(model: PotentialModel, l: int, radii: np.ndarray,
                         f: np.ndarray, df: np.ndarray) -> Tuple[np.ndarray, np.ndarray, float]:
    """Second zero-energy solution integrated inwards (its growing direction), W_r(f, g) = 1."""
    ll = l * (l + 1.0)

    def rhs(r, state):
        return [state[1], (ll / (r * r) + model.evaluate(r, extrapolate=True)) * state[0]]

    end_f, end_df = f[-1], df[-1]
    if abs(end_f) >= abs(end_df) * radii[-1]:
        initial = [0.0, 1.0 / end_f]
    else:
        initial = [-1.0 / end_df, 0.0]
    result = solve_ivp(rhs, (radii[-1], radii[0]), initial, method="DOP853", t_eval=radii[::-1],
                       rtol=1e-11, atol=1e-14)
    if not result.success:
        raise CompanionUnavailable(f"inward companion integration failed: {result.message}")
    g, dg = result.y[0][::-1], result.y[1][::-1]
    wronskian = f * dg - df * g
    drift = float(np.max(np.abs(wronskian - 1.0)))
    if not math.isfinite(drift) or drift > COMPANION_TOLERANCE:
        raise CompanionUnavailable(f"numerical companion Wronskian drifts by {drift:.3e}")
    return g, dg, 1.0


def _tail_integral(a: float, la: float, b: float, lb: float, r_min: float) -> float:
    """∫₀^{r_min} a b, treating the product as a power law (or exponential when it falls off steeply)."""
    rate = la + lb
    if rate * r_min > EXPONENTIAL_TAIL:
        return a * b / rate
    return a * b * r_min / (rate * r_min + 1.0)


def build_series(model: PotentialModel, l: int, grid: Optional[RadialGrid] = None,
                 j_max: int = DEFAULT_ORDER, free_scale: float = 1.0, r_max: float = 10.0) -> EnergySeries:
    """Energy-Taylor coefficients x⁽¹⁾..x⁽ʲ_max⁾.

    Below r_min the coefficients follow from variation of parameters,
    x⁽ʲ⁾ = (1/W)[f ∫₀ʳ g x⁽ʲ⁻¹⁾ − g ∫₀ʳ f x⁽ʲ⁻¹⁾] with W = W_r(f, g), the integrals
    taken over the strict-cusp tails; this fixes the regular branch at r_min.
    From there the whole hierarchy x⁽ʲ⁾″ = Q₀x⁽ʲ⁾ − x⁽ʲ⁻¹⁾ is propagated as one
    linear system. The pair (f, g) is analytic for single-term models and
    integrated numerically otherwise.

    Raises:
        DomainError: for j_max outside 1..6.
        CompanionUnavailable: when the numerical companion fails its Wronskian check.
    """
    source = "energyseries.build_series"
    if not 1 <= j_max <= MAX_ORDER:
        raise DomainError(f"j_max must lie in 1..{MAX_ORDER}, got {j_max}")
    zero = solve_regular(model, l, 0.0, grid=grid, free_scale=free_scale, r_max=r_max)
    spec = zero.spec
    r_min = zero.grid.r_min
    radii = np.concatenate([[r_min], zero.points])
    start_u = math.exp(zero.start.log_u)
    f = np.concatenate([[start_u], zero.u_values])
    df = np.concatenate([[start_u * zero.start.logderiv], zero.du_values])

    if model.is_single_power:
        g, dg, wronskian = _analytic_companion(spec, radii)
        companion = "analytic"
    else:
        g, dg, wronskian = _numerical_companion(model, l, radii, f, df)
        companion = "numerical"
    CuspLogBus.debug(f"{companion} companion constructed", source=source, action="energyseries.companion",
                     wronskian=wronskian, l=l)

    # initial data at r_min in units of f(r_min)
    f0, lf, g0, lg = f[0], df[0] / f[0], g[0], dg[0] / g[0]
    initial = [1.0, lf]
    previous, dprevious = f0, df[0]
    for _ in range(j_max):
        lp = dprevious / previous if previous != 0.0 else 0.0
        int_g = _tail_integral(g0, lg, previous, lp, r_min) if previous != 0.0 else 0.0
        int_f = _tail_integral(f0, lf, previous, lp, r_min) if previous != 0.0 else 0.0
        previous = (f0 * int_g - g0 * int_f) / wronskian
        dprevious = (df[0] * int_g - dg[0] * int_f) / wronskian
        initial.extend([previous / f0, dprevious / f0])

    ll = l * (l + 1.0)

    def hierarchy(r, state):
        q = ll / (r * r) + model.evaluate(r, extrapolate=True)
        derivative = np.empty_like(state)
        derivative[0::2] = state[1::2]
        derivative[1] = q * state[0]
        derivative[3::2] = q * state[2::2] - state[0:-2:2]
        return derivative

    result = solve_ivp(hierarchy, (r_min, radii[-1]), initial, method="DOP853", t_eval=radii[1:],
                       rtol=RTOL, atol=ATOL)
    if not result.success:
        raise StepFailure(f"coefficient propagation failed: {result.message}")
    profiles = np.concatenate([np.asarray(initial)[:, None], result.y], axis=1) * f0
    xs = [profiles[2 * j] for j in range(1, j_max + 1)]
    dxs = [profiles[2 * j + 1] for j in range(1, j_max + 1)]
    return EnergySeries(l=l, j_max=j_max, radii=radii, f_cp=profiles[0], df_cp=profiles[1], g=g, dg=dg,
                        wronskian=wronskian, x=xs, dx=dxs, companion=companion, model=model, spec=spec)


def series_eval(series: EnergySeries, energy: float, r: float, j_max: Optional[int] = None) -> float:
    """f^cp(r) + Σ_{j ≤ j_max} εʲ x⁽ʲ⁾(r)."""
    order = series.j_max if j_max is None else j_max
    if not 0 <= order <= series.j_max:
        raise DomainError(f"truncation {order} exceeds the built order {series.j_max}")
    return math.fsum(energy ** j * series.at(j, r) for j in range(order + 1))


class EntiretyRow(BaseModel):
    model_config = ConfigDict(frozen=True)

    energy: float
    reference: float = Field(..., description="u(r, ε) from a direct solve")
    errors: Dict[int, float] = Field(..., description="Relative truncation error per j_max")

    @property
    def decreasing(self) -> bool:
        orders = sorted(self.errors)
        return all(self.errors[b] <= self.errors[a] or self.errors[a] < 1e-13
                   for a, b in zip(orders, orders[1:]))


class EntiretyReport(BaseModel):
    """Truncated series against direct solves at one radius."""
    model_config = ConfigDict(frozen=True)

    r: float
    rows: List[EntiretyRow]

    @property
    def passed(self) -> bool:
        return all(row.decreasing for row in self.rows)


def entirety_check(model: PotentialModel, l: int, r: float, energy_list: Sequence[float],
                   orders: Sequence[int] = (2, 4, 6), free_scale: float = 1.0,
                   grid: Optional[RadialGrid] = None) -> EntiretyReport:
    """Relative error of the truncated series against solve_regular for each energy and order."""
    orders = sorted(orders)
    short_range = classify(model)
    grid = grid if grid is not None else RadialGrid.for_class(short_range, r, free_scale=free_scale)
    series = build_series(model, l, grid=grid, j_max=orders[-1], free_scale=free_scale)
    rows = []
    for energy in energy_list:
        reference, _ = solve_regular(model, l, energy, grid=grid, free_scale=free_scale,
                                     short_range=short_range).value(r)
        errors = {j: abs(series_eval(series, energy, r, j) - reference) / abs(reference) for j in orders}
        rows.append(EntiretyRow(energy=energy, reference=reference, errors=errors))
    return EntiretyReport(r=r, rows=rows)


def free_coefficient(l: int, j: int, r: float, free_scale: float = 1.0) -> float:
    """Closed-form free-particle coefficient (−1)ʲ (r/sL)^{ℓ+1} r^{2j} / (2^{2j+ℓ+½} j! Γ(j+ℓ+3/2))."""
    if j < 0 or l < 0:
        raise DomainError(f"free coefficients need j, l >= 0, got j={j}, l={l}")
    log_abs = ((l + 1.0) * math.log(r / free_scale) + 2.0 * j * math.log(r)
               - (2.0 * j + l + 0.5) * math.log(2.0) - special.gammaln(j + 1.0) - special.gammaln(j + l + 1.5))
    return (-1.0) ** j * math.exp(log_abs)


def energy_radius(series: EnergySeries, r: float) -> List[float]:
    """Ratio-test estimates |x⁽ʲ⁻¹⁾(r)/x⁽ʲ⁾(r)|, j = 1..j_max, of the energy range where truncation is reliable."""
    values = [series.at(j, r) for j in range(series.j_max + 1)]
    return [abs(values[j - 1] / values[j]) if values[j] != 0.0 else math.inf for j in range(1, len(values))]


def equation_residual(series: EnergySeries, j: int) -> float:
    """max |x⁽ʲ⁾″ − [ℓ(ℓ+1)/r² + v] x⁽ʲ⁾ + x⁽ʲ⁻¹⁾| / max |x⁽ʲ⁻¹⁾| on the uniform part of the grid.

    x⁽ʲ⁾″ is the 5-point central derivative of x⁽ʲ⁾′.
    """
    if not 1 <= j <= series.j_max:
        raise DomainError(f"order {j} is outside 1..{series.j_max}")
    radii = series.radii
    steps = np.diff(radii)
    uniform = np.isclose(steps, steps[-1], rtol=1e-6, atol=0.0)
    start = len(steps) - int(np.argmin(uniform[::-1])) if not np.all(uniform) else 0
    start = min(start, len(steps))
    r = radii[start:]
    if len(r) < 5:
        raise DomainError("equation_residual needs at least five uniformly spaced radii")
    h = steps[-1]
    _, dx = series.profile(j)
    x, _ = series.profile(j)
    previous, _ = series.profile(j - 1)
    dx_u, x_u, prev_u = dx[start:], x[start:], previous[start:]
    second = (dx_u[:-4] - 8.0 * dx_u[1:-3] + 8.0 * dx_u[3:-1] - dx_u[4:]) / (12.0 * h)
    inner = slice(2, -2)
    q = _zero_energy_q(series.model, series.l, r[inner])
    residual = second - q * x_u[inner] + prev_u[inner]
    return float(np.max(np.abs(residual)) / np.max(np.abs(prev_u)))
