"""
Rigidity of regular solutions and the identities that tie it to energy derivatives.

The rigidity is 𝒢(r) = 1/P(r) with P(r) = ∫₀ʳ u². For cusp-normalized
solutions the energy derivatives of L = u′/u and R = u/u′ satisfy

    −(∂L/∂ε) u² = P,        (∂R/∂ε) u′² = P,

which :func:`verify_fundamental` checks with finite energy differences.
"""
import math
from typing import List, Optional, Sequence, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict, Field

from cuspkit import hermite
from cuspkit.data_classes import CuspFamily
from cuspkit.errors import DomainError, NodeProximity, PoleStraddle
from cuspkit.log_bus import CuspLogBus
from cuspkit.parallel import ordered_map
from cuspkit.potential import PotentialModel, ShortRangeClass, classify
from cuspkit.radial import RadialGrid, RadialSolution, solve_regular

STENCIL = (-2, -1, 1, 2)
STENCIL_WEIGHTS = (1.0, -8.0, 8.0, -1.0)
DEFAULT_STEP_FACTOR = 1e-4
MAX_STEP_FACTOR = 1e-3
NODE_EXCLUSION = 1e-3
MAX_REFINEMENTS = 10
RICHARDSON_FACTOR = 16.0


def _scaled_probability(sol: RadialSolution, r: float) -> Tuple[float, float]:
    """P(r) in units of exp(2·scale), together with that scale."""
    i, patch, scale = sol.patch(r)
    x0, x1 = sol.patch_bounds(i)
    if i < 0:
        base = _tail(sol) * math.exp(2.0 * (sol.start.log_u - scale))
    else:
        base = float(sol.prob[i]) * math.exp(2.0 * (float(sol.log_scale[i]) - scale))
    u0, u1, d0, d1 = patch
    partial = hermite.partial_product_integral(x0, x1, (u0, u1, d0, d1), (u0, u1, d0, d1), r)
    return base + partial, scale


def _tail(sol: RadialSolution) -> float:
    """∫₀^{r_min} u² in units of u(r_min)² (closed-form strict-cusp tail)."""
    logderiv = sol.start.logderiv
    if sol.spec.family == CuspFamily.rvdw:
        return 1.0 / (2.0 * logderiv)
    return sol.grid.r_min / (2.0 * sol.grid.r_min * logderiv + 1.0)


def probability_integral(sol: RadialSolution, r: float) -> float:
    """P(r) = ∫₀ʳ u² for a cusp-normalized solution.

    Grid radii use the value propagated with the solution; other radii add a
    Gauss-Legendre integral over the cubic Hermite patch. Below r_min the
    strict-cusp power law (F, GC, alCD) or the exponential form (rVdW) is
    integrated in closed form.
    """
    value, scale = _scaled_probability(sol, r)
    return value * math.exp(2.0 * scale)


def rigidity_at(sol: RadialSolution, r: float) -> float:
    """𝒢(r) = 1/P(r)."""
    p = probability_integral(sol, r)
    if p <= 0.0:
        raise DomainError(f"probability integral must be positive, got {p} at r={r}")
    return 1.0 / p


class RigidityProfile(BaseModel):
    """P, 𝒢 and the energy derivatives of L and R on a list of radii."""
    model_config = ConfigDict(frozen=True)

    energy: float
    l: int
    radii: List[float]
    prob_integral: List[float]
    rigidity: List[float]
    dL_de: List[float]
    dR_de: List[float]
    d_eps: float
    d_eps_refined: Optional[float] = Field(default=None, description="Half step of the Richardson-combined stencil")


class FundamentalRow(BaseModel):
    model_config = ConfigDict(frozen=True)

    r: float
    prob_integral: float
    rigidity: float
    dL_de: float
    dR_de: float
    residual1: Optional[float] = Field(default=None, description="|−(∂L/∂ε)u² − P|/P, None when skipped near a node of u")
    residual2: Optional[float] = Field(default=None, description="|(∂R/∂ε)u′² − P|/P, None when skipped near a node of u′")


class FundamentalReport(BaseModel):
    """Residuals of the rigidity identities at a set of radii."""
    model_config = ConfigDict(frozen=True)

    energy: float
    l: int
    d_eps: float
    d_eps_refined: Optional[float] = Field(default=None, description="Half step of the Richardson-combined stencil")
    rows: List[FundamentalRow]
    max_residual1: float
    max_residual2: float
    skipped: int = Field(..., ge=0, description="Residual evaluations skipped near nodes")

    @property
    def max_residual(self) -> float:
        return max(self.max_residual1, self.max_residual2)


def _default_grid(short_range: ShortRangeClass, r_max: float, free_scale: float) -> RadialGrid:
    return RadialGrid.for_class(short_range, r_max, free_scale=free_scale)


def _step(short_range: ShortRangeClass, energy: float, d_eps: Optional[float]) -> float:
    reference = max(abs(energy), short_range.energy_scale)
    if d_eps is None:
        return DEFAULT_STEP_FACTOR * reference
    if not 0.0 < d_eps <= MAX_STEP_FACTOR * reference:
        raise DomainError(f"d_eps must lie in (0, {MAX_STEP_FACTOR * reference:.3g}], got {d_eps}")
    return d_eps


def _stencil(values: Sequence[float], step: float) -> float:
    return sum(w * x for w, x in zip(STENCIL_WEIGHTS, values)) / (12.0 * step)


def _derivatives(model: PotentialModel, l: int, energy: float, radii: Sequence[float], d_eps: float,
                 grid: RadialGrid, free_scale: float, short_range: ShortRangeClass,
                 n_jobs: int, richardson: bool = True) -> Tuple[RadialSolution, List[float], List[float]]:
    """Five-point ∂L/∂ε and ∂R/∂ε with step d_eps, combined with the d_eps/2 stencil when ``richardson``."""
    offsets = sorted(set(STENCIL) | ({k / 2.0 for k in STENCIL} if richardson else set()))
    energies = [energy] + [energy + k * d_eps for k in offsets]
    solutions = ordered_map(
        lambda e: solve_regular(model, l, e, grid=grid, free_scale=free_scale, short_range=short_range),
        energies, n_jobs=n_jobs,
    )
    central = solutions[0]
    shifted = dict(zip(offsets, solutions[1:]))
    dL, dR = [], []
    for r in radii:
        values = {k: s.scaled_value(r)[:2] for k, s in shifted.items()}
        logderivs = {k: du / u if u != 0.0 else math.inf for k, (u, du) in values.items()}
        rmatrices = {k: u / du if du != 0.0 else math.inf for k, (u, du) in values.items()}
        for table, out in ((logderivs, dL), (rmatrices, dR)):
            coarse = _stencil([table[k] for k in STENCIL], d_eps)
            if richardson:
                fine = _stencil([table[k / 2.0] for k in STENCIL], d_eps / 2.0)
                out.append((RICHARDSON_FACTOR * fine - coarse) / (RICHARDSON_FACTOR - 1.0))
            else:
                out.append(coarse)
    return central, dL, dR


def rigidity_profile(model: PotentialModel, l: int, energy: float, radii: Sequence[float],
                     d_eps: Optional[float] = None, grid: Optional[RadialGrid] = None,
                     free_scale: float = 1.0, n_jobs: int = 1, richardson: bool = True) -> RigidityProfile:
    """P, 𝒢, ∂L/∂ε and ∂R/∂ε at ``radii`` from cusp-normalized solves around ``energy``."""
    short_range = classify(model)
    radii = sorted(float(r) for r in radii)
    if not radii:
        raise DomainError("rigidity_profile needs at least one radius")
    step = _step(short_range, energy, d_eps)
    grid = grid if grid is not None else _default_grid(short_range, radii[-1], free_scale)
    central, dL, dR = _derivatives(model, l, energy, radii, step, grid, free_scale, short_range, n_jobs,
                                   richardson)
    probs = [probability_integral(central, r) for r in radii]
    return RigidityProfile(energy=energy, l=l, radii=radii, prob_integral=probs,
                           rigidity=[1.0 / p for p in probs], dL_de=dL, dR_de=dR,
                           d_eps=step, d_eps_refined=step / 2.0 if richardson else None)


def _local_wavelength(sol: RadialSolution, r: float) -> float:
    q = sol.l * (sol.l + 1.0) / r ** 2 + sol.model.evaluate(r, extrapolate=True) - sol.energy
    return 2.0 * math.pi / math.sqrt(max(abs(q), 1e-300))


def verify_fundamental(model: PotentialModel, l: int, energy: float, r_list: Sequence[float],
                       d_eps: Optional[float] = None, grid: Optional[RadialGrid] = None,
                       free_scale: float = 1.0, n_jobs: int = 1, richardson: bool = True) -> FundamentalReport:
    """Check −(∂L/∂ε)u² = P and (∂R/∂ε)u′² = P at every radius.

    ∂/∂ε is a 5-point central difference with step ``d_eps`` (default
    1e-4·max(|ε|, s_E)), Richardson-combined once with the d_eps/2 stencil
    as (16·D(h/2) − D(h))/15 unless ``richardson`` is False. A residual is
    skipped when r lies within 1e-3 local wavelengths of a node of u (residual1)
    or of u′ (residual2).

    Raises:
        NodeProximity: when every residual had to be skipped.
    """
    source = "rigidity.verify_fundamental"
    short_range = classify(model)
    radii = sorted(float(r) for r in r_list)
    if not radii:
        raise DomainError("verify_fundamental needs at least one radius")
    step = _step(short_range, energy, d_eps)
    grid = grid if grid is not None else _default_grid(short_range, radii[-1], free_scale)
    central, dL, dR = _derivatives(model, l, energy, radii, step, grid, free_scale, short_range, n_jobs,
                                   richardson)

    rows: List[FundamentalRow] = []
    skipped = 0
    for r, dl, dr in zip(radii, dL, dR):
        u, du, scale = central.scaled_value(r)
        p_scaled, p_scale = _scaled_probability(central, r)
        p_scaled *= math.exp(2.0 * (p_scale - scale))
        exclusion = NODE_EXCLUSION * _local_wavelength(central, r)
        q = central.l * (central.l + 1.0) / r ** 2 + model.evaluate(r, extrapolate=True) - energy
        residual1 = residual2 = None
        if du == 0.0 or abs(u / du) > exclusion:
            residual1 = abs(-dl * u * u - p_scaled) / p_scaled
        else:
            skipped += 1
        if q * u == 0.0 or abs(du / (q * u)) > exclusion:
            residual2 = abs(dr * du * du - p_scaled) / p_scaled
        else:
            skipped += 1
        if residual1 is None or residual2 is None:
            CuspLogBus.debug("near-node residual skipped", source=source, action="rigidity.skip_node",
                             r=r, energy=energy)
        p = p_scaled * math.exp(2.0 * scale)
        rows.append(FundamentalRow(r=r, prob_integral=p, rigidity=1.0 / p, dL_de=dl, dR_de=dr,
                                   residual1=residual1, residual2=residual2))
    if skipped == 2 * len(rows):
        raise NodeProximity(f"every radius lies within {NODE_EXCLUSION} wavelengths of a node")
    residuals1 = [row.residual1 for row in rows if row.residual1 is not None]
    residuals2 = [row.residual2 for row in rows if row.residual2 is not None]
    return FundamentalReport(energy=energy, l=l, d_eps=step,
                             d_eps_refined=step / 2.0 if richardson else None, rows=rows,
                             max_residual1=max(residuals1, default=0.0),
                             max_residual2=max(residuals2, default=0.0), skipped=skipped)


class MonotonicityReport(BaseModel):
    """Energy scan of L(r, ε) and R(r, ε) at fixed r."""
    model_config = ConfigDict(frozen=True)

    r: float
    energies: List[float]
    logderiv: List[float]
    rmatrix: List[float]
    l_poles: List[Tuple[float, float]] = Field(default_factory=list, description="Energy brackets of poles of L")
    r_poles: List[Tuple[float, float]] = Field(default_factory=list, description="Energy brackets of poles of R")
    violations: List[Tuple[float, float]] = Field(default_factory=list)

    @property
    def passed(self) -> bool:
        return not self.violations


def monotonicity_scan(model: PotentialModel, l: int, r: float, energy_grid: Sequence[float],
                      free_scale: float = 1.0, max_refinements: int = MAX_REFINEMENTS) -> MonotonicityReport:
    """Check that L decreases and R increases with ε between their poles.

    Poles are located by sign changes of u (for L) and u′ (for R) between
    consecutive energies. An interval that straddles both kinds of pole, or
    that violates monotonicity, is bisected up to ``max_refinements`` times.

    Raises:
        PoleStraddle: when a pole of L and a pole of R cannot be separated.
    """
    short_range = classify(model)
    grid = _default_grid(short_range, r, free_scale)
    cache = {}

    def state(energy: float) -> Tuple[float, float]:
        if energy not in cache:
            sol = solve_regular(model, l, energy, grid=grid, free_scale=free_scale, short_range=short_range)
            cache[energy] = sol.scaled_value(r)[:2]
        return cache[energy]

    l_poles: List[Tuple[float, float]] = []
    r_poles: List[Tuple[float, float]] = []
    violations: List[Tuple[float, float]] = []

    def check(ea: float, eb: float, depth: int) -> None:
        ua, dua = state(ea)
        ub, dub = state(eb)
        pole_l = math.copysign(1.0, ua) != math.copysign(1.0, ub)
        pole_r = math.copysign(1.0, dua) != math.copysign(1.0, dub)
        ok_l = pole_l or dub / ub < dua / ua
        ok_r = pole_r or ub / dub > ua / dua
        if (pole_l and pole_r) or not (ok_l and ok_r):
            if depth < max_refinements:
                mid = 0.5 * (ea + eb)
                check(ea, mid, depth + 1)
                check(mid, eb, depth + 1)
                return
            if pole_l and pole_r:
                raise PoleStraddle(f"poles of L and R both lie in [{ea}, {eb}] after {depth} refinements")
            violations.append((ea, eb))
            return
        if pole_l:
            l_poles.append((ea, eb))
        if pole_r:
            r_poles.append((ea, eb))

    energies = sorted(set(float(e) for e in energy_grid))
    if not energies:
        raise DomainError("monotonicity_scan needs at least one energy")
    for ea, eb in zip(energies, energies[1:]):
        check(ea, eb, 0)
    if len(energies) == 1:
        state(energies[0])
    scanned = sorted(cache)
    return MonotonicityReport(
        r=r, energies=scanned,
        logderiv=[cache[e][1] / cache[e][0] if cache[e][0] != 0.0 else math.inf for e in scanned],
        rmatrix=[cache[e][0] / cache[e][1] if cache[e][1] != 0.0 else math.inf for e in scanned],
        l_poles=l_poles, r_poles=r_poles, violations=violations,
    )


def overlap_integral(first: RadialSolution, second: RadialSolution, r: float) -> float:
    """∫₀ʳ u₁u₂ for two solutions on the same grid (Gauss-Legendre on Hermite patches)."""
    if first.grid is not second.grid and not np.array_equal(first.points, second.points):
        raise DomainError("overlap integrals need solutions on the same grid")
    r = first.check_radius(r)
    r_min = first.grid.r_min
    u1, l1 = math.exp(first.start.log_u), first.start.logderiv
    u2, l2 = math.exp(second.start.log_u), second.start.logderiv
    if first.spec.family == CuspFamily.rvdw:
        total = u1 * u2 / (l1 + l2)
    else:
        total = u1 * u2 * r_min / (r_min * (l1 + l2) + 1.0)
    x = np.concatenate([[r_min], first.points])
    a = np.concatenate([[u1], first.u_values])
    da = np.concatenate([[u1 * l1], first.du_values])
    b = np.concatenate([[u2], second.u_values])
    db = np.concatenate([[u2 * l2], second.du_values])
    i = hermite.locate(x, r)
    if i > 0:
        total += float(np.sum(hermite.interval_product_integrals(x[:i + 1], a[:i + 1], da[:i + 1],
                                                                 b[:i + 1], db[:i + 1])))
    total += hermite.partial_product_integral(x[i], x[i + 1], (a[i], a[i + 1], da[i], da[i + 1]),
                                              (b[i], b[i + 1], db[i], db[i + 1]), r)
    return total


def cross_energy_overlap(model: PotentialModel, l: int, e1: float, e2: float, r: float,
                         free_scale: float = 1.0, grid: Optional[RadialGrid] = None) -> Tuple[float, float]:
    """(∫₀ʳ u_{e2}u_{e1}, W_r(u_{e2}, u_{e1})/(e2 − e1)) for two cusp-normalized solutions."""
    if e1 == e2:
        raise DomainError("cross_energy_overlap needs two different energies")
    short_range = classify(model)
    grid = grid if grid is not None else _default_grid(short_range, r, free_scale)
    first = solve_regular(model, l, e1, grid=grid, free_scale=free_scale, short_range=short_range)
    second = solve_regular(model, l, e2, grid=grid, free_scale=free_scale, short_range=short_range)
    lhs = overlap_integral(first, second, r)
    u1, du1 = first.value(r)
    u2, du2 = second.value(r)
    rhs = (u2 * du1 - du2 * u1) / (e2 - e1)
    return lhs, rhs
