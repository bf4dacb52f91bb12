"""
Separability of a pair's interaction with its spectators.

For a pair (i, j) with center of mass c and relative vector r = r_j − r_i, the
spectator terms V = Σ_k v_ik(|r_k − r_i|) + v_jk(|r_k − r_j|) tend to the
separable form V_sp = Σ_k v_ik(R_k) + v_jk(R_k), R_k = |r_k − c|, as r → 0.
This module evaluates both, the Taylor terms of their difference, scaling fits
of the residual and the local-density length r_ρ that controls the expansion.
"""
import math
from typing import List, Optional, Sequence, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

from cuspkit import specialfn
from cuspkit.errors import CoincidentParticles, DomainError, FitDegenerate
from cuspkit.log_bus import CuspLogBus
from cuspkit.parallel import ordered_map, spawn_generators
from cuspkit.potential import PotentialModel

Vector = Tuple[float, float, float]

RESIDUAL_FLOOR = 1e-14
ORIENTATION_NODES = 16
MONTE_CARLO_BATCH = 1000
BOX_HALF_WIDTH = 4.0


class PairPotential(BaseModel):
    """Potential acting between particles ``a`` and ``b`` (unordered)."""
    model_config = ConfigDict(frozen=True, extra="forbid")

    a: int = Field(..., ge=0)
    b: int = Field(..., ge=0)
    model: PotentialModel

    @model_validator(mode="after")
    def _distinct(self) -> "PairPotential":
        if self.a == self.b:
            raise ValueError("a pair potential needs two different particles")
        return self


class ParticleConfig(BaseModel):
    """Masses and positions of N ≥ 3 particles, the selected pair and the pair potentials."""
    model_config = ConfigDict(frozen=True, extra="forbid")

    masses: List[float] = Field(..., min_length=3, description="Positive masses m_1..m_N")
    positions: List[Vector] = Field(..., min_length=3, description="Cartesian positions")
    pair: Tuple[int, int] = Field(default=(0, 1), description="Indices (i, j) of the selected pair")
    pair_potentials: List[PairPotential] = Field(default_factory=list)
    default_potential: Optional[PotentialModel] = Field(
        default=None, description="Potential used for particle pairs without an explicit entry")

    @field_validator("masses")
    @classmethod
    def _positive(cls, masses: List[float]) -> List[float]:
        if any(not m > 0.0 or not math.isfinite(m) for m in masses):
            raise ValueError("masses must be positive and finite")
        return masses

    @model_validator(mode="after")
    def _consistent(self) -> "ParticleConfig":
        n = len(self.masses)
        if len(self.positions) != n:
            raise ValueError("one position is needed per mass")
        i, j = self.pair
        if i == j or not (0 <= i < n and 0 <= j < n):
            raise ValueError(f"pair {self.pair} must name two different particles out of {n}")
        for entry in self.pair_potentials:
            if entry.a >= n or entry.b >= n:
                raise ValueError(f"pair potential ({entry.a}, {entry.b}) refers to a missing particle")
        return self

    @property
    def total_pair_mass(self) -> float:
        i, j = self.pair
        return self.masses[i] + self.masses[j]

    @property
    def spectators(self) -> List[int]:
        return [k for k in range(len(self.masses)) if k not in self.pair]

    def array(self, index: int) -> np.ndarray:
        return np.asarray(self.positions[index], dtype=float)

    @property
    def center(self) -> np.ndarray:
        i, j = self.pair
        return (self.masses[i] * self.array(i) + self.masses[j] * self.array(j)) / self.total_pair_mass

    @property
    def relative(self) -> np.ndarray:
        """r = r_j − r_i."""
        i, j = self.pair
        return self.array(j) - self.array(i)

    @property
    def separation(self) -> float:
        return float(np.linalg.norm(self.relative))

    def potential_for(self, a: int, b: int) -> PotentialModel:
        for entry in self.pair_potentials:
            if {entry.a, entry.b} == {a, b}:
                return entry.model
        if self.default_potential is None:
            raise DomainError(f"no potential given for particles ({a}, {b})")
        return self.default_potential

    def check_coincidences(self) -> None:
        """Raise unless every spectator is apart from both pair particles and from the pair center."""
        i, j = self.pair
        c = self.center
        for k in self.spectators:
            rk = self.array(k)
            for other, label in ((self.array(i), f"particle {i}"), (self.array(j), f"particle {j}"), (c, "the pair center")):
                if np.linalg.norm(rk - other) == 0.0:
                    raise CoincidentParticles(f"spectator {k} coincides with {label}")

    def with_separation(self, r: float, direction: Optional[np.ndarray] = None) -> "ParticleConfig":
        """Same center and spectators with the pair separated by r along ``direction`` (default: current r̂ or z)."""
        i, j = self.pair
        if direction is None:
            direction = self.relative if self.separation > 0.0 else np.array([0.0, 0.0, 1.0])
        unit = np.asarray(direction, dtype=float) / np.linalg.norm(direction)
        c, mass = self.center, self.total_pair_mass
        positions = list(self.positions)
        positions[i] = tuple(c - self.masses[j] / mass * r * unit)
        positions[j] = tuple(c + self.masses[i] / mass * r * unit)
        return self.model_copy(update={"positions": positions})

    def spectator_geometry(self, k: int) -> Tuple[float, float]:
        """(R_k, cos γ_k) with γ_k the angle between r_k − c and r."""
        big_r = self.array(k) - self.center
        distance = float(np.linalg.norm(big_r))
        r = self.separation
        cos_gamma = 0.0 if r == 0.0 else float(np.dot(big_r, self.relative) / (distance * r))
        return distance, min(1.0, max(-1.0, cos_gamma))


def separable_potential(config: ParticleConfig) -> float:
    """V_sp = Σ_{k≠i,j} [v_ik(R_k) + v_jk(R_k)].

    Raises:
        CoincidentParticles: when a spectator sits on a pair particle or on the pair center.
    """
    config.check_coincidences()
    i, j = config.pair
    total = 0.0
    for k in config.spectators:
        distance, _ = config.spectator_geometry(k)
        total += config.potential_for(i, k).evaluate(distance) + config.potential_for(j, k).evaluate(distance)
    return float(total)


def full_potential(config: ParticleConfig) -> float:
    """V = Σ_{k≠i,j} [v_ik(|r_k − r_i|) + v_jk(|r_k − r_j|)]."""
    config.check_coincidences()
    i, j = config.pair
    total = 0.0
    for k in config.spectators:
        rk = config.array(k)
        total += config.potential_for(i, k).evaluate(float(np.linalg.norm(rk - config.array(i))))
        total += config.potential_for(j, k).evaluate(float(np.linalg.norm(rk - config.array(j))))
    return float(total)


class ExpansionTerms(BaseModel):
    model_config = ConfigDict(frozen=True)

    zeroth: float
    first: float
    second: float


def _displacement_second(model: PotentialModel, big_r: float, d: float, p2: float) -> float:
    # v(|R + d|) to second order: (d²/6)[v″ + 2v′/R] + (d²/3)[v″ − v′/R] P₂(cos θ)
    dv = model.derivative(big_r, 1)
    d2v = model.derivative(big_r, 2)
    return d * d / 6.0 * (d2v + 2.0 * dv / big_r) + d * d / 3.0 * (d2v - dv / big_r) * p2


def expansion_terms(v_ik: PotentialModel, v_jk: PotentialModel, masses: Tuple[float, float],
                    big_r: float, r: float, gamma: float) -> ExpansionTerms:
    """Zeroth, first and second order of v_ik + v_jk around the pair center.

    first = [m_j v_ik′ − m_i v_jk′]/(m_i + m_j) · r · P₁(cos γ). The second-order term
    is the Taylor term of each spectator potential for its displacement
    (m_j/M) r and (m_i/M) r; for identical particles it is
    (1/12) r² [v″ + 2v′/R] + (1/6) r² [v″ − v′/R] P₂(cos γ).

    Args:
        v_ik: Potential between pair particle i and the spectator.
        v_jk: Potential between pair particle j and the spectator.
        masses: (m_i, m_j).
        big_r: Spectator distance R_k from the pair center.
        r: Pair separation.
        gamma: Angle γ between r_k − c and r = r_j − r_i (radians).

    Raises:
        DomainError: unless 0 ≤ r < R.
        DifferentiationFailure: for tabulated potentials near the table edges.
    """
    if not 0.0 <= r < big_r:
        raise DomainError(f"expansion needs 0 <= r < R, got r={r}, R={big_r}")
    m_i, m_j = masses
    mass = m_i + m_j
    cos_gamma = math.cos(gamma)
    p1 = specialfn.legendre(1, cos_gamma)
    p2 = specialfn.legendre(2, cos_gamma)
    zeroth = v_ik.evaluate(big_r) + v_jk.evaluate(big_r)
    first = (m_j * v_ik.derivative(big_r, 1) - m_i * v_jk.derivative(big_r, 1)) / mass * r * p1
    second = (_displacement_second(v_ik, big_r, m_j / mass * r, p2)
              + _displacement_second(v_jk, big_r, m_i / mass * r, p2))
    return ExpansionTerms(zeroth=float(zeroth), first=float(first), second=float(second))


def small_parameter(model: PotentialModel, r: float, big_r: float) -> float:
    """r·|v′(R)|/|v(R)|, the expansion parameter of the separable limit.

    Raises:
        DomainError: when v(R) = 0.
    """
    if r <= 0.0 or big_r <= 0.0:
        raise DomainError(f"small_parameter needs r > 0 and R > 0, got r={r}, R={big_r}")
    value = model.evaluate(big_r)
    if value == 0.0:
        raise DomainError(f"v(R) vanishes at R={big_r}; the small parameter is undefined")
    return float(r * abs(model.derivative(big_r, 1)) / abs(value))


class SpectatorTerms(BaseModel):
    model_config = ConfigDict(frozen=True)

    k: int
    distance: float
    gamma: float
    terms: ExpansionTerms


class SeparabilityReport(BaseModel):
    """Full and separable spectator potentials of one configuration and their expansion."""
    model_config = ConfigDict(frozen=True)

    V_full: float
    V_sp: float
    residual: float = Field(..., description="V_full − V_sp")
    first_order_pred: float
    second_order_pred: float
    small_param: float = Field(..., description="r·|v′(r_ρ)|/|v(r_ρ)| for the nearest spectator")
    r_rho: float = Field(..., gt=0.0, description="Distance of the nearest spectator from the pair center")
    spectators: List[SpectatorTerms] = Field(default_factory=list)


def separability_report(config: ParticleConfig) -> SeparabilityReport:
    """All separability quantities for one configuration; γ_k and terms are reported per spectator."""
    v_full = full_potential(config)
    v_sp = separable_potential(config)
    i, j = config.pair
    r = config.separation
    rows: List[SpectatorTerms] = []
    for k in config.spectators:
        distance, cos_gamma = config.spectator_geometry(k)
        gamma = math.acos(cos_gamma)
        terms = expansion_terms(config.potential_for(i, k), config.potential_for(j, k),
                                (config.masses[i], config.masses[j]), distance, r, gamma)
        rows.append(SpectatorTerms(k=k, distance=distance, gamma=gamma, terms=terms))
    nearest = min(rows, key=lambda row: row.distance)
    small = 0.0 if r == 0.0 else small_parameter(config.potential_for(i, nearest.k), r, nearest.distance)
    return SeparabilityReport(
        V_full=v_full, V_sp=v_sp, residual=v_full - v_sp,
        first_order_pred=sum(row.terms.first for row in rows),
        second_order_pred=sum(row.terms.second for row in rows),
        small_param=small, r_rho=nearest.distance, spectators=rows,
    )


class ScalingFit(BaseModel):
    """Power-law fit |V_full − V_sp| ≈ A rⁿ over a separation sweep."""
    model_config = ConfigDict(frozen=True)

    slope: float
    order: int = Field(..., description="Nearest integer to the slope")
    prefactor: float = Field(..., description="Geometric mean of |residual|/r^order")
    predicted_prefactor: float = Field(..., description="Same quantity from the expansion terms")
    radii: List[float]
    residuals: List[float]

    @property
    def prefactor_mismatch(self) -> float:
        return abs(self.prefactor - self.predicted_prefactor) / abs(self.predicted_prefactor)


def default_sweep(config: ParticleConfig) -> np.ndarray:
    """1e-6..1e-4 of the nearest spectator distance for distinct particles, 1e-4..1e-2 when first order vanishes."""
    nearest = min(config.spectator_geometry(k)[0] for k in config.spectators)
    report = separability_report(config.with_separation(1e-3 * nearest))
    identical = abs(report.first_order_pred) <= 1e-12 * abs(report.V_sp)
    low, high = (1e-4, 1e-2) if identical else (1e-6, 1e-4)
    return np.geomspace(low * nearest, high * nearest, 21)


def residual_scaling_fit(config_template: ParticleConfig, r_sweep: Optional[Sequence[float]] = None) -> ScalingFit:
    """Fit log|V_full − V_sp| against log r along the template's pair direction.

    Raises:
        DomainError: when the sweep spans less than two decades or reaches 0.1·min R_k.
        FitDegenerate: when a residual falls below 1e-14.
    """
    source = "separability.residual_scaling_fit"
    radii = np.asarray(r_sweep if r_sweep is not None else default_sweep(config_template), dtype=float)
    nearest = min(config_template.spectator_geometry(k)[0] for k in config_template.spectators)
    if len(radii) < 3 or radii.min() <= 0.0 or radii.max() / radii.min() < 100.0:
        raise DomainError("the separation sweep must be positive and span at least two decades")
    if radii.max() >= 0.1 * nearest:
        raise DomainError(f"separations must stay well below the nearest spectator distance {nearest}")
    reports = [separability_report(config_template.with_separation(r)) for r in radii]
    residuals = np.array([report.residual for report in reports])
    if np.any(np.abs(residuals) < RESIDUAL_FLOOR):
        CuspLogBus.warn("residual below floor", source=source, action="separability.fit_degenerate",
                        smallest=float(np.min(np.abs(residuals))))
        raise FitDegenerate(f"residual below {RESIDUAL_FLOOR}; the scaling fit is degenerate")
    slope, _ = np.polyfit(np.log(radii), np.log(np.abs(residuals)), 1)
    order = max(1, int(round(slope)))
    prefactor = float(np.exp(np.mean(np.log(np.abs(residuals) / radii ** order))))
    predicted = np.array([report.first_order_pred if order == 1 else report.second_order_pred for report in reports])
    predicted_prefactor = float(np.exp(np.mean(np.log(np.abs(predicted) / radii ** order))))
    return ScalingFit(slope=float(slope), order=order, prefactor=prefactor, predicted_prefactor=predicted_prefactor,
                      radii=radii.tolist(), residuals=residuals.tolist())


def orientation_average(v_ik: PotentialModel, v_jk: PotentialModel, masses: Tuple[float, float],
                        big_r: float, r: float, nodes: int = ORIENTATION_NODES) -> float:
    """⟨V_full − V_sp⟩ over the direction of r, divided by |V_sp|, for one spectator at distance R.

    For a Yukawa spectator potential the average is sinh(x/2)/(x/2) − 1 for identical
    particles, x = r/β_Y, independent of R; for Coulomb it vanishes.
    """
    if not 0.0 <= r < big_r:
        raise DomainError(f"orientation average needs 0 <= r < R, got r={r}, R={big_r}")
    m_i, m_j = masses
    d_i, d_j = m_j / (m_i + m_j) * r, m_i / (m_i + m_j) * r
    cosines, weights = np.polynomial.legendre.leggauss(nodes)
    separable = v_ik.evaluate(big_r) + v_jk.evaluate(big_r)
    if separable == 0.0:
        raise DomainError(f"separable potential vanishes at R={big_r}")
    # r_k − r_i = R + d_i r̂ and r_k − r_j = R − d_j r̂
    dist_i = np.sqrt(big_r ** 2 + d_i ** 2 + 2.0 * big_r * d_i * cosines)
    dist_j = np.sqrt(big_r ** 2 + d_j ** 2 - 2.0 * big_r * d_j * cosines)
    full = v_ik.evaluate(dist_i) + v_jk.evaluate(dist_j)
    return float(0.5 * np.sum(weights * (full - separable)) / abs(separable))


def collapse_metric(model: PotentialModel, masses: Tuple[float, float], distances: Sequence[float],
                    x_values: Sequence[float], length: float) -> float:
    """max over x of the spread of ln|⟨residual⟩/V_sp| between spectator distances, with r = x·length.

    Small values mean the normalized residual is a function of r/length alone.

    Raises:
        DomainError: when an averaged residual vanishes (no logarithm).
    """
    curves = []
    for big_r in distances:
        averages = np.array([orientation_average(model, model, masses, big_r, x * length) for x in x_values])
        if np.any(averages == 0.0):
            raise DomainError(f"orientation-averaged residual vanishes at R={big_r}")
        curves.append(np.log(np.abs(averages)))
    stacked = np.vstack(curves)
    return float(np.max(stacked.max(axis=0) - stacked.min(axis=0)))


def density_radius(density: float) -> float:
    """r_ρ = (4πρ/3)^{−1/3}."""
    if not density > 0.0:
        raise DomainError(f"density must be positive, got {density}")
    return (4.0 * math.pi * density / 3.0) ** (-1.0 / 3.0)


def _nearest_batch(args: Tuple[np.random.Generator, int, float]) -> np.ndarray:
    rng, count, density = args
    half = BOX_HALF_WIDTH * density_radius(density)
    expected = density * (2.0 * half) ** 3
    nearest = np.empty(count)
    for n in range(count):
        points = rng.uniform(-half, half, size=(rng.poisson(expected), 3))
        nearest[n] = np.min(np.linalg.norm(points, axis=1)) if len(points) else half
    return nearest


def sample_nearest_distances(density: float, n_samples: int, seed: Optional[int] = None,
                             n_jobs: int = 1) -> np.ndarray:
    """Nearest-neighbour distances from the origin in a homogeneous Poisson gas.

    Samples are drawn in fixed-size batches with independent streams spawned
    from ``seed``, so the result does not depend on ``n_jobs``.
    """
    if n_samples < 1:
        raise DomainError(f"n_samples must be positive, got {n_samples}")
    sizes = [MONTE_CARLO_BATCH] * (n_samples // MONTE_CARLO_BATCH)
    if n_samples % MONTE_CARLO_BATCH:
        sizes.append(n_samples % MONTE_CARLO_BATCH)
    generators = spawn_generators(seed, len(sizes))
    batches = ordered_map(_nearest_batch, [(rng, size, density) for rng, size in zip(generators, sizes)],
                          n_jobs=n_jobs)
    return np.concatenate(batches)


def density_radius_estimate(density: float, n_samples: int = 10_000, seed: Optional[int] = None,
                            n_jobs: int = 1) -> Tuple[float, float]:
    """(Monte Carlo estimate, exact r_ρ); the estimate is the cube root of the mean cubed nearest distance."""
    distances = sample_nearest_distances(density, n_samples, seed=seed, n_jobs=n_jobs)
    return float(np.mean(distances ** 3) ** (1.0 / 3.0)), density_radius(density)
