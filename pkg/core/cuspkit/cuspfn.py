"""
Analytic zero-energy cusp functions.

For every physically allowed short-range family this module provides the
regular cusp function f^cp, the strict cusp function F^cp it tends to at
coalescence, and the irregular companion g^cp normalized so that the Wronskian
in the family's natural scaled variable equals 2/π. Values are returned as
:class:`CuspValue` pairs (value and r-derivative); values outside the double
range are carried with a log offset.
"""
import math
from typing import List, Optional

from pydantic import BaseModel, ConfigDict, Field, model_validator
from scipy import special

from cuspkit import specialfn
from cuspkit.data_classes import CuspFamily
from cuspkit.errors import DomainError, NonphysicalPotential
from cuspkit.potential import ShortRangeClass, transformed_l

TWO_OVER_PI = 2.0 / math.pi
LOG_TINY = math.log(1e-280)
LOG_HUGE = math.log(1e280)


class CuspValue(BaseModel):
    """
    A cusp-function value and its r-derivative.

    When ``underflow_scaled`` is set the represented value is ``f * exp(log_offset)``
    (and likewise for ``df``); ``f`` then only carries the sign.
    """
    model_config = ConfigDict(frozen=True)

    f: float
    df: float
    underflow_scaled: bool = False
    log_offset: float = 0.0

    @model_validator(mode="after")
    def _finite_derivative(self) -> "CuspValue":
        if math.isfinite(self.f) and not math.isfinite(self.df):
            raise ValueError("derivative must be finite whenever the value is finite")
        if self.log_offset != 0.0 and not self.underflow_scaled:
            raise ValueError("a log offset is only recorded for scaled values")
        return self

    @classmethod
    def from_log(cls, sign: float, log_abs: float, logderiv: float) -> "CuspValue":
        """Build from sign, ln|f| and f′/f, scaling when |f| leaves [1e-280, 1e280]."""
        if LOG_TINY <= log_abs <= LOG_HUGE:
            f = sign * math.exp(log_abs)
            return cls(f=f, df=f * logderiv)
        return cls(f=sign, df=sign * logderiv, underflow_scaled=True, log_offset=log_abs)

    @property
    def sign(self) -> float:
        return math.copysign(1.0, self.f)

    @property
    def log_abs(self) -> float:
        return math.log(abs(self.f)) + self.log_offset

    @property
    def logderiv(self) -> float:
        return self.df / self.f

    @property
    def value(self) -> float:
        """Plain value (may underflow to 0 or overflow to inf for scaled values)."""
        if not self.underflow_scaled:
            return self.f
        return self.f * math.exp(self.log_offset) if self.log_offset < 700.0 else self.sign * math.inf


class CuspSpec(BaseModel):
    """One (class, ℓ) cusp-function descriptor."""
    model_config = ConfigDict(frozen=True, extra="forbid")

    short_range: ShortRangeClass = Field(..., description="Classification of the potential")
    l: int = Field(..., ge=0, description="Partial wave")
    nu0: Optional[float] = Field(default=None, description="Bessel order 2(l+1/2)/|alpha-2|")
    lt: Optional[float] = Field(default=None, description="Transformed partial wave (alCD)")
    beta_alpha: Optional[float] = Field(default=None, gt=0.0, description="Length scale of the dominant term")
    free_scale: float = Field(default=1.0, gt=0.0, description="Free length scale sL", examples=[1.0])
    b_l: Optional[float] = Field(default=None, description="GC normalization constant")

    @classmethod
    def from_class(cls, short_range: ShortRangeClass, l: int, free_scale: float = 1.0) -> "CuspSpec":
        """Derive exponents and normalizations for partial wave ``l``.

        Raises:
            NonphysicalPotential: for NONPHYSICAL-* classes.
        """
        if not short_range.is_physical:
            raise NonphysicalPotential(f"no cusp function exists for class {short_range.tag}")
        specialized = short_range.for_l(l)
        family = specialized.family
        alpha = specialized.dominant_alpha
        nu0 = None
        b_l = None
        lt = None
        if family in (CuspFamily.gc, CuspFamily.rvdw):
            nu0 = 2.0 * (l + 0.5) / abs(alpha - 2.0)
        if family == CuspFamily.gc:
            log_b = ((nu0 + 0.5) * math.log(2.0 - alpha) + special.gammaln(nu0 + 1.0)
                     - (l + 1.0) * math.log(2.0) - special.gammaln(l + 1.5))
            b_l = math.exp(log_b)
        if family == CuspFamily.alcd:
            lt = specialized.lt
        return cls(short_range=specialized, l=l, nu0=nu0, lt=lt,
                   beta_alpha=specialized.beta_alpha, free_scale=free_scale, b_l=b_l)

    @property
    def family(self) -> CuspFamily:
        return self.short_range.family

    @property
    def alpha(self) -> float:
        return self.short_range.dominant_alpha

    @property
    def strength(self) -> float:
        return self.short_range.dominant_strength

    @property
    def natural_scale(self) -> float:
        """Length that makes the Wronskian 2/π: β_α for GC and rVdW, sL otherwise."""
        if self.family in (CuspFamily.gc, CuspFamily.rvdw):
            return self.beta_alpha
        return self.free_scale

    @property
    def effective_l(self) -> float:
        """Exponent ℓ (or ℓ_t) of the strict power law r^{ℓ+1}."""
        return self.lt if self.lt is not None else float(self.l)


def _check_radius(r: float) -> float:
    r = float(r)
    if not math.isfinite(r) or r <= 0.0:
        raise DomainError(f"cusp functions are evaluated at r > 0, got {r}")
    return r


def _free_log(l: float, x: float) -> float:
    return (l + 1.0) * math.log(x) - (l + 0.5) * math.log(2.0) - special.gammaln(l + 1.5)


def _free_power(l: float, r: float, free_scale: float) -> CuspValue:
    return CuspValue.from_log(1.0, _free_log(l, r / free_scale), (l + 1.0) / r)


def cusp_f_free(l: int, r: float, free_scale: float = 1.0) -> CuspValue:
    """f = (r/sL)^{ℓ+1} / (2^{ℓ+½} Γ(ℓ+3/2))."""
    if free_scale <= 0.0:
        raise DomainError(f"free length scale must be positive, got {free_scale}")
    return _free_power(float(l), _check_radius(r), free_scale)


def cusp_f_gc(spec: CuspSpec, r: float, signed_strength: Optional[float] = None) -> CuspValue:
    """Combined Generalized-Coulomb form f^cp(F)(r, sL) · I^a_{ν₀}(z).

    z = G̃ r^{2−α}/(2−α)², so one expression covers attraction (J-like, z < 0),
    repulsion (I-like, z > 0) and the free limit G̃ = 0.

    Args:
        spec: Cusp spec of a GC class (dominant α < 2).
        r: Radius.
        signed_strength: Override of the scaled strength G̃ (defaults to the class strength).

    Raises:
        SeriesNonConvergence: propagated from :func:`specialfn.analytic_i`.
    """
    if spec.family != CuspFamily.gc:
        raise DomainError(f"cusp_f_gc needs a GC class, got {spec.short_range.tag}")
    r = _check_radius(r)
    strength = spec.strength if signed_strength is None else float(signed_strength)
    alpha = spec.alpha
    nu0 = spec.nu0
    free = _free_power(float(spec.l), r, spec.free_scale)
    z = strength * r ** (2.0 - alpha) / (2.0 - alpha) ** 2
    ia = specialfn.analytic_i(nu0, z)
    dia = specialfn.analytic_i_prime(nu0, z) * (2.0 - alpha) * z / r
    if ia == 0.0:
        raise DomainError(f"cusp_f_gc evaluated at a node of the cusp function (r={r})")
    sign = math.copysign(1.0, ia)
    return CuspValue.from_log(sign, free.log_abs + math.log(abs(ia)), free.logderiv + dia / ia)


def cusp_f_gc_separated(spec: CuspSpec, r: float) -> CuspValue:
    """Separated GC forms with sL = β_α: b √(2/(2−α)) r_s^½ J_{ν₀}(y) (attractive) or I_{ν₀}(y) (repulsive)."""
    if spec.family != CuspFamily.gc:
        raise DomainError(f"cusp_f_gc_separated needs a GC class, got {spec.short_range.tag}")
    r = _check_radius(r)
    alpha, nu, beta = spec.alpha, spec.nu0, spec.beta_alpha
    rs = r / beta
    y = 2.0 / (2.0 - alpha) * rs ** ((2.0 - alpha) / 2.0)
    dy = rs ** (-alpha / 2.0)
    prefactor = spec.b_l * math.sqrt(2.0 / (2.0 - alpha))
    if spec.strength < 0.0:
        bessel, dbessel = specialfn.bessel_j(nu, y), specialfn.bessel_j_prime(nu, y)
        log_bessel = math.log(abs(bessel))
    else:
        scaled = specialfn.bessel_i_scaled(nu, y)
        bessel, dbessel = scaled, specialfn.bessel_i_scaled_prime(nu, y)
        log_bessel = math.log(scaled) + y
    logderiv = (0.5 / rs + dbessel / bessel * dy) / beta
    log_abs = math.log(prefactor) + 0.5 * math.log(rs) + log_bessel
    return CuspValue.from_log(math.copysign(1.0, bessel), log_abs, logderiv)


def cusp_f_alcd(l: int, r: float, gamma2: float, free_scale: float = 1.0) -> CuspValue:
    """Free form evaluated at the transformed partial wave ℓ_t.

    Raises:
        DomainError: for γ₂ ≤ −¼.
    """
    if gamma2 <= -0.25:
        raise DomainError(f"alCD cusp functions need gamma2 > -1/4, got {gamma2}")
    return _free_power(transformed_l(l, gamma2), _check_radius(r), free_scale)


def _rvdw_variables(spec: CuspSpec, r: float):
    alpha, beta = spec.alpha, spec.beta_alpha
    rs = r / beta
    y = 2.0 * rs ** (-(alpha - 2.0) / 2.0) / (alpha - 2.0)
    dy = -rs ** (-alpha / 2.0)
    return alpha, beta, rs, y, dy


def cusp_f_rvdw(spec: CuspSpec, r: float) -> CuspValue:
    """f = (2/π)(α−2)^{−½} r_s^½ K_{ν₀}(y), y = 2 r_s^{−(α−2)/2}/(α−2), evaluated in log form."""
    if spec.family != CuspFamily.rvdw:
        raise DomainError(f"cusp_f_rvdw needs an rVdW class, got {spec.short_range.tag}")
    alpha, beta, rs, y, dy = _rvdw_variables(spec, _check_radius(r))
    kve = specialfn.bessel_k_scaled(spec.nu0, y)
    dkve = specialfn.bessel_k_scaled_prime(spec.nu0, y)
    log_abs = math.log(TWO_OVER_PI) - 0.5 * math.log(alpha - 2.0) + 0.5 * math.log(rs) + math.log(kve) - y
    logderiv = (0.5 / rs + dkve / kve * dy) / beta
    return CuspValue.from_log(1.0, log_abs, logderiv)


def cusp_value(spec: CuspSpec, r: float) -> CuspValue:
    """Analytic single-term cusp function f^cp for the family of `spec`."""
    family = spec.family
    if family == CuspFamily.free:
        return cusp_f_free(spec.l, r, spec.free_scale)
    if family == CuspFamily.gc:
        return cusp_f_gc(spec, r)
    if family == CuspFamily.alcd:
        return _free_power(spec.lt, _check_radius(r), spec.free_scale)
    return cusp_f_rvdw(spec, r)


def strict_cusp(spec: CuspSpec, r: float) -> CuspValue:
    """Strict cusp function F^cp.

    F and GC share the free power law (sL of the spec), alCD uses it at ℓ_t and
    rVdW uses H = π^{−½} r_s^{α/4} exp(−2 r_s^{−(α−2)/2}/(α−2)), independent of ℓ.
    """
    r = _check_radius(r)
    family = spec.family
    if family == CuspFamily.rvdw:
        alpha, beta, rs, y, _ = _rvdw_variables(spec, r)
        log_abs = -0.5 * math.log(math.pi) + 0.25 * alpha * math.log(rs) - y
        logderiv = (0.25 * alpha / rs + rs ** (-alpha / 2.0)) / beta
        return CuspValue.from_log(1.0, log_abs, logderiv)
    return _free_power(spec.effective_l, r, spec.free_scale)


def _irregular_power(l: float, r: float, free_scale: float) -> CuspValue:
    x = r / free_scale
    log_abs = (l + 0.5) * math.log(2.0) + special.gammaln(l + 0.5) - math.log(math.pi) - l * math.log(x)
    return CuspValue.from_log(-1.0, log_abs, -l / r)


def irregular_g(spec: CuspSpec, r: float) -> CuspValue:
    """Irregular companion g^cp with W(f^cp, g^cp) = 2/π in the natural variable.

    F/alCD: −2^{ℓ+½}Γ(ℓ+½)/π (r/sL)^{−ℓ}; attractive GC: (1/b)√(2/(2−α)) r_s^½ Y_{ν₀}(y);
    repulsive GC: −(1/b)(2/π)√(2/(2−α)) r_s^½ K_{ν₀}(y);
    rVdW: −(2/√(α−2)) r_s^½ ½[I_{ν₀}(y) + I_{−ν₀}(y)] (carried scaled at large y).
    """
    r = _check_radius(r)
    family = spec.family
    if family in (CuspFamily.free, CuspFamily.alcd):
        return _irregular_power(spec.effective_l, r, spec.free_scale)
    nu = spec.nu0
    if family == CuspFamily.gc:
        alpha, beta = spec.alpha, spec.beta_alpha
        rs = r / beta
        y = 2.0 / (2.0 - alpha) * rs ** ((2.0 - alpha) / 2.0)
        dy = rs ** (-alpha / 2.0)
        log_prefactor = math.log(math.sqrt(2.0 / (2.0 - alpha)) / spec.b_l) + 0.5 * math.log(rs)
        if spec.strength < 0.0:
            bessel = specialfn.bessel_y(nu, y)
            logderiv = (0.5 / rs + specialfn.bessel_y_prime(nu, y) / bessel * dy) / beta
            return CuspValue.from_log(math.copysign(1.0, bessel), log_prefactor + math.log(abs(bessel)), logderiv)
        kve = specialfn.bessel_k_scaled(nu, y)
        logderiv = (0.5 / rs + specialfn.bessel_k_scaled_prime(nu, y) / kve * dy) / beta
        return CuspValue.from_log(-1.0, log_prefactor + math.log(TWO_OVER_PI) + math.log(kve) - y, logderiv)
    alpha, beta, rs, y, dy = _rvdw_variables(spec, r)
    sym = specialfn.bessel_i_sym_scaled(nu, y)
    dsym = specialfn.bessel_i_sym_scaled_prime(nu, y)
    log_abs = math.log(2.0 / math.sqrt(alpha - 2.0)) + 0.5 * math.log(rs) + math.log(sym) + y
    logderiv = (0.5 / rs + dsym / sym * dy) / beta
    return CuspValue.from_log(-1.0, log_abs, logderiv)


def wronskian_check(spec: CuspSpec, r: float) -> float:
    """W(f^cp, g^cp) = f g′ − f′ g in the natural scaled variable; equals 2/π.

    GC regular functions are taken with sL = β_α so that the separated and
    combined normalizations coincide.
    """
    r = _check_radius(r)
    if spec.family == CuspFamily.gc:
        f = cusp_f_gc(spec.model_copy(update={"free_scale": spec.beta_alpha}), r)
    else:
        f = cusp_value(spec, r)
    g = irregular_g(spec, r)
    log_product = f.log_abs + g.log_abs
    return f.sign * g.sign * math.exp(log_product) * (g.logderiv - f.logderiv) * spec.natural_scale


def gc_series_coefficients(spec: CuspSpec, n_terms: int = 4) -> List[float]:
    """Coefficients a_j of I^a_{ν₀}(z) = Σ a_j z^j: 1, 1/(ν₀+1), 1/(2(ν₀+1)(ν₀+2)), ..."""
    if spec.family != CuspFamily.gc:
        raise DomainError(f"series coefficients exist for GC classes only, got {spec.short_range.tag}")
    if n_terms < 1:
        raise DomainError(f"n_terms must be at least 1, got {n_terms}")
    coefficients = [1.0]
    for j in range(1, n_terms):
        coefficients.append(coefficients[-1] / (j * (spec.nu0 + j)))
    return coefficients


def strict_deviation(spec: CuspSpec, r: float) -> float:
    """Leading relative deviation of f^cp from F^cp at r: z/(ν₀+1) for GC, (4ν₀²−1)/(8y) for rVdW, 0 otherwise."""
    r = _check_radius(r)
    if spec.family == CuspFamily.gc:
        z = spec.strength * r ** (2.0 - spec.alpha) / (2.0 - spec.alpha) ** 2
        return z / (spec.nu0 + 1.0)
    if spec.family == CuspFamily.rvdw:
        _, _, _, y, _ = _rvdw_variables(spec, r)
        return (4.0 * spec.nu0 ** 2 - 1.0) / (8.0 * y)
    return 0.0
