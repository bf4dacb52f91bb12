"""
Pair potentials and their short-range classification.

Units are scaled so that ħ²/2μ = 1: every strength is the user-supplied
2μG/ħ², energies are in the same inverse-length-squared units.
"""
import math
from typing import Dict, List, Optional, Tuple, Union

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, PrivateAttr, field_validator, model_validator
from scipy.interpolate import CubicSpline

from cuspkit.data_classes import CuspFamily, ShortRangeTag
from cuspkit.errors import (
    ClassificationAmbiguous,
    DifferentiationFailure,
    DomainError,
    OutOfTableRange,
)
from cuspkit.log_bus import CuspLogBus

ArrayLike = Union[float, np.ndarray]

NPCD_THRESHOLD = -0.25
ALIMTS_THRESHOLD = 0.9
ALIMTS_RADIUS = 0.1
LEADING_FIT_MIN_R2 = 0.999
BOUNDED_POWER_TOLERANCE = 1e-6
SPLINE_EDGE_KNOTS = 2


class PowerTerm(BaseModel):
    """Signed power-law term v(r) = G̃/r^α."""
    model_config = ConfigDict(frozen=True, extra="forbid")

    strength: float = Field(..., description="Signed scaled strength G̃ = 2μG/ħ²", examples=[-2.0, 1.0])
    exponent: float = Field(..., description="Power α of 1/r^α", examples=[1.0, 6.0])

    @field_validator("strength")
    @classmethod
    def _nonzero(cls, value: float) -> float:
        if value == 0.0 or not math.isfinite(value):
            raise ValueError("power term strength must be finite and non-zero")
        return value

    @field_validator("exponent")
    @classmethod
    def _finite(cls, value: float) -> float:
        if not math.isfinite(value):
            raise ValueError("power term exponent must be finite")
        return value

    @property
    def diverges(self) -> bool:
        return self.exponent > 0.0

    def value(self, r: ArrayLike) -> ArrayLike:
        return self.strength * np.power(r, -self.exponent)

    def derivative(self, r: ArrayLike, order: int = 1) -> ArrayLike:
        a = self.exponent
        if order == 0:
            return self.value(r)
        if order == 1:
            return -a * self.strength * np.power(r, -a - 1.0)
        if order == 2:
            return a * (a + 1.0) * self.strength * np.power(r, -a - 2.0)
        raise DomainError(f"power term derivatives are provided up to order 2, got {order}")


class YukawaTerm(BaseModel):
    """Screened term v(r) = G̃ e^{−r/β_Y}/r."""
    model_config = ConfigDict(frozen=True, extra="forbid")

    strength: float = Field(..., description="Signed scaled strength G̃_Y", examples=[1.0, -3.0])
    range: float = Field(..., gt=0.0, description="Screening length β_Y", examples=[1.0, 0.7])

    def value(self, r: ArrayLike) -> ArrayLike:
        return self.strength * np.exp(-np.asarray(r) / self.range) / r

    def derivative(self, r: ArrayLike, order: int = 1) -> ArrayLike:
        v = self.value(r)
        rate = 1.0 / self.range + 1.0 / np.asarray(r)
        if order == 0:
            return v
        if order == 1:
            return -v * rate
        if order == 2:
            return v * (rate ** 2 + 1.0 / np.asarray(r) ** 2)
        raise DomainError(f"Yukawa derivatives are provided up to order 2, got {order}")


class TabulatedPotential(BaseModel):
    """Radial table (r_k, v_k) interpolated by a natural cubic spline."""
    model_config = ConfigDict(frozen=True, extra="forbid")

    r: List[float] = Field(..., min_length=4, description="Strictly increasing radii (> 0)")
    v: List[float] = Field(..., min_length=4, description="Potential values at r")

    _spline: Optional[CubicSpline] = PrivateAttr(default=None)

    @model_validator(mode="after")
    def _check_table(self) -> "TabulatedPotential":
        r = np.asarray(self.r, dtype=float)
        v = np.asarray(self.v, dtype=float)
        if r.shape != v.shape:
            raise ValueError("tabulated r and v must have the same length")
        if not np.all(np.isfinite(r)) or not np.all(np.isfinite(v)):
            raise ValueError("tabulated values must be finite")
        if r[0] <= 0.0 or np.any(np.diff(r) <= 0.0):
            raise ValueError("tabulated radii must be positive and strictly increasing")
        return self

    def model_post_init(self, __context) -> None:
        super().model_post_init(__context)
        self._spline = CubicSpline(np.asarray(self.r), np.asarray(self.v), bc_type="natural")

    @property
    def r_first(self) -> float:
        return self.r[0]

    @property
    def r_last(self) -> float:
        return self.r[-1]

    def leading_power(self) -> Tuple[float, float, float]:
        """Fit v ≈ c/r^α over the three smallest radii.

        Returns:
            (alpha, strength, r_squared) of the least-squares line log|v| vs log r.

        Raises:
            ClassificationAmbiguous: if the three values change sign or vanish.
        """
        r = np.asarray(self.r[:3])
        v = np.asarray(self.v[:3])
        if np.any(v == 0.0) or not (np.all(v > 0.0) or np.all(v < 0.0)):
            raise ClassificationAmbiguous("leading power fit needs three same-signed non-zero values")
        x, y = np.log(r), np.log(np.abs(v))
        slope, intercept = np.polyfit(x, y, 1)
        residual = y - (slope * x + intercept)
        ss_tot = float(np.sum((y - y.mean()) ** 2))
        r_squared = 1.0 if ss_tot == 0.0 else 1.0 - float(np.sum(residual ** 2)) / ss_tot
        return -float(slope), float(np.sign(v[0]) * math.exp(intercept)), r_squared

    def value(self, r: ArrayLike, extrapolate: bool = False) -> ArrayLike:
        """Spline value; below the table the leading power law is used when ``extrapolate``."""
        r_arr = np.asarray(r, dtype=float)
        if np.any(r_arr > self.r_last) or (not extrapolate and np.any(r_arr < self.r_first)):
            raise OutOfTableRange(
                f"radius outside tabulated range [{self.r_first}, {self.r_last}]"
            )
        inside = np.asarray(self._spline(np.clip(r_arr, self.r_first, self.r_last)))
        if extrapolate and np.any(r_arr < self.r_first):
            alpha, strength, _ = self.leading_power()
            below = strength * np.power(np.where(r_arr < self.r_first, r_arr, self.r_first), -alpha)
            inside = np.where(r_arr < self.r_first, below, inside)
        return float(inside) if np.ndim(inside) == 0 else inside

    def derivative(self, r: ArrayLike, order: int = 1) -> ArrayLike:
        """Spline derivative, refused within two knots of either table edge."""
        r_arr = np.asarray(r, dtype=float)
        lo, hi = self.r[SPLINE_EDGE_KNOTS], self.r[-1 - SPLINE_EDGE_KNOTS]
        if np.any(r_arr < lo) or np.any(r_arr > hi):
            raise DifferentiationFailure(
                f"spline derivatives are only trusted on [{lo}, {hi}]"
            )
        result = np.asarray(self._spline(r_arr, order))
        return float(result) if np.ndim(result) == 0 else result


class PotentialModel(BaseModel):
    """
    A pair potential: signed power-law terms plus optional Yukawa and tabulated parts.

    A model without components is the free particle.
    """
    model_config = ConfigDict(frozen=True, extra="forbid")

    name: Optional[str] = Field(default=None, description="Optional label used in reports", examples=["coulomb"])
    terms: List[PowerTerm] = Field(default_factory=list, description="Power-law terms G̃/r^α")
    yukawa: Optional[YukawaTerm] = Field(default=None, description="Screened Yukawa part")
    tabulated: Optional[TabulatedPotential] = Field(default=None, description="Tabulated radial part")

    @classmethod
    def free(cls) -> "PotentialModel":
        return cls(name="free")

    @classmethod
    def power(cls, strength: float, exponent: float, name: Optional[str] = None) -> "PotentialModel":
        return cls(name=name, terms=[PowerTerm(strength=strength, exponent=exponent)])

    @property
    def is_free(self) -> bool:
        return not self.terms and self.yukawa is None and self.tabulated is None

    @property
    def component_count(self) -> int:
        return len(self.terms) + (self.yukawa is not None) + (self.tabulated is not None)

    @property
    def is_single_power(self) -> bool:
        """True for the free model and for a single power term (analytic cusp pair exists)."""
        return self.is_free or (len(self.terms) == 1 and self.component_count == 1)

    def components(self, r: ArrayLike, extrapolate: bool = False) -> List[ArrayLike]:
        """Values of every component at r, in the order terms, yukawa, tabulated."""
        values: List[ArrayLike] = [term.value(r) for term in self.terms]
        if self.yukawa is not None:
            values.append(self.yukawa.value(r))
        if self.tabulated is not None:
            values.append(self.tabulated.value(r, extrapolate=extrapolate))
        return values

    def evaluate(self, r: ArrayLike, extrapolate: bool = False) -> ArrayLike:
        """Sum of all components at r > 0.

        Raises:
            DomainError: for r ≤ 0.
            OutOfTableRange: outside the tabulated range (below it only without ``extrapolate``).
        """
        r_arr = np.asarray(r, dtype=float)
        if np.any(r_arr <= 0.0):
            raise DomainError("potential is evaluated at r > 0 only")
        total = np.zeros_like(r_arr)
        for value in self.components(r_arr, extrapolate=extrapolate):
            total = total + value
        return float(total) if np.ndim(total) == 0 else total

    def derivative(self, r: ArrayLike, order: int = 1) -> ArrayLike:
        """d^order v/dr^order (order 0, 1 or 2)."""
        r_arr = np.asarray(r, dtype=float)
        total = np.zeros_like(r_arr)
        for term in self.terms:
            total = total + term.derivative(r_arr, order)
        if self.yukawa is not None:
            total = total + self.yukawa.derivative(r_arr, order)
        if self.tabulated is not None:
            total = total + (self.tabulated.value(r_arr) if order == 0 else self.tabulated.derivative(r_arr, order))
        return float(total) if np.ndim(total) == 0 else total

    def scaled(self, factor: float) -> "PotentialModel":
        """Same model with every strength (and tabulated value) multiplied by ``factor``."""
        return PotentialModel(
            name=self.name,
            terms=[PowerTerm(strength=t.strength * factor, exponent=t.exponent) for t in self.terms],
            yukawa=None if self.yukawa is None else YukawaTerm(
                strength=self.yukawa.strength * factor, range=self.yukawa.range),
            tabulated=None if self.tabulated is None else TabulatedPotential(
                r=list(self.tabulated.r), v=[x * factor for x in self.tabulated.v]),
        )


class ShortRangeClass(BaseModel):
    """Classification of a potential at the coalescence point."""
    model_config = ConfigDict(frozen=True, extra="forbid")

    tag: ShortRangeTag = Field(..., description="Short-range class", examples=["SR-GC", "SR-rVdW"])
    dominant_alpha: float = Field(..., description="Exponent of the dominant term at r -> 0")
    dominant_strength: float = Field(..., description="Signed scaled strength of the dominant term")
    gamma2: Optional[float] = Field(default=None, description="Dimensionless 1/r^2 strength (alpha = 2 only)")
    beta_alpha: Optional[float] = Field(default=None, gt=0.0, description="Length scale of the dominant term")
    lt: Optional[float] = Field(default=None, description="Transformed partial wave (alCD), set per l")
    l: Optional[int] = Field(default=None, ge=0, description="Partial wave this class was specialised to")
    dominant_fraction: float = Field(default=1.0, ge=0.0, le=1.0,
                                     description="Share of |v| carried by the dominant term at the alImtS test radius")
    single_term: bool = Field(default=True, description="The model is exactly its dominant term")

    @model_validator(mode="after")
    def _consistent(self) -> "ShortRangeClass":
        needs_beta = self.dominant_alpha != 2.0 and self.tag != ShortRangeTag.free
        if needs_beta != (self.beta_alpha is not None):
            raise ValueError("beta_alpha is present exactly when alpha != 2 and the class is not F")
        return self

    @property
    def is_physical(self) -> bool:
        return ShortRangeTag(self.tag).is_physical

    @property
    def family(self) -> CuspFamily:
        if self.tag == ShortRangeTag.free:
            return CuspFamily.free
        if self.dominant_alpha < 2.0:
            return CuspFamily.gc
        if self.dominant_alpha == 2.0:
            return CuspFamily.alcd
        return CuspFamily.rvdw

    @property
    def energy_scale(self) -> float:
        """s_E = 1/β² (1 for classes without a length scale)."""
        return energy_scale(self.beta_alpha) if self.beta_alpha is not None else 1.0

    def for_l(self, l: int) -> "ShortRangeClass":
        """Copy specialised to partial wave ``l`` (fills ``lt`` for 1/r^2 classes)."""
        lt = transformed_l(l, self.gamma2) if self.gamma2 is not None else None
        return self.model_copy(update={"l": l, "lt": lt})


def evaluate(model: PotentialModel, r: ArrayLike) -> ArrayLike:
    """v(r) for a potential model (see :meth:`PotentialModel.evaluate`)."""
    return model.evaluate(r)


def length_scale(alpha: float, scaled_strength: float) -> float:
    """β_α = (2μD/ħ²)^{1/(α−2)}.

    Raises:
        DomainError: at α = 2 or for non-positive strength.
    """
    if alpha == 2.0:
        raise DomainError("a 1/r^2 term has no length scale")
    if scaled_strength <= 0.0 or not math.isfinite(scaled_strength):
        raise DomainError(f"length scale needs a positive strength, got {scaled_strength}")
    return scaled_strength ** (1.0 / (alpha - 2.0))


def energy_scale(beta_alpha: float) -> float:
    """s_E = 1/β² in scaled units."""
    if beta_alpha <= 0.0:
        raise DomainError(f"energy scale needs beta > 0, got {beta_alpha}")
    return 1.0 / beta_alpha ** 2


def transformed_l(l: int, gamma2: float) -> float:
    """ℓ_t = √((ℓ+½)² + γ₂) − ½.

    Raises:
        DomainError: when (ℓ+½)² + γ₂ ≤ 0 (no real transformed partial wave).
    """
    radicand = (l + 0.5) ** 2 + gamma2
    if radicand <= 0.0:
        raise DomainError(f"(l+1/2)^2 + gamma2 must be positive, got {radicand} for l={l}")
    return math.sqrt(radicand) - 0.5


def _divergent_parts(model: PotentialModel) -> Dict[float, float]:
    parts: Dict[float, float] = {}
    for term in model.terms:
        if term.diverges:
            parts[term.exponent] = parts.get(term.exponent, 0.0) + term.strength
    if model.yukawa is not None:
        parts[1.0] = parts.get(1.0, 0.0) + model.yukawa.strength
    if model.tabulated is not None:
        alpha, strength, r_squared = model.tabulated.leading_power()
        if r_squared < LEADING_FIT_MIN_R2:
            raise ClassificationAmbiguous(
                f"tabulated leading power fit has R^2 = {r_squared:.6f} < {LEADING_FIT_MIN_R2}"
            )
        if alpha > BOUNDED_POWER_TOLERANCE:
            parts[alpha] = parts.get(alpha, 0.0) + strength
    return {alpha: strength for alpha, strength in parts.items() if strength != 0.0}


def _bounded_dominant(model: PotentialModel) -> Optional[Tuple[float, float]]:
    grouped: Dict[float, float] = {}
    for term in model.terms:
        if not term.diverges:
            grouped[term.exponent] = grouped.get(term.exponent, 0.0) + term.strength
    if model.tabulated is not None:
        grouped[0.0] = grouped.get(0.0, 0.0) + model.tabulated.v[0]
    grouped = {alpha: strength for alpha, strength in grouped.items() if strength != 0.0}
    if not grouped:
        return None
    alpha = max(grouped)
    return alpha, grouped[alpha]


def classify(model: PotentialModel,
             threshold: float = ALIMTS_THRESHOLD,
             r0: Optional[float] = None) -> ShortRangeClass:
    """Classify the short-range behaviour of a potential.

    The dominant component is the one with the largest exponent among those diverging at
    r -> 0 (Yukawa counts as α = 1, tables contribute their fitted leading power). When more
    than one component diverges the dominant one must carry at least ``threshold`` of Σ|v_k|
    at r0, otherwise the model is SR-alImtS. The default r0 is 0.1 in scaled length units and does
    not depend on any strength, so multiplying every strength by c > 0 keeps the tag. A radius
    beyond the last tabulated radius is moved onto it.

    Raises:
        ClassificationAmbiguous: when a tabulated leading-power fit has R² < 0.999.
    """
    source = "potential.classify"
    if model.is_free:
        return ShortRangeClass(tag=ShortRangeTag.free, dominant_alpha=0.0, dominant_strength=0.0)

    divergent = _divergent_parts(model)
    if not divergent:
        bounded = _bounded_dominant(model)
        if bounded is None:
            return ShortRangeClass(tag=ShortRangeTag.free, dominant_alpha=0.0, dominant_strength=0.0,
                                   single_term=model.is_single_power)
        alpha, strength = bounded
        return ShortRangeClass(tag=ShortRangeTag.gc, dominant_alpha=alpha, dominant_strength=strength,
                               beta_alpha=length_scale(alpha, abs(strength)),
                               single_term=model.is_single_power)

    alpha = max(divergent)
    strength = divergent[alpha]
    gamma2: Optional[float] = None
    beta: Optional[float] = None
    if alpha < 2.0:
        tag = ShortRangeTag.gc
    elif alpha == 2.0:
        gamma2 = strength
        tag = ShortRangeTag.alcd if gamma2 > NPCD_THRESHOLD else ShortRangeTag.npcd
    else:
        tag = ShortRangeTag.rvdw if strength > 0.0 else ShortRangeTag.avdw
    if alpha != 2.0:
        beta = length_scale(alpha, abs(strength))

    fraction = 1.0
    if len(divergent) > 1 and tag.is_physical:
        r_check = r0 if r0 is not None else ALIMTS_RADIUS
        if model.tabulated is not None:
            r_check = min(r_check, model.tabulated.r_last)
        dominant_value = abs(strength) * r_check ** (-alpha)
        total = sum(float(np.abs(value)) for value in model.components(r_check, extrapolate=True))
        fraction = min(1.0, dominant_value / total) if total > 0.0 else 1.0
        if fraction < threshold:
            tag = ShortRangeTag.alimts

    CuspLogBus.debug(
        f"classified potential as {tag}",
        source=source,
        action="potential.classify",
        tag=str(tag), dominant_alpha=alpha, dominant_strength=strength, dominant_fraction=fraction,
    )
    return ShortRangeClass(
        tag=tag,
        dominant_alpha=alpha,
        dominant_strength=strength,
        gamma2=gamma2,
        beta_alpha=beta,
        dominant_fraction=fraction,
        single_term=model.is_single_power,
    )


def reference_suite() -> Dict[str, PotentialModel]:
    """Ten power-law models covering every cusp family, swept by the rigidity identity tests."""
    return {
        "free": PotentialModel.free(),
        "coulomb_attractive": PotentialModel.power(-2.0, 1.0, name="coulomb_attractive"),
        "coulomb_repulsive": PotentialModel.power(2.0, 1.0, name="coulomb_repulsive"),
        "constant": PotentialModel.power(-1.0, 0.0, name="constant"),
        "linear": PotentialModel.power(1.0, -1.0, name="linear"),
        "alcd": PotentialModel.power(0.75, 2.0, name="alcd"),
        "alcd_attractive": PotentialModel.power(-0.2, 2.0, name="alcd_attractive"),
        "rvdw3": PotentialModel.power(1.0, 3.0, name="rvdw3"),
        "rvdw4": PotentialModel.power(1.0, 4.0, name="rvdw4"),
        "rvdw6": PotentialModel.power(1.0, 6.0, name="rvdw6"),
    }
