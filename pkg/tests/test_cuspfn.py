import math

import pytest

from cuspkit.cuspfn import (
    CuspSpec,
    CuspValue,
    cusp_f_alcd,
    cusp_f_free,
    cusp_f_gc,
    cusp_f_gc_separated,
    cusp_f_rvdw,
    cusp_value,
    gc_series_coefficients,
    irregular_g,
    strict_cusp,
    strict_deviation,
    wronskian_check,
)
from cuspkit.data_classes import CuspFamily
from cuspkit.errors import DomainError, NonphysicalPotential
from cuspkit.potential import PotentialModel, classify

TWO_OVER_PI = 2.0 / math.pi


def spec_for(strength: float, exponent: float, l: int = 0, free_scale: float = 1.0) -> CuspSpec:
    return CuspSpec.from_class(classify(PotentialModel.power(strength, exponent)), l, free_scale=free_scale)


def test_free_cusp_function():
    assert cusp_f_free(0, 1.0).value == pytest.approx(math.sqrt(2 / math.pi), rel=1e-14)
    assert cusp_f_free(0, 1.0).df == pytest.approx(math.sqrt(2 / math.pi), rel=1e-14)
    assert cusp_f_free(1, 1.0).value == pytest.approx(math.sqrt(2 / math.pi) / 3, rel=1e-14)
    assert cusp_f_free(0, 2.0, free_scale=2.0).value == pytest.approx(math.sqrt(2 / math.pi), rel=1e-14)
    with pytest.raises(DomainError):
        cusp_f_free(0, 0.0)
    with pytest.raises(DomainError):
        cusp_f_free(0, 1.0, free_scale=0.0)


def test_free_spec_from_empty_model():
    spec = CuspSpec.from_class(classify(PotentialModel.free()), 2)
    assert spec.family == CuspFamily.free
    assert spec.natural_scale == 1.0
    assert cusp_value(spec, 0.3).value == pytest.approx(cusp_f_free(2, 0.3).value)


def test_rvdw_alpha4_closed_form():
    spec = spec_for(1.0, 4.0)
    assert spec.nu0 == pytest.approx(0.5)
    f = cusp_f_rvdw(spec, 0.25)
    assert f.value == pytest.approx(0.25 * math.exp(-4.0) / math.sqrt(math.pi), rel=1e-10)
    assert f.value == pytest.approx(0.0025834, rel=1e-4)
    # for alpha = 4 the strict function is exact
    assert strict_cusp(spec, 0.25).value == pytest.approx(f.value, rel=1e-12)
    assert strict_deviation(spec, 0.25) == 0.0


def test_rvdw_tiny_values_carry_log_offset():
    spec = spec_for(1.0, 6.0)
    f = cusp_f_rvdw(spec, 0.01)
    assert f.underflow_scaled
    assert f.log_abs == pytest.approx(strict_cusp(spec, 0.01).log_abs, abs=1e-3)
    assert f.logderiv > 0.0


@pytest.mark.parametrize("exponent", [4.0, 6.0])
@pytest.mark.parametrize("l", [1, 2])
def test_rvdw_cusp_forgets_partial_wave(exponent, l):
    s_wave, higher = spec_for(1.0, exponent, 0), spec_for(1.0, exponent, l)
    gaps = []
    for rs in (0.3, 0.1, 0.03, 0.01):
        r = rs * s_wave.beta_alpha
        gaps.append(math.exp(cusp_value(higher, r).log_abs - cusp_value(s_wave, r).log_abs) - 1.0)
    assert all(gap > 0.0 for gap in gaps)
    assert gaps == sorted(gaps, reverse=True)
    if exponent == 6.0:
        # K_ν(y)/K_{ν₀}(y) − 1 → (ν² − ν₀²)/(2y), y = r_s^{−2}/2
        y = 0.5 / 0.01 ** 2
        assert gaps[-1] == pytest.approx((higher.nu0 ** 2 - s_wave.nu0 ** 2) / (2.0 * y), rel=0.05)
        assert gaps[-1] < 1e-3


def test_alcd_cusp_function():
    assert cusp_f_alcd(0, 1.0, 0.75).value == pytest.approx(0.5, rel=1e-14)
    assert cusp_f_alcd(0, 4.0, 0.75).value == pytest.approx(4.0, rel=1e-14)
    assert cusp_value(spec_for(0.75, 2.0), 1.0).value == pytest.approx(0.5, rel=1e-14)
    with pytest.raises(DomainError):
        cusp_f_alcd(0, 1.0, -0.3)


def test_nonphysical_specs_rejected():
    with pytest.raises(NonphysicalPotential):
        spec_for(-1.0, 6.0)
    with pytest.raises(NonphysicalPotential):
        spec_for(-0.3, 2.0)


@pytest.mark.parametrize("strength, exponent", [(-2.0, 1.0), (2.0, 1.0), (-1.0, 0.0), (1.0, -1.0), (-0.5, 1.5)])
@pytest.mark.parametrize("l", [0, 1, 2])
def test_gc_combined_matches_separated(strength, exponent, l):
    spec = spec_for(strength, exponent, l)
    natural = spec.model_copy(update={"free_scale": spec.beta_alpha})
    for rs in (1e-3, 1e-2, 0.1, 0.5, 1.0, 2.0, 5.0, 10.0):
        r = rs * spec.beta_alpha
        combined = cusp_f_gc(natural, r)
        separated = cusp_f_gc_separated(spec, r)
        assert combined.value == pytest.approx(separated.value, rel=1e-10)
        assert combined.df == pytest.approx(separated.df, rel=1e-8, abs=1e-12)


WRONSKIAN_MODELS = [
    (None, None),
    (-2.0, 1.0),
    (2.0, 1.0),
    (-1.0, 0.0),
    (1.0, -1.0),
    (0.75, 2.0),
    (-0.2, 2.0),
    (1.0, 3.0),
    (1.0, 4.0),
    (1.0, 6.0),
]


@pytest.mark.parametrize("strength, exponent", WRONSKIAN_MODELS)
@pytest.mark.parametrize("rs", [0.1, 0.5, 1.0, 2.0, 5.0])
def test_wronskian_is_two_over_pi(strength, exponent, rs):
    model = PotentialModel.free() if strength is None else PotentialModel.power(strength, exponent)
    for l in (0, 1):
        spec = CuspSpec.from_class(classify(model), l)
        r = rs * spec.natural_scale
        assert wronskian_check(spec, r) == pytest.approx(TWO_OVER_PI, rel=1e-8)


def test_irregular_free_companion():
    g = irregular_g(CuspSpec.from_class(classify(PotentialModel.free()), 0), 0.7)
    assert g.value == pytest.approx(-math.sqrt(2 / math.pi), rel=1e-14)
    assert g.df == 0.0


def test_coulomb_strict_limit():
    spec = spec_for(-2.0, 1.0)
    r = 1e-4 * spec.beta_alpha
    deviation = strict_deviation(spec, r)
    assert abs(deviation) < 1e-4
    ratio = cusp_value(spec, r).value / strict_cusp(spec, r).value
    assert ratio - 1.0 == pytest.approx(deviation, abs=2e-9)
    # deviation shrinks towards coalescence
    deviations = [abs(strict_deviation(spec, x * spec.beta_alpha)) for x in (1e-1, 1e-2, 1e-3, 1e-4)]
    assert deviations == sorted(deviations, reverse=True)


def test_rvdw6_strict_limit():
    spec = spec_for(1.0, 6.0)
    r = 0.02 * spec.beta_alpha
    deviation = strict_deviation(spec, r)
    assert abs(deviation) < 1e-4
    ratio = math.exp(cusp_value(spec, r).log_abs - strict_cusp(spec, r).log_abs)
    assert ratio - 1.0 == pytest.approx(deviation, abs=1e-7)


def test_gc_series_coefficients():
    spec = spec_for(-2.0, 1.0)
    assert spec.nu0 == pytest.approx(1.0)
    assert gc_series_coefficients(spec, 3) == pytest.approx([1.0, 0.5, 1.0 / 12.0])
    with pytest.raises(DomainError):
        gc_series_coefficients(spec_for(1.0, 6.0))


def test_gc_combined_form_smooth_through_zero_strength():
    spec = spec_for(-2.0, 1.0)
    r, h = 0.8, 1e-4
    plus = cusp_f_gc(spec, r, signed_strength=h).value
    minus = cusp_f_gc(spec, r, signed_strength=-h).value
    derivative = (plus - minus) / (2.0 * h)
    free = cusp_f_free(0, r).value
    expected = free * r * gc_series_coefficients(spec, 2)[1]
    assert derivative == pytest.approx(expected, rel=1e-6)
    assert cusp_f_gc(spec, r, signed_strength=0.0).value == pytest.approx(free, rel=1e-15)


def test_rvdw_singular_as_strength_vanishes():
    values = []
    for exponent in range(2, 9, 2):
        spec = spec_for(10.0 ** -exponent, 6.0)
        values.append(cusp_f_rvdw(spec, 1.0).log_abs)
    assert all(b > a for a, b in zip(values, values[1:]))


def test_cusp_value_from_log():
    plain = CuspValue.from_log(-1.0, math.log(2.0), 3.0)
    assert plain.value == pytest.approx(-2.0)
    assert plain.df == pytest.approx(-6.0)
    scaled = CuspValue.from_log(1.0, -1000.0, 2.0)
    assert scaled.underflow_scaled
    assert scaled.log_abs == pytest.approx(-1000.0)
    assert scaled.logderiv == pytest.approx(2.0)
    assert scaled.value == 0.0
