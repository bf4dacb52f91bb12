import math

import numpy as np
import pytest
from scipy.optimize import brentq

from cuspkit.errors import DomainError
from cuspkit.potential import PotentialModel, reference_suite
from cuspkit.radial import solve_regular
from cuspkit.rigidity import (
    cross_energy_overlap,
    monotonicity_scan,
    overlap_integral,
    probability_integral,
    rigidity_at,
    rigidity_profile,
    verify_fundamental,
)

TWO_OVER_PI = 2.0 / math.pi


@pytest.fixture(scope="module")
def free_zero():
    return solve_regular(PotentialModel.free(), 0, 0.0, r_max=3.0)


def test_free_zero_energy_rigidity(free_zero):
    # u = √(2/π) r, so P(r) = (2/π) r³/3 and 𝒢(1) = 3π/2
    assert rigidity_at(free_zero, 1.0) == pytest.approx(1.5 * math.pi, rel=1e-9)
    assert probability_integral(free_zero, 2.5) == pytest.approx(TWO_OVER_PI * 2.5 ** 3 / 3.0, rel=1e-9)


def test_free_p_wave_probability():
    sol = solve_regular(PotentialModel.free(), 1, 0.0, r_max=2.0)
    assert probability_integral(sol, 1.0) == pytest.approx(TWO_OVER_PI / 45.0, rel=1e-9)


@pytest.mark.parametrize("r", [0.37, 1.3, 2.9])
def test_free_positive_energy_probability(r):
    sol = solve_regular(PotentialModel.free(), 0, 1.0, r_max=3.0)
    exact = TWO_OVER_PI * (r / 2.0 - math.sin(2.0 * r) / 4.0)
    assert probability_integral(sol, r) == pytest.approx(exact, rel=1e-9)


def test_rigidity_profile_matches_identity(free_zero):
    profile = rigidity_profile(PotentialModel.free(), 0, 0.0, [2.0, 1.0])
    assert profile.radii == [1.0, 2.0]
    assert profile.rigidity[0] == pytest.approx(1.5 * math.pi, rel=1e-8)
    for r, p, dl in zip(profile.radii, profile.prob_integral, profile.dL_de):
        u, _ = free_zero.value(r)
        assert -dl * u * u == pytest.approx(p, rel=1e-6)


@pytest.mark.parametrize("model, l, energy, radii", [
    (PotentialModel.free(), 0, 1.0, [0.7, 1.9, 2.5]),
    (PotentialModel.free(), 2, -0.5, [0.5, 1.0, 3.0]),
    (PotentialModel.power(-2.0, 1.0), 0, -0.5, [0.4, 1.6, 2.0]),
    (PotentialModel.power(2.0, 1.0), 1, 0.3, [0.5, 1.5, 3.0]),
    (PotentialModel.power(0.75, 2.0), 0, 0.5, [0.4, 1.2, 2.0]),
    (PotentialModel.power(1.0, 6.0), 0, 0.2, [0.8, 1.2, 1.8]),
])
def test_fundamental_identities(model, l, energy, radii):
    report = verify_fundamental(model, l, energy, radii)
    assert report.skipped == 0
    assert report.max_residual < 1e-5
    assert [row.r for row in report.rows] == sorted(radii)
    for row in report.rows:
        assert row.rigidity == pytest.approx(1.0 / row.prob_integral)
        assert row.dL_de < 0.0 < row.dR_de


@pytest.mark.slow
@pytest.mark.parametrize("energy", [-0.7, -0.2, 0.3, 1.1, 2.5])
@pytest.mark.parametrize("l", [0, 1, 2])
@pytest.mark.parametrize("name, model", sorted(reference_suite().items()), ids=sorted(reference_suite()))
def test_fundamental_identities_on_reference_suite(name, model, l, energy):
    report = verify_fundamental(model, l, energy, [0.6, 1.3, 2.1])
    assert report.max_residual < 1e-5, name
    for row in report.rows:
        assert row.rigidity == pytest.approx(1.0 / row.prob_integral)


def _first_l_pole(model: PotentialModel, l: int, r: float) -> float:
    scan = monotonicity_scan(model, l, r, np.linspace(0.0, 30.0, 31))
    low, high = scan.l_poles[0]
    return brentq(lambda e: solve_regular(model, l, e, r_max=r).value(r)[0], low, high, xtol=1e-12)


def test_richardson_step_beats_bare_stencil_near_pole():
    model = PotentialModel.power(1.0, 6.0)
    energy = _first_l_pole(model, 0, 2.0) - 0.1
    d_eps = 0.9e-3 * max(abs(energy), 1.0)
    bare = verify_fundamental(model, 0, energy, [2.0], d_eps=d_eps, richardson=False)
    refined = verify_fundamental(model, 0, energy, [2.0], d_eps=d_eps)
    assert bare.d_eps_refined is None
    assert refined.d_eps == bare.d_eps == d_eps
    assert refined.d_eps_refined == pytest.approx(d_eps / 2.0)
    assert bare.rows[0].residual1 > 1e-7
    assert refined.rows[0].residual1 < 0.1 * bare.rows[0].residual1


@pytest.mark.parametrize("l", [0, 1])
def test_energy_derivatives_vanish_at_origin_with_cusp_powers(l):
    radii = np.geomspace(1e-2, 1e-1, 6)
    profile = rigidity_profile(PotentialModel.power(-0.2, 1.0), l, -0.5, radii, d_eps=4e-4)
    dl = -np.array(profile.dL_de)
    dr = np.array(profile.dR_de)
    assert 0.9 <= np.polyfit(np.log(radii), np.log(dl), 1)[0] <= 1.1
    assert 2.8 <= np.polyfit(np.log(radii), np.log(dr), 1)[0] <= 3.2
    r = radii[0]
    assert dl[0] == pytest.approx(r / (2 * l + 3), rel=0.05)
    assert dr[0] == pytest.approx(r ** 3 / ((2 * l + 3) * (l + 1) ** 2), rel=0.05)


def test_fundamental_skips_nodes():
    report = verify_fundamental(PotentialModel.free(), 0, 1.0, [1.0, math.pi])
    at_node = report.rows[1]
    assert at_node.residual1 is None
    assert at_node.residual2 is not None
    assert report.skipped == 1
    assert report.max_residual < 1e-5


def test_step_validation():
    with pytest.raises(DomainError):
        verify_fundamental(PotentialModel.free(), 0, 1.0, [1.0], d_eps=0.1)
    with pytest.raises(DomainError):
        verify_fundamental(PotentialModel.free(), 0, 1.0, [])


def test_monotonicity_and_poles():
    # u(2, ε) = sin(2k)/k: L has a pole at ε = π²/4, R at ε = π²/16 and 9π²/16
    report = monotonicity_scan(PotentialModel.free(), 0, 2.0, np.linspace(-2.0, 6.0, 17))
    assert report.passed
    assert len(report.l_poles) == 1
    low, high = report.l_poles[0]
    assert low < math.pi ** 2 / 4 < high
    r_pole_centres = sorted(0.5 * (a + b) for a, b in report.r_poles)
    assert r_pole_centres == pytest.approx([math.pi ** 2 / 16, 9 * math.pi ** 2 / 16], abs=0.5)


def test_monotonicity_below_threshold_has_no_poles():
    report = monotonicity_scan(PotentialModel.power(1.0, 6.0), 0, 1.5, [-3.0, -2.0, -1.0, -0.5])
    assert report.passed
    assert not report.l_poles and not report.r_poles
    assert report.logderiv == sorted(report.logderiv, reverse=True)


def test_overlap_with_itself_is_probability(free_zero):
    assert overlap_integral(free_zero, free_zero, 1.7) == pytest.approx(probability_integral(free_zero, 1.7),
                                                                        rel=1e-10)


def test_free_cross_energy_overlap():
    lhs, rhs = cross_energy_overlap(PotentialModel.free(), 0, 1.0, 4.0, 2.0)
    # (2/π)∫₀² sin r · sin(2r)/2 dr
    exact = TWO_OVER_PI * (math.sin(2.0) - math.sin(6.0) / 3.0) / 4.0
    assert lhs == pytest.approx(exact, rel=1e-8)
    assert rhs == pytest.approx(exact, rel=1e-8)


@pytest.mark.parametrize("model, l", [
    (PotentialModel.power(-2.0, 1.0), 0),
    (PotentialModel.power(1.0, 6.0), 1),
    (PotentialModel.power(0.75, 2.0), 2),
])
def test_cross_energy_overlap_matches_wronskian(model, l):
    lhs, rhs = cross_energy_overlap(model, l, -0.4, 0.9, 2.5)
    assert lhs == pytest.approx(rhs, rel=1e-7)
    with pytest.raises(DomainError):
        cross_energy_overlap(model, l, 0.5, 0.5, 1.0)
