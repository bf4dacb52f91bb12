"""
Special functions for cusp formulas.

Thin, domain-checked layer over :mod:`scipy.special`: Gamma, Bessel J/Y/I/K of
real non-negative order (plus exponentially scaled variants and derivatives),
the symmetric combination ½[I_ν + I_{−ν}], the analytic Bessel portion
I^a_ν(z) and Legendre polynomials. All functions are pure and accept scalars.
"""
import math

from scipy import special

from cuspkit.errors import DomainError, OverflowRangeError, SeriesNonConvergence

MAX_ORDER = 50.0
MAX_ARGUMENT = 1.0e4
MAX_GAMMA_ARGUMENT = 170.0
MAX_I_ARGUMENT = 700.0
MAX_SERIES_ARGUMENT = 1.0e4
SERIES_SWITCH = 40.0
NEGATIVE_SERIES_SWITCH = 4.0
SERIES_TERM_CAP = 500


def _check_order(nu: float) -> float:
    nu = float(nu)
    if not math.isfinite(nu) or nu < 0.0 or nu > MAX_ORDER:
        raise DomainError(f"Bessel order must lie in [0, {MAX_ORDER}], got {nu}")
    return nu


def _check_argument(y: float) -> float:
    y = float(y)
    if not math.isfinite(y) or y <= 0.0 or y > MAX_ARGUMENT:
        raise DomainError(f"Bessel argument must lie in (0, {MAX_ARGUMENT}], got {y}")
    return y


def gamma(x: float) -> float:
    """Γ(x) for 0 < x ≤ 170.

    Raises:
        DomainError: for x ≤ 0.
        OverflowRangeError: for x > 170.
    """
    x = float(x)
    if not math.isfinite(x) or x <= 0.0:
        raise DomainError(f"gamma requires x > 0, got {x}")
    if x > MAX_GAMMA_ARGUMENT:
        raise OverflowRangeError(f"gamma({x}) overflows double precision")
    return float(special.gamma(x))


def log_gamma(x: float) -> float:
    """ln Γ(x) for x > 0 (no overflow cap)."""
    x = float(x)
    if not math.isfinite(x) or x <= 0.0:
        raise DomainError(f"log_gamma requires x > 0, got {x}")
    return float(special.gammaln(x))


def bessel_j(nu: float, y: float) -> float:
    """J_ν(y), 0 ≤ ν ≤ 50, 0 < y ≤ 1e4."""
    return float(special.jv(_check_order(nu), _check_argument(y)))


def bessel_y(nu: float, y: float) -> float:
    """Y_ν(y), 0 ≤ ν ≤ 50, 0 < y ≤ 1e4."""
    return float(special.yv(_check_order(nu), _check_argument(y)))


def bessel_i(nu: float, y: float) -> float:
    """I_ν(y); raises :class:`OverflowRangeError` for y > 700."""
    nu, y = _check_order(nu), _check_argument(y)
    if y > MAX_I_ARGUMENT:
        raise OverflowRangeError(f"I_nu({y}) overflows; use bessel_i_scaled")
    return float(special.iv(nu, y))


def bessel_k(nu: float, y: float) -> float:
    """K_ν(y); underflows gracefully to 0 for large y (see :func:`bessel_k_scaled`)."""
    return float(special.kv(_check_order(nu), _check_argument(y)))


def bessel_i_scaled(nu: float, y: float) -> float:
    """e^{−y} I_ν(y)."""
    return float(special.ive(_check_order(nu), _check_argument(y)))


def bessel_k_scaled(nu: float, y: float) -> float:
    """e^{y} K_ν(y)."""
    return float(special.kve(_check_order(nu), _check_argument(y)))


def bessel_j_prime(nu: float, y: float) -> float:
    return float(special.jvp(_check_order(nu), _check_argument(y)))


def bessel_y_prime(nu: float, y: float) -> float:
    return float(special.yvp(_check_order(nu), _check_argument(y)))


def _ive_signed(order: float, y: float) -> float:
    # negative orders through I_{−μ} = I_μ + (2/π) sin(μπ) K_μ
    if order >= 0.0:
        return float(special.ive(order, y))
    mu = -order
    return float(special.ive(mu, y) + 2.0 / math.pi * math.sin(mu * math.pi) * special.kve(mu, y) * math.exp(-2.0 * y))


def bessel_i_scaled_prime(nu: float, y: float) -> float:
    """e^{−y} I′_ν(y) from I′_ν = ½(I_{ν−1} + I_{ν+1})."""
    nu, y = _check_order(nu), _check_argument(y)
    return 0.5 * (_ive_signed(nu - 1.0, y) + _ive_signed(nu + 1.0, y))


def bessel_k_scaled_prime(nu: float, y: float) -> float:
    """e^{y} K′_ν(y) from K′_ν = −½(K_{ν−1} + K_{ν+1}) with K_{−μ} = K_μ."""
    nu, y = _check_order(nu), _check_argument(y)
    return float(-0.5 * (special.kve(abs(nu - 1.0), y) + special.kve(nu + 1.0, y)))


def bessel_i_sym(nu: float, y: float) -> float:
    """½[I_ν(y) + I_{−ν}(y)].

    Uses the reflection I_{−ν} = I_ν + (2/π) sin(νπ) K_ν, which reduces to I_n for integer order.

    Raises:
        OverflowRangeError: for y > 700.
    """
    nu, y = _check_order(nu), _check_argument(y)
    if y > MAX_I_ARGUMENT:
        raise OverflowRangeError(f"I_nu({y}) overflows; use bessel_i_sym_scaled")
    return float(special.iv(nu, y) + math.sin(nu * math.pi) * special.kv(nu, y) / math.pi)


def bessel_i_sym_scaled(nu: float, y: float) -> float:
    """e^{−y}·½[I_ν(y) + I_{−ν}(y)], usable beyond the I overflow range."""
    nu, y = _check_order(nu), _check_argument(y)
    return float(special.ive(nu, y) + math.sin(nu * math.pi) * special.kve(nu, y) * math.exp(-2.0 * y) / math.pi)


def bessel_i_sym_scaled_prime(nu: float, y: float) -> float:
    """e^{−y}·d/dy ½[I_ν + I_{−ν}]."""
    nu, y = _check_order(nu), _check_argument(y)
    return float(bessel_i_scaled_prime(nu, y)
                 + math.sin(nu * math.pi) * bessel_k_scaled_prime(nu, y) * math.exp(-2.0 * y) / math.pi)


def _analytic_i_series(nu: float, z: float, max_terms: int) -> float:
    terms = [1.0]
    term = 1.0
    magnitude = 1.0
    for j in range(1, max_terms + 1):
        term *= z / (j * (nu + j))
        terms.append(term)
        magnitude += abs(term)
        if abs(term) <= 1e-18 * magnitude and j * j > abs(z):
            return math.fsum(terms)
    raise SeriesNonConvergence(
        f"analytic_i({nu}, {z}) did not converge within {max_terms} terms"
    )


def analytic_i(nu: float, z: float, max_terms: int = SERIES_TERM_CAP) -> float:
    """Analytic portion of the modified Bessel function.

    I^a_ν(z) = Σ_j Γ(ν+1) z^j / (j! Γ(ν+j+1)), so that I_ν(y) = (y/2)^ν I^a_ν((y/2)²)/Γ(ν+1).
    For z < 0 the sum is the J-Bessel resummation J_ν(y)Γ(ν+1)/(y/2)^ν with z = −(y/2)².

    Args:
        nu: Order ν ≥ 0 (no upper cap; the series does not need one).
        z: Series argument, |z| ≤ 1e4.
        max_terms: Term cap of the direct series, used for 0 < z ≤ 40 and −4 ≤ z < 0
            (the alternating series loses digits beyond that).

    Raises:
        SeriesNonConvergence: when the direct series exceeds ``max_terms``.
    """
    nu, z = float(nu), float(z)
    if not math.isfinite(nu) or nu < 0.0:
        raise DomainError(f"analytic_i requires nu >= 0, got {nu}")
    if not math.isfinite(z) or abs(z) > MAX_SERIES_ARGUMENT:
        raise DomainError(f"analytic_i requires |z| <= {MAX_SERIES_ARGUMENT}, got {z}")
    if z == 0.0:
        return 1.0
    if -NEGATIVE_SERIES_SWITCH <= z <= SERIES_SWITCH:
        return _analytic_i_series(nu, z, max_terms)
    half_y = math.sqrt(abs(z))
    y = 2.0 * half_y
    log_norm = special.gammaln(nu + 1.0) - nu * math.log(half_y)
    if z > 0.0:
        return float(special.ive(nu, y) * math.exp(log_norm + y))
    return float(special.jv(nu, y) * math.exp(log_norm))


def analytic_i_prime(nu: float, z: float, max_terms: int = SERIES_TERM_CAP) -> float:
    """d/dz I^a_ν(z) = I^a_{ν+1}(z)/(ν+1)."""
    return analytic_i(float(nu) + 1.0, z, max_terms) / (float(nu) + 1.0)


def legendre(l: int, x: float) -> float:
    """Legendre polynomial P_l(x) for integer l ≥ 0 and x in [−1, 1]."""
    if int(l) != l or l < 0:
        raise DomainError(f"legendre degree must be a non-negative integer, got {l}")
    x = float(x)
    if not -1.0 <= x <= 1.0:
        raise DomainError(f"legendre argument must lie in [-1, 1], got {x}")
    return float(special.eval_legendre(int(l), x))


def spherical_regular(l: int, x: float) -> float:
    """Riccati-Bessel x·j_l(x), used for free-particle oracles."""
    return float(x * special.spherical_jn(int(l), x))


def spherical_regular_modified(l: int, x: float) -> float:
    """x·i_l(x) (modified spherical Bessel, first kind)."""
    return float(x * special.spherical_in(int(l), x))
