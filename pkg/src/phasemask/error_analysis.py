"""Error probabilities of Bob and Eve, Eve's analytic lower bound and exponent.

Rates are in ebits/second and durations in seconds. Everything here depends
on the products ``R*T`` and ``C_E*T`` only, which makes the family
``(g R, g C_E, T/g)`` produce identical probabilities.
"""

from __future__ import annotations

import logging
import math
import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy import integrate, optimize, special

log = logging.getLogger(__name__)

QUAD_TOL = 1e-10
TAIL_MARGIN = 12.0
SQRT2 = math.sqrt(2.0)
SQRT2PI = math.sqrt(2.0 * math.pi)


class RegimeError(ValueError):
    """Raised when a result needs ``C_E < R`` (or ``C_E <= R``) and it does not hold."""


class InvalidBoundParameter(ValueError):
    pass


def _clamp(p: float, what: str) -> float:
    if p < 0.0 or p > 1.0:
        if p < -1e-12 or p > 1.0 + 1e-12:
            log.warning("clamping %s=%r into [0, 1]", what, p)
        else:
            log.debug("clamping %s=%r into [0, 1]", what, p)
        return min(1.0, max(0.0, p))
    return p


# -- standard normal helpers --------------------------------------------------

def norm_sf(y):
    """Upper tail ``Phi(-y)`` via the scaled complementary error function."""
    y = np.asarray(y, dtype=float)
    return 0.5 * special.erfcx(y / SQRT2) * np.exp(-0.5 * y * y)


def log_norm_cdf(y):
    """``log Phi(y)``, accurate in both tails.

    For ``y > 0`` it is ``log1p(-Phi(-y))``; for ``y <= 0`` the direct
    ``log(erfcx(-y/sqrt2)/2) - y^2/2`` avoids underflow.
    """
    y = np.asarray(y, dtype=float)
    pos = y > 0
    out = np.empty_like(y)
    out[pos] = np.log1p(-norm_sf(y[pos]))
    yn = y[~pos]
    out[~pos] = np.log(0.5 * special.erfcx(-yn / SQRT2)) - 0.5 * yn * yn
    return out


def norm_cdf_power_complement(y, n_minus_1):
    """``1 - Phi(y)**n_minus_1`` without cancellation; ``n_minus_1`` may be real."""
    return -np.expm1(n_minus_1 * log_norm_cdf(y))


# -- Bob -----------------------------------------------------------------------

def bob_optimal_error(N: float, S: float) -> float:
    if N < 1 or S < 0:
        raise ValueError("need N >= 1 and S >= 0")
    if N == 1:
        return 0.0
    e = math.exp(-S)
    root = math.sqrt(1.0 + (N - 1.0) * e) - math.sqrt(-math.expm1(-S))
    return _clamp((N - 1.0) / N**2 * root * root, "P_B^o")


def bob_photon_count_error(N: float, S: float) -> float:
    if N < 1 or S < 0:
        raise ValueError("need N >= 1 and S >= 0")
    return _clamp((1.0 - 1.0 / N) * math.exp(-S), "P_B^c")


def bob_photon_count_error_rates(R: float, C_E: float, T: float, D: float = 1.0) -> float:
    """Same quantity with ``N = e^{RT}`` and ``S = C_E D T``."""
    return _clamp(-math.expm1(-R * T) * math.exp(-C_E * D * T), "P_B^c")


def photon_count_peak_duration(R: float, C_E: float) -> float:
    """Duration maximizing ``(1 - e^{-RT}) e^{-C_E T}``."""
    if R <= 0 or C_E <= 0:
        raise ValueError("R and C_E must be positive")
    return math.log1p(R / C_E) / R


# -- Eve -----------------------------------------------------------------------

def eve_error_quadrature(N: float, A: float) -> float:
    """Error of argmax decoding over N unit-variance coordinates, one shifted by A.

    Integrates ``phi(y - A) (1 - Phi(y)^{N-1})`` adaptively; ``N`` may be
    real valued (it enters only as an exponent).
    """
    if N < 1 or A < 0:
        raise ValueError("need N >= 1 and A >= 0")
    if N == 1:
        return 0.0
    nm1 = N - 1.0
    y_star = -float(special.ndtri(1.0 / N)) if N > 2 else 0.0
    lo = min(0.0, A) - TAIL_MARGIN
    hi = max(A, math.sqrt(2.0 * math.log(N))) + TAIL_MARGIN

    def integrand(y):
        return math.exp(-0.5 * (y - A) ** 2) / SQRT2PI * float(norm_cdf_power_complement(y, nm1))

    points = sorted({p for p in (A, y_star) if lo < p < hi})
    val, _ = integrate.quad(integrand, lo, hi, points=points or None,
                            epsabs=QUAD_TOL, epsrel=QUAD_TOL, limit=400)
    return _clamp(val, "P_E")


def eve_error_lower_bound(N: float, A: float, f: float) -> float:
    """Product lower bound on Eve's error at threshold ``y = sqrt(f ln N)``.

    Each factor is clamped at zero before multiplying so that two negative
    (vacuous) factors can never yield a spurious positive bound.
    """
    if N < 2:
        raise ValueError("lower bound needs N >= 2")
    lnN = math.log(N)
    threshold = A * A / lnN
    if not f > threshold:
        raise InvalidBoundParameter(
            f"f={f!r} must exceed A^2/ln N = 2 C_E/R = {threshold!r}")
    y = math.sqrt(f * lnN)
    flnN = f * lnN
    # (N-1) * (1/y - 1/y^3) * exp(-y^2/2) / sqrt(2 pi), written with N^{1 - f/2}
    log_mag = math.log1p(-1.0 / N) + (1.0 - 0.5 * f) * lnN - 0.5 * math.log(2 * math.pi * flnN)
    rate = (1.0 - 1.0 / flnN) * math.exp(log_mag) if log_mag < 700 else math.copysign(math.inf, 1.0 - 1.0 / flnN)
    # a non-positive rate makes this factor vacuous; skip expm1 to avoid overflow
    q_factor = -math.expm1(-rate) if rate > 0 else 0.0
    gap = y - A
    # gap can round to zero even though f passed the threshold check
    phi_factor = 1.0 - math.exp(-0.5 * gap * gap) / (SQRT2PI * gap) if gap > 0 else 0.0
    return _clamp(max(0.0, q_factor) * max(0.0, phi_factor), "P_E lower bound")


def best_lower_bound(N: float, A: float, f_max: float = 4.0) -> tuple[float, float]:
    """Maximize the lower bound over ``f`` in ``(A^2/ln N, f_max)``; returns ``(bound, f)``."""
    lnN = math.log(N)
    lo = A * A / lnN
    if lo >= f_max:
        return 0.0, math.nan
    grid = lo + (f_max - lo) * np.linspace(1e-6, 1.0, 200)
    grid = grid[grid > lo]  # the offset can round away when lo is close to f_max
    if grid.size == 0:
        return 0.0, math.nan
    vals = [eve_error_lower_bound(N, A, float(f)) for f in grid]
    i = int(np.argmax(vals))
    if vals[i] <= 0.0:
        return 0.0, float(grid[i])
    a = float(grid[max(i - 1, 0)])
    b = float(grid[min(i + 1, len(grid) - 1)])
    res = optimize.minimize_scalar(lambda f: -eve_error_lower_bound(N, A, f), bounds=(a, b),
                                   method="bounded", options={"xatol": 1e-10})
    if -res.fun > vals[i]:
        return float(-res.fun), float(res.x)
    return float(vals[i]), float(grid[i])


def exponent_bound(R: float, C_E: float) -> float:
    """Lower bound ``(sqrt R - sqrt C_E)^2`` on the exponent of ``1 - P_E``."""
    if R <= 0 or C_E < 0:
        raise ValueError("need R > 0 and C_E >= 0")
    if C_E > R:
        raise RegimeError(f"strong converse regime requires C_E < R (got C_E={C_E!r}, R={R!r})")
    return (math.sqrt(R) - math.sqrt(C_E)) ** 2


# -- rates and reports ------------------------------------------------------------

@dataclass(frozen=True)
class SystemRates:
    R: float
    C_E: float
    T: float
    D: float = 1.0

    def __post_init__(self):
        if self.R <= 0 or self.C_E < 0 or self.T <= 0:
            raise ValueError("need R > 0, C_E >= 0, T > 0")
        if self.D < 1.0 - 1e-12:
            raise ValueError("D must be at least 1")

    @property
    def S(self) -> float:
        return self.C_E * self.D * self.T

    @property
    def N_real(self) -> float:
        return math.exp(self.R * self.T)

    @property
    def N(self) -> int:
        n_real = self.N_real
        n = max(1, round(n_real))
        if abs(n_real - n) / n > 1e-6:
            warnings.warn(f"e^(RT)={n_real!r} is not an integer; rounded to N={n}", stacklevel=2)
        return n

    @property
    def A(self) -> float:
        return math.sqrt(2.0 * self.C_E * self.T)

    @property
    def A_from_S(self) -> float:
        return math.sqrt(2.0 * self.S / self.D)

    def scaled(self, g: float) -> "SystemRates":
        return SystemRates(g * self.R, g * self.C_E, self.T / g, self.D)


def error_triple(rates: SystemRates) -> tuple[float, float, float]:
    """``(P_B^o, P_B^c, P_E)`` with N treated as the real number ``e^{RT}``."""
    n = rates.N_real
    return (
        bob_optimal_error(n, rates.S),
        bob_photon_count_error_rates(rates.R, rates.C_E, rates.T, rates.D),
        eve_error_quadrature(n, rates.A),
    )


@dataclass
class RegimeReport:
    R: float
    C_E: float
    T: float
    D: float
    N: float
    S: float
    A: float
    converse_regime: bool
    photon_condition: bool
    exponent_bound: float | None
    pulse_duration: float
    scale_invariant_in: str = "(g*R, g*C_E, T/g) for any g > 0"
    notes: list[str] = field(default_factory=list)

    def as_dict(self) -> dict:
        return dict(self.__dict__)


def regime_report(rates: SystemRates) -> RegimeReport:
    n = rates.N_real
    converse = rates.C_E < rates.R
    notes = []
    try:
        e_bound = exponent_bound(rates.R, rates.C_E)
    except RegimeError:
        e_bound = None
        notes.append("C_E >= R: no strong-converse guarantee for Eve")
    if rates.D > 1.0:
        notes.append("D > 1: the CPPM beam-splitter lower bound is strictly smaller than this one")
    return RegimeReport(
        R=rates.R, C_E=rates.C_E, T=rates.T, D=rates.D, N=n, S=rates.S, A=rates.A,
        converse_regime=converse,
        # C_E < R  <=>  e^{S/D} < N
        photon_condition=rates.S / rates.D < math.log(n),
        exponent_bound=e_bound,
        pulse_duration=rates.T / n,
        notes=notes,
    )


def table_durations(R: float, Ns) -> list[tuple[int, float]]:
    """``(N, ln N / R)`` pairs."""
    return [(int(n), math.log(n) / R) for n in Ns]


DEFAULT_TABLE_N = [2, 2**2, 2**4, 2**6, 2**8, 2**10, 2**12, 2**14, 2**18, 2**22]


# -- curves ---------------------------------------------------------------------

CURVE_COLUMNS = ["T_seconds", "N", "P_B_opt", "P_B_count", "P_E_bar", "P_E_lower", "exponent_bound"]


@dataclass
class CurvePoint:
    T: float
    N: float
    P_B_opt: float
    P_B_count: float
    P_E_bar: float
    P_E_lower: float
    f_used: float
    exponent_bound: float | None

    @property
    def random_guess(self) -> float:
        return 1.0 - 1.0 / self.N

    def row(self) -> list:
        return [self.T, self.N, self.P_B_opt, self.P_B_count, self.P_E_bar, self.P_E_lower,
                self.exponent_bound]


@dataclass
class ErrorCurve:
    R: float
    C_E: float
    D: float
    points: list[CurvePoint]


def curve_point(R: float, C_E: float, T: float, D: float = 1.0, f: float | None = None) -> CurvePoint:
    rates = SystemRates(R, C_E, T, D)
    n = rates.N_real
    p_opt, p_count, p_eve = error_triple(rates)
    if n < 2:
        lower, f_used = 0.0, math.nan
    elif f is None:
        lower, f_used = best_lower_bound(n, rates.A)
    else:
        lower, f_used = eve_error_lower_bound(n, rates.A, f), f
    try:
        e_bound = exponent_bound(R, C_E)
    except RegimeError:
        e_bound = None
    return CurvePoint(T, n, p_opt, p_count, p_eve, lower, f_used, e_bound)


def error_curve(R: float, C_E: float, Ts, D: float = 1.0, f: float | None = None) -> ErrorCurve:
    if C_E >= R:
        log.warning("C_E=%r >= R=%r: exponent bound unavailable", C_E, R)
    return ErrorCurve(R, C_E, D, [curve_point(R, C_E, float(T), D, f) for T in Ts])
