"""Exponent engine: every closed-form constant, bound formula and scalar
optimisation used for remainder-term exponents of the generalised divisor
problem.

Conventions baked in here:

* ``k0(theta) = (24*theta - 9) / (2*(4*theta - 1)*(1 - theta))`` on
  ``[1/2, 1)``; ``k1`` and ``k2`` subtract ``1/(3*B*(1-theta)^{3/2})``
  resp. ``1/(3*(B+eps0)*(1-theta)^{3/2})`` from it.
* Pointwise bounds read ``x^exponent`` with
  ``exponent = 1 - (2/(3B(k - 2 k1)))^{2/3}``; mean-square bounds use
  ``1 - (5/(6B(k - k1)))^{2/3}``.  The "Karatsuba constant" of a bound is
  ``D = (1 - exponent) * k^{2/3}``.
* Reported numbers are always weaker than computed ones: D values are
  rounded down, exponents are rounded up, subtracted thresholds (8.37,
  4.18) are rounded down, k-range thresholds are rounded up to integers.
* Everything is evaluated through mpmath at ``WORK_DPS`` digits; operations
  whose inputs are exact rationals (Fraction/int) run an exact Fraction
  path instead.

Pure functions throughout; safe for concurrent use.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Optional, Sequence, Union

import mpmath as mp

from .errors import DomainError, RangeError, SelfCheckError
from .numerics import (
    bracket_max,
    check_unimodal,
    golden_max,
    real_cubic_roots,
    round_down,
    round_up,
)

WORK_DPS = 50  # >= 80-bit significand everywhere in the engine

Rational = Union[int, Fraction]


def _wp():
    return mp.workdps(WORK_DPS)


def heath_brown_B() -> mp.mpf:
    """Default zeta-growth constant 8*sqrt(15)/63 = 0.4918..."""
    with _wp():
        return 8 * mp.sqrt(15) / 63


RICHERT_B = 4.45  # classical Vinogradov-route value of the same constant


# ---------------------------------------------------------------------------
# parameter bundle and report types
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ExponentParams:
    """Bundle (B, theta, eps0, delta, k) driving every bound formula."""

    B: float = float(heath_brown_B())
    theta: float = 0.839427  # near-maximiser of k1 for the default B
    eps0: float = 1e-6
    delta: float = 1e-3
    k: int = 30

    def __post_init__(self):
        if not self.B > 0:
            raise DomainError(f"B must be positive, got {self.B}")
        if not (0.5 <= self.theta < 1.0):
            raise DomainError(f"theta must lie in [1/2, 1), got {self.theta}")
        if self.eps0 < 0:
            raise DomainError(f"eps0 must be non-negative, got {self.eps0}")
        if self.delta < 0:
            raise DomainError(f"delta must be non-negative, got {self.delta}")
        if not (isinstance(self.k, int) and self.k >= 2):
            raise DomainError(f"k must be an integer >= 2, got {self.k}")


@dataclass(frozen=True)
class BoundReport:
    """One bound of the shape x^exponent with its Karatsuba constant.

    ``karatsuba_D`` is rounded down at 3 decimals and ``exponent_reported``
    up at 5, so every reported claim is implied by the computed one.
    """

    name: str
    karatsuba_D: float
    karatsuba_D_exact: float
    validity: str
    exponent: Optional[float] = None
    exponent_reported: Optional[float] = None
    k: Optional[int] = None
    inputs: Optional[ExponentParams] = None

    def __post_init__(self):
        if self.exponent is not None and not (0.5 < self.exponent < 1.0):
            raise DomainError(
                f"{self.name}: exponent {self.exponent} outside (1/2, 1)")
        if self.karatsuba_D - self.karatsuba_D_exact > 1e-15:
            raise DomainError(f"{self.name}: reported D not rounded down")


@dataclass(frozen=True)
class PhiPiece:
    """Affine piece of the piecewise exponential-sum exponent bound."""

    k_index: int
    rho_lo: Fraction
    rho_hi: Fraction
    A: Fraction
    Bcoef: Fraction
    c: Fraction


@dataclass(frozen=True)
class ThetaOptimum:
    theta_star: float
    k1_star: float
    k0_star: float
    bracket: tuple


@dataclass(frozen=True)
class StepCheckReport:
    holds: bool
    c: float
    x: float
    delta_max: float
    eps1: float


@dataclass(frozen=True)
class BalancedExponent:
    beta: float
    f_beta: float
    final_exponent: float
    m0_at_beta: float


@dataclass(frozen=True)
class CubicMax:
    rho_star: float
    h_star: float
    stationary_points: tuple
    used_endpoint: bool
    limit_ratio: Optional[float] = None


@dataclass(frozen=True)
class LargeKExponent:
    beta: float
    f_beta: float
    final_exponent: float
    karatsuba_constant: float
    m1_at_beta: float
    floor3_holds: bool


@dataclass(frozen=True)
class ScanReport:
    ok: bool
    k_max: int
    failure: Optional[tuple] = None  # (k, condition label)


# ---------------------------------------------------------------------------
# k0 / k1 / k2 and the theta optimisation
# ---------------------------------------------------------------------------

def _check_theta(theta) -> None:
    if isinstance(theta, (int, Fraction)):
        ok = Fraction(1, 2) <= Fraction(theta) < 1
    else:
        ok = 0.5 <= float(theta) < 1.0
    if not ok:
        raise DomainError(f"theta must lie in [1/2, 1), got {theta}")


def k0_theta(theta):
    """(24*theta - 9) / (2*(4*theta - 1)*(1 - theta)); pole at theta = 1.

    Fraction input follows an exact rational path.
    """
    _check_theta(theta)
    if isinstance(theta, (int, Fraction)):
        t = Fraction(theta)
        return (24 * t - 9) / (2 * (4 * t - 1) * (1 - t))
    with _wp():
        t = mp.mpf(theta)
        return (24 * t - 9) / (2 * (4 * t - 1) * (1 - t))


def k1_theta(theta, B):
    """k0(theta) - 1/(3*B*(1-theta)^{3/2})."""
    _check_theta(theta)
    if not B > 0:
        raise DomainError(f"B must be positive, got {B}")
    with _wp():
        t = mp.mpf(float(theta)) if not isinstance(theta, mp.mpf) else theta
        k0 = (24 * t - 9) / (2 * (4 * t - 1) * (1 - t))
        return k0 - 1 / (3 * mp.mpf(B) * (1 - t) ** mp.mpf("1.5"))


def k2_theta(theta, B, eps0):
    """k0(theta) - 1/(3*(B+eps0)*(1-theta)^{3/2}); equals k1 at eps0 = 0."""
    _check_theta(theta)
    if not B > 0:
        raise DomainError(f"B must be positive, got {B}")
    if eps0 < 0:
        raise DomainError(f"eps0 must be non-negative, got {eps0}")
    with _wp():
        t = mp.mpf(float(theta)) if not isinstance(theta, mp.mpf) else theta
        k0 = (24 * t - 9) / (2 * (4 * t - 1) * (1 - t))
        return k0 - 1 / (3 * (mp.mpf(B) + mp.mpf(eps0)) * (1 - t) ** mp.mpf("1.5"))


THETA_SEARCH_LO = 0.5 + 1e-6
THETA_SEARCH_HI = 1.0 - 1e-6
THETA_SCAN_POINTS = 1000


def optimize_theta(B) -> ThetaOptimum:
    """Maximise k1(theta) over [1/2, 1) by grid bracketing + golden section.

    The bracket found by the coarse scan is checked for unimodality by
    sampling before the golden-section refinement.  The refinement runs to
    1e-16 in theta (well past the 1e-8 contract) because k1 can be sharply
    curved near its maximiser for large B; first-order optimality then holds
    to ~1e-8 even at curvatures of order 1e8.
    """
    if not B > 0:
        raise DomainError(f"B must be positive, got {B}")
    with _wp():
        Bm = mp.mpf(B)

        def f(t):
            t = mp.mpf(t)
            k0 = (24 * t - 9) / (2 * (4 * t - 1) * (1 - t))
            return k0 - 1 / (3 * Bm * (1 - t) ** mp.mpf("1.5"))

        lo, hi = bracket_max(f, mp.mpf(THETA_SEARCH_LO), mp.mpf(THETA_SEARCH_HI),
                             n=THETA_SCAN_POINTS)
        if not check_unimodal(f, lo, hi):
            raise SelfCheckError(
                f"k1(theta) not unimodal on bracket [{float(lo)}, {float(hi)}]")
        theta_star, k1_star = golden_max(f, lo, hi, xtol=mp.mpf("1e-16"))
        return ThetaOptimum(
            theta_star=float(theta_star),
            k1_star=float(k1_star),
            k0_star=float(k0_theta(float(theta_star))),
            bracket=(float(lo), float(hi)),
        )


# ---------------------------------------------------------------------------
# the two bound families and the historical table
# ---------------------------------------------------------------------------

def alpha_bound(k: int, params: ExponentParams) -> BoundReport:
    """Pointwise bound x^{1 - (2/(3B(k-2k1)))^{2/3}}, valid for k >= 2*k0."""
    with _wp():
        k0 = k0_theta(float(params.theta))
        if k < 2 * k0:
            raise RangeError(
                f"alpha bound needs k >= 2*k0(theta) = {float(2 * k0):.6f}, got k={k}")
        B = mp.mpf(params.B)
        k1 = k1_theta(params.theta, params.B)
        expo = 1 - (2 / (3 * B * (k - 2 * k1))) ** (mp.mpf(2) / 3)
        D = (1 - expo) * mp.mpf(k) ** (mp.mpf(2) / 3)
        return BoundReport(
            name="pointwise-alpha",
            exponent=float(expo),
            exponent_reported=round_up(float(expo), 5),
            karatsuba_D=round_down(float(D), 3),
            karatsuba_D_exact=float(D),
            validity=f"k >= 2*k0(theta) = {float(2 * k0):.4f}",
            k=k,
            inputs=params,
        )


def beta_bound(k: int, params: ExponentParams,
               require_doubled_threshold: bool = False) -> BoundReport:
    """Mean-square bound x^{1 - (5/(6B(k-k1)))^{2/3}}.

    Default validity threshold is k >= k0(theta); pass
    ``require_doubled_threshold=True`` to insist on k >= 2*k0(theta).
    """
    with _wp():
        k0 = k0_theta(float(params.theta))
        threshold = 2 * k0 if require_doubled_threshold else k0
        if k < threshold:
            raise RangeError(
                f"beta bound needs k >= {'2*k0' if require_doubled_threshold else 'k0'}"
                f"(theta) = {float(threshold):.6f}, got k={k}")
        B = mp.mpf(params.B)
        k1 = k1_theta(params.theta, params.B)
        expo = 1 - (5 / (6 * B * (k - k1))) ** (mp.mpf(2) / 3)
        D = (1 - expo) * mp.mpf(k) ** (mp.mpf(2) / 3)
        return BoundReport(
            name="meansquare-beta",
            exponent=float(expo),
            exponent_reported=round_up(float(expo), 5),
            karatsuba_D=round_down(float(D), 3),
            karatsuba_D_exact=float(D),
            validity=f"k >= {float(threshold):.4f}",
            k=k,
            inputs=params,
        )


def kolpakova_D(k: int, B: float) -> float:
    """k-dependent constant (2/(3B(1 - 159.9/k)))^{2/3}, for k >= 186."""
    if k <= 159.9:
        raise RangeError(f"kolpakova constant needs k > 159.9, got {k}")
    with _wp():
        return float((2 / (3 * mp.mpf(B) * (1 - mp.mpf("159.9") / k))) ** (mp.mpf(2) / 3))


def _table_row(name: str, D, validity: str) -> BoundReport:
    return BoundReport(
        name=name,
        karatsuba_D=round_down(float(D), 3),
        karatsuba_D_exact=float(D),
        validity=validity,
    )


def historical_table(B_richert: float = RICHERT_B,
                     B_hb: Optional[float] = None) -> list[BoundReport]:
    """Named Karatsuba constants of the successive pointwise bounds.

    ``B_richert`` feeds the classical entries (default 4.45); ``B_hb`` feeds
    the two modern moment-route entries (default 8*sqrt(15)/63).
    """
    if not B_richert > 0:
        raise DomainError(f"B_richert must be positive, got {B_richert}")
    if B_hb is None:
        B_hb = float(heath_brown_B())
    if not B_hb > 0:
        raise DomainError(f"B_hb must be positive, got {B_hb}")
    with _wp():
        Br = mp.mpf(B_richert)
        Bh = mp.mpf(B_hb)
        two3 = mp.mpf(2) / 3
        rows = [
            _table_row("karatsuba-1972", 2 ** (-mp.mpf(5) / 3) * Br ** -two3,
                       "k sufficiently large"),
            _table_row("fujii-1976",
                       2 ** mp.mpf("-0.5") * (mp.sqrt(8) - 1) ** (-mp.mpf(1) / 3)
                       * Br ** -two3,
                       "claimed; proof erroneous"),
            _table_row("panteleeva-1988", 2 ** -two3 * Br ** -two3,
                       "claimed; proof erroneous"),
            _table_row("ivic-ouellet-1989", 2 ** two3 * Br ** -two3 / 3, "k > 10"),
            _table_row("kolpakova-2011(k=186)", kolpakova_D(186, B_richert),
                       "k >= 186"),
            _table_row("kolpakova-2011(limit)", two3 ** two3 * Br ** -two3,
                       "k -> infinity limit"),
            _table_row("heath-brown-2017", mp.mpf("0.849"), "k >= 2"),
            _table_row("moment-route(alpha)", two3 ** two3 * Bh ** -two3, "k >= 30"),
            _table_row("moment-route(beta)", (mp.mpf(5) / 6) ** two3 * Bh ** -two3,
                       "k >= 15, mean square"),
            _table_row("expsum-route(limit)", 3 / 2 ** two3,
                       "k sufficiently large"),
        ]
    return rows


# ---------------------------------------------------------------------------
# moment exponents m(sigma), the inductive bound and the induction step
# ---------------------------------------------------------------------------

def ivic_m(sigma):
    """Classical moment-order lower bound (24s - 9)/((4s - 1)(1 - s)) on [1/2, 1).

    Fraction input follows an exact rational path.
    """
    if isinstance(sigma, (int, Fraction)):
        s = Fraction(sigma)
        if not (Fraction(1, 2) <= s < 1):
            raise DomainError(f"sigma must lie in [1/2, 1), got {sigma}")
        return (24 * s - 9) / ((4 * s - 1) * (1 - s))
    s = float(sigma)
    if not (0.5 <= s < 1.0):
        raise DomainError(f"sigma must lie in [1/2, 1), got {sigma}")
    with _wp():
        sm = mp.mpf(s)
        return (24 * sm - 9) / ((4 * sm - 1) * (1 - sm))


def m0_validity_threshold(params: ExponentParams) -> float:
    """Smallest sigma at which m0 is a certified moment-order bound.

    Equals 1 - (3(B+eps0)(k0-k2))^{-2/3}, which collapses to theta exactly.
    """
    with _wp():
        B = mp.mpf(params.B) + mp.mpf(params.eps0)
        k0 = k0_theta(float(params.theta))
        k2 = k2_theta(params.theta, params.B, params.eps0)
        return float(1 - (3 * B * (k0 - k2)) ** (-mp.mpf(2) / 3))


def _m0_formula(sigma: float, params: ExponentParams) -> float:
    with _wp():
        B = mp.mpf(params.B) + mp.mpf(params.eps0)
        k2 = k2_theta(params.theta, params.B, params.eps0)
        s = mp.mpf(sigma)
        return float(2 / (3 * B * (1 - s) ** mp.mpf("1.5")) + 2 * k2)


def m0_sigma(sigma: float, params: ExponentParams) -> float:
    """Usable moment-order lower bound 2/(3(B+eps0)(1-sigma)^{3/2}) + 2*k2."""
    thr = m0_validity_threshold(params)
    if sigma >= 1:
        raise DomainError(f"sigma must be below 1, got {sigma}")
    if sigma < thr - 1e-14:
        raise RangeError(
            f"m0 is only valid for sigma >= {thr:.12f} (= theta), got {sigma}")
    return _m0_formula(sigma, params)


def carlson_combine(eta: float, mu: float) -> float:
    """max{1 - (1-eta)/(1+mu), 1/2, eta} for eta in (0,1), mu >= 0."""
    if not (0.0 < eta < 1.0):
        raise DomainError(f"eta must lie in (0, 1), got {eta}")
    if mu < 0:
        raise DomainError(f"mu must be non-negative, got {mu}")
    with _wp():
        e, m = mp.mpf(eta), mp.mpf(mu)
        return float(max(1 - (1 - e) / (1 + m), mp.mpf("0.5"), e))


def inductive_sigma_bound(k: float, params: ExponentParams) -> float:
    """1 - (3(B+eps0)(k - k2))^{-2/3}, valid for k >= k0(theta).

    At k = k0(theta) this returns theta exactly (base case of the induction).
    """
    with _wp():
        k0 = k0_theta(float(params.theta))
        if k < float(k0) - 1e-12:
            raise RangeError(
                f"inductive bound needs k >= k0(theta) = {float(k0):.6f}, got {k}")
        B = mp.mpf(params.B) + mp.mpf(params.eps0)
        k2 = k2_theta(params.theta, params.B, params.eps0)
        return float(1 - (3 * B * (mp.mpf(k) - k2)) ** (-mp.mpf(2) / 3))


def induction_step_check(r: float, delta_step: float,
                         params: ExponentParams) -> StepCheckReport:
    """Check the step inequality (1+x)^{2/3} >= 1 + c*x of the induction.

    c = 2B/(3(B+eps0)) + eps1*(r-k2) with eps1 = eps0/(3(B+eps0)(k-k2)) and
    x = delta_step/(r-k2).  Also bisects (to 1e-6 in delta) for the largest
    step size for which the inequality still holds at this r.
    """
    if delta_step <= 0:
        raise DomainError(f"delta_step must be positive, got {delta_step}")
    with _wp():
        k0 = k0_theta(float(params.theta))
        if r < float(k0) - 1e-12:
            raise RangeError(f"r must be >= k0(theta) = {float(k0):.6f}, got {r}")
        if r > params.k + 1e-12:
            raise RangeError(f"r must be <= k = {params.k}, got {r}")
        B = mp.mpf(params.B)
        eps0 = mp.mpf(params.eps0)
        k2 = k2_theta(params.theta, params.B, params.eps0)
        gap_k = mp.mpf(params.k) - k2
        gap_r = mp.mpf(r) - k2
        eps1 = eps0 / (3 * (B + eps0) * gap_k)
        c = 2 * B / (3 * (B + eps0)) + eps1 * gap_r
        x = mp.mpf(delta_step) / gap_r

        def g(xx):
            return (1 + xx) ** (mp.mpf(2) / 3) - 1 - c * xx

        holds = g(x) >= 0
        # largest admissible step: g(x) >= 0 on (0, x*]; bisect for x*
        if c >= mp.mpf(2) / 3:
            delta_max = mp.mpf(0)
        else:
            hi = mp.mpf(1)
            while g(hi) > 0 and hi < mp.mpf(2) ** 80:
                hi *= 2
            lo = mp.mpf(0)
            tol = mp.mpf("1e-6") / gap_r  # 1e-6 in delta units
            while hi - lo > tol:
                mid = (lo + hi) / 2
                if g(mid) >= 0:
                    lo = mid
                else:
                    hi = mid
            delta_max = lo * gap_r
        return StepCheckReport(holds=bool(holds), c=float(c), x=float(x),
                               delta_max=float(delta_max), eps1=float(eps1))


# ---------------------------------------------------------------------------
# balanced exponents from the contour split
# ---------------------------------------------------------------------------

def _f_balance(sigma, k, params: ExponentParams):
    """(1-sigma) / (1 + B(k - m0(sigma))(1-sigma)^{3/2}) at work precision."""
    B = mp.mpf(params.B)
    m0 = mp.mpf(m0_sigma(float(sigma), params))
    s = mp.mpf(sigma)
    return (1 - s) / (1 + B * (k - m0) * (1 - s) ** mp.mpf("1.5"))


def optimal_beta_thm2(k: int, params: ExponentParams) -> BalancedExponent:
    """Balance x^beta against x/T: beta = 1 - ((2 - 4B/(3(B+eps0)))/(B(k-2k2)))^{2/3}.

    Verifies that beta maximises the balancing function f on a local grid
    (f(beta +- 1e-4) <= f(beta) + 1e-10) and that m0(beta) <= k.
    """
    with _wp():
        k0 = k0_theta(float(params.theta))
        if k < 2 * float(k0):
            raise RangeError(
                f"balanced exponent needs k >= 2*k0(theta) = {2 * float(k0):.6f}, "
                f"got k={k}")
        B = mp.mpf(params.B)
        eps0 = mp.mpf(params.eps0)
        k2 = k2_theta(params.theta, params.B, params.eps0)
        numer = 2 - 4 * B / (3 * (B + eps0))
        beta = 1 - (numer / (B * (k - 2 * k2))) ** (mp.mpf(2) / 3)
        thr = m0_validity_threshold(params)
        if float(beta) < thr - 1e-14:
            raise RangeError(
                f"balanced beta {float(beta):.6f} below m0 validity threshold "
                f"{thr:.6f}; increase k")
        m0b = m0_sigma(float(beta), params)
        if m0b > k + 1e-9:
            raise RangeError(f"m0(beta) = {m0b:.6f} exceeds k = {k}")
        fb = _f_balance(beta, k, params)
        for off in (mp.mpf("-1e-4"), mp.mpf("1e-4")):
            s = beta + off
            if float(s) < thr or m0_sigma(float(s), params) > k:
                continue
            if _f_balance(s, k, params) > fb + mp.mpf("1e-10"):
                raise SelfCheckError(
                    f"balancing function not maximised at beta={float(beta)}")
        return BalancedExponent(beta=float(beta), f_beta=float(fb),
                                final_exponent=float(1 - fb), m0_at_beta=float(m0b))


def beta_k_exponent(sigma: float, k: int, params: ExponentParams,
                    check_range: bool = True) -> float:
    """Dyadic mean-square exponent -1 + B(1-sigma)^{3/2}(2k - m0(sigma)).

    Negative values mean the weighted 2k-th moment integral converges at
    this sigma.  Computed directly through m0.

    With ``check_range=False`` the formula is continued below the m0
    validity threshold (= theta).  Its zero there reproduces the closed-form
    mean-square threshold; certifying the underlying moment bound at such a
    sigma requires re-choosing theta <= sigma.
    """
    if check_range:
        m0 = m0_sigma(sigma, params)  # validates the sigma range
    else:
        if sigma >= 1:
            raise DomainError(f"sigma must be below 1, got {sigma}")
        m0 = _m0_formula(sigma, params)
    if m0 > 2 * k + 1e-9:
        raise RangeError(f"m0(sigma) = {m0:.6f} exceeds 2k = {2 * k}")
    with _wp():
        B = mp.mpf(params.B)
        s = mp.mpf(sigma)
        return float(-1 + B * (1 - s) ** mp.mpf("1.5") * (2 * k - mp.mpf(m0)))


# ---------------------------------------------------------------------------
# exact piecewise exponential-sum exponent
# ---------------------------------------------------------------------------

def rho_node(k: int) -> Fraction:
    """Regime node rho_k = (k^2 + 1)/(k + 1)."""
    return Fraction(k * k + 1, k + 1)


def phi_piece_for_index(k: int) -> PhiPiece:
    """Exact-rational affine piece on [rho_{k-1}, rho_k], k >= 2."""
    if k < 2:
        raise DomainError(f"piece index must be >= 2, got {k}")
    A = Fraction(2, (k - 1) ** 2 * (k + 2))
    Bc = Fraction(-(3 * k * k - 3 * k + 2), k * (k - 1) ** 2 * (k + 2))
    c = Fraction((k * k + 1) ** 2, k * (k + 1) ** 3)
    return PhiPiece(k_index=k, rho_lo=rho_node(k - 1), rho_hi=rho_node(k),
                    A=A, Bcoef=Bc, c=c)


def phi_piece(rho) -> tuple[Fraction, PhiPiece]:
    """Exact value of the piecewise bound phi at rho >= 1 and its piece.

    phi(rho) = A_k*rho + B_k on [rho_{k-1}, rho_k]; at a node either
    adjacent piece gives the same value.
    """
    r = Fraction(rho) if isinstance(rho, (int, Fraction, str)) else Fraction(float(rho))
    if r < 1:
        raise DomainError(f"rho must be >= 1, got {rho}")
    k = max(2, int(r) )
    while rho_node(k) < r:
        k += 1
    while k > 2 and rho_node(k - 1) > r:
        k -= 1
    piece = phi_piece_for_index(k)
    return piece.A * r + piece.Bcoef, piece


def refined_exponent(rho):
    """Savings exponent (1 - 3/rho)/rho^2; non-positive below rho = 3.

    The exponential-sum bound reads N^{1 - refined + eps}; below rho = 3 the
    trivial bound applies.  Fraction input follows an exact rational path.
    """
    if isinstance(rho, (int, Fraction)):
        r = Fraction(rho)
        if r <= 0:
            raise DomainError(f"rho must be positive, got {rho}")
        return (1 - Fraction(3) / r) / r ** 2
    r = float(rho)
    if r <= 0:
        raise DomainError(f"rho must be positive, got {rho}")
    with _wp():
        rm = mp.mpf(r)
        return float((1 - 3 / rm) / rm ** 2)


def hb_exponent(rho):
    """Comparison exponent (49/80)/rho^2."""
    if isinstance(rho, (int, Fraction)):
        r = Fraction(rho)
        if r <= 0:
            raise DomainError(f"rho must be positive, got {rho}")
        return Fraction(49, 80) / r ** 2
    r = float(rho)
    if r <= 0:
        raise DomainError(f"rho must be positive, got {rho}")
    return 49.0 / 80.0 / r ** 2


REFINED_HB_CROSSOVER = Fraction(240, 31)  # where 1 - 3/rho = 49/80 exactly


def ck_inequality_scan(k_max: int, samples_per_interval: int = 10) -> ScanReport:
    """Exact-integer verification, for k = 2..k_max, of
    (i) c_k strictly monotone in the direction the piecewise comparison
    needs (c_{k+1} > c_k, so that -c_{k+1} rho^{-2} <= -c_k rho^{-2}),
    (ii) c_k > 1 - 3/rho_{k+1}, and
    (iii) phi(rho) <= -c_k * rho^{-2} at sample points of [rho_k, rho_{k+1}].

    All comparisons are cross-multiplied integer comparisons; no rounding.
    """
    if k_max < 2:
        raise DomainError(f"k_max must be >= 2, got {k_max}")
    s = samples_per_interval - 1
    for k in range(2, k_max + 1):
        # c_k = mu/nu
        mu = (k * k + 1) ** 2
        nu = k * (k + 1) ** 3
        # (i) c_{k+1} > c_k
        mu1 = ((k + 1) ** 2 + 1) ** 2
        nu1 = (k + 1) * (k + 2) ** 3
        if not mu1 * nu > mu * nu1:
            return ScanReport(False, k_max, (k, "c_k not increasing"))
        # (ii) c_k > 1 - 3/rho_{k+1} = (k^2 - k - 4)/((k+1)^2 + 1)
        den = (k + 1) ** 2 + 1
        if not mu * den > (k * k - k - 4) * nu:
            return ScanReport(False, k_max, (k, "c_k <= 1 - 3/rho_{k+1}"))
        # (iii) on [rho_k, rho_{k+1}] the active piece has index k+1:
        #   A = 2/alpha, Bcoef = -beta/((k+1)*alpha), alpha = k^2 (k+3)
        alpha = k * k * (k + 3)
        beta = 3 * k * k + 3 * k + 2
        n1, d1 = k * k + 1, k + 1
        n2, d2 = (k + 1) ** 2 + 1, k + 2
        D9 = s * d1 * d2
        step = n2 * d1 - n1 * d2
        base = s * n1 * d2
        for j in range(s + 1):
            N = base + j * step  # rho = N/D9
            # A rho^3 + Bcoef rho^2 + c_k <= 0, multiplied up by
            # D9^3 * alpha * (k+1) * nu > 0:
            lhs = 2 * (k + 1) * nu * N ** 3 - beta * nu * N * N * D9 \
                + mu * alpha * (k + 1) * D9 ** 3
            if lhs > 0:
                return ScanReport(False, k_max,
                                  (k, f"phi above -c_k/rho^2 at sample {j}"))
    return ScanReport(True, k_max, None)


# ---------------------------------------------------------------------------
# cubic maximisers for the moment and pointwise zeta bounds
# ---------------------------------------------------------------------------

def _select_local_max(h, roots: Sequence[float], lo: float, hi: float,
                      dd_h) -> Optional[float]:
    """Largest stationary point in [lo, hi] that is a local maximum of h."""
    cands = [r for r in roots if lo <= r <= hi and dd_h(r) < 0]
    return max(cands) if cands else None


def moment_h_max(k: int, alpha: float) -> CubicMax:
    """Maximise the dyadic moment exponent
    h(rho) = 2*alpha*k^{1/3}/rho - 2(k+4)/rho^3 + 6(k+1)/rho^4 + 2/rho^2 + 2/rho
    over [2, k] at its interior stationary point.

    Stationary points solve (alpha*k^{1/3}+1) rho^3 + 2 rho^2 - 3(k+4) rho
    + 12(k+1) = 0; the admissible maximiser is the larger positive root
    (second-order test), confirmed and refined by golden section.  Both
    roots are recorded.  Without an admissible stationary point the larger
    endpoint is returned with ``used_endpoint=True``.
    """
    if k < 2:
        raise DomainError(f"k must be >= 2, got {k}")
    if not alpha > 0:
        raise DomainError(f"alpha must be positive, got {alpha}")
    a13 = alpha * k ** (1.0 / 3.0)

    def h(r):
        return (2 * a13 / r - 2 * (k + 4) / r ** 3 + 6 * (k + 1) / r ** 4
                + 2 / r ** 2 + 2 / r)

    def ddh(r):
        return (4 * a13 / r ** 3 - 24 * (k + 4) / r ** 5
                + 120 * (k + 1) / r ** 6 + 12 / r ** 4 + 4 / r ** 3)

    roots = real_cubic_roots(a13 + 1.0, 2.0, -3.0 * (k + 4), 12.0 * (k + 1))
    pos = tuple(r for r in roots if r > 0)
    star = _select_local_max(h, pos, 2.0, float(k), ddh)
    if star is None:
        lo, hi = 2.0, float(k)
        r0, h0 = (lo, h(lo)) if h(lo) >= h(hi) else (hi, h(hi))
        return CubicMax(rho_star=r0, h_star=h0, stationary_points=pos,
                        used_endpoint=True)
    below = [r for r in pos if r < star]
    lo = max(2.0, below[-1] * 1.000001 if below else 2.0)
    hi = min(float(k), star * 1.5 + 1.0)
    star, hstar = golden_max(h, max(lo, star * 0.5), hi, xtol=1e-10 * star)
    return CubicMax(rho_star=star, h_star=hstar, stationary_points=pos,
                    used_endpoint=False)


def moment_h_limit(alpha: float) -> mp.mpf:
    """Large-k limit (4/sqrt(27)) * alpha^{3/2} of the moment maximiser value."""
    with _wp():
        return 4 / mp.sqrt(27) * mp.mpf(alpha) ** mp.mpf("1.5")


def zeta_h_max(k: int, alpha: float) -> CubicMax:
    """Maximise h(rho) = alpha*k^{-2/3}/rho - (1 - 3/rho)/rho^3 over rho >= 3
    at its interior stationary point.

    Stationary points solve alpha*k^{-2/3} rho^3 - 3 rho + 12 = 0; the local
    maximum is the larger positive root.  ``limit_ratio`` records
    k*h_star / (2*alpha^{3/2}/3^{3/2}) as a diagnostic against the large-k
    value of the pointwise zeta exponent.
    """
    if k < 2:
        raise DomainError(f"k must be >= 2, got {k}")
    if not alpha > 0:
        raise DomainError(f"alpha must be positive, got {alpha}")
    a = alpha * k ** (-2.0 / 3.0)
    if not a < 0.5:
        raise RangeError(
            f"need alpha*k^(-2/3) < 1/2 for an interior maximiser, got {a:.4f}")

    def h(r):
        return a / r - (1 - 3 / r) / r ** 3

    def ddh(r):
        return 2 * a / r ** 3 - 12 / r ** 5 + 60 / r ** 6

    roots = real_cubic_roots(a, 0.0, -3.0, 12.0)
    pos = tuple(r for r in roots if r > 0)
    limit = float(2 * mp.mpf(alpha) ** mp.mpf("1.5") / mp.mpf(27) ** mp.mpf("0.5"))
    star = _select_local_max(h, pos, 3.0, math.inf, ddh)
    if star is None:
        return CubicMax(rho_star=3.0, h_star=h(3.0), stationary_points=pos,
                        used_endpoint=True, limit_ratio=k * h(3.0) / limit)
    below = [r for r in pos if r < star]
    lo = below[-1] * 1.000001 if below else 3.0
    star, hstar = golden_max(h, max(3.0, lo), star * 1.5, xtol=1e-12 * star)
    return CubicMax(rho_star=star, h_star=hstar, stationary_points=pos,
                    used_endpoint=False, limit_ratio=k * hstar / limit)


# ---------------------------------------------------------------------------
# large-k exponent from the refined exponential-sum route
# ---------------------------------------------------------------------------

def _m1_formula(sigma, delta):
    """2*(3/2^{4/3} - delta)^{3/2} * (1-sigma)^{-3/2} at work precision."""
    s = mp.mpf(sigma)
    d = mp.mpf(delta)
    base = 3 / 2 ** (mp.mpf(4) / 3) - d
    if base <= 0:
        raise DomainError(f"delta too large: 3/2^(4/3) - delta <= 0 at delta={delta}")
    return 2 * base ** mp.mpf("1.5") * (1 - s) ** mp.mpf("-1.5")


def m1_sigma(sigma: float, delta: float, A: float = 1.0) -> float:
    """Moment-order bound 2*(3/2^{4/3} - delta)^{3/2}(1-sigma)^{-3/2}.

    Validity sigma >= 1 - A*delta^2 is calibration (A configurable, default
    1), not certified.  delta = 0 is accepted as a formal limit with the
    range check waived (the threshold degenerates to sigma >= 1).
    """
    if sigma >= 1:
        raise DomainError(f"sigma must be below 1, got {sigma}")
    if delta < 0:
        raise DomainError(f"delta must be non-negative, got {delta}")
    if delta > 0:
        thr = 1 - A * delta ** 2
        if sigma < thr - 1e-14:
            raise RangeError(
                f"m1 needs sigma >= 1 - A*delta^2 = {thr:.12f} "
                f"(calibration constant A={A}), got {sigma}")
    with _wp():
        return float(_m1_formula(sigma, delta))


def thm3_exponent(k: int, delta: float, A: float = 1.0) -> LargeKExponent:
    """Large-k pointwise exponent from the refined exponential-sum bound.

    beta = 1 - (3/2^{2/3} - 2^{2/3}*delta) k^{-2/3} (which makes m1(beta)=k),
    f_beta = (1-beta)/(1+delta), final exponent 1 - f_beta.  The k-range
    requirement k >= A*delta^{-3} is calibration, not certified.

    A certified floor f_beta >= (C - (C + 2^{2/3})*delta) k^{-2/3} with
    C = 3/2^{2/3} is asserted (tangent-line bound, exact for all delta>0);
    whether the steeper floor with constant 3 also holds is recorded in
    ``floor3_holds`` (it fails for delta < (C + 2^{2/3} - 3)/3 ~ 0.159).
    """
    if not delta > 0:
        raise DomainError(f"delta must be positive, got {delta}")
    if k < A * delta ** -3:
        raise RangeError(
            f"needs k >= A*delta^-3 = {A * delta ** -3:.6g} "
            f"(calibration constant A={A}), got k={k}")
    with _wp():
        d = mp.mpf(delta)
        C = 3 / 2 ** (mp.mpf(2) / 3)
        k23 = mp.mpf(k) ** (-mp.mpf(2) / 3)
        one_minus_beta = (C - 2 ** (mp.mpf(2) / 3) * d) * k23
        if one_minus_beta <= 0:
            raise DomainError(f"delta={delta} too large for a positive savings")
        beta = 1 - one_minus_beta
        m1b = _m1_formula(beta, delta)
        if m1b > k * (1 + mp.mpf("1e-12")):
            raise RangeError(f"m1(beta) = {float(m1b):.6f} exceeds k = {k}")
        f_beta = one_minus_beta / (1 + d)
        tangent_floor = (C - (C + 2 ** (mp.mpf(2) / 3)) * d) * k23
        if f_beta < tangent_floor:
            raise SelfCheckError("certified tangent floor violated")  # unreachable
        floor3 = bool(f_beta > (C - 3 * d) * k23)
        return LargeKExponent(
            beta=float(beta),
            f_beta=float(f_beta),
            final_exponent=float(1 - f_beta),
            karatsuba_constant=float(f_beta / k23),
            m1_at_beta=float(m1b),
            floor3_holds=floor3,
        )


def large_k_constant() -> mp.mpf:
    """Limiting Karatsuba constant 3/2^{2/3} = 1.8898... of the refined route."""
    with _wp():
        return 3 / 2 ** (mp.mpf(2) / 3)


# reporting conventions for published constants ------------------------------

def report_karatsuba(D) -> float:
    """Round a Karatsuba constant down at 3 decimals (weakens the claim)."""
    return round_down(float(D), 3)


def report_exponent(a) -> float:
    """Round a bound exponent up at 5 decimals (weakens the claim)."""
    return round_up(float(a), 5)


def report_subtracted_threshold(c) -> float:
    """Round a subtracted constant like 2*k1 down at 2 decimals."""
    return round_down(float(c), 2)


def report_k_threshold(x) -> int:
    """Round a k-range threshold up to the next integer."""
    return int(math.ceil(float(x) - 1e-12))
