"""Small numerical building blocks: golden-section search, bracketing,
cubic root finding, directed decimal rounding, and a self-checking
composite Gauss-Legendre integrator for oscillatory float integrands.
"""

from __future__ import annotations

import math
from fractions import Fraction
from typing import Callable, Sequence

import numpy as np

from .errors import BracketError, QuadratureError

INV_PHI = (math.sqrt(5.0) - 1.0) / 2.0  # 1/phi
INV_PHI2 = (3.0 - math.sqrt(5.0)) / 2.0  # 1/phi^2


def golden_max(f: Callable, a, b, xtol=1e-10, maxiter=200):
    """Golden-section search for the maximum of a unimodal f on [a, b].

    Returns (x_star, f(x_star)).  Works with floats or mpmath mpfs; the
    caller guarantees unimodality (see bracket_max).
    """
    if not a < b:
        raise BracketError(f"empty bracket [{a}, {b}]")
    h = b - a
    c = a + INV_PHI2 * h
    d = a + INV_PHI * h
    yc = f(c)
    yd = f(d)
    for _ in range(maxiter):
        if h <= xtol:
            break
        h = INV_PHI * h
        if yc > yd:
            b, d, yd = d, c, yc
            c = a + INV_PHI2 * h
            yc = f(c)
        else:
            a, c, yc = c, d, yd
            d = a + INV_PHI * h
            yd = f(d)
    if yc > yd:
        return c, yc
    return d, yd


def bracket_max(f: Callable, a, b, n: int = 1000):
    """Locate a bracket around the maximum of f on [a, b] by an n-point scan.

    Returns (lo, hi) such that the grid maximum is interior to (lo, hi).
    Raises BracketError when the scan maximum sits on the boundary (no
    interior maximum was bracketed).
    """
    if n < 3:
        raise BracketError("bracketing scan needs at least 3 points")
    xs = [a + (b - a) * i / (n - 1) for i in range(n)]
    ys = [f(x) for x in xs]
    i = max(range(n), key=ys.__getitem__)
    if i == 0 or i == n - 1:
        raise BracketError(
            f"scan maximum at boundary x={xs[i]}; no interior maximum in [{a}, {b}]"
        )
    return xs[i - 1], xs[i + 1]


def check_unimodal(f: Callable, lo, hi, samples: int = 33, rel_tol=1e-12) -> bool:
    """Sample f on [lo, hi] and verify a rise-then-fall (unimodal) pattern.

    Differences smaller than rel_tol * scale are treated as flat so that a
    numerically flat peak does not count as extra sign changes.
    """
    xs = [lo + (hi - lo) * i / (samples - 1) for i in range(samples)]
    ys = [f(x) for x in xs]
    scale = max(abs(y) for y in ys) or 1.0
    state = +1  # expect rising
    for y0, y1 in zip(ys, ys[1:]):
        d = y1 - y0
        if abs(d) <= rel_tol * scale:
            continue
        if d > 0:
            if state < 0:  # rose again after falling
                return False
        else:
            state = -1
    return True


def real_cubic_roots(c3: float, c2: float, c1: float, c0: float,
                     newton_steps: int = 3) -> list[float]:
    """Real roots of c3 x^3 + c2 x^2 + c1 x + c0, ascending, Newton-polished."""
    roots = np.roots([c3, c2, c1, c0])
    out = []
    for r in roots:
        if abs(r.imag) > 1e-8 * (1.0 + abs(r.real)):
            continue
        x = float(r.real)
        for _ in range(newton_steps):
            fx = ((c3 * x + c2) * x + c1) * x + c0
            dfx = (3.0 * c3 * x + 2.0 * c2) * x + c1
            if dfx == 0.0:
                break
            x -= fx / dfx
        out.append(x)
    return sorted(out)


def round_down(x, decimals: int) -> float:
    """Round x toward -inf at the given number of decimals (exact in Fraction)."""
    q = Fraction(10) ** decimals
    return float(math.floor(Fraction(float(x)) * q) / q)


def round_up(x, decimals: int) -> float:
    """Round x toward +inf at the given number of decimals (exact in Fraction)."""
    q = Fraction(10) ** decimals
    return float(math.ceil(Fraction(float(x)) * q) / q)


def oscillation_panel_width(max_phase_derivative: float) -> float:
    """Panel width sized by oscillation: at most 2*pi/(10 * phase derivative)."""
    f = max(max_phase_derivative, 1e-9)
    return 2.0 * math.pi / (10.0 * f)


def _gl_nodes(order: int):
    x, w = np.polynomial.legendre.leggauss(order)
    return x, w


def composite_gl(f_vec: Callable[[np.ndarray], np.ndarray], a: float, b: float,
                 panels: int, order: int = 8) -> float:
    """Composite Gauss-Legendre integral of a vectorised real integrand."""
    x, w = _gl_nodes(order)
    edges = np.linspace(a, b, panels + 1)
    lo = edges[:-1]
    half = 0.5 * (edges[1:] - lo)
    mid = lo + half
    # nodes laid out panel-major; evaluated in chunks to bound memory
    total = 0.0
    chunk = max(1, (1 << 20) // order)
    for i in range(0, panels, chunk):
        m = mid[i:i + chunk, None]
        h = half[i:i + chunk, None]
        pts = (m + h * x[None, :]).ravel()
        vals = f_vec(pts).reshape(-1, order)
        total += float(np.sum((vals @ w) * half[i:i + chunk]))
    return total


def integrate_selfchecked(f_vec: Callable[[np.ndarray], np.ndarray], a: float, b: float,
                          panels: int, order: int = 8, rel_tol: float = 0.01,
                          what: str = "integral") -> float:
    """Composite GL with a panel-doubling self-check.

    Returns the finer result; raises QuadratureError when doubling the panel
    count moves the value by more than rel_tol relatively.
    """
    coarse = composite_gl(f_vec, a, b, panels, order)
    fine = composite_gl(f_vec, a, b, 2 * panels, order)
    scale = max(abs(fine), abs(coarse), 1e-300)
    if abs(fine - coarse) > rel_tol * scale:
        raise QuadratureError(
            f"{what}: panel doubling moved the value by "
            f"{abs(fine - coarse) / scale:.3g} (> {rel_tol:g} relative), "
            f"panels={panels}->{2 * panels}"
        )
    return fine


def ols_slope(xs: Sequence[float], ys: Sequence[float]) -> tuple[float, float]:
    """Least-squares slope of ys against xs and its standard error."""
    x = np.asarray(xs, dtype=float)
    y = np.asarray(ys, dtype=float)
    n = len(x)
    if n < 2:
        raise ValueError("need at least two points for a slope")
    xm = x - x.mean()
    ym = y - y.mean()
    sxx = float(xm @ xm)
    if sxx == 0.0:
        raise ValueError("degenerate abscissae")
    slope = float(xm @ ym) / sxx
    resid = ym - slope * xm
    dof = max(n - 2, 1)
    stderr = math.sqrt(float(resid @ resid) / dof / sxx)
    return slope, stderr
