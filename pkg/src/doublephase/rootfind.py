"""Scalar root finding: geometric bracket expansion plus a bisection/secant hybrid.

All Luxemburg norms and fiber roots reduce to strictly monotone scalar
equations, so bracketing is robust and the hybrid never leaves its bracket.
"""
from __future__ import annotations

from typing import Callable

__all__ = ["BracketError", "expand_bracket", "hybrid_root"]


class BracketError(ArithmeticError):
    """Geometric expansion failed to bracket a sign change (non-monotone or degenerate map)."""


def expand_bracket(
    f: Callable[[float], float],
    start: float = 1.0,
    factor: float = 2.0,
    max_steps: int = 200,
) -> tuple[float, float, float, float]:
    """Bracket a sign change of ``f`` by geometric expansion from ``start``.

    Returns (lo, hi, f(lo), f(hi)) with f(lo) and f(hi) of opposite sign
    (one may be exactly zero).  Expands upward if f(start) > 0 requires it,
    downward otherwise, assuming f is decreasing; raises BracketError after
    ``max_steps`` doublings.
    """
    t = float(start)
    ft = f(t)
    if ft == 0.0:
        return t, t, 0.0, 0.0
    if ft > 0:
        lo, flo = t, ft
        for _ in range(max_steps):
            hi = lo * factor
            fhi = f(hi)
            if fhi <= 0:
                return lo, hi, flo, fhi
            lo, flo = hi, fhi
    else:
        hi, fhi = t, ft
        for _ in range(max_steps):
            lo = hi / factor
            flo = f(lo)
            if flo >= 0:
                return lo, hi, flo, fhi
            hi, fhi = lo, flo
    raise BracketError(f"no sign change within {max_steps} geometric steps from {start}")


def hybrid_root(
    f: Callable[[float], float],
    lo: float,
    hi: float,
    flo: float,
    fhi: float,
    abs_tol: float,
    max_iter: int = 200,
) -> float:
    """Root of ``f`` in [lo, hi] to residual |f| <= abs_tol.

    Secant steps when they stay safely inside the bracket, with a forced
    bisection whenever the bracket failed to halve (guards against the
    regula-falsi stagnation where one endpoint never moves).  Returns when
    the residual is met or the bracket reaches floating-point width.
    """
    if flo == 0.0:
        return lo
    if fhi == 0.0:
        return hi
    if flo < 0 < fhi:
        lo, hi, flo, fhi = hi, lo, fhi, flo
    if not (flo > 0 > fhi):
        raise ValueError("hybrid_root requires a sign-changing bracket")
    bisect_next = False
    for _ in range(max_iter):
        width = abs(hi - lo)
        t = 0.5 * (lo + hi)
        if not bisect_next:
            denom = flo - fhi
            if denom != 0.0:
                sec = lo + flo * (hi - lo) / denom
                if min(lo, hi) < sec < max(lo, hi):
                    t = sec
        ft = f(t)
        if abs(ft) <= abs_tol:
            return t
        if ft > 0:
            lo, flo = t, ft
        else:
            hi, fhi = t, ft
        # if the secant step barely shrank the bracket, bisect on the next pass
        bisect_next = abs(hi - lo) > 0.5 * width
        if abs(hi - lo) <= 4e-16 * max(abs(lo), abs(hi)):
            return 0.5 * (lo + hi)
    raise ArithmeticError(f"root refinement exhausted {max_iter} iterations")
