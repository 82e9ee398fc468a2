"""Adaptive quadrature on (0, oo) in logarithmic time.

All unbounded integrals in this package share the same structure: a smooth
integrand with power-law behaviour at 0 and (stretched-)exponential decay at
infinity, possibly spread over many decades.  Substituting t = e^u turns the
range into a finite interval that an adaptive Gauss-Kronrod rule resolves
scale by scale, so no global fine grid is ever needed.
"""

from __future__ import annotations

import math
import warnings

from scipy.integrate import IntegrationWarning, quad

from .errors import NumericalError

DEFAULT_TOL = 1e-10


def log_quad(f, t_lo: float, t_hi: float, *, tol: float = DEFAULT_TOL,
             limit: int = 800, points=None, strict: bool = True) -> float:
    """Integrate ``f(t) dt`` over ``[t_lo, t_hi]`` via the u = log t substitution.

    `points` lists interior t-values (e.g. kinks of |f|) passed to the
    adaptive rule as mandatory break points.  With ``strict`` the reported
    quadrature error must meet `tol` (absolutely or relatively), otherwise a
    NumericalError carries the partial result.
    """
    if not (0.0 < t_lo < t_hi):
        raise ValueError(f"need 0 < t_lo < t_hi, got [{t_lo}, {t_hi}]")

    def g(u):
        t = math.exp(u)
        return f(t) * t

    u_points = [math.log(p) for p in points] if points else None
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", IntegrationWarning)
        val, err = quad(g, math.log(t_lo), math.log(t_hi),
                        epsabs=tol, epsrel=max(tol, 1e-11),
                        limit=limit, points=u_points)
    if not math.isfinite(val):
        raise NumericalError("quadrature diverged", t_lo=t_lo, t_hi=t_hi, value=val)
    if strict and err > max(tol * 100.0, abs(val) * 1e-7):
        raise NumericalError("quadrature error estimate above target",
                             value=val, error=err, tol=tol)
    return val


def half_line_quad(f, *, scale: float = 1.0, decades: float = 16.0,
                   tol: float = DEFAULT_TOL, limit: int = 800,
                   points=None, strict: bool = True) -> float:
    """Integrate ``f(t) dt`` over (0, oo) for integrands localized around `scale`.

    The bracket spans `decades` decades on each side of `scale`; the
    integrands used here vanish fast enough that the truncated mass is far
    below `tol`.
    """
    t_lo = scale * 10.0 ** (-decades)
    t_hi = scale * 10.0 ** (decades)
    return log_quad(f, t_lo, t_hi, tol=tol, limit=limit, points=points,
                    strict=strict)
