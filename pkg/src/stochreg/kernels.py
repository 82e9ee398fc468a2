"""Scalar kernel calculus on sectors.

Implements the kernel k_alpha of the sector Poisson formula, its weighted
variant k_{alpha,theta}, kernel-class seminorms, reconstruction of bounded
analytic functions from their values on the rays arg z = +-alpha, and the
per-eigenvalue identity that drives the weighted regularity estimate.

Sign convention: both ray integrals of the Poisson reconstruction carry the
coefficient +1/(2 alpha).  This is forced by the half-plane Poisson formula
under the substitution z -> z^(2 alpha / pi) and by the mass normalization
int_0^oo k_alpha(u, s) du = alpha (so f == 1 reconstructs to 1).  The
alternating-sign variant reconstructs 0 and is rejected by a unit test.

Complex arithmetic stays inside this module; exported values are real with
an explicit imaginary-residue check.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy.integrate import quad

from .errors import NumericalError, ValidationError
from .quadrature import log_quad

_IMAG_TOL = 1e-12


def eval_kernel_alpha(u: float, t: float, alpha: float) -> float:
    """k_alpha(u, t) = (t/u)^(pi/2a) / ((t/u)^(pi/a) + 1) / u."""
    _check_alpha(alpha)
    if u <= 0.0 or t <= 0.0:
        raise ValidationError(f"kernel arguments must be positive, got u={u}, t={t}")
    c = math.pi / (2.0 * alpha)
    # evaluate through the log of the ratio to stay finite over many decades
    rho = c * (math.log(t) - math.log(u))
    # (e^rho)/(e^{2 rho} + 1) = 1/(2 cosh(rho))
    return 1.0 / (2.0 * math.cosh(rho) * u)


def eval_kernel_alpha_theta(u: float, t: float, alpha: float, theta: float) -> float:
    """k_{alpha,theta}(u, t) = sqrt(u) (u/t)^theta k_alpha(u, t)."""
    if not (0.0 <= theta <= 1.0):
        raise ValidationError(f"theta must lie in [0,1], got {theta}")
    return math.sqrt(u) * (u / t) ** theta * eval_kernel_alpha(u, t, alpha)


def _check_alpha(alpha: float, upper: float = math.pi) -> None:
    if not (0.0 < alpha < upper):
        raise ValidationError(f"alpha must lie in (0, {upper:.6f}), got {alpha}")


@dataclass(frozen=True)
class KernelFn:
    """A scalar kernel with its derivative and a decay-at-infinity flag."""

    func: Callable[[float], float]
    deriv: Callable[[float], float]
    decays: bool = True

    def __call__(self, t):
        return self.func(t)

    def check_derivative(self, rng: np.random.Generator, n_points: int = 8,
                         rel_tol: float = 1e-6) -> bool:
        """Finite-difference spot check of `deriv` against `func`."""
        ts = rng.uniform(0.2, 5.0, n_points)
        h = 1e-6
        for t in ts:
            fd = (self.func(t + h) - self.func(t - h)) / (2.0 * h)
            if abs(fd - self.deriv(t)) > rel_tol * max(1.0, abs(self.deriv(t))):
                return False
        return True


def exponential_kernel(scale: float = 1.0) -> KernelFn:
    return KernelFn(func=lambda t: scale * math.exp(-t),
                    deriv=lambda t: -scale * math.exp(-t))


def kclass_seminorm(kernel: KernelFn, *, tol: float = 1e-10) -> tuple[float, bool]:
    """int_0^oo sqrt(t) |k'(t)| dt and membership in the kernel class.

    Membership requires the seminorm <= 1 together with decay at infinity.
    A divergent quadrature is reported as non-membership via NumericalError.
    """
    try:
        value = log_quad(lambda t: math.sqrt(t) * abs(kernel.deriv(t)),
                         1e-14, 1e14, tol=tol, strict=False)
        check = log_quad(lambda t: math.sqrt(t) * abs(kernel.deriv(t)),
                         1e-16, 1e16, tol=tol, strict=False)
    except Exception as exc:  # quadrature blow-up => not integrable
        raise NumericalError("kernel-class seminorm quadrature diverged",
                             reason=str(exc)) from exc
    if not math.isfinite(value) or abs(check - value) > max(100 * tol, 1e-8 * abs(value)):
        raise NumericalError("kernel-class seminorm did not stabilize under "
                             "bracket widening", value=value, widened=check)
    return value, bool(value <= 1.0 and kernel.decays)


def kalpha_theta_time_seminorm(alpha: float, theta: float, *, u: float = 1.0,
                               tol: float = 1e-10) -> float:
    """sup_u int sqrt(t) |d_t k_{alpha,theta}(u, t)| dt, computed at one u.

    d_t k_{alpha,theta}(u,t) = u^{-3/2} h'(t/u) with
    h(x) = x^{pi/2a - theta} / (x^{pi/a} + 1), so the substitution t = u x
    makes the integral u-independent; `u` is exposed to let tests verify it.
    """
    _check_alpha(alpha, math.pi)
    if not (0.0 <= theta <= 1.0):
        raise ValidationError(f"theta must lie in [0,1], got {theta}")
    c = math.pi / (2.0 * alpha)
    if c - theta <= 0.0:
        raise ValidationError(f"need pi/(2 alpha) - theta > 0, got {c - theta}")

    def deriv(t):
        x = t / u
        hp = x ** (c - theta - 1.0) * ((c - theta) - (c + theta) * x ** (2.0 * c)) \
            / (x ** (2.0 * c) + 1.0) ** 2
        return u ** (-1.5) * hp

    root = u * ((c - theta) / (c + theta)) ** (1.0 / (2.0 * c))  # sign change of h'
    return log_quad(lambda t: math.sqrt(t) * abs(deriv(t)),
                    u * 1e-14, u * 1e14, tol=tol, points=[root])


@dataclass(frozen=True)
class SectorFunction:
    """A bounded analytic function on a sector, evaluated at complex points.

    Only the values on the two rays arg z = +-alpha and on the positive axis
    are ever requested.  `conjugate_symmetric` marks functions real on R_+,
    for which f(conj z) = conj f(z).
    """

    func: Callable[[complex], complex]
    conjugate_symmetric: bool = True

    def __call__(self, z: complex) -> complex:
        return self.func(z)

    def check_conjugate_symmetry(self, points, tol: float = 1e-12) -> bool:
        if not self.conjugate_symmetric:
            return True
        for z in points:
            if abs(self.func(np.conj(z)) - np.conj(self.func(z))) > tol:
                return False
        return True


def poisson_reconstruct(f: SectorFunction, s: float, alpha: float, *,
                        ray_signs: tuple[float, float] = (1.0, 1.0),
                        tol: float = 1e-10) -> float:
    """Reconstruct f(s) from its ray values through the k_alpha kernel.

    f(s) = sum_{j = +-1} (1 / 2 alpha) int_0^oo k_alpha(u, s) f(u e^{i j alpha}) du.
    `ray_signs` multiplies the (j=+1, j=-1) ray coefficients and exists so the
    rejected alternating-sign variant can be demonstrated.
    """
    _check_alpha(alpha, math.pi / 2.0)
    if s <= 0.0:
        raise ValidationError(f"reconstruction point must be positive, got {s}")

    phase_p = complex(math.cos(alpha), math.sin(alpha))
    phase_m = phase_p.conjugate()

    def integrand(u):
        k = eval_kernel_alpha(u, s, alpha)
        val = ray_signs[0] * f(u * phase_p) + ray_signs[1] * f(u * phase_m)
        return k * val

    c = math.pi / (2.0 * alpha)
    decades = min(15.0 / c + 2.0, 18.0)
    t_lo = s * 10.0 ** (-decades)
    t_hi = s * 10.0 ** decades
    total = _complex_log_quad(integrand, t_lo, t_hi, tol=tol) / (2.0 * alpha)
    return _real_part(total, "poisson_reconstruct")


def _complex_log_quad(f, t_lo, t_hi, *, tol) -> complex:
    re = log_quad(lambda t: f(t).real, t_lo, t_hi, tol=tol)
    im = log_quad(lambda t: f(t).imag, t_lo, t_hi, tol=tol, strict=False)
    return complex(re, im)


def _real_part(z: complex, where: str) -> float:
    if abs(z.imag) > _IMAG_TOL * max(1.0, abs(z.real)):
        raise NumericalError(f"{where} produced a non-real value",
                             value=z, imag_tol=_IMAG_TOL)
    return z.real


def scalar_V(u: float, lam: float, theta: float, alpha: float) -> float:
    """Per-eigenvalue value of the ray-sum operator V(u).

    V(u) = (1/Gamma(1-theta)) sum_{j=+-1} (1/2 alpha) phi_j(u lam)^2 with
    phi_j(z) = z^{1/4 - theta/2} exp(-z e^{i j alpha} / 2); the two ray terms
    are conjugate, so the sum is real:
    (u lam)^{1/2-theta} cos(u lam sin a) e^{-u lam cos a} / (alpha Gamma(1-theta)).
    """
    _check_alpha(alpha, math.pi / 2.0)
    if u <= 0.0 or lam <= 0.0:
        raise ValidationError(f"need u, lam > 0, got u={u}, lam={lam}")
    if not (0.0 <= theta < 0.5):
        raise ValidationError(f"theta must lie in [0, 1/2), got {theta}")
    x = u * lam
    phi_sq_p = x ** (0.5 - theta) * np.exp(-x * complex(math.cos(alpha), math.sin(alpha)))
    phi_sq_m = np.conj(phi_sq_p)
    total = (phi_sq_p + phi_sq_m) / (2.0 * alpha * math.gamma(1.0 - theta))
    return _real_part(complex(total), "scalar_V")


def spoisson_identity_check(lam: float, t: float, theta: float, alpha: float,
                            *, tol: float = 1e-10) -> tuple[float, float, float]:
    """Check the per-eigenvalue ray representation of the weighted semigroup.

    lhs = t^{-theta} lam^{1/2-theta} e^{-lam t} / Gamma(1-theta)
    rhs = int_0^oo k_{alpha,theta}(u, t) V(u) du/u  (V as in scalar_V).
    Returns (lhs, rhs, |lhs - rhs|).
    """
    if lam <= 0.0 or t <= 0.0:
        raise ValidationError(f"need lam, t > 0, got lam={lam}, t={t}")
    if not (0.0 <= theta < 0.5):
        raise ValidationError(f"theta must lie in [0, 1/2), got {theta}")
    _check_alpha(alpha, math.pi / 2.0)

    lhs = t ** (-theta) * lam ** (0.5 - theta) * math.exp(-lam * t) \
        / math.gamma(1.0 - theta)

    def integrand(u):
        return eval_kernel_alpha_theta(u, t, alpha, theta) \
            * scalar_V(u, lam, theta, alpha) / u

    scale = math.sqrt(t / lam)  # geometric middle of the two decay scales
    dec = 15.0 + abs(math.log10(max(t * lam, 1.0 / (t * lam))))
    rhs = log_quad(integrand, scale * 10.0 ** (-dec), scale * 10.0 ** dec,
                   tol=tol * max(lhs, 1e-3))
    return lhs, rhs, abs(lhs - rhs)


def hinf_square_constant(phi: Callable[[float], float], *,
                         lam_samples=(0.1, 1.0, 10.0), tol: float = 1e-10,
                         invariance_tol: float = 1e-10) -> float:
    """c_phi = ( int_0^oo |phi(t)|^2 dt/t )^{1/2} for phi in H^oo_0.

    Also verifies the substitution invariance int |phi(t lam)|^2 dt/t = c_phi^2
    at the sampled lam; failure there indicates the quadrature bracket missed
    mass, i.e. phi is not admissible numerically.
    """
    def sq(lam, decades=14.0):
        return log_quad(lambda t: abs(phi(t * lam)) ** 2 / t,
                        10.0 ** (-decades), 10.0 ** decades, tol=tol)

    c2 = sq(1.0)
    if not math.isfinite(c2) or c2 < 0.0:
        raise NumericalError("square-function integral diverged", value=c2)
    widened = sq(1.0, decades=16.0)
    if abs(widened - c2) > max(100.0 * tol, 1e-9 * abs(c2)):
        raise NumericalError("square-function integral did not stabilize under "
                             "bracket widening; phi outside H^oo_0 numerically",
                             value=c2, widened=widened)
    for lam in lam_samples:
        if abs(sq(lam) - c2) > max(invariance_tol, 1e-9 * c2):
            raise NumericalError("square-function integral is not dilation "
                                 "invariant; phi outside H^oo_0 numerically",
                                 lam=lam, value=sq(lam), reference=c2)
    return math.sqrt(c2)


def kernel_alpha_mass(s: float, alpha: float, *, tol: float = 1e-10) -> float:
    """int_0^oo k_alpha(u, s) du; equals alpha for every s (Beta integral)."""
    _check_alpha(alpha, math.pi / 2.0)
    return log_quad(lambda u: eval_kernel_alpha(u, s, alpha),
                    s * 1e-15, s * 1e15, tol=tol)
