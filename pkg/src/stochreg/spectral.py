"""Diagonal and Fourier realizations of the operator A.

A SpectralModel holds a positive eigenvalue ladder for A together with the
space exponent q of the ambient L^q norm.  Three realizations are supported:

* plain diagonal: fields are mode-coefficient vectors, the norm is l^q over
  counting measure;
* fourier-torus(d, n, w): A = -Laplacian/2 + w on the n^d grid of the torus
  [0, 2pi)^d, fields are real grid values, the norm uses the normalized grid
  measure (weight n^-d), so exp(i m.x) is an orthonormal basis and the FFT is
  an isometry for q = 2;
* dirichlet-sine(n): A = -(1/2) d^2/dx^2 with Dirichlet conditions on (0, pi),
  fields are grid values at x_j = j pi/(n+1), the norm uses weight 1/(n+1),
  and sqrt(2) sin(k x) diagonalizes A with eigenvalues k^2/2.

The semigroup, fractional powers and all norms below are pure functions; a
model never mutates after construction.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import ValidationError
from .grid import TimeGrid
from .quadrature import log_quad


@dataclass(frozen=True)
class FourierTorus:
    dim: int
    n: int
    shift: float = 1.0

    def __post_init__(self):
        if self.dim < 1 or self.n < 2:
            raise ValidationError(f"invalid torus spec {self}")
        if self.shift < 0.0:
            raise ValidationError(f"torus shift must be >= 0, got {self.shift}")


@dataclass(frozen=True)
class DirichletSine:
    n: int

    def __post_init__(self):
        if self.n < 1:
            raise ValidationError(f"invalid dirichlet spec {self}")


@dataclass(frozen=True, eq=False)
class SpectralModel:
    """Validated diagonal model; construct through :func:`make_model`."""

    eigenvalues: np.ndarray          # sorted ascending, > 0 (== 0 only for torus shift 0)
    q: float
    transform: FourierTorus | DirichletSine | None = None
    multipliers: np.ndarray | None = field(default=None, repr=False)  # transform layout

    @property
    def n_modes(self) -> int:
        return self.eigenvalues.size

    @property
    def invertible(self) -> bool:
        return bool(self.eigenvalues[0] > 0.0)

    @property
    def field_shape(self) -> tuple[int, ...]:
        if isinstance(self.transform, FourierTorus):
            return (self.transform.n,) * self.transform.dim
        if isinstance(self.transform, DirichletSine):
            return (self.transform.n,)
        return (self.n_modes,)

    # -- physical <-> mode space ------------------------------------------

    def to_modes(self, x: np.ndarray) -> np.ndarray:
        x = np.asarray(x)
        if self.transform is None:
            return x
        if isinstance(self.transform, FourierTorus):
            return np.fft.fftn(x, norm="forward")
        return _sine_matrix(self.transform.n).T @ x / (self.transform.n + 1)

    def from_modes(self, c: np.ndarray) -> np.ndarray:
        if self.transform is None:
            return np.asarray(c)
        if isinstance(self.transform, FourierTorus):
            y = np.fft.ifftn(c, norm="forward")
            return y.real if np.isrealobj(np.asarray(c)) or _imag_small(y) else y
        return _sine_matrix(self.transform.n) @ np.asarray(c)

    def _mode_multipliers(self) -> np.ndarray:
        return self.eigenvalues if self.multipliers is None else self.multipliers

    def _apply_diagonal(self, factors: np.ndarray, x: np.ndarray) -> np.ndarray:
        x = np.asarray(x)
        if self.transform is None:
            if x.shape[-1] != self.n_modes:
                raise ValidationError(
                    f"field has {x.shape[-1]} modes, model has {self.n_modes}")
            return x * factors
        c = self.to_modes(x)
        return self.from_modes(c * factors)

    # -- operator calculus -------------------------------------------------

    def semigroup(self, t: float, x: np.ndarray) -> np.ndarray:
        """Apply S(t) = e^{-tA}."""
        if t < 0.0:
            raise ValidationError(f"semigroup time must be >= 0, got {t}")
        lam = self._mode_multipliers()
        return self._apply_diagonal(np.exp(-lam * t), x)

    def fractional_power(self, gamma: float, x: np.ndarray) -> np.ndarray:
        """Apply A^gamma (modewise lambda^gamma)."""
        lam = self._mode_multipliers()
        if gamma < 0.0 and np.any(lam == 0.0):
            raise ValidationError("negative fractional power of a non-injective model")
        with np.errstate(divide="ignore"):
            factors = np.where(lam > 0.0, lam ** gamma, 0.0 if gamma > 0 else 1.0)
        return self._apply_diagonal(factors, x)

    # -- norms --------------------------------------------------------------

    def space_norm(self, x: np.ndarray, q: float | None = None) -> float | np.ndarray:
        """L^q norm of a field in the model's canonical representation.

        Accepts a single field or a batch with the field axes trailing.
        """
        q = self.q if q is None else q
        x = np.asarray(x, dtype=float) if np.isrealobj(x) else np.abs(np.asarray(x))
        k = len(self.field_shape)
        axes = tuple(range(x.ndim - k, x.ndim))
        w = self._measure_weight()
        return (w * np.sum(np.abs(x) ** q, axis=axes)) ** (1.0 / q)

    def _measure_weight(self) -> float:
        if isinstance(self.transform, FourierTorus):
            return self.transform.n ** (-self.transform.dim)
        if isinstance(self.transform, DirichletSine):
            return 1.0 / (self.transform.n + 1)
        return 1.0


def _imag_small(y: np.ndarray, tol: float = 1e-10) -> bool:
    return float(np.max(np.abs(y.imag))) <= tol * max(1.0, float(np.max(np.abs(y.real))))


_SINE_CACHE: dict[int, np.ndarray] = {}


def _sine_matrix(n: int) -> np.ndarray:
    # columns sqrt(2) sin(k x_j): orthonormal for the weight-1/(n+1) grid measure
    mat = _SINE_CACHE.get(n)
    if mat is None:
        j = np.arange(1, n + 1)
        mat = math.sqrt(2.0) * np.sin(np.outer(j, j) * math.pi / (n + 1))
        _SINE_CACHE[n] = mat
    return mat


# -- construction -----------------------------------------------------------

def make_model(eigenvalues=None, q: float = 2.0,
               transform: FourierTorus | DirichletSine | None = None) -> SpectralModel:
    """Validated model constructor.

    Either an explicit nondecreasing positive eigenvalue sequence or a
    transform spec must be given.  q < 2 is rejected: the estimates under
    test are stated for q in [2, oo).
    """
    if q < 2.0 or not np.isfinite(q):
        raise ValidationError(f"space exponent q must satisfy q >= 2, got {q}")

    if transform is None:
        if eigenvalues is None:
            raise ValidationError("need eigenvalues or a transform spec")
        lam = np.atleast_1d(np.asarray(eigenvalues, dtype=float))
        if lam.ndim != 1 or lam.size == 0:
            raise ValidationError("eigenvalues must be a nonempty 1-d sequence")
        if not np.all(np.isfinite(lam)) or np.any(lam <= 0.0):
            raise ValidationError("eigenvalues must be finite and strictly positive")
        if np.any(np.diff(lam) < 0.0):
            raise ValidationError("eigenvalues must be nondecreasing")
        return SpectralModel(lam, float(q), None)

    if eigenvalues is not None:
        raise ValidationError("pass either eigenvalues or a transform, not both")

    if isinstance(transform, FourierTorus):
        freqs = [np.fft.fftfreq(transform.n, 1.0 / transform.n) for _ in range(transform.dim)]
        mesh = np.meshgrid(*freqs, indexing="ij")
        mult = sum(m ** 2 for m in mesh) / 2.0 + transform.shift
        lam = np.sort(mult.ravel())
        if transform.shift == 0.0:
            # zero mode present: model is usable for gradient/Plancherel work only
            pass
        return SpectralModel(lam, float(q), transform, multipliers=mult)

    if isinstance(transform, DirichletSine):
        k = np.arange(1, transform.n + 1, dtype=float)
        lam = k ** 2 / 2.0
        return SpectralModel(lam, float(q), transform, multipliers=lam)

    raise ValidationError(f"unknown transform spec {transform!r}")


def dyadic_ladder(K: int, base: float = 4.0) -> np.ndarray:
    """lambda_k = base^k, k = 1..K."""
    return base ** np.arange(1, K + 1, dtype=float)


# -- op-level wrappers (the module's public operation surface) ---------------

def apply_semigroup(model: SpectralModel, t: float, x: np.ndarray) -> np.ndarray:
    return model.semigroup(t, x)


def apply_fractional_power(model: SpectralModel, gamma: float, x: np.ndarray) -> np.ndarray:
    return model.fractional_power(gamma, x)


# -- mixed norms --------------------------------------------------------------

@dataclass(frozen=True)
class MixedNorm:
    """Time exponent p (math.inf marks the sup norm), space exponent q.

    `expectation` is the exponent used by Monte-Carlo drivers when averaging
    path norms; it defaults to p.
    """

    p: float
    q: float
    expectation: float | None = None

    def __post_init__(self):
        if self.p != math.inf and self.p < 1.0:
            raise ValidationError(f"time exponent must be >= 1 or inf, got {self.p}")
        if self.q < 2.0:
            raise ValidationError(f"space exponent must be >= 2, got {self.q}")

    @property
    def expectation_exponent(self) -> float:
        return self.p if self.expectation is None else self.expectation


def mixed_norm(values: np.ndarray, grid: TimeGrid, spec: MixedNorm,
               model: SpectralModel | None = None) -> float:
    """L^p([0,T]; L^q) norm of a field-in-time.

    `values` has one row per grid edge (N+1) or per cell (N); integration
    uses the left-endpoint value on each of the N cells, the sup norm takes
    all supplied rows.
    """
    values = np.asarray(values)
    if values.ndim < 2:
        values = values[:, None]
    n_rows = values.shape[0]
    if n_rows not in (grid.steps, grid.steps + 1):
        raise ValidationError(
            f"field has {n_rows} rows, grid expects {grid.steps} or {grid.steps + 1}")
    if model is not None:
        if model.q != spec.q:
            raise ValidationError(
                f"norm q={spec.q} inconsistent with model q={model.q}")
        space = model.space_norm(values, spec.q)
    else:
        space = np.sum(np.abs(values) ** spec.q, axis=tuple(range(1, values.ndim))) ** (1.0 / spec.q)
    if spec.p == math.inf:
        return float(np.max(space))
    cells = space[: grid.steps]
    return float((grid.dt * np.sum(cells ** spec.p)) ** (1.0 / spec.p))


def interp_norm(model: SpectralModel, theta: float, p: float, x: np.ndarray,
                *, tol: float = 1e-10) -> float:
    """Real-interpolation norm of D_A(theta, p) via the analytic semigroup.

    ||x||_q + ( int_0^oo (t^{1-theta} ||A S(t) x||_q)^p dt/t )^{1/p},
    evaluated by adaptive quadrature in log time.  Requires an invertible
    model (positive spectrum) so the integral converges at infinity.
    """
    if not (0.0 < theta < 1.0):
        raise ValidationError(f"interpolation parameter must be in (0,1), got {theta}")
    if not (1.0 < p < math.inf):
        raise ValidationError(f"exponent p must be in (1,oo), got {p}")
    if not model.invertible:
        raise ValidationError("interp_norm requires an invertible model")
    base = float(model.space_norm(x))
    if base == 0.0:
        return 0.0
    y = np.asarray(x, dtype=float) / base
    lam_min = float(model.eigenvalues[0])
    lam_max = float(model.eigenvalues[-1])

    def integrand(t):
        decay = model.fractional_power(1.0, model.semigroup(t, y))
        return float(model.space_norm(decay)) ** p * t ** ((1.0 - theta) * p - 1.0)

    t_lo = 1e-14 / lam_max
    t_hi = (60.0 / p + 20.0) / lam_min
    val = log_quad(integrand, t_lo, t_hi, tol=tol)
    return base * (1.0 + val ** (1.0 / p))


def gradient_norm(model: SpectralModel, x: np.ndarray, q: float | None = None) -> float:
    """L^q norm of the physical-space gradient, via the i*m Fourier multiplier."""
    if not isinstance(model.transform, FourierTorus):
        raise ValidationError("gradient_norm needs a fourier-torus model")
    n, d = model.transform.n, model.transform.dim
    c = model.to_modes(np.asarray(x, dtype=float))
    freqs = []
    for _ in range(d):
        m = np.fft.fftfreq(n, 1.0 / n)
        if n % 2 == 0:
            m = m.copy()
            m[n // 2] = 0.0  # unpaired Nyquist mode: odd-order derivative is set to 0
        freqs.append(m)
    mesh = np.meshgrid(*freqs, indexing="ij")
    comps = []
    for axis in range(d):
        comps.append(np.fft.ifftn(1j * mesh[axis] * c, norm="forward").real)
    mag = np.sqrt(sum(g ** 2 for g in comps))
    return float(model.space_norm(mag, q))
