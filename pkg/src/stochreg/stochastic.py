"""Cylindrical Brownian increments, Ito integrals, stochastic convolutions.

The driving noise is an m-dimensional truncation of a cylindrical Brownian
motion: independent increments DW[i][h] ~ N(0, dt) per cell i and direction
h.  The exact-exponential scheme additionally draws, jointly with DW, the
kernel-weighted increments

    xi_k[i][h] = int_cell e^{-lam_k (t_{i+1}-s)} dW_h(s),

whose within-cell covariances are (1-e^{-(lam_k+lam_l) dt})/(lam_k+lam_l)
against each other and (1-e^{-lam_k dt})/lam_k against DW.  One Cholesky
factor of that (K+1) x (K+1) matrix is computed per grid and reused for all
cells and directions.

Integrators evaluate integrands at the left cell edge (Ito convention); the
convolution's singular theta-weight uses the cell midpoint on the youngest
cell only, where (t - s)^(-theta) would otherwise be evaluated at distance
dt from its pole.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import NumericalError, ValidationError
from .grid import TimeGrid
from .seeding import derive_seed
from .spectral import SpectralModel


@dataclass(frozen=True, eq=False)
class StepProcess:
    """Adapted finite-rank step process: values[i, k, h] constant on cell i."""

    values: np.ndarray  # (N, K, m)
    grid: TimeGrid

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        if v.ndim != 3 or v.shape[0] != self.grid.steps:
            raise ValidationError(
                f"step process must be (N, K, m) with N={self.grid.steps}, got {v.shape}")
        object.__setattr__(self, "values", v)

    @property
    def n_modes(self) -> int:
        return self.values.shape[1]

    @property
    def n_noise(self) -> int:
        return self.values.shape[2]

    def scaled(self, factor) -> "StepProcess":
        return StepProcess(self.values * factor, self.grid)


@dataclass(frozen=True, eq=False)
class NoisePath:
    """One realization of the driving increments (plus optional exact
    exponential auxiliaries tied to a specific eigenvalue ladder)."""

    grid: TimeGrid
    dW: np.ndarray                    # (N, m)
    seed: int
    scheme: str
    xi: np.ndarray | None = None      # (N, K, m)
    eigenvalues: np.ndarray | None = None

    @property
    def n_noise(self) -> int:
        return self.dW.shape[1]


def _exact_cholesky(eigenvalues: np.ndarray, dt: float) -> np.ndarray:
    lam = np.asarray(eigenvalues, dtype=float)
    K = lam.size
    cov = np.empty((K + 1, K + 1))
    cov[0, 0] = dt
    cross = -np.expm1(-lam * dt) / lam
    cov[0, 1:] = cov[1:, 0] = cross
    pair = lam[:, None] + lam[None, :]
    cov[1:, 1:] = -np.expm1(-pair * dt) / pair
    try:
        return np.linalg.cholesky(cov)
    except np.linalg.LinAlgError:
        jitter = 1e-12 * dt
        try:
            return np.linalg.cholesky(cov + jitter * np.eye(K + 1))
        except np.linalg.LinAlgError as exc:
            raise NumericalError(
                "exact-exponential covariance is not positive definite",
                K=K, dt=dt, jitter=jitter) from exc


def sample_noise(grid: TimeGrid, m: int, seed: int, scheme: str = "maruyama",
                 model: SpectralModel | None = None) -> NoisePath:
    """Draw one noise path.  `scheme` is 'maruyama' or 'exact-exponential'.

    The exact scheme needs the model (its eigenvalue ladder fixes the
    auxiliary covariances).  A fixed seed reproduces the path bit for bit.
    """
    if m < 1:
        raise ValidationError(f"noise dimension must be >= 1, got {m}")
    rng = np.random.Generator(np.random.Philox(key=seed & ((1 << 64) - 1)))
    if scheme == "maruyama":
        dW = rng.normal(0.0, math.sqrt(grid.dt), size=(grid.steps, m))
        return NoisePath(grid, dW, seed, scheme)
    if scheme == "exact-exponential":
        if model is None:
            raise ValidationError("exact-exponential sampling needs a model")
        chol = _exact_cholesky(model.eigenvalues, grid.dt)
        z = rng.standard_normal(size=(grid.steps, m, model.n_modes + 1))
        joint = z @ chol.T
        dW = joint[:, :, 0]
        xi = np.swapaxes(joint[:, :, 1:], 1, 2)  # (N, K, m)
        return NoisePath(grid, dW, seed, scheme, xi=xi,
                         eigenvalues=np.array(model.eigenvalues))
    raise ValidationError(f"unknown noise scheme {scheme!r}")


def sample_noise_batch(grid: TimeGrid, m: int, n_paths: int, master_seed: int,
                       scheme: str = "maruyama",
                       model: SpectralModel | None = None) -> list[NoisePath]:
    """Paths i = 0..n_paths-1 with seeds derived from the master seed."""
    return [sample_noise(grid, m, derive_seed(master_seed, i), scheme, model)
            for i in range(n_paths)]


def ito_integral(step: StepProcess, noise: NoisePath, t: float) -> np.ndarray:
    """int_0^t G dW for a step process: sum over cells closed by time t."""
    n = step.grid.index_of(t)
    if noise.dW.shape != (step.grid.steps, step.n_noise):
        raise ValidationError("noise shape does not match the step process")
    return np.einsum("ikh,ih->k", step.values[:n], noise.dW[:n])


def convolution_kernel(grid: TimeGrid, lam, gamma: float, theta: float) -> np.ndarray:
    """Discrete kernel w[j, k], j = 1..N: weight of the cell j steps in the past.

    w[j, k] = lam_k^gamma (j dt)^(-theta) e^(-lam_k j dt) / Gamma(1-theta),
    with the theta factor taken at the cell midpoint for j = 1.
    """
    lam = np.atleast_1d(np.asarray(lam, dtype=float))
    dt = grid.dt
    j = np.arange(1, grid.steps + 1, dtype=float)
    dist = j * dt
    theta_dist = dist.copy()
    if theta > 0.0:
        theta_dist[0] = dt / 2.0
    w = (theta_dist[:, None] ** (-theta) / math.gamma(1.0 - theta)
         * np.exp(-np.outer(dist, lam)))
    with np.errstate(divide="ignore"):
        w = w * np.where(lam > 0.0, lam ** gamma, 0.0 if gamma > 0 else 1.0)
    return w


def stoch_convolution(model: SpectralModel, step: StepProcess, noise: NoisePath,
                      gamma: float = 0.0, theta: float = 0.0,
                      scheme: str = "maruyama") -> np.ndarray:
    """Simulate A^gamma S_theta <> G on the grid; returns (N+1, K) path values.

    S_theta(t) = t^(-theta) S(t) / Gamma(1-theta) with theta in [0, 1/2); the
    exact-exponential scheme is only defined for theta = 0 where the one-step
    recursion with the xi auxiliaries is exact for step integrands.
    """
    if not (0.0 <= theta < 0.5):
        raise ValidationError(f"theta must lie in [0, 1/2), got {theta}")
    if step.n_modes != model.n_modes:
        raise ValidationError("step process and model disagree on mode count")
    if noise.dW.shape != (step.grid.steps, step.n_noise):
        raise ValidationError("noise does not match the step process")
    grid = step.grid
    lam = model.eigenvalues

    if scheme == "exact-exponential":
        if theta != 0.0:
            raise ValidationError("exact-exponential scheme requires theta = 0")
        if noise.xi is None:
            raise ValidationError("noise path carries no exact-exponential auxiliaries")
        if noise.eigenvalues is None or not np.array_equal(noise.eigenvalues, lam):
            raise ValidationError("noise auxiliaries were sampled for a different model")
        y = np.einsum("ikh,ikh->ik", step.values, noise.xi)
        return _exact_recursion(lam, grid, y, gamma)
    if scheme != "maruyama":
        raise ValidationError(f"unknown convolution scheme {scheme!r}")

    x = np.einsum("ikh,ih->ik", step.values, noise.dW)
    if theta == 0.0:
        return _maruyama_recursion(lam, grid, x, gamma)
    w = convolution_kernel(grid, lam, gamma, theta)
    return _kernel_convolve(w, x)


def _maruyama_recursion(lam, grid, x, gamma) -> np.ndarray:
    decay = np.exp(-np.asarray(lam) * grid.dt)
    with np.errstate(divide="ignore"):
        power = np.where(np.asarray(lam) > 0.0, np.asarray(lam) ** gamma,
                         0.0 if gamma > 0 else 1.0)
    out = np.zeros((grid.steps + 1, x.shape[1]))
    acc = np.zeros(x.shape[1])
    for i in range(grid.steps):
        acc = decay * (acc + power * x[i])
        out[i + 1] = acc
    return out


def _exact_recursion(lam, grid, y, gamma) -> np.ndarray:
    decay = np.exp(-np.asarray(lam) * grid.dt)
    with np.errstate(divide="ignore"):
        power = np.where(np.asarray(lam) > 0.0, np.asarray(lam) ** gamma,
                         0.0 if gamma > 0 else 1.0)
    out = np.zeros((grid.steps + 1, y.shape[1]))
    acc = np.zeros(y.shape[1])
    for i in range(grid.steps):
        acc = decay * acc + power * y[i]
        out[i + 1] = acc
    return out


def _kernel_convolve(w: np.ndarray, x: np.ndarray) -> np.ndarray:
    """U[n] = sum_{i<n} w[n-i] x[i] per mode (w indexed from lag 1)."""
    n_steps, n_modes = x.shape
    out = np.zeros((n_steps + 1, n_modes))
    for k in range(n_modes):
        out[1:, k] = np.convolve(x[:, k], w[:, k])[:n_steps]
    return out


def convolution_terminal(model: SpectralModel, step: StepProcess,
                         dW_batch: np.ndarray, gamma: float = 0.0,
                         theta: float = 0.0) -> np.ndarray:
    """Terminal value U(T) for a batch of noise paths; (P, K).

    Cheap closed-form weighting used by variance checks with large path
    counts, equivalent to running stoch_convolution per path.
    """
    grid = step.grid
    w = convolution_kernel(grid, model.eigenvalues, gamma, theta)  # (N, K)
    wk = w[::-1]                                   # weight of cell i at lag N-i
    x = np.einsum("pih,ikh->pik", dW_batch, step.values)
    return np.einsum("pik,ik->pk", x, wk)


# -- square function and the Ito isomorphism probe ---------------------------

def process_space_norms(values: np.ndarray, q: float) -> np.ndarray:
    """Per-cell L^q(O; H) norms of a (N, K, m) process (l^2 over noise dims)."""
    h = np.sqrt(np.sum(values ** 2, axis=2))
    return np.sum(h ** q, axis=1) ** (1.0 / q)


def process_mixed_norm(values: np.ndarray, grid: TimeGrid, p: float, q: float) -> float:
    """L^p([0,T]; L^q(O; H)) norm of a step process."""
    space = process_space_norms(np.asarray(values, dtype=float), q)
    if p == math.inf:
        return float(np.max(space))
    return float((grid.dt * np.sum(space ** p)) ** (1.0 / p))


def path_mixed_norm(path: np.ndarray, grid: TimeGrid, p: float, q: float) -> float:
    """L^p([0,T]; l^q) norm of a simulated path ((N+1) or N rows)."""
    path = np.asarray(path, dtype=float)
    space = np.sum(np.abs(path) ** q, axis=1) ** (1.0 / q)
    if p == math.inf:
        return float(np.max(space))
    return float((grid.dt * np.sum(space[: grid.steps] ** p)) ** (1.0 / p))


def square_function_norm(step: StepProcess, q: float) -> float:
    """|| ( sum_i dt sum_h G[i,.,h]^2 )^(1/2) ||_{l^q}."""
    sq = np.sqrt(step.grid.dt * np.sum(step.values ** 2, axis=(0, 2)))
    return float(np.sum(sq ** q) ** (1.0 / q))


@dataclass(frozen=True)
class PathEnsemble:
    """Per-path outputs with the seeds that generated them."""

    outputs: list
    seeds: list[int]
    n_paths: int

    def __post_init__(self):
        if len(set(self.seeds)) != len(self.seeds):
            raise ValidationError("path seeds must be pairwise distinct")


def simulate_path_ensemble(model: SpectralModel, step: StepProcess,
                           n_paths: int, master_seed: int, gamma: float = 0.0,
                           theta: float = 0.0) -> PathEnsemble:
    """Monte-Carlo ensemble of convolution paths, one derived seed per path."""
    seeds = [derive_seed(master_seed, i) for i in range(n_paths)]
    outputs = [stoch_convolution(model, step,
                                 sample_noise(step.grid, step.n_noise, s),
                                 gamma=gamma, theta=theta)
               for s in seeds]
    return PathEnsemble(outputs=outputs, seeds=seeds, n_paths=n_paths)


def ito_isomorphism_ratio(processes: list[StepProcess], p: float, q: float,
                          n_paths: int, master_seed: int):
    """Empirical two-sidedness of the Ito isomorphism over an ensemble of G.

    For each (deterministic) G the probe estimates
        ( E || int_0^T G dW ||_q^p )^{1/p} / ( E || G ||_{sq}^p )^{1/p}
    by Monte Carlo over `n_paths` paths; the square-function denominator is
    deterministic here.  Returns (per-G statistics, min ratio, max ratio).
    """
    from .results import RatioStatistic

    if not (1.0 < p < math.inf and 1.0 < q < math.inf):
        raise ValidationError(f"need p, q in (1, oo), got p={p}, q={q}")
    stats = []
    for g_index, step in enumerate(processes):
        denom = square_function_norm(step, q)
        if denom == 0.0:
            continue  # zero processes carry no ratio information
        grid = step.grid
        vals = np.empty(n_paths)
        for i in range(n_paths):
            noise = sample_noise(grid, step.n_noise,
                                 derive_seed(master_seed, g_index * n_paths + i))
            integral = ito_integral(step, noise, grid.horizon)
            vals[i] = np.sum(np.abs(integral) ** q) ** (p / q)
        mean = float(np.mean(vals))
        se = float(np.std(vals, ddof=1) / math.sqrt(n_paths))
        num = mean ** (1.0 / p)
        ratio = num / denom
        stats.append(RatioStatistic(
            numerator=num, denominator=denom, ratio=ratio,
            mc_standard_error=ratio * se / (p * mean) if mean > 0 else 0.0,
            horizon=grid.horizon, steps=grid.steps, n_mc=n_paths,
            n_modes=step.n_modes, p=p, q=q))
    if not stats:
        raise ValidationError("ensemble contained only zero processes")
    ratios = [s.ratio for s in stats]
    return stats, min(ratios), max(ratios)
