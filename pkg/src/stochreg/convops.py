"""Windowed and kernel-weighted stochastic integral families, empirical
R-bounds, one-sided maximal functions and the averaging-operator duality.

The two operator families under study are

    J(r) G(t) = r^(-1/2) int_{(t-r) or 0}^{t} G dW        (windowed integral)
    I(k) G(t) = int_0^t k(t-s) G(s) dW(s)                 (kernel integral)

linked pathwise by I(k) G(t) = - int_0^oo sqrt(r) k'(r) J(r) G(t) dr whenever
k vanishes at infinity.  Window endpoints snap to grid cells so that J(r) G
is a combination of the same increments as I(k) G, which keeps the reduction
identity testable pathwise.

Empirical R-bounds are lower estimates: a supremum over finitely many input
configurations and Rademacher sign combinations can only underestimate the
true R-bound.  Sign expectations are enumerated exactly up to 10 members and
sampled beyond.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from itertools import product

import numpy as np

from .errors import ValidationError
from .grid import TimeGrid
from .kernels import KernelFn
from .seeding import generator
from .stochastic import (NoisePath, StepProcess, process_mixed_norm,
                         path_mixed_norm)

# -- the J and I families -----------------------------------------------------


def _weighted_increments(step: StepProcess, noise: NoisePath) -> np.ndarray:
    if noise.dW.shape != (step.grid.steps, step.n_noise):
        raise ValidationError("noise does not match the step process")
    return np.einsum("ikh,ih->ik", step.values, noise.dW)


def apply_J(r: float, step: StepProcess, noise: NoisePath) -> np.ndarray:
    """Windowed integral J(r) G on the grid; (N+1, K).

    The window length snaps to n_r = round(r / dt) cells and the 1/sqrt(r)
    scaling uses the snapped length, so the windowed Ito isometry is exact at
    grid resolution.
    """
    grid = step.grid
    n_r = int(round(r / grid.dt))
    if r < grid.dt * (1.0 - 1e-9) or n_r < 1:
        raise ValidationError(f"window r={r} is unresolvable on dt={grid.dt}")
    x = _weighted_increments(step, noise)
    csum = np.vstack([np.zeros((1, x.shape[1])), np.cumsum(x, axis=0)])
    lo = np.maximum(0, np.arange(grid.steps + 1) - n_r)
    return (csum - csum[lo]) / math.sqrt(n_r * grid.dt)


def apply_I(kernel, step: StepProcess, noise: NoisePath) -> np.ndarray:
    """Kernel integral I(k) G on the grid; kernel evaluated at left-edge lags."""
    grid = step.grid
    x = _weighted_increments(step, noise)
    lags = grid.dt * np.arange(1, grid.steps + 1)
    kv = np.array([kernel(t) for t in lags])
    out = np.zeros((grid.steps + 1, x.shape[1]))
    for k in range(x.shape[1]):
        out[1:, k] = np.convolve(x[:, k], kv)[: grid.steps]
    return out


def reduce_I_via_J(kernel: KernelFn, step: StepProcess, noise: NoisePath,
                   r_hi: float, points_per_octave: int | None = None) -> np.ndarray:
    """Quadrature of -int sqrt(r) k'(r) J(r) G dr over a log grid in r.

    The grid runs from one cell width up to `r_hi`; beyond r_hi the windows
    saturate at [0, t] and the remaining mass -int_{r_hi}^oo k'(r) dr = k(r_hi)
    is added with the full-window integral.  The default node density refines
    with the time step (quadratic trapezoid error ~ first-order window
    snapping), so the total mismatch against I(k) G is O(dt) under joint
    refinement.
    """
    grid = step.grid
    if points_per_octave is None:
        points_per_octave = max(32, int(math.ceil(4.0 / math.sqrt(grid.dt))))
    n_oct = max(1, int(math.ceil(math.log2(r_hi / grid.dt) * points_per_octave)))
    r = np.geomspace(grid.dt, r_hi, n_oct + 1)
    u = np.log(r)
    w = np.empty_like(r)  # trapezoid weights in log r
    w[1:-1] = (u[2:] - u[:-2]) / 2.0
    w[0] = (u[1] - u[0]) / 2.0
    w[-1] = (u[-1] - u[-2]) / 2.0
    out = np.zeros((grid.steps + 1, step.n_modes))
    for rj, wj in zip(r, w):
        out -= wj * rj * math.sqrt(rj) * kernel.deriv(rj) * apply_J(rj, step, noise)
    # tail: J(r) is constant in r once the window covers [0, t]
    out += kernel(r_hi) * math.sqrt(r_hi) * apply_J(r_hi, step, noise)
    return out


# -- one-sided maximal function ----------------------------------------------


def one_sided_maximal(f: np.ndarray) -> np.ndarray:
    """Forward-window maximal averages of |f| on the grid.

    f holds cell values (first axis time); the function is extended by zero
    past the horizon, so windows reaching beyond it only dilute the average.
    """
    f = np.abs(np.asarray(f, dtype=float))
    squeeze = f.ndim == 1
    if squeeze:
        f = f[:, None]
    n = f.shape[0]
    csum = np.vstack([np.zeros((1, f.shape[1])), np.cumsum(f, axis=0)])
    best = np.zeros_like(f)
    for j in range(1, n + 1):
        i = np.arange(0, n - j + 1)
        avg = (csum[i + j] - csum[i]) / j
        best[: n - j + 1] = np.maximum(best[: n - j + 1], avg)
    return best[:, 0] if squeeze else best


def vector_time_norm(f: np.ndarray, grid: TimeGrid, r: float, s: float) -> float:
    """L^r([0,T]; l^s_K) norm of cell values f (N, K); s = inf takes the max."""
    f = np.abs(np.asarray(f, dtype=float))
    space = np.max(f, axis=1) if s == math.inf else np.sum(f ** s, axis=1) ** (1.0 / s)
    if r == math.inf:
        return float(np.max(space))
    return float((grid.dt * np.sum(space ** r)) ** (1.0 / r))


def fefferman_stein_check(r: float, s: float, n_components: int,
                          grid: TimeGrid, n_samples: int, seed: int,
                          kind: str = "gaussian"):
    """Empirical sup of ||Mf||_{L^r(l^s)} / ||f||_{L^r(l^s)} over random f.

    Returns (sup_ratio, ratios).  The componentwise one-sided maximal
    function is dimension-free bounded for r in (1, oo), s in (1, oo]; the
    probe measures how far random step functions push it.
    """
    if not (1.0 < r < math.inf):
        raise ValidationError(f"need r in (1, oo), got {r}")
    if not (1.0 < s):
        raise ValidationError(f"need s in (1, oo], got {s}")
    from .ensembles import random_step_process
    ratios = np.empty(n_samples)
    for i in range(n_samples):
        rng = generator(seed, i)
        f = random_step_process(grid, n_components, 1, kind, rng).values[:, :, 0]
        denom = vector_time_norm(f, grid, r, s)
        if denom == 0.0:
            ratios[i] = 1.0
            continue
        ratios[i] = vector_time_norm(one_sided_maximal(f), grid, r, s) / denom
    return float(np.max(ratios)), ratios


# -- averaging operators and their duality -------------------------------------


def apply_T(delta: float, psi: np.ndarray, grid: TimeGrid) -> np.ndarray:
    """Forward average T(delta) psi(t) = (1/delta) int_t^{t+delta} psi."""
    j = _delta_cells(delta, grid)
    psi = np.asarray(psi, dtype=float)
    flat = psi[:, None] if psi.ndim == 1 else psi
    csum = np.vstack([np.zeros((1, flat.shape[1])), np.cumsum(flat, axis=0)])
    i = np.arange(grid.steps)
    hi = np.minimum(grid.steps, i + j)
    out = (csum[hi] - csum[i]) / j
    return out[:, 0] if psi.ndim == 1 else out


def apply_T_star(delta: float, phi: np.ndarray, grid: TimeGrid) -> np.ndarray:
    """Backward average T*(delta) phi(t) = (1/delta) int_{(t-delta) or 0}^t phi."""
    j = _delta_cells(delta, grid)
    phi = np.asarray(phi, dtype=float)
    flat = phi[:, None] if phi.ndim == 1 else phi
    csum = np.vstack([np.zeros((1, flat.shape[1])), np.cumsum(flat, axis=0)])
    i = np.arange(grid.steps)
    lo = np.maximum(0, i + 1 - j)
    out = (csum[i + 1] - csum[lo]) / j
    return out[:, 0] if phi.ndim == 1 else out


def _delta_cells(delta: float, grid: TimeGrid) -> int:
    j = int(round(delta / grid.dt))
    if j < 1 or abs(j * grid.dt - delta) > 1e-9 * max(1.0, grid.horizon):
        raise ValidationError(f"delta={delta} is not a positive multiple of dt={grid.dt}")
    return j


def duality_pair_check(delta: float, psi: np.ndarray, phi: np.ndarray,
                       grid: TimeGrid) -> tuple[float, float]:
    """<T(delta) psi, phi> and <psi, T*(delta) phi> by grid quadrature."""
    lhs = grid.dt * float(np.sum(apply_T(delta, psi, grid) * np.asarray(phi)))
    rhs = grid.dt * float(np.sum(np.asarray(psi) * apply_T_star(delta, phi, grid)))
    return lhs, rhs


def adjoint_sum_bound(deltas, fs, grid: TimeGrid, r: float, s: float):
    """Lemma-style sum bound data: (|| sum T*(d_n)|f_n| ||, || sum |f_n| ||, g).

    Norms are taken in the dual exponents (r', s') of the maximal-function
    space L^r(l^s).  Also returns the norming function g of the left-hand
    side, i.e. the dual witness whose maximal-function ratio certifies the
    constant: lhs <= (||Mg||_{r,s} / ||g||_{r,s}) * rhs.
    """
    rp = r / (r - 1.0)
    sp = math.inf if s == math.inf else s / (s - 1.0)
    total = np.zeros_like(np.abs(np.asarray(fs[0], dtype=float)))
    plain = np.zeros_like(total)
    for d, f in zip(deltas, fs, strict=True):
        total += apply_T_star(d, np.abs(f), grid)
        plain += np.abs(f)
    lhs = vector_time_norm(total, grid, rp, sp)
    rhs = vector_time_norm(plain, grid, rp, sp)
    g = _norming_function(total, rp, sp)
    return lhs, rhs, g


def _norming_function(f: np.ndarray, rp: float, sp: float) -> np.ndarray:
    """Dual witness g with <f, g> = ||f||_{L^rp(l^sp)} and ||g||_{L^r(l^s)} = 1."""
    f = np.abs(np.asarray(f, dtype=float))
    if sp == math.inf:
        # dual of l^1: put mass on the per-time argmax component
        inner = np.zeros_like(f)
        idx = np.argmax(f, axis=1)
        inner[np.arange(f.shape[0]), idx] = 1.0
        space = np.max(f, axis=1)
    else:
        space = np.sum(f ** sp, axis=1) ** (1.0 / sp)
        safe = np.where(space > 0.0, space, 1.0)
        inner = (f / safe[:, None]) ** (sp - 1.0)
        inner[space == 0.0] = 0.0
    weight = space ** (rp - 1.0)
    g = inner * weight[:, None]
    norm = np.sum(space ** rp)
    return g / norm ** ((rp - 1.0) / rp) if norm > 0.0 else g


# -- Rademacher sums -----------------------------------------------------------


def enumerate_signs(n: int) -> np.ndarray:
    if n > 16:
        raise ValidationError(f"refusing to enumerate 2^{n} sign vectors")
    return np.array(list(product((-1.0, 1.0), repeat=n)))


def sample_signs(n: int, n_samples: int, seed: int) -> np.ndarray:
    rng = generator(seed, 0)
    return rng.choice((-1.0, 1.0), size=(n_samples, n))


def rademacher_l2_norm(vectors: np.ndarray, q: float) -> float:
    """( E_eps || sum_n eps_n x_n ||_{l^q}^2 )^{1/2} by exact enumeration."""
    vectors = np.asarray(vectors, dtype=float)
    signs = enumerate_signs(vectors.shape[0])
    sums = signs @ vectors
    norms_sq = np.sum(np.abs(sums) ** q, axis=1) ** (2.0 / q)
    return float(np.sqrt(np.mean(norms_sq)))


def square_function(vectors: np.ndarray, q: float) -> float:
    """|| ( sum_n x_n^2 )^{1/2} ||_{l^q}."""
    sq = np.sqrt(np.sum(np.asarray(vectors, dtype=float) ** 2, axis=0))
    return float(np.sum(sq ** q) ** (1.0 / q))


# -- empirical R-bound estimation ----------------------------------------------


@dataclass(frozen=True)
class ScalarMember:
    """c * Identity on step processes."""

    c: float

    def apply(self, step: StepProcess, noise: NoisePath | None):
        return ("process", step.values * self.c)


@dataclass(frozen=True)
class JMember:
    r: float

    def apply(self, step: StepProcess, noise: NoisePath):
        return ("path", apply_J(self.r, step, noise))


@dataclass(frozen=True, eq=False)
class IMember:
    kernel: KernelFn

    def apply(self, step: StepProcess, noise: NoisePath):
        return ("path", apply_I(self.kernel, step, noise))


@dataclass(frozen=True, eq=False)
class DiagonalMember:
    """Fixed diagonal multiplier acting modewise on step processes."""

    factors: np.ndarray  # (K,)

    def apply(self, step: StepProcess, noise: NoisePath | None):
        return ("process", step.values * np.asarray(self.factors)[None, :, None])


def _output_norm(kind: str, values: np.ndarray, grid: TimeGrid,
                 p: float, q: float) -> float:
    if kind == "process":
        return process_mixed_norm(values, grid, p, q)
    return path_mixed_norm(values, grid, p, q)


def rbound_ratio(members, steps: list[StepProcess], noises, p: float, q: float,
                 signs: np.ndarray) -> float:
    """Rademacher ratio of one configuration {(T_n, G_n)} under given signs.

    numerator^2 = E_eps || sum eps_n T_n G_n ||^2 with the L^p(R_+ x Omega; L^q)
    norm estimated over the supplied noise paths; denominator likewise for
    the inputs (noise independent since the G_n are deterministic).
    """
    grid = steps[0].grid
    noise_list = list(noises) if noises else [None]

    kind_seen = None
    outputs = []  # (n_members, n_noises, ...) once, reused across signs
    for member, g in zip(members, steps, strict=True):
        rows = []
        for noise in noise_list:
            kind, out = member.apply(g, noise)
            if kind_seen is None:
                kind_seen = kind
            elif kind != kind_seen:
                raise ValidationError("family members produce mixed output kinds")
            rows.append(out)
        outputs.append(rows)

    num_sq = 0.0
    for eps in signs:
        vals = np.empty(len(noise_list))
        for w in range(len(noise_list)):
            acc = sum(e_n * outputs[n][w] for n, e_n in enumerate(eps))
            vals[w] = _output_norm(kind_seen, acc, grid, p, q) ** p
        num_sq += float(np.mean(vals)) ** (2.0 / p)
    num_sq /= len(signs)

    den_sq = 0.0
    for eps in signs:
        acc = sum(e_n * g.values for e_n, g in zip(eps, steps))
        den_sq += process_mixed_norm(acc, grid, p, q) ** 2
    den_sq /= len(signs)
    if den_sq <= 0.0:
        raise ValidationError("zero input configuration")
    return math.sqrt(num_sq / den_sq)


def rbound_trials(n_members: int, grid: TimeGrid, n_modes: int, n_noise: int,
                  seed: int, n_random: int = 3) -> list[list[StepProcess]]:
    """One-hot configurations for each member plus shared random ones.

    Trial inputs for member n depend only on (seed, n), so enlarging the
    family keeps the existing members' inputs; this makes the estimate
    usable for nested-family comparisons.
    """
    from .ensembles import random_step_process
    trials = []
    zero = StepProcess(np.zeros((grid.steps, n_modes, n_noise)), grid)
    for n in range(n_members):
        cfg = [zero] * n_members
        cfg[n] = random_step_process(grid, n_modes, n_noise, "gaussian",
                                     generator(seed, n))
        trials.append(cfg)
    for j in range(n_random):
        cfg = [random_step_process(grid, n_modes, n_noise, "gaussian",
                                   generator(seed, 1000 + 256 * j + n))
               for n in range(n_members)]
        trials.append(cfg)
    return trials


def rbound_estimate(members, trials: list[list[StepProcess]],
                    noises: list[NoisePath], p: float, q: float, *,
                    sign_samples: int = 256, seed: int = 0) -> float:
    """Empirical R-bound: max configuration ratio over trials and signs.

    Exact sign enumeration for families of at most 10 members removes the
    sign-sampling noise from small-family oracles; larger families use a
    fixed sampled sign set shared across trials.
    """
    n = len(members)
    signs = enumerate_signs(n) if n <= 10 else sample_signs(n, sign_samples, seed)
    best = 0.0
    for cfg in trials:
        if all(np.all(g.values == 0.0) for g in cfg):
            continue
        best = max(best, rbound_ratio(members, cfg, noises, p, q, signs))
    if best == 0.0:
        raise ValidationError("no nonzero trial configuration supplied")
    return best


def multiplier_r_bound(factors_of_t, grid: TimeGrid, n_modes: int, q: float, *,
                       seed: int = 0) -> float:
    """Empirical R-bound of the diagonal multiplier family {M(t): t in grid}
    as operators on l^q vectors.

    The family is subsampled at eight grid times plus its argmax entry; trial
    inputs are l^q vectors (single-cell processes), with the mode/time
    concentrated witness included so the estimate reaches the family's sup
    multiplier.
    """
    factors = np.stack([np.asarray(factors_of_t(t), dtype=float)
                        for t in grid.cell_left])
    if factors.shape != (grid.steps, n_modes):
        raise ValidationError("multiplier diagonals must be (K,) per time")
    i_star, k_star = np.unravel_index(np.argmax(np.abs(factors)), factors.shape)
    sample_idx = sorted(set(np.linspace(0, grid.steps - 1, 8, dtype=int)) | {i_star})
    members = [DiagonalMember(factors[i]) for i in sample_idx]
    cell = TimeGrid(1.0, 1)
    trials = rbound_trials(len(members), cell, n_modes, 1, seed)
    witness = np.zeros((1, n_modes, 1))
    witness[0, k_star, 0] = 1.0
    onehot = [StepProcess(np.zeros_like(witness), cell)] * len(members)
    onehot[sample_idx.index(i_star)] = StepProcess(witness, cell)
    trials.append(onehot)
    return rbound_estimate(members, trials, [], q, q, seed=seed)


def multiplier_bound_check(factors_of_t, grid: TimeGrid, step_path: np.ndarray,
                           p: float, q: float, *, r_hat: float | None = None,
                           seed: int = 0) -> tuple[float, float]:
    """Instance of the R-bounded-multiplier inequality for diagonal families.

    Compares lhs = ||MG||_{l^q(L^2(dt))} against rhs = R_hat ||G||_{l^q(L^2(dt))}.
    Pass a precomputed `r_hat` when checking many G against one family.
    """
    g = np.asarray(step_path, dtype=float)  # (N, K)
    if g.shape[0] != grid.steps:
        raise ValidationError("path must carry one row per grid cell")
    factors = np.stack([np.asarray(factors_of_t(t), dtype=float)
                        for t in grid.cell_left])
    lhs = _lq_l2_norm(factors * g, grid, q)
    if r_hat is None:
        r_hat = multiplier_r_bound(factors_of_t, grid, g.shape[1], q, seed=seed)
    rhs = r_hat * _lq_l2_norm(g, grid, q)
    return lhs, rhs


def _lq_l2_norm(g: np.ndarray, grid: TimeGrid, q: float) -> float:
    """|| ( int |g(t, k)|^2 dt )^{1/2} ||_{l^q_k} on cell values."""
    sq = np.sqrt(grid.dt * np.sum(g ** 2, axis=0))
    return float(np.sum(sq ** q) ** (1.0 / q))
