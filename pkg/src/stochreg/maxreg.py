"""Maximal-regularity ratio probes, the fractional-integration factorization,
and the p = 2 blow-up harness.

The central statistic is

    ratio = ( E || A^(1/2-theta) S_theta <> G ||_{L^p([0,T];L^q)}^p )^{1/p}
            / ( E || G ||_{L^p([0,T];L^q(H))}^p )^{1/p},

finite uniformly in G for p in (2, oo) (and p = q = 2, where the squared
ratio equals exactly 1/2 on the full half-line by the Ito isometry and
Plancherel).  For p = 2 and q > 2 no such constant exists; the blow-up
harness drives the square-function form of the ratio along the dyadic
eigenvalue ladder lambda_k = 4^k with spike witnesses and exhibits the
K^(1-2/q) growth of the squared ratio.

Deterministic routes: for deterministic G the p = q = 2 second moment and
the p = q = 4 fourth moment (Gaussian, E X^4 = 3 sigma^4) are evaluated by
per-cell closed forms / adaptive quadrature, with no Monte-Carlo noise.
Eigenvalue ladders are capped at 4^24 so every scale stays inside double
precision; quadrature in log time resolves all scales without a global
fine grid.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.integrate import quad
from scipy.signal import fftconvolve
from scipy.special import gammainc

from .errors import ValidationError
from .grid import TimeGrid
from .quadrature import log_quad
from .results import ConstantEstimate, RatioStatistic, TracePoint
from .seeding import derive_seed
from .spectral import SpectralModel, interp_norm
from .stochastic import StepProcess, convolution_kernel, process_mixed_norm

MAX_LADDER_K = 24  # 4^24 ~ 2.8e14; keeps all decay scales in double precision


@dataclass(frozen=True)
class McSpec:
    n_paths: int = 2000
    master_seed: int = 0
    chunk: int = 256

    def __post_init__(self):
        if self.n_paths < 2 or self.chunk < 1:
            raise ValidationError(f"invalid MC spec {self}")


def _check_exponents(p: float, q: float) -> tuple[str, ...]:
    if not (q >= 2.0):
        raise ValidationError(f"space exponent must satisfy q >= 2, got {q}")
    if p > 2.0:
        return ()
    if p == 2.0:
        if q == 2.0:
            return ()
        return ("outside theorem hypotheses (p=2, q>2)",)
    raise ValidationError(
        f"p={p} rejected: hypotheses require p in (2,oo) or p = q = 2")


# -- deterministic second/fourth moments -------------------------------------


def _cell_kernel_integrals(grid: TimeGrid, lam: np.ndarray, theta: float,
                           nodes: int = 8) -> np.ndarray:
    """I[i, k] = int_{cell i} int_s^T w(t-s)^2 dt ds for the weighted kernel
    w(u) = u^(-theta) e^(-lam u) / Gamma(1-theta)."""
    lam = np.asarray(lam, dtype=float)
    edges = grid.edges
    T = grid.horizon
    if theta == 0.0:
        # int_s^T e^{-2 lam (t-s)} dt = (1 - e^{-2 lam (T-s)})/(2 lam), exact in s
        e0 = np.exp(-2.0 * np.outer(T - edges[:-1], lam))
        e1 = np.exp(-2.0 * np.outer(T - edges[1:], lam))
        return grid.dt / (2.0 * lam)[None, :] - (e1 - e0) / (4.0 * lam ** 2)[None, :]
    a = 1.0 - 2.0 * theta
    c2 = math.gamma(1.0 - theta) ** -2
    x, wts = np.polynomial.legendre.leggauss(nodes)
    out = np.zeros((grid.steps, lam.size))
    gam_a = math.gamma(a)
    for j in range(nodes):
        s = edges[:-1] + (x[j] + 1.0) * grid.dt / 2.0
        arg = 2.0 * np.outer(T - s, lam)
        val = c2 * (2.0 * lam) ** (a - 1.0) * gam_a * gammainc(a, arg)
        out += wts[j] * grid.dt / 2.0 * val
    return out


def exact_second_moment(model: SpectralModel, step: StepProcess, theta: float,
                        gamma: float) -> float:
    """E || A^gamma S_theta <> G ||_{L^2([0,T];l^2)}^2 for deterministic G,
    by the Ito-isometry double integral with per-cell closed forms."""
    g2 = np.sum(step.values ** 2, axis=2)  # (N, K)
    cells = _cell_kernel_integrals(step.grid, model.eigenvalues, theta)
    weights = model.eigenvalues ** (2.0 * gamma)
    return float(np.sum(weights[None, :] * g2 * cells))


def _variance_at(model: SpectralModel, step: StepProcess, t: float,
                 gamma: float) -> np.ndarray:
    """Var of the A^gamma-weighted convolution modes at time t (theta = 0)."""
    lam = model.eigenvalues
    g2 = np.sum(step.values ** 2, axis=2)
    edges = step.grid.edges
    lo = np.minimum(edges[:-1], t)
    hi = np.minimum(edges[1:], t)
    # int_{cell ^ [0,t]} e^{-2 lam (t-s)} ds
    seg = (np.exp(-2.0 * np.outer(t - hi, lam)) - np.exp(-2.0 * np.outer(t - lo, lam))) \
        / (2.0 * lam)[None, :]
    return lam ** (2.0 * gamma) * np.sum(g2 * seg, axis=0)


def exact_fourth_moment(model: SpectralModel, step: StepProcess,
                        gamma: float, *, tol: float = 1e-10) -> float:
    """E || A^gamma S <> G ||_{L^4([0,T];l^4)}^4 for deterministic G:
    integrates 3 sum_k Var_k(t)^2 (Gaussian fourth moment) in log time."""
    T = step.grid.horizon

    def integrand(t):
        v = _variance_at(model, step, t, gamma)
        return 3.0 * float(np.sum(v ** 2))

    t_lo = min(step.grid.dt, T) * 1e-10
    return log_quad(integrand, t_lo, T, tol=tol, strict=False)


# -- Monte-Carlo moments -------------------------------------------------------


def _convolve_batch(model: SpectralModel, step: StepProcess, dW: np.ndarray,
                    gamma: float, theta: float) -> np.ndarray:
    """Convolution paths for a batch of noises; dW (P, N, m) -> (P, N+1, K)."""
    grid = step.grid
    x = np.einsum("pih,ikh->pik", dW, step.values)
    P, N, K = x.shape
    if theta == 0.0:
        lam = model.eigenvalues
        decay = np.exp(-lam * grid.dt)
        power = lam ** gamma
        out = np.zeros((P, N + 1, K))
        acc = np.zeros((P, K))
        for i in range(N):
            acc = decay * (acc + power * x[:, i])
            out[:, i + 1] = acc
        return out
    w = convolution_kernel(grid, model.eigenvalues, gamma, theta)  # (N, K)
    out = np.zeros((P, N + 1, K))
    full = fftconvolve(x, w[None, :, :], axes=1)  # lag-1 kernel: U[n] gets x[..n-1]
    out[:, 1:, :] = full[:, :N, :]
    return out


def _sample_dw_batch(grid: TimeGrid, m: int, master_seed: int,
                     start: int, count: int) -> np.ndarray:
    out = np.empty((count, grid.steps, m))
    root = math.sqrt(grid.dt)
    for i in range(count):
        rng = np.random.Generator(np.random.Philox(key=derive_seed(master_seed, start + i)))
        out[i] = rng.normal(0.0, root, size=(grid.steps, m))
    return out


def mc_convolution_moment(model: SpectralModel, step: StepProcess, p: float,
                          q: float, theta: float, gamma: float,
                          mc: McSpec) -> tuple[float, float]:
    """(mean, standard error) of || A^gamma S_theta <> G ||_{L^p(L^q)}^p over paths.

    Paths are chunked with a schedule-independent ordered reduction: chunk c
    always covers path indices [c*chunk, ...), each seeded from the master.
    """
    grid = step.grid
    moments = np.empty(mc.n_paths)
    done = 0
    while done < mc.n_paths:
        count = min(mc.chunk, mc.n_paths - done)
        dW = _sample_dw_batch(grid, step.n_noise, mc.master_seed, done, count)
        u = _convolve_batch(model, step, dW, gamma, theta)
        space = np.sum(np.abs(u) ** q, axis=2) ** (1.0 / q)  # (P, N+1)
        moments[done:done + count] = grid.dt * np.sum(space[:, : grid.steps] ** p, axis=1)
        done += count
    mean = float(np.mean(moments))
    se = float(np.std(moments, ddof=1) / math.sqrt(mc.n_paths))
    return mean, se


# -- ratio probes ---------------------------------------------------------------


def maxreg_ratio(model: SpectralModel, step: StepProcess, p: float, q: float,
                 theta: float = 0.0, *, mc: McSpec | None = None,
                 method: str = "auto", delta: float = 0.0) -> RatioStatistic:
    """Regularity ratio for one deterministic step process.

    `delta` > 0 probes the shifted estimate: numerator weight A^(1/2-theta+delta),
    denominator data measured in D(A^delta) modewise.  method 'exact' uses the
    deterministic moment formulas (p = q = 2 and p = q = 4, theta-weighted
    allowed at p = 2); 'mc' forces Monte Carlo; 'auto' picks exact when it
    exists.
    """
    flags = _check_exponents(p, q)
    if not (0.0 <= theta < 0.5):
        raise ValidationError(f"theta must lie in [0, 1/2), got {theta}")
    if delta < 0.0:
        raise ValidationError(f"delta must be >= 0, got {delta}")
    if delta > 0.0 and not model.invertible:
        raise ValidationError("shifted estimate requires an invertible model")
    if not np.any(step.values):
        raise ValidationError("G = 0 carries no ratio information")
    if model.q != q:
        raise ValidationError(f"probe q={q} inconsistent with model q={model.q}")

    gamma = 0.5 - theta + delta
    grid = step.grid
    data = step if delta == 0.0 else step.scaled(
        model.eigenvalues[None, :, None] ** delta)
    denominator = process_mixed_norm(data.values, grid, p, q)

    exact_ok = (p == 2.0 and q == 2.0) or (p == 4.0 and q == 4.0 and theta == 0.0)
    if method == "exact" and not exact_ok:
        raise ValidationError(
            "exact moments exist for p = q = 2 (any theta) and p = q = 4 "
            f"(theta = 0) only; got p={p}, q={q}, theta={theta}")
    use_exact = exact_ok if method == "auto" else method == "exact"

    if use_exact:
        if p == 2.0:
            num = math.sqrt(exact_second_moment(model, step, theta, gamma))
        else:
            num = exact_fourth_moment(model, step, gamma) ** 0.25
        se = 0.0
        n_mc = 0
    else:
        mc = mc or McSpec()
        mean, mse = mc_convolution_moment(model, step, p, q, theta, gamma, mc)
        num = mean ** (1.0 / p)
        se = num / denominator * mse / (p * mean) if mean > 0.0 else 0.0
        n_mc = mc.n_paths
    return RatioStatistic(
        numerator=num, denominator=denominator, ratio=num / denominator,
        mc_standard_error=se, horizon=grid.horizon, steps=grid.steps,
        n_mc=n_mc, n_modes=model.n_modes, p=p, q=q, theta=theta, delta=delta,
        flags=flags)


def higher_regularity_shift(model: SpectralModel, step: StepProcess,
                            delta: float, p: float, q: float, *,
                            mc: McSpec | None = None,
                            method: str = "auto") -> RatioStatistic:
    """Shifted-regularity ratio ||A^(1/2+delta) S <> G|| / ||A^delta G||;
    delta = 0 reduces to the plain probe by definition."""
    if delta < 0.0:
        raise ValidationError(f"shift delta must be >= 0, got {delta}")
    return maxreg_ratio(model, step, p, q, 0.0, mc=mc, method=method, delta=delta)


def estimate_constant(model: SpectralModel, p: float, q: float, theta: float,
                      steps: list[StepProcess], *, mc: McSpec | None = None,
                      refine: bool = True) -> ConstantEstimate:
    """Sup of maxreg_ratio over an ensemble, with a refinement trace.

    The trace re-runs the sup witness at a halved time step and, for MC
    probes, at double the path count; matched master seeds keep the
    comparison common-random-number coupled.
    """
    stats: list[RatioStatistic] = []
    for s in steps:
        if not np.any(s.values):
            continue
        stats.append(maxreg_ratio(model, s, p, q, theta, mc=mc))
    if not stats:
        raise ValidationError("ensemble contained only zero processes")
    best_idx = int(np.argmax([s.ratio for s in stats]))
    witness = steps[best_idx]
    trace = [TracePoint(f"dt={witness.grid.dt:.3e}", stats[best_idx].ratio)]
    if refine:
        fine = StepProcess(np.repeat(witness.values, 2, axis=0), witness.grid.refine())
        trace.append(TracePoint(
            f"dt={fine.grid.dt:.3e}",
            maxreg_ratio(model, fine, p, q, theta, mc=mc).ratio))
        if mc is not None:
            mc2 = McSpec(mc.n_paths * 2, mc.master_seed, mc.chunk)
            trace.append(TracePoint(
                f"n_mc={mc2.n_paths}",
                maxreg_ratio(model, witness, p, q, theta, mc=mc2).ratio))
    return ConstantEstimate(
        sup_ratio=stats[best_idx].ratio, witness=f"member {best_idx}",
        ensemble=f"{len(stats)} nonzero members", trace=tuple(trace),
        members=tuple(stats))


# -- the section-6 counterexample harness ---------------------------------------


@dataclass(frozen=True, eq=False)
class Witness:
    """Piecewise-constant squared amplitudes g_k(s)^2 on arbitrary breakpoints."""

    breaks: np.ndarray     # (C+1,) increasing, breaks[0] = 0
    sq_values: np.ndarray  # (C, K), nonnegative

    def __post_init__(self):
        b = np.asarray(self.breaks, dtype=float)
        v = np.asarray(self.sq_values, dtype=float)
        if b.ndim != 1 or b[0] != 0.0 or np.any(np.diff(b) <= 0.0):
            raise ValidationError("breakpoints must increase from 0")
        if v.ndim != 2 or v.shape[0] != b.size - 1 or np.any(v < 0.0):
            raise ValidationError("squared amplitudes must be (cells, K) >= 0")
        object.__setattr__(self, "breaks", b)
        object.__setattr__(self, "sq_values", v)

    @property
    def n_modes(self) -> int:
        return self.sq_values.shape[1]


def spike_witness(q: float, K: int) -> Witness:
    """g_k = sqrt(v_k / eps) 1_[0, eps], v_k = K^(-2/q), eps = 4^(-K-1).

    The mass v_k injected at time ~0 feeds each mode's window
    J_k = [1/(2 lambda_k), 1/lambda_k]; the windows are disjoint on the
    dyadic ladder, which is what makes the K^(1-2/q) lower bound provable.
    """
    eps = 4.0 ** (-(K + 1))
    v = np.full((1, K), K ** (-2.0 / q) / eps)
    return Witness(np.array([0.0, eps]), v)


def _ladder(K: int) -> np.ndarray:
    if not (1 <= K <= MAX_LADDER_K):
        raise ValidationError(f"ladder size must lie in 1..{MAX_LADDER_K}, got {K}")
    return 4.0 ** np.arange(1, K + 1)


def _witness_inner(t: float, lam: np.ndarray, w: Witness) -> np.ndarray:
    """inner_k(t) = int_0^t lam_k e^{-2 lam_k (t-s)} g_k(s)^2 ds, exact per cell."""
    lo = np.minimum(w.breaks[:-1], t)
    hi = np.minimum(w.breaks[1:], t)
    seg = (np.exp(-2.0 * np.outer(t - hi, lam))
           - np.exp(-2.0 * np.outer(t - lo, lam))) / 2.0
    return np.sum(w.sq_values * seg, axis=0)


def _witness_lhs(q: float, lam: np.ndarray, w: Witness, *, power: str,
                 tol: float = 1e-11) -> float:
    """Time integral of the mixed l^{q/2} (power='mixed') or squared (power='l2')
    aggregate of the inner kernels."""
    def integrand(t):
        inner = _witness_inner(t, lam, w)
        if power == "mixed":
            return float(np.sum(inner ** (q / 2.0)) ** (2.0 / q))
        return float(np.sum(inner ** 2))

    t_lo = float(w.breaks[1]) * 1e-8
    t_hi = 30.0 / float(lam[0])
    return log_quad(integrand, t_lo, t_hi, tol=tol, strict=False)


def counterexample_probe(q: float, ks=(8, 12, 16, 20, 24),
                         witness_factory=spike_witness) -> list[tuple[int, float]]:
    """Squared-ratio sequence of the p = 2, q > 2 square-function inequality.

    Fully deterministic: for deterministic G both sides are double integrals,
    so no Monte-Carlo noise enters the blow-up signal.  Returns (K, ratio^2)
    pairs; the witness guarantees ratio^2 >= 0.1162721 K^(1-2/q).
    """
    if not q > 2.0:
        raise ValidationError(f"the blow-up regime needs q > 2, got {q}")
    out = []
    for K in ks:
        lam = _ladder(K)
        w = witness_factory(q, K)
        if w.n_modes != K:
            raise ValidationError("witness mode count does not match K")
        lhs = _witness_lhs(q, lam, w, power="mixed")
        cell = np.diff(w.breaks)
        rhs = float(np.sum(cell * np.sum(w.sq_values ** (q / 2.0), axis=1) ** (2.0 / q)))
        out.append((K, lhs / rhs))
    return out


def counterexample_window_bound(q: float, K: int) -> float:
    """Closed-form witness lower bound 0.1162721 K^(1-2/q) for ratio^2."""
    window = (math.exp(-1.0) - math.exp(-2.0)) / 2.0
    return window * K ** (1.0 - 2.0 / q)


def witness_moment_ratio_p4(q: float, K: int,
                            witness_factory=spike_witness) -> float:
    """p = q = 4 control ratio on the same witnesses, by the exact Gaussian
    fourth-moment formula (no horizon truncation, no sampling)."""
    lam = _ladder(K)
    w = witness_factory(q, K)
    num4 = 3.0 * _witness_lhs(q, lam, w, power="l2")
    cell = np.diff(w.breaks)
    den4 = float(np.sum(cell * np.sum(w.sq_values ** 2, axis=1)))
    return (num4 / den4) ** 0.25


def counterexample_search(q: float, K: int, *, n_cells: int = 6,
                          n_rounds: int = 3, step_factor: float = 2.0,
                          seed: int = 0) -> tuple[Witness, float]:
    """Coordinate ascent over piecewise-constant witnesses, reported separately
    from the closed-form spike family.  Breakpoints are log-spaced across the
    ladder's decay scales; amplitudes move by multiplicative steps."""
    lam = _ladder(K)
    spike = spike_witness(q, K)
    inner_breaks = np.geomspace(4.0 ** (-(K + 1)), 2.0 / lam[0], n_cells)
    breaks = np.concatenate([[0.0], inner_breaks])
    rng = np.random.Generator(np.random.Philox(key=seed))
    sq = rng.uniform(0.5, 1.5, size=(n_cells, K)) / inner_breaks[:, None]

    def ratio2(v):
        w = Witness(breaks, v)
        lhs = _witness_lhs(q, lam, w, power="mixed", tol=1e-9)
        cell = np.diff(breaks)
        rhs = float(np.sum(cell * np.sum(v ** (q / 2.0), axis=1) ** (2.0 / q)))
        return lhs / rhs

    best = ratio2(sq)
    for _ in range(n_rounds):
        for c in range(n_cells):
            for k in range(K):
                for f in (step_factor, 1.0 / step_factor):
                    trial = sq.copy()
                    trial[c, k] *= f
                    val = ratio2(trial)
                    if val > best:
                        best, sq = val, trial
    spike_val = counterexample_probe(q, (K,))[0][1]
    if spike_val > best:
        return spike, spike_val
    return Witness(breaks, sq), best


def deterministic_l1_probe(q: float, K: int, v) -> float:
    """Deterministic maximal-L^1 column-norm probe for B = 2A on l^{q/2}:
    2 int_0^oo || Lam e^{-2 Lam t} v ||_{q/2} dt for a unit l^{q/2} vector v."""
    lam = _ladder(K)
    v = np.asarray(v, dtype=float)
    if v.shape != (K,) or np.any(v < 0.0):
        raise ValidationError("v must be a nonnegative vector of length K")
    r = q / 2.0

    def integrand(t):
        return float(np.sum((lam * np.exp(-2.0 * lam * t) * v) ** r) ** (1.0 / r))

    return 2.0 * log_quad(integrand, 1e-18, 30.0 / lam[0], strict=False)


# -- factorization --------------------------------------------------------------


def fractional_integral(model: SpectralModel, theta: float,
                        path: np.ndarray, grid: TimeGrid) -> np.ndarray:
    """Riemann-Liouville semigroup smoothing of a path:
    (1/Gamma(theta)) int_0^t (t-s)^(theta-1) S(t-s) f(s) ds on the grid.

    Discrete convolution with left-endpoint values; the (t-s)^(theta-1)
    factor uses the cell midpoint on the youngest cell, where the endpoint
    singularity sits.
    """
    if not (0.0 < theta < 1.0):
        raise ValidationError(f"fractional order must lie in (0,1), got {theta}")
    path = np.asarray(path, dtype=float)
    if path.shape != (grid.steps + 1, model.n_modes):
        raise ValidationError(
            f"path must be (N+1, K) = {(grid.steps + 1, model.n_modes)}, got {path.shape}")
    dist = grid.dt * np.arange(1, grid.steps + 1)
    sing = dist.copy()
    sing[0] = grid.dt / 2.0
    w = sing[:, None] ** (theta - 1.0) * np.exp(-np.outer(dist, model.eigenvalues)) \
        * grid.dt / math.gamma(theta)
    out = np.zeros_like(path)
    for k in range(model.n_modes):
        out[1:, k] = np.convolve(path[:-1, k], w[:, k])[: grid.steps]
    return out


def beta_identity_check(theta: float, r: float, t: float) -> tuple[float, float]:
    """(raw, normalized) value of int_r^t (t-s)^(theta-1) (s-r)^(-theta) ds.

    The normalized value raw / (Gamma(theta) Gamma(1-theta)) must equal 1 for
    every 0 <= r < t; this is the Beta identity behind the factorization
    argument.  Endpoint singularities are handled by a weighted rule.
    """
    if not (0.0 < theta < 1.0):
        raise ValidationError(f"theta must lie in (0,1), got {theta}")
    if not (0.0 <= r < t):
        raise ValidationError(f"need 0 <= r < t, got r={r}, t={t}")
    raw, _ = quad(lambda s: 1.0, r, t, weight="alg", wvar=(-theta, theta - 1.0))
    return raw, raw / (math.gamma(theta) * math.gamma(1.0 - theta))


def factorization_check(model: SpectralModel, step: StepProcess, noise,
                        theta: float) -> float:
    """Pathwise relative L^2-in-time error of the factorization identity

        C^-theta [ A^(1/2-theta) S_theta <> G ] = A^(1/2-theta) [ S <> G ]

    on one noise realization.  theta = 0 returns 0 identically.
    """
    from .stochastic import stoch_convolution
    if not (0.0 <= theta < 0.5):
        raise ValidationError(f"theta must lie in [0, 1/2), got {theta}")
    gamma = 0.5 - theta
    direct = stoch_convolution(model, step, noise, gamma=gamma, theta=0.0)
    if theta == 0.0:
        return 0.0
    weighted = stoch_convolution(model, step, noise, gamma=gamma, theta=theta)
    smoothed = fractional_integral(model, theta, weighted, step.grid)
    num = np.sqrt(step.grid.dt * np.sum((smoothed - direct)[:-1] ** 2))
    den = np.sqrt(step.grid.dt * np.sum(direct[:-1] ** 2))
    if den == 0.0:
        raise ValidationError("trivial path: S <> G vanished")
    return float(num / den)


# -- the maximal estimate --------------------------------------------------------


def _interp_norm_rows(model: SpectralModel, theta: float, p: float,
                      rows: np.ndarray, nodes: int = 160) -> np.ndarray:
    """interp_norm for a batch of mode vectors on a fixed log-time rule."""
    lam = model.eigenvalues
    base = np.sum(np.abs(rows) ** model.q, axis=1) ** (1.0 / model.q)
    u_lo = math.log(1e-12 / float(lam[-1]))
    u_hi = math.log((60.0 / p + 20.0) / float(lam[0]))
    x, wts = np.polynomial.legendre.leggauss(nodes)
    u = (u_lo + u_hi) / 2.0 + (u_hi - u_lo) / 2.0 * x
    tau = np.exp(u)
    acc = np.zeros(rows.shape[0])
    for j in range(tau.size):
        decay = lam * np.exp(-lam * tau[j])
        sn = np.sum(np.abs(rows * decay[None, :]) ** model.q, axis=1) ** (1.0 / model.q)
        acc += wts[j] * (u_hi - u_lo) / 2.0 * (tau[j] ** (1.0 - theta) * sn) ** p
    return base + acc ** (1.0 / p)


def maximal_estimate_probe(model: SpectralModel, step: StepProcess, p: float,
                           mc: McSpec) -> RatioStatistic:
    """Maximal estimate: E sup_t || U(t) ||_{D_A(1/2 - 1/p, p)}^p against the
    data norm, for the unweighted convolution U = S <> G."""
    if not p > 2.0:
        raise ValidationError(f"the maximal estimate needs p > 2, got {p}")
    if not model.invertible:
        raise ValidationError("the maximal estimate requires an invertible model")
    theta_i = 0.5 - 1.0 / p
    grid = step.grid
    sup_p = np.empty(mc.n_paths)
    done = 0
    while done < mc.n_paths:
        count = min(mc.chunk, mc.n_paths - done)
        dW = _sample_dw_batch(grid, step.n_noise, mc.master_seed, done, count)
        u = _convolve_batch(model, step, dW, 0.0, 0.0)  # (P, N+1, K)
        flat = u.reshape(-1, model.n_modes)
        norms = _interp_norm_rows(model, theta_i, p, flat).reshape(count, -1)
        sup_p[done:done + count] = np.max(norms, axis=1) ** p
        done += count
    mean = float(np.mean(sup_p))
    se = float(np.std(sup_p, ddof=1) / math.sqrt(mc.n_paths))
    num = mean ** (1.0 / p)
    denominator = process_mixed_norm(step.values, grid, p, model.q)
    return RatioStatistic(
        numerator=num, denominator=denominator, ratio=num / denominator,
        mc_standard_error=num / denominator * se / (p * mean),
        horizon=grid.horizon, steps=grid.steps, n_mc=mc.n_paths,
        n_modes=model.n_modes, p=p, q=model.q, theta=theta_i)


def endpoint_interp_moment(model: SpectralModel, step: StepProcess, p: float,
                           mc: McSpec) -> float:
    """( E interp_norm(U(T))^p )^{1/p}, the endpoint the sup must dominate."""
    theta_i = 0.5 - 1.0 / p
    grid = step.grid
    vals = np.empty(mc.n_paths)
    done = 0
    while done < mc.n_paths:
        count = min(mc.chunk, mc.n_paths - done)
        dW = _sample_dw_batch(grid, step.n_noise, mc.master_seed, done, count)
        u = _convolve_batch(model, step, dW, 0.0, 0.0)
        vals[done:done + count] = _interp_norm_rows(model, theta_i, p, u[:, -1, :]) ** p
        done += count
    return float(np.mean(vals)) ** (1.0 / p)


__all__ = [
    "McSpec", "Witness", "beta_identity_check", "counterexample_probe",
    "counterexample_search", "counterexample_window_bound",
    "deterministic_l1_probe", "estimate_constant", "exact_fourth_moment",
    "exact_second_moment", "factorization_check", "fractional_integral",
    "higher_regularity_shift", "maximal_estimate_probe", "maxreg_ratio",
    "mc_convolution_moment", "spike_witness", "witness_moment_ratio_p4",
    "endpoint_interp_moment", "interp_norm",
]
