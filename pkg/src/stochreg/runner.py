"""Experiment orchestration, persistence, and plot-data emission.

`run` dispatches a validated config to its experiment, producing a
ResultRecord whose payload is a tuple of probe rows (plain dicts).  Payloads
are pure functions of the config: path seeds derive from the master seed and
probe units reduce in a fixed order, so thread count never changes a byte of
the emitted CSV.
"""

from __future__ import annotations

import json
import math
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import __version__
from .config import ExperimentConfig
from .convops import JMember, fefferman_stein_check, rbound_estimate, rbound_trials
from .ensembles import step_ensemble
from .errors import ValidationError
from .kernels import (SectorFunction, exponential_kernel, kclass_seminorm,
                      kernel_alpha_mass, poisson_reconstruct,
                      spoisson_identity_check)
from .maxreg import (McSpec, counterexample_probe, counterexample_window_bound,
                     estimate_constant, factorization_check,
                     maximal_estimate_probe, maxreg_ratio,
                     witness_moment_ratio_p4)
from .results import RatioStatistic
from .seeding import RNG_ALGORITHM, derive_seed
from .stochastic import StepProcess, ito_isomorphism_ratio, sample_noise

CSV_HEADER = "experiment,p,q,theta,K,T,N,N_mc,ratio,stderr"
PLOT_K_HEADER = "experiment,K,ratio,stderr"
PLOT_DT_HEADER = "experiment,dt,ratio,stderr"


@dataclass(frozen=True)
class ResultRecord:
    config: ExperimentConfig
    config_hash: str
    rng_algorithm: str
    payload: tuple[dict, ...]
    wall_clock_s: float
    software_version: str = __version__


def _row(experiment: str, *, p=None, q=None, theta=None, K=None, T=None,
         N=None, n_mc=None, ratio=None, stderr=0.0, dt=None, axis=None) -> dict:
    row = {"experiment": experiment, "p": p, "q": q, "theta": theta, "K": K,
           "T": T, "N": N, "n_mc": n_mc, "ratio": ratio, "stderr": stderr}
    if dt is not None:
        row["dt"] = dt
    if axis is not None:
        row["axis"] = axis
    return row


def _stat_row(experiment: str, s: RatioStatistic, **extra) -> dict:
    return _row(experiment, p=s.p, q=s.q, theta=s.theta, K=s.n_modes,
                T=s.horizon, N=s.steps, n_mc=s.n_mc, ratio=s.ratio,
                stderr=s.mc_standard_error, **extra)


def _ordered_parallel(fn, items, threads: int) -> list:
    if threads <= 1 or len(items) <= 1:
        return [fn(item) for item in items]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(fn, items))


def run(config: ExperimentConfig) -> ResultRecord:
    """Validate, dispatch, and time one experiment."""
    config.validate()
    start = time.perf_counter()
    runner = _RUNNERS.get(config.experiment)
    if runner is None:
        raise ValidationError(f"no runner for experiment {config.experiment!r}")
    payload = tuple(runner(config))
    return ResultRecord(config=config, config_hash=config.config_hash(),
                        rng_algorithm=RNG_ALGORITHM, payload=payload,
                        wall_clock_s=time.perf_counter() - start)


# -- experiment bodies ---------------------------------------------------------


def _run_ito_iso(cfg: ExperimentConfig) -> list[dict]:
    grid = cfg.grid.build()
    processes = step_ensemble(grid, cfg.ensemble.build())
    stats, lo, hi = ito_isomorphism_ratio(
        processes, cfg.p, cfg.model.q, cfg.mc.n_paths, cfg.mc.master_seed)
    rows = [_stat_row(f"ito-iso:member{i}", s) for i, s in enumerate(stats)]
    base = dict(p=cfg.p, q=cfg.model.q, theta=0.0, K=cfg.ensemble.n_modes,
                T=grid.horizon, N=grid.steps, n_mc=cfg.mc.n_paths)
    rows.append(_row("ito-iso:min", ratio=lo, **base))
    rows.append(_row("ito-iso:max", ratio=hi, **base))
    return rows


def _maxreg_like(cfg: ExperimentConfig, delta: float) -> list[dict]:
    model = cfg.model.build()
    grid = cfg.grid.build()
    spec = cfg.ensemble.build()
    if spec.n_modes != model.n_modes:
        raise ValidationError(
            f"ensemble n_modes={spec.n_modes} must match model K={model.n_modes}")
    steps = step_ensemble(grid, spec)
    exact = cfg.p == 2.0 and model.q == 2.0
    mc = None if exact else cfg.mc.build()
    if delta > 0.0:
        stats = [maxreg_ratio(model, s, cfg.p, cfg.model.q, 0.0, mc=mc, delta=delta)
                 for s in steps if np.any(s.values)]
        rows = [_stat_row(f"shift:member{i}", s) for i, s in enumerate(stats)]
        sup = max(s.ratio for s in stats)
        rows.append(_row("shift:sup", p=cfg.p, q=cfg.model.q, theta=0.0,
                         K=model.n_modes, T=grid.horizon, N=grid.steps,
                         n_mc=0 if exact else cfg.mc.n_paths, ratio=sup))
        return rows
    est = estimate_constant(model, cfg.p, cfg.model.q, cfg.theta, steps, mc=mc)
    rows = [_stat_row(f"maxreg:member{i}", s) for i, s in enumerate(est.members)]
    rows.append(_row("maxreg:sup", p=cfg.p, q=cfg.model.q, theta=cfg.theta,
                     K=model.n_modes, T=grid.horizon, N=grid.steps,
                     n_mc=0 if exact else cfg.mc.n_paths, ratio=est.sup_ratio))
    for point in est.trace:
        if point.label.startswith("dt="):
            rows.append(_row("maxreg:trace", p=cfg.p, q=cfg.model.q,
                             theta=cfg.theta, K=model.n_modes, T=grid.horizon,
                             N=grid.steps, n_mc=0 if exact else cfg.mc.n_paths,
                             ratio=point.value,
                             dt=float(point.label.split("=")[1]), axis="dt"))
    return rows


def _run_maxreg(cfg: ExperimentConfig) -> list[dict]:
    return _maxreg_like(cfg, 0.0)


def _run_shift(cfg: ExperimentConfig) -> list[dict]:
    return _maxreg_like(cfg, cfg.delta)


def _run_counterexample(cfg: ExperimentConfig) -> list[dict]:
    q = cfg.model.q

    def unit(K: int):
        (_, ratio2), = counterexample_probe(q, (K,))
        control = witness_moment_ratio_p4(q, K)
        return K, ratio2, control

    results = _ordered_parallel(unit, list(cfg.ks), cfg.threads)
    rows = []
    for K, ratio2, control in results:
        rows.append(_row("counterexample:ratio2", p=2.0, q=q, theta=0.0, K=K,
                         ratio=ratio2, axis="K"))
        rows.append(_row("counterexample:window-bound", p=2.0, q=q, theta=0.0,
                         K=K, ratio=counterexample_window_bound(q, K)))
        rows.append(_row("counterexample:control-p4", p=4.0, q=q, theta=0.0,
                         K=K, ratio=control, axis="K"))
    return rows


def _run_kernels(cfg: ExperimentConfig) -> list[dict]:
    a = math.pi / 4.0
    rows = [
        _row("kernels:poisson-const", ratio=poisson_reconstruct(
            SectorFunction(lambda z: 1.0 + 0j), 1.0, a)),
        _row("kernels:poisson-exp", ratio=poisson_reconstruct(
            SectorFunction(lambda z: np.exp(-z)), 1.0, a)),
        _row("kernels:poisson-resolvent", ratio=poisson_reconstruct(
            SectorFunction(lambda z: 1.0 / (1.0 + z)), 3.0, a)),
        _row("kernels:mass-alpha", ratio=kernel_alpha_mass(2.0, math.pi / 3.0)),
    ]
    value, member = kclass_seminorm(exponential_kernel())
    rows.append(_row("kernels:kclass-exp", ratio=value, stderr=0.0 if member else 1.0))
    value2, member2 = kclass_seminorm(exponential_kernel(2.0))
    rows.append(_row("kernels:kclass-2exp", ratio=value2, stderr=0.0 if member2 else 1.0))
    worst = 0.0
    for lam in (0.5, 1.0, 2.0):
        for t in (0.5, 1.0, 3.0):
            for theta in (0.0, 0.25):
                for alpha in (math.pi / 6.0, math.pi / 4.0):
                    _, _, err = spoisson_identity_check(lam, t, theta, alpha)
                    worst = max(worst, err)
    rows.append(_row("kernels:spoisson-max-abs-error", ratio=worst))
    return rows


def _run_rbound(cfg: ExperimentConfig) -> list[dict]:
    grid = cfg.grid.build()
    n_modes, n_noise = cfg.ensemble.n_modes, cfg.ensemble.n_noise
    noises = [sample_noise(grid, n_noise, derive_seed(cfg.mc.master_seed, i))
              for i in range(min(cfg.mc.n_paths, 32))]

    def unit(size: int) -> float:
        rs = np.geomspace(4.0 * grid.dt, grid.horizon / 4.0, size)
        members = [JMember(r) for r in rs]
        trials = rbound_trials(size, grid, n_modes, n_noise, cfg.ensemble.seed)
        return rbound_estimate(members, trials, noises, cfg.p, cfg.model.q,
                               seed=cfg.mc.master_seed)

    values = _ordered_parallel(unit, list(cfg.family_sizes), cfg.threads)
    return [_row("rbound:J-family", p=cfg.p, q=cfg.model.q, theta=0.0, K=size,
                 T=grid.horizon, N=grid.steps, n_mc=len(noises), ratio=val,
                 axis="K")
            for size, val in zip(cfg.family_sizes, values)]


def _run_maximal_fn(cfg: ExperimentConfig) -> list[dict]:
    grid = cfg.grid.build()

    def unit(K: int) -> float:
        sup, _ = fefferman_stein_check(cfg.maximal_fn_r, cfg.maximal_fn_s, K,
                                       grid, cfg.maximal_fn_samples,
                                       cfg.ensemble.seed)
        return sup

    sups = _ordered_parallel(unit, list(cfg.maximal_fn_components), cfg.threads)
    return [_row("maximal-fn:sup", p=cfg.maximal_fn_r, q=cfg.maximal_fn_s,
                 K=K, T=grid.horizon, N=grid.steps,
                 n_mc=cfg.maximal_fn_samples, ratio=sup, axis="K")
            for K, sup in zip(cfg.maximal_fn_components, sups)]


def _run_factorization(cfg: ExperimentConfig) -> list[dict]:
    model = cfg.model.build()

    def unit(dt: float) -> tuple[float, float]:
        steps_n = int(round(cfg.grid.horizon / dt))
        grid = cfg.grid.build().__class__(cfg.grid.horizon, steps_n)
        step = StepProcess(np.ones((steps_n, model.n_modes, cfg.ensemble.n_noise)), grid)
        errs = np.empty(cfg.mc.n_paths)
        for i in range(cfg.mc.n_paths):
            noise = sample_noise(grid, cfg.ensemble.n_noise,
                                 derive_seed(cfg.mc.master_seed, i))
            errs[i] = factorization_check(model, step, noise, cfg.theta)
        return float(np.mean(errs)), float(np.std(errs, ddof=1) / math.sqrt(len(errs)))

    results = _ordered_parallel(unit, list(cfg.dt_levels), cfg.threads)
    return [_row("factorization:rel-error", p=2.0, q=cfg.model.q,
                 theta=cfg.theta, K=cfg.model.build().n_modes, T=cfg.grid.horizon,
                 N=int(round(cfg.grid.horizon / dt)), n_mc=cfg.mc.n_paths,
                 ratio=err, stderr=se, dt=dt, axis="dt")
            for dt, (err, se) in zip(cfg.dt_levels, results)]


def _run_maximal_estimate(cfg: ExperimentConfig) -> list[dict]:
    model = cfg.model.build()
    grid = cfg.grid.build()
    steps = step_ensemble(grid, cfg.ensemble.build())
    mc = cfg.mc.build()
    stats = [maximal_estimate_probe(model, s, cfg.p, mc)
             for s in steps if np.any(s.values)]
    rows = [_stat_row(f"maximal-estimate:member{i}", s) for i, s in enumerate(stats)]
    rows.append(_row("maximal-estimate:sup", p=cfg.p, q=cfg.model.q,
                     theta=0.5 - 1.0 / cfg.p, K=model.n_modes, T=grid.horizon,
                     N=grid.steps, n_mc=mc.n_paths,
                     ratio=max(s.ratio for s in stats)))
    return rows


_RUNNERS = {
    "ito-iso": _run_ito_iso,
    "maxreg": _run_maxreg,
    "shift": _run_shift,
    "counterexample": _run_counterexample,
    "kernels": _run_kernels,
    "rbound": _run_rbound,
    "maximal-fn": _run_maximal_fn,
    "factorization": _run_factorization,
    "maximal-estimate": _run_maximal_estimate,
}


# -- persistence -----------------------------------------------------------------


def _fmt(value) -> str:
    if value is None:
        return ""
    if isinstance(value, float):
        return repr(value)
    return str(value)


def emit(record: ResultRecord, out_dir: str, formats=("jsonl", "csv")) -> list[Path]:
    """Write JSONL and/or CSV outputs; returns the written paths.

    The CSV column order is fixed (`CSV_HEADER`); plot-data CSVs collect the
    rows that carry a K- or dt-axis marker.  Empty payloads still produce
    valid files with headers.
    """
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    written = []
    if "jsonl" in formats:
        path = out / "results.jsonl"
        with open(path, "w", encoding="utf-8") as fh:
            header = {"kind": "header", "config_hash": record.config_hash,
                      "rng_algorithm": record.rng_algorithm,
                      "software_version": record.software_version,
                      "wall_clock_s": record.wall_clock_s,
                      "config": record.config.to_dict()}
            fh.write(json.dumps(header, sort_keys=True) + "\n")
            for row in record.payload:
                fh.write(json.dumps({"kind": "probe", **row}, sort_keys=True) + "\n")
        written.append(path)
    if "csv" in formats:
        path = out / "summary.csv"
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(CSV_HEADER + "\n")
            for row in record.payload:
                fh.write(",".join(_fmt(row.get(k)) for k in
                                  ("experiment", "p", "q", "theta", "K", "T",
                                   "N", "n_mc", "ratio", "stderr")) + "\n")
        written.append(path)
        for axis, header, fname in (("K", PLOT_K_HEADER, "plot_ratio_vs_K.csv"),
                                    ("dt", PLOT_DT_HEADER, "plot_ratio_vs_dt.csv")):
            path = out / fname
            with open(path, "w", encoding="utf-8") as fh:
                fh.write(header + "\n")
                for row in record.payload:
                    if row.get("axis") == axis:
                        fh.write(",".join(_fmt(row.get(k)) for k in
                                          ("experiment", axis, "ratio", "stderr")) + "\n")
            written.append(path)
    return written


def parse_jsonl(path) -> ResultRecord:
    """Inverse of the JSONL emission (wall clock restored from the header)."""
    with open(path, encoding="utf-8") as fh:
        lines = [json.loads(line) for line in fh if line.strip()]
    if not lines or lines[0].get("kind") != "header":
        raise ValidationError(f"{path} is not a result JSONL file")
    header = lines[0]
    payload = []
    for entry in lines[1:]:
        if entry.get("kind") != "probe":
            raise ValidationError("unexpected JSONL row kind")
        entry = dict(entry)
        entry.pop("kind")
        payload.append(entry)
    config = ExperimentConfig.from_dict(header["config"])
    return ResultRecord(config=config, config_hash=header["config_hash"],
                        rng_algorithm=header["rng_algorithm"],
                        payload=tuple(payload),
                        wall_clock_s=header["wall_clock_s"],
                        software_version=header["software_version"])
