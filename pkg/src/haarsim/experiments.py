"""Reproducible Monte Carlo experiments with CSV/JSON output.

Each experiment kind maps to one runner. A run is a pure function of its
configuration: replicate r of a labeled cell draws from the stream
``stream_id_for(label, r)``, so per-replicate records are identical for any
worker count and any scheduling. Aggregation folds records in replicate
order regardless of completion order.
"""

from __future__ import annotations

import csv
import json
import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from functools import partial
from typing import Callable

import numpy as np
from scipy.special import betainc, ndtr

from haarsim import __version__
from haarsim.density import (
    BlockSpec,
    log_density_ratio,
    tv_lower_bound,
)
from haarsim.errors import ConfigError
from haarsim.moments import (
    cov_trace12_asymptotic,
    expected_trace_pow_asymptotic,
    mc_trace_moments,
    var_trace2_asymptotic,
)
from haarsim.numerics import (
    chi2_ratio_tail_bound,
    coupling_tail_bound,
    gamma_ratio_bounds,
    ks_statistic,
    normal_tail_sandwich,
)
from haarsim.sampler import (
    SeedSpec,
    critical_columns,
    floor_columns,
    gaussian_matrix,
    max_coupling_dev,
    sample_haar_coupled,
    stream_id_for,
)

__all__ = [
    "ExperimentConfig",
    "ExperimentRun",
    "run_experiment",
    "run_vardist",
    "run_lognormal",
    "run_eps_transition",
    "run_borel",
    "run_bounds",
    "run_moments",
    "emit",
    "load_json_run",
]

KINDS = ("vardist", "lognormal", "eps-transition", "borel", "bounds", "moments")


@dataclass(frozen=True)
class ExperimentConfig:
    """Full description of one experiment; serialized into every output."""

    kind: str
    n_grid: tuple[int, ...] = ()
    p: int | None = None
    q: int | None = None
    x: float | None = None
    y: float | None = None
    alpha_grid: tuple[float, ...] = ()
    replicates: int = 100
    master_seed: int = 0
    workers: int = 1
    out: str | None = None
    fmt: str = "json"

    def validate(self) -> None:
        if self.kind not in KINDS:
            raise ConfigError(f"unknown kind {self.kind!r}; expected one of {KINDS}")
        if self.replicates < 1:
            raise ConfigError(f"replicates must be >= 1, got {self.replicates}")
        if self.workers < 1:
            raise ConfigError(f"workers must be >= 1, got {self.workers}")
        if self.fmt not in ("csv", "json"):
            raise ConfigError(f"format must be csv or json, got {self.fmt!r}")
        if self.kind in ("vardist", "lognormal", "eps-transition", "borel") and not self.n_grid:
            raise ConfigError(f"kind {self.kind!r} needs a nonempty n grid")
        if any(n < 1 for n in self.n_grid):
            raise ConfigError("n grid entries must be positive")
        if self.kind in ("vardist", "lognormal"):
            has_dims = self.p is not None and self.q is not None
            has_xy = self.x is not None and self.y is not None
            if not (has_dims or has_xy):
                raise ConfigError(f"kind {self.kind!r} needs (p, q) or (x, y)")
        if self.kind == "eps-transition" and not self.alpha_grid:
            raise ConfigError("eps-transition needs a nonempty alpha grid")
        if any(a <= 0 for a in self.alpha_grid):
            raise ConfigError("alpha grid entries must be positive")
        if self.kind == "moments" and (self.p is None or self.q is None):
            raise ConfigError("moments needs p and q")


@dataclass
class ExperimentRun:
    """Config echo, ordered per-replicate records, and summary statistics."""

    config: dict
    replicates: list[dict]
    summary: dict
    seed: int
    version: str = field(default=__version__)
    wall_clock: float = 0.0


def _block_spec(cfg: ExperimentConfig, n: int) -> BlockSpec:
    if cfg.x is not None and cfg.y is not None:
        return BlockSpec.from_xy(n, cfg.x, cfg.y)
    return BlockSpec.from_dims(n, cfg.p, cfg.q)


def _map_replicates(fn: Callable[[int], dict], n_reps: int, workers: int) -> list[dict]:
    """Evaluate fn(0..n_reps-1); order of the result never depends on workers."""
    if workers <= 1:
        return [fn(r) for r in range(n_reps)]
    chunk = max(1, n_reps // (workers * 8))
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, range(n_reps), chunksize=chunk))


def _summ(values: np.ndarray) -> dict:
    v = np.asarray(values, dtype=np.float64)
    lo, med, hi = np.percentile(v, [25.0, 50.0, 75.0])
    return {
        "mean": float(np.mean(v)),
        "se": float(np.std(v, ddof=1) / math.sqrt(v.size)) if v.size > 1 else 0.0,
        "median": float(med),
        "iqr": float(hi - lo),
    }


# --------------------------------------------------------------------------
# vardist: E|ratio - 1| per (n, p, q) cell
# --------------------------------------------------------------------------


def _vardist_rep(master_seed: int, n: int, p: int, q: int, rep: int) -> dict:
    label = f"vardist[n={n},p={p},q={q}]"
    spec = BlockSpec.from_dims(n, p, q)
    x_mat = gaussian_matrix(p, q, SeedSpec(master_seed, stream_id_for(label, rep)))
    ratio = log_density_ratio(x_mat, spec)
    return {
        "cell": label,
        "n": n,
        "p": p,
        "q": q,
        "replicate": rep,
        "log_const": ratio.log_const,
        "log_spectral": ratio.log_spectral,
        "abs_dev": ratio.abs_ratio_minus_one(),
        "boundary_hit": int(ratio.boundary_hit),
    }


def run_vardist(cfg: ExperimentConfig) -> ExperimentRun:
    """Monte Carlo estimate of the block-vs-normal variation distance."""
    cfg.validate()
    t0 = time.perf_counter()
    records: list[dict] = []
    summary: dict = {"cells": {}}
    for n in cfg.n_grid:
        spec = _block_spec(cfg, n)
        fn = partial(_vardist_rep, cfg.master_seed, n, spec.p, spec.q)
        recs = _map_replicates(fn, cfg.replicates, cfg.workers)
        records.extend(recs)
        devs = np.array([r["abs_dev"] for r in recs])
        cell = _summ(devs)
        cell["boundary_fraction"] = float(np.mean([r["boundary_hit"] for r in recs]))
        summary["cells"][f"n={n},p={spec.p},q={spec.q}"] = cell
    summary["wall_clock_s"] = time.perf_counter() - t0
    return ExperimentRun(
        config=asdict(cfg),
        replicates=records,
        summary=summary,
        seed=cfg.master_seed,
        wall_clock=summary["wall_clock_s"],
    )


# --------------------------------------------------------------------------
# lognormal: law of log(ratio) per (n, x, y) cell
# --------------------------------------------------------------------------


def _lognormal_rep(master_seed: int, n: int, p: int, q: int, rep: int) -> dict:
    label = f"lognormal[n={n},p={p},q={q}]"
    spec = BlockSpec.from_dims(n, p, q)
    x_mat = gaussian_matrix(p, q, SeedSpec(master_seed, stream_id_for(label, rep)))
    ratio = log_density_ratio(x_mat, spec)
    return {
        "cell": label,
        "n": n,
        "p": p,
        "q": q,
        "replicate": rep,
        "log_ratio": ratio.log_ratio,
        "boundary_hit": int(ratio.boundary_hit),
    }


def run_lognormal(cfg: ExperimentConfig) -> ExperimentRun:
    """Sample of log density ratios with its fit to the limiting normal law."""
    cfg.validate()
    if cfg.x is None or cfg.y is None:
        raise ConfigError("lognormal needs explicit (x, y) scales")
    t0 = time.perf_counter()
    records: list[dict] = []
    summary: dict = {"cells": {}}
    limit_mean = -(cfg.x * cfg.y) ** 2 / 8.0
    limit_sd = cfg.x * cfg.y / 4.0
    for n in cfg.n_grid:
        spec = _block_spec(cfg, n)
        fn = partial(_lognormal_rep, cfg.master_seed, n, spec.p, spec.q)
        recs = _map_replicates(fn, cfg.replicates, cfg.workers)
        records.extend(recs)
        vals = np.array([r["log_ratio"] for r in recs])
        ks = ks_statistic(vals, lambda z: ndtr((z - limit_mean) / limit_sd))
        cell = _summ(vals)
        cell.update(
            {
                "variance": float(np.var(vals, ddof=1)),
                "limit_mean_log": limit_mean,
                "limit_sd_log": limit_sd,
                "ks_to_limit": ks.statistic,
                "ks_threshold_5pct": ks.threshold_5pct,
            }
        )
        summary["cells"][f"n={n},p={spec.p},q={spec.q}"] = cell
    summary["wall_clock_s"] = time.perf_counter() - t0
    return ExperimentRun(
        config=asdict(cfg),
        replicates=records,
        summary=summary,
        seed=cfg.master_seed,
        wall_clock=summary["wall_clock_s"],
    )


# --------------------------------------------------------------------------
# eps-transition: coupling deviation maxima at the critical column counts
# --------------------------------------------------------------------------


def _eps_rep(master_seed: int, n: int, alphas: tuple[float, ...], rep: int) -> dict:
    label = f"eps-transition[n={n}]"
    m_crit = {a: critical_columns(n, a) for a in alphas}
    m_floor = {a: max(1, floor_columns(n, a)) for a in alphas}
    m_max = max(max(m_crit.values()), max(m_floor.values()))
    coupling = sample_haar_coupled(
        n, SeedSpec(master_seed, stream_id_for(label, rep)), columns=m_max
    )
    rec: dict = {"cell": label, "n": n, "replicate": rep}
    for a in alphas:
        rec[f"eps_crit[a={a:g}]"] = max_coupling_dev(coupling, m_crit[a])
        rec[f"eps_floor[a={a:g}]"] = max_coupling_dev(coupling, m_floor[a])
    return rec


def run_eps_transition(cfg: ExperimentConfig) -> ExperimentRun:
    """Deviation maxima at both column-count rules, per (n, alpha)."""
    cfg.validate()
    t0 = time.perf_counter()
    records: list[dict] = []
    summary: dict = {"cells": {}}
    alphas = tuple(cfg.alpha_grid)
    for n in cfg.n_grid:
        fn = partial(_eps_rep, cfg.master_seed, n, alphas)
        recs = _map_replicates(fn, cfg.replicates, cfg.workers)
        records.extend(recs)
        for a in alphas:
            crit = np.array([r[f"eps_crit[a={a:g}]"] for r in recs])
            flor = np.array([r[f"eps_floor[a={a:g}]"] for r in recs])
            cell = {
                "m_critical": critical_columns(n, a),
                "m_floor": max(1, floor_columns(n, a)),
                "critical": _summ(crit),
                "floor": _summ(flor),
                "normalized_median": float(np.median(crit)) / (2.0 * math.sqrt(a)),
            }
            summary["cells"][f"n={n},alpha={a:g}"] = cell
    summary["wall_clock_s"] = time.perf_counter() - t0
    return ExperimentRun(
        config=asdict(cfg),
        replicates=records,
        summary=summary,
        seed=cfg.master_seed,
        wall_clock=summary["wall_clock_s"],
    )


# --------------------------------------------------------------------------
# borel: first-entry law of a Haar column
# --------------------------------------------------------------------------


def _borel_rep(master_seed: int, n: int, rep: int) -> dict:
    label = f"borel[n={n}]"
    coupling = sample_haar_coupled(
        n, SeedSpec(master_seed, stream_id_for(label, rep)), columns=1
    )
    g11 = float(coupling.Gamma[0, 0])
    return {"cell": label, "n": n, "replicate": rep, "gamma11": g11}


def run_borel(cfg: ExperimentConfig) -> ExperimentRun:
    """sqrt(n) * gamma_11 vs the standard normal; gamma_11^2 vs its exact Beta law."""
    cfg.validate()
    t0 = time.perf_counter()
    records: list[dict] = []
    summary: dict = {"cells": {}}
    for n in cfg.n_grid:
        fn = partial(_borel_rep, cfg.master_seed, n)
        recs = _map_replicates(fn, cfg.replicates, cfg.workers)
        records.extend(recs)
        g11 = np.array([r["gamma11"] for r in recs])
        ks_norm = ks_statistic(math.sqrt(n) * g11, ndtr)
        ks_beta = ks_statistic(
            g11**2, lambda z: betainc(0.5, (n - 1) / 2.0, np.clip(z, 0.0, 1.0))
        )
        summary["cells"][f"n={n}"] = {
            "ks_normal": ks_norm.statistic,
            "ks_beta": ks_beta.statistic,
            "ks_threshold_5pct": ks_norm.threshold_5pct,
        }
    summary["wall_clock_s"] = time.perf_counter() - t0
    return ExperimentRun(
        config=asdict(cfg),
        replicates=records,
        summary=summary,
        seed=cfg.master_seed,
        wall_clock=summary["wall_clock_s"],
    )


# --------------------------------------------------------------------------
# bounds: inequality suites (analytic sweeps + Monte Carlo frequencies)
# --------------------------------------------------------------------------

_CHI2_CELL = {"n": 200, "m": 100, "x_grid": (0.5, 1.0, 1.5, 2.0)}
_COUPLING_CELL = {"n": 10_000, "m": 100, "r": 0.2, "s": 6.0, "t": 3.0}


def _chi2_ratio_rep(master_seed: int, n: int, m: int, rep: int) -> dict:
    label = f"bounds-chi2[n={n},m={m}]"
    z = gaussian_matrix(n, 1, SeedSpec(master_seed, stream_id_for(label, rep)))[:, 0]
    sq = z * z
    s_m = float(np.sum(sq[:m]))
    s_n = float(np.sum(sq))
    return {"cell": label, "n": n, "m": m, "replicate": rep, "ratio_dev": abs(s_n / s_m - n / m)}


def _coupling_dev_rep(master_seed: int, n: int, m: int, rep: int) -> dict:
    label = f"bounds-coupling[n={n},m={m}]"
    coupling = sample_haar_coupled(
        n, SeedSpec(master_seed, stream_id_for(label, rep)), columns=m
    )
    return {"cell": label, "n": n, "m": m, "replicate": rep, "eps": max_coupling_dev(coupling, m)}


def run_bounds(cfg: ExperimentConfig) -> ExperimentRun:
    """Verify the analytic inequality suites and tabulate bound-vs-frequency pairs.

    Monte Carlo cells: the chi-square sum-ratio deviation at (n=200, m=100)
    with ``cfg.replicates`` replicates, and the coupling deviation bound at
    (n=10^4, m=100) with min(cfg.replicates, 200) replicates (each coupling
    replicate costs an orthogonalization, so the count is capped).
    """
    cfg.validate()
    t0 = time.perf_counter()
    records: list[dict] = []
    summary: dict = {}

    # gamma-quotient sweep over n = 1..1000, both parts
    worst = {"part1": 0.0, "part2": 0.0}
    violations = 0
    for n in range(1, 1001):
        lo, ratio, hi = gamma_ratio_bounds(n, part=1)
        if not lo < ratio < hi:
            violations += 1
        worst["part1"] = max(worst["part1"], max(lo - ratio, ratio - hi))
        lo, ratio, hi = gamma_ratio_bounds(n, part=2)
        if not lo < ratio < hi:
            violations += 1
        worst["part2"] = max(worst["part2"], max(lo - ratio, ratio - hi))
    summary["gamma_ratio"] = {"n_max": 1000, "violations": violations, "worst_excess": worst}

    # normal tail sandwich on a 100-point log grid
    grid = np.logspace(math.log10(0.01), math.log10(8.0), 100)
    sandwich_viol = 0
    for xv in grid:
        ts = normal_tail_sandwich(float(xv))
        if not (ts.lower <= ts.exact <= ts.upper):
            sandwich_viol += 1
    summary["tail_sandwich"] = {"grid_points": 100, "violations": sandwich_viol}

    # chi-square ratio: empirical frequency vs bound on the x grid
    cell = _CHI2_CELL
    fn = partial(_chi2_ratio_rep, cfg.master_seed, cell["n"], cell["m"])
    recs = _map_replicates(fn, cfg.replicates, cfg.workers)
    records.extend(recs)
    devs = np.array([r["ratio_dev"] for r in recs])
    table = []
    for xv in cell["x_grid"]:
        freq = float(np.mean(devs >= xv))
        se = math.sqrt(max(freq * (1 - freq), 1.0 / len(devs)) / len(devs))
        table.append(
            {
                "x": xv,
                "empirical": freq,
                "se": se,
                "bound": chi2_ratio_tail_bound(cell["n"], cell["m"], xv),
            }
        )
    summary["chi2_ratio"] = {"n": cell["n"], "m": cell["m"], "N": len(devs), "table": table}

    # coupling deviation: evaluated bound next to the observed frequency
    cell = _COUPLING_CELL
    n_coup = min(cfg.replicates, 200)
    fn = partial(_coupling_dev_rep, cfg.master_seed, cell["n"], cell["m"])
    recs = _map_replicates(fn, n_coup, cfg.workers)
    records.extend(recs)
    eps = np.array([r["eps"] for r in recs])
    bound = coupling_tail_bound(cell["n"], cell["m"], cell["r"], cell["s"], cell["t"])
    freq = float(np.mean(eps >= bound.threshold))
    summary["coupling_bound"] = {
        **cell,
        "N": int(n_coup),
        "threshold": bound.threshold,
        "bound": bound.bound,
        "empirical": freq,
        "se": math.sqrt(max(freq * (1 - freq), 1.0 / n_coup) / n_coup),
        "max_observed": float(np.max(eps)),
    }
    summary["wall_clock_s"] = time.perf_counter() - t0
    return ExperimentRun(
        config=asdict(cfg),
        replicates=records,
        summary=summary,
        seed=cfg.master_seed,
        wall_clock=summary["wall_clock_s"],
    )


# --------------------------------------------------------------------------
# moments: trace-moment Monte Carlo vs formulas
# --------------------------------------------------------------------------


def run_moments(cfg: ExperimentConfig) -> ExperimentRun:
    """Trace-moment Monte Carlo against the exact and leading-order formulas."""
    cfg.validate()
    t0 = time.perf_counter()
    p, q = cfg.p, cfg.q
    result = mc_trace_moments(
        p, q, k_max=4, N=max(cfg.replicates, 100), seed=SeedSpec(cfg.master_seed)
    )
    records = [
        {
            "cell": f"moments[p={p},q={q}]",
            "k": rep.k,
            "mc_mean": rep.mc_mean,
            "mc_se": rep.mc_se,
            "exact": rep.exact,
            "asymptotic": rep.asymptotic,
            "N": rep.N,
        }
        for rep in result.reports
    ]
    summary = {
        "var_tr2": result.var_tr2,
        "var_tr2_se": result.var_tr2_se,
        "var_tr2_asymptotic": var_trace2_asymptotic(p, q),
        "cov_tr12": result.cov_tr12,
        "cov_tr12_se": result.cov_tr12_se,
        "cov_tr12_asymptotic": cov_trace12_asymptotic(p, q),
        "asymptotic_k": {k: expected_trace_pow_asymptotic(p, q, k) for k in (1, 2, 3, 4)},
    }
    summary["wall_clock_s"] = time.perf_counter() - t0
    return ExperimentRun(
        config=asdict(cfg),
        replicates=records,
        summary=summary,
        seed=cfg.master_seed,
        wall_clock=summary["wall_clock_s"],
    )


_RUNNERS = {
    "vardist": run_vardist,
    "lognormal": run_lognormal,
    "eps-transition": run_eps_transition,
    "borel": run_borel,
    "bounds": run_bounds,
    "moments": run_moments,
}


def run_experiment(cfg: ExperimentConfig) -> ExperimentRun:
    cfg.validate()
    return _RUNNERS[cfg.kind](cfg)


# --------------------------------------------------------------------------
# output
# --------------------------------------------------------------------------

_CSV_HEADER = ("record", "cell", "replicate", "field", "value", "master_seed", "version")


def _csv_rows(run: ExperimentRun):
    seed, ver = str(run.seed), run.version
    for key, val in sorted(run.config.items()):
        yield ("config", "", "", key, _scalar(val), seed, ver)
    for rec in run.replicates:
        cell = str(rec.get("cell", ""))
        rep = str(rec.get("replicate", ""))
        for key, val in rec.items():
            if key in ("cell", "replicate"):
                continue
            yield ("replicate", cell, rep, key, _scalar(val), seed, ver)
    for key, val in _flatten(run.summary):
        yield ("summary", "", "", key, _scalar(val), seed, ver)


def _flatten(obj, prefix: str = ""):
    if isinstance(obj, dict):
        for key, val in obj.items():
            yield from _flatten(val, f"{prefix}{key}.")
    elif isinstance(obj, (list, tuple)):
        for idx, val in enumerate(obj):
            yield from _flatten(val, f"{prefix}{idx}.")
    else:
        yield prefix.rstrip("."), obj


def _scalar(val) -> str:
    if isinstance(val, float):
        return repr(val)  # shortest round-trip form
    if val is None:
        return ""
    return str(val)


def emit(run: ExperimentRun, fmt: str, path: str) -> None:
    """Write a run to ``path`` as CSV (long format) or a single JSON object.

    Both forms carry the master seed and the library version; floats are
    written in shortest round-trip form, so re-parsing reproduces every
    summary field exactly and per-replicate sections are byte-stable for a
    fixed configuration.
    """
    if fmt == "json":
        payload = {
            "config": run.config,
            "replicates": run.replicates,
            "summary": run.summary,
            "seed": run.seed,
            "version": run.version,
        }
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(payload, fh, indent=1)
            fh.write("\n")
    elif fmt == "csv":
        with open(path, "w", encoding="utf-8", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(_CSV_HEADER)
            writer.writerows(_csv_rows(run))
    else:
        raise ConfigError(f"format must be csv or json, got {fmt!r}")


def load_json_run(path: str) -> dict:
    """Re-parse an emitted JSON run."""
    with open(path, "r", encoding="utf-8") as fh:
        return json.load(fh)
