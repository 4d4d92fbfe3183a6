"""Experiment drivers: Monte-Carlo comparison, FDD conversion, validation, output files."""

from __future__ import annotations

import csv
import json
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .bessel import ArrayGeometry, cov_from_cheb
from .chebyshev import ChebCoeffs
from .cone import ConeFactors, beta_map, p_half
from .config import ExperimentConfig
from .conic import SolverSettings
from .estimators import cheb_aps, nnls_estimate, solve_p1, solve_p2
from .metrics import kl_divergence, l1_distortion, nmse
from .plv import eapm_run, plv_aps, plv_solve
from .regularizer import q_operator, sample_matrix
from .scenes import (HALF_PI, ApsFunction, PerturbSpec, covariance_oracle, make_clustered_aps,
                     normalize, perturb, random_scene, sample_lags, synth_snapshots,
                     toeplitz_from_lags)

TRIAL_FIELDS = ("trial", "model", "estimator", "status", "l1", "kl", "nmse", "wall_ms",
                "iterations", "residual", "error", "scene")
AGG_FIELDS = ("estimator", "n", "failures", "metric", "mean", "median", "q25", "q75")
PLOT_FIELDS = ("theta_deg", "truth") + ("p2", "p1", "plv", "eapm", "nnls")
PLOT_POINTS = 361


def trial_rng(seed: int, trial: int) -> np.random.Generator:
    """Independent stream per trial, so results do not depend on scheduling."""
    return np.random.default_rng(np.random.SeedSequence([int(seed), int(trial)]))


def solver_settings(cfg: ExperimentConfig) -> SolverSettings:
    return SolverSettings(max_iter=cfg.max_iter, eps_abs=cfg.eps, eps_rel=cfg.eps, rho=cfg.rho)


@dataclass
class Recovered:
    name: str
    aps: ApsFunction | None
    a: ChebCoeffs | None = None
    status: str = "ok"
    iterations: int = 0
    residual: float = float("nan")
    wall_ms: float = float("nan")
    error: str = ""
    # (basis, values): chebyshev, trig, nodes (EAPM samples) or grid (NNLS weights)
    coeffs: tuple | None = None

    def __post_init__(self):
        if self.coeffs is None and self.a is not None:
            self.coeffs = ("chebyshev", np.asarray(self.a.data))


class EstimatorSuite:
    """Runs the configured estimators on normalized lags.

    Only lags go in; the ground truth never reaches this class.
    """

    def __init__(self, cfg: ExperimentConfig, geom: ArrayGeometry | None = None):
        self.cfg = cfg
        self.geom = geom or ArrayGeometry(cfg.M, cfg.gamma)
        self.settings = solver_settings(cfg)
        self.reg = q_operator(cfg.K, eta=cfg.eta_ratio * np.pi / (cfg.K - 1), n0=cfg.n0)
        self.C = sample_matrix(cfg.p, cfg.K)

    def _one(self, name: str, r, done: dict) -> Recovered:
        cfg, geom = self.cfg, self.geom
        if name == "p1":
            e = solve_p1(r, geom, cfg.p, cfg.nodes, self.settings)
            done["p1_est"] = e
            return Recovered(name, e.aps(), e.a, e.report.status, e.report.iterations, e.fit)
        if name == "p2":
            lam = cfg.lambda_rel * float(np.linalg.norm(
                np.concatenate([np.real(r), np.imag(r[1:])])))
            e = solve_p2(r, geom, cfg.p, cfg.nodes, self.reg, self.C, lam, self.settings,
                         warm=done.get("p1_est"))
            return Recovered(name, e.aps(), e.a, e.report.status, e.report.iterations,
                             e.objective)
        if name == "plv":
            b = plv_solve(r, geom)
            return Recovered(name, plv_aps(b, geom), coeffs=("trig", b))
        if name == "eapm":
            res = eapm_run(r, geom, max_iter=cfg.eapm_iter)
            return Recovered(name, res.aps(), None, "ok" if res.converged else "flagged",
                             res.iterations, max(res.neg_residual, res.constraint_residual),
                             coeffs=("nodes", res.values))
        if name == "nnls":
            res = nnls_estimate(r, geom)
            return Recovered(name, res.aps(), None, "clipped" if res.clipped else "ok", 0,
                             res.residual, coeffs=("grid", res.weights))
        raise ValueError(f"unknown estimator {name!r}")

    def run(self, r, names=None) -> dict[str, Recovered]:
        names = self.cfg.estimators if names is None else names
        # P-1 first so P-2 can start from it
        order = sorted(names, key=lambda n: n != "p1")
        done: dict = {}
        out = {}
        for name in order:
            t0 = time.perf_counter()
            try:
                rec = self._one(name, r, done)
            except Exception as exc:  # recorded per trial, never aborts the run
                rec = Recovered(name, None, status="error", error=f"{type(exc).__name__}: {exc}")
            rec.wall_ms = 1e3 * (time.perf_counter() - t0)
            out[name] = rec
        return {n: out[n] for n in names}


def _scene_json(clusters) -> str:
    return json.dumps([[c.kind, c.mu, c.sigma, c.c] for c in clusters])


def draw_truth(cfg: ExperimentConfig, rng, model: str | None = None):
    """Random unit-mass scene. Returns ``(aps, scene_json)``."""
    model = model or cfg.model
    clusters = random_scene(model, rng, (cfg.q_min, cfg.q_max))
    aps = make_clustered_aps(clusters)
    if cfg.perturb_sigma > 0:
        pseed = int(rng.integers(2**63))
        aps = perturb(aps, PerturbSpec(cfg.perturb_sigma, cfg.perturb_window, pseed))
    geom = ArrayGeometry(cfg.M, cfg.gamma)
    mass = covariance_oracle(aps, geom, m=np.array([0]))[0].real
    return aps.scaled(1.0 / mass), _scene_json(clusters)


def _metric_row(trial, model, rec: Recovered, truth, scene, cfg) -> dict:
    row = {"trial": trial, "model": model, "estimator": rec.name, "status": rec.status,
           "l1": float("nan"), "kl": float("nan"), "nmse": float("nan"),
           "wall_ms": rec.wall_ms, "iterations": rec.iterations, "residual": rec.residual,
           "error": rec.error, "scene": scene}
    if rec.aps is not None and truth is not None:
        if "l1" in cfg.metrics:
            row["l1"] = l1_distortion(rec.aps, truth)
        if "kl" in cfg.metrics:
            row["kl"] = kl_divergence(rec.aps, truth)
    return row


def _plot_table(truth: ApsFunction, recs: dict[str, Recovered]) -> dict:
    th = np.linspace(-HALF_PI, HALF_PI, PLOT_POINTS)
    table = {"theta_deg": np.rad2deg(th), "truth": truth(th)}
    for name in PLOT_FIELDS[2:]:
        rec = recs.get(name)
        table[name] = rec.aps(th) if rec is not None and rec.aps is not None \
            else np.full(th.size, np.nan)
    return table


def _mc_trial(args):
    cfg, trial = args
    rng = trial_rng(cfg.seed, trial)
    truth, scene = draw_truth(cfg, rng)
    geom = ArrayGeometry(cfg.M, cfg.gamma)
    r = normalize(covariance_oracle(truth, geom))
    recs = EstimatorSuite(cfg, geom).run(r)
    rows = [_metric_row(trial, cfg.model, rec, truth, scene, cfg) for rec in recs.values()]
    plot = _plot_table(truth, recs) if trial == 0 else None
    return rows, plot


def _map(fn, jobs, workers: int):
    if workers <= 1:
        return [fn(j) for j in jobs]
    with ProcessPoolExecutor(workers) as ex:
        return list(ex.map(fn, jobs, chunksize=max(1, len(jobs) // (4 * workers))))


@dataclass
class RunResult:
    rows: list = field(default_factory=list)
    plot: dict | None = None
    wall_s: float = 0.0

    def column(self, estimator: str, metric: str) -> np.ndarray:
        return np.array([r[metric] for r in self.rows if r["estimator"] == estimator],
                        dtype=float)


def run_monte_carlo(cfg: ExperimentConfig) -> RunResult:
    """One row per (trial, estimator) with L1 and KL against the truth."""
    cfg.validate()
    t0 = time.perf_counter()
    out = _map(_mc_trial, [(cfg, t) for t in range(cfg.trials)], cfg.workers)
    rows = [row for trial_rows, _ in out for row in trial_rows]
    plot = out[0][1] if out else None
    return RunResult(rows, plot, time.perf_counter() - t0)


def random_cone_aps(p: int, rng) -> tuple[ChebCoeffs, str]:
    """Nonnegative degree-``p`` polynomial from random rank-one factors."""
    ph = p_half(p)
    u, v = rng.standard_normal(ph), rng.standard_normal(ph)
    a = beta_map(ConeFactors(np.outer(u, u), np.outer(v, v)), p)
    return a, json.dumps({"cone_degree": p})


def _fdd_trial(args):
    cfg, trial = args
    f = cfg.fdd
    rng = trial_rng(cfg.seed, trial)
    ul = ArrayGeometry(cfg.M, f.gamma_ul)
    dl = ArrayGeometry(cfg.M, f.gamma_dl)
    if f.truth == "cone":
        a, scene = random_cone_aps(cfg.p, rng)
        r_ul_exact = cov_from_cheb(a, ul)
        mass = r_ul_exact[0].real
        a = ChebCoeffs(a.data / mass)
        truth = cheb_aps(a)
        r_ul_exact = r_ul_exact / mass
        r_dl = cov_from_cheb(a, dl)
    else:
        truth, scene = draw_truth(cfg, rng)
        r_ul_exact = covariance_oracle(truth, ul)
        r_dl = covariance_oracle(truth, dl)
    if f.use_sample_cov:
        h = synth_snapshots(truth, ul, f.n_snap, f.n_rays, rng)
        r_ul = normalize(sample_lags(h))
    else:
        r_ul = normalize(r_ul_exact)
    R_dl = toeplitz_from_lags(r_dl)
    recs = EstimatorSuite(cfg, ul).run(r_ul)
    rows = []
    for rec in recs.values():
        row = _metric_row(trial, cfg.model if f.truth == "clustered" else "cone", rec,
                          None, scene, cfg)
        if rec.aps is not None:
            if rec.a is not None:
                r_hat = cov_from_cheb(rec.a, dl)
            else:
                r_hat = covariance_oracle(rec.aps, dl)
            row["nmse"] = nmse(toeplitz_from_lags(r_hat), R_dl)
        rows.append(row)
    return rows, None


def run_fdd(cfg: ExperimentConfig) -> RunResult:
    """Predict downlink covariances from uplink lags of a shared scene.

    Estimates at ``gamma_ul`` are converted to ``gamma_dl``: Chebyshev
    estimates through the Bessel series, the others by integrating their
    reconstructed spectrum.
    """
    cfg.validate()
    t0 = time.perf_counter()
    out = _map(_fdd_trial, [(cfg, t) for t in range(cfg.trials)], cfg.workers)
    return RunResult([row for rows, _ in out for row in rows], None, time.perf_counter() - t0)


def aggregate(rows, metrics=("l1", "kl", "nmse")) -> list[dict]:
    """Mean, median and quartiles per (estimator, metric) over finite values."""
    names = list(dict.fromkeys(r["estimator"] for r in rows))
    out = []
    for name in names:
        mine = [r for r in rows if r["estimator"] == name]
        fails = sum(r["status"] == "error" for r in mine)
        for metric in metrics:
            v = np.array([r[metric] for r in mine], dtype=float)
            v = v[np.isfinite(v)]
            if v.size == 0:
                continue
            q25, med, q75 = np.percentile(v, [25, 50, 75])
            out.append({"estimator": name, "n": int(v.size), "failures": fails,
                        "metric": metric, "mean": float(v.mean()), "median": float(med),
                        "q25": float(q25), "q75": float(q75)})
    return out


def paired_bootstrap(better: np.ndarray, worse: np.ndarray, n_boot: int = 2000,
                     seed: int = 0, strict: bool = True) -> float:
    """Share of paired resamples in which ``mean(better)`` beats ``mean(worse)``.

    ``strict=False`` counts ties as wins.
    """
    better = np.asarray(better, dtype=float)
    worse = np.asarray(worse, dtype=float)
    if better.shape != worse.shape or better.size == 0:
        raise ValueError("need paired, non-empty samples")
    d = worse - better
    idx = np.random.default_rng(seed).integers(0, d.size, size=(n_boot, d.size))
    means = d[idx].mean(axis=1)
    return float(np.mean(means > 0 if strict else means >= 0))


def _fmt(v):
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return v


def _write_csv(path: Path, header, rows):
    with path.open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([_fmt(row[k]) for k in header])


def emit_outputs(result: RunResult, out_dir, prefix: str = "montecarlo") -> list[Path]:
    """Write ``<prefix>_trials.csv``, ``<prefix>_aggregate.csv`` and, if present, ``<prefix>_plot.csv``.

    Trial columns are ``TRIAL_FIELDS``; aggregate columns ``AGG_FIELDS``;
    plot columns ``PLOT_FIELDS`` sampled on a uniform 0.5 degree grid.
    Floats use ``repr`` so identical runs give identical bytes apart from
    ``wall_ms``.
    """
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    paths = [out / f"{prefix}_trials.csv", out / f"{prefix}_aggregate.csv"]
    _write_csv(paths[0], TRIAL_FIELDS, result.rows)
    _write_csv(paths[1], AGG_FIELDS, aggregate(result.rows))
    if result.plot is not None:
        paths.append(out / f"{prefix}_plot.csv")
        n = len(result.plot["theta_deg"])
        rows = [{k: float(result.plot[k][i]) for k in PLOT_FIELDS} for i in range(n)]
        _write_csv(paths[2], PLOT_FIELDS, rows)
    return paths


def read_lags(path) -> np.ndarray:
    """Lags from text rows ``m,re,im``; ``m`` must run 0..M-1 in any order."""
    rows = []
    with Path(path).open() as fh:
        for line in fh:
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            parts = [t.strip() for t in line.split(",")]
            if len(parts) != 3:
                raise ValueError(f"expected m,re,im, got {line!r}")
            rows.append((int(parts[0]), float(parts[1]), float(parts[2])))
    if not rows:
        raise ValueError("no lags in file")
    rows.sort()
    if [m for m, _, _ in rows] != list(range(len(rows))):
        raise ValueError("lag indices must be 0..M-1 without gaps")
    return np.array([complex(re, im) for _, re, im in rows])


def recover(r, cfg: ExperimentConfig, out_dir) -> list[Path]:
    """Run the estimators on one lag vector; write APS samples and coefficients."""
    r = normalize(r)
    cfg = cfg.with_overrides(M=len(r))
    recs = EstimatorSuite(cfg).run(r)
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    th = np.linspace(-HALF_PI, HALF_PI, PLOT_POINTS)
    names = list(recs)
    samples = [{"theta_deg": float(np.rad2deg(t)),
                **{n: float(recs[n].aps(t)) if recs[n].aps is not None else float("nan")
                   for n in names}} for t in th]
    p1 = out / "recover_aps.csv"
    _write_csv(p1, ("theta_deg", *names), samples)
    p2 = out / "recover_coeffs.csv"
    coef_rows = []
    for n in names:
        if recs[n].coeffs is not None:
            basis, vals = recs[n].coeffs
            coef_rows += [{"estimator": n, "basis": basis, "index": k, "value": float(v)}
                          for k, v in enumerate(vals)]
    _write_csv(p2, ("estimator", "basis", "index", "value"), coef_rows)
    p3 = out / "recover_status.csv"
    _write_csv(p3, ("estimator", "status", "iterations", "residual", "wall_ms", "error"),
               [{"estimator": n, "status": recs[n].status, "iterations": recs[n].iterations,
                 "residual": recs[n].residual, "wall_ms": recs[n].wall_ms,
                 "error": recs[n].error} for n in names])
    return [p1, p2, p3]


def plot_data(cfg: ExperimentConfig, trial: int = 0):
    """Truth and estimator samples for a single Monte-Carlo trial."""
    rng = trial_rng(cfg.seed, trial)
    truth, _ = draw_truth(cfg, rng)
    geom = ArrayGeometry(cfg.M, cfg.gamma)
    r = normalize(covariance_oracle(truth, geom))
    recs = EstimatorSuite(cfg, geom).run(r)
    return _plot_table(truth, recs)
