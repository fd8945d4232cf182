"""Seeded Monte-Carlo campaigns.

Each experiment is split into independent work units: a block of
consecutive sample indices, or a single random circulant for
``good-mass``.  Every unit draws from its own stream (see
:mod:`circbs.streams`) and returns a mergeable partial: a histogram, moment
sums, or a count.  Partials are reduced in unit order.  The emitted numbers
therefore depend only on ``(master_seed, config)``, never on the worker
count.
"""

from __future__ import annotations

import json
import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict

import numpy as np

from .collisions import (
    estimate_good_probability_mass,
    good_fraction_exact,
    good_mask,
    n_good_formula,
    n_good_laurent,
    sample_outcome_uniform,
)
from .config import ExperimentConfig
from .matrices import random_circulant
from .permanent import expected_gaussian_permanent_sq, permanent_batch
from .records import ResultRecord, atomic_write_text, write_records
from .spectra import (
    Histogram2D,
    ProbeAccumulator,
    eigenvalues,
    fidelity,
    fidelity_error,
    probe_coordinates,
    sample_truncations,
)
from .stats import Moments
from .streams import ENSEMBLE_IDS, blocks, stream

__all__ = [
    "run_avg_permanent",
    "run_campaign",
    "run_eigen_fidelity",
    "run_eigen_scaling",
    "run_good_fraction",
    "run_good_mass",
    "run_tv_probe",
    "run_experiment",
]


def _call(args):
    fn, rest = args[0], args[1:]
    return fn(*rest)


def _map(tasks, workers):
    """Evaluate ``(fn, *args)`` tuples, results in task order."""
    if workers <= 1 or len(tasks) <= 1:
        return [_call(t) for t in tasks]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(_call, tasks, chunksize=max(1, len(tasks) // (4 * workers))))


# -- work units (top level so they pickle) ---------------------------------


def _eigen_block(seed, exp, n, m, ens, b, size, bins, r):
    rng = stream(seed, exp, n, m, ENSEMBLE_IDS[ens], b)
    mats = sample_truncations(ens, n, m, size, rng)
    return Histogram2D.empty(bins, r).add(eigenvalues(mats, seed=(seed, exp, n, m, ens, b)))


def _perm_block(seed, n, m, ens, b, size):
    rng = stream(seed, "avg-permanent", n, m, ENSEMBLE_IDS[ens], b)
    vals = np.abs(permanent_batch(sample_truncations(ens, n, m, size, rng))) ** 2
    return Moments().add_many(vals)


def _fraction_block(seed, n, m, b, size):
    rng = stream(seed, "good-fraction", n, m, b)
    return int(good_mask(sample_outcome_uniform(n, m, rng, size=size), m).sum())


def _mass_unit(seed, n, m, i, samples):
    rng = stream(seed, "good-mass", n, m, i)
    u = random_circulant(m, rng)
    est = estimate_good_probability_mass(u, n, samples, rng)
    return est.value, est.error


def _probe_block(seed, n, m, ens, b, size, bins):
    rng = stream(seed, "tv-probe", n, m, ENSEMBLE_IDS[ens], b)
    return ProbeAccumulator(n, m, bins).add(probe_coordinates(n, m, size, rng, ens))


# -- runners ----------------------------------------------------------------


def _record(cfg, n, m, x, label, stat, value, error, samples):
    return ResultRecord(
        experiment=cfg.experiment,
        n=int(n),
        m=int(m),
        x=float(x),
        label=label,
        statistic=stat,
        value=float(value),
        error=None if error is None else float(error),
        samples=int(samples),
        master_seed=int(cfg.master_seed),
        block_size=int(cfg.block_size),
    )


def _fmt(v, e=None):
    return f"{v:.6g}" if e is None else f"{v:.6g}±{e:.2g}"


def _eigen(cfg: ExperimentConfig, echo):
    n_min = min(cfg.n)
    needed = sorted({e for p in cfg.pairs for e in p}, key=list(ENSEMBLE_IDS).index)
    points = cfg.points()
    per_n = {}
    for n in cfg.n:
        if cfg.experiment == "eigen-scaling" and cfg.equalize_eigenvalues:
            per_n[n] = max(1, round(cfg.samples * n_min / n))
        else:
            per_n[n] = cfg.samples
    tasks, index = [], []
    for n, m, _ in points:
        for ens in needed:
            for b, size in blocks(per_n[n], cfg.block_size):
                tasks.append((_eigen_block, cfg.master_seed, cfg.experiment, n, m, ens, b, size, cfg.bins, cfg.range))
                index.append((n, m, ens))
    hists = {}
    for key, h in zip(index, _map(tasks, cfg.workers)):
        if key in hists:
            hists[key].merge(h)
        else:
            hists[key] = h
    records = []
    for n, m, x in points:
        parts = []
        for a, b in cfg.pairs:
            ha, hb = hists[(n, m, a)], hists[(n, m, b)]
            f = fidelity(ha, hb)
            err = fidelity_error(f, ha.total, hb.total)
            records.append(_record(cfg, n, m, x, f"{a}|{b}", "fidelity", f, err, per_n[n]))
            parts.append(f"F({a},{b})={_fmt(f, err)}")
        echo(f"{cfg.experiment} n={n} m={m}: " + ", ".join(parts))
    return records


def _avg_permanent(cfg: ExperimentConfig, echo):
    tasks, index = [], []
    points = cfg.points()
    for n, m, _ in points:
        for ens in cfg.ensembles:
            for b, size in blocks(cfg.samples, cfg.block_size):
                tasks.append((_perm_block, cfg.master_seed, n, m, ens, b, size))
                index.append((n, m, ens))
    mom = {}
    for key, part in zip(index, _map(tasks, cfg.workers)):
        mom.setdefault(key, Moments()).merge(part)
    records = []
    for n, m, x in points:
        ref = expected_gaussian_permanent_sq(n, m)
        records.append(_record(cfg, n, m, x, "gaussian-reference", "reference_perm_sq", ref, None, 0))
        parts = []
        for ens in cfg.ensembles:
            mo = mom[(n, m, ens)]
            dist = abs(mo.mean - ref) / ref
            records += [
                _record(cfg, n, m, x, ens, "mean_perm_sq", mo.mean, mo.sem, mo.count),
                _record(cfg, n, m, x, ens, "std_perm_sq", mo.std, None, mo.count),
                _record(cfg, n, m, x, ens, "relative_distance", dist, mo.sem / ref, mo.count),
                _record(cfg, n, m, x, ens, "relative_distance_popstd", dist, mo.std / ref, mo.count),
            ]
            parts.append(f"d({ens})={_fmt(dist, mo.sem / ref)}")
        echo(f"avg-permanent n={n} m={m}: " + ", ".join(parts))
    return records


def _good_fraction(cfg: ExperimentConfig, echo):
    tasks, index = [], []
    points = cfg.points()
    for n, m, _ in points:
        for b, size in blocks(cfg.samples, cfg.block_size):
            tasks.append((_fraction_block, cfg.master_seed, n, m, b, size))
            index.append((n, m))
    good = {}
    for key, c in zip(index, _map(tasks, cfg.workers)):
        good[key] = good.get(key, 0) + c
    records = []
    for n, m, x in points:
        p = good[(n, m)] / cfg.samples
        err = math.sqrt(p * (1 - p) / cfg.samples)
        records += [
            _record(cfg, n, m, x, "uniform", "good_fraction", p, err, cfg.samples),
            _record(cfg, n, m, x, "exact", "exact_fraction", good_fraction_exact(n, m), None, 0),
            _record(cfg, n, m, x, "formula", "formula_fraction", n_good_formula(n, m), None, 0),
            _record(cfg, n, m, x, "laurent", "laurent_fraction", n_good_laurent(n, m), None, 0),
        ]
        echo(f"good-fraction n={n} m={m}: {_fmt(p, err)} (exact {good_fraction_exact(n, m):.6g})")
    return records


def _good_mass(cfg: ExperimentConfig, echo):
    tasks, index = [], []
    points = cfg.points()
    for n, m, _ in points:
        for i in range(cfg.matrices):
            tasks.append((_mass_unit, cfg.master_seed, n, m, i, cfg.samples))
            index.append((n, m))
    vals = {}
    for key, (v, e) in zip(index, _map(tasks, cfg.workers)):
        vals.setdefault(key, []).append((v, e))
    records = []
    for n, m, x in points:
        arr = np.array(vals[(n, m)])
        mom = Moments().add_many(arr[:, 0])
        within = math.fsum(arr[:, 1]) / arr.shape[0]
        total = cfg.matrices * cfg.samples
        records += [
            _record(cfg, n, m, x, "circulant", "good_mass", mom.mean, mom.sem, total),
            _record(cfg, n, m, x, "circulant", "bad_mass", 1.0 - mom.mean, mom.sem, total),
            _record(cfg, n, m, x, "circulant", "good_mass_std_over_matrices", mom.std, None, cfg.matrices),
            _record(cfg, n, m, x, "circulant", "mean_within_matrix_error", within, None, cfg.samples),
        ]
        echo(f"good-mass n={n} m={m}: {_fmt(mom.mean, mom.sem)} over {cfg.matrices} circulants")
    return records


def _tv_probe(cfg: ExperimentConfig, echo):
    tasks, index = [], []
    points = cfg.points()
    for n, m, _ in points:
        for ens in cfg.ensembles:
            for b, size in blocks(cfg.samples, cfg.block_size):
                tasks.append((_probe_block, cfg.master_seed, n, m, ens, b, size, cfg.bins))
                index.append((n, m, ens))
    acc = {}
    for key, part in zip(index, _map(tasks, cfg.workers)):
        if key in acc:
            acc[key].merge(part)
        else:
            acc[key] = part
    records = []
    for n, m, x in points:
        parts = []
        for ens in cfg.ensembles:
            res = acc[(n, m, ens)].result()
            records += [
                _record(cfg, n, m, x, ens, "max_tv", res.max_tv, None, res.samples),
                _record(cfg, n, m, x, ens, "mean_tv", float(res.tv.mean()), None, res.samples),
                _record(cfg, n, m, x, ens, "tv_noise_floor", res.tv_noise_floor, None, res.samples),
                _record(cfg, n, m, x, ens, "max_corr", res.max_corr, None, res.samples),
                _record(cfg, n, m, x, ens, "max_sq_corr", res.max_sq_corr, None, res.samples),
            ]
            parts.append(f"{ens}: maxTV={res.max_tv:.4g} maxcorr={res.max_corr:.3g}")
        echo(f"tv-probe n={n} m={m}: " + "; ".join(parts))
    return records


_RUNNERS = {
    "eigen-fidelity": _eigen,
    "eigen-scaling": _eigen,
    "avg-permanent": _avg_permanent,
    "good-fraction": _good_fraction,
    "good-mass": _good_mass,
    "tv-probe": _tv_probe,
}


def _quiet(_line):
    pass


def run_experiment(cfg: ExperimentConfig, echo=_quiet) -> list[ResultRecord]:
    """Validate `cfg` and compute its records without touching the filesystem."""
    cfg.validate()
    return _RUNNERS[cfg.experiment](cfg, echo)


def run_campaign(cfg: ExperimentConfig, echo=print) -> list[ResultRecord]:
    """Run `cfg` and atomically write the result file plus a ``.meta.json`` sidecar.

    The sidecar holds wall time and worker count; the result file holds only
    numbers determined by the seed and config, so it is byte-identical across
    worker counts.
    """
    cfg.validate()
    start = time.perf_counter()
    records = _RUNNERS[cfg.experiment](cfg, echo)
    wall = time.perf_counter() - start
    write_records(records, cfg.output, cfg.format)
    meta = asdict(cfg)
    meta.update(workers=cfg.workers, wall_time_s=round(wall, 3), records=len(records))
    atomic_write_text(str(cfg.output) + ".meta.json", json.dumps(meta, indent=2, default=list) + "\n")
    return records


def _config(experiment, n_list, samples, master_seed, workers, grid, **kw):
    return ExperimentConfig(
        experiment=experiment,
        n=tuple(n_list),
        samples=samples,
        master_seed=master_seed,
        workers=workers,
        **grid,
        **kw,
    )


def run_eigen_fidelity(n_list, m_list, samples, master_seed=2021, workers=1, **kw):
    cfg = _config("eigen-fidelity", n_list, samples, master_seed, workers, {"m": tuple(m_list)}, **kw)
    return run_experiment(cfg)


def run_eigen_scaling(n_list, m_over_n, samples, master_seed=2021, workers=1, **kw):
    cfg = _config("eigen-scaling", n_list, samples, master_seed, workers, {"m_over_n": tuple(m_over_n)}, **kw)
    return run_experiment(cfg)


def run_avg_permanent(n_list, m_list, samples, master_seed=2021, workers=1, **kw):
    cfg = _config("avg-permanent", n_list, samples, master_seed, workers, {"m": tuple(m_list)}, **kw)
    return run_experiment(cfg)


def run_good_fraction(n_list, m_per_n3, samples, master_seed=2021, workers=1, **kw):
    cfg = _config("good-fraction", n_list, samples, master_seed, workers, {"m_per_n3": tuple(m_per_n3)}, **kw)
    return run_experiment(cfg)


def run_good_mass(n_list, m_list, samples, matrices=100, master_seed=2021, workers=1, **kw):
    cfg = _config(
        "good-mass", n_list, samples, master_seed, workers, {"m": tuple(m_list)}, matrices=matrices, **kw
    )
    return run_experiment(cfg)


def run_tv_probe(n_list, m_list, samples, bins=16, master_seed=2021, workers=1, **kw):
    cfg = _config("tv-probe", n_list, samples, master_seed, workers, {"m": tuple(m_list)}, bins=bins, **kw)
    return run_experiment(cfg)
