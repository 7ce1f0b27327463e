"""Seeded simulation studies: selection accuracy tables and criterion curves.

Every experiment is a grid of cells times a number of replications.
Replication ``r`` of cell ``c`` draws everything from
``SeedSpec(seed, r).child(c)``, so results are identical whether replications
run serially or across worker processes.
"""

from __future__ import annotations

import csv
import hashlib
import io
import json
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, fields, replace
from functools import partial
from typing import Any, Optional

import numpy as np

from . import clusters, intervals, loglinear
from .ga import GAConfig, ga_search, make_fitness
from .resampling import SeedSpec, bootstrap_tables

__all__ = [
    "ExperimentConfig",
    "ExperimentResult",
    "EXPERIMENTS",
    "CLUSTER_MEANS",
    "run_experiment",
    "run_table1",
    "run_table2",
    "run_table3",
    "run_table4",
    "run_curves",
    "rows_to_csv",
]

EXPERIMENTS = ("table1", "table2", "table3", "table4", "curves")

CLUSTER_MEANS = {
    2: [(0, 0), (0, 5)],
    3: [(0, 0), (0, 5), (5, 0)],
    4: [(0, 0), (0, 5), (5, 0), (5, 5)],
}

_DESK = {
    "table1": dict(replications=30, N=8, m0=4, n=[50, 100, 200, 300], h=[0.05, 0.1, 0.2, 0.3]),
    "table2": dict(replications=30, clusters=[2, 3, 4], sigma=[1.0, 2.0, 3.0], n=[50], K_max=[10]),
    "table3": dict(replications=30, k=3, levels=3, true_model="12/23", n=[200, 1000, 5000]),
    "table4": dict(replications=10, k=4, levels=2, true_model="12/34", n=[5000], K_max=[2, 5, 10]),
    "curves": dict(replications=1, N=8, m0=2, h=[0.1], n=[100]),
}

_FULL = {
    "table1": dict(replications=100),
    "table2": dict(replications=100),
    "table3": dict(replications=100, n=[200, 500, 1000, 2000, 5000]),
    "table4": dict(replications=10, k=6, levels=2, true_model="123/456", n=[10000], K_max=[10, 20, 50]),
    "curves": dict(),
}


@dataclass(frozen=True)
class ExperimentConfig:
    """Experiment settings; ``None`` fields take the experiment's defaults.

    List-valued fields are grid axes. In ``table2`` ``n`` is the number of
    points per cluster; in ``table4`` ``K_max`` lists archive sizes.
    """

    experiment: str
    replications: Optional[int] = None
    seed: int = 20101
    B: int = 200
    n: Optional[list] = None
    h: Optional[list] = None
    sigma: Optional[list] = None
    clusters: Optional[list] = None
    K_max: Optional[list] = None
    N: Optional[int] = None
    m0: Optional[int] = None
    restarts: int = 10
    k: Optional[int] = None
    levels: Optional[int] = None
    true_model: Optional[str] = None
    strength: float = 0.5
    paper_scale: bool = False

    @classmethod
    def from_dict(cls, data: dict) -> "ExperimentConfig":
        known = {f.name for f in fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise ValueError(f"unknown config keys: {sorted(unknown)}")
        return cls(**data)

    def resolved(self) -> "ExperimentConfig":
        """Fill defaults and validate. Raises ValueError on bad settings."""
        if self.experiment not in EXPERIMENTS:
            raise ValueError(f"unknown experiment {self.experiment!r}")
        defaults = dict(_DESK[self.experiment])
        if self.paper_scale:
            defaults.update(_FULL[self.experiment])
        filled = {k: v for k, v in defaults.items() if getattr(self, k) is None}
        cfg = replace(self, **filled)
        for name in ("n", "h", "sigma", "clusters", "K_max"):
            v = getattr(cfg, name)
            if v is not None and not isinstance(v, (list, tuple)):
                cfg = replace(cfg, **{name: [v]})
        cfg.validate()
        return cfg

    def validate(self):
        if self.replications is None or self.replications < 1:
            raise ValueError("replications must be at least 1")
        if not 0 <= self.seed < 2**64:
            raise ValueError("seed must be an unsigned 64-bit integer")
        if self.B < 1:
            raise ValueError("B must be at least 1")
        if self.restarts < 1:
            raise ValueError("restarts must be at least 1")
        if any(int(v) < 1 for v in self.n or []):
            raise ValueError("sample sizes must be positive")
        if self.experiment in ("table1", "curves"):
            for h in self.h:
                intervals.IntervalsProblem(self.N, self.m0, h, 1)
        if self.experiment == "table2":
            for c in self.clusters:
                if c not in CLUSTER_MEANS:
                    raise ValueError(f"cluster settings exist for {sorted(CLUSTER_MEANS)} clusters, not {c}")
            if any(s <= 0 for s in self.sigma):
                raise ValueError("sigma must be positive")
            if min(self.K_max) < 2:
                raise ValueError("K_max must be at least 2 for the CH comparison")
        if self.experiment in ("table3", "table4"):
            if self.k < 2 or self.levels < 2:
                raise ValueError("need k >= 2 variables with at least 2 levels")
            loglinear.Graph.from_formula(self.true_model, self.k)
        if self.experiment == "table4" and min(self.K_max) < 1:
            raise ValueError("K_max must be positive")

    def hash(self) -> str:
        text = json.dumps(asdict(self), sort_keys=True, default=list)
        return hashlib.sha256(text.encode()).hexdigest()[:12]


@dataclass
class ExperimentResult:
    config: ExperimentConfig
    columns: list[str]
    rows: list[dict[str, Any]]
    detail_columns: list[str]
    detail: list[dict[str, Any]]

    def to_csv(self) -> str:
        return rows_to_csv(self.columns, self.rows)

    def detail_csv(self) -> str:
        return rows_to_csv(self.detail_columns, self.detail)


def _fmt(v):
    if isinstance(v, (float, np.floating)):
        return repr(round(float(v), 10))
    return str(v)


def rows_to_csv(columns, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(columns)
    for r in rows:
        w.writerow([_fmt(r[c]) for c in columns])
    return buf.getvalue()


def _map(fn, items, workers):
    if workers and workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            return list(pool.map(fn, items, chunksize=1))
    return [fn(x) for x in items]


def _seed(cfg, rep, cell):
    return SeedSpec(cfg.seed, rep).child(cell)


def _summarise(cfg, cell_keys, detail, methods, target="correct"):
    """Aggregate per-replication hits into proportion rows."""
    rows = []
    order = []
    groups: dict = {}
    for d in detail:
        key = tuple(d[c] for c in cell_keys)
        if key not in groups:
            order.append(key)
            groups[key] = []
        groups[key].append(d)
    h = cfg.hash()
    for key in order:
        reps = groups[key]
        for m in methods:
            hits = sum(int(d[f"{m}_{target}"]) for d in reps)
            p = hits / len(reps)
            row = dict(zip(cell_keys, key))
            row.update(method=m, hits=hits, reps=len(reps), proportion=p,
                       se=float(np.sqrt(p * (1 - p) / len(reps))), seed=cfg.seed, config_hash=h)
            rows.append(row)
    return rows


_SUMMARY_TAIL = ["method", "hits", "reps", "proportion", "se", "seed", "config_hash"]


# -- table 1 ---------------------------------------------------------------

def _table1_rep(cfg, job):
    cell, rep, n, h = job
    s = _seed(cfg, rep, cell)
    data = intervals.generate_intervals_data(intervals.IntervalsProblem(cfg.N, cfg.m0, h, n), s.child(0))
    lr = intervals.select_model(data, cfg.N, cfg.B, s.child(1), "LR")
    rc = intervals.select_model(data, cfg.N, cfg.B, s.child(2), "RC")
    return dict(n=n, h=h, replication=rep, LR_selected=lr, RC_selected=rc,
                LR_correct=int(lr == cfg.m0), RC_correct=int(rc == cfg.m0))


def run_table1(config: ExperimentConfig, workers: int = 1) -> ExperimentResult:
    cfg = config.resolved()
    cells = [(n, h) for n in cfg.n for h in cfg.h]
    jobs = [(c, r, n, h) for c, (n, h) in enumerate(cells) for r in range(cfg.replications)]
    detail = _map(partial(_table1_rep, cfg), jobs, workers)
    rows = _summarise(cfg, ["n", "h"], detail, ["LR", "RC"])
    dcols = ["n", "h", "replication", "LR_selected", "RC_selected", "LR_correct", "RC_correct"]
    return ExperimentResult(cfg, ["n", "h"] + _SUMMARY_TAIL, rows, dcols, detail)


# -- table 2 ---------------------------------------------------------------

def _table2_rep(cfg, job):
    cell, rep, n_clusters, sigma, per_cluster, K_max = job
    s = _seed(cfg, rep, cell)
    X = clusters.generate_gaussian_clusters(CLUSTER_MEANS[n_clusters], sigma, per_cluster, s.child(0))
    lr = clusters.select_num_clusters(X, K_max, cfg.B, cfg.restarts, s.child(1), "LR")
    ch = clusters.select_num_clusters(X, K_max, cfg.B, cfg.restarts, s.child(2), "CH")
    return dict(clusters=n_clusters, sigma=sigma, per_cluster=per_cluster, K_max=K_max, replication=rep,
                LR_selected=lr, CH_selected=ch, LR_correct=int(lr == n_clusters), CH_correct=int(ch == n_clusters))


def run_table2(config: ExperimentConfig, workers: int = 1) -> ExperimentResult:
    cfg = config.resolved()
    cells = [(c, s, n, K) for c in cfg.clusters for s in cfg.sigma for n in cfg.n for K in cfg.K_max]
    jobs = [(i,) + (r,) + cell for i, cell in enumerate(cells) for r in range(cfg.replications)]
    detail = _map(partial(_table2_rep, cfg), jobs, workers)
    keys = ["clusters", "sigma", "per_cluster", "K_max"]
    rows = _summarise(cfg, keys, detail, ["CH", "LR"])
    dcols = keys + ["replication", "CH_selected", "LR_selected", "CH_correct", "LR_correct"]
    return ExperimentResult(cfg, keys + _SUMMARY_TAIL, rows, dcols, detail)


# -- table 3 ---------------------------------------------------------------

def _table3_rep(cfg, job):
    cell, rep, n = job
    s = _seed(cfg, rep, cell)
    true = loglinear.Graph.from_formula(cfg.true_model, cfg.k)
    table = loglinear.generate_from_graph(true, (cfg.levels,) * cfg.k, n, s.child(0), strength=cfg.strength)
    lr = loglinear.exhaustive_select(table, "LR", cfg.B, s.child(1))
    bic = loglinear.exhaustive_select(table, "BIC")
    return dict(n=n, replication=rep, LR_selected=lr.bitstring, BIC_selected=bic.bitstring,
                LR_correct=int(lr == true), BIC_correct=int(bic == true))


def run_table3(config: ExperimentConfig, workers: int = 1) -> ExperimentResult:
    cfg = config.resolved()
    jobs = [(c, r, n) for c, n in enumerate(cfg.n) for r in range(cfg.replications)]
    detail = _map(partial(_table3_rep, cfg), jobs, workers)
    rows = _summarise(cfg, ["n"], detail, ["LR", "BIC"])
    dcols = ["n", "replication", "LR_selected", "BIC_selected", "LR_correct", "BIC_correct"]
    return ExperimentResult(cfg, ["n"] + _SUMMARY_TAIL, rows, dcols, detail)


# -- table 4 ---------------------------------------------------------------

_ORACLE_MAX_K = 5


def _table4_rep(cfg, job):
    """One GA run per fitness with the largest K; smaller K are prefixes of its archive."""
    cell, rep, n = job
    s = _seed(cfg, rep, cell)
    true = loglinear.Graph.from_formula(cfg.true_model, cfg.k)
    table = loglinear.generate_from_graph(true, (cfg.levels,) * cfg.k, n, s.child(0), strength=cfg.strength)
    resamples = bootstrap_tables(table.counts, cfg.B, s.child(1))
    out = []
    for f, fitness in enumerate(("LR", "BIC")):
        score = make_fitness(table, fitness, resamples=resamples)
        oracle = None
        if cfg.k <= _ORACLE_MAX_K:
            oracle = min(loglinear.all_graphs(cfg.k), key=lambda g: (score(g), g.sort_key()))
        result = ga_search(table, GAConfig(K_max=max(cfg.K_max), B=cfg.B), fitness, s.child(2, f), score=score)
        found = list(result.archive)
        for K in cfg.K_max:
            prefix = found[:K]
            row = dict(n=n, K=K, fitness=f"GA-{fitness}", replication=rep, archive_size=len(prefix),
                       restarts=result.restarts, covers_true=int(true in prefix),
                       covers_optimum="" if oracle is None else int(oracle in prefix),
                       optimum="" if oracle is None else oracle.bitstring)
            out.append(row)
    return out


def run_table4(config: ExperimentConfig, workers: int = 1) -> ExperimentResult:
    cfg = config.resolved()
    jobs = [(c, r, n) for c, n in enumerate(cfg.n) for r in range(cfg.replications)]
    detail = [row for rows in _map(partial(_table4_rep, cfg), jobs, workers) for row in rows]
    h = cfg.hash()
    rows = []
    for n in cfg.n:
        for K in cfg.K_max:
            for fitness in ("GA-LR", "GA-BIC"):
                reps = [d for d in detail if d["n"] == n and d["K"] == K and d["fitness"] == fitness]
                targets = ["true"] + (["optimum"] if cfg.k <= _ORACLE_MAX_K else [])
                for target in targets:
                    hits = sum(int(d[f"covers_{target}"]) for d in reps)
                    p = hits / len(reps)
                    rows.append(dict(n=n, K=K, method=fitness, target=target, hits=hits, reps=len(reps),
                                     proportion=p, se=float(np.sqrt(p * (1 - p) / len(reps))),
                                     seed=cfg.seed, config_hash=h))
    cols = ["n", "K", "method", "target", "hits", "reps", "proportion", "se", "seed", "config_hash"]
    dcols = ["n", "K", "fitness", "replication", "archive_size", "restarts", "covers_true", "covers_optimum", "optimum"]
    return ExperimentResult(cfg, cols, rows, dcols, detail)


# -- curves ----------------------------------------------------------------

def run_curves(config: ExperimentConfig, workers: int = 1) -> ExperimentResult:
    """LR and RC across m = 1..N for one seeded dataset per (n, h) cell."""
    cfg = config.resolved()
    rows, detail = [], []
    h_ = cfg.hash()
    cell = 0
    for n in cfg.n:
        for h in cfg.h:
            for rep in range(cfg.replications):
                s = _seed(cfg, rep, cell)
                data = intervals.generate_intervals_data(intervals.IntervalsProblem(cfg.N, cfg.m0, h, n), s.child(0))
                lr, rc = intervals.criterion_curves(data, cfg.N, cfg.B, s.child(1))
                for m in range(1, cfg.N + 1):
                    rows.append(dict(n=n, h=h, replication=rep, m=m, LR=lr[m - 1], RC=rc[m - 1],
                                     LR_argmin=int(np.argmin(lr)) + 1, RC_argmin=int(np.argmin(rc)) + 1,
                                     seed=cfg.seed, config_hash=h_))
            cell += 1
    cols = ["n", "h", "replication", "m", "LR", "RC", "LR_argmin", "RC_argmin", "seed", "config_hash"]
    return ExperimentResult(cfg, cols, rows, cols, rows)


_RUNNERS = {"table1": run_table1, "table2": run_table2, "table3": run_table3, "table4": run_table4, "curves": run_curves}


def run_experiment(config: ExperimentConfig, workers: int = 1) -> ExperimentResult:
    return _RUNNERS[config.experiment](config, workers)
