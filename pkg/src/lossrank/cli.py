"""Command-line front end.

Exit status: 0 on success, 2 on an invalid configuration, 1 on a runtime failure.
"""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import replace

import numpy as np

from . import clusters, intervals, loglinear
from .experiments import CLUSTER_MEANS, EXPERIMENTS, ExperimentConfig, rows_to_csv, run_experiment
from .ga import GAConfig, ga_search, write_log_csv
from .resampling import SeedSpec

EXIT_OK, EXIT_RUNTIME, EXIT_CONFIG = 0, 1, 2

_TAIL_DOC = "proportion = hits/reps, se = sqrt(p(1-p)/reps); every row carries seed and config_hash."

_EPILOG = {
    "table1": "CSV columns: n,h,method(LR|RC),hits,reps,proportion,se,seed,config_hash. " + _TAIL_DOC,
    "table2": "CSV columns: clusters,sigma,per_cluster,K_max,method(CH|LR),hits,reps,proportion,se,seed,config_hash. "
    + _TAIL_DOC,
    "table3": "CSV columns: n,method(LR|BIC),hits,reps,proportion,se,seed,config_hash. " + _TAIL_DOC,
    "table4": "CSV columns: n,K,method(GA-LR|GA-BIC),target(true|optimum),hits,reps,proportion,se,seed,config_hash. "
    "target=optimum is coverage of the exhaustive-search minimiser (only for k <= 5). " + _TAIL_DOC,
    "curves": "CSV columns: n,h,replication,m,LR,RC,LR_argmin,RC_argmin,seed,config_hash.",
    "intervals": "CSV columns: m,LR,RC,empirical_risk,selected_LR,selected_RC.",
    "clusters": "CSV columns: K,LR,CH,kmeans_objective,selected_LR,selected_CH (CH is empty at K=1).",
    "loglinear": "CSV columns: graph,formula,edges,dimension,LR,BIC,selected_LR,selected_BIC.",
    "ga": "CSV columns: graph,formula,criterion (the archive H, in discovery order). "
    "--log writes restart,generation,best_fitness,best_graph.",
}


_HELP = {
    "table1": "intervals classifier: LR vs RC correct-identification rates",
    "table2": "number of clusters: LR vs CH correct-identification rates",
    "table3": "three-way tables: exhaustive LR vs BIC correct-identification rates",
    "table4": "GA search: how often the archive H covers the true graph and the exhaustive optimum",
    "curves": "LR and RC values across m for seeded intervals datasets (plot-ready)",
}


class ConfigError(ValueError):
    pass


def _common(p: argparse.ArgumentParser):
    p.add_argument("--seed", type=int, help="master seed (unsigned 64-bit)")
    p.add_argument("--reps", type=int, help="replications per cell")
    p.add_argument("--bootstrap", type=int, help="resamples B per loss rank / penalty estimate")
    p.add_argument("--config", help="JSON file whose keys mirror ExperimentConfig fields")
    p.add_argument("--out", help="output CSV path (default: stdout)")
    p.add_argument("--paper-scale", action="store_true", help="full-size settings: 100 replications and the larger grids")
    p.add_argument("--workers", type=int, default=1, help="worker processes; output does not depend on it")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="lossrank", description="Loss rank model selection experiments.")
    sub = parser.add_subparsers(dest="command", required=True)
    for name in EXPERIMENTS:
        p = sub.add_parser(name, help=_HELP[name], epilog=_EPILOG[name])
        _common(p)
        p.add_argument("--detail", help="also write the per-replication log to this CSV")

    p = sub.add_parser("intervals", help="LR and RC across models for one labelled dataset", epilog=_EPILOG["intervals"])
    _common(p)
    p.add_argument("--input", help="CSV with columns x,y (1-based x); otherwise data are simulated")
    p.add_argument("--N", type=int, default=8)
    p.add_argument("--m0", type=int, default=2)
    p.add_argument("--h", type=float, default=0.1)
    p.add_argument("--n", type=int, default=100)

    p = sub.add_parser("clusters", help="LR and CH across K for one point set", epilog=_EPILOG["clusters"])
    _common(p)
    p.add_argument("--input", help="CSV of coordinates, one point per row, with a header")
    p.add_argument("--clusters", type=int, default=2, choices=sorted(CLUSTER_MEANS))
    p.add_argument("--sigma", type=float, default=1.0)
    p.add_argument("--per-cluster", type=int, default=50)
    p.add_argument("--K-max", type=int, default=10)
    p.add_argument("--restarts", type=int, default=10)

    for name in ("loglinear", "ga"):
        p = sub.add_parser(name, epilog=_EPILOG[name],
                           help="exhaustive LR/BIC scores for one table" if name == "loglinear"
                           else "GA search for a set of good graphs")
        _common(p)
        p.add_argument("--input", help="contingency table CSV (v1..vk,count); otherwise simulated")
        p.add_argument("--true-model", default="12/23" if name == "loglinear" else "12/34")
        p.add_argument("--k", type=int, default=3 if name == "loglinear" else 4)
        p.add_argument("--levels", type=int, default=3 if name == "loglinear" else 2)
        p.add_argument("--n", type=int, default=1000 if name == "loglinear" else 5000)
        p.add_argument("--strength", type=float, default=0.5)
    p.add_argument("--fitness", choices=["LR", "BIC"], default="LR")
    p.add_argument("--K-max", type=int, default=10)
    p.add_argument("--log", help="write the per-generation run log to this CSV")
    return parser


def _load_config(args, experiment: str) -> ExperimentConfig:
    data = {}
    if args.config:
        try:
            with open(args.config) as fh:
                data = json.load(fh)
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read config {args.config}: {exc}") from exc
        if not isinstance(data, dict):
            raise ConfigError("config JSON must be an object")
        data.pop("output", None)
        if data.setdefault("experiment", experiment) != experiment:
            raise ConfigError(f"config is for {data['experiment']!r}, not {experiment!r}")
    data["experiment"] = experiment
    try:
        cfg = ExperimentConfig.from_dict(data)
        overrides = {}
        if args.seed is not None:
            overrides["seed"] = args.seed
        if args.reps is not None:
            overrides["replications"] = args.reps
        if args.bootstrap is not None:
            overrides["B"] = args.bootstrap
        if args.paper_scale:
            overrides["paper_scale"] = True
        return replace(cfg, **overrides).resolved()
    except (TypeError, ValueError) as exc:
        raise ConfigError(str(exc)) from exc


def _emit(text: str, path):
    if path:
        with open(path, "w", newline="") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _seed(args) -> SeedSpec:
    seed = 20101 if args.seed is None else args.seed
    try:
        return SeedSpec(seed)
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc


def _B(args) -> int:
    B = 200 if args.bootstrap is None else args.bootstrap
    if B < 1:
        raise ConfigError("--bootstrap must be at least 1")
    return B


def _cmd_intervals(args):
    seed, B = _seed(args), _B(args)
    if args.input:
        raw = np.loadtxt(args.input, delimiter=",", skiprows=1, ndmin=2)
        data = intervals.LabeledDataset(raw[:, 0].astype(int), raw[:, 1].astype(int))
        if data.x.max() > 2**args.N:
            raise ConfigError(f"inputs exceed 2**N = {2 ** args.N}; raise --N")
    else:
        try:
            problem = intervals.IntervalsProblem(args.N, args.m0, args.h, args.n)
        except ValueError as exc:
            raise ConfigError(str(exc)) from exc
        data = intervals.generate_intervals_data(problem, seed.child(0))
    lr, rc = intervals.criterion_curves(data, args.N, B, seed.child(1))
    rows = [dict(m=m, LR=lr[m - 1], RC=rc[m - 1], empirical_risk=intervals.min_empirical_risk(data, m, args.N),
                 selected_LR=int(np.argmin(lr)) + 1, selected_RC=int(np.argmin(rc)) + 1)
            for m in range(1, args.N + 1)]
    return rows_to_csv(["m", "LR", "RC", "empirical_risk", "selected_LR", "selected_RC"], rows)


def _cmd_clusters(args):
    seed, B = _seed(args), _B(args)
    if args.input:
        X = np.loadtxt(args.input, delimiter=",", skiprows=1, ndmin=2)
    else:
        if args.sigma <= 0:
            raise ConfigError("--sigma must be positive")
        X = clusters.generate_gaussian_clusters(CLUSTER_MEANS[args.clusters], args.sigma, args.per_cluster, seed.child(0))
    if not 1 <= args.K_max <= X.shape[0]:
        raise ConfigError("--K-max must lie in 1..n")
    lr_seed, ch_seed = seed.child(1), seed.child(2)
    rows = []
    for K in range(1, args.K_max + 1):
        lr = clusters.loss_rank_clusters(X, K, B, args.restarts, lr_seed.child(K)).value
        fit = clusters.kmeans(X, K, args.restarts, ch_seed.child(K, 0))
        ch = clusters.ch_criterion(X, fit) if 2 <= K < X.shape[0] else ""
        rows.append(dict(K=K, LR=lr, CH=ch, kmeans_objective=fit.objective))
    best_lr = min(rows, key=lambda r: (r["LR"], r["K"]))["K"]
    ch_rows = [r for r in rows if r["CH"] != ""]
    best_ch = max(ch_rows, key=lambda r: (r["CH"], -r["K"]))["K"] if ch_rows else ""
    for r in rows:
        r.update(selected_LR=best_lr, selected_CH=best_ch)
    return rows_to_csv(["K", "LR", "CH", "kmeans_objective", "selected_LR", "selected_CH"], rows)


def _table(args, seed):
    if args.input:
        return loglinear.read_table_csv(args.input)
    try:
        true = loglinear.Graph.from_formula(args.true_model, args.k)
    except (ValueError, IndexError) as exc:
        raise ConfigError(f"bad --true-model for k={args.k}: {exc}") from exc
    if args.levels < 2 or args.n < 1:
        raise ConfigError("--levels must be >= 2 and --n >= 1")
    return loglinear.generate_from_graph(true, (args.levels,) * args.k, args.n, seed.child(0), strength=args.strength)


def _cmd_loglinear(args):
    seed, B = _seed(args), _B(args)
    table = _table(args, seed)
    graphs = loglinear.all_graphs(table.k)
    lr = loglinear.score_graphs(table, graphs, "LR", B, seed.child(1))
    bic = loglinear.score_graphs(table, graphs, "BIC")
    best_lr = min(graphs, key=lambda g: (lr[g], g.sort_key()))
    best_bic = min(graphs, key=lambda g: (bic[g], g.sort_key()))
    rows = [dict(graph=g.bitstring, formula=g.formula(), edges=g.n_edges,
                 dimension=loglinear.model_dimension(g, table.levels), LR=lr[g], BIC=bic[g],
                 selected_LR=best_lr.bitstring, selected_BIC=best_bic.bitstring) for g in graphs]
    return rows_to_csv(["graph", "formula", "edges", "dimension", "LR", "BIC", "selected_LR", "selected_BIC"], rows)


def _cmd_ga(args):
    seed, B = _seed(args), _B(args)
    table = _table(args, seed)
    try:
        config = GAConfig(K_max=args.K_max, B=B)
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    result = ga_search(table, config, args.fitness, seed.child(1))
    if args.log:
        write_log_csv(result, args.log)
    rows = [dict(graph=g.bitstring, formula=g.formula(), criterion=v) for g, v in result.archive.items()]
    return rows_to_csv(["graph", "formula", "criterion"], rows)


_SINGLE = {"intervals": _cmd_intervals, "clusters": _cmd_clusters, "loglinear": _cmd_loglinear, "ga": _cmd_ga}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.workers < 1:
            raise ConfigError("--workers must be at least 1")
        if args.command in EXPERIMENTS:
            cfg = _load_config(args, args.command)
            result = run_experiment(cfg, workers=args.workers)
            _emit(result.to_csv(), args.out)
            if args.detail:
                _emit(result.detail_csv(), args.detail)
        else:
            _emit(_SINGLE[args.command](args), args.out)
    except ConfigError as exc:
        print(f"lossrank: invalid configuration: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except Exception as exc:  # noqa: BLE001 - report and map to the runtime exit code
        print(f"lossrank: error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
