"""Loss rank model selection for classification, clustering and graphical log-linear models."""

from .resampling import (
    LossRankEstimate,
    SeedSpec,
    bootstrap_rows,
    bootstrap_table,
    bootstrap_tables,
    draw_rademacher,
    relabel,
)
from .intervals import (
    IntervalsProblem,
    LabeledDataset,
    generate_intervals_data,
    loss_rank_classification,
    min_empirical_risk,
    rc_criterion,
    select_model,
    sup_rademacher_term,
)
from .clusters import (
    Clustering,
    UndefinedCriterionError,
    ch_criterion,
    generate_gaussian_clusters,
    kmeans,
    loss_rank_clusters,
    select_num_clusters,
    within_dissimilarity,
)
from .loglinear import (
    ContingencyTable,
    FittedTable,
    Graph,
    bic_graph,
    exhaustive_select,
    generate_from_graph,
    ipf_fit,
    loss_loglinear,
    loss_rank_graph,
    maximal_cliques,
    model_dimension,
)
from .ga import GAConfig, GAResult, crossover, decode, encode, ga_search, linear_ranking_probs, mutate

__version__ = "0.1.0"
