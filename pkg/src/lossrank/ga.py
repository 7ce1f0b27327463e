"""Genetic algorithm search for a set of good graphical log-linear models.

Each restart evolves a fresh random population with elitism, linear ranking
selection, subgraph-exchange crossover and single-bit mutation until the
fittest graph has not changed for ``T`` generations. Each restart's winner is
added to the archive ``H``; the search stops when ``H`` holds ``K_max``
graphs or has not grown for ``J`` consecutive restarts.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .loglinear import ContingencyTable, Graph, bic_graph, loss_rank_graph
from .resampling import SeedLike, as_generator, as_seedspec, bootstrap_tables

__all__ = [
    "GAConfig",
    "GAResult",
    "encode",
    "decode",
    "linear_ranking_probs",
    "crossover",
    "mutate",
    "make_fitness",
    "ga_search",
    "write_log_csv",
    "write_archive_csv",
]


@dataclass(frozen=True)
class GAConfig:
    pop_size: int = 100
    beta: float = 1.5
    elite_frac: float = 0.05
    p_c: float = 0.9
    p_m: float = 0.01
    T: int = 5
    J: int = 5
    K_max: int = 10
    B: int = 200
    exchange: str = "induced"

    def __post_init__(self):
        if self.pop_size < 2:
            raise ValueError("pop_size must be at least 2")
        if not 1.0 <= self.beta <= 2.0:
            raise ValueError("beta must lie in [1, 2]")
        for name in ("elite_frac", "p_c", "p_m"):
            if not 0.0 <= getattr(self, name) <= 1.0:
                raise ValueError(f"{name} must lie in [0, 1]")
        if self.T < 1 or self.J < 1 or self.K_max < 1 or self.B < 1:
            raise ValueError("T, J, K_max and B must be positive")
        if self.exchange not in ("induced", "incident"):
            raise ValueError("exchange must be 'induced' or 'incident'")

    @property
    def n_elite(self) -> int:
        return min(self.pop_size, math.ceil(self.elite_frac * self.pop_size))


def encode(graph: Graph) -> np.ndarray:
    return np.array(graph.bits, dtype=np.int8)


def decode(bits, k: int) -> Graph:
    bits = tuple(int(b) for b in np.asarray(bits).ravel())
    if len(bits) != k * (k - 1) // 2:
        raise ValueError(f"a graph on {k} vertices needs {k * (k - 1) // 2} bits, got {len(bits)}")
    return Graph(k, bits)


def linear_ranking_probs(pop_size: int, beta: float = 1.5) -> np.ndarray:
    """Selection probability for each rank, best first.

    ``p_i = (beta - 2 (beta - 1) (i - 1) / (n - 1)) / n`` for ranks
    ``i = 1..n``; the probabilities sum to one for any ``beta`` in [1, 2].
    """
    if pop_size < 2:
        raise ValueError("linear ranking needs a population of at least 2")
    if not 1.0 <= beta <= 2.0:
        raise ValueError("beta must lie in [1, 2]")
    i = np.arange(pop_size)
    return (beta - 2.0 * (beta - 1.0) * i / (pop_size - 1)) / pop_size


def _pair_masks(k: int, subset: np.ndarray):
    iu, ju = np.triu_indices(k, 1)
    inside = subset[iu] & subset[ju]
    touching = subset[iu] | subset[ju]
    return inside, touching


def crossover(
    g1: Graph,
    g2: Graph,
    seed: SeedLike = 0,
    subset=None,
    exchange: str = "induced",
) -> tuple[Graph, Graph]:
    """Swap the subgraphs induced by a random vertex subset ``A``.

    ``A`` contains each vertex independently with probability 1/2 (uniform
    over subsets) unless given as ``subset``. With ``exchange="induced"`` only
    edges with both ends in ``A`` are swapped; ``"incident"`` also swaps edges
    with one end in ``A``.
    """
    if g1.k != g2.k:
        raise ValueError("parents must have the same number of vertices")
    k = g1.k
    if subset is None:
        mask = as_generator(seed).random(k) < 0.5
    else:
        mask = np.zeros(k, dtype=bool)
        mask[list(subset)] = True
    inside, touching = _pair_masks(k, mask)
    swap = inside if exchange == "induced" else touching
    a, b = encode(g1), encode(g2)
    return decode(np.where(swap, b, a), k), decode(np.where(swap, a, b), k)


def mutate(g: Graph, p_m: float, seed: SeedLike = 0) -> Graph:
    """With probability ``p_m`` flip one uniformly chosen bit."""
    if not 0.0 <= p_m <= 1.0:
        raise ValueError("p_m must lie in [0, 1]")
    rng = as_generator(seed)
    if not g.bits or rng.random() >= p_m:
        return g
    bits = encode(g)
    pos = rng.integers(0, bits.size)
    bits[pos] ^= 1
    return decode(bits, g.k)


def make_fitness(
    table: ContingencyTable,
    fitness: str,
    B: int = 200,
    seed: SeedLike = 0,
    resamples: Optional[np.ndarray] = None,
) -> Callable[[Graph], float]:
    """Cached criterion ``Graph -> float`` (smaller is fitter).

    For ``"LR"`` one stack of ``B`` bootstrap tables is drawn up front and
    shared by every evaluation, so the ranking of graphs is stable over a run.
    """
    crit = fitness.upper()
    cache: dict[Graph, float] = {}
    if crit == "LR":
        if resamples is None:
            resamples = bootstrap_tables(table.counts, B, seed)

        def score(g):
            return loss_rank_graph(table, g, resamples=resamples).value

    elif crit == "BIC":

        def score(g):
            return bic_graph(table, g)

    else:
        raise ValueError(f"unknown fitness {fitness!r}; expected 'LR' or 'BIC'")

    def cached(g: Graph) -> float:
        if g not in cache:
            cache[g] = score(g)
        return cache[g]

    cached.cache = cache
    return cached


@dataclass
class GAResult:
    """Archive of restart winners plus the per-generation run log.

    ``archive`` maps each graph in ``H`` to its criterion value, in the order
    the graphs were found. Each ``log`` row is
    ``(restart, generation, best_value, best_bitstring)``.
    """

    archive: dict[Graph, float]
    log: list[tuple[int, int, float, str]] = field(default_factory=list)
    restarts: int = 0

    @property
    def H(self) -> set[Graph]:
        return set(self.archive)

    def __contains__(self, g: Graph) -> bool:
        return g in self.archive


def _rank(pop, score):
    return sorted(pop, key=lambda g: (score(g), g.sort_key()))


def ga_search(
    table: ContingencyTable,
    config: GAConfig = GAConfig(),
    fitness: str = "LR",
    seed: SeedLike = 0,
    score: Optional[Callable[[Graph], float]] = None,
) -> GAResult:
    """Run the restart loop and return the archive ``H``.

    ``seed`` must be addressable: sub-stream 0 draws the shared bootstrap
    stack, sub-stream ``(1, restart)`` drives restart ``restart``. A
    precomputed ``score`` callable overrides ``fitness``.
    """
    base = as_seedspec(seed)
    k = table.k
    n_bits = k * (k - 1) // 2
    if score is None:
        score = make_fitness(table, fitness, config.B, base.child(0))
    probs = linear_ranking_probs(config.pop_size, config.beta)
    n_elite = config.n_elite
    result = GAResult({})
    j = 0
    restart = 0
    while len(result.archive) < config.K_max and j < config.J:
        rng = base.child(1, restart).generator()
        pop = [decode(rng.integers(0, 2, size=n_bits), k) for _ in range(config.pop_size)]
        pop = _rank(pop, score)
        best = pop[0]
        generation = 0
        result.log.append((restart, generation, score(best), best.bitstring))
        t = 0
        while t < config.T:
            elites = pop[:n_elite]
            picks = rng.choice(config.pop_size, size=config.pop_size - n_elite, p=probs)
            parents = [pop[i] for i in picks]
            children = []
            for a in range(0, len(parents) - 1, 2):
                g1, g2 = parents[a], parents[a + 1]
                if rng.random() < config.p_c:
                    g1, g2 = crossover(g1, g2, rng, exchange=config.exchange)
                children.extend((g1, g2))
            if len(parents) % 2:
                children.append(parents[-1])
            children = [mutate(g, config.p_m, rng) for g in children]
            pop = _rank(elites + children, score)
            generation += 1
            if pop[0] == best:
                t += 1
            else:
                best = pop[0]
                t = 0
            result.log.append((restart, generation, score(best), best.bitstring))
        if best in result.archive:
            j += 1
        else:
            result.archive[best] = score(best)
            j = 0
        restart += 1
    result.restarts = restart
    return result


def write_log_csv(result: GAResult, path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["restart", "generation", "best_fitness", "best_graph"])
        for row in result.log:
            w.writerow([row[0], row[1], repr(float(row[2])), row[3]])


def write_archive_csv(result: GAResult, path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["graph", "criterion"])
        for g, v in result.archive.items():
            w.writerow([g.bitstring, repr(float(v))])
