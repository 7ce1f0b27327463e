"""Graphical log-linear models on contingency tables.

A graph on ``k`` discrete variables generates the hierarchical log-linear
model whose generators are its maximal cliques. Maximum likelihood fits are
computed by iterative proportional fitting (IPF) on the clique marginals,
which also handles non-decomposable graphs.

Vertices are 0-based throughout the Python API; formula strings such as
``"12/23"`` use 1-based vertex labels for readability.
"""

from __future__ import annotations

import csv
import itertools
from dataclasses import dataclass
from typing import Iterable, Optional, Sequence

import numpy as np
from scipy.special import gammaln, xlogy

from .resampling import LossRankEstimate, SeedLike, as_generator, bootstrap_tables

__all__ = [
    "Graph",
    "ContingencyTable",
    "FittedTable",
    "maximal_cliques",
    "ipf_fit",
    "loss_loglinear",
    "loss_rank_graph",
    "model_dimension",
    "bic_graph",
    "all_graphs",
    "score_graphs",
    "exhaustive_select",
    "default_cell_probs",
    "generate_from_graph",
    "read_table_csv",
    "write_table_csv",
    "MAX_EXHAUSTIVE",
]

MAX_EXHAUSTIVE = 2**20


def pair_position(i: int, j: int, k: int) -> int:
    """0-based bit position of edge ``(i, j)``, ``i < j``, both 0-based."""
    if not 0 <= i < j < k:
        raise ValueError(f"invalid vertex pair ({i}, {j}) for k={k}")
    return (k - 1) * i + j - 1 - i * (i + 1) // 2


@dataclass(frozen=True)
class Graph:
    """Undirected graph stored as its upper-triangular edge bitstring.

    Bit order is row-major over the strict upper triangle: (0,1), (0,2), ...,
    (0,k-1), (1,2), ...
    """

    k: int
    bits: tuple[int, ...]

    def __post_init__(self):
        if self.k < 1:
            raise ValueError("a graph needs at least one vertex")
        bits = tuple(int(b) for b in self.bits)
        if len(bits) != self.k * (self.k - 1) // 2:
            raise ValueError(f"bitstring length {len(bits)} does not match k={self.k}")
        if any(b not in (0, 1) for b in bits):
            raise ValueError("bitstring entries must be 0 or 1")
        object.__setattr__(self, "bits", bits)

    @classmethod
    def empty(cls, k: int) -> "Graph":
        return cls(k, (0,) * (k * (k - 1) // 2))

    @classmethod
    def complete(cls, k: int) -> "Graph":
        return cls(k, (1,) * (k * (k - 1) // 2))

    @classmethod
    def from_edges(cls, k: int, edges: Iterable[tuple[int, int]]) -> "Graph":
        bits = [0] * (k * (k - 1) // 2)
        for i, j in edges:
            i, j = min(i, j), max(i, j)
            bits[pair_position(i, j, k)] = 1
        return cls(k, tuple(bits))

    @classmethod
    def from_formula(cls, formula: str, k: int) -> "Graph":
        """Parse a generator formula like ``"12/23"`` (1-based single-digit vertices)."""
        edges = []
        for term in formula.split("/"):
            verts = [int(c) - 1 for c in term.strip()]
            edges.extend(itertools.combinations(sorted(verts), 2))
        return cls.from_edges(k, edges)

    @classmethod
    def from_string(cls, text: str) -> "Graph":
        """Inverse of :meth:`to_string`: ``"k:bits"``, e.g. ``"3:101"``."""
        k, _, bits = text.strip().partition(":")
        return cls(int(k), tuple(int(c) for c in bits))

    def to_string(self) -> str:
        return f"{self.k}:{self.bitstring}"

    @property
    def bitstring(self) -> str:
        return "".join(map(str, self.bits))

    @property
    def n_edges(self) -> int:
        return sum(self.bits)

    def edges(self) -> list[tuple[int, int]]:
        return [p for p, b in zip(itertools.combinations(range(self.k), 2), self.bits) if b]

    def has_edge(self, i: int, j: int) -> bool:
        i, j = min(i, j), max(i, j)
        return bool(self.bits[pair_position(i, j, self.k)])

    def adjacency(self) -> list[set[int]]:
        adj = [set() for _ in range(self.k)]
        for i, j in self.edges():
            adj[i].add(j)
            adj[j].add(i)
        return adj

    def formula(self) -> str:
        return "/".join("".join(str(v + 1) for v in c) for c in maximal_cliques(self))

    def sort_key(self):
        """Parsimony order used to break criterion ties: fewer edges, then bitstring."""
        return (self.n_edges, self.bits)


def maximal_cliques(graph: Graph) -> list[tuple[int, ...]]:
    """All maximal cliques (sorted tuples, sorted list); Bron-Kerbosch with pivoting."""
    adj = graph.adjacency()
    out = []

    def expand(r, p, x):
        if not p and not x:
            out.append(tuple(sorted(r)))
            return
        pivot = max(p | x, key=lambda u: len(adj[u] & p))
        for v in list(p - adj[pivot]):
            expand(r | {v}, p & adj[v], x & adj[v])
            p = p - {v}
            x = x | {v}

    expand(set(), set(range(graph.k)), set())
    return sorted(out)


@dataclass(frozen=True)
class ContingencyTable:
    """Cell counts indexed by one axis per variable (axis order = vertex order)."""

    counts: np.ndarray

    def __post_init__(self):
        c = np.asarray(self.counts)
        if c.ndim < 1 or c.size == 0:
            raise ValueError("a table needs at least one variable")
        if np.any(c < 0) or np.any(c != np.floor(c)):
            raise ValueError("cell counts must be nonnegative integers")
        c = c.astype(np.int64)
        if c.sum() < 1:
            raise ValueError("table total must be at least 1")
        object.__setattr__(self, "counts", c)

    @property
    def levels(self) -> tuple[int, ...]:
        return self.counts.shape

    @property
    def k(self) -> int:
        return self.counts.ndim

    @property
    def n(self) -> int:
        return int(self.counts.sum())


@dataclass(frozen=True)
class FittedTable:
    values: np.ndarray
    converged: bool
    iterations: int


def _marginal(x, clique, k):
    # x has a leading batch axis; sum out the variables not in the clique
    other = tuple(1 + v for v in range(k) if v not in clique)
    return x.sum(axis=other, keepdims=True)


def _ipf(counts, cliques, tol, max_iter):
    """Batched IPF over a leading resample axis. Returns (fitted, converged, iterations)."""
    counts = np.asarray(counts, dtype=float)
    B, shape = counts.shape[0], counts.shape[1:]
    k = len(shape)
    totals = counts.reshape(B, -1).sum(axis=1)
    fitted = np.broadcast_to((totals / np.prod(shape)).reshape((B,) + (1,) * k), counts.shape).copy()
    observed = [_marginal(counts, c, k) for c in cliques]
    for it in range(1, max_iter + 1):
        for c, obs in zip(cliques, observed):
            cur = _marginal(fitted, c, k)
            ratio = np.divide(obs, cur, out=np.zeros_like(cur), where=cur > 0)
            fitted *= ratio
        gap = max(float(np.max(np.abs(_marginal(fitted, c, k) - obs))) for c, obs in zip(cliques, observed))
        if gap < tol:
            return fitted, True, it
    return fitted, False, max_iter


def ipf_fit(table: ContingencyTable, graph: Graph, tol: float = 1e-8, max_iter: int = 10_000) -> FittedTable:
    """Maximum likelihood expected counts under ``graph`` by IPF on its maximal cliques.

    Starts from the uniform table and cycles through the cliques until every
    clique marginal is within ``tol`` of the observed one. If ``max_iter``
    full cycles do not get there the result is returned with
    ``converged=False``.
    """
    if tol <= 0:
        raise ValueError("tol must be positive")
    if graph.k != table.k:
        raise ValueError(f"graph has {graph.k} vertices, table has {table.k} variables")
    fitted, ok, it = _ipf(table.counts[None], maximal_cliques(graph), tol, max_iter)
    return FittedTable(fitted[0], ok, it)


def _loss(counts, fitted):
    # -sum(n_i log m_i - log n_i!) over the trailing axes, batched over axis 0
    counts = np.asarray(counts, dtype=float)
    B = counts.shape[0]
    c, m = counts.reshape(B, -1), fitted.reshape(B, -1)
    bad = np.any((c > 0) & (m <= 0), axis=1)
    with np.errstate(divide="ignore", invalid="ignore"):
        ll = np.where(c > 0, xlogy(c, np.where(m > 0, m, 1.0)), 0.0).sum(axis=1)
    loss = -(ll - gammaln(c + 1.0).sum(axis=1))
    return np.where(bad, np.inf, loss)


def loss_loglinear(table: ContingencyTable, fitted: FittedTable, allow_unconverged: bool = False) -> float:
    """Negative maximised log-likelihood ``-sum_i [n_i log m_i - log n_i!]``.

    Uses ``0 log 0 = 0``. Returns ``inf`` when a positive count sits on a zero
    fitted cell (the model cannot produce the data).
    """
    if not fitted.converged and not allow_unconverged:
        raise ValueError("IPF did not converge; pass allow_unconverged=True to use the fit anyway")
    return float(_loss(table.counts[None], fitted.values[None])[0])


def _loss_under(counts_batch, graph, tol, max_iter):
    fitted, ok, it = _ipf(counts_batch, maximal_cliques(graph), tol, max_iter)
    if not ok:
        raise RuntimeError(f"IPF did not converge within {max_iter} cycles for graph {graph.to_string()}")
    return _loss(counts_batch, fitted)


def _hits(actual, fake):
    if np.isinf(actual):
        return int(np.sum(fake <= actual))
    # finite comparison with a little slack for IPF round-off
    eps = 1e-9 * max(1.0, abs(actual))
    return int(np.sum(np.isfinite(fake) & (fake <= actual + eps)))


def loss_rank_graph(
    table: ContingencyTable,
    graph: Graph,
    B: int = 200,
    seed: SeedLike = 0,
    resamples: Optional[np.ndarray] = None,
    tol: float = 1e-8,
    max_iter: int = 10_000,
) -> LossRankEstimate:
    """Bootstrap loss rank of ``graph``.

    Resamples are drawn from ``seed`` unless a precomputed ``(B, *levels)``
    stack is passed through ``resamples``; sharing one stack across graphs
    gives common random numbers for model comparison.
    """
    if resamples is None:
        if B < 1:
            raise ValueError("B must be at least 1")
        resamples = bootstrap_tables(table.counts, B, seed)
    resamples = np.asarray(resamples)
    actual = float(_loss_under(table.counts[None], graph, tol, max_iter)[0])
    fake = _loss_under(resamples, graph, tol, max_iter)
    return LossRankEstimate(_hits(actual, fake), resamples.shape[0])


def model_dimension(graph: Graph, levels: Sequence[int]) -> int:
    """Free parameters of the hierarchical model generated by the maximal cliques.

    Every nonempty vertex subset contained in some clique contributes
    ``prod(levels[v] - 1)``; the grand mean is fixed by the sample size.
    """
    if len(levels) != graph.k:
        raise ValueError("levels must list one entry per vertex")
    terms = set()
    for clique in maximal_cliques(graph):
        for r in range(1, len(clique) + 1):
            terms.update(itertools.combinations(clique, r))
    return int(sum(np.prod([levels[v] - 1 for v in a]) for a in terms))


def bic_graph(table: ContingencyTable, graph: Graph, tol: float = 1e-8, max_iter: int = 10_000) -> float:
    fitted = ipf_fit(table, graph, tol, max_iter)
    if not fitted.converged:
        raise RuntimeError(f"IPF did not converge within {max_iter} cycles")
    return loss_loglinear(table, fitted) + 0.5 * model_dimension(graph, table.levels) * np.log(table.n)


def all_graphs(k: int) -> list[Graph]:
    n_bits = k * (k - 1) // 2
    if 2**n_bits > MAX_EXHAUSTIVE:
        raise ValueError(f"exhaustive search over 2**{n_bits} graphs exceeds the limit of {MAX_EXHAUSTIVE}")
    return [Graph(k, bits) for bits in itertools.product((0, 1), repeat=n_bits)]


def score_graphs(
    table: ContingencyTable,
    graphs: Iterable[Graph],
    criterion: str = "BIC",
    B: int = 200,
    seed: SeedLike = 0,
    resamples: Optional[np.ndarray] = None,
) -> dict[Graph, float]:
    """Criterion value for each graph (LR as a fraction, BIC as a real).

    For LR one resample stack is drawn once and shared by every graph.
    """
    crit = criterion.upper()
    if crit == "BIC":
        return {g: bic_graph(table, g) for g in graphs}
    if crit == "LR":
        if resamples is None:
            resamples = bootstrap_tables(table.counts, B, seed)
        return {g: loss_rank_graph(table, g, resamples=resamples).value for g in graphs}
    raise ValueError(f"unknown criterion {criterion!r}; expected 'LR' or 'BIC'")


def exhaustive_select(
    table: ContingencyTable,
    criterion: str = "BIC",
    B: int = 200,
    seed: SeedLike = 0,
    resamples: Optional[np.ndarray] = None,
) -> Graph:
    """Minimiser of the criterion over every graph on ``table.k`` vertices.

    Ties go to fewer edges, then the lexicographically smaller bitstring.
    """
    scores = score_graphs(table, all_graphs(table.k), criterion, B, seed, resamples)
    return min(scores, key=lambda g: (scores[g], g.sort_key()))


def _level_scores(L: int) -> np.ndarray:
    return np.linspace(-1.0, 1.0, L) if L > 1 else np.zeros(1)


def default_cell_probs(graph: Graph, levels: Sequence[int], strength: float = 0.5) -> np.ndarray:
    """Cell probabilities with one interaction term per maximal clique.

    The log-probability of cell ``i`` is ``strength * sum_C prod_{v in C} s_v(i_v)``
    where ``s_v`` are equally spaced level scores on [-1, 1], summed over the
    cliques with at least two vertices. Main effects are zero.
    """
    levels = tuple(int(L) for L in levels)
    if len(levels) != graph.k:
        raise ValueError("levels must list one entry per vertex")
    logp = np.zeros(levels)
    grids = np.meshgrid(*[_level_scores(L) for L in levels], indexing="ij")
    for clique in maximal_cliques(graph):
        if len(clique) < 2:
            continue
        logp += strength * np.prod([grids[v] for v in clique], axis=0)
    p = np.exp(logp - logp.max())
    return p / p.sum()


def _check_factorizes(graph, probs, atol=1e-10):
    fitted, ok, _ = _ipf(probs[None], maximal_cliques(graph), 1e-14, 100_000)
    return ok and np.max(np.abs(fitted[0] - probs)) <= atol


def generate_from_graph(
    graph: Graph,
    levels: Sequence[int],
    n: int,
    seed: SeedLike = 0,
    cell_probs: Optional[np.ndarray] = None,
    strength: float = 0.5,
) -> ContingencyTable:
    """Multinomial table of size ``n`` drawn from a distribution Markov to ``graph``."""
    levels = tuple(int(L) for L in levels)
    if cell_probs is None:
        probs = default_cell_probs(graph, levels, strength)
    else:
        probs = np.asarray(cell_probs, dtype=float)
        if probs.shape != levels or np.any(probs < 0) or abs(probs.sum() - 1.0) > 1e-10:
            raise ValueError("cell_probs must be a nonnegative array over the cells summing to 1")
        if not _check_factorizes(graph, probs):
            raise ValueError("cell_probs do not factorize according to the graph")
    rng = as_generator(seed)
    counts = rng.multinomial(n, probs.reshape(-1)).reshape(levels)
    return ContingencyTable(counts)


def write_table_csv(table: ContingencyTable, path) -> None:
    """One row per cell: 1-based level index per variable, then the count."""
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow([f"v{v + 1}" for v in range(table.k)] + ["count"])
        for idx in itertools.product(*[range(L) for L in table.levels]):
            w.writerow([i + 1 for i in idx] + [int(table.counts[idx])])


def read_table_csv(path, levels: Optional[Sequence[int]] = None) -> ContingencyTable:
    """Read a cell-per-row CSV; ``levels`` defaults to the largest index seen per column."""
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    header, body = rows[0], [r for r in rows[1:] if r]
    k = len(header) - 1
    if k < 1 or header[-1].strip().lower() != "count":
        raise ValueError("expected columns v1..vk followed by 'count'")
    idx = np.array([[int(c) for c in r[:k]] for r in body], dtype=np.int64)
    cnt = np.array([int(r[k]) for r in body], dtype=np.int64)
    if idx.size and idx.min() < 1:
        raise ValueError("level indices are 1-based")
    shape = tuple(levels) if levels is not None else tuple(int(m) for m in idx.max(axis=0))
    counts = np.zeros(shape, dtype=np.int64)
    np.add.at(counts, tuple((idx - 1).T), cnt)
    return ContingencyTable(counts)
