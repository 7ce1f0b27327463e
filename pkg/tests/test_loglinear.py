import itertools
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from lossrank.loglinear import (
    ContingencyTable,
    Graph,
    all_graphs,
    bic_graph,
    default_cell_probs,
    exhaustive_select,
    generate_from_graph,
    ipf_fit,
    loss_loglinear,
    loss_rank_graph,
    maximal_cliques,
    model_dimension,
    pair_position,
    read_table_csv,
    score_graphs,
    write_table_csv,
)
from lossrank.resampling import SeedSpec, bootstrap_tables

import oracles


def _loss(counts, graph):
    t = ContingencyTable(np.asarray(counts))
    return loss_loglinear(t, ipf_fit(t, graph))


# graph encoding


def test_pair_position_is_row_major_upper_triangle():
    k = 5
    got = [pair_position(i, j, k) for i, j in itertools.combinations(range(k), 2)]
    assert got == list(range(k * (k - 1) // 2))


def test_pair_position_rejects_bad_pairs():
    for i, j in [(1, 1), (2, 1), (0, 4)]:
        with pytest.raises(ValueError):
            pair_position(i, j, 4)


def test_formula_roundtrip():
    g = Graph.from_formula("12/23", 3)
    assert g.bitstring == "101"
    assert g.formula() == "12/23"
    assert Graph.from_formula("123/456", 6).formula() == "123/456"


def test_string_roundtrip_all_graphs_k4():
    for g in all_graphs(4):
        assert Graph.from_string(g.to_string()) == g


def test_graph_validation():
    with pytest.raises(ValueError):
        Graph(3, (1, 0))
    with pytest.raises(ValueError):
        Graph(2, (2,))
    with pytest.raises(ValueError):
        Graph(0, ())


def test_graph_is_hashable_and_ordered_by_parsimony():
    a, b = Graph.from_formula("12", 3), Graph.from_formula("12/23", 3)
    assert len({a, b, Graph.from_formula("12", 3)}) == 2
    assert a.sort_key() < b.sort_key()


# cliques


def _brute_maximal_cliques(g):
    cliques = [
        s
        for r in range(1, g.k + 1)
        for s in itertools.combinations(range(g.k), r)
        if all(g.has_edge(i, j) for i, j in itertools.combinations(s, 2))
    ]
    return sorted(c for c in cliques if not any(set(c) < set(d) for d in cliques))


def test_cliques_chain():
    assert maximal_cliques(Graph.from_formula("12/23", 3)) == [(0, 1), (1, 2)]


def test_cliques_empty_and_complete():
    assert maximal_cliques(Graph.empty(3)) == [(0,), (1,), (2,)]
    assert maximal_cliques(Graph.complete(4)) == [(0, 1, 2, 3)]


def test_cliques_match_brute_force_all_k5():
    for g in all_graphs(5):
        assert maximal_cliques(g) == _brute_maximal_cliques(g)


# IPF


def _chain_closed_form(c):
    ab = c.sum(axis=2, keepdims=True)
    bc = c.sum(axis=0, keepdims=True)
    b = c.sum(axis=(0, 2), keepdims=True)
    return ab * bc / b


@pytest.mark.parametrize("seed", range(100))
def test_ipf_matches_decomposable_closed_form(seed):
    rng = np.random.default_rng(seed)
    c = rng.integers(0, 20, size=(2, 2, 2))
    c[:, :, 0] += 1
    fit = ipf_fit(ContingencyTable(c), Graph.from_formula("12/23", 3))
    assert fit.converged
    np.testing.assert_allclose(fit.values, _chain_closed_form(c.astype(float)), atol=1e-7, rtol=0)


def test_ipf_saturated_reproduces_table():
    c = np.array([[3, 0], [1, 5]])
    fit = ipf_fit(ContingencyTable(c), Graph.complete(2))
    np.testing.assert_allclose(fit.values, c, atol=1e-12)


def test_ipf_empty_graph_2x2_is_outer_product():
    c = np.array([[3, 1], [2, 4]])
    fit = ipf_fit(ContingencyTable(c), Graph.empty(2))
    np.testing.assert_allclose(fit.values, np.outer(c.sum(1), c.sum(0)) / c.sum(), atol=1e-10)


@pytest.mark.parametrize("seed", range(30))
def test_ipf_conserves_total_and_matches_clique_marginals(seed):
    rng = np.random.default_rng(1000 + seed)
    k = 4
    g = Graph(k, tuple(rng.integers(0, 2, size=6)))
    c = rng.integers(1, 15, size=(2, 3, 2, 2))
    fit = ipf_fit(ContingencyTable(c), g)
    assert fit.converged
    assert abs(fit.values.sum() - c.sum()) <= 1e-8
    for clique in maximal_cliques(g):
        other = tuple(v for v in range(k) if v not in clique)
        np.testing.assert_allclose(fit.values.sum(axis=other), c.sum(axis=other), atol=1e-8, rtol=0)


def test_ipf_non_decomposable_cycle_converges():
    c = np.random.default_rng(3).integers(1, 30, size=(2, 2, 2, 2))
    g = Graph.from_edges(4, [(0, 1), (1, 2), (2, 3), (0, 3)])
    fit = ipf_fit(ContingencyTable(c), g)
    assert fit.converged and fit.iterations > 1


def test_ipf_rejects_mismatched_graph():
    with pytest.raises(ValueError):
        ipf_fit(ContingencyTable(np.ones((2, 2))), Graph.empty(3))
    with pytest.raises(ValueError):
        ipf_fit(ContingencyTable(np.ones((2, 2))), Graph.empty(2), tol=0)


def test_table_validation():
    for bad in [np.array([-1, 2]), np.array([0.5, 1]), np.zeros(3)]:
        with pytest.raises(ValueError):
            ContingencyTable(bad)


# loss


def test_loss_saturated_uniform_2x2():
    # each cell 1 with fitted 1: loss is zero
    assert _loss(np.ones((2, 2)), Graph.complete(2)) == pytest.approx(0.0, abs=1e-12)


def test_loss_two_by_one_table():
    # counts (2, 2) fitted at 2 each: -(2 log 2 - log 2!) * 2
    assert _loss(np.array([2, 2]), Graph.empty(1)) == pytest.approx(-2 * math.log(2), abs=1e-12)


@pytest.mark.parametrize("n", [1, 5, 40])
def test_loss_single_cell(n):
    t = ContingencyTable(np.array([[n, 0], [0, 0]]))
    fit = ipf_fit(t, Graph.complete(2))
    assert loss_loglinear(t, fit) == pytest.approx(-(n * math.log(n) - math.lgamma(n + 1)), abs=1e-10)


@pytest.mark.parametrize("seed", range(20))
def test_loss_matches_closed_form_2x2(seed):
    c = np.random.default_rng(seed).integers(1, 12, size=(2, 2))
    for independent, g in [(True, Graph.empty(2)), (False, Graph.complete(2))]:
        assert _loss(c, g) == pytest.approx(oracles.loss_2x2(c, independent), abs=1e-9)


def test_loss_infinite_when_fit_excludes_data():
    t = ContingencyTable(np.array([[1, 0], [0, 1]]))
    fitted = ipf_fit(t, Graph.complete(2))
    values = fitted.values.copy()
    values[0, 0] = 0.0
    assert math.isinf(loss_loglinear(t, type(fitted)(values, True, 1)))


def test_loss_refuses_unconverged_fit():
    c = np.random.default_rng(2).integers(1, 30, size=(2, 2, 2, 2))
    g = Graph.from_edges(4, [(0, 1), (1, 2), (2, 3), (0, 3)])
    t = ContingencyTable(c)
    fit = ipf_fit(t, g, max_iter=1)
    assert not fit.converged
    with pytest.raises(ValueError):
        loss_loglinear(t, fit)
    assert math.isfinite(loss_loglinear(t, fit, allow_unconverged=True))


@pytest.mark.parametrize("seed", range(100))
def test_loss_nonincreasing_under_edge_addition(seed):
    rng = np.random.default_rng(5000 + seed)
    k = int(rng.integers(3, 5))
    levels = tuple(int(v) for v in rng.integers(2, 4, size=k))
    c = rng.integers(1, 10, size=levels)
    bits = list(rng.integers(0, 2, size=k * (k - 1) // 2))
    missing = [p for p, b in enumerate(bits) if not b]
    if not missing:
        bits[0], missing = 0, [0]
    g = Graph(k, tuple(bits))
    bits[int(rng.choice(missing))] = 1
    bigger = Graph(k, tuple(bits))
    assert _loss(c, bigger) <= _loss(c, g) + 1e-7


def test_loss_invariant_under_level_relabelling():
    rng = np.random.default_rng(9)
    c = rng.integers(0, 10, size=(3, 2, 3)) + 1
    g = Graph.from_formula("12/23", 3)
    perm = c[[2, 0, 1], :, :][:, :, [1, 2, 0]]
    assert _loss(perm, g) == pytest.approx(_loss(c, g), abs=1e-9)


# dimension and BIC


def test_dimension_examples():
    assert model_dimension(Graph.complete(3), (2, 2, 2)) == 7
    assert model_dimension(Graph.empty(3), (2, 2, 2)) == 3
    assert model_dimension(Graph.from_formula("12/23", 3), (2, 2, 2)) == 5
    assert model_dimension(Graph.from_formula("12/23", 3), (3, 3, 3)) == 6 + 4 + 4


def test_dimension_saturated_is_cells_minus_one():
    for levels in [(2, 3), (3, 3, 2), (2, 2, 2, 2)]:
        assert model_dimension(Graph.complete(len(levels)), levels) == math.prod(levels) - 1


def test_bic_complete_2x2_of_ones():
    t = ContingencyTable(np.ones((2, 2)))
    assert bic_graph(t, Graph.complete(2)) == pytest.approx(1.5 * math.log(4), abs=1e-10)


# exhaustive search


def test_all_graphs_counts():
    assert len(all_graphs(1)) == 1
    assert len(all_graphs(3)) == 8
    assert len(set(all_graphs(4))) == 64


def test_all_graphs_guard():
    with pytest.raises(ValueError):
        all_graphs(8)


def test_exhaustive_single_variable():
    t = ContingencyTable(np.array([3, 5, 2]))
    assert exhaustive_select(t, "BIC") == Graph.empty(1)
    assert exhaustive_select(t, "LR", B=20, seed=SeedSpec(0)) == Graph.empty(1)


def test_exhaustive_bic_recovers_strong_chain():
    g = Graph.from_formula("12/23", 3)
    t = generate_from_graph(g, (3, 3, 3), 5000, SeedSpec(4), strength=1.0)
    assert exhaustive_select(t, "BIC") == g


def test_exhaustive_is_argmin_of_scores():
    g = Graph.from_formula("12/23", 3)
    t = generate_from_graph(g, (2, 2, 2), 300, SeedSpec(1))
    res = bootstrap_tables(t.counts, 50, SeedSpec(2))
    scores = score_graphs(t, all_graphs(3), "LR", resamples=res)
    best = exhaustive_select(t, "LR", resamples=res)
    assert scores[best] == min(scores.values())


def test_unknown_criterion():
    with pytest.raises(ValueError):
        score_graphs(ContingencyTable(np.ones((2, 2))), all_graphs(2), "AIC")


# loss rank


def test_loss_rank_in_unit_interval():
    t = ContingencyTable(np.array([[7, 3], [2, 8]]))
    est = loss_rank_graph(t, Graph.complete(2), B=100, seed=SeedSpec(0))
    assert 0.0 <= est.value <= 1.0


def test_loss_rank_deterministic_and_shared_resamples():
    t = generate_from_graph(Graph.from_formula("12/23", 3), (2, 2, 2), 200, SeedSpec(3))
    g = Graph.from_formula("12/23", 3)
    a = loss_rank_graph(t, g, B=60, seed=SeedSpec(7))
    b = loss_rank_graph(t, g, B=60, seed=SeedSpec(7))
    res = bootstrap_tables(t.counts, 60, SeedSpec(7))
    c = loss_rank_graph(t, g, resamples=res)
    assert a.hits == b.hits == c.hits


@pytest.mark.parametrize("case", range(6))
def test_loss_rank_matches_exhaustive_multinomial(case):
    rng = np.random.default_rng(case)
    c = rng.multinomial(4, [0.25] * 4).reshape(2, 2)
    independent = bool(case % 2)
    g = Graph.empty(2) if independent else Graph.complete(2)
    exact = oracles.exact_lr_2x2(c, independent)
    B = 4000
    est = loss_rank_graph(ContingencyTable(c), g, B=B, seed=SeedSpec(case))
    se = max(math.sqrt(max(exact * (1 - exact), 0.0) / B), 1 / B)
    assert abs(est.value - exact) <= 3 * se


# generation and IO


def test_default_probs_factorize_and_sum_to_one():
    from lossrank.loglinear import _check_factorizes

    for formula, k, levels in [("12/23", 3, (3, 3, 3)), ("12/34", 4, (2, 2, 2, 2)), ("123/456", 6, (2,) * 6)]:
        g = Graph.from_formula(formula, k)
        p = default_cell_probs(g, levels)
        assert p.sum() == pytest.approx(1.0, abs=1e-12)
        assert _check_factorizes(g, p)


def test_default_probs_empty_graph_is_uniform():
    p = default_cell_probs(Graph.empty(3), (2, 3, 2))
    np.testing.assert_allclose(p, 1 / 12)


def test_generate_validates_cell_probs():
    g = Graph.empty(2)
    with pytest.raises(ValueError):
        generate_from_graph(g, (2, 2), 10, cell_probs=np.array([[0.5, 0.0], [0.0, 0.5]]))
    with pytest.raises(ValueError):
        generate_from_graph(g, (2, 2), 10, cell_probs=np.full((2, 2), 0.3))


def test_generate_total_and_determinism():
    g = Graph.from_formula("12/34", 4)
    a = generate_from_graph(g, (2,) * 4, 500, SeedSpec(1))
    b = generate_from_graph(g, (2,) * 4, 500, SeedSpec(1))
    assert a.n == 500 and np.array_equal(a.counts, b.counts)


@settings(max_examples=25, deadline=None)
@given(levels=st.lists(st.integers(2, 3), min_size=1, max_size=3), seed=st.integers(0, 2**32 - 1))
def test_csv_roundtrip(levels, seed, tmp_path_factory):
    c = np.random.default_rng(seed).integers(0, 9, size=tuple(levels))
    c.flat[0] += 1
    path = tmp_path_factory.mktemp("csv") / "t.csv"
    write_table_csv(ContingencyTable(c), path)
    back = read_table_csv(path, levels)
    assert np.array_equal(back.counts, c)


def test_csv_rejects_bad_header(tmp_path):
    p = tmp_path / "bad.csv"
    p.write_text("a,b,c\n1,1,3\n")
    with pytest.raises(ValueError):
        read_table_csv(p)
