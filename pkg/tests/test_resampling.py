import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import stats

from lossrank.resampling import (
    LossRankEstimate,
    SeedSpec,
    as_generator,
    bootstrap_rows,
    bootstrap_table,
    bootstrap_tables,
    draw_rademacher,
    relabel,
)


def test_seedspec_rejects_out_of_range():
    with pytest.raises(ValueError):
        SeedSpec(-1)
    with pytest.raises(ValueError):
        SeedSpec(2**64)
    SeedSpec(2**64 - 1)


def test_same_seed_same_stream():
    a = SeedSpec(42, 3).child(1, 2).generator().random(5)
    b = SeedSpec(42, 3).child(1, 2).generator().random(5)
    np.testing.assert_array_equal(a, b)


def test_child_streams_differ():
    s = SeedSpec(42, 3)
    assert not np.array_equal(s.child(0).generator().random(5), s.child(1).generator().random(5))
    assert not np.array_equal(SeedSpec(42, 0).generator().random(5), SeedSpec(42, 1).generator().random(5))


def test_stream_independence():
    n = 10_000
    a = draw_rademacher(n, SeedSpec(7, 0)).astype(float)
    b = draw_rademacher(n, SeedSpec(7, 1)).astype(float)
    corr = np.corrcoef(a, b)[0, 1]
    # |corr| * sqrt(n) is approximately standard normal under independence
    assert abs(corr) * np.sqrt(n) < 4


def test_rademacher_single():
    assert draw_rademacher(1, SeedSpec(0))[0] in (-1, 1)


def test_rademacher_zero_length():
    with pytest.raises(ValueError):
        draw_rademacher(0, SeedSpec(0))


def test_rademacher_mean():
    n = 10**5
    r = draw_rademacher(n, SeedSpec(11))
    assert set(np.unique(r)) <= {-1, 1}
    assert abs(r.mean()) < 4 / np.sqrt(n)


def test_rademacher_deterministic():
    np.testing.assert_array_equal(draw_rademacher(50, SeedSpec(5, 2)), draw_rademacher(50, SeedSpec(5, 2)))


@pytest.mark.parametrize("y, r, expected", [(0, 1, 1), (1, -1, 1), (1, 1, 0), (0, -1, 0)])
def test_relabel_cases(y, r, expected):
    assert relabel([y], [r])[0] == expected


def test_relabel_length_mismatch():
    with pytest.raises(ValueError):
        relabel([0, 1], [1])


@given(st.lists(st.tuples(st.integers(0, 1), st.sampled_from([-1, 1])), min_size=1, max_size=50))
def test_relabel_involution(pairs):
    y = np.array([p[0] for p in pairs])
    r = np.array([p[1] for p in pairs])
    np.testing.assert_array_equal(relabel(relabel(y, r), r), y)


def test_relabel_matches_formula():
    rng = np.random.default_rng(0)
    y = rng.integers(0, 2, 100)
    r = 2 * rng.integers(0, 2, 100) - 1
    np.testing.assert_array_equal(relabel(y, r), (1 + r) // 2 - r * y)


def test_bootstrap_rows_basic():
    np.testing.assert_array_equal(bootstrap_rows(1, SeedSpec(0)), [0])
    assert bootstrap_rows(17, SeedSpec(0)).shape == (17,)
    with pytest.raises(ValueError):
        bootstrap_rows(0, SeedSpec(0))


def test_bootstrap_rows_uniform_over_ordered_outcomes():
    draws = bootstrap_rows(2, SeedSpec(3), size=10_000)
    codes = draws[:, 0] * 2 + draws[:, 1]
    observed = np.bincount(codes, minlength=4)
    p = stats.chisquare(observed).pvalue
    assert p > 1e-3


def test_bootstrap_table_degenerate():
    np.testing.assert_array_equal(bootstrap_table([7, 0, 0, 0], SeedSpec(1)), [7, 0, 0, 0])


def test_bootstrap_table_two_cells_distribution():
    draws = bootstrap_tables([1, 1], 10_000, SeedSpec(2))
    first = draws[:, 0]
    observed = np.bincount(first, minlength=3)[::-1]
    # outcomes (2,0), (1,1), (0,2) with probabilities 1/4, 1/2, 1/4
    p = stats.chisquare(observed, 10_000 * np.array([0.25, 0.5, 0.25])).pvalue
    assert p > 1e-3


def test_bootstrap_table_rejects_empty():
    with pytest.raises(ValueError):
        bootstrap_table([0, 0], SeedSpec(0))
    with pytest.raises(ValueError):
        bootstrap_table([], SeedSpec(0))


@settings(max_examples=50)
@given(st.lists(st.integers(0, 20), min_size=1, max_size=12).filter(lambda c: sum(c) > 0), st.integers(0, 2**32))
def test_bootstrap_table_conserves_total(counts, seed):
    out = bootstrap_tables(counts, 5, SeedSpec(seed))
    assert np.all(out.sum(axis=1) == sum(counts))
    # cells empty in the data stay empty
    assert np.all(out[:, np.array(counts) == 0] == 0)


def test_bootstrap_table_keeps_shape():
    out = bootstrap_table(np.arange(8).reshape(2, 2, 2), SeedSpec(0))
    assert out.shape == (2, 2, 2) and out.sum() == 28


def test_loss_rank_estimate_bookkeeping():
    est = LossRankEstimate(50, 200)
    assert est.value == 0.25
    with pytest.raises(ValueError):
        LossRankEstimate(201, 200)
    with pytest.raises(ValueError):
        LossRankEstimate(0, 0)


def test_as_generator_passthrough():
    g = np.random.default_rng(0)
    assert as_generator(g) is g
    with pytest.raises(TypeError):
        as_generator("seed")
