import numpy as np
import pytest
from hypothesis import given, strategies as st

from darwinbrain.fisher import (
    additive, expected_gain, fisher_check, multiplicative, predicted_gain, recombine, sus,
)


def test_uniform_population_has_no_gain():
    rep = fisher_check(16, 4, 10, seed=1, uniform_genomes=True)
    assert np.allclose(rep.predicted, 0.0) and np.allclose(rep.measured, 0.0, atol=1e-12)


def test_additive_tracks_predictor():
    rep = fisher_check(64, 8, 200, seed=0)
    assert rep.aggregate_error < 0.10
    assert rep.oracle_gap < 1e-9


def test_epistatic_deviates():
    assert fisher_check(64, 8, 200, seed=0, epistatic=True).aggregate_error > 0.25


def test_bad_sizes():
    with pytest.raises(ValueError):
        fisher_check(1, 8, 10)


def test_fitness_functions():
    G = np.array([[1.0, 2.0], [3.0, 4.0]])
    assert additive(G).tolist() == [3.0, 7.0]
    assert multiplicative(G).tolist() == [2.0, 12.0]


@given(st.lists(st.floats(0.01, 100), min_size=2, max_size=64), st.integers(0, 1000))
def test_sus_counts_are_proportional(f, seed):
    f = np.array(f)
    n = len(f)
    idx = sus(f, n, np.random.default_rng(seed))
    counts = np.bincount(idx, minlength=n)
    assert counts.sum() == n
    expect = n * f / f.sum()
    assert np.all(np.abs(counts - expect) < 1.0 + 1e-9)


@given(st.lists(st.floats(0.01, 100), min_size=2, max_size=64))
def test_predictor_equals_exact_expectation(f):
    f = np.array(f)
    assert predicted_gain(f) == pytest.approx(expected_gain(f), rel=1e-9, abs=1e-12)


def test_recombination_permutes_columns():
    G = np.arange(20.0).reshape(5, 4)
    R = recombine(G, np.random.default_rng(0))
    for j in range(4):
        assert sorted(R[:, j]) == sorted(G[:, j])
    assert np.allclose(additive(R).mean(), additive(G).mean())
