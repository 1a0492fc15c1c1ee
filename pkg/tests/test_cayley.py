import numpy as np
import pytest
from hypothesis import given, strategies as st

from projlab.cayley import (
    map_lambda,
    rank_preserved,
    reduce_semibounded,
    reduced_difference,
    shift_constant,
    verify_reduction,
)
from projlab.errors import BadParams, OutOfRange, TieAtThreshold
from projlab.gallery import random_pair
from projlab.lab import proj_diff
from projlab.spectral import eig_sym


def off_tie(rng, pair, lo, hi, margin=1e-6):
    allv = np.concatenate([eig_sym(pair.T).values, eig_sym(pair.perturbed).values])
    while True:
        lam = rng.uniform(lo, hi)
        if np.min(np.abs(allv - lam)) > margin:
            return lam


def test_trivial_reduction():
    rec = reduce_semibounded(np.diag([0.0, 1.0]), np.zeros((2, 2)))
    assert rec.c == 1.0
    assert np.allclose(rec.T_prime.entries, np.diag([1 / 2, 1 / 3]), atol=1e-15)
    assert not rec.S_prime.entries.any()


def test_commuting_diagonal_instance():
    t, s = np.diag([-2.0, 0.5, 3.0]), np.diag([1.0, -0.7, 0.0])
    rec = reduce_semibounded(t, s)
    c = rec.c
    assert c == pytest.approx(3.0)
    expected = -np.diag(s) / ((np.diag(t) + np.diag(s) + 1 + c) * (np.diag(t) + 1 + c))
    assert np.allclose(rec.S_prime.entries, np.diag(expected), atol=1e-15)
    assert verify_reduction(t, s, 0.7) < 1e-12


def test_shift_constant_both_directions():
    t, s = np.diag([-2.0, 0.5]), np.diag([0.0, 4.0])
    assert shift_constant(t, s, "below") == pytest.approx(3.0)
    assert shift_constant(t, s, "above") == pytest.approx(5.5)
    assert shift_constant(np.eye(2), np.zeros((2, 2))) == 1.0
    with pytest.raises(BadParams):
        shift_constant(t, s, "sideways")


def test_map_lambda():
    c = 2.5
    assert map_lambda(-c, c) == pytest.approx(1.0)
    assert map_lambda(1e12, c) < 1e-11
    assert map_lambda(0.0, c) > map_lambda(1.0, c)
    assert map_lambda(c, c, "above") == pytest.approx(-1.0)
    with pytest.raises(OutOfRange):
        map_lambda(-c - 1e-9, c)
    with pytest.raises(OutOfRange):
        map_lambda(c + 1e-9, c, "above")


@given(seed=st.integers(0, 10_000), n=st.integers(2, 30), N=st.integers(0, 3),
       direction=st.sampled_from(["below", "above"]))
def test_eigenvalue_map(seed, n, N, direction):
    pair = random_pair(n, min(N, n), seed, scale=2.0)
    rec = reduce_semibounded(pair.T, pair.S, direction)
    pole = -(1 + rec.c) if direction == "below" else 1 + rec.c
    mapped = np.sort(1.0 / (eig_sym(pair.T).values - pole))
    assert np.max(np.abs(eig_sym(rec.T_prime).values - mapped)) < 1e-10


@given(seed=st.integers(0, 10_000), n=st.integers(2, 40), N=st.integers(1, 3),
       direction=st.sampled_from(["below", "above"]))
def test_rank_is_preserved(seed, n, N, direction):
    pair = random_pair(n, min(N, n), seed)
    assert rank_preserved(reduce_semibounded(pair.T, pair.S, direction), pair.S)


@pytest.mark.parametrize("direction", ["below", "above"])
def test_random_identity(direction):
    pair = random_pair(60, 2, 7)
    rng = np.random.default_rng(7)
    c = shift_constant(pair.T, pair.S, direction)
    worst = 0.0
    for _ in range(50):
        lam = off_tie(rng, pair, -c - 1, c + 1)
        worst = max(worst, verify_reduction(pair.T, pair.S, lam, direction=direction))
    assert worst < 1e-9


def test_below_range_gives_zero_difference():
    pair = random_pair(20, 1, 3)
    c = shift_constant(pair.T, pair.S)
    D, _ = proj_diff(pair.T, pair.S, -c - 0.5)
    assert not D.entries.any()
    rec = reduce_semibounded(pair.T, pair.S)
    with pytest.raises(OutOfRange):
        reduced_difference(rec, -c - 0.5)
    assert verify_reduction(pair.T, pair.S, -c - 0.5) == 0.0


def test_tie_is_reported():
    t, s = np.diag([0.0, 1.0]), np.diag([0.5, 0.0])
    with pytest.raises(TieAtThreshold):
        verify_reduction(t, s, 1.0)


def test_order_mismatch():
    with pytest.raises(BadParams):
        reduce_semibounded(np.eye(2), np.eye(3))
