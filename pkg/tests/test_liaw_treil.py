import numpy as np
import pytest
from hypothesis import given, strategies as st

from projlab.errors import AtomCollision, BadParams, DegenerateSpectrum, NotCyclic
from projlab.gallery import random_pair
from projlab.liaw_treil import (
    DiscreteMeasure,
    canonical_unitary,
    divided_difference_matrix,
    liaw_treil_transform,
    spectral_measure,
    strictly_interlace,
)


def random_cyclic(n, seed):
    rng = np.random.default_rng(seed)
    t = random_pair(n, 0, seed).T
    phi = rng.standard_normal(n)
    return t, phi / np.linalg.norm(phi), rng


def test_two_point_measure():
    m = spectral_measure(np.diag([0.0, 1.0]), np.ones(2) / np.sqrt(2))
    assert np.allclose(m.atoms, [0, 1]) and np.allclose(m.weights, [0.5, 0.5])


def test_not_cyclic():
    with pytest.raises(NotCyclic) as info:
        spectral_measure(np.diag([0.0, 1.0]), np.array([1.0, 0.0]))
    assert info.value.index == 1


def test_degenerate():
    with pytest.raises(DegenerateSpectrum) as info:
        spectral_measure(np.diag([0.0, 1.0, 1.0]), np.ones(3) / np.sqrt(3))
    assert info.value.index == 1


def test_phi_must_be_unit():
    with pytest.raises(BadParams):
        spectral_measure(np.diag([0.0, 1.0]), np.ones(2))


def test_measure_validation():
    with pytest.raises(BadParams):
        DiscreteMeasure(np.array([1.0, 0.0]), np.array([0.5, 0.5]))
    with pytest.raises(BadParams):
        DiscreteMeasure(np.array([0.0, 1.0]), np.array([1.0, 0.0]))
    with pytest.raises(BadParams):
        DiscreteMeasure(np.array([0.0]), np.array([0.5, 0.5]))


def test_diagonal_weights_are_squared_coefficients():
    t = np.diag([3.0, 1.0, -2.0])
    phi = np.array([0.48, 0.6, 0.64])
    m = spectral_measure(t, phi)
    assert np.array_equal(m.atoms, [-2.0, 1.0, 3.0])
    assert np.allclose(m.weights, [0.64 ** 2, 0.36, 0.48 ** 2], rtol=0, atol=1e-15)


@given(seed=st.integers(0, 10_000), n=st.integers(1, 40))
def test_unitary_properties(seed, n):
    t, phi, rng = random_cyclic(n, seed)
    U = canonical_unitary(t, phi)
    m = U.measure
    assert abs(m.mass - 1) < 1e-12
    assert np.max(np.abs(U(phi) - 1)) < 1e-10
    x, y = rng.standard_normal(n), rng.standard_normal(n)
    assert abs(m.inner(U(x), U(y)) - x @ y) < 1e-9 * (1 + np.linalg.norm(x) * np.linalg.norm(y))
    assert np.allclose(U.adjoint(U(x)), x, atol=1e-9)
    # U T U* is multiplication by the atom
    f = rng.standard_normal(n)
    assert np.allclose(U(t.entries @ U.adjoint(f)), m.atoms * f, atol=1e-8)


def test_divided_differences_of_monomials():
    x, t = np.array([2.0, 3.0]), np.array([0.5, -1.0, 1.0])
    dd = divided_difference_matrix(x, t, [0, 0, 0, 1.0], 1e-12)
    assert np.allclose(dd, (x[:, None] ** 3 - t ** 3) / (x[:, None] - t), rtol=1e-14)
    assert np.array_equal(divided_difference_matrix(x, t, [5.0], 1e-12), np.zeros((2, 3)))
    with pytest.raises(AtomCollision):
        divided_difference_matrix([1.0], [1.0 + 1e-14], [0, 1.0], 1e-12)


def test_constant_and_identity_functions():
    t, phi, _ = random_cyclic(25, 1)
    one = liaw_treil_transform(t, phi, 0.7, [1.0])
    assert np.max(np.abs(one.formula_output - 1)) < 1e-10 and one.discrepancy < 1e-10
    ident = liaw_treil_transform(t, phi, 0.7, [0.0, 1.0])
    xs = spectral_measure(t.entries + 0.7 * np.outer(phi, phi), phi).atoms
    assert np.allclose(ident.formula_output, xs - 0.7, atol=1e-12)
    assert ident.discrepancy < 1e-10


@given(seed=st.integers(0, 10_000), n=st.integers(2, 40), degree=st.integers(0, 10),
       alpha=st.floats(-2, 2).filter(lambda a: abs(a) > 0.05))
def test_formula_matches_oracle(seed, n, degree, alpha):
    t, phi, rng = random_cyclic(n, seed)
    coeffs = rng.standard_normal(degree + 1)
    try:
        r = liaw_treil_transform(t, phi, alpha, coeffs)
    except (AtomCollision, NotCyclic, DegenerateSpectrum):
        return
    scale = 1 + np.max(np.abs(r.oracle_output))
    assert r.discrepancy <= 1e-8 * scale
    assert r.unitarity_defect <= 1e-8 * scale


@given(seed=st.integers(0, 10_000), n=st.integers(2, 40), alpha=st.floats(0.05, 3))
def test_positive_coupling_interlaces(seed, n, alpha):
    t, phi, _ = random_cyclic(n, seed)
    try:
        lower = spectral_measure(t, phi).atoms
        upper = spectral_measure(t.entries + alpha * np.outer(phi, phi), phi).atoms
    except (NotCyclic, DegenerateSpectrum):
        return
    assert strictly_interlace(lower, upper)
    assert not strictly_interlace(upper, lower)


def test_interlace_shapes():
    assert not strictly_interlace([0.0, 1.0], [0.5])
    assert strictly_interlace([0.0, 1.0], [0.5, 2.0])


def test_zero_alpha_rejected():
    t, phi, _ = random_cyclic(4, 0)
    with pytest.raises(BadParams):
        liaw_treil_transform(t, phi, 0.0, [1.0])
