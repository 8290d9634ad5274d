from __future__ import annotations

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.stats import unitary_group

from conftest import random_hermitian
from trotterbounds.oracle import NormalOrderedOperator
from trotterbounds.seminorm import (
    ANTI_HERMITIAN,
    HERMITIAN,
    CoefficientMatrix,
    UnsupportedSymmetryError,
    brute_force_seminorm,
    classify,
    fock_seminorm,
    reduced_seminorm,
    seminorm_profile,
    spectrum,
)


def test_small_examples():
    A = np.diag([3.0, -1.0, 2.0])
    assert reduced_seminorm(A, 2) == pytest.approx(5.0)
    assert brute_force_seminorm(A, 2) == pytest.approx(5.0)
    assert reduced_seminorm(np.zeros((4, 4)), 2) == 0.0
    assert reduced_seminorm(A, 0) == 0.0
    assert reduced_seminorm(np.eye(5), 3) == pytest.approx(3.0)
    # a seminorm: vanishes on a nonzero matrix
    assert reduced_seminorm(np.diag([5.0, -5.0]), 2) == 0.0


def test_vector_is_diagonal():
    assert reduced_seminorm(np.array([3.0, -1.0, 2.0]), 2) == pytest.approx(5.0)


def test_rejects_general_and_bad_eta():
    with pytest.raises(UnsupportedSymmetryError):
        reduced_seminorm(np.array([[0.0, 1.0], [2.0, 0.0]]), 1)
    with pytest.raises(ValueError):
        reduced_seminorm(np.eye(3), 4)
    with pytest.raises(ValueError):
        brute_force_seminorm(np.eye(21), 1)


def test_classify_tolerance():
    A = np.array([[1.0, 2.0], [2.0 + 1e-12, 0.0]])
    assert classify(A) == HERMITIAN
    K = np.array([[0.0, 1.0], [-1.0, 0.0]])
    assert classify(K) == ANTI_HERMITIAN
    assert classify(1j * np.eye(2)) == ANTI_HERMITIAN


def test_coefficient_matrix_tags():
    CoefficientMatrix(np.eye(3))
    with pytest.raises(UnsupportedSymmetryError):
        CoefficientMatrix(np.array([[0.0, 1.0], [-1.0, 0.0]]), HERMITIAN)
    with pytest.raises(ValueError):
        CoefficientMatrix(np.ones((2, 2)), HERMITIAN, diagonal=True)
    cm = CoefficientMatrix.from_array(np.diag([1.0, -2.0, 4.0]))
    assert cm.diagonal and reduced_seminorm(cm, 1) == pytest.approx(4.0)


def test_anti_hermitian_matches_brute_force(rng):
    for _ in range(20):
        H = random_hermitian(rng, 4, complex_=True)
        K = 1j * H
        for eta in range(5):
            assert reduced_seminorm(K, eta) == pytest.approx(brute_force_seminorm(K, eta), abs=1e-10)


def test_oracle_equivalence_random(rng):
    for _ in range(300):
        n = int(rng.integers(1, 9))
        A = random_hermitian(rng, n, complex_=bool(rng.integers(2)))
        for eta in range(n + 1):
            assert reduced_seminorm(A, eta) == pytest.approx(brute_force_seminorm(A, eta), abs=1e-10)


def test_profile_matches_scalar(rng):
    A = random_hermitian(rng, 7)
    prof = seminorm_profile(spectrum(A), np.arange(8))
    assert np.allclose(prof, [reduced_seminorm(A, e) for e in range(8)])


def test_fock_consistency(rng):
    for eta in range(7):
        A = random_hermitian(rng, 6)
        op = NormalOrderedOperator.from_quadratic(A)
        assert fock_seminorm(op, eta) == pytest.approx(reduced_seminorm(A, eta), abs=1e-9)


def test_fock_examples():
    nn = NormalOrderedOperator.from_density_density(
        np.array([[0, 0.5, 0], [0.5, 0, 0], [0, 0, 0]]))
    assert fock_seminorm(nn, 1) == pytest.approx(0.0)
    assert fock_seminorm(NormalOrderedOperator.identity(5), 2) == pytest.approx(1.0)


hermitian_strategy = st.integers(2, 7).flatmap(
    lambda n: st.tuples(st.just(n), st.integers(0, 2**31 - 1)))


@settings(max_examples=60, deadline=None)
@given(hermitian_strategy, st.floats(-5, 5))
def test_homogeneity(data, c):
    n, seed = data
    rng = np.random.default_rng(seed)
    A = random_hermitian(rng, n, complex_=True)
    for eta in range(n + 1):
        base = reduced_seminorm(A, eta)
        assert reduced_seminorm(c * A, eta) == pytest.approx(abs(c) * base, rel=1e-12, abs=1e-12)
        assert reduced_seminorm(1j * A, eta) == pytest.approx(base, rel=1e-12, abs=1e-12)


@settings(max_examples=60, deadline=None)
@given(hermitian_strategy)
def test_triangle_and_unitary_invariance(data):
    n, seed = data
    rng = np.random.default_rng(seed)
    A, B = random_hermitian(rng, n, True), random_hermitian(rng, n, True)
    Q = unitary_group.rvs(n, random_state=seed % 2**32)
    for eta in range(n + 1):
        sa = reduced_seminorm(A, eta)
        assert reduced_seminorm(A + B, eta) <= sa + reduced_seminorm(B, eta) + 1e-10
        assert reduced_seminorm(Q @ A @ Q.conj().T, eta) == pytest.approx(sa, abs=1e-10)
