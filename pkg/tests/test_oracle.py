from __future__ import annotations

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from trotterbounds.hamiltonian import SystemSpec, build_matrices
from trotterbounds.oracle import (
    TVT,
    VTV,
    NormalOrderedOperator,
    NumberNonConservingError,
    OracleLimitError,
    PauliOperator,
    check_soundness,
    commutator,
    density_sector,
    exact_commutator_norms,
    exact_trotter_error,
    fermionic_commutator_bound,
    fock_matrix,
    jordan_wigner,
    one_norm,
    pauli_commutator_bound,
    quadratic_sector,
    sector_basis,
    soundness_specs,
    trotter_hamiltonian_parts,
)

from conftest import random_hermitian


def op(terms, n):
    return NormalOrderedOperator(terms, n)


def number(p, n):
    return op({((p,), (p,)): 1.0}, n)


def test_number_operators_commute():
    assert len(commutator(number(0, 3), number(2, 3))) == 0
    assert len(commutator(number(1, 3), number(1, 3))) == 0


def test_hopping_number_commutator():
    hop = op({((0,), (1,)): 1.0}, 2)
    assert commutator(hop, number(0, 2)).isclose(-hop)
    assert commutator(hop, number(1, 2)).isclose(hop)


def test_anticommutation():
    a0 = op({((), (0,)): 1.0}, 2)
    a0d = a0.adjoint()
    anti = a0 * a0d + a0d * a0
    assert anti.isclose(NormalOrderedOperator.identity(2))
    a1d = op({((1,), ()): 1.0}, 2)
    assert len(a0d * a1d + a1d * a0d) == 0


def test_density_density_key():
    V = np.array([[0.0, 0.4], [0.4, 0.0]])
    H = NormalOrderedOperator.from_density_density(V)
    assert H.terms == {((0, 1), (0, 1)): -0.8}
    nn = number(0, 2) * number(1, 2)
    assert (nn * 0.8).isclose(H)


@settings(max_examples=15, deadline=None)
@given(st.integers(2, 5), st.integers(0, 2**31 - 1))
def test_free_fermion_closure(n, seed):
    rng = np.random.default_rng(seed)
    A, B = random_hermitian(rng, n, True), random_hermitian(rng, n, True)
    lhs = commutator(NormalOrderedOperator.from_quadratic(A),
                     NormalOrderedOperator.from_quadratic(B))
    assert lhs.isclose(NormalOrderedOperator.from_quadratic(A @ B - B @ A), atol=1e-10)


def _random_op(rng, n, n_terms=6):
    terms = {}
    for _ in range(n_terms):
        k = rng.integers(1, 3)
        cre = tuple(sorted(rng.choice(n, k, replace=False)))
        ann = tuple(sorted(rng.choice(n, k, replace=False)))
        terms[(cre, ann)] = rng.normal() + 1j * rng.normal()
    return op(terms, n)


@settings(max_examples=10, deadline=None)
@given(st.integers(0, 2**31 - 1))
def test_jacobi_identity(seed):
    rng = np.random.default_rng(seed)
    A, B, C = (_random_op(rng, 4, 3) for _ in range(3))
    total = (commutator(A, commutator(B, C)) + commutator(B, commutator(C, A))
             + commutator(C, commutator(A, B)))
    assert all(abs(c) < 1e-9 for c in total.terms.values())


@settings(max_examples=10, deadline=None)
@given(st.integers(0, 2**31 - 1))
def test_adjoint_involution_and_json(seed):
    rng = np.random.default_rng(seed)
    A = _random_op(rng, 5)
    assert A.adjoint().adjoint().isclose(A)
    assert NormalOrderedOperator.from_json(A.to_json()).isclose(A)
    B = _random_op(rng, 5)
    assert (A * B).adjoint().isclose(B.adjoint() * A.adjoint())


def test_jw_number_operator():
    P = jordan_wigner(number(0, 2))
    assert P.terms == {"II": 0.5, "ZI": -0.5}
    assert P.is_hermitian()


def test_jw_hopping():
    H = op({((0,), (1,)): 1.0, ((1,), (0,)): 1.0}, 2)
    P = jordan_wigner(H)
    assert P.terms == pytest.approx({"XX": 0.5, "YY": 0.5})


def test_pauli_algebra():
    X = PauliOperator({"X": 1.0}, 1)
    Y = PauliOperator({"Y": 1.0}, 1)
    assert (X * Y).terms == {"Z": 1j}
    assert np.allclose((X * X).to_matrix(), np.eye(2))
    assert (X + Y).one_norm() == 2.0


@settings(max_examples=10, deadline=None)
@given(st.integers(0, 2**31 - 1))
def test_jw_matches_fock(seed):
    rng = np.random.default_rng(seed)
    n = 6
    A = _random_op(rng, n)
    full = jordan_wigner(A, n).to_matrix()
    for eta in range(n + 1):
        idx = sector_basis(n, eta)
        assert np.allclose(full[np.ix_(idx, idx)], fock_matrix(A, eta, n), atol=1e-12)


def test_sector_builders_match_symbolic(rng):
    n = 5
    A = random_hermitian(rng, n, False)
    V = random_hermitian(rng, n, False)
    U = rng.normal(size=n)
    for eta in range(n + 1):
        assert np.allclose(quadratic_sector(A, eta),
                           fock_matrix(NormalOrderedOperator.from_quadratic(A), eta, n))
        dens = fock_matrix(NormalOrderedOperator.from_density_density(V, U), eta, n)
        assert np.allclose(np.diag(density_sector(V, U, eta)), dens)


def test_guards():
    with pytest.raises(OracleLimitError):
        sector_basis(20, 10)
    with pytest.raises(NumberNonConservingError):
        fock_matrix(op({((0,), ()): 1.0}, 2), 1)
    with pytest.raises(OracleLimitError):
        jordan_wigner(number(0, 15))


def test_one_norm():
    A = op({((), ()): 2.0, ((0,), (1,)): -1.5}, 2)
    assert one_norm(A) == 3.5
    assert one_norm(A, include_identity=False) == 1.5


def test_trotter_error_trivial_cases():
    spec = SystemSpec.jellium((2, 2), 2, 5.0)
    m = build_matrices(spec)
    assert exact_trotter_error(m.T, m.U, m.V, 0.0, VTV, 2) < 1e-14
    zero = np.zeros_like(m.V)
    assert exact_trotter_error(m.T, None, zero, 0.3, TVT, 2) < 1e-12


def test_trotter_error_cubic_scaling():
    spec = SystemSpec.jellium((2, 2), 2, 5.0)
    m = build_matrices(spec)
    e1 = exact_trotter_error(m.T, m.U, m.V, 0.01, VTV, 2)
    e2 = exact_trotter_error(m.T, m.U, m.V, 0.02, VTV, 2)
    assert np.log2(e2 / e1) == pytest.approx(3, abs=0.05)


def test_exact_commutators_match_symbolic():
    spec = SystemSpec.jellium((3, 1), 2, 5.0)
    m = build_matrices(spec)
    Ht, Hv = trotter_hamiltonian_parts(m.T, m.U, m.V)
    c = commutator(Ht, Hv)
    exact = exact_commutator_norms(m.T, m.U, m.V, 2)
    assert np.linalg.norm(fock_matrix(c, 2), 2) == pytest.approx(exact["first"], rel=1e-10)
    tvv = commutator(c, Hv)
    assert np.linalg.norm(fock_matrix(tvv, 2), 2) == pytest.approx(exact["tvv"], rel=1e-10)


def test_termwise_bounds_dominate_exact():
    spec = SystemSpec.jellium((2, 2), 2, 5.0)
    m = build_matrices(spec)
    fc = fermionic_commutator_bound(m.T, m.U, m.V)
    pc = pauli_commutator_bound(m.T, m.U, m.V)
    for eta in range(1, 5):
        exact = exact_commutator_norms(m.T, m.U, m.V, eta)
        for k in ("first", "tvt", "tvv"):
            assert fc[k] >= exact[k] and pc[k] >= exact[k]
    assert fc["W2_best"] == min(fc["W2_vtv"], fc["W2_tvt"])


def test_soundness_small():
    rows = [r for spec in soundness_specs((4, 6), (5.0,)) for r in check_soundness(spec)]
    assert rows and all(r["ok"] for r in rows)
