import itertools

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from graded_qec.operators import (
    PAULI,
    PauliString,
    contains,
    dagger,
    dagger_closure,
    full_matrix_space,
    hs_inner,
    identity_space,
    is_dagger_closed,
    op_norm,
    pauli_strings,
    pauli_to_operator,
    random_density,
    random_unitary,
    single_qubit_pauli,
    space_product,
    span,
    trace_distance,
    trace_norm,
    union,
)
from graded_qec.config import use_tolerances
from strategies import complex_matrices, seeds


def test_pauli_strings_are_hs_orthogonal_with_norm_two_to_the_n():
    labels = pauli_strings(2)
    assert len(labels) == 16
    ops = [pauli_to_operator(p) for p in labels]
    gram = np.array([[hs_inner(a, b) for b in ops] for a in ops])
    assert np.allclose(gram, 4 * np.eye(16))


def test_pauli_weight_filter_counts():
    # 1 + 3*5 + 9*10 strings of weight <= 2 on five qubits
    assert len(pauli_strings(5, max_weight=2)) == 1 + 15 + 90


def test_pauli_string_parsing_and_coefficient():
    p = PauliString("XZ", 2j)
    assert p.n_qubits == 2 and p.weight == 2
    assert np.allclose(pauli_to_operator(p), 2j * np.kron(PAULI["X"], PAULI["Z"]))
    with pytest.raises(ValueError):
        PauliString("XQ")


def test_single_qubit_pauli_position():
    op = single_qubit_pauli(3, 1, "Y")
    assert np.allclose(op, np.kron(np.kron(np.eye(2), PAULI["Y"]), np.eye(2)))


def test_span_of_paulis_on_one_qubit_is_full():
    s = span([PAULI[k] for k in "IXYZ"])
    assert s.rank == 4
    assert s.same_space(full_matrix_space(2))


def test_span_detects_dependence():
    x, z = PAULI["X"], PAULI["Z"]
    s = span([x, z, x + 2 * z, 3 * x])
    assert s.rank == 2
    assert contains(s, x - z)
    assert not contains(s, PAULI["Y"])


def test_span_of_zero_operators_is_empty():
    s = span([np.zeros((3, 3))])
    assert s.rank == 0


def test_identity_and_full_spaces():
    assert identity_space(5).rank == 1
    assert full_matrix_space(3).rank == 9


def test_rank_cutoff_is_relative():
    a = np.diag([1.0, 0.0])
    b = np.diag([0.0, 1e-12])
    assert span([a, b]).rank == 1
    assert span([1e-6 * a, 1e-6 * b / 1e-3]).rank == 2


def test_space_product_of_paulis_closes():
    s = span([np.eye(2), PAULI["X"]])
    assert space_product(s, s).same_space(s)
    t = span([np.eye(2), PAULI["X"], PAULI["Z"]])
    assert space_product(t, t).rank == 4


def test_dagger_closure_adds_adjoint():
    raising = np.array([[0, 1], [0, 0]], dtype=complex)
    s = span([raising])
    assert not is_dagger_closed(s)
    c = dagger_closure(s)
    assert is_dagger_closed(c) and c.rank == 2


def test_union_dimension_mismatch():
    with pytest.raises(ValueError):
        union(identity_space(2), identity_space(3))


def test_norms_against_closed_forms():
    a = np.diag([3.0, -4.0])
    assert op_norm(a) == pytest.approx(4.0)
    assert trace_norm(a) == pytest.approx(7.0)
    rho = np.diag([1.0, 0.0])
    sigma = np.diag([0.0, 1.0])
    assert trace_distance(rho, sigma) == pytest.approx(1.0)


@given(complex_matrices(3, count=5))
def test_span_basis_is_orthonormal_and_contains_generators(ops):
    s = span(ops)
    assert np.allclose(s.gram(), np.eye(s.rank), atol=1e-10)
    for op in ops:
        assert s.residual(op) <= 1e-9 * (1 + np.linalg.norm(op))


@given(complex_matrices(3, count=4), complex_matrices(3))
def test_projection_is_idempotent_and_orthogonal(ops, a):
    s = span(ops)
    p = s.project(a)
    assert np.allclose(s.project(p), p, atol=1e-10)
    assert abs(hs_inner(a - p, p)) <= 1e-9 * (1 + np.linalg.norm(a) ** 2)
    proj = s.projector()
    assert np.allclose(proj @ proj, proj, atol=1e-10)


@given(complex_matrices(2, count=3), seeds)
def test_span_is_invariant_under_invertible_recombination(ops, seed):
    rng = np.random.default_rng(seed)
    mix = rng.normal(size=(3, 3)) + 1j * rng.normal(size=(3, 3))
    mixed = np.einsum("ab,bij->aij", mix, ops)
    assert span(ops).same_space(span(mixed))


@given(seeds, st.integers(min_value=1, max_value=4))
def test_random_unitary_and_density(seed, n):
    rng = np.random.default_rng(seed)
    u = random_unitary(n, rng)
    assert np.allclose(u.conj().T @ u, np.eye(n), atol=1e-12)
    rho = random_density(n, rng)
    assert np.trace(rho).real == pytest.approx(1.0)
    assert np.linalg.eigvalsh(rho).min() >= -1e-12


def test_contains_respects_active_tolerance():
    s = span([PAULI["X"]])
    nearly = PAULI["X"] + 1e-6 * PAULI["Z"]
    assert not contains(s, nearly)
    with use_tolerances(contains=1e-4):
        assert contains(s, nearly)


def test_dagger_on_stack():
    a = np.arange(8).reshape(2, 2, 2) * (1 + 1j)
    d = dagger(a)
    for k in range(2):
        assert np.allclose(d[k], a[k].conj().T)


@pytest.mark.parametrize("n,w", list(itertools.product([1, 2, 3], [0, 1])))
def test_pauli_count_formula(n, w):
    from math import comb

    assert len(pauli_strings(n, max_weight=w)) == sum(comb(n, k) * 3**k for k in range(w + 1))
