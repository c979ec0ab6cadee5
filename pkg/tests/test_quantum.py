import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from artifact.quantum import (
    BELL_LABELS,
    Observable,
    ProjectiveMeasurement,
    QuantumError,
    QuantumState,
    bell_state,
    bell_vector,
    born_probs,
    computational_projectors,
    expectation,
    fidelity,
    partial_trace,
    pauli,
    tensor,
)
from artifact.game import bsm_measurement
from artifact.noise import werner

from conftest import random_density, random_hermitian


def test_pauli_z_on_zero():
    assert expectation(QuantumState.from_vector([1, 0]), pauli("Z")) == pytest.approx(1.0)


def test_pauli_y_squares_to_identity():
    y = pauli("Y").matrix
    assert np.allclose(y @ y, np.eye(2))


def test_unknown_pauli_rejected():
    with pytest.raises(QuantumError):
        pauli("W")


@pytest.mark.parametrize(
    "state,ops,value",
    [
        ("Phi+", "XX", 1.0),
        ("Phi+", "YY", -1.0),
        ("Psi+", "ZZ", -1.0),
    ],
)
def test_two_qubit_correlators(state, ops, value):
    obs = tensor(pauli(ops[0]), pauli(ops[1]))
    assert expectation(bell_state(state), obs) == pytest.approx(value, abs=1e-12)


def test_expectation_of_rotated_setting_on_phi_plus():
    a1 = (pauli("Z") + pauli("X")) / np.sqrt(2)
    obs = tensor(a1, pauli("Z"))
    assert expectation(bell_state("Phi+"), obs) == pytest.approx(0.7071068, abs=1e-7)


def test_self_fidelity_and_completeness():
    assert fidelity(bell_state("Phi+"), bell_state("Phi+")) == pytest.approx(1.0)
    total = sum(np.outer(bell_vector(b), bell_vector(b).conj()) for b in BELL_LABELS)
    assert np.allclose(total, np.eye(4), atol=1e-12)


def test_tensor_basics():
    i2 = Observable(np.eye(2))
    assert np.allclose(tensor(i2, i2).matrix, np.eye(4))
    assert tensor(bell_state("Phi+"), bell_state("Phi+")).dim == 16
    rho = QuantumState.from_vector([0.6, 0.8j])
    assert np.trace(tensor(rho, rho).matrix).real == pytest.approx(1.0)


def test_tensor_kind_mismatch():
    with pytest.raises(QuantumError):
        tensor(bell_state("Phi+"), pauli("X"))


def test_partial_trace_of_bell_is_mixed():
    red = partial_trace(bell_state("Phi+"), keep=[0], dims=[2, 2])
    assert np.allclose(red.matrix, np.eye(2) / 2)


def test_partial_trace_inconsistent_dims():
    with pytest.raises(QuantumError):
        partial_trace(bell_state("Phi+"), keep=[0], dims=[2, 3])


def test_partial_trace_left_inverse_of_tensor(rng):
    for _ in range(10):
        a = QuantumState(random_density(rng, 2))
        b = QuantumState(random_density(rng, 3))
        ab = tensor(a, b)
        assert np.allclose(partial_trace(ab, [0], [2, 3]).matrix, a.matrix, atol=1e-12)
        assert np.allclose(partial_trace(ab, [1], [2, 3]).matrix, b.matrix, atol=1e-12)


def test_subsystem_order_via_marginals():
    # |0> on Alice, |1> on Bob: marginals identify the ordering
    s = tensor(QuantumState.from_vector([1, 0]), QuantumState.from_vector([0, 1]))
    assert partial_trace(s, [0], [2, 2]).matrix[0, 0].real == pytest.approx(1)
    assert partial_trace(s, [1], [2, 2]).matrix[1, 1].real == pytest.approx(1)


def test_maximally_mixed_traceless_expectation(rng):
    h = random_hermitian(rng, 4)
    h -= np.trace(h) / 4 * np.eye(4)
    assert expectation(QuantumState.maximally_mixed(4), Observable(h)) == pytest.approx(0, abs=1e-12)


def test_bsm_on_middle_of_two_epr_pairs_uniform():
    psi = tensor(bell_state("Phi+"), bell_state("Phi+"))
    m = bsm_measurement()
    projs = tuple(np.kron(np.kron(np.eye(2), p), np.eye(2)) for p in m.projectors)
    big = ProjectiveMeasurement(m.outcomes, projs)
    assert np.allclose(born_probs(psi, big), [0.25] * 4, atol=1e-12)


def test_computational_measurement_on_zero():
    assert np.allclose(born_probs(QuantumState.from_vector([1, 0]), computational_projectors(2)), [1, 0])


def test_born_probs_dim_mismatch():
    with pytest.raises(QuantumError):
        born_probs(bell_state("Phi+"), computational_projectors(2))


def test_fidelity_values():
    assert fidelity(QuantumState.maximally_mixed(4), bell_state("Phi+")) == pytest.approx(0.25)
    assert fidelity(werner(0.980267), bell_state("Phi+")) == pytest.approx(0.9852, abs=1e-6)


def test_fidelity_rejects_mixed_target():
    with pytest.raises(QuantumError):
        fidelity(bell_state("Phi+"), QuantumState.maximally_mixed(4))


@pytest.mark.parametrize(
    "matrix",
    [
        np.array([[1, 1], [0, 0]]),  # not Hermitian
        np.eye(2),  # trace 2
        np.diag([1.5, -0.5]),  # negative eigenvalue
    ],
)
def test_invalid_states_rejected(matrix):
    with pytest.raises(QuantumError):
        QuantumState(matrix)


def test_incomplete_measurement_rejected():
    with pytest.raises(QuantumError):
        ProjectiveMeasurement(("0",), (np.diag([1.0, 0.0]),))


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 2**32 - 1), st.sampled_from([2, 3, 4]))
def test_born_probs_normalised(seed, d):
    rng = np.random.default_rng(seed)
    rho = QuantumState(random_density(rng, d))
    p = born_probs(rho, computational_projectors(d))
    assert np.all(p >= 0) and p.sum() == pytest.approx(1, abs=1e-12)
    assert 0 <= fidelity(rho, QuantumState.from_vector(rng.standard_normal(d))) <= 1


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 2**32 - 1), st.floats(-3, 3), st.floats(-3, 3))
def test_expectation_linear(seed, alpha, beta):
    rng = np.random.default_rng(seed)
    rho = QuantumState(random_density(rng, 4))
    h1, h2 = random_hermitian(rng, 4), random_hermitian(rng, 4)
    lhs = expectation(rho, Observable(alpha * h1 + beta * h2))
    rhs = alpha * expectation(rho, Observable(h1)) + beta * expectation(rho, Observable(h2))
    assert lhs == pytest.approx(rhs, abs=1e-10)
