import json
import math

import numpy as np
import pytest

from entroprod import core
from entroprod.core import (
    CoreError,
    DensityOperator,
    HermitianOperator,
    HilbertDims,
    PAULI_X,
    PAULI_Z,
    UnitaryOperator,
)
from entroprod.rand import random_density, random_hermitian, random_unitary

RNG = np.random.default_rng(1234)


def test_tensor_identity_and_kron():
    i2 = np.eye(2)
    assert np.allclose(core.tensor([i2, i2]), np.eye(4))
    sz_kron = core.tensor([PAULI_Z, i2])
    assert np.allclose(np.diag(sz_kron), [1, 1, -1, -1])


def test_tensor_vector_action():
    a = RNG.normal(size=(2, 2)) + 1j * RNG.normal(size=(2, 2))
    b = RNG.normal(size=(2, 2)) + 1j * RNG.normal(size=(2, 2))
    x = RNG.normal(size=2) + 1j * RNG.normal(size=2)
    y = RNG.normal(size=2) + 1j * RNG.normal(size=2)
    lhs = core.tensor([a, b]) @ np.kron(x, y)
    rhs = np.kron(a @ x, b @ y)
    assert np.abs(lhs - rhs).max() < 1e-12


def test_tensor_empty_errors():
    with pytest.raises(CoreError):
        core.tensor([])


def test_partial_trace_product_state():
    rho_s = random_density(2, RNG)
    rho_e = random_density(3, RNG)
    joint = DensityOperator.from_matrix(core.tensor([rho_s, rho_e]), (2, 3))
    reduced = core.partial_trace(joint, [0])
    assert np.abs(reduced.matrix - rho_s.matrix).max() < 1e-12
    assert abs(np.trace(reduced.matrix) - 1.0) < 1e-12


def test_partial_trace_bell_state():
    bell = DensityOperator.pure([1, 0, 0, 1], dims=(2, 2))
    reduced = core.partial_trace(bell, [0])
    assert np.abs(reduced.matrix - np.eye(2) / 2).max() < 1e-12


def test_partial_trace_expectation_consistency():
    rho = random_density(6, RNG, dims=(2, 3))
    rho_a = core.partial_trace(rho, [0])
    for _ in range(10):
        x_a = random_hermitian(2, RNG).matrix
        lhs = np.trace(x_a @ rho_a.matrix)
        rhs = np.trace(core.tensor([x_a, np.eye(3)]) @ rho.matrix)
        assert abs(lhs - rhs) < 1e-12


def test_partial_trace_index_errors():
    rho = random_density(4, RNG, dims=(2, 2))
    with pytest.raises(CoreError):
        core.partial_trace(rho, [3])
    with pytest.raises(CoreError):
        core.partial_trace(rho, [])


def test_von_neumann_entropy_values():
    pure = DensityOperator.pure(RNG.normal(size=4) + 1j * RNG.normal(size=4))
    assert core.von_neumann_entropy(pure) < 1e-12
    mixed = DensityOperator.from_matrix(np.eye(5) / 5)
    assert abs(core.von_neumann_entropy(mixed) - math.log(5)) < 1e-12
    diag = DensityOperator.from_matrix(np.diag([0.25, 0.75]))
    expected = -(0.25 * math.log(0.25) + 0.75 * math.log(0.75))
    assert abs(core.von_neumann_entropy(diag) - expected) < 1e-12


def test_von_neumann_entropy_rejects_nonhermitian():
    with pytest.raises(CoreError):
        core.von_neumann_entropy(np.array([[0.5, 1.0], [0.0, 0.5]]))


def test_relative_entropy_basics():
    rho = random_density(4, RNG)
    assert abs(core.relative_entropy(rho, rho)) < 1e-12
    zero = DensityOperator.pure([1, 0])
    one = DensityOperator.pure([0, 1])
    assert core.relative_entropy(zero, one) == math.inf
    p = np.array([0.2, 0.8])
    q = np.array([0.5, 0.5])
    val = core.relative_entropy(np.diag(p), np.diag(q))
    assert abs(val - np.sum(p * np.log(p / q))) < 1e-12


def test_relative_entropy_dim_mismatch():
    with pytest.raises(CoreError):
        core.relative_entropy(np.eye(2) / 2, np.eye(3) / 3)


def test_relative_entropy_nonnegative_random_pairs():
    rng = np.random.default_rng(77)
    for _ in range(100):
        d = int(rng.integers(2, 9))
        rho = random_density(d, rng)
        sigma = random_density(d, rng)
        val = core.relative_entropy(rho, sigma)
        assert val >= -1e-12
    rho = random_density(5, rng)
    assert abs(core.relative_entropy(rho, rho)) < 1e-11


def test_data_processing_inequality():
    rng = np.random.default_rng(88)
    for _ in range(20):
        rho = random_density(3, rng)
        sigma = random_density(3, rng)
        u = random_unitary(9, rng)
        anc = DensityOperator.pure([1, 0, 0])

        def channel(state):
            big = core.tensor([state, anc])
            out = u.matrix @ big @ u.matrix.conj().T
            return core._ptrace_matrix(out, (3, 3), [0])

        before = core.relative_entropy(rho, sigma)
        after = core.relative_entropy(channel(rho), channel(sigma))
        assert after <= before + 1e-10


def test_mutual_information_values():
    prod = DensityOperator.from_matrix(
        core.tensor([random_density(2, RNG), random_density(2, RNG)]), (2, 2))
    assert abs(core.mutual_information(prod, [0])) < 1e-10
    bell = DensityOperator.pure([1, 0, 0, 1], dims=(2, 2))
    assert abs(core.mutual_information(bell, [0]) - 2 * math.log(2)) < 1e-12


def test_mutual_information_relative_entropy_form():
    rho = random_density(4, RNG, dims=(2, 2))
    mi = core.mutual_information(rho, [0])
    rho_a = core.partial_trace(rho, [0])
    rho_b = core.partial_trace(rho, [1])
    alt = core.relative_entropy(rho, core.tensor([rho_a, rho_b]))
    assert abs(mi - alt) < 1e-10


def test_mutual_information_bad_split():
    rho = random_density(4, RNG, dims=(2, 2))
    with pytest.raises(CoreError):
        core.mutual_information(rho, [0, 1])
    with pytest.raises(CoreError):
        core.mutual_information(rho, [])


def test_renyi_divergence_limits_and_monotonicity():
    p = np.diag([0.3, 0.7])
    q = np.diag([0.6, 0.4])
    near_one = core.renyi_divergence(p, q, 1.0 + 1e-9)
    assert abs(near_one - core.relative_entropy(p, q)) < 1e-6
    rho = random_density(3, RNG)
    for alpha in (0.0, 0.5, 1.0, 2.0, math.inf):
        assert abs(core.renyi_divergence(rho, rho, alpha)) < 1e-10
    vals = [core.renyi_divergence(p, q, a) for a in (0.0, 0.5, 1.0, 2.0, math.inf)]
    assert all(vals[i] <= vals[i + 1] + 1e-12 for i in range(len(vals) - 1))


def test_renyi_divergence_alpha2_commuting_oracle():
    rng = np.random.default_rng(5)
    p = rng.random(4)
    p /= p.sum()
    q = rng.random(4)
    q /= q.sum()
    val = core.renyi_divergence(np.diag(p), np.diag(q), 2.0)
    assert abs(val - math.log(np.sum(p ** 2 / q))) < 1e-12


def test_renyi_divergence_negative_alpha():
    rho = random_density(2, RNG)
    with pytest.raises(CoreError):
        core.renyi_divergence(rho, rho, -0.5)


def test_thermal_state_limits():
    h = random_hermitian(4, RNG)
    uniform = core.thermal_state(h, 0.0)
    assert np.abs(uniform.matrix - np.eye(4) / 4).max() < 1e-12
    eps_gap = 1.3
    qubit = core.thermal_state(np.diag([0.0, eps_gap]), 2.0)
    f = 1.0 / (math.exp(2.0 * eps_gap) + 1.0)
    assert abs(qubit.matrix[1, 1].real - f) < 1e-12


def test_thermal_state_energy_monotone_in_beta():
    h = random_hermitian(5, RNG)
    energies = []
    for beta in np.linspace(0.0, 3.0, 13):
        th = core.thermal_state(h, beta)
        energies.append(float(np.real(np.trace(h.matrix @ th.matrix))))
    assert all(energies[i + 1] <= energies[i] + 1e-12 for i in range(len(energies) - 1))


def test_trace_distance_values():
    rho = random_density(3, RNG)
    assert core.trace_distance(rho, rho) < 1e-14
    zero = DensityOperator.pure([1, 0])
    one = DensityOperator.pure([0, 1])
    assert abs(core.trace_distance(zero, one) - 1.0) < 1e-12


def test_trace_distance_contractive_under_channel():
    rng = np.random.default_rng(6)
    rho = random_density(2, rng)
    sigma = random_density(2, rng)
    u = random_unitary(4, rng)
    anc = DensityOperator.pure([1, 0])

    def channel(state):
        big = core.tensor([state, anc])
        out = u.matrix @ big @ u.matrix.conj().T
        return core._ptrace_matrix(out, (2, 2), [0])

    assert (core.trace_distance(channel(rho), channel(sigma))
            <= core.trace_distance(rho, sigma) + 1e-12)


def test_dephase_and_coherence():
    h = PAULI_Z
    diag = DensityOperator.from_matrix(np.diag([0.3, 0.7]))
    assert np.abs(core.dephase(diag, h).matrix - diag.matrix).max() < 1e-14
    assert core.relative_entropy_of_coherence(diag, h) < 1e-12
    plus = DensityOperator.pure([1, 1])
    dephased = core.dephase(plus, h)
    assert np.abs(dephased.matrix - np.eye(2) / 2).max() < 1e-12
    assert abs(core.relative_entropy_of_coherence(plus, h) - math.log(2)) < 1e-12


def test_coherence_matches_relative_entropy_form():
    rho = random_density(3, RNG)
    h = random_hermitian(3, RNG)
    c = core.relative_entropy_of_coherence(rho, h)
    alt = core.relative_entropy(rho, core.dephase(rho, h))
    assert abs(c - alt) < 1e-10
    assert c >= -1e-12


def test_dephase_degenerate_blocks():
    # degenerate pair must stay a block, not be diagonalized arbitrarily
    h = np.diag([0.0, 0.0, 1.0])
    rho = random_density(3, RNG)
    deph = core.dephase(rho, h)
    assert abs(deph.matrix[0, 1] - rho.matrix[0, 1]) < 1e-12
    assert abs(deph.matrix[0, 2]) < 1e-14


def test_constructors_reject_invalid():
    with pytest.raises(CoreError):
        DensityOperator.from_matrix(np.diag([0.6, 0.6]))
    with pytest.raises(CoreError):
        DensityOperator.from_matrix(np.array([[1.1, 0], [0, -0.1]]))
    with pytest.raises(CoreError):
        DensityOperator.from_matrix(np.array([[0.5, 0.4], [0.1, 0.5]]))
    with pytest.raises(CoreError):
        UnitaryOperator.from_matrix(np.array([[1, 0], [0, 2]]))
    with pytest.raises(CoreError):
        HermitianOperator.from_matrix(np.array([[0, 1], [2, 0]]))
    with pytest.raises(CoreError):
        HilbertDims(())


def test_json_roundtrip():
    rho = random_density(4, RNG, dims=(2, 2))
    blob = json.dumps(rho.to_json())
    back = DensityOperator.from_json(json.loads(blob))
    assert np.abs(back.matrix - rho.matrix).max() < 1e-15
    assert back.dims.factors == (2, 2)
    with pytest.raises(CoreError):
        core.matrix_from_json({"dims": [2], "re": [[0, 0]], "im": [[0, 0]]})
