import math

import numpy as np
import pytest
from scipy.stats import unitary_group

from app.core.exceptions import ConfigError, RegimeError
from app.schemas.operator import DensityOperator
from app.utils import qmat
from app.utils.sphere_grid import fibonacci_directions
from tests.conftest import qubit


BELL = np.array([1.0, 0.0, 0.0, 1.0]) / math.sqrt(2)


def _random_density(rng, dim, subsystem_dims=()):
    g = rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))
    rho = g @ g.conj().T
    return DensityOperator(matrix=qmat.hermitize(rho / np.trace(rho).real), subsystem_dims=subsystem_dims)


def _random_vector(rng, dim):
    psi = rng.normal(size=dim) + 1j * rng.normal(size=dim)
    return psi / np.linalg.norm(psi)


# ============================================================================
# DENSITY OPERATOR
# ============================================================================

def test_density_operator_defaults_to_single_factor():
    rho = DensityOperator(matrix=np.eye(4) / 4)
    assert rho.subsystem_dims == (4,)
    assert rho.dim == 4


def test_density_operator_rejects_dims_that_do_not_multiply():
    with pytest.raises(ValueError):
        DensityOperator(matrix=np.eye(4) / 4, subsystem_dims=(2, 3))


def test_density_operator_rejects_negative_spectrum():
    with pytest.raises(RegimeError):
        DensityOperator(matrix=np.diag([1.5, -0.5]))


def test_is_density():
    assert qmat.is_density(np.eye(2) / 2)
    assert not qmat.is_density(np.array([[0.5, 1.0], [0.0, 0.5]]))
    assert not qmat.is_density(np.eye(2))


# ============================================================================
# TENSOR STRUCTURE
# ============================================================================

def test_partial_trace_of_product_returns_factors():
    a = qubit(0.2, 0.1, 0.5)
    b = qubit(-0.3, 0.0, 0.4)
    ab = qmat.tensor(a, b)
    np.testing.assert_allclose(qmat.partial_trace(ab, [0]).matrix, a.matrix, atol=1e-14)
    np.testing.assert_allclose(qmat.partial_trace(ab, [1]).matrix, b.matrix, atol=1e-14)


def test_partial_trace_keeps_order_of_three_factors():
    a, b, c = qubit(0, 0, 1), qubit(1, 0, 0), qubit(0, 0, -1)
    abc = qmat.tensor_power(a, 1)
    abc = qmat.tensor(qmat.tensor(abc, b), c)
    reduced = qmat.partial_trace(abc, [0, 2])
    assert reduced.subsystem_dims == (2, 2)
    np.testing.assert_allclose(reduced.matrix, np.kron(a.matrix, c.matrix), atol=1e-14)


def test_partial_trace_composes(rng):
    rho = _random_density(rng, 8, (2, 2, 2))
    stepwise = qmat.partial_trace(qmat.partial_trace(rho, [0, 1]), [0])
    assert stepwise.subsystem_dims == (2,)
    np.testing.assert_allclose(stepwise.matrix, qmat.partial_trace(rho, [0]).matrix, atol=1e-14)
    np.testing.assert_allclose(
        qmat.partial_trace(qmat.partial_trace(rho, [1, 2]), [1]).matrix,
        qmat.partial_trace(rho, [2]).matrix, atol=1e-14,
    )


def test_tensor_spectrum_is_product_of_factor_spectra(rng):
    a, b = _random_density(rng, 2), _random_density(rng, 3)
    vals = np.linalg.eigvalsh(qmat.tensor(a, b).matrix)
    products = np.outer(np.linalg.eigvalsh(a.matrix), np.linalg.eigvalsh(b.matrix)).ravel()
    np.testing.assert_allclose(np.sort(vals), np.sort(products), atol=1e-13)


def test_partial_trace_rejects_bad_index():
    rho = qmat.pure_density(BELL, (2, 2))
    with pytest.raises(ConfigError):
        qmat.partial_trace(rho, [2])


def test_bell_state_partial_transpose_is_negative():
    rho = qmat.pure_density(BELL, (2, 2))
    assert qmat.partial_transpose_min_eig(rho) == pytest.approx(-0.5, abs=1e-12)


def test_product_state_partial_transpose_is_positive():
    rho = qmat.tensor(qubit(0.3, 0.2, 0.1), qubit(0.0, 0.5, -0.5))
    assert qmat.partial_transpose_min_eig(rho, 0) > -1e-12


# ============================================================================
# SPECTRA
# ============================================================================

def test_eigh_sorted_descending_with_phase_convention():
    a = np.array([[1.0, 1j], [-1j, 3.0]])
    vals, vecs = qmat.eigh_sorted(a)
    assert vals[0] > vals[1]
    for col in range(2):
        lead = vecs[np.flatnonzero(np.abs(vecs[:, col]) > 1e-12)[0], col]
        assert abs(lead.imag) < 1e-14 and lead.real > 0
    np.testing.assert_allclose(vecs @ np.diag(vals) @ vecs.conj().T, a, atol=1e-12)


def test_psd_sqrt_squares_back():
    rho = qubit(0.3, -0.4, 0.2).matrix
    root = qmat.psd_sqrt(rho)
    np.testing.assert_allclose(root @ root, rho, atol=1e-12)


def test_clamped_eigenvalues_rejects_real_negatives():
    with pytest.raises(RegimeError):
        qmat.clamped_eigenvalues(np.diag([1.0, -1e-3]))
    assert qmat.clamped_eigenvalues(np.diag([1.0, -1e-14]))[0] == 0.0


# ============================================================================
# NORMS, OVERLAPS, ENTROPIES
# ============================================================================

def test_trace_norm_of_coherence_block():
    off = np.array([[0.0, 0.25], [0.25, 0.0]])
    assert qmat.trace_norm(off) == pytest.approx(0.5, abs=1e-15)


def test_gen_overlap_of_pure_states_is_modulus_of_inner_product():
    psi = np.array([1.0, 0.0])
    phi = np.array([math.cos(0.4), math.sin(0.4)])
    overlap = qmat.gen_overlap(qmat.pure_density(psi), qmat.pure_density(phi))
    assert overlap == pytest.approx(math.cos(0.4), abs=1e-12)


def test_gen_overlap_of_random_pure_pairs(rng):
    for _ in range(20):
        psi, phi = _random_vector(rng, 3), _random_vector(rng, 3)
        overlap = qmat.gen_overlap(qmat.pure_density(psi), qmat.pure_density(phi))
        assert overlap == pytest.approx(abs(np.vdot(psi, phi)), abs=1e-6)


def test_trace_norm_is_a_norm(rng):
    for _ in range(10):
        a = rng.normal(size=(3, 3)) + 1j * rng.normal(size=(3, 3))
        b = rng.normal(size=(3, 3)) + 1j * rng.normal(size=(3, 3))
        assert qmat.trace_norm(a + b) <= qmat.trace_norm(a) + qmat.trace_norm(b) + 1e-12
        for scale in (-2.5, 0.3j):
            assert qmat.trace_norm(scale * a) == pytest.approx(abs(scale) * qmat.trace_norm(a), rel=1e-12)


def test_entropy_is_unitarily_invariant(rng):
    rho = _random_density(rng, 4)
    for _ in range(5):
        u = unitary_group.rvs(4, random_state=rng)
        rotated = DensityOperator(matrix=qmat.hermitize(u @ rho.matrix @ u.conj().T))
        assert qmat.von_neumann_entropy(rotated) == pytest.approx(qmat.von_neumann_entropy(rho), abs=1e-10)


def test_binary_entropy_below_overlap_bound():
    for p in np.linspace(0.0, 1.0, 101):
        assert qmat.binary_entropy(p) <= 2 * math.sqrt(p * (1 - p)) + 1e-12


def test_gen_overlap_limits():
    rho = qubit(0.1, 0.2, 0.3)
    assert qmat.gen_overlap(rho, rho) == pytest.approx(1.0, abs=1e-12)
    assert qmat.gen_overlap(qubit(0, 0, 1), qubit(0, 0, -1)) == 0.0


def test_entropies_in_bits():
    assert qmat.von_neumann_entropy(DensityOperator(matrix=np.eye(2) / 2)) == pytest.approx(1.0)
    assert qmat.von_neumann_entropy(qmat.pure_density(BELL, (2, 2))) == pytest.approx(0.0, abs=1e-12)
    assert qmat.binary_entropy(0.5) == pytest.approx(1.0)
    assert qmat.binary_entropy(0.0) == 0.0
    assert qmat.shannon_entropy([0.25] * 4) == pytest.approx(2.0)


def test_binary_entropy_rejects_out_of_range():
    with pytest.raises(ConfigError):
        qmat.binary_entropy(1.2)


# ============================================================================
# SPHERE GRIDS
# ============================================================================

def test_fibonacci_directions_are_unit_and_balanced():
    dirs = fibonacci_directions(200)
    assert dirs.shape == (200, 3)
    np.testing.assert_allclose(np.linalg.norm(dirs, axis=1), 1.0, atol=1e-12)
    assert np.all(np.abs(dirs.mean(axis=0)) < 0.02)


def test_fibonacci_directions_need_a_point():
    with pytest.raises(ValueError):
        fibonacci_directions(0)
