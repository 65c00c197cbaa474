"""
Dense Quantum Linear Algebra
Small-Hilbert-space operations on complex matrices and density operators.
All entropies are in bits.
"""

from functools import reduce
from typing import Iterable, Tuple, Union

import numpy as np
import scipy.linalg
from scipy.special import entr

from app.core.config import TOL_PSD
from app.core.exceptions import ConfigError, RegimeError
from app.schemas.operator import DensityOperator

Operand = Union[DensityOperator, np.ndarray]

# eigenvalues below this (relative) are round-off in rank-deficient products
SPECTRAL_CUTOFF = 1e-12


# ============================================================================
# HERMITIAN HELPERS
# ============================================================================

def as_matrix(a: Operand) -> np.ndarray:
    arr = a.matrix if isinstance(a, DensityOperator) else np.asarray(a, dtype=complex)
    if arr.ndim != 2:
        raise ConfigError(f"expected a matrix, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ConfigError("matrix has non-finite entries")
    return arr


def hermitize(a: np.ndarray) -> np.ndarray:
    return (a + a.conj().T) / 2


def eigh_sorted(a: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    """Eigendecomposition of a Hermitian matrix in a fixed convention.

    Eigenvalues are sorted descending; each eigenvector is rotated so that
    its first component with modulus above 1e-12 is real and positive.
    """
    vals, vecs = scipy.linalg.eigh(hermitize(a))
    vals, vecs = vals[::-1], vecs[:, ::-1].astype(complex)
    for col in range(vecs.shape[1]):
        nonzero = np.flatnonzero(np.abs(vecs[:, col]) > 1e-12)
        if nonzero.size:
            lead = vecs[nonzero[0], col]
            vecs[:, col] *= np.conj(lead) / abs(lead)
    return vals, vecs


def clamped_eigenvalues(a: np.ndarray, tol: float = TOL_PSD) -> np.ndarray:
    """Eigenvalues of a nominally PSD matrix, round-off negatives set to 0."""
    vals = scipy.linalg.eigvalsh(hermitize(a))
    if vals.size and vals[0] < -tol:
        raise RegimeError(f"matrix is not positive semidefinite (eigenvalue {vals[0]:.3e})")
    return np.clip(vals, 0.0, None)


def psd_sqrt(a: np.ndarray, tol: float = TOL_PSD) -> np.ndarray:
    vals, vecs = eigh_sorted(a)
    if vals.size and vals[-1] < -tol:
        raise RegimeError(f"matrix is not positive semidefinite (eigenvalue {vals[-1]:.3e})")
    root = np.sqrt(np.clip(vals, 0.0, None))
    return (vecs * root) @ vecs.conj().T


# ============================================================================
# TENSOR STRUCTURE
# ============================================================================

def tensor(a: Operand, b: Operand) -> Operand:
    if isinstance(a, DensityOperator) != isinstance(b, DensityOperator):
        raise ConfigError("tensor operands must both be density operators or both matrices")
    product = np.kron(as_matrix(a), as_matrix(b))
    if isinstance(a, DensityOperator):
        return DensityOperator.trusted(product, a.subsystem_dims + b.subsystem_dims)
    return product


def tensor_power(a: Operand, n: int) -> Operand:
    if n < 1:
        raise ConfigError(f"tensor power needs n >= 1, got {n}")
    return reduce(tensor, [a] * n)


def partial_trace(rho: DensityOperator, keep: Iterable[int]) -> DensityOperator:
    dims = list(rho.subsystem_dims)
    n = len(dims)
    keep = sorted(set(int(k) for k in keep))
    if not keep or keep[0] < 0 or keep[-1] >= n:
        raise ConfigError(f"invalid subsystem set {keep} for {n} subsystems")
    traced = [k for k in range(n) if k not in keep]
    if not traced:
        return rho

    d_keep = int(np.prod([dims[k] for k in keep]))
    d_trace = int(np.prod([dims[k] for k in traced]))
    perm = keep + traced + [n + k for k in keep] + [n + k for k in traced]
    t = rho.matrix.reshape(dims + dims).transpose(perm).reshape(d_keep, d_trace, d_keep, d_trace)
    reduced = np.trace(t, axis1=1, axis2=3)
    return DensityOperator.trusted(reduced, tuple(dims[k] for k in keep))


def partial_transpose(rho: DensityOperator, subsystem: int) -> np.ndarray:
    dims = rho.subsystem_dims
    if len(dims) != 2:
        raise ConfigError(f"partial transpose needs a bipartite operator, got dims {dims}")
    if subsystem not in (0, 1):
        raise ConfigError(f"subsystem must be 0 or 1, got {subsystem}")
    d_a, d_b = dims
    t = rho.matrix.reshape(d_a, d_b, d_a, d_b)
    t = t.transpose(2, 1, 0, 3) if subsystem == 0 else t.transpose(0, 3, 2, 1)
    return t.reshape(d_a * d_b, d_a * d_b)


def partial_transpose_min_eig(rho: DensityOperator, subsystem: int = 1) -> float:
    """Smallest eigenvalue of the partial transpose; negative certifies entanglement."""
    return float(scipy.linalg.eigvalsh(hermitize(partial_transpose(rho, subsystem)))[0])


# ============================================================================
# NORMS, OVERLAPS, ENTROPIES
# ============================================================================

def trace_norm(a: Operand) -> float:
    mat = as_matrix(a)
    if mat.shape[0] != mat.shape[1]:
        raise ConfigError(f"trace norm needs a square matrix, got shape {mat.shape}")
    return float(np.sum(scipy.linalg.svdvals(mat)))


def gen_overlap(rho1: DensityOperator, rho2: DensityOperator) -> float:
    """Generalized overlap Tr sqrt(sqrt(rho1) rho2 sqrt(rho1))."""
    if rho1.dim != rho2.dim:
        raise ConfigError(f"dimension mismatch: {rho1.dim} vs {rho2.dim}")
    root = psd_sqrt(rho1.matrix)
    vals = clamped_eigenvalues(root @ rho2.matrix @ root)
    vals[vals < SPECTRAL_CUTOFF * max(float(vals.max(initial=0.0)), 1.0)] = 0.0
    value = float(np.sum(np.sqrt(vals)))
    return min(max(value, 0.0), 1.0)


def von_neumann_entropy(rho: DensityOperator) -> float:
    vals = clamped_eigenvalues(rho.matrix)
    return max(float(np.sum(entr(vals)) / np.log(2)), 0.0)


def binary_entropy(p: float) -> float:
    if not -1e-15 <= p <= 1 + 1e-15:
        raise ConfigError(f"probability {p} outside [0, 1]")
    p = min(max(float(p), 0.0), 1.0)
    return float((entr(p) + entr(1.0 - p)) / np.log(2))


def shannon_entropy(probs: Iterable[float]) -> float:
    arr = np.clip(np.asarray(list(probs), dtype=float), 0.0, None)
    return float(np.sum(entr(arr)) / np.log(2))


# ============================================================================
# CONSTRUCTORS & CHECKS
# ============================================================================

def pure_density(psi, subsystem_dims: Tuple[int, ...] = ()) -> DensityOperator:
    return DensityOperator.from_vector(psi, subsystem_dims)


def is_density(a: np.ndarray) -> bool:
    try:
        DensityOperator(matrix=a)
    except (ValueError, RegimeError):
        return False
    return True
