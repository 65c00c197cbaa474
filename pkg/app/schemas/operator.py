"""
Operator Schemas
Density operator carrier with dimension metadata and validity checks.
"""

from math import prod
from typing import Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict, field_validator, model_validator

from app.core.config import TOL_HERM, TOL_PSD, TOL_TRACE
from app.core.exceptions import ConfigError, RegimeError


# ============================================================================
# DENSITY OPERATOR
# ============================================================================

class DensityOperator(BaseModel):
    """Hermitian, PSD, unit-trace matrix on a tensor product of factors.

    Constructing through the normal constructor validates the state.
    Internal code that builds operators known to be valid (tensor products,
    partial traces) uses ``model_construct`` to skip the eigenvalue check.
    """

    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    matrix: np.ndarray
    subsystem_dims: Tuple[int, ...] = ()

    @field_validator("matrix", mode="before")
    @classmethod
    def _as_complex(cls, value):
        arr = np.asarray(value, dtype=complex)
        if arr.ndim != 2 or arr.shape[0] != arr.shape[1]:
            raise ConfigError(f"density operator must be square, got shape {arr.shape}")
        if not np.all(np.isfinite(arr)):
            raise ConfigError("density operator has non-finite entries")
        return arr

    @model_validator(mode="after")
    def _check_state(self):
        dim = self.matrix.shape[0]
        if not self.subsystem_dims:
            object.__setattr__(self, "subsystem_dims", (dim,))
        if prod(self.subsystem_dims) != dim:
            raise ConfigError(f"subsystem dims {self.subsystem_dims} do not multiply to {dim}")

        herm_gap = np.max(np.abs(self.matrix - self.matrix.conj().T))
        if herm_gap > TOL_HERM:
            raise RegimeError(f"operator is not Hermitian (max gap {herm_gap:.3e})")
        trace = np.trace(self.matrix).real
        if abs(trace - 1.0) > TOL_TRACE:
            raise RegimeError(f"operator trace {trace:.15f} differs from 1")
        min_eig = np.linalg.eigvalsh((self.matrix + self.matrix.conj().T) / 2)[0]
        if min_eig < -TOL_PSD:
            raise RegimeError(f"operator has negative eigenvalue {min_eig:.3e}")
        return self

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    @classmethod
    def from_vector(cls, psi, subsystem_dims: Tuple[int, ...] = ()) -> "DensityOperator":
        vec = np.asarray(psi, dtype=complex).reshape(-1)
        vec = vec / np.linalg.norm(vec)
        return cls(matrix=np.outer(vec, vec.conj()), subsystem_dims=tuple(subsystem_dims))

    @classmethod
    def trusted(cls, matrix: np.ndarray, subsystem_dims: Tuple[int, ...]) -> "DensityOperator":
        return cls.model_construct(matrix=np.asarray(matrix, dtype=complex),
                                   subsystem_dims=tuple(subsystem_dims))
