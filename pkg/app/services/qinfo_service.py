"""
Quantum Information Service
Mutual information, Holevo quantity, the entangled state that satisfies
the redundancy condition, and upper/lower bounds relating I(S:fE) to the
system entropy for controlled-unitary system-environment couplings.
All quantities are in bits.
"""

import logging
import math
from typing import Iterable, Optional, Tuple

import numpy as np

from app.core.config import TOL_PROB
from app.core.exceptions import ConfigError, RegimeError
from app.schemas.info import EnsembleCQ
from app.schemas.operator import DensityOperator
from app.utils import qmat

logger = logging.getLogger(__name__)


def _check_pair(p1: float, p2: float) -> None:
    if min(p1, p2) < -TOL_PROB or abs(p1 + p2 - 1.0) > TOL_PROB:
        raise ConfigError(f"({p1}, {p2}) is not a probability distribution")


def _bounded_entropy(eps: float, strict: bool, label: str) -> float:
    """h(eps) with eps required (strict) or clamped into [0, 1/2]."""
    if 0.0 <= eps <= 0.5:
        return qmat.binary_entropy(eps)
    if strict:
        raise RegimeError(f"{label} = {eps:.6e} outside [0, 1/2]; the bound needs larger t or L")
    logger.warning("%s = %.6e outside [0, 1/2]; entropy argument clamped", label, eps)
    return qmat.binary_entropy(min(max(eps, 0.0), 0.5))


class QInfoService:

    # ENTROPIC QUANTITIES
    @staticmethod
    def mutual_information(rho: DensityOperator, cut: Iterable[int] = (0,)) -> float:
        """S(A) + S(B) - S(AB), where A is the subsystem set ``cut``."""
        n = len(rho.subsystem_dims)
        if n < 2:
            raise ConfigError(f"mutual information needs at least two subsystems, got dims {rho.subsystem_dims}")
        side_a = sorted(set(int(k) for k in cut))
        if not side_a or side_a[0] < 0 or side_a[-1] >= n or len(side_a) == n:
            raise ConfigError(f"invalid cut {side_a} for {n} subsystems")
        side_b = [k for k in range(n) if k not in side_a]

        s_a = qmat.von_neumann_entropy(qmat.partial_trace(rho, side_a))
        s_b = qmat.von_neumann_entropy(qmat.partial_trace(rho, side_b))
        s_ab = qmat.von_neumann_entropy(rho)
        return max(s_a + s_b - s_ab, 0.0)

    @staticmethod
    def holevo_chi(ensemble: EnsembleCQ) -> float:
        probs = np.asarray(ensemble.probs, dtype=float)
        mixture = sum(p * state.matrix for p, state in zip(probs, ensemble.states))
        average = DensityOperator.trusted(qmat.hermitize(mixture), ensemble.states[0].subsystem_dims)
        conditional = sum(p * qmat.von_neumann_entropy(state) for p, state in zip(probs, ensemble.states))
        return max(qmat.von_neumann_entropy(average) - conditional, 0.0)

    @staticmethod
    def entanglement_witness(mutual_info: float, system_entropy: float, tol: float = 1e-12) -> bool:
        """I(S:fE) above H_S is impossible for a separable S:fE state."""
        return mutual_info > system_entropy + tol

    # ENTANGLED REDUNDANCY EXAMPLE
    @staticmethod
    def counterexample_state(p: float, check: bool = True) -> DensityOperator:
        """Two-qubit state with I(A:B) = S(B) that is nevertheless entangled for p != 1/2."""
        if not 0.0 < p < 1.0:
            raise ConfigError(f"p = {p} outside (0, 1)")
        if check and abs(p - 0.5) < 1e-15:
            raise ConfigError("p = 1/2 gives a separable state and is excluded")
        a, b = math.sqrt(p), math.sqrt(1.0 - p)
        phi = np.array([a, 0.0, 0.0, b], dtype=complex)
        psi = np.array([0.0, a, b, 0.0], dtype=complex)
        rho = p * np.outer(phi, phi.conj()) + (1.0 - p) * np.outer(psi, psi.conj())
        return DensityOperator(matrix=rho, subsystem_dims=(2, 2))

    # BOUNDS
    @staticmethod
    def fuchs_lower_bound(p1: float, p2: float, b_macro: float, fraction_count: float) -> float:
        """H(p) - 2 sqrt(p1 p2) B^{fM}, a lower bound on the accessible information."""
        _check_pair(p1, p2)
        if not 0.0 <= b_macro <= 1.0:
            raise ConfigError(f"overlap {b_macro} outside [0, 1]")
        h_s = qmat.binary_entropy(p1)
        return max(h_s - 2 * math.sqrt(max(p1 * p2, 0.0)) * b_macro ** fraction_count, 0.0)

    @staticmethod
    def information_gap_bound(
        eps_e: float, eps_fe: float, b_micro: float, exponent: float, p1: float, p2: float,
        strict: bool = True, log_b_micro: Optional[float] = None,
    ) -> float:
        """Upper bound on |H_S - I(S:fE)| for a qubit system.

        h(eps_E/2) + 2 h(eps_fE) + 4 eps_fE + 2 sqrt(p1 p2) B_micro^exponent.
        ``log_b_micro`` replaces log(b_micro) when the overlap is too close to
        one to be represented directly.
        """
        _check_pair(p1, p2)
        if eps_e < 0 or eps_fe < 0:
            raise ConfigError(f"trace-norm gaps must be non-negative, got {eps_e}, {eps_fe}")
        if strict and eps_e > 0.5:
            raise RegimeError(f"eps_E = {eps_e:.6e} outside [0, 1/2]; the bound needs larger t or L")
        if log_b_micro is None:
            if not 0.0 <= b_micro <= 1.0:
                raise ConfigError(f"overlap {b_micro} outside [0, 1]")
            log_b_micro = math.log(b_micro) if b_micro > 0 else -math.inf
        if exponent == 0:
            overlap_term = 1.0
        elif log_b_micro == -math.inf:
            overlap_term = 0.0
        else:
            overlap_term = math.exp(exponent * log_b_micro)

        return (
            _bounded_entropy(eps_e / 2, strict, "eps_E/2")
            + 2 * _bounded_entropy(eps_fe, strict, "eps_fE")
            + 4 * eps_fe
            + 2 * math.sqrt(max(p1 * p2, 0.0)) * overlap_term
        )

    @staticmethod
    def controlled_unitary_bound(
        rho0_s: DensityOperator, u1: np.ndarray, u2: np.ndarray, rho0_e: DensityOperator,
        n_envs: int, f: float, strict: bool = False,
    ) -> float:
        """The same bound evaluated for a general controlled-unitary coupling to n_envs copies."""
        if not 0.0 < f < 1.0:
            raise ConfigError(f"f = {f} must lie strictly between 0 and 1")
        if n_envs < 1:
            raise ConfigError(f"need at least one environment, got {n_envs}")
        if rho0_s.dim != 2:
            raise ConfigError(f"system must be a qubit, got dimension {rho0_s.dim}")
        u1, u2 = qmat.as_matrix(u1), qmat.as_matrix(u2)
        for u in (u1, u2):
            if u.shape != (rho0_e.dim, rho0_e.dim):
                raise ConfigError(f"unitary shape {u.shape} does not match environment dimension {rho0_e.dim}")
            if np.max(np.abs(u @ u.conj().T - np.eye(rho0_e.dim))) > 1e-10:
                raise ConfigError("environment coupling is not unitary")

        p1, p2 = (float(x) for x in np.real(np.diag(rho0_s.matrix)))
        c12 = abs(rho0_s.matrix[0, 1])
        cross = abs(np.trace(u1 @ rho0_e.matrix @ u2.conj().T))
        eps_e = 2 * c12 * cross ** n_envs
        eps_fe = 2 * c12 * cross ** ((1 - f) * n_envs)
        branch1 = DensityOperator.trusted(qmat.hermitize(u1 @ rho0_e.matrix @ u1.conj().T), rho0_e.subsystem_dims)
        branch2 = DensityOperator.trusted(qmat.hermitize(u2 @ rho0_e.matrix @ u2.conj().T), rho0_e.subsystem_dims)
        overlap = qmat.gen_overlap(branch1, branch2)
        return QInfoService.information_gap_bound(eps_e, eps_fe, overlap, f * n_envs, p1, p2, strict=strict)

    @staticmethod
    def asymptotic_bound(c12: float, p1: float, p2: float, alpha: float, f: float, t_over_tau: float) -> float:
        """Box-free limit of the bound, with time in units of the (modified) decoherence time."""
        _check_pair(p1, p2)
        c12 = abs(c12)
        coherent = c12 * math.exp(-t_over_tau)
        discarded = 2 * c12 * math.exp(-(1 - f) * t_over_tau)
        return (
            _bounded_entropy(coherent, False, "|c12| exp(-t/tau)")
            + 2 * _bounded_entropy(discarded, False, "2|c12| exp(-(1-f)t/tau)")
            + 4 * discarded
            + 2 * math.sqrt(max(p1 * p2, 0.0)) * math.exp(-alpha * f * t_over_tau)
        )

    @staticmethod
    def system_entropy(pointer_probs: Tuple[float, float]) -> float:
        return qmat.binary_entropy(pointer_probs[0])
