"""
Broadcast Service
Builds the state of the system together with an observed fraction of the
scattered photons, in a factored form valid for any photon number, and in a
dense form for small photon numbers. Verifies the spectrum broadcast
structure and computes the redundancy of the record.
"""

import logging
import math
from functools import reduce
from typing import Optional, Tuple, Union

import numpy as np
import scipy.linalg

from app.core.config import BROADCAST_TOL, MAX_DENSE_DIM, REDUNDANCY_DELTA
from app.core.exceptions import ConfigError, RegimeError
from app.schemas.info import EnsembleCQ
from app.schemas.operator import DensityOperator
from app.schemas.scatter import EvolutionMode, SpectralMeasure, SphereModel
from app.schemas.state import (
    BroadcastReport, ExplicitFunctionals, FactoredMacroState, PhotonEncoding, SfEState,
)
from app.services.qinfo_service import QInfoService
from app.services.scatter_service import (
    ScatterService, check_fraction, contraction_scale, dilation_unitary, power_in_log_space,
)
from app.utils import qmat

logger = logging.getLogger(__name__)

# pure environment when None, otherwise a mixed spectral measure
Environment = Optional[SpectralMeasure]

# exact micro overlaps above this are replaced by the closed form
EXACT_OVERLAP_LIMIT = 1.0 - 1e-6


# ============================================================================
# HELPERS
# ============================================================================

def _as_qubit(rho0_s: Union[DensityOperator, np.ndarray]) -> DensityOperator:
    rho = rho0_s if isinstance(rho0_s, DensityOperator) else DensityOperator(matrix=rho0_s)
    if rho.dim != 2:
        raise ConfigError(f"system state must be a qubit, got dimension {rho.dim}")
    return rho


def _integral(value: float, label: str) -> int:
    rounded = round(value)
    if abs(value - rounded) > 1e-9:
        raise ConfigError(f"{label} = {value} is not an integer")
    return int(rounded)


def _kron_power(a: np.ndarray, n: int) -> np.ndarray:
    if n == 0:
        return np.ones((1, 1), dtype=complex)
    return reduce(np.kron, [a] * n)


def _check_dense(dim: int, photons: int, system: int = 2) -> None:
    # compared in log space: photon counts can be astronomically large
    if math.log(system) + photons * math.log(dim) > math.log(MAX_DENSE_DIM) + 1e-9:
        raise RegimeError(f"dense state of {photons} photons of dimension {dim} exceeds the limit {MAX_DENSE_DIM}")


def _branch_vectors(state: SfEState) -> Tuple[np.ndarray, np.ndarray]:
    """Observed photons of a pure environment in the two branches, as vectors in their common plane."""
    overlap, _ = power_in_log_space(state.log_micro_bhattacharyya, state.observed_photons)
    if state.observed_photons == 0:
        rest = 0.0
    else:
        rest = math.sqrt(max(-math.expm1(2 * state.observed_photons * state.log_micro_bhattacharyya), 0.0))
    return np.array([1.0, 0.0], dtype=complex), np.array([overlap, rest], dtype=complex)


def _partition(f: float, m: float) -> int:
    """Number of macro-fractions M = 1/m, checked to be an integer with integer fM."""
    check_fraction(f)
    if not 0.0 < m <= 1.0:
        raise ConfigError(f"m = {m} outside (0, 1]")
    macro_count = _integral(1.0 / m, "1/m")
    _integral(f * macro_count, "f*M")
    return macro_count


# ============================================================================
# BROADCAST SERVICE
# ============================================================================

class BroadcastService:

    @staticmethod
    def photon_encoding(model: SphereModel, env: Environment = None) -> PhotonEncoding:
        """Single-photon states reached in the two branches.

        A pure photon is reduced to the plane spanned by S1|k0> and S2|k0>;
        the relative phase of the overlap is a local unitary on the system
        and is dropped. A mixed photon lives on the measure's modes plus an
        equal number of auxiliary levels that complete S1^dag S2 to a unitary.
        """
        if env is None:
            log_mod = ScatterService.log_overlap_modulus(model)
            overlap = math.exp(log_mod)
            rest = math.sqrt(max(-math.expm1(2 * log_mod), 0.0))
            psi1 = np.array([1.0, 0.0], dtype=complex)
            psi2 = np.array([overlap, rest], dtype=complex)
            return PhotonEncoding(
                initial=np.outer(psi1, psi1),
                unitary=np.array([[overlap, -rest], [rest, overlap]], dtype=complex),
                rho1=np.outer(psi1, psi1),
                rho2=np.outer(psi2, psi2.conj()),
                cross=np.outer(psi1, psi2.conj()),
                log_cross_trace=log_mod,
                log_bhattacharyya=log_mod,
                pure=True,
            )

        block = ScatterService.s_matrix_block(model, env)
        n = block.shape[0]
        scale = contraction_scale(block)
        unitary = dilation_unitary(block)
        initial = np.zeros((2 * n, 2 * n), dtype=complex)
        initial[:n, :n] = np.diag(env.probabilities)
        rho2 = qmat.hermitize(unitary @ initial @ unitary.conj().T)
        cross = initial @ unitary.conj().T

        exact = qmat.gen_overlap(DensityOperator.trusted(initial, (2 * n,)), DensityOperator.trusted(rho2, (2 * n,)))
        log_bhat = math.log(exact) if exact > 0 else -math.inf
        if exact >= EXACT_OVERLAP_LIMIT:
            try:
                log_bhat = math.log1p(-ScatterService.micro_bhattacharyya_gap(model, env))
            except RegimeError as exc:
                logger.debug("keeping the exact micro overlap: %s", exc)
        return PhotonEncoding(
            initial=initial,
            unitary=unitary,
            rho1=initial,
            rho2=rho2,
            cross=cross,
            log_cross_trace=ScatterService.log_cross_trace(model, env) - math.log(scale),
            cross_phase=float(np.angle(np.trace(cross))),
            log_bhattacharyya=log_bhat,
            pure=False,
        )

    # CONSTRUCTION
    @staticmethod
    def build_sfe_state(
        model: SphereModel, env: Environment, rho0_s, f: float, m: float, t: float,
        mode: EvolutionMode = "thermodynamic",
    ) -> SfEState:
        """S:fE state with the observed photons grouped into fM macro-fractions of mN_t photons."""
        macro_count = _partition(f, m)
        n_total = ScatterService.photon_count(model, t, mode)
        if mode == "finite_box":
            _integral(m * n_total, "m*N_t")
        return BroadcastService._assemble(
            model, env, _as_qubit(rho0_s), n_total, f * n_total,
            representative=m * n_total, multiplicity=_integral(f * macro_count, "f*M"),
            f=f, m=m, macro_count=macro_count,
        )

    @staticmethod
    def build_fraction_state(
        model: SphereModel, env: Environment, rho0_s, n_observed: float, t: float,
        mode: EvolutionMode = "finite_box",
    ) -> SfEState:
        """S:fE state for a fixed number of observed photons, which need not scale with N_t."""
        n_total = ScatterService.photon_count(model, t, mode)
        if n_observed < 0 or n_observed > n_total:
            raise ConfigError(f"observed photon count {n_observed} outside [0, {n_total}]")
        f = n_observed / n_total if n_total > 0 else 0.0
        return BroadcastService._assemble(
            model, env, _as_qubit(rho0_s), n_total, n_observed,
            representative=n_observed, multiplicity=1, f=f,
        )

    @staticmethod
    def _assemble(
        model: SphereModel, env: Environment, rho0_s: DensityOperator, n_total: float, n_observed: float,
        representative: float, multiplicity: int, f: float,
        m: Optional[float] = None, macro_count: Optional[int] = None,
    ) -> SfEState:
        encoding = BroadcastService.photon_encoding(model, env)
        p1, p2 = (float(x) for x in np.real(np.diag(rho0_s.matrix)))
        coherence = complex(rho0_s.matrix[0, 1])

        n_discarded = n_total - n_observed
        decay, underflow = power_in_log_space(encoding.log_cross_trace, n_discarded)
        gamma = coherence * decay * np.exp(1j * n_discarded * encoding.cross_phase)
        if underflow:
            logger.warning("coherent part underflowed after %.3e discarded photons", n_discarded)

        return SfEState(
            pointer_probs=(p1, p2),
            coherence=coherence,
            diag_blocks=(
                FactoredMacroState(base=encoding.rho1, count=representative, is_state=True),
                FactoredMacroState(base=encoding.rho2, count=representative, is_state=True),
            ),
            multiplicity=multiplicity,
            offdiag_coeff=complex(gamma),
            offdiag_block=FactoredMacroState(base=encoding.cross, count=n_observed),
            f=f,
            m=m,
            macro_count=macro_count,
            total_photons=n_total,
            observed_photons=n_observed,
            log_cross_trace=encoding.log_cross_trace,
            log_micro_bhattacharyya=encoding.log_bhattacharyya,
            pure_environment=encoding.pure,
            underflow=underflow,
        )

    # FUNCTIONALS
    @staticmethod
    def coherent_norm(state: SfEState) -> float:
        """Trace norm of the coherent part: 2|gamma|, since S1 rho S2^dag has unit trace norm."""
        return 2.0 * abs(state.offdiag_coeff)

    @staticmethod
    def observed_state(state: SfEState) -> DensityOperator:
        n_obs = state.offdiag_block.integral_count
        dim = state.offdiag_block.dim
        _check_dense(dim, n_obs)
        block1 = _kron_power(state.diag_blocks[0].base, n_obs)
        block2 = _kron_power(state.diag_blocks[1].base, n_obs)
        cross = _kron_power(state.offdiag_block.base, n_obs)

        p1, p2 = state.pointer_probs
        size = block1.shape[0]
        rho = np.zeros((2 * size, 2 * size), dtype=complex)
        rho[:size, :size] = p1 * block1
        rho[size:, size:] = p2 * block2
        rho[:size, size:] = state.offdiag_coeff * cross
        rho[size:, :size] = np.conj(state.offdiag_coeff) * cross.conj().T
        return DensityOperator.trusted(qmat.hermitize(rho), (2,) + (dim,) * n_obs)

    @staticmethod
    def mutual_information(state: SfEState) -> float:
        """Exact I(S:fE) in bits.

        Pure environments reduce to four dimensions for any photon number: the
        observed photons in the two branches span a plane with overlap
        |o|^{fN_t}. Mixed environments are built densely.
        """
        if not state.pure_environment:
            return QInfoService.mutual_information(BroadcastService.observed_state(state))

        branch1, branch2 = _branch_vectors(state)
        p1, p2 = state.pointer_probs
        rho = (np.kron(np.diag([1.0, 0.0]), p1 * np.outer(branch1, branch1.conj()))
               + np.kron(np.diag([0.0, 1.0]), p2 * np.outer(branch2, branch2.conj()))
               + np.kron(np.array([[0.0, 1.0], [0.0, 0.0]]), state.offdiag_coeff * np.outer(branch1, branch2.conj()))
               + np.kron(np.array([[0.0, 0.0], [1.0, 0.0]]),
                         np.conj(state.offdiag_coeff) * np.outer(branch2, branch1.conj())))
        return QInfoService.mutual_information(DensityOperator.trusted(qmat.hermitize(rho), (2, 2)))

    @staticmethod
    def holevo_information(state: SfEState) -> float:
        """Holevo quantity of the pointer ensemble {p_i, rho_fE|i} held by the observed photons."""
        p1, p2 = state.pointer_probs
        if min(p1, p2) <= 0:
            return 0.0
        if state.pure_environment:
            branches = [DensityOperator.trusted(np.outer(b, b.conj()), (2,)) for b in _branch_vectors(state)]
        else:
            rho = BroadcastService.observed_state(state)
            half = rho.dim // 2
            dims = rho.subsystem_dims[1:]
            branches = [
                DensityOperator.trusted(rho.matrix[:half, :half] / p1, dims),
                DensityOperator.trusted(rho.matrix[half:, half:] / p2, dims),
            ]
        return QInfoService.holevo_chi(EnsembleCQ(probs=[p1, p2], states=branches))

    @staticmethod
    def verify_broadcast(
        state: SfEState, tol: float = BROADCAST_TOL, delta: float = REDUNDANCY_DELTA,
    ) -> BroadcastReport:
        coherent = BroadcastService.coherent_norm(state)
        overlap, underflow = power_in_log_space(state.log_micro_bhattacharyya, state.diag_blocks[0].count)
        return BroadcastReport(
            coherent_trace_norm=coherent,
            pairwise_overlap=overlap,
            spectrum=state.pointer_probs,
            is_broadcast=coherent < tol and overlap < tol,
            tolerance=tol,
            redundancy=BroadcastService.redundancy(state, delta),
            underflow=underflow or state.underflow,
        )

    @staticmethod
    def redundancy(state: SfEState, delta: float = REDUNDANCY_DELTA) -> Optional[float]:
        """1/f for the smallest macro-fraction share f whose bound on |H_S - I| is within delta*H_S."""
        if not state.macro_count:
            return None
        p1, p2 = state.pointer_probs
        h_s = qmat.binary_entropy(p1)
        if h_s == 0:
            return None
        c12 = abs(state.coherence)
        n_total = state.total_photons
        eps_e = 2 * c12 * power_in_log_space(state.log_cross_trace, n_total)[0]
        if eps_e > 0.5:
            return None
        for j in range(1, state.macro_count):
            share = j / state.macro_count
            eps_fe = 2 * c12 * power_in_log_space(state.log_cross_trace, (1 - share) * n_total)[0]
            if eps_fe > 0.5:
                continue
            bound = QInfoService.information_gap_bound(
                eps_e, eps_fe, 0.0, share * n_total, p1, p2,
                log_b_micro=state.log_micro_bhattacharyya,
            )
            if bound <= delta * h_s:
                return 1.0 / share
        return None

    # DENSE ORACLE
    @staticmethod
    def explicit_small_state(
        model: SphereModel, env: Environment, rho0_s, f: float, m: float, n_photons: int,
    ) -> DensityOperator:
        """Dense S:fE state from explicit controlled-unitary evolution of n_photons photons."""
        rho0_s = _as_qubit(rho0_s)
        if n_photons < 0 or int(n_photons) != n_photons:
            raise ConfigError(f"photon count must be a non-negative integer, got {n_photons}")
        n_photons = int(n_photons)
        _partition(f, m)
        if n_photons == 0:
            return DensityOperator.trusted(rho0_s.matrix, (2,))
        n_observed = _integral(f * n_photons, "f*N_t")
        _integral(m * n_photons, "m*N_t")

        encoding = BroadcastService.photon_encoding(model, env)
        return BroadcastService.controlled_unitary_state(
            rho0_s, np.eye(encoding.dim), encoding.unitary, encoding.initial, n_photons, n_observed,
        )

    @staticmethod
    def controlled_unitary_state(
        rho0_s: DensityOperator, u1: np.ndarray, u2: np.ndarray, rho0_e: np.ndarray,
        n_envs: int, n_observed: int,
    ) -> DensityOperator:
        """Dense state after sum_i |i><i| (x) U_i^{(x) n_envs}, keeping the first n_observed environments."""
        if not 0 <= n_observed <= n_envs:
            raise ConfigError(f"observed count {n_observed} outside [0, {n_envs}]")
        rho0_e = np.asarray(rho0_e, dtype=complex)
        dim = rho0_e.shape[0]
        _check_dense(dim, n_envs)
        envs = _kron_power(rho0_e, n_envs)
        branch1 = _kron_power(np.asarray(u1, dtype=complex), n_envs)
        branch2 = _kron_power(np.asarray(u2, dtype=complex), n_envs)
        coupling = scipy.linalg.block_diag(branch1, branch2)
        evolved = coupling @ np.kron(rho0_s.matrix, envs) @ coupling.conj().T
        full = DensityOperator.trusted(qmat.hermitize(evolved), (2,) + (dim,) * n_envs)
        return qmat.partial_trace(full, range(n_observed + 1))

    @staticmethod
    def explicit_functionals(rho: DensityOperator, macro_photons: Optional[int] = None) -> ExplicitFunctionals:
        """Coherent norm, macro-fraction overlap and I(S:fE) of a dense state whose first factor is S."""
        size = rho.dim // 2
        mat = rho.matrix
        coherent = mat.copy()
        coherent[:size, :size] = 0.0
        coherent[size:, size:] = 0.0
        p1 = float(np.trace(mat[:size, :size]).real)
        p2 = float(np.trace(mat[size:, size:]).real)

        if len(rho.subsystem_dims) == 1:
            information = 0.0
        else:
            information = QInfoService.mutual_information(DensityOperator.trusted(mat, (2, size)))

        overlap = None
        if macro_photons and len(rho.subsystem_dims) > macro_photons and min(p1, p2) > 0:
            macro = qmat.partial_trace(rho, range(macro_photons + 1))
            half = macro.dim // 2
            dims = macro.subsystem_dims[1:]
            cond1 = DensityOperator.trusted(macro.matrix[:half, :half] / p1, dims)
            cond2 = DensityOperator.trusted(macro.matrix[half:, half:] / p2, dims)
            overlap = qmat.gen_overlap(cond1, cond2)

        return ExplicitFunctionals(
            coherent_norm=qmat.trace_norm(coherent),
            macro_overlap=overlap,
            mutual_information=information,
            spectrum=(p1, p2),
        )
