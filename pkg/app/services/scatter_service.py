"""
Scatter Service
Photon scattering off a dielectric sphere in two positions: box-normalized
single-photon overlaps, decoherence times, receptivity and the
thermodynamic-limit decay laws for pure and mixed photon environments.
"""

import logging
import math
from typing import Optional, Tuple

import numpy as np
import scipy.linalg

from app.core.config import ISOTROPIC_JITTER, UNDERFLOW_LOG
from app.core.exceptions import ConfigError, RegimeError
from app.schemas.operator import DensityOperator
from app.schemas.scatter import (
    EvolutionMode, Mode, ReceptivityReport, SpectralMeasure, SphereModel,
)
from app.utils import qmat
from app.utils.sphere_grid import fibonacci_directions

logger = logging.getLogger(__name__)

# fraction of eta_bar above which the off-diagonal channel is reported as dominant
OFFDIAG_FLAG_RATIO = 0.1

# singular values of S1^dag S2 blocks within this of 1 are round-off
CONTRACTION_TOL = 1e-12


# ============================================================================
# ARGUMENT CHECKS
# ============================================================================

def check_mode(mode: str) -> None:
    if mode not in ("finite_box", "thermodynamic"):
        raise ConfigError(f"unknown mode {mode!r}, expected 'finite_box' or 'thermodynamic'")


def check_time(t: float) -> None:
    if not np.isfinite(t) or t < 0:
        raise ConfigError(f"time must be finite and non-negative, got {t}")


def check_fraction(value: float, name: str = "f") -> None:
    if not 0.0 <= value <= 1.0:
        raise ConfigError(f"{name} = {value} outside [0, 1]")


def power_in_log_space(log_base: float, exponent: float) -> Tuple[float, bool]:
    """exp(exponent * log_base), with results below the underflow floor set to 0.

    Returns the value and whether it underflowed.
    """
    if exponent == 0:
        return 1.0, False
    total = exponent * log_base
    if total < UNDERFLOW_LOG:
        logger.debug("powered overlap underflow: log value %.3e", total)
        return 0.0, True
    return math.exp(total), False


# ============================================================================
# SINGLE-MODE HELPERS
# ============================================================================

def _mode_geometry(model: SphereModel, k_vectors: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    k_vectors = np.atleast_2d(np.asarray(k_vectors, dtype=float))
    norms = np.linalg.norm(k_vectors, axis=1)
    if np.any(norms == 0):
        raise ConfigError("wave vector must be non-zero")
    worst = float(np.max(norms)) * model.delta_x
    if worst >= model.soft_threshold:
        raise RegimeError(f"|k|*delta_x = {worst:.3e} outside the soft sector (< {model.soft_threshold})")
    cos_theta = k_vectors @ model.axis / norms
    return norms, cos_theta


def _decay_term(model: SphereModel, norms: np.ndarray, cos_theta: np.ndarray) -> np.ndarray:
    """Real second-order part B_k of 1 - <k|S2^dag S1 k>."""
    return (2 * np.pi * model.delta_x ** 2 * norms ** 6 * model.a_tilde6
            * (3 + 11 * cos_theta ** 2) / (15 * model.box_L ** 2))


def _phase_term(model: SphereModel, norms: np.ndarray, cos_theta: np.ndarray) -> np.ndarray:
    return 8 * np.pi * model.delta_x * norms ** 5 * model.a_tilde6 * cos_theta / (3 * model.box_L ** 2)


def _checked_decay(model: SphereModel, norms: np.ndarray, cos_theta: np.ndarray) -> np.ndarray:
    decay = _decay_term(model, norms, cos_theta)
    if np.any(decay >= 1):
        raise RegimeError(
            f"per-photon decay {float(np.max(decay)):.3e} >= 1; the 1/L^2 expansion does not hold for this box"
        )
    return decay


def _checked_overlap(model: SphereModel, norms: np.ndarray, cos_theta: np.ndarray) -> np.ndarray:
    """Truncated overlaps 1 - B_k + i phase_k, required to lie in the unit disk."""
    decay = _checked_decay(model, norms, cos_theta)
    phase = _phase_term(model, norms, cos_theta)
    # |1 - B + i phase| <= 1  <=>  phase^2 <= B (2 - B)
    excess = phase ** 2 - decay * (2.0 - decay)
    if np.any(excess > 0):
        worst = int(np.argmax(excess))
        raise RegimeError(
            f"first-order phase {float(phase[worst]):.3e} outweighs the decay {float(decay[worst]):.3e}; "
            f"the truncated overlap leaves the unit disk for this box"
        )
    return (1.0 - decay) + 1j * phase


# ============================================================================
# SCATTER SERVICE
# ============================================================================

class ScatterService:

    # PURE ENVIRONMENT
    @staticmethod
    def micro_overlap(model: SphereModel, k: Optional[np.ndarray] = None) -> complex:
        """<k|S2^dag S1 k> to second order in k*delta_x and first order in 1/L^2."""
        k = model.k0_vector if k is None else k
        norms, cos_theta = _mode_geometry(model, k)
        return complex(_checked_overlap(model, norms, cos_theta)[0])

    @staticmethod
    def log_overlap_modulus(model: SphereModel, k: Optional[np.ndarray] = None) -> float:
        """log|<k|S2^dag S1 k>| at leading order in 1/L^2, i.e. log(1 - B_k)."""
        k = model.k0_vector if k is None else k
        norms, cos_theta = _mode_geometry(model, k)
        return float(np.log1p(-_checked_decay(model, norms, cos_theta)[0]))

    @staticmethod
    def decoherence_time(model: SphereModel) -> float:
        rate = (2 * np.pi / 15 * model.photon_density * model.delta_x ** 2 * model.c
                * model.k0 ** 6 * model.a_tilde6 * (3 + 11 * np.cos(model.theta) ** 2))
        return math.inf if rate == 0 else float(1.0 / rate)

    @staticmethod
    def photon_count(model: SphereModel, t: float, mode: EvolutionMode = "finite_box") -> float:
        """Photons scattered up to time t: N_t = L^2 (N/V) c t."""
        check_mode(mode)
        check_time(t)
        n = model.box_L ** 2 * model.photon_density * model.c * t
        return float(round(n)) if mode == "finite_box" else float(n)

    @staticmethod
    def time_for_photons(model: SphereModel, n: float) -> float:
        if n < 0:
            raise ConfigError(f"photon count must be non-negative, got {n}")
        return n / (model.box_L ** 2 * model.photon_density * model.c)

    @staticmethod
    def decoherence_factor(model: SphereModel, f: float, t: float, mode: EvolutionMode = "thermodynamic") -> float:
        check_fraction(f)
        return ScatterService._pure_power(model, 1.0 - f, t, mode)

    @staticmethod
    def macro_overlap_pure(model: SphereModel, m: float, t: float, mode: EvolutionMode = "thermodynamic") -> float:
        if not 0.0 < m <= 1.0:
            raise ConfigError(f"m = {m} outside (0, 1]")
        return ScatterService._pure_power(model, m, t, mode)

    @staticmethod
    def _pure_power(model: SphereModel, share: float, t: float, mode: EvolutionMode) -> float:
        check_mode(mode)
        check_time(t)
        if mode == "thermodynamic":
            tau = ScatterService.decoherence_time(model)
            return 1.0 if math.isinf(tau) else math.exp(-share * t / tau)
        n = ScatterService.photon_count(model, t, mode)
        value, _ = power_in_log_space(ScatterService.log_overlap_modulus(model), share * n)
        return value

    # MIXED ENVIRONMENT
    @staticmethod
    def s_matrix_block(model: SphereModel, measure: SpectralMeasure) -> np.ndarray:
        """<k|S1^dag S2|k'> restricted to the modes of the measure."""
        block, _ = ScatterService._s_block(model, measure)
        return block

    @staticmethod
    def _s_block(model: SphereModel, measure: SpectralMeasure) -> Tuple[np.ndarray, float]:
        k_vectors = measure.k_vectors
        norms, cos_theta = _mode_geometry(model, k_vectors)
        decay = _checked_decay(model, norms, cos_theta)
        phase = _phase_term(model, norms, cos_theta)

        micro = (1.0 - decay) + 1j * phase
        diag = np.conj(micro) / np.abs(micro) * (1.0 - decay)

        # elastic dipole kernel between modes of the same energy shell
        n = len(norms)
        unit = k_vectors / norms[:, None]
        labels = measure.shell_labels()
        same_shell = (labels[:, None] == labels[None, :]) & ~np.eye(n, dtype=bool)
        z = unit @ model.axis
        z_gap = z[None, :] - z[:, None]
        dots = unit @ unit.T
        cell = 4 * np.pi / measure.shell_resolution
        weight = (model.offdiag_scale * model.delta_x ** 2 * norms[:, None] ** 6 * model.a_tilde6
                  / (2 * model.box_L ** 2))
        b_sq = np.where(same_shell, weight * (1 + dots ** 2) * z_gap ** 2 * cell, 0.0)
        b = np.sign(z_gap) * np.sqrt(b_sq)

        # rows of a unitary: |diag|^2 + sum |b|^2 <= 1
        budget = decay * (2.0 - decay)
        row = b_sq.sum(axis=1)
        rescale = 1.0
        over = row > budget
        if np.any(over):
            rescale = float(np.min(budget[over] / row[over]))
            logger.warning("off-diagonal S elements rescaled by %.6f to keep unitarity", rescale)
            b = b * np.sqrt(rescale)

        block = np.diag(diag).astype(complex) - b
        return block, rescale

    @staticmethod
    def m_matrix(model: SphereModel, measure: SpectralMeasure) -> np.ndarray:
        _require_injective(measure)
        block = ScatterService.s_matrix_block(model, measure)
        return _m_from_block(block, measure.probabilities)

    @staticmethod
    def eta_bar(model: SphereModel, measure: SpectralMeasure) -> float:
        _require_injective(measure)
        norms, cos_theta = _mode_geometry(model, measure.k_vectors)
        decay = _checked_decay(model, norms, cos_theta)
        return float(model.box_L ** 2 / 2 * np.sum(measure.probabilities * decay * (2.0 - decay)))

    @staticmethod
    def eta_bar_prime(model: SphereModel, measure: SpectralMeasure) -> float:
        _require_injective(measure)
        block = ScatterService.s_matrix_block(model, measure)
        off = np.abs(block - np.diag(np.diag(block))) ** 2
        return float(model.box_L ** 2 / 2 * np.sum(measure.probabilities[:, None] * off))

    @staticmethod
    def receptivity(model: SphereModel, measure: SpectralMeasure) -> float:
        return ScatterService.receptivity_report(model, measure).alpha

    @staticmethod
    def modified_decoherence_time(model: SphereModel, measure: SpectralMeasure) -> float:
        norms, cos_theta = _mode_geometry(model, measure.k_vectors)
        average = np.sum(measure.probabilities * norms ** 6 * (3 + 11 * cos_theta ** 2))
        rate = 2 * np.pi / 15 * model.photon_density * model.delta_x ** 2 * model.c * model.a_tilde6 * average
        return math.inf if rate == 0 else float(1.0 / rate)

    @staticmethod
    def receptivity_report(model: SphereModel, measure: SpectralMeasure) -> ReceptivityReport:
        _require_injective(measure)
        _, rescale = ScatterService._s_block(model, measure)
        eta = ScatterService.eta_bar(model, measure)
        if eta == 0:
            raise ConfigError("eta_bar is zero: the environment does not decohere, receptivity is undefined")
        eta_prime = ScatterService.eta_bar_prime(model, measure)
        if eta_prime > eta * (1 + 1e-12):
            raise RegimeError(f"eta_bar' = {eta_prime:.6e} exceeds eta_bar = {eta:.6e}; model truncation broke down")
        dominant = eta_prime > OFFDIAG_FLAG_RATIO * eta
        if dominant:
            logger.warning("off-diagonal scattering carries %.1f%% of eta_bar", 100 * eta_prime / eta)
        return ReceptivityReport(
            eta_bar=eta,
            eta_bar_prime=eta_prime,
            alpha=min(max((eta - eta_prime) / eta, 0.0), 1.0),
            tau_D_bar=ScatterService.modified_decoherence_time(model, measure),
            offdiag_dominant=dominant,
            unitarity_rescale=rescale,
            single_mode=len(measure.modes) == 1,
        )

    @staticmethod
    def decoherence_factor_mixed(
        model: SphereModel, measure: SpectralMeasure, f: float, t: float, mode: EvolutionMode = "thermodynamic",
    ) -> float:
        """|Tr S1 rho S2^dag|^{(1-f) N_t}, or its limit exp(-(1-f) t / tau_D_bar)."""
        check_fraction(f)
        check_mode(mode)
        check_time(t)
        if mode == "thermodynamic":
            tau = ScatterService.modified_decoherence_time(model, measure)
            return 1.0 if math.isinf(tau) else math.exp(-(1.0 - f) * t / tau)
        n = ScatterService.photon_count(model, t, mode)
        value, _ = power_in_log_space(ScatterService.log_cross_trace(model, measure), (1.0 - f) * n)
        return value

    @staticmethod
    def log_cross_trace(model: SphereModel, measure: Optional[SpectralMeasure] = None) -> float:
        """log|Tr S1 rho S2^dag| for a single-photon state, computed without cancellation."""
        if measure is None:
            return ScatterService.log_overlap_modulus(model)
        norms, cos_theta = _mode_geometry(model, measure.k_vectors)
        decay = _checked_decay(model, norms, cos_theta)
        angle = np.arctan2(_phase_term(model, norms, cos_theta), 1.0 - decay)
        # 1 - sum_k p_k <k|S2^dag S1 k>
        z = np.sum(measure.probabilities
                   * (decay + (1.0 - decay) * (2 * np.sin(angle / 2) ** 2 - 1j * np.sin(angle))))
        return float(0.5 * np.log1p(abs(z) ** 2 - 2 * z.real))

    @staticmethod
    def bhattacharyya_micro_mixed(model: SphereModel, measure: SpectralMeasure) -> float:
        return 1.0 - ScatterService.micro_bhattacharyya_gap(model, measure)

    @staticmethod
    def micro_bhattacharyya_gap(model: SphereModel, measure: SpectralMeasure) -> float:
        """(eta_bar - eta_bar') / L^2, one minus the closed-form micro overlap.

        Only defined while every mode's truncated overlap stays in the unit
        disk. The diagonal channel then agrees with the exact overlap up to
        sum_k p_k B_k^2 / 2; the off-diagonal channel agrees up to the spread
        of mode probabilities within a shell.
        """
        _require_injective(measure)
        norms, cos_theta = _mode_geometry(model, measure.k_vectors)
        _checked_overlap(model, norms, cos_theta)
        eta = ScatterService.eta_bar(model, measure)
        eta_prime = ScatterService.eta_bar_prime(model, measure)
        return (eta - eta_prime) / model.box_L ** 2

    @staticmethod
    def bhattacharyya_micro_exact(model: SphereModel, measure: SpectralMeasure) -> float:
        """Tr sqrt(M); equals the generalized overlap of the two micro states."""
        vals = qmat.clamped_eigenvalues(ScatterService.m_matrix(model, measure))
        return float(min(np.sum(np.sqrt(vals)), 1.0))

    @staticmethod
    def perturbative_eigenvalues(model: SphereModel, measure: SpectralMeasure) -> np.ndarray:
        """First-order eigenvalues p_k^2 (1 - 2 Re b_kk) of M, sorted descending."""
        _require_injective(measure)
        block = ScatterService.s_matrix_block(model, measure)
        b_diag = 1.0 - np.diag(block)
        vals = measure.probabilities ** 2 * (1.0 - 2.0 * b_diag.real)
        return np.sort(vals)[::-1]

    @staticmethod
    def exact_eigenvalues(model: SphereModel, measure: SpectralMeasure) -> np.ndarray:
        vals, _ = qmat.eigh_sorted(ScatterService.m_matrix(model, measure))
        return vals

    @staticmethod
    def macro_overlap_mixed(
        model: SphereModel, measure: SpectralMeasure, m: float, t: float, mode: EvolutionMode = "thermodynamic",
    ) -> float:
        if not 0.0 < m <= 1.0:
            raise ConfigError(f"m = {m} outside (0, 1]")
        check_mode(mode)
        check_time(t)
        report = ScatterService.receptivity_report(model, measure)
        if mode == "thermodynamic":
            if math.isinf(report.tau_D_bar):
                return 1.0
            return math.exp(-report.alpha * m * t / report.tau_D_bar)
        n = ScatterService.photon_count(model, t, mode)
        log_base = math.log1p(-report.alpha * report.eta_bar / model.box_L ** 2)
        value, _ = power_in_log_space(log_base, m * n)
        return value

    @staticmethod
    def micro_states(model: SphereModel, measure: SpectralMeasure) -> Tuple[DensityOperator, DensityOperator]:
        """Explicit single-photon states S_i rho S_i^dag in the frame S1 = 1.

        S1^dag S2 is known only on the measure's modes, so it is completed to a
        unitary on twice as many levels by the standard contraction dilation.
        """
        block = ScatterService.s_matrix_block(model, measure)
        return _dilated_pair(block, measure.probabilities)

    # MEASURES
    @staticmethod
    def isotropic_measure(k: float, n_points: int, jitter: float = ISOTROPIC_JITTER) -> SpectralMeasure:
        """Near-uniform measure over n_points Fibonacci directions at |k| = k.

        Weights carry a small linear spread so that the measure is injective.
        """
        if k <= 0:
            raise ConfigError(f"wavenumber must be positive, got {k}")
        directions = fibonacci_directions(n_points)
        weights = 1.0 + jitter * np.arange(n_points) / n_points
        weights = weights / weights.sum()
        modes = [Mode(k_vector=tuple(k * d), probability=float(w)) for d, w in zip(directions, weights)]
        return SpectralMeasure(modes=modes, shell_resolution=n_points)


# ============================================================================
# INTERNALS
# ============================================================================

def _require_injective(measure: SpectralMeasure) -> None:
    if not measure.injective:
        raise ConfigError("spectral measure is degenerate: mode probabilities must be pairwise distinct")


def _m_from_block(block: np.ndarray, probs: np.ndarray) -> np.ndarray:
    root = np.sqrt(probs)
    m = (root[:, None] * block) @ np.diag(probs) @ (block.conj().T * root[None, :])
    return qmat.hermitize(m)


def _dilated_pair(block: np.ndarray, probs: np.ndarray) -> Tuple[DensityOperator, DensityOperator]:
    n = block.shape[0]
    unitary = dilation_unitary(block)
    rho = np.zeros((2 * n, 2 * n), dtype=complex)
    rho[:n, :n] = np.diag(probs)
    rotated = qmat.hermitize(unitary @ rho @ unitary.conj().T)
    return DensityOperator.trusted(rho, (2 * n,)), DensityOperator.trusted(rotated, (2 * n,))


def contraction_scale(block: np.ndarray) -> float:
    """Largest singular value when it exceeds 1 beyond round-off, otherwise 1."""
    norm = float(scipy.linalg.svdvals(block)[0])
    return norm if norm > 1.0 + CONTRACTION_TOL else 1.0


def dilation_unitary(block: np.ndarray) -> np.ndarray:
    """Unitary on 2n levels whose top-left block is ``block`` (rescaled to a contraction if needed)."""
    n = block.shape[0]
    block = block / contraction_scale(block)
    eye = np.eye(n)
    top = qmat.psd_sqrt(qmat.hermitize(eye - block @ block.conj().T))
    bottom = qmat.psd_sqrt(qmat.hermitize(eye - block.conj().T @ block))
    return np.block([[block, top], [bottom, -block.conj().T]])
