"""
Phase Service
Mutual information between the system and environment fractions across
fraction sizes (product, broadcasting and full-information regimes), and
spectrum-preserving inputs built from fixed points of unistochastic matrices.
"""

import concurrent.futures
import logging
import math
from typing import List, Optional, Sequence

import numpy as np
import scipy.linalg

from app.core.config import BROADCAST_TOL, TOL_ORTHONORMAL, WORKERS
from app.core.exceptions import ConfigError, RegimeError
from app.schemas.operator import DensityOperator
from app.schemas.phase import PFBroadcastReport, PhasePoint, StochasticMatrixP
from app.schemas.scatter import EvolutionMode, SphereModel
from app.services.broadcast_service import BroadcastService, Environment
from app.services.qinfo_service import QInfoService
from app.services.scatter_service import ScatterService, power_in_log_space

logger = logging.getLogger(__name__)

# below this many decoherence times the plateau has not formed
MIN_PLATEAU_TIME = 10.0


def decoherence_time_for(model: SphereModel, env: Environment) -> float:
    if env is None:
        return ScatterService.decoherence_time(model)
    return ScatterService.modified_decoherence_time(model, env)


class PhaseService:

    # PHASE DIAGRAM
    @staticmethod
    def phase_diagram(
        model: SphereModel, env: Environment, rho0_s, t: float, f_grid: Sequence[float],
        micro_counts: Sequence[int] = (), mode: EvolutionMode = "thermodynamic",
        workers: int = WORKERS,
    ) -> List[PhasePoint]:
        """I(S:fE) over the fraction grid, plus fixed-size (microscopic) fractions.

        Regimes are assigned from the fraction, not from the value of I.
        """
        if not f_grid and not micro_counts:
            raise ConfigError("phase diagram needs at least one fraction or microscopic count")
        for f in f_grid:
            if not 0.0 <= f <= 1.0:
                raise ConfigError(f"f = {f} outside [0, 1]")

        tau = decoherence_time_for(model, env)
        t_over_tau = t / tau if not math.isinf(tau) else 0.0
        if t_over_tau < MIN_PLATEAU_TIME:
            logger.warning("t = %.2f tau_D is short of the %.0f tau_D plateau regime", t_over_tau, MIN_PLATEAU_TIME)

        n_total = ScatterService.photon_count(model, t, mode)
        tasks = [(f, f * n_total, False) for f in f_grid]
        for mu in micro_counts:
            if mu > n_total:
                logger.warning("skipping microscopic fraction of %d photons: only %.0f scattered", mu, n_total)
                continue
            tasks.append((mu / n_total if n_total else 0.0, float(mu), True))
        if not tasks:
            raise ConfigError(f"no fraction fits the {n_total:.0f} scattered photons")

        def evaluate(task) -> PhasePoint:
            f, n_observed, micro = task
            return PhaseService._phase_point(model, env, rho0_s, t, mode, f, n_observed, micro, t_over_tau)

        logger.info("evaluating %d phase points on %d workers", len(tasks), workers)
        with concurrent.futures.ThreadPoolExecutor(max_workers=max(1, workers)) as ex:
            return list(ex.map(evaluate, tasks))

    @staticmethod
    def _phase_point(
        model: SphereModel, env: Environment, rho0_s, t: float, mode: EvolutionMode,
        f: float, n_observed: float, micro: bool, t_over_tau: float,
    ) -> PhasePoint:
        if micro or f == 0.0:
            regime = "product"
        elif f == 1.0:
            regime = "full_information"
        else:
            regime = "broadcasting"

        state = BroadcastService.build_fraction_state(model, env, rho0_s, n_observed, t, mode)
        exact = True
        try:
            value = BroadcastService.mutual_information(state)
        except (RegimeError, ConfigError) as exc:
            # mixed environments with many observed photons: accessible-information lower bound
            logger.debug("dense I(S:fE) unavailable at f=%.3f: %s", f, exc)
            overlap, _ = power_in_log_space(state.log_micro_bhattacharyya, state.observed_photons)
            p1, p2 = state.pointer_probs
            value = QInfoService.fuchs_lower_bound(p1, p2, overlap, 1)
            exact = False
        return PhasePoint(
            f=f, regime=regime, I_value=value, t_over_tauD=t_over_tau,
            observed_photons=n_observed, micro=micro, exact=exact,
        )

    # PERRON-FROBENIUS INPUTS
    @staticmethod
    def pf_matrix(phi_basis) -> StochasticMatrixP:
        """P_ij = |<phi_i|x_j>|^2; rows of ``phi_basis`` are the vectors phi_i in the pointer basis."""
        basis = np.asarray(phi_basis, dtype=complex)
        if basis.ndim != 2 or basis.shape[0] != basis.shape[1]:
            raise ConfigError(f"basis must be a square array of row vectors, got shape {basis.shape}")
        gram = basis @ basis.conj().T
        if np.max(np.abs(gram - np.eye(basis.shape[0]))) > TOL_ORTHONORMAL:
            raise ConfigError("basis vectors are not orthonormal")
        return StochasticMatrixP(entries=np.abs(basis) ** 2)

    @staticmethod
    def pf_stationary(matrix: StochasticMatrixP) -> np.ndarray:
        """Probability vector with P lambda = lambda.

        When the fixed space is degenerate the uniform vector is projected onto it.
        """
        fixed = scipy.linalg.null_space(matrix.entries - np.eye(matrix.dim), rcond=1e-10)
        uniform = np.full(matrix.dim, 1.0 / matrix.dim)
        if fixed.shape[1] == 1:
            vec = fixed[:, 0]
            vec = vec * np.sign(vec.sum())
        else:
            vec = fixed @ (fixed.T @ uniform)
        vec = np.clip(vec, 0.0, None)
        return vec / vec.sum()

    @staticmethod
    def pf_broadcast_check(
        model: SphereModel, env: Environment, phi_basis, f: float, m: float, t: float,
        spectrum: Optional[Sequence[float]] = None, mode: EvolutionMode = "thermodynamic",
        tol: float = BROADCAST_TOL,
    ) -> PFBroadcastReport:
        """Feed rho0 = sum_i lambda_i |phi_i><phi_i| and compare the broadcast spectrum with lambda.

        ``spectrum`` defaults to the stationary vector of P(phi).
        """
        matrix = PhaseService.pf_matrix(phi_basis)
        if matrix.dim != 2:
            raise ConfigError(f"the system is a qubit; got a basis of dimension {matrix.dim}")
        lam = PhaseService.pf_stationary(matrix) if spectrum is None else np.asarray(spectrum, dtype=float)
        if lam.shape != (2,) or np.any(lam < 0) or abs(lam.sum() - 1.0) > 1e-12:
            raise ConfigError(f"input spectrum {lam.tolist()} is not a qubit distribution")

        basis = np.asarray(phi_basis, dtype=complex)
        rho0 = sum(l * np.outer(v, v.conj()) for l, v in zip(lam, basis))
        rho0_s = DensityOperator(matrix=(rho0 + rho0.conj().T) / 2)
        state = BroadcastService.build_sfe_state(model, env, rho0_s, f, m, t, mode)
        report = BroadcastService.verify_broadcast(state, tol)

        output = np.asarray(report.spectrum)
        deviation = float(np.max(np.abs(output - lam)))
        stationary = deviation < 1e-10
        if not stationary:
            logger.warning("input spectrum is not stationary under P: deviation %.3e", deviation)
        return PFBroadcastReport(
            input_spectrum=tuple(float(x) for x in lam),
            output_spectrum=tuple(float(x) for x in output),
            deviation=deviation,
            stationary=stationary,
            broadcast=report,
        )
