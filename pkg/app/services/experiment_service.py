"""
Experiment Service
Turns an ExperimentConfig into result rows and a metadata record, one
runner per experiment kind. Runs are deterministic for a fixed config.
"""

import hashlib
import json
import logging
import math
from pathlib import Path
from typing import Any, Callable, Dict, List, Optional

import numpy as np
from scipy.stats import unitary_group

from app.core.config import MAX_DENSE_DIM, ORACLE_TOL, WORKERS
from app.core.exceptions import ConfigError, RegimeError
from app.schemas.experiment import ExperimentConfig, ExperimentResult
from app.schemas.operator import DensityOperator
from app.schemas.scatter import SpectralMeasure
from app.schemas.state import SfEState
from app.services.broadcast_service import BroadcastService, Environment
from app.services.phase_service import PhaseService, decoherence_time_for
from app.services.qinfo_service import QInfoService
from app.services.scatter_service import ScatterService
from app.utils import qmat

logger = logging.getLogger(__name__)

VERSION = "v1.0.0"

# n_envs is drawn from [2, MAX_BOUND_ENVS]
MAX_BOUND_ENVS = 6


# ============================================================================
# HELPERS
# ============================================================================

def config_digest(config: ExperimentConfig) -> str:
    payload = json.dumps(config.model_dump(mode="json"), sort_keys=True)
    return hashlib.sha1(payload.encode("utf-8")).hexdigest()


def version_string(config: ExperimentConfig) -> str:
    return f"{VERSION}-0-g{config_digest(config)[:7]}"


def _random_qubit(rng: np.random.Generator) -> DensityOperator:
    """Qubit state with a Bloch vector drawn uniformly from the unit ball."""
    direction = rng.normal(size=3)
    direction /= np.linalg.norm(direction)
    x, y, z = direction * rng.uniform() ** (1.0 / 3.0)
    return DensityOperator(matrix=0.5 * np.array([[1 + z, x - 1j * y], [x + 1j * y, 1 - z]]))


def _require_decoherence(tau: float) -> None:
    if math.isinf(tau):
        raise ConfigError("the environment does not decohere (infinite decoherence time)")


# ============================================================================
# EXPERIMENT SERVICE
# ============================================================================

class ExperimentService:

    # CONFIGURATION
    @staticmethod
    def load_config(path: Optional[str], overrides: Dict[str, Any]) -> ExperimentConfig:
        """JSON file values, replaced by any non-None override (flags win)."""
        data: Dict[str, Any] = {}
        if path:
            try:
                data = json.loads(Path(path).read_text(encoding="utf-8"))
            except OSError as exc:
                raise ConfigError(f"cannot read config {path}: {exc}") from exc
            except json.JSONDecodeError as exc:
                raise ConfigError(f"{path}:{exc.lineno}:{exc.colno}: {exc.msg}") from exc
            if not isinstance(data, dict):
                raise ConfigError(f"{path}: top level must be a JSON object")
        data.update({key: value for key, value in overrides.items() if value is not None})
        return ExperimentConfig.model_validate(data)

    @staticmethod
    def environment(config: ExperimentConfig) -> Environment:
        spec = config.measure
        if spec.kind == "single":
            return None
        if spec.kind == "isotropic":
            return ScatterService.isotropic_measure(spec.k, spec.n_points)
        return SpectralMeasure(modes=spec.modes, shell_resolution=spec.shell_resolution)

    # RUN
    @staticmethod
    def run(config: ExperimentConfig) -> ExperimentResult:
        runner = _RUNNERS[config.kind]
        env = ExperimentService.environment(config)
        logger.info("running %s (%s environment, %s mode)", config.kind,
                    "pure" if env is None else f"{len(env.modes)}-mode", config.mode)
        columns, rows, extra = runner(config, env)

        metadata = ExperimentService.base_metadata(config, env)
        metadata.update(extra)
        return ExperimentResult(kind=config.kind, columns=columns, rows=rows, metadata=metadata)

    @staticmethod
    def base_metadata(config: ExperimentConfig, env: Environment) -> Dict[str, Any]:
        model = config.model
        metadata: Dict[str, Any] = {
            "config": config.model_dump(mode="json"),
            "version": version_string(config),
            "tau_D": ScatterService.decoherence_time(model),
            "dimensionless": model.dimensionless_groups(),
        }
        if env is not None:
            report = ScatterService.receptivity_report(model, env)
            metadata["tau_D_bar"] = report.tau_D_bar
            metadata["alpha"] = report.alpha
        return metadata


# ============================================================================
# RUNNERS
# ============================================================================

Rows = List[Dict[str, Any]]


def _redundancy(config: ExperimentConfig, env: Environment, rho0: DensityOperator, t: float) -> Optional[float]:
    """Redundancy of the thermodynamic state; None when f and m do not partition the photons."""
    try:
        state = BroadcastService.build_sfe_state(config.model, env, rho0, config.f, config.m, t, "thermodynamic")
    except ConfigError as exc:
        logger.debug("no redundancy at t = %.3e: %s", t, exc)
        return None
    return BroadcastService.verify_broadcast(state, config.tol, config.delta).redundancy


def _holevo(state: SfEState) -> Optional[float]:
    try:
        return BroadcastService.holevo_information(state)
    except (ConfigError, RegimeError) as exc:
        # mixed environments are built densely
        logger.debug("no Holevo quantity for %.3e observed photons: %s", state.observed_photons, exc)
        return None


def _run_decoherence(config: ExperimentConfig, env: Environment):
    model, rho0 = config.model, config.system.to_density()
    tau = decoherence_time_for(model, env)
    _require_decoherence(tau)

    rows: Rows = []
    for t_over in config.times:
        t = t_over * tau
        n_total = ScatterService.photon_count(model, t, "finite_box")
        state = BroadcastService.build_fraction_state(model, env, rho0, config.f * n_total, t, "finite_box")
        if env is None:
            thermo = ScatterService.decoherence_factor(model, config.f, t, "thermodynamic")
            overlap = ScatterService.macro_overlap_pure(model, config.m, t, config.mode)
        else:
            thermo = ScatterService.decoherence_factor_mixed(model, env, config.f, t, "thermodynamic")
            overlap = ScatterService.macro_overlap_mixed(model, env, config.m, t, config.mode)
        rows.append({
            "t_over_tauD": t_over,
            "coherent_norm_finite": BroadcastService.coherent_norm(state),
            "coherent_norm_thermo": 2.0 * abs(state.coherence) * thermo,
            "macro_overlap": overlap,
            "redundancy": _redundancy(config, env, rho0, t),
            "chi": _holevo(state),
        })

    columns = ["t_over_tauD", "coherent_norm_finite", "coherent_norm_thermo", "macro_overlap", "redundancy", "chi"]
    t_max = max(config.times, default=0.0) * tau
    return columns, rows, {"N_t": ScatterService.photon_count(model, t_max, config.mode), "f": config.f, "m": config.m}


def _run_phase_diagram(config: ExperimentConfig, env: Environment):
    model, rho0 = config.model, config.system.to_density()
    tau = decoherence_time_for(model, env)
    _require_decoherence(tau)
    t = config.phase_time * tau

    points = PhaseService.phase_diagram(
        model, env, rho0, t, config.f_grid, config.micro_counts, config.mode, workers=WORKERS,
    )
    rows = [{
        "f": p.f,
        "regime": p.regime,
        "I_bits": p.I_value,
        "t_over_tauD": p.t_over_tauD,
        "exact": p.exact,
        "micro": p.micro,
        "observed_photons": p.observed_photons,
    } for p in points]
    columns = ["f", "regime", "I_bits", "t_over_tauD", "exact", "micro", "observed_photons"]
    p1 = float(rho0.matrix[0, 0].real)
    return columns, rows, {
        "N_t": ScatterService.photon_count(model, t, config.mode),
        "H_S": qmat.binary_entropy(p1),
    }


def _closed_form_overlap(model, env: SpectralMeasure) -> Optional[float]:
    try:
        return ScatterService.bhattacharyya_micro_mixed(model, env)
    except RegimeError as exc:
        logger.warning("closed-form micro overlap unavailable: %s", exc)
        return None


def _run_mixed_env(config: ExperimentConfig, env: Environment):
    if env is None:
        raise ConfigError("mixed-env needs an inline or isotropic measure")
    model = config.model
    report = ScatterService.receptivity_report(model, env)
    _require_decoherence(report.tau_D_bar)

    rows: Rows = []
    for t_over in config.times:
        t = t_over * report.tau_D_bar
        rows.append({
            "t_over_tauD": t_over,
            "decay_finite": ScatterService.decoherence_factor_mixed(model, env, config.f, t, "finite_box"),
            "decay_thermo": ScatterService.decoherence_factor_mixed(model, env, config.f, t, "thermodynamic"),
            "overlap_finite": ScatterService.macro_overlap_mixed(model, env, config.m, t, "finite_box"),
            "overlap_thermo": ScatterService.macro_overlap_mixed(model, env, config.m, t, "thermodynamic"),
        })

    perturbative = ScatterService.perturbative_eigenvalues(model, env)
    exact = ScatterService.exact_eigenvalues(model, env)
    columns = ["t_over_tauD", "decay_finite", "decay_thermo", "overlap_finite", "overlap_thermo"]
    return columns, rows, {
        "eta_bar": report.eta_bar,
        "eta_bar_prime": report.eta_bar_prime,
        "offdiag_dominant": report.offdiag_dominant,
        "unitarity_rescale": report.unitarity_rescale,
        "b_micro_closed_form": _closed_form_overlap(model, env),
        "b_micro_exact": ScatterService.bhattacharyya_micro_exact(model, env),
        "eigenvalue_deviation": float(np.max(np.abs(perturbative - exact))),
        "f": config.f,
        "m": config.m,
    }


def _run_counterexample(config: ExperimentConfig, env: Environment):
    rho = QInfoService.counterexample_state(config.p)
    information = QInfoService.mutual_information(rho)
    h_b = qmat.von_neumann_entropy(qmat.partial_trace(rho, [1]))
    ppt = qmat.partial_transpose_min_eig(rho, 1)
    row = {
        "p": config.p,
        "I": information,
        "H_B": h_b,
        "qd_gap": abs(information - h_b),
        "ppt_min_eig": ppt,
        "entangled": ppt < -1e-12,
    }
    return list(row), [row], {}


def _run_pf_broadcast(config: ExperimentConfig, env: Environment):
    model = config.model
    tau = decoherence_time_for(model, env)
    _require_decoherence(tau)
    t = config.phase_time * tau

    cases = []
    if config.phi_basis is not None:
        cases.append(("config", config.basis_array()))
    else:
        cases.append(("hadamard", np.array([[1.0, 1.0], [1.0, -1.0]], dtype=complex) / math.sqrt(2)))
        rng = np.random.default_rng(config.seed)
        for i in range(config.pf_samples):
            cases.append((f"random_{i}", unitary_group.rvs(2, random_state=rng)))

    rows: Rows = []
    for name, basis in cases:
        report = PhaseService.pf_broadcast_check(
            model, env, basis, config.f, config.m, t, config.spectrum, config.mode, config.tol,
        )
        transfer = PhaseService.pf_matrix(basis).entries.T @ np.asarray(report.input_spectrum)
        rows.append({
            "case": name,
            "lambda_1": report.input_spectrum[0],
            "lambda_2": report.input_spectrum[1],
            "output_1": report.output_spectrum[0],
            "output_2": report.output_spectrum[1],
            "deviation": report.deviation,
            "transfer_deviation": float(np.max(np.abs(transfer - np.asarray(report.output_spectrum)))),
            "stationary": report.stationary,
            "is_broadcast": report.broadcast.is_broadcast,
        })
    columns = ["case", "lambda_1", "lambda_2", "output_1", "output_2",
               "deviation", "transfer_deviation", "stationary", "is_broadcast"]
    return columns, rows, {"N_t": ScatterService.photon_count(model, t, config.mode)}


def _run_oracle_check(config: ExperimentConfig, env: Environment):
    """Factored functionals against the dense controlled-unitary state, at every f = j / nt."""
    model, rho0 = config.model, config.system.to_density()
    nt = config.nt
    if nt < 1:
        raise ConfigError("oracle-check needs at least one photon (nt >= 1)")
    t = ScatterService.time_for_photons(model, nt)
    m = 1.0 / nt

    rows: Rows = []
    for n_obs in range(nt + 1):
        f = n_obs / nt
        state = BroadcastService.build_sfe_state(model, env, rho0, f, m, t, "finite_box")
        dense = BroadcastService.explicit_functionals(
            BroadcastService.explicit_small_state(model, env, rho0, f, m, nt), macro_photons=1,
        )
        factored_norm = BroadcastService.coherent_norm(state)
        factored_info = BroadcastService.mutual_information(state)
        deviations = [abs(factored_norm - dense.coherent_norm), abs(factored_info - dense.mutual_information)]
        factored_overlap = None
        if dense.macro_overlap is not None:
            factored_overlap = BroadcastService.verify_broadcast(state, config.tol).pairwise_overlap
            deviations.append(abs(factored_overlap - dense.macro_overlap))
        rows.append({
            "f": f,
            "coherent_norm_factored": factored_norm,
            "coherent_norm_dense": dense.coherent_norm,
            "I_factored": factored_info,
            "I_dense": dense.mutual_information,
            "macro_overlap_factored": factored_overlap,
            "macro_overlap_dense": dense.macro_overlap,
            "deviation": max(deviations),
        })

    worst = max(row["deviation"] for row in rows)
    logger.info("oracle check over %d fractions: max deviation %.3e", len(rows), worst)
    if worst > ORACLE_TOL:
        raise RegimeError(f"factored and dense paths disagree by {worst:.3e} > {ORACLE_TOL:.0e}")
    columns = ["f", "coherent_norm_factored", "coherent_norm_dense", "I_factored", "I_dense",
               "macro_overlap_factored", "macro_overlap_dense", "deviation"]
    return columns, rows, {"N_t": float(nt), "max_deviation": worst}


def _run_bound_check(config: ExperimentConfig, env: Environment):
    """Measured |H_S - I(S:fE)| against the bound on random qubit couplings and on the sphere itself."""
    rng = np.random.default_rng(config.seed)
    rows: Rows = []

    for i in range(config.configs):
        rho0_s = _random_qubit(rng)
        rho0_e = _random_qubit(rng)
        u1 = unitary_group.rvs(2, random_state=rng)
        u2 = unitary_group.rvs(2, random_state=rng)
        n_envs = int(rng.integers(2, MAX_BOUND_ENVS + 1))
        n_observed = int(rng.integers(1, n_envs))
        rows.append(_bound_row(f"random_{i}", rho0_s, u1, u2, rho0_e, n_envs, n_observed))

    encoding = BroadcastService.photon_encoding(config.model, env)
    if config.nt >= 2 and 2 * encoding.dim ** config.nt > MAX_DENSE_DIM:
        logger.warning("sphere instance skipped: %d photons of dimension %d are too large to build", config.nt, encoding.dim)
    elif config.nt >= 2:
        rho0_e = DensityOperator.trusted(encoding.initial, (encoding.dim,))
        n_observed = max(1, min(config.nt - 1, round(config.f * config.nt)))
        rows.append(_bound_row(
            "sphere", config.system.to_density(), np.eye(encoding.dim), encoding.unitary,
            rho0_e, config.nt, n_observed,
        ))

    violations = [row["case"] for row in rows if not row["holds"]]
    if violations:
        raise RegimeError(f"bound violated on {len(violations)} instance(s): {', '.join(violations[:5])}")
    columns = ["case", "n_envs", "f", "H_S", "I_bits", "gap", "bound", "holds"]
    return columns, rows, {"instances": len(rows)}


def _bound_row(case: str, rho0_s, u1, u2, rho0_e: DensityOperator, n_envs: int, n_observed: int) -> Dict[str, Any]:
    f = n_observed / n_envs
    rho = BroadcastService.controlled_unitary_state(rho0_s, u1, u2, rho0_e.matrix, n_envs, n_observed)
    information = QInfoService.mutual_information(rho)
    h_s = qmat.binary_entropy(float(rho0_s.matrix[0, 0].real))
    gap = abs(h_s - information)
    bound = QInfoService.controlled_unitary_bound(rho0_s, u1, u2, rho0_e, n_envs, f)
    return {
        "case": case, "n_envs": n_envs, "f": f, "H_S": h_s, "I_bits": information,
        "gap": gap, "bound": bound, "holds": gap <= bound + 1e-12,
    }


_RUNNERS: Dict[str, Callable] = {
    "decoherence": _run_decoherence,
    "phase-diagram": _run_phase_diagram,
    "mixed-env": _run_mixed_env,
    "counterexample": _run_counterexample,
    "pf-broadcast": _run_pf_broadcast,
    "oracle-check": _run_oracle_check,
    "bound-check": _run_bound_check,
}
