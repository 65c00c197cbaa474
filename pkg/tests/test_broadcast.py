import math

import numpy as np
import pytest

from app.core.exceptions import ConfigError, RegimeError
from app.schemas.scatter import SphereModel
from app.services.broadcast_service import BroadcastService
from app.services.qinfo_service import QInfoService
from app.services.scatter_service import ScatterService
from app.utils import qmat


def _oracle_rows(model, env, rho0, nt):
    """(factored, dense) functionals at every f = j / nt with unit macro-fractions."""
    t = ScatterService.time_for_photons(model, nt)
    for n_obs in range(nt + 1):
        f = n_obs / nt
        state = BroadcastService.build_sfe_state(model, env, rho0, f, 1.0 / nt, t, "finite_box")
        dense = BroadcastService.explicit_functionals(
            BroadcastService.explicit_small_state(model, env, rho0, f, 1.0 / nt, nt), macro_photons=1,
        )
        yield state, dense


# ============================================================================
# FACTORED VS DENSE
# ============================================================================

@pytest.mark.parametrize("state_name", ["plus_state", "mixed_state"])
def test_pure_environment_matches_dense_oracle(request, oracle_model, state_name):
    rho0 = request.getfixturevalue(state_name)
    for state, dense in _oracle_rows(oracle_model, None, rho0, 6):
        assert BroadcastService.coherent_norm(state) == pytest.approx(dense.coherent_norm, abs=1e-9)
        assert BroadcastService.mutual_information(state) == pytest.approx(dense.mutual_information, abs=1e-9)
        if dense.macro_overlap is not None:
            overlap = BroadcastService.verify_broadcast(state).pairwise_overlap
            assert overlap == pytest.approx(dense.macro_overlap, abs=1e-9)


def test_mixed_environment_matches_dense_oracle(oracle_model, two_mode_measure, mixed_state):
    for state, dense in _oracle_rows(oracle_model, two_mode_measure, mixed_state, 3):
        assert not state.pure_environment
        assert BroadcastService.coherent_norm(state) == pytest.approx(dense.coherent_norm, abs=1e-9)
        assert BroadcastService.mutual_information(state) == pytest.approx(dense.mutual_information, abs=1e-9)
        if dense.macro_overlap is not None:
            overlap = BroadcastService.verify_broadcast(state).pairwise_overlap
            assert overlap == pytest.approx(dense.macro_overlap, abs=1e-9)


def test_explicit_state_keeps_observed_photons(oracle_model, plus_state):
    rho = BroadcastService.explicit_small_state(oracle_model, None, plus_state, 0.5, 0.25, 4)
    assert rho.subsystem_dims == (2, 2, 2)
    assert np.trace(rho.matrix).real == pytest.approx(1.0)


def test_controlled_identity_leaves_environment_uncorrelated(plus_state):
    env = qmat.pure_density([1.0, 0.0]).matrix
    rho = BroadcastService.controlled_unitary_state(plus_state, np.eye(2), np.eye(2), env, 3, 2)
    assert QInfoService.mutual_information(rho) == pytest.approx(0.0, abs=1e-12)


def test_dense_build_refuses_large_dimension(oracle_model, two_mode_measure, plus_state):
    with pytest.raises(RegimeError):
        BroadcastService.explicit_small_state(oracle_model, two_mode_measure, plus_state, 0.5, 0.125, 8)


def test_partition_mismatch_is_rejected(oracle_model, plus_state):
    with pytest.raises(ConfigError):
        BroadcastService.explicit_small_state(oracle_model, None, plus_state, 0.5, 1 / 3, 6)
    with pytest.raises(ConfigError):
        BroadcastService.build_sfe_state(oracle_model, None, plus_state, 0.3, 0.25, 1.0)


# ============================================================================
# DECAY AND BROADCAST STRUCTURE
# ============================================================================

def test_coherent_part_decays_with_discarded_photons(model, plus_state):
    tau = ScatterService.decoherence_time(model)
    state = BroadcastService.build_sfe_state(model, None, plus_state, 0.5, 0.25, 2 * tau)
    assert BroadcastService.coherent_norm(state) == pytest.approx(math.exp(-1.0), rel=1e-12)
    assert state.multiplicity == 2
    assert state.macro_count == 4
    assert state.discarded_photons == pytest.approx(state.observed_photons)


def test_state_at_time_zero_is_untouched(model, mixed_state):
    state = BroadcastService.build_sfe_state(model, None, mixed_state, 0.5, 0.25, 0.0)
    assert state.offdiag_coeff == pytest.approx(mixed_state.matrix[0, 1])
    report = BroadcastService.verify_broadcast(state)
    assert report.pairwise_overlap == 1.0
    assert not report.is_broadcast


def test_broadcast_structure_after_long_times(model, plus_state):
    tau = ScatterService.decoherence_time(model)
    state = BroadcastService.build_sfe_state(model, None, plus_state, 0.5, 0.25, 60 * tau)
    report = BroadcastService.verify_broadcast(state)
    assert report.is_broadcast
    assert report.spectrum == pytest.approx((0.5, 0.5))
    assert report.redundancy == 4.0
    assert BroadcastService.mutual_information(state) == pytest.approx(1.0, abs=1e-6)


def test_extreme_times_underflow_to_zero(model, plus_state):
    tau = ScatterService.decoherence_time(model)
    state = BroadcastService.build_sfe_state(model, None, plus_state, 0.5, 0.25, 5000 * tau)
    report = BroadcastService.verify_broadcast(state)
    assert report.underflow
    assert report.coherent_trace_norm == 0.0
    assert report.pairwise_overlap == 0.0


def test_mixed_environment_decays_at_modified_rate(model, anisotropic_measure, plus_state):
    tau_bar = ScatterService.modified_decoherence_time(model, anisotropic_measure)
    state = BroadcastService.build_sfe_state(model, anisotropic_measure, plus_state, 0.0, 0.5, 2 * tau_bar)
    assert BroadcastService.coherent_norm(state) == pytest.approx(math.exp(-2.0), rel=1e-6)


def test_observed_state_is_a_density_operator(oracle_model, mixed_state):
    t = ScatterService.time_for_photons(oracle_model, 4)
    state = BroadcastService.build_sfe_state(oracle_model, None, mixed_state, 0.5, 0.25, t, "finite_box")
    rho = BroadcastService.observed_state(state)
    assert rho.subsystem_dims == (2, 2, 2)
    assert qmat.is_density(rho.matrix)


def test_coherence_and_overlap_fall_monotonically(model, plus_state):
    tau = ScatterService.decoherence_time(model)
    reports = [
        BroadcastService.verify_broadcast(BroadcastService.build_sfe_state(model, None, plus_state, 0.5, 0.25, n * tau))
        for n in range(21)
    ]
    coherent = [r.coherent_trace_norm for r in reports]
    overlap = [r.pairwise_overlap for r in reports]
    assert all(a > b for a, b in zip(coherent, coherent[1:]))
    assert all(a > b for a, b in zip(overlap, overlap[1:]))


@pytest.mark.parametrize("f, m, first", [(0.5, 0.5, 19), (0.75, 0.25, 37)])
def test_broadcast_sets_in_once_both_decays_pass_tolerance(model, plus_state, f, m, first):
    tau = ScatterService.decoherence_time(model)
    flags = [
        BroadcastService.verify_broadcast(
            BroadcastService.build_sfe_state(model, None, plus_state, f, m, n * tau), tol=1e-4,
        ).is_broadcast
        for n in range(1, 61)
    ]
    assert first == math.ceil(-math.log(1e-4) / min(1 - f, m))
    assert flags.index(True) + 1 == first
    assert all(flags[first - 1:])


def test_quarter_fractions_after_twenty_decoherence_times(model, plus_state):
    tau = ScatterService.decoherence_time(model)
    report = BroadcastService.verify_broadcast(
        BroadcastService.build_sfe_state(model, None, plus_state, 0.25, 0.25, 20 * tau),
    )
    assert report.coherent_trace_norm == pytest.approx(math.exp(-15.0), rel=1e-9)
    assert report.coherent_trace_norm < 1e-6
    assert report.pairwise_overlap < 1e-2
    assert not report.is_broadcast


@pytest.mark.parametrize("box", [1.0, 4.0, 16.0])
def test_microscopic_fraction_carries_no_information(model, plus_state, box):
    sphere = SphereModel(**{**model.model_dump(), "box_L": box})
    t = 30 * ScatterService.decoherence_time(sphere)
    state = BroadcastService.build_fraction_state(sphere, None, plus_state, 3, t, "finite_box")
    assert BroadcastService.mutual_information(state) < 1e-3


def test_single_photon_fully_observed_carries_information(small_box_model, plus_state):
    rho = BroadcastService.explicit_small_state(small_box_model, None, plus_state, 1.0, 1.0, 1)
    information = BroadcastService.explicit_functionals(rho).mutual_information
    overlap = math.exp(ScatterService.log_overlap_modulus(small_box_model))
    assert information > 0
    assert information == pytest.approx(2 * qmat.binary_entropy((1 + overlap) / 2), rel=1e-6)

    still = SphereModel(**{**small_box_model.model_dump(), "delta_x": 0.0})
    rho = BroadcastService.explicit_small_state(still, None, plus_state, 1.0, 1.0, 1)
    assert BroadcastService.explicit_functionals(rho).mutual_information == pytest.approx(0.0, abs=1e-12)
