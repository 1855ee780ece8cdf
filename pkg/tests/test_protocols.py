import math

import numpy as np
import pytest
from hypothesis import assume, given, settings, strategies as st

from oracles import rk4_free
from weakmeas.model import DensityMatrix, DetectorParams, SystemParams
from weakmeas.protocols import (
    ArcsinDomain,
    NoCoherence,
    NotPure,
    exact_recovery_controls,
    measurement_then_recovery,
    purification_experiment,
    recovery_controls,
    verify_recovery,
)

DET = DetectorParams(10.0, 1.0, 1.0)
TAU_LOC = 2.0
H = 1.0


def oracle_final(rho, controls):
    """Dense RK4 integration of the free equations under the recovery controls."""
    step = 1e-3 / controls.omega_rec
    return rk4_free(rho.as_tuple(), controls.delta_t_rec, controls.eps_rec, controls.h_rec, controls.hbar, step)


def test_controls_hand_values_asymmetric_state():
    c = recovery_controls(DensityMatrix(0.9, 0.3, 0.0), H)
    assert c.eps_rec == pytest.approx(-2.0 / 3.0 * H, rel=1e-14)
    assert c.omega_rec == pytest.approx(2 * H * math.sqrt(10) / 3, rel=1e-14)
    assert c.delta_t_rec == pytest.approx(math.pi / c.omega_rec, rel=1e-14)


def test_controls_hand_values_symmetric_state():
    c = recovery_controls(DensityMatrix(0.5, 0.5, 0.0), H)
    assert c.eps_rec == pytest.approx(-2 * H, rel=1e-14)
    assert c.omega_rec == pytest.approx(2 * math.sqrt(2) * H, rel=1e-14)
    assert c.delta_t_rec == pytest.approx(math.pi / c.omega_rec, rel=1e-14)


def test_controls_reject_diagonal_state():
    with pytest.raises(NoCoherence):
        recovery_controls(DensityMatrix(1.0), H)
    with pytest.raises(NoCoherence):
        exact_recovery_controls(DensityMatrix(0.0), H)


def test_controls_reject_mixed_state():
    with pytest.raises(NotPure):
        recovery_controls(DensityMatrix(0.5, 0.3, 0.0), H)


def test_controls_report_arcsin_domain():
    # for pure states the argument peaks at exactly 1; overshoot within the purity tolerance is reported
    with pytest.raises(ArcsinDomain):
        recovery_controls(DensityMatrix(0.5, 0.0, 0.5 + 4e-13), H)


@given(st.floats(0.001, 0.999), st.floats(-math.pi, math.pi))
def test_arcsin_argument_bounded_for_pure_states(s11, phase):
    rho = DensityMatrix.pure(s11, phase)
    assume(abs(rho.sigma12) > 1e-6)
    mod2 = abs(rho.sigma12) ** 2
    eps = (math.sqrt(max(1 - 4 * mod2, 0.0)) - 1) * H * rho.re_sigma12 / mod2
    assert abs(rho.im_sigma12 * math.sqrt(4 * H * H + eps * eps) / H) <= 1 + 1e-12


def test_verify_recovery_asymmetric_state():
    rho = DensityMatrix(0.9, 0.3, 0.0)
    c = recovery_controls(rho, H)
    final = verify_recovery(rho, c)
    ref = oracle_final(rho, c)
    assert final.as_tuple() == pytest.approx(tuple(ref), abs=1e-9)
    assert ref[0] == pytest.approx(1.0, abs=1e-6)


def test_verify_recovery_symmetric_state():
    rho = DensityMatrix(0.5, 0.5, 0.0)
    c = recovery_controls(rho, H)
    final = verify_recovery(rho, c)
    ref = oracle_final(rho, c)
    assert final.as_tuple() == pytest.approx(tuple(ref), abs=1e-9)
    assert ref[0] == pytest.approx(1.0, abs=1e-6)


def test_recovery_is_state_specific():
    c = recovery_controls(DensityMatrix(0.5, 0.5, 0.0), H)
    wrong = DensityMatrix(0.5, 0.0, 0.5)
    ref = oracle_final(wrong, c)
    assert abs(verify_recovery(wrong, c).sigma11 - ref[0]) < 1e-9
    assert abs(ref[0] - 1.0) > 1e-3


def test_exact_controls_asymmetric_state_oracle():
    rho = DensityMatrix(0.9, 0.3, 0.0)
    c = exact_recovery_controls(rho, H)
    assert c.eps_rec == pytest.approx(-6 * H, rel=1e-14)
    assert oracle_final(rho, c)[0] == pytest.approx(1.0, abs=1e-9)


@settings(deadline=None)
@given(st.floats(0.001, 0.999), st.floats(-math.pi, math.pi), st.floats(0.2, 3.0), st.sampled_from([1.0, -1.0]))
def test_exact_controls_reach_dot_one(s11, phase, h_mag, sign):
    rho = DensityMatrix.pure(s11, phase)
    assume(abs(rho.sigma12) > 1e-6)
    c = exact_recovery_controls(rho, sign * h_mag)
    assert c.delta_t_rec > 0
    assert verify_recovery(rho, c).sigma11 >= 1 - 1e-9


@given(st.floats(0.001, 0.5))
def test_literal_controls_on_their_branch(s11):
    # real positive coherence with s22 >= 1/2: closed form and exact solution coincide;
    # sqrt(1 - 4|s12|^2) cancels near s11 = 1/2, costing about half the digits
    rho = DensityMatrix.pure(s11)
    lit, ex = recovery_controls(rho, H), exact_recovery_controls(rho, H)
    assert lit.eps_rec == pytest.approx(ex.eps_rec, rel=1e-6)
    assert lit.delta_t_rec == pytest.approx(ex.delta_t_rec, rel=1e-6)
    assert verify_recovery(rho, lit).sigma11 >= 1 - 1e-6


@given(st.floats(0.001, 0.999))
def test_real_coherence_gives_half_period(s11):
    c = recovery_controls(DensityMatrix.pure(s11), H)
    assert c.delta_t_rec == math.pi / c.omega_rec


def test_literal_controls_counterexample_complex_coherence():
    rho = DensityMatrix.pure(0.3, 0.6)
    c = recovery_controls(rho, H)
    assert oracle_final(rho, c)[0] < 0.99
    assert verify_recovery(rho, exact_recovery_controls(rho, H)).sigma11 >= 1 - 1e-9


def test_recovery_idempotent():
    rho = DensityMatrix.pure(0.27)
    final = verify_recovery(rho, exact_recovery_controls(rho, H))
    with pytest.raises(NoCoherence):
        exact_recovery_controls(final, H)


def test_measure_then_recover_without_measurement():
    rep = measurement_then_recovery(0.0, 0.01, DET, 1)
    assert rep.conditioned == DensityMatrix.pure(0.5)
    assert rep.controls.eps_rec == pytest.approx(-2 * H)
    assert rep.success


def test_measure_then_recover_all_seeds():
    finals = [measurement_then_recovery(TAU_LOC / 2, 0.01, DET, seed).final_sigma11 for seed in range(100)]
    assert min(finals) >= 1 - 1e-6


def test_measure_then_recover_rejects_nonideal_detector():
    with pytest.raises(NotPure):
        measurement_then_recovery(TAU_LOC / 2, 0.01, DetectorParams(10, 1, 1, 0.2), 1)


def test_measure_then_recover_already_localized():
    rep = measurement_then_recovery(0.0, 0.01, DET, 1, rho0=DensityMatrix(1.0))
    assert rep.controls is None and rep.success


def test_purification_without_response():
    series = purification_experiment(10.0, 0.05, SystemParams(), DetectorParams(10, 0, 1), 3)
    assert np.all(series.purity_defect == 0.25)


def test_purification_ideal_detector():
    finals = np.array([
        purification_experiment(20 * TAU_LOC, 0.02, SystemParams(), DET, seed).final
        for seed in range(1000)
    ])
    assert np.mean(finals < 1e-3) > 0.99


def test_purification_with_tunnelling():
    # Omega * tau_loc = 1
    sys = SystemParams(0.0, 0.25, 1.0)
    finals = [purification_experiment(50 * TAU_LOC, 0.01, sys, DET, seed).final for seed in range(100)]
    assert np.median(finals) < 1e-2
