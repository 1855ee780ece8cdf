import math
import warnings

import pytest
from hypothesis import given, strategies as st

from weakmeas.model import (
    DensityMatrix,
    DetectorParams,
    InvalidState,
    NegativeExcessDecoherence,
    NonFiniteParameter,
    NonPositiveSpectralDensity,
    SystemParams,
    WeakCouplingWarning,
    derived_quantities,
    max_timestep,
    purity_defect,
    validate_params,
)

finite = st.floats(-50, 50, allow_nan=False)
positive = st.floats(1e-3, 50)


def test_valid_params_no_warnings():
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        vm = validate_params(SystemParams(1, 1, 1), DetectorParams(10, 1, 1, 0))
    assert vm.warnings == ()


def test_zero_spectral_density_rejected():
    with pytest.raises(NonPositiveSpectralDensity):
        validate_params(SystemParams(1, 1, 1), DetectorParams(10, 1, 0, 0))


def test_negative_excess_decoherence_rejected():
    with pytest.raises(NegativeExcessDecoherence):
        validate_params(SystemParams(), DetectorParams(10, 1, 1, -0.1))


@pytest.mark.parametrize("bad", [math.nan, math.inf, -math.inf])
def test_non_finite_rejected(bad):
    with pytest.raises(NonFiniteParameter):
        validate_params(SystemParams(eps=bad), DetectorParams())
    with pytest.raises(NonFiniteParameter):
        validate_params(SystemParams(), DetectorParams(i0=bad))


def test_weak_coupling_is_only_a_warning():
    with pytest.warns(WeakCouplingWarning):
        vm = validate_params(SystemParams(1, 1, 1), DetectorParams(1, 1, 1, 0))
    assert len(vm.warnings) == 1


def test_derived_direct_substitution():
    d = derived_quantities(SystemParams(), DetectorParams(10, 0.2, 1))
    assert d.gamma_d_meas == pytest.approx(0.01, rel=1e-14)
    assert d.tau_loc == pytest.approx(50, rel=1e-14)
    assert derived_quantities(SystemParams(1, 1, 1), DetectorParams()).omega == pytest.approx(math.sqrt(5))


def test_coupling_c_fig2_value():
    d = derived_quantities(SystemParams(1, 1, 1), DetectorParams(100, math.sqrt(3), 1))
    assert d.coupling_c == pytest.approx(3.0, rel=1e-14)


def test_coupling_c_undefined_without_tunnelling():
    d = derived_quantities(SystemParams(1, 0, 1), DetectorParams())
    assert d.coupling_c is None
    assert not d.coupling_defined


@given(finite, finite, positive, st.floats(0.01, 10), positive)
def test_derived_invariants(eps, h, hbar, di, si):
    d = derived_quantities(SystemParams(eps, h, hbar), DetectorParams(10, di, si))
    assert d.gamma_d_meas * d.tau_loc == pytest.approx(0.5, rel=1e-14)
    assert d.omega >= 2 * abs(h) / hbar * (1 - 1e-15)


@given(st.floats(0.01, 10), positive, st.floats(0.1, 10))
def test_derived_scaling(di, si, k):
    base = derived_quantities(SystemParams(), DetectorParams(10, di, si))
    scaled = derived_quantities(SystemParams(), DetectorParams(10, k * di, si))
    assert scaled.gamma_d_meas == pytest.approx(k * k * base.gamma_d_meas, rel=1e-12)
    assert scaled.tau_loc == pytest.approx(base.tau_loc / (k * k), rel=1e-12)


@pytest.mark.parametrize(
    "state, expected",
    [((0.5, 0.5, 0), 0.0), ((0.5, 0, 0), 0.25), ((0.9, 0.3, 0), 0.0)],
)
def test_purity_defect_examples(state, expected):
    assert purity_defect(DensityMatrix(*state)) == pytest.approx(expected, abs=1e-15)


def test_density_matrix_rejects_invalid():
    with pytest.raises(InvalidState):
        DensityMatrix(1.2)
    with pytest.raises(InvalidState):
        DensityMatrix(0.5, 0.6, 0)
    with pytest.raises(InvalidState):
        DensityMatrix(math.nan)


@given(st.floats(0, 1), st.floats(-math.pi, math.pi))
def test_pure_constructor_is_pure(s11, phase):
    rho = DensityMatrix.pure(s11, phase)
    assert abs(purity_defect(rho)) <= 1e-12
    assert DensityMatrix.from_bloch(*rho.bloch()).as_tuple() == pytest.approx(rho.as_tuple(), abs=1e-15)


def test_max_timestep():
    sys, det = SystemParams(1, 1, 1), DetectorParams(10, 1, 1)
    assert max_timestep(sys, det) == pytest.approx(min(0.2, 0.1 / math.sqrt(5)))
    assert max_timestep(SystemParams(), DetectorParams(10, 0, 1)) == math.inf
