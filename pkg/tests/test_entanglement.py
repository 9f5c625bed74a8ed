import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from atomqip.core import DensityMatrix, QuantumState, fidelity, trace_distance
from atomqip.entanglement import (
    ATOM_MEMORY_STATE,
    BELL_STATE,
    CIRCULAR,
    EMISSION_STATE,
    LINEAR_DA,
    LINEAR_HV,
    PHOTON_PAIR,
    MeasurementSetting,
    ProtocolNoise,
    analytic_bell_fidelity,
    analyzer_unitary,
    bell_fidelity,
    concurrence,
    emit_entangled_pair,
    fidelity_decay_scan,
    half_wave_plate,
    measure_polarization,
    quarter_wave_plate,
    run_full_protocol,
    store_photon_in_memory,
)

CALIBRATED = ProtocolNoise(dephasing_time=1e-4, residual_error=0.054)
angles = st.floats(-10.0, 10.0)


# --- emission ----------------------------------------------------------------


def test_emitted_pair_maximally_entangled():
    rho = emit_entangled_pair()
    for label in ("atom", "photon"):
        reduced = rho.partial_trace([label])
        assert trace_distance(reduced, DensityMatrix.maximally_mixed(reduced.space)) < 1e-12
    assert fidelity(rho, EMISSION_STATE.to_density_matrix()) == pytest.approx(1.0, abs=1e-15)
    assert abs(concurrence(rho) - 1) < 1e-9


# --- storage -----------------------------------------------------------------


def test_ideal_storage_gives_atom_memory_state():
    out = store_photon_in_memory(emit_entangled_pair())
    assert out.success
    assert fidelity(out.state, ATOM_MEMORY_STATE.to_density_matrix()) == pytest.approx(1.0, abs=1e-15)


def test_fully_dephased_memory_half_fidelity():
    out = store_photon_in_memory(emit_entangled_pair(), coherence=0.0)
    assert fidelity(out.state, ATOM_MEMORY_STATE.to_density_matrix()) == pytest.approx(0.5, abs=1e-15)
    assert concurrence(out.state) < 1e-9


def test_lost_photon_flagged():
    out = store_photon_in_memory(emit_entangled_pair(), storage_efficiency=0.0)
    assert not out.success and out.state is None
    result = run_full_protocol(ProtocolNoise(storage_efficiency=0.0), 0.0)
    assert result.two_photon_state is None and result.success_probability == 0.0


# --- full protocol -----------------------------------------------------------


def test_ideal_pipeline():
    r = run_full_protocol(ProtocolNoise(), 0.0)
    assert abs(r.bell_fidelity - 1) < 1e-12
    assert r.success_probability == 1.0
    assert trace_distance(r.two_photon_state, BELL_STATE.to_density_matrix()) < 1e-12


def test_calibrated_pipeline():
    r = run_full_protocol(CALIBRATED, 2e-6)
    assert r.bell_fidelity == pytest.approx(0.95, abs=0.01)
    assert r.bell_fidelity == pytest.approx(0.950134, abs=1e-6)


def test_success_probability_is_product():
    r = run_full_protocol(ProtocolNoise(emission_efficiency=0.5, storage_efficiency=0.4), 0.0)
    assert r.success_probability == pytest.approx(0.5**2 * 0.4)


@given(st.floats(1e-6, 1e-2), st.floats(1e-3, 20.0))
def test_fidelity_decays_with_delay(tau, ratio):
    # beyond ~35 time constants exp(-d/tau) vanishes against 1 in double precision
    noise = ProtocolNoise(dephasing_time=tau)
    delay = ratio * tau
    assert run_full_protocol(noise, 2 * delay).bell_fidelity < run_full_protocol(noise, delay).bell_fidelity


@given(st.floats(1e-6, 1e-2), st.floats(0.0, 1e-3), st.floats(0.0, 1.0))
def test_pipeline_below_each_stage(tau, delay, eps):
    both = run_full_protocol(ProtocolNoise(tau, residual_error=eps), delay).bell_fidelity
    dephasing_only = run_full_protocol(ProtocolNoise(tau), delay).bell_fidelity
    residual_only = run_full_protocol(ProtocolNoise(residual_error=eps), delay).bell_fidelity
    assert both <= min(dephasing_only, residual_only) + 1e-12


@given(st.floats(1e-6, 1e-2), st.floats(0.0, 1e-3), st.floats(0.0, 1.0))
def test_matches_analytic(tau, delay, eps):
    noise = ProtocolNoise(tau, residual_error=eps)
    assert run_full_protocol(noise, delay).bell_fidelity == pytest.approx(analytic_bell_fidelity(noise, delay), abs=1e-12)


def test_noise_validation():
    with pytest.raises(ValueError):
        ProtocolNoise(dephasing_time=0.0)
    with pytest.raises(ValueError):
        ProtocolNoise(residual_error=1.5)
    with pytest.raises(ValueError):
        run_full_protocol(ProtocolNoise(), -1.0)


# --- decay scan --------------------------------------------------------------


def test_scan_follows_dephasing_curve():
    T = 1e-4
    noise = ProtocolNoise(dephasing_time=T)
    scan = fidelity_decay_scan(noise, [0.0, T, 2 * T])
    expected = [0.5 * (1 + math.exp(-d / T)) for d in (0.0, T, 2 * T)]
    np.testing.assert_allclose(scan.fidelities, expected, atol=1e-6)
    assert scan.fidelities[0] == run_full_protocol(noise, 0.0).bell_fidelity


def test_scan_extracts_decay_constant():
    scan = fidelity_decay_scan(CALIBRATED, np.arange(0, 501, 50) * 1e-6)
    assert scan.decay_constant == pytest.approx(1e-4, rel=0.05)


def test_scan_without_decay():
    scan = fidelity_decay_scan(ProtocolNoise(), [0.0, 1e-4, 2e-4])
    assert math.isnan(scan.decay_constant)


# --- waveplates and measurement ----------------------------------------------


@given(angles, angles)
def test_waveplates_unitary(q, h):
    for U in (quarter_wave_plate(q), half_wave_plate(h), analyzer_unitary(MeasurementSetting(q, h))):
        assert np.max(np.abs(U.conj().T @ U - np.eye(2))) < 1e-12


def test_half_wave_plate_at_45_swaps():
    np.testing.assert_allclose(half_wave_plate(math.pi / 4), [[0, 1], [1, 0]], atol=1e-15)


SINGLET = BELL_STATE.to_density_matrix()


@pytest.mark.parametrize("setting", [LINEAR_HV, LINEAR_DA, CIRCULAR])
def test_singlet_anticorrelated(setting):
    res = measure_polarization(SINGLET, setting, setting, 1000, seed=0)
    np.testing.assert_allclose(np.diag(res.probabilities), 0.0, atol=1e-12)
    np.testing.assert_allclose([res.probabilities[0, 1], res.probabilities[1, 0]], 0.5, atol=1e-12)


def test_circular_setting_resolves_l_and_r():
    # L exits the H port and R the V port
    np.testing.assert_allclose(np.abs(analyzer_unitary(CIRCULAR)) ** 2, np.eye(2), atol=1e-12)


def test_product_ll_single_outcome():
    ll = QuantumState(PHOTON_PAIR, np.array([1, 0, 0, 0])).to_density_matrix()
    res = measure_polarization(ll, CIRCULAR, CIRCULAR, 500, seed=1)
    assert np.max(res.probabilities) == pytest.approx(1.0, abs=1e-12)
    assert res.counts.max() == 500


def test_singlet_any_common_basis():
    rng = np.random.default_rng(0)
    for seed in range(50):
        q, h = rng.uniform(0, 2 * math.pi, size=2)
        setting = MeasurementSetting(q, h)
        res = measure_polarization(SINGLET, setting, setting, 100, seed=seed)
        assert res.probabilities[0, 1] + res.probabilities[1, 0] == pytest.approx(1.0, abs=1e-9)


@given(angles, angles, angles, angles, st.integers(1, 10_000))
def test_probabilities_and_counts_normalised(q1, h1, q2, h2, shots):
    rho = run_full_protocol(CALIBRATED, 5e-5).two_photon_state
    res = measure_polarization(rho, MeasurementSetting(q1, h1), MeasurementSetting(q2, h2), shots, seed=3)
    assert res.probabilities.sum() == 1.0 or abs(res.probabilities.sum() - 1.0) < 1e-15
    assert res.counts.sum() == shots


def test_measurement_reproducible():
    a = measure_polarization(SINGLET, LINEAR_DA, LINEAR_HV, 1000, seed=42)
    b = measure_polarization(SINGLET, LINEAR_DA, LINEAR_HV, 1000, seed=42)
    np.testing.assert_array_equal(a.counts, b.counts)


def test_measurement_validation():
    with pytest.raises(ValueError):
        measure_polarization(SINGLET, LINEAR_HV, LINEAR_HV, 0, seed=0)
    with pytest.raises(ValueError):
        MeasurementSetting(math.inf, 0.0)


def test_bell_fidelity_of_mixed_state():
    assert bell_fidelity(DensityMatrix.maximally_mixed(PHOTON_PAIR)) == pytest.approx(0.25)
