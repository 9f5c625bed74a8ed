import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from atomqip.core import QuantumState, trace_distance
from atomqip.ion_gates import (
    PHONON,
    U_CNOT,
    U_PHASE,
    E,
    G,
    IonChainModel,
    Sideband,
    SidebandPulse,
    Transition,
    apply_pulse,
    cirac_zoller_gate,
    cirac_zoller_pulses,
    cnot_gate,
    cnot_pulses,
    gate_fidelity_thermal,
    parity_contrast,
    phase_coherence_scan,
    process_fidelity,
    sideband_hamiltonian,
    truth_table,
    with_rabi,
)
from atomqip.core import align_global_phase

MODEL = IonChainModel(phonon_cutoff=4)


def amp(state, model, phonons=0, **levels):
    return state.amplitudes[model.space.index(**{f"ion{k}": G for k in range(model.n_ions)} | levels, **{PHONON: phonons})]


# --- construction ------------------------------------------------------------


def test_cutoff_below_two_rejected():
    with pytest.raises(ValueError):
        IonChainModel(phonon_cutoff=1)


def test_pulse_area_positive():
    with pytest.raises(ValueError):
        SidebandPulse(0, area=0.0)


# --- sideband Hamiltonian ----------------------------------------------------


def test_red_sideband_annihilates_ground_vacuum():
    H = sideband_hamiltonian(MODEL, SidebandPulse(0, Transition.GE, Sideband.RED)).static
    col = MODEL.space.index(ion0=G, ion1=G, phonon=0)
    np.testing.assert_array_equal(H[:, col], 0)


def test_blue_sideband_nominal_rabi():
    H = sideband_hamiltonian(MODEL, SidebandPulse(0, Transition.GE, Sideband.BLUE)).static
    i = MODEL.space.index(ion0=G, ion1=G, phonon=0)
    j = MODEL.space.index(ion0=E, ion1=G, phonon=1)
    assert abs(abs(H[j, i]) - 0.5 * MODEL.rabi) < 1e-9 * MODEL.rabi


def test_red_sideband_sqrt_n_scaling():
    H = sideband_hamiltonian(MODEL, SidebandPulse(0, Transition.GE, Sideband.RED)).static
    for n in range(1, MODEL.phonon_cutoff + 1):
        i = MODEL.space.index(ion0=G, ion1=G, phonon=n)
        j = MODEL.space.index(ion0=E, ion1=G, phonon=n - 1)
        assert abs(abs(H[j, i]) - 0.5 * MODEL.rabi * math.sqrt(n)) < 1e-6


def test_carrier_uniform_over_phonons():
    H = sideband_hamiltonian(MODEL, SidebandPulse(1, Transition.GE, Sideband.CARRIER)).static
    values = [H[MODEL.space.index(ion0=G, ion1=E, phonon=n), MODEL.space.index(ion0=G, ion1=G, phonon=n)] for n in range(5)]
    np.testing.assert_allclose(values, values[0], atol=0)


# --- single pulses -----------------------------------------------------------


def test_red_pi_pulse_gives_minus_i():
    out = apply_pulse(MODEL.basis(0, ion0=E), MODEL, SidebandPulse(0, Transition.GE, Sideband.RED, math.pi))
    assert abs(amp(out, MODEL, 1, ion0=G) - (-1j)) < 1e-9


def test_red_two_pi_on_aux_gives_minus_one():
    out = apply_pulse(MODEL.basis(1), MODEL, SidebandPulse(1, Transition.GA, Sideband.RED, 2 * math.pi))
    assert abs(amp(out, MODEL, 1) - (-1)) < 1e-9


@pytest.mark.parametrize("area", [math.pi / 3, math.pi, 2 * math.pi, 5.1])
def test_red_sideband_leaves_ground_vacuum(area):
    out = apply_pulse(MODEL.basis(0), MODEL, SidebandPulse(0, Transition.GE, Sideband.RED, area))
    np.testing.assert_allclose(out.amplitudes, MODEL.basis(0).amplitudes, atol=1e-15)


def test_apply_pulse_fock_guard():
    tight = IonChainModel(phonon_cutoff=2)
    with pytest.raises(Exception, match="cutoff"):
        apply_pulse(tight.basis(2, ion0=G), tight, SidebandPulse(0, Transition.GE, Sideband.BLUE, math.pi / 2))


# --- gates -------------------------------------------------------------------


def test_cirac_zoller_block_is_phase_gate():
    gate = align_global_phase(cirac_zoller_gate(MODEL), U_PHASE)
    assert np.max(np.abs(gate - U_PHASE)) < 1e-6


def test_cirac_zoller_state_table():
    gate = cirac_zoller_gate(MODEL)
    assert abs(gate[0, 0] - 1) < 1e-9
    assert abs(gate[3, 3] + 1) < 1e-9


def test_cnot_matches_ideal():
    gate = align_global_phase(cnot_gate(MODEL), U_CNOT)
    assert np.max(np.abs(gate - U_CNOT)) < 1e-6


def test_cnot_truth_table():
    table = truth_table(cnot_gate(MODEL))
    assert np.all(table[U_CNOT.real.astype(bool)] > 0.999)
    assert np.all(table[~U_CNOT.real.astype(bool)] < 1e-9)
    # |e g> -> |e e>
    assert table[3, 2] > 0.999


@pytest.mark.parametrize("sign", [1, -1])
def test_phase_convention_invariance(sign):
    model = IonChainModel(phonon_cutoff=4, phase_sign=sign)
    ref = cirac_zoller_gate(IonChainModel(phonon_cutoff=4, phase_sign=1))
    assert np.max(np.abs(cirac_zoller_gate(model) - ref)) < 1e-6
    assert process_fidelity(cnot_gate(model), U_CNOT) > 1 - 1e-12


@given(st.floats(1e3, 1e7))
def test_rabi_scaling_leaves_gate_unchanged(rabi):
    model = with_rabi(MODEL, 2 * math.pi * rabi)
    doubled = with_rabi(model, 2 * model.rabi)
    assert cirac_zoller_pulses(0, 1)[0].duration(doubled) == pytest.approx(0.5 * cirac_zoller_pulses(0, 1)[0].duration(model))
    assert np.max(np.abs(cirac_zoller_gate(doubled) - cirac_zoller_gate(model))) < 1e-6


@pytest.mark.parametrize("qm,qn", [(G, G), (G, E), (E, G), (E, E)])
def test_phonon_returns_to_vacuum(qm, qn):
    state = MODEL.basis(0, ion0=qm, ion1=qn)
    for p in cirac_zoller_pulses(0, 1):
        state = apply_pulse(state, MODEL, p)
    assert state.to_density_matrix().populations(PHONON)[0] > 1 - 1e-9


def test_spectator_ion_untouched():
    model = IonChainModel(n_ions=3, phonon_cutoff=3)
    space = model.space
    amps = np.zeros(space.dim, dtype=complex)
    # control in superposition and the spectator ion2 in (|g> + i|e>)/sqrt 2
    for qm, cm in ((G, 1), (E, 1)):
        for q3, c3 in ((G, 1), (E, 1j)):
            amps[space.index(ion0=qm, ion1=G, ion2=q3, phonon=0)] = 0.5 * cm * c3
    state = QuantumState(space, amps)
    before = state.to_density_matrix().partial_trace(["ion2"])
    for p in cnot_pulses(model, 0, 1):
        state = apply_pulse(state, model, p)
    after = state.to_density_matrix().partial_trace(["ion2"])
    assert trace_distance(before, after) < 1e-9


def test_gate_on_other_ion_pair():
    model = IonChainModel(n_ions=3, phonon_cutoff=3)
    gate = align_global_phase(cirac_zoller_gate(model, 2, 0), U_PHASE)
    assert np.max(np.abs(gate - U_PHASE)) < 1e-6


def test_same_ion_rejected():
    with pytest.raises(ValueError):
        cirac_zoller_pulses(1, 1)


# --- parity scan -------------------------------------------------------------


def test_parity_contrast_entangled():
    phases = np.linspace(0, 2 * np.pi, 41)
    assert parity_contrast(phase_coherence_scan(MODEL, phases)) > 0.999


def test_parity_contrast_separable_distinguishable():
    phases = np.linspace(0, 2 * np.pi, 41)
    entangled = phase_coherence_scan(MODEL, phases)
    separable = phase_coherence_scan(MODEL, phases, entangle=False)
    assert parity_contrast(separable) < 0.5 * parity_contrast(entangled)


def test_parity_single_point_consistent():
    full = phase_coherence_scan(MODEL, [0.0, 1.0, 2.0])
    single = phase_coherence_scan(MODEL, [0.0])
    assert single[0] == pytest.approx(full[0], abs=1e-12)


# --- thermal phonons ---------------------------------------------------------

THERMAL = IonChainModel(phonon_cutoff=5)


def test_thermal_ideal_case():
    assert gate_fidelity_thermal(THERMAL, 0.0) > 1 - 1e-6


def test_thermal_degradation():
    f0, f1 = gate_fidelity_thermal(THERMAL, 0.0), gate_fidelity_thermal(THERMAL, 0.1)
    assert f0 - f1 > 0.01


def test_thermal_frozen_values():
    # frozen from the exact Kraus-block computation: linear in p1
    assert gate_fidelity_thermal(THERMAL, 0.1) == pytest.approx(0.9233299472121265, abs=1e-9)
    assert gate_fidelity_thermal(THERMAL, 0.2) == pytest.approx(0.8466598944242536, abs=1e-9)


def test_thermal_cutoff_converged():
    assert gate_fidelity_thermal(IonChainModel(phonon_cutoff=8), 0.1) == pytest.approx(gate_fidelity_thermal(THERMAL, 0.1), abs=1e-12)


@given(st.lists(st.floats(0.0, 0.9), min_size=2, max_size=5, unique=True))
def test_thermal_monotone(p1s):
    p1s = sorted(p1s)
    values = [gate_fidelity_thermal(THERMAL, p) for p in p1s]
    assert all(b <= a + 1e-12 for a, b in zip(values, values[1:]))


def test_thermal_needs_cutoff_above_three():
    with pytest.raises(ValueError, match="exceed 3"):
        gate_fidelity_thermal(IonChainModel(phonon_cutoff=3), 0.1)
