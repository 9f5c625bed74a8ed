"""
Cirac-Zoller gate on a linear ion chain.

Each ion has three levels ``g`` (0), ``e`` (1) and the auxiliary ``a`` (2);
the centre-of-mass mode is a Fock ladder truncated at ``phonon_cutoff``
(the highest retained phonon number). Sideband pulses act only on their
resonant transition:

    H = s * (rabi/2) * (exp(i phase) |x><g| (x) A + h.c.)

with ``A = a`` (red), ``1`` (carrier) or ``a^+`` (blue). The sign ``s``
(``phase_sign``) selects the convention; ``s = +1`` makes a red-sideband
pi pulse take ``|e, 0>`` to ``-i |g, 1>``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, replace
from enum import Enum

import numpy as np

from .core import (
    DensityMatrix,
    HamiltonianGenerator,
    HilbertSpace,
    PulseSchedule,
    PulseSegment,
    QuantumState,
    annihilation,
    check_fock_truncation,
    operator_product,
    propagator,
    transition,
)

G, E, A = 0, 1, 2
PHONON = "phonon"

U_PHASE = np.diag([1.0, 1.0, 1.0, -1.0]).astype(complex)
U_CNOT = np.array([[1, 0, 0, 0], [0, 1, 0, 0], [0, 0, 0, 1], [0, 0, 1, 0]], dtype=complex)


class Sideband(str, Enum):
    RED = "red"
    CARRIER = "carrier"
    BLUE = "blue"

    @property
    def delta_n(self) -> int:
        return {"red": -1, "carrier": 0, "blue": 1}[self.value]


class Transition(str, Enum):
    GE = "g-e"
    GA = "g-a"

    @property
    def upper(self) -> int:
        return E if self is Transition.GE else A


@dataclass(frozen=True)
class IonChainModel:
    n_ions: int = 2
    omega_cm: float = 2 * math.pi * 1.0e6  # rad/s, bookkeeping only (resolved sidebands)
    phonon_cutoff: int = 4
    rabi: float = 2 * math.pi * 50.0e3  # rad/s, default pulse Rabi frequency
    phase_sign: int = 1

    def __post_init__(self):
        if self.n_ions < 1:
            raise ValueError("need at least one ion")
        if self.phonon_cutoff < 2:
            raise ValueError(f"phonon_cutoff must be >= 2, got {self.phonon_cutoff}")
        if self.phase_sign not in (1, -1):
            raise ValueError("phase_sign must be +1 or -1")
        if not self.rabi > 0:
            raise ValueError("rabi must be positive")

    @property
    def space(self) -> HilbertSpace:
        ions = tuple((f"ion{k}", 3) for k in range(self.n_ions))
        return HilbertSpace(ions + ((PHONON, self.phonon_cutoff + 1),))

    def ion(self, k: int) -> str:
        if not 0 <= k < self.n_ions:
            raise IndexError(f"ion {k} outside chain of {self.n_ions}")
        return f"ion{k}"

    def basis(self, phonons: int = 0, **levels: int) -> QuantumState:
        """Product state; ions not named sit in ``g``. Keys are ``ion0``, ``ion1``..."""
        full = {f"ion{k}": G for k in range(self.n_ions)}
        full.update(levels)
        full[PHONON] = phonons
        return QuantumState.basis(self.space, **full)


@dataclass(frozen=True)
class SidebandPulse:
    target_ion: int
    transition: Transition = Transition.GE
    sideband: Sideband = Sideband.RED
    area: float = math.pi
    phase: float = 0.0
    rabi: float | None = None

    def __post_init__(self):
        object.__setattr__(self, "transition", Transition(self.transition))
        object.__setattr__(self, "sideband", Sideband(self.sideband))
        if not self.area > 0:
            raise ValueError(f"pulse area must be positive, got {self.area}")

    def rabi_for(self, model: IonChainModel) -> float:
        return model.rabi if self.rabi is None else self.rabi

    def duration(self, model: IonChainModel) -> float:
        return self.area / self.rabi_for(model)


def sideband_hamiltonian(model: IonChainModel, pulse: SidebandPulse) -> HamiltonianGenerator:
    space = model.space
    label = model.ion(pulse.target_ion)
    if pulse.sideband is not Sideband.CARRIER and model.phonon_cutoff < 2:
        raise ValueError("sideband pulses need phonon_cutoff >= 2")
    dim = model.phonon_cutoff + 1
    a = annihilation(dim)
    motional = {Sideband.RED: a, Sideband.CARRIER: np.eye(dim), Sideband.BLUE: a.conj().T}[pulse.sideband]
    raising = np.exp(1j * pulse.phase) * transition(3, pulse.transition.upper, G)
    coupling = operator_product(space, **{label: raising, PHONON: motional})
    H = 0.5 * model.phase_sign * pulse.rabi_for(model) * (coupling + coupling.conj().T)
    return HamiltonianGenerator.constant(space, H)


def pulse_propagator(model: IonChainModel, pulse: SidebandPulse) -> np.ndarray:
    gen = sideband_hamiltonian(model, pulse)
    t = pulse.duration(model)
    return propagator(gen, 0.0, t, t)


def apply_pulse(state: QuantumState, model: IonChainModel, pulse: SidebandPulse) -> QuantumState:
    if state.space.dims != model.space.dims:
        raise ValueError("state does not live on the model's space")
    out = QuantumState(state.space, pulse_propagator(model, pulse) @ state.amplitudes)
    check_fock_truncation(out, PHONON)
    return out


def schedule(model: IonChainModel, pulses: list[SidebandPulse]) -> PulseSchedule:
    sched = PulseSchedule(model.space)
    for p in pulses:
        seg = PulseSegment(sideband_hamiltonian(model, p), p.duration(model), label=f"{p.sideband.value}:{p.transition.value}@{p.target_ion}")
        sched = sched.then(seg)
    return sched


def cirac_zoller_pulses(m: int, n: int) -> list[SidebandPulse]:
    if m == n:
        raise ValueError("control and target must be different ions")
    return [
        SidebandPulse(m, Transition.GE, Sideband.RED, math.pi),
        SidebandPulse(n, Transition.GA, Sideband.RED, 2 * math.pi),
        SidebandPulse(m, Transition.GE, Sideband.RED, math.pi),
    ]


def cnot_pulses(model: IonChainModel, m: int, n: int) -> list[SidebandPulse]:
    # carrier R_y(-pi/2) and R_y(+pi/2) on the target around the phase gate
    s = model.phase_sign
    before = SidebandPulse(n, Transition.GE, Sideband.CARRIER, math.pi / 2, phase=-s * math.pi / 2)
    after = SidebandPulse(n, Transition.GE, Sideband.CARRIER, math.pi / 2, phase=s * math.pi / 2)
    return [before, *cirac_zoller_pulses(m, n), after]


def _qubit_inputs(model: IonChainModel, m: int, n: int, phonons: int = 0) -> list[int]:
    space = model.space
    out = []
    for qm in (G, E):
        for qn in (G, E):
            levels = {f"ion{k}": G for k in range(model.n_ions)}
            levels[model.ion(m)] = qm
            levels[model.ion(n)] = qn
            out.append(space.index(**levels, **{PHONON: phonons}))
    return out


def run_sequence(model: IonChainModel, pulses: list[SidebandPulse], inputs: list[int]) -> np.ndarray:
    """Full-space propagator of a pulse list, with the Fock guard after every pulse."""
    U = np.eye(model.space.dim, dtype=complex)
    for p in pulses:
        U = pulse_propagator(model, p) @ U
        for col in inputs:
            check_fock_truncation(QuantumState(model.space, U[:, col]), PHONON)
    return U


def _block(model: IonChainModel, U: np.ndarray, m: int, n: int, out_phonons: int = 0, in_phonons: int = 0) -> np.ndarray:
    rows = _qubit_inputs(model, m, n, out_phonons)
    cols = _qubit_inputs(model, m, n, in_phonons)
    return U[np.ix_(rows, cols)]


def cirac_zoller_gate(model: IonChainModel, m: int = 0, n: int = 1) -> np.ndarray:
    """4x4 block of the three-pulse sequence on ``{g,e}_m (x) {g,e}_n (x) |0>``.

    Basis order ``|g g>, |g e>, |e g>, |e e>`` with ion ``m`` first.
    """
    U = run_sequence(model, cirac_zoller_pulses(m, n), _qubit_inputs(model, m, n))
    return _block(model, U, m, n)


def cnot_gate(model: IonChainModel, m: int = 0, n: int = 1) -> np.ndarray:
    U = run_sequence(model, cnot_pulses(model, m, n), _qubit_inputs(model, m, n))
    return _block(model, U, m, n)


def truth_table(gate: np.ndarray) -> np.ndarray:
    return np.abs(gate) ** 2


def process_fidelity(gate: np.ndarray, ideal: np.ndarray) -> float:
    d = ideal.shape[0]
    return float(abs(np.trace(ideal.conj().T @ gate)) ** 2 / d**2)


def _parity(rho: DensityMatrix, labels: tuple[str, str]) -> float:
    reduced = rho.partial_trace(labels).matrix
    sign = {G: 1.0, E: -1.0, A: 0.0}
    total = 0.0
    for i in range(3):
        for j in range(3):
            idx = 3 * i + j
            total += sign[i] * sign[j] * reduced[idx, idx].real
    return total


def phase_coherence_scan(
    model: IonChainModel,
    analysis_phases: list[float],
    m: int = 0,
    n: int = 1,
    entangle: bool = True,
) -> list[tuple[float, float]]:
    """Parity of both ions after analysis pi/2 pulses with swept phase.

    A carrier pi/2 pulse on ion ``m`` followed by the CNOT prepares
    ``(|gg> + |ee>)/sqrt(2)``; with ``entangle=False`` the gate is skipped.
    """
    s = model.phase_sign
    prep = SidebandPulse(m, Transition.GE, Sideband.CARRIER, math.pi / 2, phase=s * math.pi / 2)
    state = apply_pulse(model.basis(), model, prep)
    if entangle:
        for p in cnot_pulses(model, m, n):
            state = apply_pulse(state, model, p)
    labels = (model.ion(m), model.ion(n))
    scan = []
    for phase in analysis_phases:
        out = state
        for k in (m, n):
            out = apply_pulse(out, model, SidebandPulse(k, Transition.GE, Sideband.CARRIER, math.pi / 2, phase=float(phase)))
        scan.append((float(phase), _parity(out.to_density_matrix(), labels)))
    return scan


def parity_contrast(scan: list[tuple[float, float]]) -> float:
    values = [p for _, p in scan]
    return 0.5 * (max(values) - min(values))


def thermal_kraus_blocks(model: IonChainModel, m: int = 0, n: int = 1, max_initial: int = 1) -> dict[tuple[int, int], np.ndarray]:
    """Blocks ``<j_phonon| U |i_phonon>`` on the qubit subspace for i <= max_initial."""
    inputs = [c for i in range(max_initial + 1) for c in _qubit_inputs(model, m, n, i)]
    U = run_sequence(model, cirac_zoller_pulses(m, n), inputs)
    return {
        (j, i): _block(model, U, m, n, out_phonons=j, in_phonons=i)
        for i in range(max_initial + 1)
        for j in range(model.phonon_cutoff + 1)
    }


def gate_fidelity_thermal(model: IonChainModel, p1_phonon: float, m: int = 0, n: int = 1) -> float:
    """Process fidelity against ``U_PHASE`` with phonons in (1-p1)|0><0| + p1|1><1|.

    The map traces out the phonon mode and discards population left in the
    auxiliary level, so leakage counts as infidelity.
    """
    if not 0 <= p1_phonon < 1:
        raise ValueError(f"p1_phonon must lie in [0, 1), got {p1_phonon}")
    if p1_phonon > 0 and model.phonon_cutoff <= 3:
        raise ValueError("thermal runs populate n_CM = 2; phonon_cutoff must exceed 3")
    blocks = thermal_kraus_blocks(model, m, n, max_initial=1 if p1_phonon > 0 else 0)
    weights = {0: 1.0 - p1_phonon, 1: p1_phonon}
    total = 0.0
    for (j, i), B in blocks.items():
        if weights.get(i, 0.0) > 0:
            total += weights[i] * process_fidelity(B, U_PHASE)
    return total


def with_rabi(model: IonChainModel, rabi: float) -> IonChainModel:
    return replace(model, rabi=rabi)
