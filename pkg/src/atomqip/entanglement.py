"""
Remote atom-BEC entanglement and two-photon Bell-state readout.

Photon polarization qubits use the circular basis ``(L, R)``. The atom Zeeman
qubit is ``(|1,1>, |1,-1>)`` and the memory qubit ``(|2,-1>, |2,1>)``.
Storage maps ``L -> |2,-1>`` and ``R -> |2,1>``; memory readout reverses it.
The second emission maps the atom ``|1,1> -> R`` and ``|1,-1> -> L``.

Waveplates act on Jones vectors in the linear ``(H, V)`` basis with fast
axis at angle ``theta`` from horizontal, and ``|L> = (|H> + i|V>)/sqrt 2``.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np
from scipy import optimize

from .core import DensityMatrix, HilbertSpace, QuantumState, apply_kraus, fidelity
from .eit import dephasing_kraus

L, R = 0, 1
ATOM_PHOTON = HilbertSpace((("atom", 2), ("photon", 2)))
ATOM_MEMORY = HilbertSpace((("atom", 2), ("memory", 2)))
PHOTON_PAIR = HilbertSpace((("photon_a", 2), ("photon_b", 2)))

S2 = 1.0 / math.sqrt(2.0)
EMISSION_STATE = QuantumState(ATOM_PHOTON, np.array([1, 0, 0, -1]) * S2)
ATOM_MEMORY_STATE = QuantumState(ATOM_MEMORY, np.array([1, 0, 0, -1]) * S2)
# (|R>|L> - |L>|R>)/sqrt 2, first factor from the atom, second from the memory
BELL_STATE = QuantumState(PHOTON_PAIR, np.array([0, -1, 1, 0]) * S2)

_ATOM_TO_PHOTON = np.array([[0, 1], [1, 0]], dtype=complex)
# columns are |L>, |R> in (H, V)
CIRCULAR_TO_LINEAR = np.array([[1, 1], [1j, -1j]]) * S2


@dataclass(frozen=True)
class ProtocolNoise:
    """Stage imperfections; ``residual_error`` is a depolarizing weight on the photon pair."""

    dephasing_time: float = math.inf
    emission_efficiency: float = 1.0
    storage_efficiency: float = 1.0
    residual_error: float = 0.0

    def __post_init__(self):
        if self.dephasing_time <= 0:
            raise ValueError("dephasing_time must be positive")
        for name in ("emission_efficiency", "storage_efficiency", "residual_error"):
            value = getattr(self, name)
            if not 0.0 <= value <= 1.0:
                raise ValueError(f"{name} must lie in [0, 1], got {value}")

    def coherence(self, delay: float) -> float:
        return math.exp(-delay / self.dephasing_time)


@dataclass(frozen=True)
class MeasurementSetting:
    qwp_angle: float = 0.0
    hwp_angle: float = 0.0

    def __post_init__(self):
        if not (math.isfinite(self.qwp_angle) and math.isfinite(self.hwp_angle)):
            raise ValueError("waveplate angles must be finite")


LINEAR_HV = MeasurementSetting(0.0, 0.0)
LINEAR_DA = MeasurementSetting(0.0, math.pi / 8)
CIRCULAR = MeasurementSetting(math.pi / 4, 0.0)


def waveplate(retardance: float, angle: float) -> np.ndarray:
    c, s = math.cos(angle), math.sin(angle)
    rot = np.array([[c, -s], [s, c]])
    return rot @ np.diag([1.0, np.exp(1j * retardance)]) @ rot.T


def quarter_wave_plate(angle: float) -> np.ndarray:
    return waveplate(math.pi / 2, angle)


def half_wave_plate(angle: float) -> np.ndarray:
    return waveplate(math.pi, angle)


def analyzer_unitary(setting: MeasurementSetting) -> np.ndarray:
    """Map from the ``(L, R)`` qubit to the PBS ``(H, V)`` ports: QWP first, then HWP."""
    return half_wave_plate(setting.hwp_angle) @ quarter_wave_plate(setting.qwp_angle) @ CIRCULAR_TO_LINEAR


def emit_entangled_pair() -> DensityMatrix:
    return EMISSION_STATE.to_density_matrix()


class StorageOutcome(NamedTuple):
    state: DensityMatrix | None
    success: bool


def store_photon_in_memory(state: DensityMatrix, storage_efficiency: float = 1.0, coherence: float = 1.0) -> StorageOutcome:
    """Absorb the photon into the memory Zeeman qubit and pass it through the
    memory's dephasing channel with coherence factor ``coherence``.

    A lost photon (``storage_efficiency == 0``) is a heralded failure.
    """
    if storage_efficiency <= 0:
        return StorageOutcome(None, False)
    relabeled = DensityMatrix(ATOM_MEMORY, state.matrix)
    return StorageOutcome(apply_kraus(relabeled, dephasing_kraus(coherence), "memory"), True)


def read_out(state: DensityMatrix) -> DensityMatrix:
    """Memory -> photon b (identity relabel), atom -> photon a via the second emission."""
    U = np.kron(_ATOM_TO_PHOTON, np.eye(2))
    return DensityMatrix(PHOTON_PAIR, U @ state.matrix @ U.conj().T)


def depolarize(state: DensityMatrix, weight: float) -> DensityMatrix:
    d = state.matrix.shape[0]
    return DensityMatrix(state.space, (1 - weight) * state.matrix + weight * np.eye(d) / d)


class ProtocolResult(NamedTuple):
    two_photon_state: DensityMatrix | None
    bell_fidelity: float
    success_probability: float


def bell_fidelity(state: DensityMatrix) -> float:
    return fidelity(BELL_STATE.to_density_matrix(), state)


def run_full_protocol(noise: ProtocolNoise, readout_delay: float) -> ProtocolResult:
    """Emit, store, wait ``readout_delay``, retrieve and emit the second photon."""
    if readout_delay < 0:
        raise ValueError("readout_delay must be >= 0")
    success = noise.emission_efficiency**2 * noise.storage_efficiency
    stored = store_photon_in_memory(emit_entangled_pair(), noise.storage_efficiency, noise.coherence(readout_delay))
    if not stored.success:
        return ProtocolResult(None, 0.0, 0.0)
    pair = depolarize(read_out(stored.state), noise.residual_error)
    return ProtocolResult(pair, bell_fidelity(pair), success)


def analytic_bell_fidelity(noise: ProtocolNoise, readout_delay: float) -> float:
    eps = noise.residual_error
    return (1 - eps) * 0.5 * (1 + noise.coherence(readout_delay)) + 0.25 * eps


def concurrence(state: DensityMatrix) -> float:
    """Wootters concurrence of a two-qubit density matrix."""
    rho = state.matrix
    yy = np.kron([[0, -1j], [1j, 0]], [[0, -1j], [1j, 0]])
    tilde = yy @ rho.conj() @ yy
    ev = np.sqrt(np.abs(np.linalg.eigvals(rho @ tilde)))
    ev = np.sort(ev)[::-1]
    return float(max(0.0, ev[0] - ev[1] - ev[2] - ev[3]))


class MeasurementResult(NamedTuple):
    probabilities: np.ndarray  # [outcome_a, outcome_b], 0 = H port, 1 = V port
    counts: np.ndarray


def measure_polarization(
    state: DensityMatrix,
    setting_a: MeasurementSetting,
    setting_b: MeasurementSetting,
    shots: int,
    seed: int | np.random.SeedSequence,
) -> MeasurementResult:
    if shots < 1:
        raise ValueError("shots must be >= 1")
    U = np.kron(analyzer_unitary(setting_a), analyzer_unitary(setting_b))
    probs = np.clip(np.real(np.diag(U @ state.matrix @ U.conj().T)), 0.0, None)
    probs = probs / probs.sum()
    counts = np.random.default_rng(seed).multinomial(shots, probs)
    return MeasurementResult(probs.reshape(2, 2), counts.reshape(2, 2))


class DecayScan(NamedTuple):
    delays: np.ndarray
    fidelities: np.ndarray
    decay_constant: float


def fidelity_decay_scan(noise: ProtocolNoise, delays) -> DecayScan:
    """Bell fidelity per delay and the fitted time constant of ``F = C + B exp(-d/tau)``."""
    delays = np.asarray(delays, dtype=float)
    if np.any(delays < 0):
        raise ValueError("delays must be non-negative")
    fids = np.array([run_full_protocol(noise, d).bell_fidelity for d in delays])
    tau = math.nan
    if delays.size >= 3 and np.ptp(fids) > 0:
        span = float(delays.max() - delays.min())
        guess = (fids.min(), fids.max() - fids.min(), span / 2 or 1.0)
        with warnings.catch_warnings():
            # three delays determine the fit exactly; the covariance is not used
            warnings.simplefilter("ignore", optimize.OptimizeWarning)
            (c, b, tau), _ = optimize.curve_fit(
                lambda d, c, b, t: c + b * np.exp(-d / t), delays, fids, p0=guess, maxfev=20000
            )
        tau = float(tau)
    return DecayScan(delays, fids, tau)
