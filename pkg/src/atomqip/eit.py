"""
Linear optical response of a Lambda medium (EIT), slow light and a
phenomenological stored-light quantum memory.

The susceptibility follows from the first-order (weak-probe) steady state of
the Lambda Bloch equations with decay ``e -> p`` at ``gamma_e`` and ground
coherence dephasing at ``gamma_2``. It is normalized so that without control
light the resonant intensity absorption coefficient equals ``sigma * density``
with ``sigma = 3 lambda^2 / 2 pi``. Detunings follow ``H_ee = delta_p``, so
positive ``delta_p`` means the probe is red of the atomic line.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np
from scipy import optimize, signal

from .calculator import CONSTANTS, Length, resonant_cross_section
from .core import (
    QUBIT,
    CollapseOperator,
    DensityMatrix,
    PhysicsError,
    SteadyStateError,
    apply_kraus,
    average_fidelity,
    liouvillian,
    transition,
)
from .lambda_dynamics import C, E, LAMBDA_SPACE, P, LambdaParams, lambda_hamiltonian

SPEED_OF_LIGHT = CONSTANTS.c
OD_WARNING_THRESHOLD = 10.0


class LowOpticalDepthWarning(UserWarning):
    """Write/read efficiency is poor unless the optical depth is large."""


def cross_section(wavelength: float) -> float:
    """Resonant absorption cross section ``3 lambda^2 / 2 pi`` (m^2)."""
    return float(resonant_cross_section(Length(wavelength)))


@dataclass(frozen=True)
class MediumParams:
    density: float
    length: float
    wavelength: float
    lambda_params: LambdaParams

    def __post_init__(self):
        if self.density < 0 or self.length < 0 or self.wavelength <= 0:
            raise ValueError("density, length must be >= 0 and wavelength > 0")
        if self.lambda_params.gamma_e <= 0:
            raise ValueError("the probe transition needs gamma_e > 0")

    @property
    def omega(self) -> float:
        return 2.0 * math.pi * SPEED_OF_LIGHT / self.wavelength

    @property
    def absorption_coefficient(self) -> float:
        return cross_section(self.wavelength) * self.density

    def with_control(self, omega_c: complex) -> "MediumParams":
        lp = self.lambda_params
        params = LambdaParams(lp.omega_p, omega_c, lp.delta_p, lp.delta_c, lp.gamma_e, lp.gamma_2)
        return MediumParams(self.density, self.length, self.wavelength, params)

    def with_density(self, density: float) -> "MediumParams":
        return MediumParams(density, self.length, self.wavelength, self.lambda_params)


def optical_depth(medium: MediumParams) -> float:
    return medium.absorption_coefficient * medium.length


def _chi_scale(medium: MediumParams) -> float:
    # chi = scale * rho_ep per unit probe Rabi frequency; at omega_c = 0 and
    # resonance Im chi = sigma * density / k
    return medium.lambda_params.gamma_e * medium.absorption_coefficient * medium.wavelength / (2.0 * math.pi)


def _bloch_collapses(params: LambdaParams) -> list[CollapseOperator]:
    out = [CollapseOperator(LAMBDA_SPACE, transition(3, P, E), params.gamma_e)]
    if params.gamma_2 > 0:
        out.append(CollapseOperator(LAMBDA_SPACE, transition(3, C, C), 2.0 * params.gamma_2))
    return out


def susceptibility(medium: MediumParams, delta_p) -> np.ndarray | complex:
    """Weak-probe susceptibility from the Bloch-equation steady state.

    Solves ``L0 rho1 = -L1 rho0`` with ``rho0 = |p><p|`` (the steady state
    without probe) and ``L1`` the probe derivative of the Liouvillian. Vector
    input is solved as one batched linear system.
    """
    lp = medium.lambda_params
    deltas = np.atleast_1d(np.asarray(delta_p, dtype=float))
    collapses = _bloch_collapses(lp)
    base = LambdaParams(0.0, lp.omega_c, 0.0, 0.0)
    H_control = lambda_hamiltonian(base).static
    # delta_p enters as diag(0, delta_p - delta_c, delta_p) with delta_c fixed
    H_delta = np.diag([0.0, 1.0, 1.0]).astype(complex)
    H_dc = np.diag([0.0, -lp.delta_c, 0.0]).astype(complex)
    L_fixed = liouvillian(H_control + H_dc, collapses)
    L_delta = liouvillian(H_delta, [])

    H1 = lambda_hamiltonian(LambdaParams(omega_p=1.0)).static
    rho0 = np.zeros((3, 3), dtype=complex)
    rho0[P, P] = 1.0
    source = -(-1j * (H1 @ rho0 - rho0 @ H1)).reshape(-1)

    systems = L_fixed[None, :, :] + deltas[:, None, None] * L_delta[None, :, :]
    # the population rows are linearly dependent; swap one for tr(rho1) = 0
    trace_row = np.eye(3, dtype=complex).reshape(-1)
    systems[:, 0, :] = trace_row
    rhs = np.broadcast_to(source, (deltas.size, 9)).copy()
    rhs[:, 0] = 0.0
    try:
        rho1 = np.linalg.solve(systems, rhs[..., None])[..., 0]
    except np.linalg.LinAlgError:
        # undamped dark coherences (no control, no dephasing) are unsourced;
        # the minimum-norm solution sets them to zero
        rho1 = np.einsum("nij,nj->ni", np.linalg.pinv(systems), rhs)
        residual = np.abs(np.einsum("nij,nj->ni", systems, rho1) - rhs).max()
        if residual > 1e-9 * max(np.abs(rhs).max(), 1.0):
            raise SteadyStateError(f"weak-probe steady state has no solution (residual {residual:.3e})")
    if not np.all(np.isfinite(rho1)):
        raise SteadyStateError("weak-probe steady state is not finite")
    chi = _chi_scale(medium) * rho1[:, E * 3 + P]
    return chi if np.ndim(delta_p) else complex(chi[0])


def closed_form_susceptibility(medium: MediumParams, delta_p) -> np.ndarray | complex:
    """Closed-form regression oracle for :func:`susceptibility`."""
    lp = medium.lambda_params
    d = np.asarray(delta_p, dtype=float)
    d2 = d - lp.delta_c
    A = 0.5 * _chi_scale(medium)
    num = d2 - 1j * lp.gamma_2
    chi = A * num / ((d - 0.5j * lp.gamma_e) * num - abs(lp.omega_c) ** 2 / 4.0)
    return chi if np.ndim(chi) else complex(chi)


def kramers_kronig_real(im_chi: np.ndarray) -> np.ndarray:
    """Real part implied by causality from Im chi sampled on a uniform detuning grid."""
    return np.imag(signal.hilbert(np.asarray(im_chi, dtype=float)))


def transparency_window_width(medium: MediumParams) -> float:
    """Full width of the transparency hole at half the bare resonant absorption.

    Measured around two-photon resonance (``delta_p = delta_c``); requires
    ``delta_c = 0`` so the hole is centred on the line.
    """
    lp = medium.lambda_params
    if lp.omega_c == 0:
        raise ValueError("no transparency window without control light")
    if lp.delta_c != 0:
        raise ValueError("window width is defined for a resonant control field")
    half = 0.5 * _chi_scale(medium) / lp.gamma_e  # half of 2A/Gamma
    grid = np.linspace(0.0, abs(lp.omega_c) + lp.gamma_e, 4001)
    im = np.imag(susceptibility(medium, grid))
    top = int(np.argmax(im))
    if im[top] <= half or im[0] >= half:
        raise PhysicsError("transparency window not resolved: absorption never crosses half maximum")
    edge = optimize.brentq(lambda x: np.imag(susceptibility(medium, x)) - half, grid[0], grid[top], xtol=1e-14 * grid[top], rtol=1e-13)
    return 2.0 * edge


def _slope(medium: MediumParams, h: float) -> float:
    lp = medium.lambda_params
    chi = susceptibility(medium, np.array([lp.delta_c - h, lp.delta_c + h]))
    return float((chi[1].real - chi[0].real) / (2.0 * h))


def group_velocity(medium: MediumParams, richardson_tol: float = 1e-3) -> float:
    """Probe group velocity at two-photon resonance (m/s).

    ``v_g = c / (1 + (omega/2) dRe(chi)/domega)`` with ``domega = -ddelta_p``.
    The slope is a centred difference with step 1e-4 of the window width,
    refined by one Richardson step; disagreement beyond ``richardson_tol``
    signals an unresolved slope.
    """
    h = 1e-4 * transparency_window_width(medium)
    coarse, fine = _slope(medium, h), _slope(medium, 0.5 * h)
    if abs(coarse - fine) > richardson_tol * max(abs(fine), 1e-300):
        raise PhysicsError(f"finite-difference slope not converged ({coarse:.6e} vs {fine:.6e})")
    slope = (4.0 * fine - coarse) / 3.0
    group_index = 1.0 - 0.5 * medium.omega * slope
    v = SPEED_OF_LIGHT / group_index
    if not np.isfinite(v) or v <= 0 or v < np.finfo(float).tiny:
        raise PhysicsError(f"group velocity not representable (group index {group_index:.3e})")
    return float(v)


def pulse_compression(pulse_duration: float, medium: MediumParams | None = None, group_velocity_value: float | None = None) -> float:
    """Spatial length (m) of a pulse of the given duration inside the medium.

    ``medium=None`` means vacuum.
    """
    if pulse_duration < 0:
        raise ValueError("pulse_duration must be >= 0")
    if group_velocity_value is None:
        group_velocity_value = SPEED_OF_LIGHT if medium is None else group_velocity(medium)
    return group_velocity_value * pulse_duration


class PolaritonFractions(NamedTuple):
    photon_fraction: float
    magnon_fraction: float


def polariton_mixing(omega_c: complex, omega_p_effective: complex) -> PolaritonFractions:
    """Photonic and spin-wave weights of the dark-state polariton."""
    scale = max(abs(omega_c), abs(omega_p_effective))
    if scale == 0:
        raise ValueError("polariton undefined when both Rabi frequencies vanish")
    # rescale first so tiny or huge Rabi frequencies do not under/overflow when squared
    wc, wp = (abs(omega_c) / scale) ** 2, (abs(omega_p_effective) / scale) ** 2
    photon = wc / (wc + wp)
    return PolaritonFractions(photon, 1.0 - photon)


# ---------------------------------------------------------------------------
# Quantum memory
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Decoherence:
    """Phenomenological memory decay; ``ceiling`` is the write-read efficiency at t = 0."""

    efficiency_lifetime: float = math.inf
    coherence_time: float = math.inf
    ceiling: float = 1.0

    def __post_init__(self):
        if self.efficiency_lifetime <= 0 or self.coherence_time <= 0:
            raise ValueError("lifetimes must be positive")
        if not 0.0 <= self.ceiling <= 1.0:
            raise ValueError("ceiling must lie in [0, 1]")


@dataclass(frozen=True)
class MemoryMetrics:
    efficiency: float
    avg_fidelity: float
    efficiency_lifetime: float
    coherence_time: float


class MemoryResult(NamedTuple):
    qubit_out: DensityMatrix | None
    metrics: MemoryMetrics


def dephasing_kraus(coherence: float) -> list[np.ndarray]:
    """Phase-flip Kraus pair scaling the off-diagonal by ``coherence``."""
    if not 0.0 <= coherence <= 1.0:
        raise ValueError("coherence factor must lie in [0, 1]")
    return [math.sqrt(0.5 * (1 + coherence)) * np.eye(2), math.sqrt(0.5 * (1 - coherence)) * np.diag([1.0, -1.0])]


def measure_and_prepare_kraus() -> list[np.ndarray]:
    """Classical strategy: measure in the computational basis and re-prepare."""
    return [np.diag([1.0, 0.0]).astype(complex), np.diag([0.0, 1.0]).astype(complex)]


def memory_kraus(storage_time: float, decoherence: Decoherence) -> list[np.ndarray]:
    return dephasing_kraus(math.exp(-storage_time / decoherence.coherence_time))


def store_and_retrieve(
    qubit_in: DensityMatrix,
    storage_time: float,
    medium: MediumParams,
    decoherence: Decoherence = Decoherence(),
) -> MemoryResult:
    """Write, hold and read a polarization qubit.

    The control ramp-down and ramp-up map the photon to a spin wave and back;
    at the polariton level they are lossless apart from ``ceiling``. During
    storage the retrieved fraction decays as ``exp(-t/efficiency_lifetime)`` and
    the qubit coherence as ``exp(-t/coherence_time)``. The output state is
    conditioned on retrieval; it is ``None`` when nothing is retrieved.
    """
    if storage_time < 0:
        raise ValueError("storage_time must be >= 0")
    od = optical_depth(medium)
    if od < OD_WARNING_THRESHOLD:
        warnings.warn(f"optical depth {od:.3g} is below {OD_WARNING_THRESHOLD:g}", LowOpticalDepthWarning, stacklevel=2)
    efficiency = decoherence.ceiling * math.exp(-storage_time / decoherence.efficiency_lifetime)
    kraus = memory_kraus(storage_time, decoherence)
    avg = average_fidelity(lambda rho: apply_kraus(rho, kraus), method="exact").mean
    metrics = MemoryMetrics(efficiency, avg, decoherence.efficiency_lifetime, decoherence.coherence_time)
    out = apply_kraus(qubit_in, kraus) if efficiency > 0 else None
    return MemoryResult(out, metrics)


def analytic_dephasing_fidelity(storage_time: float, coherence_time: float) -> float:
    """Average fidelity ``2/3 + exp(-t/T)/3`` of the pure dephasing memory."""
    return 2.0 / 3.0 + math.exp(-storage_time / coherence_time) / 3.0


def extract_lifetimes(medium: MediumParams, decoherence: Decoherence, times: tuple[float, float]) -> tuple[float, float]:
    """Recover (efficiency lifetime, coherence time) from two simulated storage runs.

    Uses the retrieved efficiency and the surviving coherence of a ``|+>``
    input; no knowledge of the input lifetimes is used.
    """
    t1, t2 = times
    if not t2 > t1:
        raise ValueError("need two increasing storage times")
    plus = DensityMatrix(QUBIT, 0.5 * np.ones((2, 2), dtype=complex))
    runs = [store_and_retrieve(plus, t, medium, decoherence) for t in (t1, t2)]
    eta = [r.metrics.efficiency for r in runs]
    coh = [2.0 * abs(r.qubit_out.matrix[0, 1]) for r in runs]
    tau = (t2 - t1) / math.log(eta[0] / eta[1]) if eta[0] != eta[1] else math.inf
    t_coh = (t2 - t1) / math.log(coh[0] / coh[1]) if coh[0] != coh[1] else math.inf
    return tau, t_coh
