"""
Three-level Lambda system: RWA Hamiltonian, dark state, STIRAP and
vacuum-STIRAP single-photon emission from an atom in a cavity.

Basis order for the bare Lambda system is ``(p, c, e)``:

    H/hbar = -1/2 [[0,    0,              conj(Op)],
                   [0,    -2(Dp - Dc),    conj(Oc)],
                   [Op,   Oc,             -2 Dp   ]]

Spontaneous emission from ``e`` is routed into an extra ``loss`` level so
the emitted population can be read off directly.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, NamedTuple

import numpy as np
from scipy import integrate, signal

from .core import (
    DEFAULT_FOCK_CUTOFF,
    CollapseOperator,
    HamiltonianGenerator,
    HilbertSpace,
    QuantumState,
    annihilation,
    check_fock_truncation,
    lindblad_trajectory,
    operator_product,
    transition,
)

P, C, E, LOSS = 0, 1, 2, 3
LAMBDA_SPACE = HilbertSpace((("atom", 3),))
STIRAP_SPACE = HilbertSpace((("atom", 4),))


@dataclass(frozen=True)
class LambdaParams:
    omega_p: complex = 0.0
    omega_c: complex = 0.0
    delta_p: float = 0.0
    delta_c: float = 0.0
    gamma_e: float = 0.0
    gamma_2: float = 0.0

    def __post_init__(self):
        if self.gamma_e < 0 or self.gamma_2 < 0:
            raise ValueError("decay rates must be non-negative")


@dataclass(frozen=True)
class CavityParams:
    g: float
    kappa: float
    photon_cutoff: int = DEFAULT_FOCK_CUTOFF

    def __post_init__(self):
        if not (self.g > 0 and self.kappa > 0):
            raise ValueError("g and kappa must be positive")
        if self.photon_cutoff < 2:
            raise ValueError(f"photon_cutoff must be >= 2, got {self.photon_cutoff}")


@dataclass(frozen=True)
class PulseEnvelope:
    """Real Rabi-frequency envelope (rad/s), zero outside ``support``."""

    shape: Callable[[np.ndarray], np.ndarray]
    support: tuple[float, float]

    def __post_init__(self):
        t0, t1 = self.support
        if not t1 >= t0:
            raise ValueError(f"bad support {self.support}")

    def __call__(self, t):
        t = np.asarray(t, dtype=float)
        t0, t1 = self.support
        inside = (t >= t0) & (t <= t1)
        values = np.where(inside, self.shape(np.clip(t, t0, t1)), 0.0)
        return values if values.ndim else float(values)

    @property
    def peak(self) -> float:
        grid = np.linspace(*self.support, 2001)
        return float(np.max(np.abs(self(grid))))

    def stretched(self, factor: float) -> "PulseEnvelope":
        """Same shape, time axis scaled by ``factor`` about the support start."""
        t0, t1 = self.support
        shape = self.shape
        return PulseEnvelope(lambda t: shape(t0 + (t - t0) / factor), (t0, t0 + factor * (t1 - t0)))

    def __add__(self, other: "PulseEnvelope") -> "PulseEnvelope":
        support = (min(self.support[0], other.support[0]), max(self.support[1], other.support[1]))
        return PulseEnvelope(lambda t: self(t) + other(t), support)


def sin2_pulse(peak: float, start: float, width: float) -> PulseEnvelope:
    """Smooth bump ``peak * sin^2(pi (t - start)/width)`` on ``[start, start + width]``."""
    return PulseEnvelope(lambda t: peak * np.sin(np.pi * (t - start) / width) ** 2, (start, start + width))


def sin2_ramp(peak: float, start: float, rise: float, hold: float = 0.0) -> PulseEnvelope:
    """Rise from zero to ``peak`` over ``rise`` then hold for ``hold``."""

    def shape(t):
        x = np.clip((t - start) / rise, 0.0, 1.0)
        return peak * np.sin(0.5 * np.pi * x) ** 2

    return PulseEnvelope(shape, (start, start + rise + hold))


def lambda_hamiltonian(p: LambdaParams) -> HamiltonianGenerator:
    op, oc = complex(p.omega_p), complex(p.omega_c)
    H = -0.5 * np.array(
        [
            [0, 0, np.conj(op)],
            [0, -2 * (p.delta_p - p.delta_c), np.conj(oc)],
            [op, oc, -2 * p.delta_p],
        ],
        dtype=complex,
    )
    return HamiltonianGenerator.constant(LAMBDA_SPACE, H)


def dark_state(omega_p: complex, omega_c: complex) -> QuantumState:
    """Normalized ``Oc|p> - Op|c>``: no excited-state admixture."""
    op, oc = complex(omega_p), complex(omega_c)
    norm = math.hypot(abs(op), abs(oc))
    if norm == 0:
        raise ValueError("dark state undefined when both Rabi frequencies vanish")
    return QuantumState(LAMBDA_SPACE, np.array([oc, -op, 0.0]) / norm)


def _embed3(H3: np.ndarray) -> np.ndarray:
    H = np.zeros((4, 4), dtype=complex)
    H[:3, :3] = H3
    return H


def stirap_generator(pulse_c: PulseEnvelope, pulse_p: PulseEnvelope, params: LambdaParams) -> HamiltonianGenerator:
    """Lambda Hamiltonian on (p, c, e, loss) with envelope-driven Rabi frequencies.

    ``params.omega_p``/``omega_c`` only contribute their phases here.
    """
    static = _embed3(lambda_hamiltonian(LambdaParams(0, 0, params.delta_p, params.delta_c)).static)
    phase_p = np.exp(1j * np.angle(params.omega_p)) if params.omega_p else 1.0
    phase_c = np.exp(1j * np.angle(params.omega_c)) if params.omega_c else 1.0
    Hp = _embed3(lambda_hamiltonian(LambdaParams(omega_p=phase_p)).static)
    Hc = _embed3(lambda_hamiltonian(LambdaParams(omega_c=phase_c)).static)
    return HamiltonianGenerator(STIRAP_SPACE, static=static, drives=((pulse_p, Hp), (pulse_c, Hc)))


def lambda_collapses(params: LambdaParams, space: HilbertSpace = STIRAP_SPACE) -> list[CollapseOperator]:
    out = []
    if params.gamma_e > 0:
        out.append(CollapseOperator(space, transition(4, LOSS, E), params.gamma_e))
    if params.gamma_2 > 0:
        # |c><c| at rate 2*gamma_2 damps the p-c coherence at gamma_2
        out.append(CollapseOperator(space, transition(4, C, C), 2 * params.gamma_2))
    return out


class StirapResult(NamedTuple):
    transfer_efficiency: float
    max_excited_population: float
    emitted_fraction: float
    times: np.ndarray
    excited_population: np.ndarray
    dark_population: np.ndarray


def _auto_step(*rates: float, fraction: float = 0.05) -> float:
    fastest = max(abs(r) for r in rates if r is not None)
    return fraction / fastest


def stirap(
    pulse_c: PulseEnvelope,
    pulse_p: PulseEnvelope,
    params: LambdaParams,
    start: str = "c",
    step: float | None = None,
) -> StirapResult:
    """Population transfer between the ground states by adiabatic passage.

    Dark-state population is reported as NaN where both drives vanish.
    """
    if start not in ("c", "p"):
        raise ValueError(f"start must be 'c' or 'p', got {start!r}")
    origin, target = (C, P) if start == "c" else (P, C)
    t0 = min(pulse_c.support[0], pulse_p.support[0])
    t1 = max(pulse_c.support[1], pulse_p.support[1])
    if step is None:
        peak = max(pulse_c.peak, pulse_p.peak)
        step = _auto_step(peak, params.gamma_e, params.delta_p, params.delta_c, params.gamma_2, 1.0 / (t1 - t0))
    gen = stirap_generator(pulse_c, pulse_p, params)
    rho0 = QuantumState.basis(STIRAP_SPACE, atom=origin).to_density_matrix()
    traj = lindblad_trajectory(
        rho0, gen, lambda_collapses(params), t0, t1, step, observe=lambda r: r[:3, :3].reshape(-1)
    )
    blocks = traj.observations.reshape(-1, 3, 3)
    excited = blocks[:, E, E].real
    op = np.asarray(pulse_p(traj.times), dtype=float) * (np.exp(1j * np.angle(params.omega_p)) if params.omega_p else 1.0)
    oc = np.asarray(pulse_c(traj.times), dtype=float) * (np.exp(1j * np.angle(params.omega_c)) if params.omega_c else 1.0)
    norm = np.hypot(np.abs(op), np.abs(oc))
    scale = max(float(norm.max()), 1e-300)
    defined = norm > 1e-6 * scale
    dark = np.full(traj.times.shape, np.nan)
    D = np.stack([oc, -op, np.zeros_like(op)], axis=1)[defined] / norm[defined, None]
    dark[defined] = np.einsum("ti,tij,tj->t", D.conj(), blocks[defined], D).real
    final = traj.final.matrix
    return StirapResult(
        transfer_efficiency=float(final[target, target].real),
        max_excited_population=float(excited.max()),
        emitted_fraction=float(final[LOSS, LOSS].real),
        times=traj.times,
        excited_population=excited,
        dark_population=dark,
    )


# ---------------------------------------------------------------------------
# Vacuum STIRAP
# ---------------------------------------------------------------------------

VC, VE, VP, VX = 0, 1, 2, 3  # atom levels for the cavity source: c, e, p, loss


def cavity_space(cavity: CavityParams) -> HilbertSpace:
    return HilbertSpace((("atom", 4), ("cavity", cavity.photon_cutoff + 1)))


class EmissionResult(NamedTuple):
    efficiency: float
    spontaneous_fraction: float
    residual: float
    times: np.ndarray
    photon_waveform: np.ndarray
    cavity_population: np.ndarray

    @property
    def bookkeeping_error(self) -> float:
        return abs(self.efficiency + self.spontaneous_fraction + self.residual - 1.0)


def vacuum_stirap_emit(
    cavity: CavityParams,
    gamma_e: float,
    control: PulseEnvelope,
    step: float | None = None,
    tail: float | None = None,
) -> EmissionResult:
    """Single-photon emission from ``|c, 0>`` driven by the control envelope.

    The control couples ``c <-> e``; the cavity couples ``e, n <-> p, n+1``
    with strength ``g``. Photons leave at rate ``kappa`` (the useful output)
    and ``e`` decays at ``gamma_e`` into the loss level. The efficiency is the
    time-integrated output flux; ``residual`` counts population that has
    neither left through the mirror nor been lost at the end of the run.
    """
    if gamma_e < 0:
        raise ValueError("gamma_e must be non-negative")
    space = cavity_space(cavity)
    nc = cavity.photon_cutoff + 1
    a = annihilation(nc)
    Hc = -0.5 * operator_product(space, atom=transition(4, VE, VC) + transition(4, VC, VE))
    coupling = operator_product(space, atom=transition(4, VE, VP), cavity=a)
    Hg = -cavity.g * (coupling + coupling.conj().T)
    gen = HamiltonianGenerator(space, static=Hg, drives=((control, Hc),))
    collapses = [CollapseOperator(space, operator_product(space, cavity=a), cavity.kappa)]
    if gamma_e > 0:
        collapses.append(CollapseOperator(space, operator_product(space, atom=transition(4, VX, VE)), gamma_e))

    t0, t1 = control.support
    if tail is None:
        tail = 10.0 / cavity.kappa
    t1 = t1 + tail
    if step is None:
        step = _auto_step(cavity.g, control.peak, cavity.kappa, gamma_e, fraction=0.08)

    n_op = operator_product(space, cavity=a.conj().T @ a)
    diag_n = np.real(np.diag(n_op))
    atom_level = np.repeat(np.arange(4), nc)
    photons = np.tile(np.arange(nc), 4)
    excited = (atom_level == VE).astype(float)

    def observe(r):
        pops = np.real(np.diag(r))
        return np.array([pops @ diag_n, pops @ excited])

    rho0 = QuantumState.basis(space, atom=VC, cavity=0).to_density_matrix()
    traj = lindblad_trajectory(rho0, gen, collapses, t0, t1, step, observe=observe)
    check_fock_truncation(traj.final, "cavity")
    n_cav, p_e = traj.observations[:, 0], traj.observations[:, 1]
    waveform = cavity.kappa * n_cav
    efficiency = float(integrate.simpson(waveform, x=traj.times))
    spontaneous = float(integrate.simpson(gamma_e * p_e, x=traj.times))
    pops = np.real(np.diag(traj.final.matrix))
    emitted_or_lost = pops[(atom_level == VP) & (photons == 0)].sum() + pops[atom_level == VX].sum()
    residual = float(pops.sum() - emitted_or_lost)
    return EmissionResult(efficiency, spontaneous, residual, traj.times, waveform, n_cav)


# ---------------------------------------------------------------------------
# Waveform analysis
# ---------------------------------------------------------------------------


def fwhm(times: np.ndarray, values: np.ndarray) -> float:
    """Full width at half maximum between the outermost half-max crossings."""
    values = np.asarray(values, dtype=float)
    half = 0.5 * values.max()
    above = np.nonzero(values >= half)[0]
    i, j = above[0], above[-1]

    def cross(k0, k1):
        v0, v1 = values[k0], values[k1]
        return times[k0] + (half - v0) * (times[k1] - times[k0]) / (v1 - v0)

    left = times[0] if i == 0 else cross(i - 1, i)
    right = times[-1] if j == len(values) - 1 else cross(j, j + 1)
    return float(right - left)


def count_peaks(values: np.ndarray, prominence: float = 0.05) -> int:
    values = np.asarray(values, dtype=float)
    peaks, _ = signal.find_peaks(values, prominence=prominence * values.max())
    return int(peaks.size)


def waveform_distance(a: EmissionResult, b: EmissionResult, samples: int = 20001) -> float:
    """L2 distance between the two output waveforms, each scaled to unit L2 norm."""
    lo = min(a.times[0], b.times[0])
    hi = max(a.times[-1], b.times[-1])
    grid = np.linspace(lo, hi, samples)
    wa = np.interp(grid, a.times, a.photon_waveform, left=0.0, right=0.0)
    wb = np.interp(grid, b.times, b.photon_waveform, left=0.0, right=0.0)
    wa = wa / math.sqrt(integrate.trapezoid(wa**2, grid))
    wb = wb / math.sqrt(integrate.trapezoid(wb**2, grid))
    return float(math.sqrt(integrate.trapezoid((wa - wb) ** 2, grid)))


def waveform_shaping_check(
    control_a: PulseEnvelope,
    control_b: PulseEnvelope,
    cavity: CavityParams,
    gamma_e: float,
    step: float | None = None,
) -> float:
    a = vacuum_stirap_emit(cavity, gamma_e, control_a, step=step)
    b = a if control_b is control_a else vacuum_stirap_emit(cavity, gamma_e, control_b, step=step)
    return waveform_distance(a, b)
