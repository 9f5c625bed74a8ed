"""
Scenario registry: typed parameter declarations and the functions that
turn a validated parameter set into a result table and summary.

Frequencies in configs are given as ordinary frequencies (MHz, kHz); they are
multiplied by 2 pi before entering the simulation, which works in rad/s.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Any, Callable

import numpy as np

from . import dlcz, eit, entanglement, ion_gates
from .calculator import C6Coefficient, Frequency, Length, coulomb_interaction_frequency, resonant_cross_section, vdw_separation_for_strength
from .core import QUBIT, DensityMatrix, align_global_phase, apply_kraus
from .lambda_dynamics import CavityParams, LambdaParams, sin2_pulse, sin2_ramp, stirap, vacuum_stirap_emit

TWO_PI = 2.0 * math.pi
MHZ = TWO_PI * 1e6
KHZ = TWO_PI * 1e3


@dataclass(frozen=True)
class Param:
    default: Any
    unit: str
    help: str
    kind: str = "float"  # float, int, floats
    low: float | None = None
    high: float | None = None
    low_open: bool = False
    choices: tuple | None = None

    def describe_range(self) -> str:
        parts = []
        if self.choices is not None:
            return "one of " + ", ".join(map(str, self.choices))
        if self.low is not None:
            parts.append(f"{'>' if self.low_open else '>='} {self.low:g}")
        if self.high is not None:
            parts.append(f"<= {self.high:g}")
        return " and ".join(parts)

    def coerce(self, value: Any) -> Any:
        """Convert and range-check; raises ValueError with a readable message."""
        if self.kind == "floats":
            if not isinstance(value, (list, tuple)) or not value:
                raise ValueError("expected a non-empty list of numbers")
            return [self._scalar(v, float) for v in value]
        return self._scalar(value, int if self.kind == "int" else float)

    def _scalar(self, value: Any, kind: type) -> Any:
        if isinstance(value, bool):
            raise ValueError(f"expected a number, got {value!r}")
        if kind is int:
            if isinstance(value, float) and value.is_integer():
                value = int(value)
            if isinstance(value, str):
                value = int(value.strip())
            if not isinstance(value, int):
                raise ValueError(f"expected an integer, got {value!r}")
        else:
            if isinstance(value, str):
                value = float(value.strip())
            if not isinstance(value, (int, float)):
                raise ValueError(f"expected a number, got {value!r}")
            value = float(value)
            if not math.isfinite(value):
                raise ValueError("value must be finite")
        if self.choices is not None and value not in self.choices:
            raise ValueError(f"must be {self.describe_range()}, got {value!r}")
        if self.low is not None and (value <= self.low if self.low_open else value < self.low):
            raise ValueError(f"must be {self.describe_range()}, got {value!r}")
        if self.high is not None and value > self.high:
            raise ValueError(f"must be {self.describe_range()}, got {value!r}")
        return value


@dataclass
class ScenarioOutput:
    columns: list[tuple[str, str]] = field(default_factory=list)  # (name, unit)
    rows: list[list[Any]] = field(default_factory=list)
    summary: dict[str, Any] = field(default_factory=dict)


@dataclass(frozen=True)
class Scenario:
    name: str
    description: str
    params: dict[str, Param]
    run: Callable[[dict[str, Any], int], ScenarioOutput]
    default_format: str = "csv"


REGISTRY: dict[str, Scenario] = {}


def scenario(name: str, description: str, params: dict[str, Param], default_format: str = "csv"):
    def register(fn):
        REGISTRY[name] = Scenario(name, description, params, fn, default_format)
        return fn

    return register


def _probability(**kw) -> Param:
    return Param(unit="1", low=0.0, high=1.0, **kw)


# ---------------------------------------------------------------------------
# Trapped ions
# ---------------------------------------------------------------------------

_ION_PARAMS = {
    "n_ions": Param(2, "1", "number of ions in the chain", kind="int", low=2, high=4),
    "control_ion": Param(0, "1", "index of the control ion m", kind="int", low=0),
    "target_ion": Param(1, "1", "index of the target ion n", kind="int", low=0),
    "phonon_cutoff": Param(4, "1", "highest retained phonon number of the CM mode", kind="int", low=2, high=12),
    "omega_cm_mhz": Param(1.0, "MHz", "centre-of-mass mode frequency", low=0.0, low_open=True),
    "rabi_khz": Param(50.0, "kHz", "sideband Rabi frequency", low=0.0, low_open=True),
    "phase_sign": Param(1, "1", "pi-pulse phase convention (+1 gives -i, -1 gives +i)", kind="int", choices=(1, -1)),
}

_BASIS = ("gg", "ge", "eg", "ee")


def _ion_model(p: dict) -> ion_gates.IonChainModel:
    if p["control_ion"] == p["target_ion"]:
        raise ValueError("control_ion and target_ion must differ")
    if max(p["control_ion"], p["target_ion"]) >= p["n_ions"]:
        raise ValueError("ion index outside the chain")
    return ion_gates.IonChainModel(
        n_ions=p["n_ions"],
        omega_cm=p["omega_cm_mhz"] * MHZ,
        phonon_cutoff=p["phonon_cutoff"],
        rabi=p["rabi_khz"] * KHZ,
        phase_sign=p["phase_sign"],
    )


@scenario("cz-gate", "Cirac-Zoller phase gate and CNOT truth table from sideband pulses", _ION_PARAMS)
def run_cz_gate(p: dict, seed: int) -> ScenarioOutput:
    model = _ion_model(p)
    m, n = p["control_ion"], p["target_ion"]
    cz = ion_gates.cirac_zoller_gate(model, m, n)
    cnot = ion_gates.cnot_gate(model, m, n)
    table = ion_gates.truth_table(cnot)
    rows = [[_BASIS[j], _BASIS[i], float(table[i, j])] for j in range(4) for i in range(4)]
    aligned = align_global_phase(cz, ion_gates.U_PHASE)
    return ScenarioOutput(
        columns=[("input", ""), ("output", ""), ("probability", "1")],
        rows=rows,
        summary={
            "cz_max_deviation": float(np.max(np.abs(aligned - ion_gates.U_PHASE))),
            "cz_process_fidelity": ion_gates.process_fidelity(cz, ion_gates.U_PHASE),
            "cnot_process_fidelity": ion_gates.process_fidelity(cnot, ion_gates.U_CNOT),
            "cnot_min_nominal_probability": float(np.min(np.abs(table[np.abs(ion_gates.U_CNOT) > 0.5]))),
        },
    )


@scenario(
    "cz-thermal",
    "Phase-gate process fidelity versus residual phonon occupation",
    {**_ION_PARAMS, "phonon_cutoff": Param(5, "1", "highest retained phonon number (must exceed 3)", kind="int", low=4, high=12),
     "p1_grid": Param([0.0, 0.05, 0.1, 0.2], "1", "probabilities of one initial phonon", kind="floats", low=0.0, high=0.99)},
)
def run_cz_thermal(p: dict, seed: int) -> ScenarioOutput:
    model = _ion_model(p)
    rows = [[p1, ion_gates.gate_fidelity_thermal(model, p1, p["control_ion"], p["target_ion"])] for p1 in p["p1_grid"]]
    fids = [r[1] for r in rows]
    return ScenarioOutput(
        columns=[("p1_phonon", "1"), ("process_fidelity", "1")],
        rows=rows,
        summary={"monotone_non_increasing": bool(all(b <= a + 1e-12 for a, b in zip(fids, fids[1:])))},
    )


# ---------------------------------------------------------------------------
# Lambda systems
# ---------------------------------------------------------------------------


@scenario(
    "stirap",
    "STIRAP transfer efficiency versus sweep speed",
    {
        "gamma_e_mhz": Param(6.0, "MHz", "excited-state decay rate / 2pi", low=0.0),
        "peak_rabi_mhz": Param(600.0, "MHz", "peak Rabi frequency of both pulses / 2pi", low=0.0, low_open=True),
        "pulse_area": Param(1000.0, "rad", "peak Rabi frequency times pulse length at the slowest sweep", low=0.0, low_open=True),
        "delay_fraction": Param(0.5, "1", "delay of the second pulse in units of the pulse length", low=0.0, high=1.0),
        "speedups": Param([1.0, 3.0, 10.0, 30.0, 100.0], "1", "sweep speed-up factors relative to the slowest sweep", kind="floats", low=1.0),
    },
)
def run_stirap(p: dict, seed: int) -> ScenarioOutput:
    gamma = p["gamma_e_mhz"] * MHZ
    peak = p["peak_rabi_mhz"] * MHZ
    params = LambdaParams(gamma_e=gamma)
    rows = []
    for speed in p["speedups"]:
        T = p["pulse_area"] / peak / speed
        probe = sin2_pulse(peak, 0.0, T)
        control = sin2_pulse(peak, p["delay_fraction"] * T, T)
        r = stirap(control, probe, params, start="c")
        rows.append([speed, T, r.transfer_efficiency, r.max_excited_population, r.emitted_fraction])
    return ScenarioOutput(
        columns=[("speedup", "1"), ("pulse_length", "s"), ("transfer_efficiency", "1"), ("max_excited_population", "1"), ("emitted_fraction", "1")],
        rows=rows,
        summary={"slowest_transfer": rows[0][2], "fastest_transfer": rows[-1][2]},
    )


@scenario(
    "photon-gun",
    "Vacuum-STIRAP single-photon emission: waveform and efficiency",
    {
        "g_mhz": Param(2.37, "MHz", "atom-cavity coupling g / 2pi", low=0.0, low_open=True),
        "kappa_mhz": Param(2.5, "MHz", "photon escape rate through the output mirror / 2pi", low=0.0, low_open=True),
        "gamma_e_mhz": Param(6.0, "MHz", "excited-state loss rate / 2pi", low=0.0),
        "control_peak_mhz": Param(5.0, "MHz", "peak control Rabi frequency / 2pi", low=0.0, low_open=True),
        "rise_us": Param(6.0, "us", "control ramp rise time", low=0.0, low_open=True),
        "hold_us": Param(6.0, "us", "time the control is held at its peak", low=0.0),
        "photon_cutoff": Param(2, "1", "highest retained cavity photon number", kind="int", low=2, high=10),
        "waveform_samples": Param(400, "1", "number of waveform rows written", kind="int", low=2, high=100000),
    },
)
def run_photon_gun(p: dict, seed: int) -> ScenarioOutput:
    cavity = CavityParams(p["g_mhz"] * MHZ, p["kappa_mhz"] * MHZ, p["photon_cutoff"])
    gamma = p["gamma_e_mhz"] * MHZ
    control = sin2_ramp(p["control_peak_mhz"] * MHZ, 0.0, p["rise_us"] * 1e-6, p["hold_us"] * 1e-6)
    r = vacuum_stirap_emit(cavity, gamma, control)
    idx = np.unique(np.linspace(0, r.times.size - 1, p["waveform_samples"]).round().astype(int))
    rows = [[float(r.times[i]), float(r.photon_waveform[i]), float(r.cavity_population[i])] for i in idx]
    return ScenarioOutput(
        columns=[("time", "s"), ("photon_flux", "1/s"), ("cavity_photon_number", "1")],
        rows=rows,
        summary={
            "efficiency": r.efficiency,
            "spontaneous_fraction": r.spontaneous_fraction,
            "residual": r.residual,
            "bookkeeping_error": r.bookkeeping_error,
            "g2_over_kappa_gamma": cavity.g**2 / (cavity.kappa * gamma) if gamma > 0 else None,
        },
    )


# ---------------------------------------------------------------------------
# EIT medium
# ---------------------------------------------------------------------------

_MEDIUM_PARAMS = {
    "wavelength_nm": Param(780.0, "nm", "probe wavelength", low=0.0, low_open=True),
    "density": Param(1e18, "1/m^3", "atomic number density", low=0.0, low_open=True),
    "length_um": Param(100.0, "um", "length of the ensemble", low=0.0),
    "gamma_e_mhz": Param(6.0, "MHz", "excited-state decay rate / 2pi", low=0.0, low_open=True),
    "control_mhz": Param(3.0, "MHz", "control Rabi frequency / 2pi", low=0.0),
    "gamma_2_khz": Param(0.0, "kHz", "ground-coherence decay rate / 2pi", low=0.0),
}


def _medium(p: dict) -> eit.MediumParams:
    lp = LambdaParams(omega_c=p["control_mhz"] * MHZ, gamma_e=p["gamma_e_mhz"] * MHZ, gamma_2=p["gamma_2_khz"] * KHZ)
    return eit.MediumParams(p["density"], p["length_um"] * 1e-6, p["wavelength_nm"] * 1e-9, lp)


@scenario(
    "eit-chi",
    "Probe susceptibility with and without control light",
    {
        **_MEDIUM_PARAMS,
        "span_gamma": Param(5.0, "1", "half-width of the detuning sweep in units of gamma_e", low=0.0, low_open=True),
        "points": Param(400, "1", "number of detuning points", kind="int", low=3, high=200000),
    },
)
def run_eit_chi(p: dict, seed: int) -> ScenarioOutput:
    medium = _medium(p)
    gamma = medium.lambda_params.gamma_e
    deltas = np.linspace(-p["span_gamma"] * gamma, p["span_gamma"] * gamma, p["points"])
    with_control = eit.susceptibility(medium, deltas)
    bare = eit.susceptibility(medium.with_control(0.0), deltas)
    oracle = eit.closed_form_susceptibility(medium, deltas)
    rows = [[float(d), a.real, a.imag, b.real, b.imag] for d, a, b in zip(deltas, with_control, bare)]
    summary = {
        "optical_depth": eit.optical_depth(medium),
        "max_oracle_deviation": float(np.max(np.abs(with_control - oracle)) / np.max(np.abs(oracle))),
        "bare_peak_im_chi": float(bare.imag.max()),
    }
    if medium.lambda_params.omega_c != 0:
        summary["im_chi_at_resonance_over_peak"] = abs(eit.susceptibility(medium, 0.0).imag) / float(bare.imag.max())
        summary["window_width"] = eit.transparency_window_width(medium)
    return ScenarioOutput(
        columns=[("delta_p", "rad/s"), ("re_chi", "1"), ("im_chi", "1"), ("re_chi_no_control", "1"), ("im_chi_no_control", "1")],
        rows=rows,
        summary=summary,
    )


_SODIUM_MEDIUM = {
    **_MEDIUM_PARAMS,
    "wavelength_nm": Param(589.0, "nm", "probe wavelength", low=0.0, low_open=True),
    "density": Param(3.3e19, "1/m^3", "atomic number density", low=0.0, low_open=True),
    "length_um": Param(229.0, "um", "length of the ensemble", low=0.0),
    "gamma_e_mhz": Param(9.8, "MHz", "excited-state decay rate / 2pi", low=0.0, low_open=True),
    "control_mhz": Param(10.0, "MHz", "control Rabi frequency / 2pi", low=0.0, low_open=True),
}


@scenario(
    "slow-light",
    "Group velocity and spatial pulse compression in an EIT medium",
    {**_SODIUM_MEDIUM, "pulse_ns": Param(300.0, "ns", "probe pulse duration", low=0.0)},
    default_format="json",
)
def run_slow_light(p: dict, seed: int) -> ScenarioOutput:
    medium = _medium(p)
    v = eit.group_velocity(medium)
    duration = p["pulse_ns"] * 1e-9
    summary = {
        "group_velocity": v,
        "group_velocity_over_c": v / eit.SPEED_OF_LIGHT,
        "compressed_length": eit.pulse_compression(duration, group_velocity_value=v),
        "vacuum_length": eit.pulse_compression(duration),
        "optical_depth": eit.optical_depth(medium),
        "window_width": eit.transparency_window_width(medium),
    }
    units = {"group_velocity": "m/s", "group_velocity_over_c": "1", "compressed_length": "m", "vacuum_length": "m", "optical_depth": "1", "window_width": "rad/s"}
    return ScenarioOutput(
        columns=[("quantity", ""), ("value", ""), ("unit", "")],
        rows=[[k, summary[k], units[k]] for k in units],
        summary=summary,
    )


@scenario(
    "memory",
    "Stored-light quantum memory figures of merit",
    {
        **_SODIUM_MEDIUM,
        "storage_time_us": Param(10.0, "us", "storage time", low=0.0),
        "efficiency_lifetime_ms": Param(0.5, "ms", "1/e time of the retrieval efficiency", low=0.0, low_open=True),
        "coherence_time_ms": Param(1.1, "ms", "1/e time of the stored qubit coherence", low=0.0, low_open=True),
        "write_read_ceiling": Param(0.540707, "1", "write-read efficiency at zero storage time", low=0.0, high=1.0),
        "probe_times_us": Param([10.0, 500.0], "us", "two storage times used to re-extract both lifetimes", kind="floats", low=0.0),
    },
    default_format="json",
)
def run_memory(p: dict, seed: int) -> ScenarioOutput:
    medium = _medium(p)
    deco = eit.Decoherence(p["efficiency_lifetime_ms"] * 1e-3, p["coherence_time_ms"] * 1e-3, p["write_read_ceiling"])
    plus = DensityMatrix(QUBIT, 0.5 * np.ones((2, 2), dtype=complex))
    result = eit.store_and_retrieve(plus, p["storage_time_us"] * 1e-6, medium, deco)
    if len(p["probe_times_us"]) != 2:
        raise ValueError("probe_times_us needs exactly two entries")
    tau, t2 = eit.extract_lifetimes(medium, deco, tuple(t * 1e-6 for t in p["probe_times_us"]))
    classical = eit.average_fidelity(lambda r: apply_kraus(r, eit.measure_and_prepare_kraus()), method="exact").mean
    summary = {
        "efficiency": result.metrics.efficiency,
        "avg_fidelity": result.metrics.avg_fidelity,
        "efficiency_lifetime": tau,
        "coherence_time": t2,
        "optical_depth": eit.optical_depth(medium),
        "classical_limit": classical,
    }
    units = {"efficiency": "1", "avg_fidelity": "1", "efficiency_lifetime": "s", "coherence_time": "s", "optical_depth": "1", "classical_limit": "1"}
    return ScenarioOutput(
        columns=[("quantity", ""), ("value", ""), ("unit", "")],
        rows=[[k, summary[k], units[k]] for k in units],
        summary=summary,
    )


# ---------------------------------------------------------------------------
# DLCZ source
# ---------------------------------------------------------------------------


@scenario(
    "dlcz",
    "Heralded photon statistics of the DLCZ source",
    {
        "mu": Param(0.02, "1", "mean scattered photons per write pulse", low=0.0),
        "detector_efficiency": _probability(default=1.0, help="herald detector efficiency"),
        "dark_count_prob": _probability(default=0.0, help="dark-count probability per gate"),
        "retrieval_efficiency": _probability(default=1.0, help="read-out efficiency per stored excitation"),
        "trials": Param(1_000_000, "1", "number of write/read trials", kind="int", low=1, high=100_000_000),
        "workers": Param(1, "1", "threads used for trial batches (results do not depend on it)", kind="int", low=1, high=64),
    },
    default_format="json",
)
def run_dlcz(p: dict, seed: int) -> ScenarioOutput:
    params = dlcz.SourceParams(p["mu"], p["detector_efficiency"], p["dark_count_prob"], p["retrieval_efficiency"])
    s = dlcz.heralded_statistics(params, p["trials"], seed, workers=p["workers"])
    analytic = dlcz.conditional_g2_exact(params) if p["mu"] > 0 else None
    return ScenarioOutput(
        columns=[("retrieved_photons", "1"), ("conditional_probability", "1")],
        rows=[[n, float(q)] for n, q in enumerate(s.conditional_p)],
        summary={
            "mu": p["mu"],
            "herald_rate": s.herald_rate,
            "g2_conditional": s.g2_conditional,
            "stderr": s.stderr,
            "g2_analytic": analytic,
            "heralds": s.heralds,
            "status": s.status,
        },
    )


@scenario(
    "dlcz-pattern",
    "Angular pattern of collective read-out emission",
    {
        "wavelength_nm": Param(780.0, "nm", "optical wavelength (all beams)", low=0.0, low_open=True),
        "n_atoms": Param(2000, "1", "number of atoms", kind="int", low=1, high=100000),
        "rms_radius_wavelengths": Param(50.0, "1", "RMS radius of the Gaussian cloud in wavelengths", low=0.0),
        "detect_angle_deg": Param(3.0, "deg", "angle of the write-photon detector from the write beam", low=0.0, high=180.0),
        "n_theta": Param(60, "1", "polar grid points", kind="int", low=1, high=2000),
        "n_phi": Param(120, "1", "azimuthal grid points", kind="int", low=1, high=4000),
    },
)
def run_dlcz_pattern(p: dict, seed: int) -> ScenarioOutput:
    lam = p["wavelength_nm"] * 1e-9
    rng = np.random.default_rng(seed)
    positions = dlcz.gaussian_cloud(p["n_atoms"], p["rms_radius_wavelengths"] * lam, rng)
    geom = dlcz.standard_geometry(positions, lam, math.radians(p["detect_angle_deg"]))
    theta, phi, vectors = dlcz.direction_grid(p["n_theta"], p["n_phi"])
    weights = dlcz.emission_pattern(geom, vectors, TWO_PI / lam)
    return ScenarioOutput(
        columns=[("theta", "rad"), ("phi", "rad"), ("weight", "1")],
        rows=[[float(t), float(f), float(w)] for t, f, w in zip(theta, phi, weights)],
        summary={
            "phase_matched_weight": dlcz.collective_enhancement(geom),
            "peak_over_background": dlcz.pattern_contrast(geom, weights),
            "grid_max_over_min": float(weights.max() / weights.min()),
        },
    )


# ---------------------------------------------------------------------------
# Remote entanglement
# ---------------------------------------------------------------------------

_NOISE_PARAMS = {
    "dephasing_time_ms": Param(0.1, "ms", "coherence time of the stored qubit", low=0.0, low_open=True),
    "residual_error": _probability(default=0.054, help="depolarizing weight of the static residual error"),
    "emission_efficiency": _probability(default=1.0, help="efficiency of each photon emission"),
    "storage_efficiency": _probability(default=1.0, help="efficiency of photon storage in the memory"),
}


def _noise(p: dict) -> entanglement.ProtocolNoise:
    return entanglement.ProtocolNoise(p["dephasing_time_ms"] * 1e-3, p["emission_efficiency"], p["storage_efficiency"], p["residual_error"])


@scenario(
    "remote-bell",
    "Atom-BEC entanglement and two-photon Bell fidelity",
    {**_NOISE_PARAMS, "readout_delay_us": Param(2.0, "us", "storage time before readout", low=0.0)},
    default_format="json",
)
def run_remote_bell(p: dict, seed: int) -> ScenarioOutput:
    r = entanglement.run_full_protocol(_noise(p), p["readout_delay_us"] * 1e-6)
    summary = {
        "bell_fidelity": r.bell_fidelity,
        "success_probability": r.success_probability,
        "concurrence": entanglement.concurrence(r.two_photon_state) if r.two_photon_state is not None else 0.0,
    }
    return ScenarioOutput(
        columns=[("quantity", ""), ("value", "1")],
        rows=[[k, v] for k, v in summary.items()],
        summary=summary,
    )


@scenario(
    "bell-scan",
    "Bell fidelity versus readout delay with fitted decay constant",
    {**_NOISE_PARAMS, "delays_us": Param([float(x) for x in range(0, 501, 50)], "us", "readout delays", kind="floats", low=0.0)},
)
def run_bell_scan(p: dict, seed: int) -> ScenarioOutput:
    scan = entanglement.fidelity_decay_scan(_noise(p), np.array(p["delays_us"]) * 1e-6)
    return ScenarioOutput(
        columns=[("delay", "s"), ("bell_fidelity", "1")],
        rows=[[float(d), float(f)] for d, f in zip(scan.delays, scan.fidelities)],
        summary={"decay_constant": scan.decay_constant},
    )


@scenario(
    "bell-measure",
    "Polarization coincidence counts versus analyzer half-wave-plate angle",
    {
        **_NOISE_PARAMS,
        "readout_delay_us": Param(2.0, "us", "storage time before readout", low=0.0),
        "qwp_a_deg": Param(0.0, "deg", "quarter-wave-plate angle, photon a", low=-360.0, high=360.0),
        "hwp_a_deg": Param(0.0, "deg", "half-wave-plate angle, photon a", low=-360.0, high=360.0),
        "qwp_b_deg": Param(0.0, "deg", "quarter-wave-plate angle, photon b", low=-360.0, high=360.0),
        "hwp_b_start_deg": Param(0.0, "deg", "first half-wave-plate angle, photon b", low=-360.0, high=360.0),
        "hwp_b_stop_deg": Param(90.0, "deg", "last half-wave-plate angle, photon b", low=-360.0, high=360.0),
        "points": Param(19, "1", "number of analyzer angles", kind="int", low=1, high=10000),
        "shots": Param(10000, "1", "photon pairs per angle", kind="int", low=1, high=10**9),
    },
)
def run_bell_measure(p: dict, seed: int) -> ScenarioOutput:
    state = entanglement.run_full_protocol(_noise(p), p["readout_delay_us"] * 1e-6).two_photon_state
    if state is None:
        raise ValueError("no photon pair produced (storage_efficiency = 0)")
    setting_a = entanglement.MeasurementSetting(math.radians(p["qwp_a_deg"]), math.radians(p["hwp_a_deg"]))
    angles = np.linspace(p["hwp_b_start_deg"], p["hwp_b_stop_deg"], p["points"])
    streams = np.random.SeedSequence(seed).spawn(len(angles))
    rows = []
    for angle, stream in zip(angles, streams):
        setting_b = entanglement.MeasurementSetting(math.radians(p["qwp_b_deg"]), math.radians(angle))
        m = entanglement.measure_polarization(state, setting_a, setting_b, p["shots"], stream)
        c = m.counts.ravel()
        corr = float(m.probabilities[0, 0] + m.probabilities[1, 1] - m.probabilities[0, 1] - m.probabilities[1, 0])
        rows.append([float(angle), *map(int, c), corr])
    return ScenarioOutput(
        columns=[("hwp_b", "deg"), ("counts_HH", "1"), ("counts_HV", "1"), ("counts_VH", "1"), ("counts_VV", "1"), ("correlation", "1")],
        rows=rows,
        summary={"fringe_visibility": float((max(r[-1] for r in rows) - min(r[-1] for r in rows)) / 2)},
    )


# ---------------------------------------------------------------------------
# Scales
# ---------------------------------------------------------------------------


@scenario(
    "scales",
    "Interaction-scale comparison: Coulomb, van der Waals and optical cross section",
    {
        "separation_um": Param(5.0, "um", "ion separation for the Coulomb energy", low=0.0, low_open=True),
        "c6_au": Param(1000.0, "a.u.", "van der Waals C6 coefficient", low=0.0, low_open=True),
        "target_hz": Param(1000.0, "Hz", "interaction strength for the van der Waals radius", low=0.0, low_open=True),
        "wavelength_nm": Param(780.0, "nm", "wavelength for the resonant cross section", low=0.0, low_open=True),
    },
    default_format="json",
)
def run_scales(p: dict, seed: int) -> ScenarioOutput:
    summary = {
        "coulomb_frequency": float(coulomb_interaction_frequency(Length(p["separation_um"] * 1e-6))),
        "vdw_separation": float(vdw_separation_for_strength(C6Coefficient(p["c6_au"]), Frequency(p["target_hz"]))),
        "cross_section": float(resonant_cross_section(Length(p["wavelength_nm"] * 1e-9))),
    }
    units = {"coulomb_frequency": "Hz", "vdw_separation": "m", "cross_section": "m^2"}
    return ScenarioOutput(
        columns=[("quantity", ""), ("value", ""), ("unit", "")],
        rows=[[k, summary[k], units[k]] for k in units],
        summary=summary,
    )
