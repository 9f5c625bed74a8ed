"""
Heralded single-photon source from an atomic ensemble (DLCZ scheme).

A weak write pulse Raman-scatters a Poisson number of photons toward a
detector; each scattering event leaves one atom in the storage state. A click
heralds the ensemble, and a later read pulse converts each stored excitation
into a photon with the retrieval efficiency. Directionality of the read-out
emission comes from the collective phase-matching sum over atom positions.
"""
from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np
from scipy import stats

from .core import PhysicsError

TRIAL_BATCH = 1 << 16


@dataclass(frozen=True)
class SourceParams:
    mean_scattered: float
    detector_efficiency: float = 1.0
    dark_count_prob: float = 0.0
    retrieval_efficiency: float = 1.0

    def __post_init__(self):
        if not self.mean_scattered >= 0:
            raise ValueError("mean_scattered must be >= 0")
        for name in ("detector_efficiency", "dark_count_prob", "retrieval_efficiency"):
            value = getattr(self, name)
            if not 0.0 <= value <= 1.0:
                raise ValueError(f"{name} must lie in [0, 1], got {value}")


class HeraldRecord(NamedTuple):
    scattered: int
    clicked: bool
    retrieved: int


@dataclass(frozen=True)
class HeraldRecords:
    """Struct-of-arrays view of many write/read trials."""

    scattered: np.ndarray
    clicked: np.ndarray
    retrieved: np.ndarray

    def __len__(self):
        return self.scattered.size

    def __getitem__(self, i: int) -> HeraldRecord:
        return HeraldRecord(int(self.scattered[i]), bool(self.clicked[i]), int(self.retrieved[i]))


def g2_from_distribution(p) -> float:
    """Normalized pair correlation ``sum n(n-1) p_n / (sum n p_n)^2``."""
    p = np.asarray(p, dtype=float)
    if np.any(p < 0) or abs(p.sum() - 1.0) > 1e-9:
        raise ValueError("p must be a probability distribution")
    n = np.arange(p.size)
    mean = float(n @ p)
    if mean <= 0:
        raise ValueError("g2 is undefined for a distribution with zero mean")
    pairs = float((n * (n - 1)) @ p)
    # divide twice: mean**2 can underflow for tiny but nonzero means
    return 0.0 if pairs == 0 else pairs / mean / mean


def _poisson_support(mu: float) -> np.ndarray:
    # far enough into the tail that the neglected mass is below 1e-18
    top = int(mu + 12.0 * np.sqrt(mu) + 40.0)
    return np.arange(top + 1)


def analytic_conditional_g2(mu: float) -> float:
    """Heralded g2 for an ideal detector and readout, by Poisson-tail summation.

    Heralding removes the vacuum term: ``p~_n = p_n / (1 - p_0)`` for n >= 1.
    """
    if not mu > 0:
        raise ValueError("mu must be positive")
    n = _poisson_support(mu)
    pn = stats.poisson.pmf(n, mu)
    pn[0] = 0.0
    return g2_from_distribution(pn / pn.sum())


def conditional_g2_exact(params: SourceParams) -> float:
    """Heralded g2 including detector efficiency and dark counts.

    Retrieval efficiency cancels: binomial thinning scales both factorial
    moments by the same power as the squared mean.
    """
    mu = params.mean_scattered
    n = _poisson_support(mu)
    pn = stats.poisson.pmf(n, mu)
    click = 1.0 - (1.0 - params.dark_count_prob) * (1.0 - params.detector_efficiency) ** n
    w = pn * click
    m1 = float(n @ w)
    if m1 <= 0:
        raise ValueError("no photons in the heralded ensemble")
    return float((n * (n - 1)) @ w) * float(w.sum()) / m1**2


def _batch(params: SourceParams, size: int, seed: np.random.SeedSequence):
    rng = np.random.default_rng(seed)
    scattered = rng.poisson(params.mean_scattered, size)
    detected = rng.binomial(scattered, params.detector_efficiency)
    dark = rng.random(size) < params.dark_count_prob
    retrieved = rng.binomial(scattered, params.retrieval_efficiency)
    return scattered, (detected > 0) | dark, retrieved


def simulate_records(params: SourceParams, trials: int, seed: int, workers: int = 1) -> HeraldRecords:
    """Monte-Carlo trials; batch ``i`` always draws from child stream ``i`` of ``seed``."""
    if trials < 1:
        raise ValueError("trials must be >= 1")
    sizes = [TRIAL_BATCH] * (trials // TRIAL_BATCH)
    if trials % TRIAL_BATCH:
        sizes.append(trials % TRIAL_BATCH)
    seeds = np.random.SeedSequence(seed).spawn(len(sizes))
    jobs = list(zip(sizes, seeds))
    if workers > 1:
        with ThreadPoolExecutor(workers) as pool:
            parts = list(pool.map(lambda job: _batch(params, *job), jobs))
    else:
        parts = [_batch(params, *job) for job in jobs]
    scattered, clicked, retrieved = (np.concatenate(x) for x in zip(*parts))
    return HeraldRecords(scattered, clicked, retrieved)


class HeraldStats(NamedTuple):
    g2_conditional: float | None
    stderr: float | None
    herald_rate: float
    conditional_p: np.ndarray
    heralds: int
    status: str  # "ok", "no-heralds" or "no-photons"


def g2_estimate(counts: np.ndarray) -> tuple[float, float]:
    """g2 and its delta-method standard error from a photon-number histogram."""
    counts = np.asarray(counts, dtype=float)
    total = counts.sum()
    n = np.arange(counts.size)
    x, y = n, n * (n - 1)
    p = counts / total
    m1, m2 = float(x @ p), float(y @ p)
    var_x = float(((x - m1) ** 2) @ p)
    var_y = float(((y - m2) ** 2) @ p)
    cov = float(((x - m1) * (y - m2)) @ p)
    g2 = m2 / m1**2
    var = (var_y / m1**4 + 4 * m2**2 * var_x / m1**6 - 4 * m2 * cov / m1**5) / total
    return g2, float(np.sqrt(max(var, 0.0)))


def heralded_statistics(
    params: SourceParams, trials: int, seed: int, heralded: bool = True, workers: int = 1
) -> HeraldStats:
    """Monte-Carlo conditional photon statistics of the retrieved field.

    ``heralded=False`` keeps every trial, which recovers the unconditioned
    (Poisson, g2 = 1 for ideal retrieval) statistics.
    """
    records = simulate_records(params, trials, seed, workers)
    keep = records.clicked if heralded else np.ones(len(records), dtype=bool)
    heralds = int(keep.sum())
    rate = heralds / len(records)
    if heralds == 0:
        return HeraldStats(None, None, rate, np.zeros(1), 0, "no-heralds")
    counts = np.bincount(records.retrieved[keep])
    dist = counts / heralds
    if counts.size < 2 or counts[1:].sum() == 0:
        return HeraldStats(None, None, rate, dist, heralds, "no-photons")
    g2, err = g2_estimate(counts)
    return HeraldStats(g2, err, rate, dist, heralds, "ok")


# ---------------------------------------------------------------------------
# Collective emission
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class EnsembleGeometry:
    positions: np.ndarray
    k_write: np.ndarray
    k_detect: np.ndarray
    k_read: np.ndarray
    k_final: np.ndarray = field(default=None)

    def __post_init__(self):
        pos = np.atleast_2d(np.asarray(self.positions, dtype=float))
        if pos.ndim != 2 or pos.shape[1] != 3 or pos.shape[0] < 1:
            raise ValueError("positions must be an (N, 3) array with N >= 1")
        object.__setattr__(self, "positions", pos)
        for name in ("k_write", "k_detect", "k_read"):
            object.__setattr__(self, name, np.asarray(getattr(self, name), dtype=float))
        if self.k_final is None:
            object.__setattr__(self, "k_final", self.phase_matched_k_final)
        else:
            object.__setattr__(self, "k_final", np.asarray(self.k_final, dtype=float))

    @property
    def n_atoms(self) -> int:
        return self.positions.shape[0]

    @property
    def phase_matched_k_final(self) -> np.ndarray:
        return self.k_write - self.k_detect + self.k_read

    @property
    def delta_k(self) -> np.ndarray:
        return self.k_write - self.k_detect + self.k_read - self.k_final

    def with_k_final(self, k_final) -> "EnsembleGeometry":
        return EnsembleGeometry(self.positions, self.k_write, self.k_detect, self.k_read, k_final)

    def translated(self, shift) -> "EnsembleGeometry":
        return EnsembleGeometry(self.positions + np.asarray(shift), self.k_write, self.k_detect, self.k_read, self.k_final)


def _phasor_weights(positions: np.ndarray, delta_k: np.ndarray) -> np.ndarray:
    """``|sum_n exp(i dk . x_n)|^2 / N`` for each row of ``delta_k``."""
    phases = np.exp(1j * (np.atleast_2d(delta_k) @ positions.T))
    return np.abs(phases.sum(axis=1)) ** 2 / positions.shape[0]


def collective_enhancement(geom: EnsembleGeometry) -> float:
    """Directional emission weight relative to a single atom."""
    return float(_phasor_weights(geom.positions, geom.delta_k)[0])


def emission_pattern(geom: EnsembleGeometry, directions: np.ndarray, k_final_norm: float) -> np.ndarray:
    """Collective weights for read-out emission along each unit vector in ``directions``."""
    directions = np.atleast_2d(np.asarray(directions, dtype=float))
    k_final = k_final_norm * directions
    delta = geom.phase_matched_k_final[None, :] - k_final
    out = np.empty(directions.shape[0])
    chunk = max(1, 4_000_000 // geom.n_atoms)
    for i in range(0, directions.shape[0], chunk):
        out[i : i + chunk] = _phasor_weights(geom.positions, delta[i : i + chunk])
    return out


def direction_grid(n_theta: int, n_phi: int) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """(theta, phi, unit vectors) on a regular polar grid, poles excluded."""
    theta = (np.arange(n_theta) + 0.5) * np.pi / n_theta
    phi = np.arange(n_phi) * 2 * np.pi / n_phi
    T, F = np.meshgrid(theta, phi, indexing="ij")
    T, F = T.ravel(), F.ravel()
    vectors = np.stack([np.sin(T) * np.cos(F), np.sin(T) * np.sin(F), np.cos(T)], axis=1)
    return T, F, vectors


def gaussian_cloud(n: int, rms_radius: float, rng: np.random.Generator) -> np.ndarray:
    """Isotropic Gaussian positions whose 3D RMS radius is ``rms_radius``."""
    return rng.normal(scale=rms_radius / np.sqrt(3.0), size=(n, 3))


def uniform_ball(n: int, radius: float, rng: np.random.Generator) -> np.ndarray:
    direction = rng.normal(size=(n, 3))
    direction /= np.linalg.norm(direction, axis=1, keepdims=True)
    return direction * radius * rng.random(n)[:, None] ** (1.0 / 3.0)


def standard_geometry(positions: np.ndarray, wavelength: float, detect_angle: float = np.deg2rad(3.0)) -> EnsembleGeometry:
    """Write beam along z, detection tilted by ``detect_angle`` in the x-z plane,
    read beam counter-propagating to the write beam; phase matching then
    sends the retrieved photon along ``-k_detect``."""
    k = 2 * np.pi / wavelength
    k_w = np.array([0.0, 0.0, k])
    k_d = k * np.array([np.sin(detect_angle), 0.0, np.cos(detect_angle)])
    return EnsembleGeometry(positions, k_w, k_d, -k_w)


def pattern_contrast(geom: EnsembleGeometry, weights: np.ndarray) -> float:
    """Phase-matched weight over the median (background) weight of a pattern."""
    peak = collective_enhancement(geom.with_k_final(geom.phase_matched_k_final))
    background = float(np.median(weights))
    if background <= 0:
        raise PhysicsError("background emission vanished; pattern contrast undefined")
    return peak / background
