import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy import stats

from atomqip.dlcz import (
    EnsembleGeometry,
    SourceParams,
    analytic_conditional_g2,
    collective_enhancement,
    conditional_g2_exact,
    direction_grid,
    emission_pattern,
    g2_estimate,
    g2_from_distribution,
    gaussian_cloud,
    heralded_statistics,
    pattern_contrast,
    simulate_records,
    standard_geometry,
    uniform_ball,
)

WAVELENGTH = 780e-9
K = 2 * math.pi / WAVELENGTH


# --- source parameters -------------------------------------------------------


def test_source_validation():
    with pytest.raises(ValueError):
        SourceParams(-0.1)
    with pytest.raises(ValueError):
        SourceParams(0.1, detector_efficiency=1.5)


# --- g2 from distributions ---------------------------------------------------


@given(st.floats(1e-3, 30.0))
def test_poisson_g2_is_one(mu):
    n = np.arange(int(mu + 12 * math.sqrt(mu) + 40))
    p = stats.poisson.pmf(n, mu)
    assert abs(g2_from_distribution(p / p.sum()) - 1) < 1e-9


def test_fock_states():
    assert g2_from_distribution([0, 1]) == 0.0
    assert g2_from_distribution([0, 0, 1]) == 0.5


@given(st.floats(0.0, 1.0).filter(lambda x: x > 0))
def test_support_on_zero_one_gives_zero(p1):
    assert g2_from_distribution([1 - p1, p1]) == 0.0


def test_zero_mean_rejected():
    with pytest.raises(ValueError):
        g2_from_distribution([1.0, 0.0])
    with pytest.raises(ValueError):
        g2_from_distribution([0.5, 0.2])


# --- analytic oracle ---------------------------------------------------------


@pytest.mark.parametrize("mu", [1e-4, 0.005, 0.02, 0.1, 1.0, 5.0])
def test_analytic_matches_closed_form(mu):
    # zero-truncated Poisson: E[n(n-1)] / E[n]^2 * P(n>0) = 1 - exp(-mu)
    assert analytic_conditional_g2(mu) == pytest.approx(-math.expm1(-mu), rel=1e-12)


def test_small_mu_limit():
    assert abs(analytic_conditional_g2(1e-4) / 1e-4 - 1) < 1e-3


def test_small_mu_monotone_approach():
    ratios = [analytic_conditional_g2(mu) / mu for mu in (0.1, 0.03, 0.01, 0.003, 0.001)]
    assert all(b > a for a, b in zip(ratios, ratios[1:]))
    assert ratios[-1] < 1


def test_large_mu_heralding_barely_matters():
    assert abs(analytic_conditional_g2(5.0) - 1) < 0.1


def test_exact_with_ideal_detector_matches_oracle():
    assert conditional_g2_exact(SourceParams(0.02)) == pytest.approx(analytic_conditional_g2(0.02), rel=1e-12)


def test_dark_counts_raise_g2_toward_one():
    clean = conditional_g2_exact(SourceParams(0.02, detector_efficiency=0.5))
    noisy = conditional_g2_exact(SourceParams(0.02, detector_efficiency=0.5, dark_count_prob=0.01))
    assert clean < noisy < 1


def test_retrieval_efficiency_cancels():
    a = conditional_g2_exact(SourceParams(0.05, 0.6, 1e-3, 1.0))
    b = conditional_g2_exact(SourceParams(0.05, 0.6, 1e-3, 0.3))
    assert a == pytest.approx(b, rel=1e-12)


# --- Monte Carlo -------------------------------------------------------------


@pytest.mark.parametrize("mu", [0.005, 0.02, 0.1])
def test_monte_carlo_matches_oracle(mu):
    s = heralded_statistics(SourceParams(mu), 1_000_000, seed=1)
    assert s.status == "ok"
    assert abs(s.g2_conditional - analytic_conditional_g2(mu)) < 3 * s.stderr


def test_monte_carlo_near_mu():
    s = heralded_statistics(SourceParams(0.02), 1_000_000, seed=2)
    assert abs(s.g2_conditional / 0.02 - 1) < 0.25


def test_monte_carlo_with_imperfections():
    params = SourceParams(0.05, 0.5, 2e-3, 0.7)
    s = heralded_statistics(params, 1_000_000, seed=3)
    assert abs(s.g2_conditional - conditional_g2_exact(params)) < 3 * s.stderr


def test_unheralded_poisson():
    s = heralded_statistics(SourceParams(0.1), 1_000_000, seed=4, heralded=False)
    assert s.herald_rate == 1.0
    assert abs(s.g2_conditional - 1) < 3 * s.stderr


def test_no_light_with_dark_counts():
    s = heralded_statistics(SourceParams(0.0, dark_count_prob=0.01), 100_000, seed=5)
    assert s.heralds > 0
    assert s.status == "no-photons"
    assert s.g2_conditional is None
    np.testing.assert_array_equal(s.conditional_p, [1.0])


def test_no_heralds_reported():
    s = heralded_statistics(SourceParams(0.0), 1000, seed=6)
    assert s.status == "no-heralds" and s.g2_conditional is None and s.heralds == 0


def test_records_consistent():
    rec = simulate_records(SourceParams(0.5, 0.5, 0.0, 0.5), 10_000, seed=7)
    assert len(rec) == 10_000
    assert np.all(rec.retrieved <= rec.scattered)
    assert not np.any(rec.clicked & (rec.scattered == 0))
    first = rec[0]
    assert first.scattered == rec.scattered[0] and first.clicked == rec.clicked[0]


@pytest.mark.parametrize("workers", [2, 4])
def test_worker_count_does_not_change_records(workers):
    params = SourceParams(0.3, 0.8, 1e-3, 0.9)
    a = simulate_records(params, 300_000, seed=8)
    b = simulate_records(params, 300_000, seed=8, workers=workers)
    for field in ("scattered", "clicked", "retrieved"):
        assert np.array_equal(getattr(a, field), getattr(b, field))


def test_seed_changes_records():
    a = simulate_records(SourceParams(0.3), 1000, seed=1)
    b = simulate_records(SourceParams(0.3), 1000, seed=2)
    assert not np.array_equal(a.scattered, b.scattered)


def test_g2_estimate_frozen_case():
    g2, err = g2_estimate(np.array([0, 50, 50]))
    # p1 = p2 = 1/2: m1 = 1.5, m2 = 1
    assert g2 == pytest.approx(1 / 2.25)
    assert err > 0


# --- collective emission -----------------------------------------------------


def test_phase_matched_gives_n(rng):
    geom = standard_geometry(gaussian_cloud(1000, 50 * WAVELENGTH, rng), WAVELENGTH)
    assert collective_enhancement(geom) == pytest.approx(1000, rel=1e-12)


def test_single_atom_is_one(rng):
    geom = EnsembleGeometry(rng.normal(size=(1, 3)), [0, 0, K], [K, 0, 0], [0, 0, -K], k_final=rng.normal(size=3) * K)
    assert collective_enhancement(geom) == pytest.approx(1.0, rel=1e-12)


def test_mismatched_average_near_one():
    rng = np.random.default_rng(0)
    values = []
    for _ in range(100):
        pos = uniform_ball(1000, 50 * WAVELENGTH, rng)
        values.append(collective_enhancement(EnsembleGeometry(pos, [0, 0, K], [0, 0, 0], [0, 0, 0], k_final=[0, 0, 0])))
    assert abs(np.mean(values) - 1) < 0.3


@given(st.integers(0, 2**32 - 1))
def test_translation_invariance(seed):
    rng = np.random.default_rng(seed)
    geom = EnsembleGeometry(gaussian_cloud(200, 5 * WAVELENGTH, rng), [0, 0, K], [K, 0, 0], [0, 0, -K], k_final=[0, K, 0])
    moved = geom.translated(rng.normal(size=3) * 1e-5)
    assert abs(collective_enhancement(moved) - collective_enhancement(geom)) < 1e-9 * max(1.0, collective_enhancement(geom))


def test_gaussian_cloud_rms_radius():
    pos = gaussian_cloud(200_000, 3.0, np.random.default_rng(9))
    assert math.sqrt(np.mean(np.sum(pos**2, axis=1))) == pytest.approx(3.0, rel=1e-2)


def test_uniform_ball_inside():
    pos = uniform_ball(10_000, 2.0, np.random.default_rng(10))
    assert np.max(np.linalg.norm(pos, axis=1)) <= 2.0


def test_positions_shape_validation():
    with pytest.raises(ValueError):
        EnsembleGeometry(np.zeros((3, 2)), [0, 0, 1], [0, 0, 1], [0, 0, 1])


# --- emission pattern --------------------------------------------------------


@pytest.fixture(scope="module")
def grid():
    return direction_grid(30, 60)


def test_large_cloud_directional(grid):
    geom = standard_geometry(gaussian_cloud(2000, 50 * WAVELENGTH, np.random.default_rng(0)), WAVELENGTH)
    _, _, dirs = grid
    weights = emission_pattern(geom, dirs, K)
    assert pattern_contrast(geom, weights) > 100
    # the brightest grid direction is the one closest to the phase-matched direction
    target = geom.phase_matched_k_final / np.linalg.norm(geom.phase_matched_k_final)
    assert np.argmax(weights) == np.argmax(dirs @ target)


def test_small_cloud_isotropic(grid):
    geom = standard_geometry(gaussian_cloud(2000, 0.1 * WAVELENGTH, np.random.default_rng(0)), WAVELENGTH)
    weights = emission_pattern(geom, grid[2], K)
    assert weights.max() / weights.min() < 2


def test_single_atom_flat(grid):
    geom = standard_geometry(np.zeros((1, 3)), WAVELENGTH)
    np.testing.assert_allclose(emission_pattern(geom, grid[2], K), 1.0, rtol=1e-12)


def test_direction_grid_unit_vectors(grid):
    np.testing.assert_allclose(np.linalg.norm(grid[2], axis=1), 1.0, rtol=1e-12)
