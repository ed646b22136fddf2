import numpy as np
import pytest

from fracfisher import (
    DensityProfile,
    GridSpec,
    fractional_score,
    gaussian_density,
    inverse_transform,
    laplace_density,
    linnik_density,
    linnik_g_spectrum_analytic,
    read_profile_csv,
    relative_fisher,
    relative_fisher_gaussian,
    relative_fractional_score,
    stable_density,
)
from fracfisher.lib.errors import IntegrandError, ParameterError, SupportError


def test_stable_score_is_linear(stable15, reference_grid):
    score = fractional_score(stable15, 1.5)
    core = score.mask & (np.abs(reference_grid.x) <= 2.0)
    np.testing.assert_allclose(score.samples[core], -reference_grid.x[core] / 1.5, atol=1e-3)


def test_score_of_symmetric_density_is_odd(linnik15, reference_grid):
    score = fractional_score(linnik15, 1.5)
    c = reference_grid.center
    k = np.arange(1, c)
    assert np.all(score.mask[c + k] == score.mask[c - k])
    np.testing.assert_allclose(score.samples[c + k], -score.samples[c - k], atol=1e-8)


def test_score_excludes_samples_below_threshold(linnik15):
    score = fractional_score(linnik15, 1.5)
    assert score.support_threshold == pytest.approx(1e-12 * linnik15.samples.max())
    assert np.all(score.samples[~score.mask] == 0.0)
    assert score.retained().size == int(score.mask.sum())


@pytest.mark.parametrize("lam", [1.2, 1.5, 1.8])
def test_relative_score_of_stable_vanishes(reference_grid, lam):
    score = relative_fractional_score(stable_density(lam, reference_grid), lam)
    assert np.max(np.abs(score.retained())) <= 1e-3


def test_large_upsilon_recovers_plain_score(linnik15, reference_grid):
    upsilon = 1e6
    plain = fractional_score(linnik15, 1.5)
    relative = relative_fractional_score(linnik15, 1.5, upsilon)
    core = plain.mask & (np.abs(reference_grid.x) <= 10.0)
    gap = np.abs(relative.samples[core] - plain.samples[core])
    assert np.max(gap) <= 10.0 / (1.5 * upsilon) + 1e-9


def test_linnik_relative_score_matches_closed_form(linnik15, reference_grid):
    score = relative_fractional_score(linnik15, 1.5)
    g = inverse_transform(linnik_g_spectrum_analytic(1.5, reference_grid)).samples
    core = score.mask & (np.abs(reference_grid.x) <= 50.0)
    np.testing.assert_allclose(score.samples[core], g[core] / linnik15.samples[core], atol=1e-9)


def test_score_needs_positive_upsilon(linnik15):
    with pytest.raises(ParameterError):
        relative_fractional_score(linnik15, 1.5, 0.0)


def test_empty_support_rejected(small_grid):
    empty = DensityProfile(grid=small_grid, samples=np.zeros(small_grid.n_points), mass_deficit=0.0)
    with pytest.raises(SupportError):
        fractional_score(empty, 1.5)


def test_mass_deficit_above_input_tolerance_rejected(small_grid):
    z = stable_density(1.5, small_grid)
    half = DensityProfile(grid=small_grid, samples=0.5 * z.samples, mass_deficit=0.5)
    with pytest.raises(ParameterError):
        relative_fisher(half, 1.5)


@pytest.mark.parametrize("lam", [1.2, 1.5, 1.8])
def test_fisher_vanishes_on_stable(reference_grid, lam):
    report = relative_fisher(stable_density(lam, reference_grid), lam)
    assert report.value <= 1e-4
    assert report.truncation_estimate >= 0.0


def test_gaussian_order_two(reference_grid):
    standard = gaussian_density(reference_grid, variance=1.0)
    assert relative_fisher(standard, 2.0).value == pytest.approx(0.25, abs=1e-3)
    assert relative_fisher(gaussian_density(reference_grid, variance=2.0), 2.0).value <= 1e-6


def test_order_two_reduces_to_gaussian_relative(reference_grid):
    f = gaussian_density(reference_grid, variance=1.0)
    assert relative_fisher(f, 2.0).value == pytest.approx(relative_fisher_gaussian(f, 2.0), abs=1e-6)
    assert relative_fisher_gaussian(f, 2.0) == pytest.approx(0.25, abs=1e-3)
    assert relative_fisher_gaussian(f, 1.0) <= 1e-6


def test_gaussian_relative_needs_positive_sigma(reference_grid):
    with pytest.raises(ParameterError):
        relative_fisher_gaussian(gaussian_density(reference_grid), 0.0)


@pytest.mark.parametrize("lam", [1.2, 1.5, 1.8])
def test_linnik_fisher_is_positive(reference_grid, lam):
    report = relative_fisher(linnik_density(lam, reference_grid), lam)
    assert report.value > 0.01
    assert report.method == "spectral"
    assert report.grid == reference_grid


@pytest.mark.parametrize("make", [laplace_density, gaussian_density])
def test_non_stable_densities_have_positive_fisher(reference_grid, make):
    assert relative_fisher(make(reference_grid), 1.5).value > 0.01


@pytest.mark.slow
def test_linnik_fisher_against_finer_grid(linnik15):
    coarse = relative_fisher(linnik15, 1.5).value
    fine = relative_fisher(linnik_density(1.5, GridSpec(n_points=2**18, x_max=400.0)), 1.5).value
    assert coarse == pytest.approx(fine, rel=1e-2)


def test_refine_resamples_the_law(linnik15):
    report = relative_fisher(linnik15, 1.5, refine=2)
    assert report.n_points == 2 * linnik15.grid.n_points
    assert report.x_max == linnik15.grid.x_max
    assert report.value == pytest.approx(relative_fisher(linnik15, 1.5).value, rel=1e-2)


def test_support_threshold_stability(linnik15):
    default = relative_fisher(linnik15, 1.5)
    halved = relative_fisher(linnik15, 1.5, support_factor=5e-13)
    assert abs(default.value - halved.value) <= max(default.truncation_estimate, 1e-12)


def _without_law(f: DensityProfile) -> DensityProfile:
    return DensityProfile(grid=f.grid, samples=f.samples, mass_deficit=f.mass_deficit)


@pytest.mark.parametrize("lam", [1.2, 1.5, 1.8])
def test_fisher_vanishes_on_sampled_stable(small_grid, lam):
    report = relative_fisher(_without_law(stable_density(lam, small_grid)), lam)
    assert report.method == "physical"
    assert report.value <= 1e-4


def test_fisher_vanishes_on_stable_profile_from_csv(small_grid, tmp_path):
    path = stable_density(1.2, small_grid).to_csv(tmp_path / "stable.csv")
    profile = read_profile_csv(path)
    assert profile.law is None
    assert relative_fisher(profile, 1.2).value <= 1e-4


@pytest.mark.parametrize("lam", [1.5, 1.8])
def test_sampled_linnik_matches_law_path(reference_grid, lam):
    p = linnik_density(lam, reference_grid)
    spectral = relative_fisher(p, lam)
    physical = relative_fisher(_without_law(p), lam)
    assert physical.method == "physical"
    assert physical.value == pytest.approx(spectral.value, rel=1e-2)


def test_sampled_score_matches_law_path(linnik15, reference_grid):
    spectral = relative_fractional_score(linnik15, 1.5)
    physical = relative_fractional_score(_without_law(linnik15), 1.5)
    core = spectral.mask & (np.abs(reference_grid.x) <= 10.0)
    np.testing.assert_allclose(physical.samples[core], spectral.samples[core], atol=1e-4)


def test_non_finite_integrand_names_region(small_grid):
    z = stable_density(1.5, small_grid)
    samples = np.array(z.samples)
    samples[5] = 5e-324
    tiny = DensityProfile(grid=small_grid, samples=samples, mass_deficit=z.mass_deficit)
    with pytest.raises(IntegrandError, match="x in"):
        relative_fisher(tiny, 1.5, support_factor=0.0)
