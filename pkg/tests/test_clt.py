import math

import numpy as np
import pytest

from fracfisher import (
    DensityProfile,
    blachman_stam_check,
    forward_transform,
    gaussian_density,
    linnik_density,
    monotonicity_sweep,
    normalized_sum_density,
    product_kernel_second_moment,
    relative_fisher,
    scaling_identity_check,
    smooth_with_stable,
    smoothing_contraction_check,
    stable_density,
    u_statistic_second_moment,
    variance_drop_mc,
)
from fracfisher.clt import kernel_overlap_covariance, law_of, rescaled_density
from fracfisher.laws import LinnikLaw
from fracfisher.lib.errors import ParameterError, TruncationError


def _without_law(p: DensityProfile) -> DensityProfile:
    return DensityProfile(grid=p.grid, samples=p.samples, mass_deficit=p.mass_deficit)


def test_single_summand_is_identity(linnik15):
    assert normalized_sum_density(linnik15, 1, 1.5) is linnik15


@pytest.mark.parametrize("n", [2, 5])
def test_stable_is_a_fixed_point(stable15, n):
    tn = normalized_sum_density(stable15, n, 1.5)
    assert np.max(np.abs(tn.samples - stable15.samples)) <= 1e-10


def test_normalized_sum_spectrum(linnik15, reference_grid):
    t2 = normalized_sum_density(linnik15, 2, 1.5)
    a = np.abs(reference_grid.xi) * 2.0 ** (-1.0 / 1.5)
    expected = (1.0 / (1.0 + a**1.5)) ** 2
    np.testing.assert_allclose(forward_transform(t2).samples.real, expected, atol=1e-10)


def test_normalized_sums_compose(linnik15):
    t6 = normalized_sum_density(linnik15, 6, 1.5)
    t2 = normalized_sum_density(linnik15, 2, 1.5)
    t3_of_t2 = normalized_sum_density(t2, 3, 1.5)
    assert np.max(np.abs(t6.samples - t3_of_t2.samples)) <= 1e-6


def test_sampled_law_fallback(small_grid):
    p = linnik_density(1.5, small_grid)
    from_law = normalized_sum_density(p, 2, 1.5)
    from_samples = normalized_sum_density(_without_law(p), 2, 1.5)
    assert np.max(np.abs(from_law.samples - from_samples.samples)) <= 1e-4


def test_sampled_law_refuses_to_extrapolate(small_grid):
    p = _without_law(linnik_density(1.5, small_grid))
    with pytest.raises(TruncationError):
        rescaled_density(p, 2.0)


def test_sampled_law_keeps_the_cusp(linnik15, reference_grid):
    law = law_of(_without_law(linnik15), 1.5)
    assert law.tail_order == 1.5
    assert law.tail_weight == pytest.approx(1.0, rel=1e-4)
    xi = 0.63 * reference_grid.xi[reference_grid.center + 1 : reference_grid.center + 201]
    np.testing.assert_allclose(law.derivative(xi), LinnikLaw(1.5).derivative(xi), atol=1e-5)


def test_sweep_on_sampled_linnik_matches_law_path(linnik15):
    from_law = monotonicity_sweep(linnik15, 1.5, 4)
    from_samples = monotonicity_sweep(_without_law(linnik15), 1.5, 4)
    assert from_samples.holds
    np.testing.assert_allclose(from_samples.values, from_law.values, rtol=2e-2)


def test_sweep_on_sampled_stable_stays_zero(small_grid):
    report = monotonicity_sweep(_without_law(stable_density(1.5, small_grid)), 1.5, 4)
    assert max(report.values) <= 1e-4


def test_normalized_sum_needs_positive_n(linnik15):
    with pytest.raises(ParameterError):
        normalized_sum_density(linnik15, 0, 1.5)


def test_scaling_identity_trivial_cases(linnik15, stable15):
    same = scaling_identity_check(linnik15, 1.5, 1.0)
    assert same.relation == "eq"
    assert same.lhs == same.rhs
    for upsilon in (0.5, 2.0):
        check = scaling_identity_check(stable15, 1.5, upsilon)
        assert check.holds
        assert abs(check.lhs) <= 1e-4


@pytest.mark.slow
@pytest.mark.parametrize("upsilon", [0.5, 2.0])
def test_scaling_identity_linnik(linnik15, upsilon):
    check = scaling_identity_check(linnik15, 1.5, upsilon, refine=8)
    assert check.lhs == pytest.approx(check.rhs, rel=1e-3)


def test_smoothing_without_noise(linnik15):
    assert smooth_with_stable(linnik15, 0.0, 1.5) is linnik15
    with pytest.raises(ParameterError):
        smooth_with_stable(linnik15, 1.0, 1.5)


def test_smoothing_keeps_stable_law(stable15):
    smoothed = smooth_with_stable(stable15, 0.4, 1.5)
    assert np.max(np.abs(smoothed.samples - stable15.samples)) <= 1e-10


@pytest.mark.parametrize("eps", [0.1, 0.3, 0.5])
def test_smoothing_contracts_linnik(linnik15, eps):
    check = smoothing_contraction_check(linnik15, eps, 1.5)
    assert check.holds
    assert check.lhs < check.rhs


@pytest.mark.slow
def test_smoothing_limit_is_monotone(reference_grid):
    p = linnik_density(1.5, reference_grid)
    base = relative_fisher(p, 1.5, refine=4).value
    gaps = [
        abs(relative_fisher(smooth_with_stable(p, eps, 1.5), 1.5, refine=4).value - base)
        for eps in (0.2, 0.1, 0.05, 0.025)
    ]
    assert all(b < a for a, b in zip(gaps, gaps[1:]))


def test_blachman_stam_equality_for_stable_pair(stable15):
    check = blachman_stam_check(stable15, stable15, 0.3, 1.5)
    assert check.holds
    assert abs(check.lhs - check.rhs) <= 1e-4


def test_blachman_stam_linnik_pair(linnik15):
    check = blachman_stam_check(linnik15, linnik15, 0.5, 1.5)
    assert check.holds
    assert check.margin > 0


@pytest.mark.slow
def test_blachman_stam_catalog(reference_grid):
    catalog = {
        "linnik": linnik_density(1.5, reference_grid),
        "smoothed": smooth_with_stable(linnik_density(1.5, reference_grid), 0.3, 1.5),
        "stable": stable_density(1.5, reference_grid),
    }
    for f1 in catalog.values():
        for f2 in catalog.values():
            for delta in (0.25, 0.5, 0.75):
                assert blachman_stam_check(f1, f2, delta, 1.5, refine=2).holds


@pytest.mark.parametrize("delta", [0.0, 1.0, 1.5])
def test_blachman_stam_delta_range(linnik15, delta):
    with pytest.raises(ParameterError):
        blachman_stam_check(linnik15, linnik15, delta, 1.5)


def test_sweep_on_stable_stays_zero(stable15):
    report = monotonicity_sweep(stable15, 1.5, 4)
    assert report.holds
    assert max(report.values) <= 1e-8


@pytest.mark.slow
@pytest.mark.parametrize("lam", [1.2, 1.5, 1.8])
def test_linnik_sweep_decreases_at_rate(reference_grid, lam):
    report = monotonicity_sweep(linnik_density(lam, reference_grid), lam, 8)
    assert [e.n for e in report.entries] == list(range(1, 9))
    assert report.holds
    assert all(b <= a for a, b in zip(report.values, report.values[1:]))


def test_sweep_bounds(linnik15):
    report = monotonicity_sweep(linnik15, 1.5, 3)
    first = report.entries[0]
    assert first.step_bound == first.value == first.global_bound
    third = report.entries[2]
    assert third.global_bound == pytest.approx(3 ** (-1.0 / 3.0) * first.value)
    assert third.step_bound == pytest.approx((2.0 / 3.0) ** (1.0 / 3.0) * report.entries[1].value)


@pytest.mark.parametrize("n_max", [0, 33])
def test_sweep_range(linnik15, n_max):
    with pytest.raises(ParameterError):
        monotonicity_sweep(linnik15, 1.5, n_max)


def test_u_statistic_second_moment_oracle():
    assert product_kernel_second_moment(4, 2) == pytest.approx(1.0 / 6.0)
    assert product_kernel_second_moment(6, 3) == pytest.approx(1.0 / 20.0)
    assert product_kernel_second_moment(4, 2, "laplace") == pytest.approx(4.0 / 6.0)
    assert u_statistic_second_moment(5, 1, "linear", "gaussian") == pytest.approx(1.0 / 5.0)
    assert u_statistic_second_moment(4, 4, "centered_square", "gaussian") == pytest.approx(
        kernel_overlap_covariance("centered_square", 4, 4, "gaussian")
    )


def test_centered_square_covariance():
    # var((X1 + X2)^2) for standard normals is 2·(2σ²)² = 8
    assert kernel_overlap_covariance("centered_square", 2, 2, "gaussian") == pytest.approx(8.0)
    assert kernel_overlap_covariance("centered_square", 2, 0, "laplace") == 0.0


def test_linear_kernel_variance_equality():
    report = variance_drop_mc(4, 1, "linear", "gaussian", samples=100_000, seed=0)
    assert abs(report.var_u - report.bound) <= 3.0 * report.stderr
    assert report.bound == pytest.approx(0.25)


@pytest.mark.parametrize("n, m", [(4, 2), (6, 3)])
def test_product_kernel_variance_drop(n, m):
    report = variance_drop_mc(n, m, "product", "gaussian", samples=100_000, seed=1)
    assert report.holds
    assert report.var_u == pytest.approx(product_kernel_second_moment(n, m), abs=5.0 * report.stderr)
    assert report.var_u < report.bound


def test_centered_square_against_exact_moment():
    report = variance_drop_mc(4, 2, "centered_square", "laplace", samples=200_000, seed=2)
    exact = u_statistic_second_moment(4, 2, "centered_square", "laplace")
    assert report.var_u == pytest.approx(exact, abs=5.0 * report.stderr)
    assert report.holds


def test_variance_drop_is_deterministic():
    a = variance_drop_mc(4, 2, samples=20_000, seed=7)
    b = variance_drop_mc(4, 2, samples=20_000, seed=7)
    c = variance_drop_mc(4, 2, samples=20_000, seed=8)
    assert a.to_json() == b.to_json()
    assert a.var_u != c.var_u


@pytest.mark.parametrize(
    "kwargs",
    [
        {"n": 4, "m": 2, "samples": 100},
        {"n": 2, "m": 3},
        {"n": 9, "m": 2},
        {"n": 4, "m": 2, "kernel": "linear"},
        {"n": 4, "m": 2, "base_law": "cauchy"},
    ],
)
def test_variance_drop_rejects(kwargs):
    with pytest.raises(ParameterError):
        variance_drop_mc(**kwargs)


def test_gaussian_is_not_a_fixed_point(reference_grid):
    f = gaussian_density(reference_grid)
    t4 = normalized_sum_density(f, 4, 1.5)
    assert math.isfinite(relative_fisher(t4, 1.5).value)
    assert np.max(np.abs(t4.samples - f.samples)) > 1e-3
