import math

import numpy as np
import pytest

from fracfisher import (
    dirac_density,
    entropy_bound_check,
    entropy_sweep,
    evolve,
    forward_transform,
    linnik_density,
    relative_entropy_lambda,
    stable_density,
)
from fracfisher.entropy import integrand_domination, time_nodes
from fracfisher.lib.errors import OrderError, ParameterError


def test_evolve_at_time_zero(linnik15):
    assert evolve(linnik15, 0.0, 0.75) is linnik15


def test_evolve_dirac_gives_stable_kernel(small_grid):
    u = evolve(dirac_density(small_grid), 0.5, 0.75)
    expected = np.exp(-0.5 * np.abs(small_grid.xi) ** 1.5)
    np.testing.assert_allclose(forward_transform(u).samples.real, expected, atol=1e-9)


def test_evolve_is_a_semigroup(linnik15):
    two_steps = evolve(evolve(linnik15, 0.3, 0.75), 0.7, 0.75)
    one_step = evolve(linnik15, 1.0, 0.75)
    assert np.max(np.abs(two_steps.samples - one_step.samples)) <= 1e-10


@pytest.mark.parametrize("t", [0.5, 1.0, 2.0, 5.0, 10.0])
def test_evolve_conserves_mass(linnik15, t):
    assert evolve(linnik15, t, 0.75).mass == pytest.approx(linnik15.mass, abs=1e-6)


@pytest.mark.parametrize("alpha", [0.5, 0.3, 1.2])
def test_evolve_order_range(linnik15, alpha):
    with pytest.raises(OrderError):
        evolve(linnik15, 1.0, alpha)


def test_evolve_rejects_negative_time(linnik15):
    with pytest.raises(ParameterError):
        evolve(linnik15, -0.1, 0.75)


def test_time_nodes():
    t = time_nodes(50.0, 64)
    assert t[0] == 0.0
    assert t[-1] == pytest.approx(50.0)
    assert np.diff(np.log1p(t)) == pytest.approx(math.log(51.0) / 63)


def test_entropy_of_stable_vanishes(stable15):
    report = relative_entropy_lambda(stable15, 1.5)
    assert report.total <= 1e-3
    assert report.nodes == 64
    assert len(report.times) == len(report.integrand) == 64


def test_entropy_rejects_bad_quadrature(linnik15):
    with pytest.raises(ParameterError):
        relative_entropy_lambda(linnik15, 1.5, t_max=0.0)
    with pytest.raises(ParameterError):
        relative_entropy_lambda(linnik15, 1.5, nodes=1)


@pytest.mark.slow
def test_entropy_bound_for_linnik(linnik15):
    comparison, report = entropy_bound_check(linnik15, 1.5)
    assert comparison.holds
    assert report.bound_factor == pytest.approx(3.0)
    assert report.tail_bound == pytest.approx(report.fisher_at_zero / 51.0)
    assert all(h >= 0.0 for h in report.integrand)
    assert all(c.holds for c in integrand_domination(report))


@pytest.mark.slow
def test_entropy_bound_factor_grows_with_order(reference_grid):
    comparison, report = entropy_bound_check(linnik_density(1.8, reference_grid), 1.8, nodes=32)
    assert report.bound_factor == pytest.approx(9.0)
    assert comparison.holds


def test_entropy_bound_needs_fractional_order(reference_grid):
    with pytest.raises(OrderError):
        entropy_bound_check(stable_density(2.0, reference_grid), 2.0)


def test_integrand_is_dominated_at_first_nodes(linnik15):
    report = relative_entropy_lambda(linnik15, 1.5, t_max=1.0, nodes=4)
    assert report.integrand[0] == pytest.approx(report.fisher_at_zero)
    assert all(c.holds for c in integrand_domination(report))


@pytest.mark.slow
def test_entropy_sweep(linnik15):
    report = entropy_sweep(linnik15, 1.5, 3, nodes=16)
    assert [e.n for e in report.entries] == [1, 2, 3]
    assert report.holds
