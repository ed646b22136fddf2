"""
Fractional scores and the relative fractional Fisher information I_{λ,υ}.

When the density carries an analytic law the score numerator is assembled
in Fourier space (see :func:`fracfisher.spectral.law_score_numerator`);
otherwise it is built from the sampled density, with x·f corrected for the
periodic images of the algebraic tail fitted from its spectrum.
"""

from __future__ import annotations

import math
import typing as tp

import numpy as np

from .lib.errors import IntegrandError, ParameterError, SupportError
from .lib.proto import FloatArray
from .lib.utils import get_logger, handle
from .schema import DensityProfile, FisherReport, GridSpec, RealProfile, ScoreProfile, StableOrder
from .spectral import density_from_law, fractional_derivative, law_score_numerator, x_times

logger = get_logger(__name__)

SUPPORT_FACTOR = 1e-12
INPUT_MASS_TOLERANCE = 1e-3

Order = tp.Union[StableOrder, float]


class FisherIntegrand(tp.NamedTuple):
    grid: GridSpec
    values: FloatArray
    mask: np.ndarray
    threshold: float
    method: tp.Literal["spectral", "physical"]


def _support(f: DensityProfile, support_factor: float) -> tuple[np.ndarray, float]:
    if f.mass_deficit > INPUT_MASS_TOLERANCE:
        raise ParameterError(f"density mass deficit {f.mass_deficit:.2e} exceeds {INPUT_MASS_TOLERANCE:.0e}")
    threshold = support_factor * float(np.max(f.samples))
    mask = f.samples > threshold
    if not np.any(mask):
        raise SupportError("no grid sample exceeds the support threshold")
    return mask, threshold


def _numerator(f: DensityProfile, alpha: float, drift: float) -> tuple[RealProfile, str]:
    if f.law is not None:
        return law_score_numerator(f.law, f.grid, alpha, drift), "spectral"
    d = fractional_derivative(f, alpha)
    if not drift:
        return d, "physical"
    # D_{λ−1}f pairs with a tail of order λ = α + 1; the classical derivative has none
    order = alpha + 1.0 if alpha < 1.0 else None
    return RealProfile(grid=f.grid, samples=d.samples + drift * x_times(f, order)), "physical"


def _score(f: DensityProfile, alpha: float, drift: float, support_factor: float) -> ScoreProfile:
    mask, threshold = _support(f, support_factor)
    numerator, _ = _numerator(f, alpha, drift)
    values = np.zeros(f.grid.n_points)
    values[mask] = numerator.samples[mask] / f.samples[mask]
    return ScoreProfile(
        grid=f.grid,
        samples=values,
        mask=mask,
        support_threshold=threshold,
        truncation=numerator.truncation,
    )


def fractional_score(
    f: DensityProfile, order: Order, *, support_factor: float = SUPPORT_FACTOR
) -> ScoreProfile:
    """D_{λ−1}f / f on {f > ε_supp}."""
    order = StableOrder.of(order)
    return _score(f, order.derivative_order, 0.0, support_factor)


def relative_fractional_score(
    f: DensityProfile,
    order: Order,
    upsilon: float = 1.0,
    *,
    support_factor: float = SUPPORT_FACTOR,
) -> ScoreProfile:
    """D_{λ−1}f / f + x/(λυ) on {f > ε_supp}."""
    order = StableOrder.of(order)
    if not upsilon > 0:
        raise ParameterError(f"upsilon must be positive, got {upsilon}")
    return _score(f, order.derivative_order, 1.0 / (order.value * upsilon), support_factor)


def _refined(f: DensityProfile, refine: int) -> DensityProfile:
    if refine < 1:
        raise ParameterError(f"refine must be >= 1, got {refine}")
    if refine == 1 or f.law is None:
        return f
    return density_from_law(f.law, f.grid.refined(refine))


def fisher_integrand(
    f: DensityProfile,
    alpha: float,
    drift: float,
    *,
    support_factor: float = SUPPORT_FACTOR,
    refine: int = 1,
) -> FisherIntegrand:
    """(numerator)²/f on the support, zero elsewhere."""
    f = _refined(f, refine)
    mask, threshold = _support(f, support_factor)
    numerator, method = _numerator(f, alpha, drift)
    h = np.zeros(f.grid.n_points)
    h[mask] = numerator.samples[mask] ** 2 / f.samples[mask]
    bad = ~np.isfinite(h)
    if np.any(bad):
        x = f.x[bad]
        raise IntegrandError(
            f"non-finite Fisher integrand on {int(bad.sum())} samples in x in [{x.min():.4g}, {x.max():.4g}]"
        )
    return FisherIntegrand(f.grid, h, mask, threshold, tp.cast(tp.Any, method))


def fisher_tail_estimate(h: FloatArray, grid: GridSpec, order: float) -> float:
    """Mass of the integrand beyond the window, extrapolated from |x| = x_max/2.

    The integrand decays like |x|^{1−3λ}; both half-lines contribute.
    """
    quarter = grid.n_points // 4
    half_x = grid.x_max / 2.0
    level = float(h[grid.center + quarter] + h[grid.center - quarter])
    return level * half_x / (3.0 * order - 2.0)


@handle
def relative_fisher(
    f: DensityProfile,
    order: Order,
    upsilon: float = 1.0,
    *,
    support_factor: float = SUPPORT_FACTOR,
    refine: int = 1,
) -> FisherReport:
    """I_{λ,υ}(f) = ∫ (D_{λ−1}f/f + x/(λυ))² f over {f > ε_supp}, trapezoid rule."""
    order = StableOrder.of(order)
    if not upsilon > 0:
        raise ParameterError(f"upsilon must be positive, got {upsilon}")
    integrand = fisher_integrand(
        f,
        order.derivative_order,
        1.0 / (order.value * upsilon),
        support_factor=support_factor,
        refine=refine,
    )
    grid = integrand.grid
    value = float(np.sum(integrand.values) * grid.dx)
    truncation = fisher_tail_estimate(integrand.values, grid, order.value)
    logger.debug(
        "I_{%.3g,%.3g} = %.6e (truncation %.2e, %s)", order.value, upsilon, value, truncation, integrand.method
    )
    return FisherReport(
        lambda_=order.value,
        upsilon=upsilon,
        value=max(value, 0.0),
        support_threshold=integrand.threshold,
        truncation_estimate=truncation,
        n_points=grid.n_points,
        x_max=grid.x_max,
        method=integrand.method,
    )


@handle
def relative_fisher_gaussian(
    f: DensityProfile, sigma: float, *, support_factor: float = SUPPORT_FACTOR
) -> float:
    """∫ (f′/f + x/σ)² f over {f > ε_supp}; σ is the reference variance."""
    if not sigma > 0:
        raise ParameterError(f"sigma must be positive, got {sigma}")
    integrand = fisher_integrand(f, 1.0, 1.0 / sigma, support_factor=support_factor)
    value = float(np.sum(integrand.values) * integrand.grid.dx)
    if not math.isfinite(value):
        raise IntegrandError("Gaussian-relative Fisher information is not finite")
    return value
