"""
Domain-of-attraction diagnostics and the finiteness certificate for the
relative fractional Fisher information of the Linnik density.

With p_λ the Linnik density, g_λ = D_{λ−1}p_λ + (x/λ)p_λ has the closed form
ĝ_λ(ξ) = iξ|ξ|^{2λ−2}/(1+|ξ|^λ)², and I_λ(p_λ) = ∫ g_λ²/p_λ is bounded by
∫ g_λ²(A + B|x|^{1+λ}) once 1/p_λ ≤ A + B|x|^{1+λ}. The weighted integral is
controlled by ∫h_λ² and ∫x⁴h_λ² through an interpolation in the radius R.
"""

from __future__ import annotations

import math
import typing as tp

import numpy as np
from scipy.special import gamma, kv

from .distributions import linnik_density, tail_envelope_fit
from .information import relative_fisher
from .laws import mixture_moment_quadrature
from .lib.errors import IntegrandError, ParameterError
from .lib.proto import ComplexArray, FloatArray
from .lib.utils import get_logger, handle
from .schema import (
    AttractionReport,
    CertificateReport,
    DensityProfile,
    GridSpec,
    HMomentReport,
    MomentReport,
    SpectralProfile,
    StableOrder,
)
from .spectral import density_from_law, fractional_derivative, inverse_transform, x_times

logger = get_logger(__name__)

REMAINDER_THRESHOLD = 0.1
REMAINDER_DECADE = 10.0
STABLE_CHANGE = 0.05
DIVERGENT_CHANGE = 0.2
MOMENT_EXTENSION = 4
PLANCHEREL_TOLERANCE = 0.01

Order = tp.Union[StableOrder, float]


def attraction_remainder(
    F: SpectralProfile, order: Order, *, threshold: float = REMAINDER_THRESHOLD
) -> AttractionReport:
    """R(ξ) = 1 − (1 − F(ξ))/|ξ|^λ on ξ ≠ 0.

    The law is consistent with normal attraction when max |R| over the
    smallest decade [dξ, 10dξ] of grid frequencies stays below ``threshold``.
    """
    order = StableOrder.of(order)
    at_zero = F.at_zero()
    if abs(at_zero - 1.0) > 1e-6:
        raise ParameterError(f"spectrum must equal 1 at xi=0, got {at_zero:.8g}")
    xi = F.xi
    keep = xi != 0
    keep[0] = False
    xi = xi[keep]
    remainder = 1.0 - (1.0 - F.samples[keep].real) / np.abs(xi) ** order.value
    if not np.all(np.isfinite(remainder)):
        raise IntegrandError("remainder is not finite on the frequency grid")
    dxi = F.grid.dxi
    decade = (np.abs(xi) >= dxi * (1 - 1e-9)) & (np.abs(xi) <= REMAINDER_DECADE * dxi * (1 + 1e-9))
    worst = float(np.max(np.abs(remainder[decade])))
    return AttractionReport(
        lambda_=order.value,
        tail_constant_c=order.tail_constant,
        verdict="consistent" if worst < threshold else "inconsistent",
        max_remainder=worst,
        threshold=threshold,
        xi=xi,
        remainder=remainder,
    )


def _moment(f: DensityProfile, nu: float, window: float | None = None) -> float:
    ax = np.abs(f.x)
    w = ax**nu * f.samples
    if window is not None:
        w = np.where(ax <= window, w, 0.0)
    return float(np.sum(w) * f.grid.dx)


@handle
def fractional_moment(
    f: DensityProfile,
    nu: float,
    *,
    stable_change: float = STABLE_CHANGE,
    divergent_change: float = DIVERGENT_CHANGE,
) -> MomentReport:
    """∫|x|^ν f with an extent-doubling divergence test.

    Densities with a law are resampled on a window twice as wide; others are
    compared against their inner half-window.
    """
    if not nu > 0:
        raise ParameterError(f"nu must be positive, got {nu}")
    if f.law is not None:
        value = _moment(f, nu)
        extended = _moment(density_from_law(f.law, f.grid.extended(2)), nu)
    else:
        value = _moment(f, nu, window=f.grid.x_max / 2.0)
        extended = _moment(f, nu)
    change = abs(extended - value) / abs(value) if value else math.inf
    divergent = change > divergent_change
    if not divergent and change > stable_change:
        logger.warning("moment nu=%g changed by %.1f%% under extent doubling", nu, 100 * change)
    return MomentReport(
        nu=nu,
        value=value,
        extended_value=extended,
        relative_change=change,
        divergent=divergent,
    )


def _g_samples(xi: FloatArray, lam: float) -> ComplexArray:
    a = np.abs(xi)
    out = 1j * xi * a ** (2.0 * lam - 2.0) / (1.0 + a**lam) ** 2
    out[0] = 0.0
    return out


def _h_samples(xi: FloatArray, lam: float) -> ComplexArray:
    out = (2j / lam) * xi * np.abs(xi) ** lam / (1.0 + xi * xi) ** 2
    out[0] = 0.0
    return out


def linnik_g_spectrum_analytic(order: Order, grid: GridSpec | None = None) -> SpectralProfile:
    """ĝ_λ(ξ) = iξ|ξ|^{2λ−2}/(1+|ξ|^λ)², zero at the Nyquist sample."""
    lam = StableOrder.of(order).require_fractional().value
    grid = grid or GridSpec()
    return SpectralProfile(grid=grid, samples=_g_samples(grid.xi, lam))


def linnik_h_spectrum_analytic(order: Order, grid: GridSpec | None = None) -> SpectralProfile:
    """ĥ_λ(ξ) = (2i/λ)ξ|ξ|^λ/(1+ξ²)², zero at the Nyquist sample."""
    lam = StableOrder.of(order).require_fractional().value
    grid = grid or GridSpec()
    return SpectralProfile(grid=grid, samples=_h_samples(grid.xi, lam))


def linnik_g_physical(order: Order, grid: GridSpec | None = None) -> FloatArray:
    """g_λ from the sampled Linnik density: D_{λ−1}p + (x/λ)p."""
    order = StableOrder.of(order).require_fractional()
    p = linnik_density(order, grid)
    d = fractional_derivative(p, order.derivative_order)
    return d.samples + x_times(p) / order.value


@handle
def g_equivalence_check(order: Order, grid: GridSpec | None = None) -> float:
    """Relative L² distance between the physical and the closed-form g_λ."""
    order = StableOrder.of(order).require_fractional()
    grid = grid or GridSpec()
    physical = linnik_g_physical(order, grid)
    analytic = inverse_transform(linnik_g_spectrum_analytic(order, grid)).samples
    distance = float(np.linalg.norm(physical - analytic) / np.linalg.norm(analytic))
    logger.debug("g equivalence lambda=%.3g: %.3e", order.value, distance)
    return distance


def g_tail_exponent(order: Order, grid: GridSpec | None = None) -> float:
    """Log-log slope of |g_λ| on x_max/16 ≤ x ≤ x_max/4. Diagnostic only."""
    order = StableOrder.of(order).require_fractional()
    grid = grid or GridSpec()
    g = inverse_transform(linnik_g_spectrum_analytic(order, grid)).samples
    window = (grid.x >= grid.x_max / 16) & (grid.x <= grid.x_max / 4)
    slope = float(np.polyfit(np.log(grid.x[window]), np.log(np.abs(g[window])), 1)[0])
    logger.info("g_lambda tail exponent at lambda=%.3g: %.3f", order.value, slope)
    return slope


def interpolation_constant(lam: float) -> tuple[float, float]:
    """(κ, C_λ) from minimizing (2R)^{1+λ}L + R^{λ−3}X over R.

    The minimizer is R⁴ = κX/L with κ = (3−λ)/((1+λ)2^{1+λ}).
    """
    kappa = (3.0 - lam) / ((1.0 + lam) * 2.0 ** (1.0 + lam))
    c = 2.0 ** (1.0 + lam) * kappa ** ((1.0 + lam) / 4.0) + kappa ** (-(3.0 - lam) / 4.0)
    return kappa, c


def _h_asymptote(xi: FloatArray, lam: float) -> ComplexArray:
    """(2i/λ)ξ(1+ξ²)^{(λ−4)/2}: same large-|ξ| behavior as ĥ_λ, smooth at 0."""
    out = (2j / lam) * xi * (1.0 + xi * xi) ** ((lam - 4.0) / 2.0)
    out[0] = 0.0
    return out


def _h_asymptote_physical(x: FloatArray, lam: float) -> FloatArray:
    """Inverse transform of :func:`_h_asymptote`, a Bessel-K profile.

    With ν = (4−λ)/2 and μ = ν − 1/2 it is
    −(2/λ) sign(x) (|x|/2)^μ K_{1−μ}(|x|) / (√π Γ(ν)), zero at the origin.
    """
    nu = (4.0 - lam) / 2.0
    mu = nu - 0.5
    r = np.abs(x)
    out = np.zeros_like(r)
    nz = r > 0
    out[nz] = (r[nz] / 2.0) ** mu * kv(1.0 - mu, r[nz])
    return -(2.0 / lam) * np.sign(x) * out / (math.sqrt(math.pi) * gamma(nu))


@handle
def h_moment_bounds(order: Order, grid: GridSpec | None = None) -> HMomentReport:
    """∫h², ∫x⁴h² two ways, ∫|x|^{1+λ}h² and the interpolated bound.

    Physical moments use a window MOMENT_EXTENSION times wider at the same
    spacing. ĥ_λ decays only like |ξ|^{λ−3}, so its large-|ξ| asymptote is
    subtracted before the inverse transform and added back in closed form.
    The spectral fourth moment is (1/2π)∫|ĥ″|² with centered second
    differences on the wide window's frequency grid, away from the Nyquist
    sample. A mismatch above PLANCHEREL_TOLERANCE raises.
    """
    order = StableOrder.of(order).require_fractional()
    lam = order.value
    grid = grid or GridSpec()

    wide = grid.extended(MOMENT_EXTENSION)
    smooth = _h_samples(wide.xi, lam) - _h_asymptote(wide.xi, lam)
    h = inverse_transform(SpectralProfile(grid=wide, samples=smooth)).samples
    h = h + _h_asymptote_physical(wide.x, lam)
    x = wide.x
    h2 = h * h
    l2 = float(np.sum(h2) * wide.dx)
    x4 = float(np.sum(x**4 * h2) * wide.dx)
    direct = float(np.sum(np.abs(x) ** (1.0 + lam) * h2) * wide.dx)

    H = _h_samples(wide.xi, lam)[1:]
    d2 = (H[2:] - 2.0 * H[1:-1] + H[:-2]) / wide.dxi**2
    x4_spectral = float(np.sum(np.abs(d2) ** 2) * wide.dxi / (2.0 * math.pi))

    kappa, c = interpolation_constant(lam)
    interp = c * l2 ** ((3.0 - lam) / 4.0) * x4_spectral ** ((1.0 + lam) / 4.0)
    values = (l2, x4, x4_spectral, direct, interp)
    if not all(math.isfinite(v) and v > 0 for v in values):
        raise IntegrandError(f"h moments are not finite and positive: {values}")
    report = HMomentReport(
        lambda_=lam,
        l2=l2,
        x4=x4,
        x4_spectral=x4_spectral,
        interp=interp,
        direct=direct,
        c_lambda=c,
        radius=(kappa * x4_spectral / l2) ** 0.25,
    )
    if report.plancherel_mismatch > PLANCHEREL_TOLERANCE:
        raise IntegrandError(
            f"fourth moment of h disagrees between x and xi space at lambda={lam}: "
            f"{x4:.6g} vs {x4_spectral:.6g} ({100 * report.plancherel_mismatch:.2f}%)"
        )
    return report


@handle
def finiteness_certificate(order: Order, grid: GridSpec | None = None) -> CertificateReport:
    """I_λ(p_λ) against ∫g_λ²(A + B|x|^{1+λ}) and the Jensen weight moment."""
    order = StableOrder.of(order).require_fractional()
    lam = order.value
    grid = grid or GridSpec()
    p = linnik_density(order, grid)
    fisher = relative_fisher(p, order)
    envelope = tail_envelope_fit(p, order)
    g = inverse_transform(linnik_g_spectrum_analytic(order, grid)).samples
    weight = envelope.A + envelope.B * np.abs(grid.x) ** (1.0 + lam)
    bound = float(np.sum(g * g * weight) * grid.dx)
    jensen, error = mixture_moment_quadrature(lam - 2.0, lam, 2.0)
    logger.debug("jensen factor %.10g (quadrature error %.1e)", jensen, error)
    report = CertificateReport(
        lambda_=lam,
        fisher=fisher.value,
        envelope_bound=bound,
        jensen_factor=jensen,
        A=envelope.A,
        B=envelope.B,
        truncation_estimate=fisher.truncation_estimate,
    )
    if not all(math.isfinite(v) for v in (report.fisher, report.envelope_bound, report.jensen_factor)):
        raise IntegrandError(f"certificate component is not finite at lambda={lam}")
    return report
