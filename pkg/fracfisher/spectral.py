"""
Discrete Fourier pair on a symmetric grid and the Fourier multipliers built
on it.

Convention: f̂(ξ) = ∫ e^{−iξx} f(x) dx. The forward transform is the
trapezoid quadrature of that integral on the periodic grid, the inverse is
its exact discrete inverse. Multipliers that are odd in ξ vanish at ξ = 0
and at the unpaired Nyquist sample, which keeps real inputs real.
"""

from __future__ import annotations

import csv
import math
import warnings
from pathlib import Path

import numpy as np
from scipy import fft
from scipy.special import gamma, zeta

from .laws import SpectralCusp, SpectralLaw, fit_cusp
from .lib.errors import (
    GridError,
    GridMismatchError,
    OrderError,
    SpectralSymmetryError,
    TruncationError,
    TruncationWarning,
)
from .lib.proto import ComplexArray, FloatArray
from .lib.utils import get_logger, ttl_cache
from .schema import DensityProfile, GridSpec, RealProfile, SpectralProfile, _frozen

logger = get_logger(__name__)

SYMMETRY_TOLERANCE = 1e-8
IMAGINARY_TOLERANCE = 1e-8
BOUNDARY_DECAY = 1e-6
MASS_TOLERANCE = 1e-4
# spectra are N complex samples each; refined grids make them large
LAW_CACHE_SIZE = 8


def make_grid(n_points: int, x_max: float) -> GridSpec:
    if not isinstance(n_points, (int, np.integer)) or n_points < 64 or n_points & (n_points - 1):
        raise GridError(f"n_points must be a power of two >= 64, got {n_points}")
    if not (x_max > 0 and math.isfinite(x_max)):
        raise GridError(f"x_max must be positive and finite, got {x_max}")
    return GridSpec(n_points=int(n_points), x_max=float(x_max))


def _same_grid(*profiles: RealProfile | SpectralProfile) -> GridSpec:
    grid = profiles[0].grid
    for p in profiles[1:]:
        if p.grid != grid:
            raise GridMismatchError(f"grid mismatch: {grid!r} vs {p.grid!r}")
    return grid


def _dft(samples: FloatArray, grid: GridSpec) -> ComplexArray:
    return grid.dx * fft.fftshift(fft.fft(fft.ifftshift(samples)))


def _idft(samples: ComplexArray, grid: GridSpec) -> ComplexArray:
    return fft.fftshift(fft.ifft(fft.ifftshift(samples))) / grid.dx


def symmetry_defect(samples: ComplexArray, grid: GridSpec) -> float:
    """Largest violation of F(−ξ) = conj F(ξ), including the Nyquist sample."""
    c = grid.center
    pos = samples[c + 1 :]
    neg = samples[c - 1 : 0 : -1]
    pair = float(np.max(np.abs(pos - np.conj(neg)))) if pos.size else 0.0
    return max(pair, abs(samples[c].imag), abs(samples[0].imag))


def boundary_ratio(samples: FloatArray) -> float:
    peak = float(np.max(np.abs(samples)))
    if peak == 0.0:
        return 0.0
    return max(abs(samples[0]), abs(samples[-1]), abs(samples[1])) / peak


def tail_truncation(samples: FloatArray, grid: GridSpec) -> float:
    """Estimate of ∫_{|x|>x_max}|f| from the decay between x_max/2 and x_max.

    A local power law |x|^{−k} is fitted to the window averages; slower than
    |x|^{−2} decay is treated as |x|^{−2}.
    """
    n = grid.n_points
    w = max(n // 256, 1)
    outer = 0.5 * (np.mean(np.abs(samples[1 : 1 + w])) + np.mean(np.abs(samples[-w:])))
    q = n // 4
    inner = 0.5 * (
        np.mean(np.abs(samples[q - w // 2 : q + w // 2 + 1]))
        + np.mean(np.abs(samples[n - q - w // 2 : n - q + w // 2 + 1]))
    )
    if outer == 0.0:
        return 0.0
    k = math.log(inner / outer) / math.log(2.0) if inner > outer else 0.0
    k = max(k, 2.0)
    return float(2.0 * outer * grid.x_max / (k - 1.0))


def _warn_boundary(samples: FloatArray, operation: str) -> None:
    ratio = boundary_ratio(samples)
    if ratio >= BOUNDARY_DECAY:
        message = f"{operation}: boundary samples at {ratio:.2e} of the peak"
        logger.warning(message)
        warnings.warn(message, TruncationWarning, stacklevel=3)


def forward_transform(f: RealProfile) -> SpectralProfile:
    if not np.all(np.isfinite(f.samples)):
        raise ValueError("forward_transform needs finite samples")
    return SpectralProfile(grid=f.grid, samples=_dft(f.samples, f.grid))


def inverse_transform(F: SpectralProfile, *, tolerance: float = SYMMETRY_TOLERANCE) -> RealProfile:
    defect = symmetry_defect(F.samples, F.grid)
    if defect > tolerance:
        raise SpectralSymmetryError(
            f"spectrum is not conjugate symmetric: defect {defect:.3e} > {tolerance:.1e}"
        )
    values = _idft(F.samples, F.grid)
    return RealProfile(grid=F.grid, samples=values.real, truncation=tail_truncation(values.real, F.grid))


def as_density(
    samples: FloatArray,
    grid: GridSpec,
    *,
    law: SpectralLaw | None = None,
    tolerance: float = MASS_TOLERANCE,
) -> DensityProfile:
    """Clips inversion ringing, records the clipped mass and checks the mass."""
    samples = np.array(samples, dtype=np.float64)
    negative = samples < 0
    clipped = float(-np.sum(samples[negative]) * grid.dx)
    samples[negative] = 0.0
    mass = float(np.sum(samples) * grid.dx)
    deficit = abs(1.0 - mass)
    truncation = tail_truncation(samples, grid)
    if clipped > 0:
        logger.debug("clipped %.3e of negative ringing", clipped)
    if deficit > tolerance:
        raise TruncationError(f"mass deficit {deficit:.3e} exceeds tolerance {tolerance:.1e}")
    return DensityProfile(
        grid=grid,
        samples=samples,
        mass_deficit=deficit,
        clipped_mass=clipped,
        truncation=truncation,
        law=law,
    )


@ttl_cache(maxsize=LAW_CACHE_SIZE)
def law_samples(law: SpectralLaw, grid: GridSpec) -> ComplexArray:
    """φ(ξ) on the centered frequency grid, with the Nyquist sample made real."""
    values = np.array(law.value(grid.xi), dtype=np.complex128)
    values[0] = values[0].real
    return _frozen(values)


@ttl_cache(maxsize=LAW_CACHE_SIZE)
def law_derivative_samples(law: SpectralLaw, grid: GridSpec) -> ComplexArray:
    """φ′(ξ) on the centered frequency grid; odd, so the Nyquist sample is zero."""
    values = np.array(law.derivative(grid.xi), dtype=np.complex128)
    values[0] = 0.0
    return _frozen(values)


def law_spectrum(law: SpectralLaw, grid: GridSpec) -> SpectralProfile:
    return SpectralProfile(grid=grid, samples=law_samples(law, grid))


def density_from_law(
    law: SpectralLaw, grid: GridSpec, *, tolerance: float = MASS_TOLERANCE
) -> DensityProfile:
    """Band-limited density whose grid spectrum equals the law's samples."""
    values = _idft(law_samples(law, grid), grid).real
    return as_density(values, grid, law=law, tolerance=tolerance)


def riesz_constant(alpha: float) -> float:
    """S(α) = 1/(√π Γ((1−α)/2) Γ(α/2)), symmetric under α ↦ 1 − α."""
    if not (0.0 < alpha < 1.0):
        raise OrderError(f"riesz_constant needs 0 < alpha < 1, got {alpha}")
    return float(1.0 / (math.sqrt(math.pi) * gamma((1.0 - alpha) / 2.0) * gamma(alpha / 2.0)))


def abs_multiplier(grid: GridSpec, alpha: float) -> FloatArray:
    """|ξ|^α, zero at ξ = 0."""
    a = np.abs(grid.xi)
    out = np.zeros_like(a)
    nz = a > 0
    out[nz] = a[nz] ** alpha
    return out


def odd_multiplier(grid: GridSpec, alpha: float) -> ComplexArray:
    """i·sign(ξ)|ξ|^α, zero at ξ = 0 and at the Nyquist sample."""
    out = 1j * np.sign(grid.xi) * abs_multiplier(grid, alpha)
    out[0] = 0.0
    return out


def _apply(f: RealProfile, multiplier: ComplexArray | FloatArray) -> RealProfile:
    values = _idft(_dft(f.samples, f.grid) * multiplier, f.grid)
    scale = max(float(np.max(np.abs(values.real))), 1.0)
    residue = float(np.max(np.abs(values.imag)))
    if residue > IMAGINARY_TOLERANCE * scale:
        raise SpectralSymmetryError(f"multiplier output has imaginary residue {residue:.3e}")
    return RealProfile(grid=f.grid, samples=values.real, truncation=tail_truncation(values.real, f.grid))


def riesz_potential(f: RealProfile, alpha: float) -> RealProfile:
    """Multiplier |ξ|^α."""
    if not (0.0 < alpha < 1.0):
        raise OrderError(f"riesz_potential needs 0 < alpha < 1, got {alpha}")
    _warn_boundary(f.samples, "riesz_potential")
    return _apply(f, abs_multiplier(f.grid, alpha))


def fractional_derivative(f: RealProfile, alpha: float) -> RealProfile:
    """Multiplier i·sign(ξ)|ξ|^α. α = 1 is the classical derivative."""
    if not (0.0 < alpha <= 1.0):
        raise OrderError(f"fractional_derivative needs 0 < alpha <= 1, got {alpha}")
    _warn_boundary(f.samples, "fractional_derivative")
    return _apply(f, odd_multiplier(f.grid, alpha))


def law_score_numerator(law: SpectralLaw, grid: GridSpec, alpha: float, drift: float = 0.0) -> RealProfile:
    """D_α f + drift·x·f for f with law φ, built as i·sign(ξ)|ξ|^α φ + i·drift·φ′.

    Exact on band samples; no cancellation of algebraic tails across the
    window boundary.
    """
    if not (0.0 < alpha <= 1.0):
        raise OrderError(f"score numerator needs 0 < alpha <= 1, got {alpha}")
    spectrum = odd_multiplier(grid, alpha) * law_samples(law, grid)
    if drift:
        spectrum = spectrum + 1j * drift * law_derivative_samples(law, grid)
    values = _idft(spectrum, grid)
    scale = max(float(np.max(np.abs(values.real))), 1.0)
    residue = float(np.max(np.abs(values.imag)))
    if residue > IMAGINARY_TOLERANCE * scale:
        raise SpectralSymmetryError(f"score numerator has imaginary residue {residue:.3e}")
    return RealProfile(grid=grid, samples=values.real, truncation=tail_truncation(values.real, grid))


def convolve(f: RealProfile, g: RealProfile) -> RealProfile:
    grid = _same_grid(f, g)
    values = _idft(_dft(f.samples, grid) * _dft(g.samples, grid), grid).real
    if isinstance(f, DensityProfile) and isinstance(g, DensityProfile):
        law = f.law * g.law if f.law is not None and g.law is not None else None
        return as_density(values, grid, law=law, tolerance=math.inf)
    return RealProfile(grid=grid, samples=values, truncation=tail_truncation(values, grid))


def tail_coefficient(power: float, coefficient: float) -> float:
    """b in f(x) ≈ b|x|^{−1−s} produced by the term c|ξ|^s of 1 − φ(ξ)."""
    return coefficient * float(gamma(1.0 + power)) * math.sin(math.pi * power / 2.0) / math.pi


def image_correction(grid: GridSpec, cusp: SpectralCusp) -> FloatArray:
    """Periodic image term of x·f for an algebraic tail.

    On the grid, x·f_per differs from (x f)_per by L·Σ_{m≠0} m f(x + mL),
    L = 2·x_max. Each cusp term c|ξ|^s gives a tail b|y|^{−1−s}, whose image
    sum has a closed form in Hurwitz zeta functions. The result is the term
    to add to x·f_per.
    """
    L = 2.0 * grid.x_max
    q = grid.x / L
    out = np.zeros(grid.n_points)
    for power, coefficient in zip(cusp.powers, cusp.coefficients):
        s = 1.0 + power
        b = tail_coefficient(power, coefficient)
        plus = zeta(s - 1.0, 1.0 + q) - q * zeta(s, 1.0 + q)
        minus = zeta(s - 1.0, 1.0 - q) + q * zeta(s, 1.0 - q)
        out += L * b * L ** (-s) * (plus - minus)
    return out


def tail_cusp(f: DensityProfile, order: float | None = None) -> SpectralCusp | None:
    """The cusp behind f's algebraic tail.

    Taken from the law when f carries one whose tail order matches; fitted
    from the sampled spectrum when f has no law and ``order`` is in (1, 2).
    """
    law = f.law
    if law is not None:
        if law.tail_weight is None or law.tail_order is None:
            return None
        if order is not None and abs(order - law.tail_order) >= 1e-12:
            return None
        return SpectralCusp((law.tail_order,), (law.tail_weight,))
    if order is None or not 1.0 < order < 2.0:
        return None
    cusp = fit_cusp(f.grid.xi, _dft(f.samples, f.grid), order)
    logger.debug("fitted tail weight %.8g at order %.3g", cusp.weight, order)
    return cusp


def x_times(f: DensityProfile, order: float | None = None) -> FloatArray:
    """x·f on the grid, with the periodic image correction when the
    algebraic tail is known or can be fitted."""
    values = f.x * f.samples
    cusp = tail_cusp(f, order)
    if cusp is not None:
        values = values + image_correction(f.grid, cusp)
    return values


def read_profile_csv(path: str | Path, *, tolerance: float = 1e-3) -> DensityProfile:
    """Reads an (x, value) CSV written by :meth:`RealProfile.to_csv` as a density."""
    path = Path(path)
    header: dict[str, str] = {}
    rows: list[float] = []
    with path.open(newline="") as fh:
        first = fh.readline()
        if first.startswith("#"):
            for item in first[1:].split(","):
                key, _, value = item.strip().partition("=")
                header[key] = value
        reader = csv.reader(fh)
        next(reader)
        rows = [float(r[1]) for r in reader if r]
    grid = make_grid(int(header.get("n_points", len(rows))), float(header["x_max"]))
    return as_density(np.asarray(rows), grid, tolerance=tolerance)
