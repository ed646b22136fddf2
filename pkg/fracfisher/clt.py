"""
Normalized sums T_n = n^{−1/λ}(X_1 + … + X_n) and the inequalities that
govern I_λ along them: scaling, smoothing contraction, the Blachman–Stam
analogue, monotonicity with rate and the U-statistic variance drop.

Every transformation acts on the density's spectral law; densities without
one get a spline law of their sampled spectrum that keeps the |ξ|^λ cusp.
"""

from __future__ import annotations

import itertools
import math
import typing as tp

import numpy as np

from .laws import SampledLaw, ScaledLaw, SpectralLaw, StableLaw
from .lib.errors import IntegrandError, ParameterError
from .lib.utils import gather_threads, get_logger, handle
from .schema import (
    Comparison,
    DensityProfile,
    FisherReport,
    StableOrder,
    SweepEntry,
    SweepReport,
    VarianceDropReport,
)
from .spectral import density_from_law, forward_transform
from .information import relative_fisher

logger = get_logger(__name__)

CONTRACT_FACTOR = 10.0
ABSOLUTE_TOLERANCE = 1e-10
MAX_SWEEP = 32
MIN_SAMPLES = 10_000
MAX_DEGREE = 8
MC_TASKS = 8

Order = tp.Union[StableOrder, float]
Kernel = tp.Literal["linear", "product", "centered_square"]
BaseLaw = tp.Literal["gaussian", "laplace"]

# (σ², μ₄) of the Monte Carlo base laws
BASE_MOMENTS: dict[str, tuple[float, float]] = {
    "gaussian": (1.0, 3.0),
    "laplace": (2.0, 24.0),
}


def law_of(f: DensityProfile, order: Order | None = None) -> SpectralLaw:
    """f's law, or a spline of its sampled spectrum with the |ξ|^λ cusp of ``order``."""
    if f.law is not None:
        return f.law
    spectrum = forward_transform(f)
    lam = None if order is None else StableOrder.of(order).value
    return SampledLaw(f.grid.xi, spectrum.samples, order=lam)


def _tolerance(*reports: FisherReport) -> float:
    return CONTRACT_FACTOR * sum(r.truncation_estimate for r in reports) + ABSOLUTE_TOLERANCE


def normalized_sum_density(f: DensityProfile, n: int, order: Order) -> DensityProfile:
    """Density of T_n, spectrum f̂(ξ n^{−1/λ})^n."""
    order = StableOrder.of(order)
    if n < 1:
        raise ParameterError(f"n must be >= 1, got {n}")
    if n == 1:
        return f
    law = law_of(f, order).scaled(n ** (-1.0 / order.value)).power(n)
    return density_from_law(law, f.grid)


def rescaled_density(f: DensityProfile, a: float, order: Order | None = None) -> DensityProfile:
    """Density of a·X."""
    if not a > 0:
        raise ParameterError(f"scale must be positive, got {a}")
    return density_from_law(ScaledLaw(law_of(f, order), a), f.grid)


@handle
def scaling_identity_check(
    f: DensityProfile,
    order: Order,
    upsilon: float,
    *,
    rtol: float = 1e-3,
    refine: int = 1,
) -> Comparison:
    """I_{λ,υ}(υ^{1/λ}X) against υ^{−2(1−1/λ)} I_λ(X)."""
    order = StableOrder.of(order)
    lam = order.value
    base = relative_fisher(f, order, refine=refine)
    if upsilon == 1.0:
        lhs = base
    else:
        lhs = relative_fisher(rescaled_density(f, upsilon ** (1.0 / lam), order), order, upsilon, refine=refine)
    rhs = upsilon ** (-2.0 * (1.0 - 1.0 / lam)) * base.value
    return Comparison(
        name=f"scaling(upsilon={upsilon:g})",
        lhs=lhs.value,
        rhs=rhs,
        tolerance=rtol * abs(rhs) + _tolerance(lhs, base),
        relation="eq",
    )


def smooth_with_stable(f: DensityProfile, eps: float, order: Order) -> DensityProfile:
    """Density of (1−ε)^{1/λ}X + ε^{1/λ}Z."""
    order = StableOrder.of(order)
    if not 0.0 <= eps < 1.0:
        raise ParameterError(f"eps must lie in [0, 1), got {eps}")
    if eps == 0.0:
        return f
    law = law_of(f, order).scaled((1.0 - eps) ** (1.0 / order.value)) * StableLaw(order.value, eps)
    return density_from_law(law, f.grid)


@handle
def smoothing_contraction_check(
    f: DensityProfile, eps: float, order: Order, *, refine: int = 1
) -> Comparison:
    """I_λ(X_ε) ≤ (1−ε)^{2/λ} I_λ(X)."""
    order = StableOrder.of(order)
    base = relative_fisher(f, order, refine=refine)
    smoothed = relative_fisher(smooth_with_stable(f, eps, order), order, refine=refine)
    return Comparison(
        name=f"smoothing(eps={eps:g})",
        lhs=smoothed.value,
        rhs=(1.0 - eps) ** (2.0 / order.value) * base.value,
        tolerance=_tolerance(smoothed, base),
    )


def mixed_density(f1: DensityProfile, f2: DensityProfile, delta: float, order: Order) -> DensityProfile:
    """Density of δ^{1/λ}X_1 + (1−δ)^{1/λ}X_2."""
    order = StableOrder.of(order)
    lam = order.value
    law = law_of(f1, order).scaled(delta ** (1.0 / lam)) * law_of(f2, order).scaled(
        (1.0 - delta) ** (1.0 / lam)
    )
    return density_from_law(law, f1.grid)


@handle
def blachman_stam_check(
    f1: DensityProfile,
    f2: DensityProfile,
    delta: float,
    order: Order,
    *,
    refine: int = 1,
) -> Comparison:
    """I_λ(δ^{1/λ}X_1 + (1−δ)^{1/λ}X_2) ≤ δ^{2/λ}I_λ(X_1) + (1−δ)^{2/λ}I_λ(X_2)."""
    order = StableOrder.of(order)
    if not 0.0 < delta < 1.0:
        raise ParameterError(f"delta must lie in (0, 1), got {delta}")
    lam = order.value
    i1 = relative_fisher(f1, order, refine=refine)
    i2 = relative_fisher(f2, order, refine=refine)
    mixed = relative_fisher(mixed_density(f1, f2, delta, order), order, refine=refine)
    rhs = delta ** (2.0 / lam) * i1.value + (1.0 - delta) ** (2.0 / lam) * i2.value
    return Comparison(
        name=f"blachman_stam(delta={delta:g})",
        lhs=mixed.value,
        rhs=rhs,
        tolerance=CONTRACT_FACTOR * max(mixed.truncation_estimate, i1.truncation_estimate + i2.truncation_estimate)
        + ABSOLUTE_TOLERANCE,
    )


@handle
def monotonicity_sweep(
    f: DensityProfile, order: Order, n_max: int, *, refine: int = 1
) -> SweepReport:
    """I_λ(T_n) for n = 1..n_max with the step and global bounds.

    The step bound is ((n−1)/n)^{(2−λ)/λ} I_λ(T_{n−1}) and the global bound
    n^{−(2−λ)/λ} I_λ(X). Each entry's tolerance is ten times the truncation
    estimates of the values it compares.
    """
    order = StableOrder.of(order)
    if not 1 <= n_max <= MAX_SWEEP:
        raise ParameterError(f"n_max must lie in [1, {MAX_SWEEP}], got {n_max}")
    rate = order.rate

    def _fisher(n: int) -> FisherReport:
        report = relative_fisher(normalized_sum_density(f, n, order), order, refine=refine)
        if not math.isfinite(report.value):
            raise IntegrandError(f"non-finite Fisher information at n={n}")
        return report

    reports = gather_threads(_fisher, range(1, n_max + 1))
    first = reports[0]
    entries: list[SweepEntry] = []
    for n, report in enumerate(reports, start=1):
        previous = reports[n - 2] if n > 1 else report
        step = ((n - 1) / n) ** rate * previous.value if n > 1 else report.value
        entries.append(
            SweepEntry(
                n=n,
                fisher=report,
                step_bound=step,
                global_bound=n ** (-rate) * first.value,
                tolerance=CONTRACT_FACTOR
                * (report.truncation_estimate + max(previous.truncation_estimate, first.truncation_estimate))
                + ABSOLUTE_TOLERANCE,
            )
        )
        logger.debug("sweep n=%d I=%.6e", n, report.value)
    return SweepReport(lambda_=order.value, entries=entries)


def kernel_overlap_covariance(kernel: Kernel, m: int, k: int, base_law: BaseLaw) -> float:
    """E[Φ(X_S)Φ(X_T)] for index sets of size m sharing k indices."""
    sigma2, mu4 = BASE_MOMENTS[base_law]
    if kernel == "linear":
        return sigma2 if k == 1 else 0.0
    if kernel == "product":
        return sigma2**m if k == m else 0.0
    if kernel == "centered_square":
        return k * (mu4 - sigma2**2) + 2.0 * k * (k - 1) * sigma2**2
    raise ParameterError(f"unknown kernel {kernel!r}")


def kernel_second_moment(kernel: Kernel, m: int, base_law: BaseLaw) -> float:
    """E[Φ²]."""
    return kernel_overlap_covariance(kernel, m, m, base_law)


def u_statistic_second_moment(n: int, m: int, kernel: Kernel, base_law: BaseLaw) -> float:
    """Exact E[U²], summing kernel covariances over subset overlaps."""
    total = math.comb(n, m)
    return sum(
        math.comb(m, k) * math.comb(n - m, m - k) / total * kernel_overlap_covariance(kernel, m, k, base_law)
        for k in range(max(0, 2 * m - n), m + 1)
    )


def product_kernel_second_moment(n: int, m: int, base_law: BaseLaw = "gaussian") -> float:
    """E[U²] = σ^{2m}/C(n, m) for the product kernel."""
    return u_statistic_second_moment(n, m, "product", base_law)


def _check_degree(n: int, m: int, kernel: Kernel) -> None:
    if not 1 <= m <= n <= MAX_DEGREE:
        raise ParameterError(f"need 1 <= m <= n <= {MAX_DEGREE}, got m={m}, n={n}")
    if kernel == "linear" and m != 1:
        raise ParameterError("the linear kernel has degree m = 1")


def _kernel(x: np.ndarray, kernel: Kernel, sigma2: float) -> np.ndarray:
    if kernel == "linear":
        return x[:, 0]
    if kernel == "product":
        return np.prod(x, axis=1)
    s = np.sum(x, axis=1)
    return s * s - x.shape[1] * sigma2


def _u_statistics(
    rng: np.random.Generator, count: int, n: int, m: int, kernel: Kernel, base_law: BaseLaw
) -> np.ndarray:
    sigma2, _ = BASE_MOMENTS[base_law]
    if base_law == "gaussian":
        x = rng.standard_normal((count, n))
    else:
        x = rng.laplace(0.0, 1.0, (count, n))
    subsets = list(itertools.combinations(range(n), m))
    u = np.zeros(count)
    for subset in subsets:
        u += _kernel(x[:, subset], kernel, sigma2)
    return u / len(subsets)


@handle
def variance_drop_mc(
    n: int,
    m: int,
    kernel: Kernel = "product",
    base_law: BaseLaw = "gaussian",
    samples: int = 100_000,
    seed: int = 0,
    *,
    tasks: int = MC_TASKS,
) -> VarianceDropReport:
    """Monte Carlo E[U²] for a degree-m U-statistic against (m/n)E[Φ²].

    Samples are split across ``tasks`` workers, each drawing from its own
    stream spawned from ``seed``; the result depends only on seed and tasks.
    """
    _check_degree(n, m, kernel)
    if base_law not in BASE_MOMENTS:
        raise ParameterError(f"unknown base law {base_law!r}")
    if samples < MIN_SAMPLES:
        raise ParameterError(f"samples must be >= {MIN_SAMPLES}, got {samples}")
    counts = [samples // tasks + (1 if i < samples % tasks else 0) for i in range(tasks)]
    streams = [np.random.default_rng(s) for s in np.random.SeedSequence(seed).spawn(tasks)]
    parts = gather_threads(
        lambda job: _u_statistics(job[0], job[1], n, m, kernel, base_law),
        list(zip(streams, counts)),
    )
    u2 = np.concatenate(parts) ** 2
    phi2 = kernel_second_moment(kernel, m, base_law)
    report = VarianceDropReport(
        n=n,
        m=m,
        kernel=kernel,
        base_law=base_law,
        samples=samples,
        seed=seed,
        var_u=float(np.mean(u2)),
        bound=m / n * phi2,
        stderr=float(np.std(u2, ddof=1) / math.sqrt(samples)),
        phi_second_moment=phi2,
    )
    logger.debug("variance drop n=%d m=%d var_u=%.4g bound=%.4g", n, m, report.var_u, report.bound)
    return report
