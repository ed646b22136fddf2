"""Analytic characteristic functions.

A law knows its characteristic function φ(ξ) and the derivative φ′(ξ).
Normalized sums, stable smoothing, diffusion and Blachman–Stam mixtures are
compositions of laws, so every derived density is sampled from a closed form
rather than from interpolated grid data.
"""

from __future__ import annotations

import math
import typing as tp
from abc import ABC, abstractmethod
from dataclasses import dataclass, field

import numpy as np
from scipy import integrate
from scipy.interpolate import CubicSpline

from .lib.errors import ConvergenceError, ParameterError, TruncationError
from .lib.proto import ComplexArray, FloatArray
from .lib.utils import get_logger

logger = get_logger(__name__)

MIXTURE_U_RANGE = 12.0
MIXTURE_TOLERANCE = 1e-6
MIXTURE_START_NODES = 256
MIXTURE_MAX_NODES = 2**15
MIXTURE_CHUNK = 128
MOMENT_RTOL = 1e-8
CUSP_POINTS = 6
# the ξ² column is dropped when it is this close to ξ^λ or ξ^{2λ}
CUSP_SEPARATION = 0.1


def _abs_power(xi: FloatArray, p: float) -> FloatArray:
    a = np.abs(xi)
    out = np.zeros_like(a)
    nz = a > 0
    out[nz] = a[nz] ** p
    return out


class SpectralCusp(tp.NamedTuple):
    """1 − φ(ξ) ≈ Σ c_k|ξ|^{s_k} near ξ = 0, over the fractional powers s_k = kλ."""

    powers: tuple[float, ...]
    coefficients: tuple[float, ...]

    @property
    def weight(self) -> float:
        return self.coefficients[0]


def fit_cusp(xi: FloatArray, samples: ComplexArray, order: float, points: int = CUSP_POINTS) -> SpectralCusp:
    """Least-squares fit of 1 − Re φ on the smallest positive frequencies.

    The basis is |ξ|^λ, |ξ|^{2λ}, |ξ|^{3λ} and, unless it is nearly collinear
    with them, ξ²; the even ξ² term carries no algebraic tail and is not
    returned.
    """
    if not 1.0 < order < 2.0:
        raise ParameterError(f"cusp fit needs 1 < order < 2, got {order}")
    xi = np.asarray(xi, dtype=np.float64)
    positive = np.flatnonzero(xi > 0)
    positive = positive[np.argsort(xi[positive])][:points]
    powers = [order, 2.0 * order, 3.0 * order]
    columns = list(powers)
    if min(2.0 - order, 2.0 * order - 2.0) >= CUSP_SEPARATION:
        columns.append(2.0)
    if positive.size < len(columns):
        raise ParameterError(f"cusp fit needs {len(columns)} positive frequencies, got {positive.size}")
    x = xi[positive]
    y = 1.0 - np.real(np.asarray(samples)[positive])
    t = x / x[0]
    design = np.stack([t**p for p in columns], axis=1)
    coef, *_ = np.linalg.lstsq(design, y, rcond=None)
    coef = coef / x[0] ** np.asarray(columns)
    return SpectralCusp(tuple(powers), tuple(float(c) for c in coef[: len(powers)]))


class SpectralLaw(ABC):
    """Characteristic function of a real symmetric law."""

    @abstractmethod
    def value(self, xi: FloatArray) -> ComplexArray:
        pass

    @abstractmethod
    def derivative(self, xi: FloatArray) -> ComplexArray:
        pass

    @property
    def tail_weight(self) -> float | None:
        """κ in 1 − φ(ξ) ≈ κ|ξ|^λ near 0, or None when unknown."""
        return None

    @property
    def tail_order(self) -> float | None:
        return None

    def scaled(self, a: float) -> SpectralLaw:
        return ScaledLaw(self, a)

    def power(self, n: int) -> SpectralLaw:
        return PowerLaw(self, n)

    def __mul__(self, other: SpectralLaw) -> SpectralLaw:
        return ProductLaw((self, other))


@dataclass(frozen=True)
class UnitLaw(SpectralLaw):
    """Point mass at 0."""

    def value(self, xi):
        return np.ones_like(xi, dtype=np.complex128)

    def derivative(self, xi):
        return np.zeros_like(xi, dtype=np.complex128)


@dataclass(frozen=True)
class StableLaw(SpectralLaw):
    """e^{−t|ξ|^λ}."""

    order: float
    t: float = 1.0

    def value(self, xi):
        return np.exp(-self.t * _abs_power(xi, self.order)).astype(np.complex128)

    def derivative(self, xi):
        body = np.exp(-self.t * _abs_power(xi, self.order))
        return (-self.t * self.order * np.sign(xi) * _abs_power(xi, self.order - 1) * body).astype(
            np.complex128
        )

    @property
    def tail_weight(self):
        return self.t if self.order < 2 else None

    @property
    def tail_order(self):
        return self.order


@dataclass(frozen=True)
class LinnikLaw(SpectralLaw):
    """1/(1 + |ξ|^λ); λ = 2 is the Laplace law."""

    order: float

    def value(self, xi):
        return (1.0 / (1.0 + _abs_power(xi, self.order))).astype(np.complex128)

    def derivative(self, xi):
        d = 1.0 + _abs_power(xi, self.order)
        return (-self.order * np.sign(xi) * _abs_power(xi, self.order - 1) / d**2).astype(
            np.complex128
        )

    @property
    def tail_weight(self):
        return 1.0 if self.order < 2 else None

    @property
    def tail_order(self):
        return self.order


@dataclass(frozen=True)
class GaussianLaw(SpectralLaw):
    """e^{−σ²ξ²/2}."""

    variance: float = 1.0

    def value(self, xi):
        return np.exp(-0.5 * self.variance * xi**2).astype(np.complex128)

    def derivative(self, xi):
        return (-self.variance * xi * np.exp(-0.5 * self.variance * xi**2)).astype(np.complex128)


@dataclass(frozen=True)
class ScaledLaw(SpectralLaw):
    """Law of a·X: φ(aξ)."""

    base: SpectralLaw
    a: float

    def value(self, xi):
        return self.base.value(self.a * xi)

    def derivative(self, xi):
        return self.a * self.base.derivative(self.a * xi)

    @property
    def tail_weight(self):
        k, order = self.base.tail_weight, self.base.tail_order
        return None if k is None else k * self.a**order

    @property
    def tail_order(self):
        return self.base.tail_order


@dataclass(frozen=True)
class PowerLaw(SpectralLaw):
    """Law of a sum of n independent copies: φ^n."""

    base: SpectralLaw
    n: int

    def value(self, xi):
        return self.base.value(xi) ** self.n

    def derivative(self, xi):
        if self.n == 1:
            return self.base.derivative(xi)
        return self.n * self.base.value(xi) ** (self.n - 1) * self.base.derivative(xi)

    @property
    def tail_weight(self):
        k = self.base.tail_weight
        return None if k is None else self.n * k

    @property
    def tail_order(self):
        return self.base.tail_order


@dataclass(frozen=True)
class ProductLaw(SpectralLaw):
    """Law of a sum of independent variables."""

    factors: tuple[SpectralLaw, ...]

    def value(self, xi):
        out = np.ones_like(xi, dtype=np.complex128)
        for f in self.factors:
            out = out * f.value(xi)
        return out

    def derivative(self, xi):
        values = [f.value(xi) for f in self.factors]
        out = np.zeros_like(xi, dtype=np.complex128)
        for i, f in enumerate(self.factors):
            term = f.derivative(xi)
            for j, v in enumerate(values):
                if j != i:
                    term = term * v
            out = out + term
        return out

    @property
    def tail_order(self):
        orders = {f.tail_order for f in self.factors if f.tail_weight is not None}
        return orders.pop() if len(orders) == 1 else None

    @property
    def tail_weight(self):
        order = self.tail_order
        if order is None:
            return None
        return sum(f.tail_weight or 0.0 for f in self.factors if f.tail_order == order)


@dataclass(frozen=True, eq=False)
class SampledLaw(SpectralLaw):
    """Cubic spline through spectrum samples on a centered frequency grid.

    With ``order`` in (1, 2) the law is taken as symmetric with a |ξ|^λ cusp
    at the origin: φ = e^{−κ|ξ|^λ} + R(|ξ|^λ), κ fitted from the smallest
    frequencies and R splined in u = |ξ|^λ, where it is smooth. The
    derivative then carries the exact λ|ξ|^{λ−1} factor. Without ``order``
    real and imaginary parts are splined in ξ.

    Outside the sampled band the law is zero when the band edge is negligible
    and a :class:`TruncationError` otherwise.
    """

    xi_grid: np.ndarray = field(repr=False, compare=False)
    samples: np.ndarray = field(repr=False, compare=False)
    edge_tolerance: float = 1e-12
    order: float | None = None

    def __post_init__(self):
        # the unpaired Nyquist sample is dropped so the knots are symmetric
        xi = np.asarray(self.xi_grid[1:], dtype=np.float64)
        s = np.asarray(self.samples[1:], dtype=np.complex128)
        object.__setattr__(self, "_edge", float(np.max(np.abs(s[[0, -1]]))))
        object.__setattr__(self, "_band", float(xi[-1]))
        if self.order is None or not 1.0 < self.order < 2.0:
            object.__setattr__(self, "_cusp", None)
            object.__setattr__(self, "_re", CubicSpline(xi, s.real))
            object.__setattr__(self, "_im", CubicSpline(xi, s.imag))
            return
        zero = int(np.flatnonzero(xi == 0.0)[0])
        even = 0.5 * (s[zero:].real + s[zero::-1].real)
        half = xi[zero:]
        cusp = fit_cusp(half, even, self.order)
        stable = StableLaw(self.order, max(cusp.weight, 0.0))
        rest = even - stable.value(half).real
        object.__setattr__(self, "_cusp", cusp)
        object.__setattr__(self, "_stable", stable)
        object.__setattr__(self, "_rest", CubicSpline(half**self.order, rest))

    def _inside(self, xi: FloatArray) -> np.ndarray:
        inside = np.abs(xi) <= self._band
        if not np.all(inside) and self._edge > self.edge_tolerance:
            raise TruncationError(
                f"interpolation outside the frequency band |xi| <= {self._band:.4g} "
                f"with band-edge magnitude {self._edge:.3g}"
            )
        return inside

    def value(self, xi):
        inside = self._inside(xi)
        out = np.zeros_like(xi, dtype=np.complex128)
        x = xi[inside]
        if self._cusp is None:
            out[inside] = self._re(x) + 1j * self._im(x)
        else:
            out[inside] = self._stable.value(x) + self._rest(_abs_power(x, self.order))
        return out

    def derivative(self, xi):
        inside = self._inside(xi)
        out = np.zeros_like(xi, dtype=np.complex128)
        x = xi[inside]
        if self._cusp is None:
            out[inside] = self._re(x, 1) + 1j * self._im(x, 1)
        else:
            chain = self.order * np.sign(x) * _abs_power(x, self.order - 1.0)
            out[inside] = self._stable.derivative(x) + self._rest(_abs_power(x, self.order), 1) * chain
        return out

    @property
    def tail_weight(self):
        return None if self._cusp is None else self._cusp.weight

    @property
    def tail_order(self):
        return None if self._cusp is None else self.order

    @property
    def cusp(self) -> SpectralCusp | None:
        return self._cusp


def mixture_weight(s, a: float, b: float = 2.0):
    """g(s, a, b) = (b/π) sin(πa/b) s^{a−1} / (1 + s^{2a} + 2 s^a cos(πa/b))."""
    s = np.asarray(s, dtype=np.float64)
    sa = s**a
    return (b / math.pi) * math.sin(math.pi * a / b) * s ** (a - 1) / (
        1.0 + sa * sa + 2.0 * sa * math.cos(math.pi * a / b)
    )


def _edge_coefficient(a: float, b: float) -> float:
    return (b / math.pi) * math.sin(math.pi * a / b)


def mixture_moment(p: float, a: float, b: float = 2.0) -> float:
    """Closed form of ∫_0^∞ s^p g(s, a, b) ds for −a < p < a."""
    if not (-a < p < a):
        raise ParameterError(f"moment order must satisfy -a < p < a, got p={p}, a={a}")
    mu = 1.0 + p / a
    theta = math.pi * a / b
    if abs(mu - 1.0) < 1e-12:
        return 1.0
    return (b / a) * math.sin((1.0 - mu) * theta) / math.sin(mu * math.pi)


def _moment_integrand(u: float, p: float, a: float, b: float) -> float:
    # s^{p+1} g(s) at s = e^u, factored so neither half-line overflows
    k = _edge_coefficient(a, b)
    c = math.cos(math.pi * a / b)
    if u <= 0.0:
        e = math.exp(a * u)
        return k * math.exp((p + a) * u) / (1.0 + e * e + 2.0 * e * c)
    e = math.exp(-a * u)
    return k * math.exp((p - a) * u) / (e * e + 1.0 + 2.0 * e * c)


def mixture_moment_quadrature(
    p: float,
    a: float,
    b: float = 2.0,
    *,
    rtol: float = MOMENT_RTOL,
) -> tuple[float, float]:
    """∫ s^p g(s,a,b) ds by adaptive quadrature in u = log s on both half-lines.

    Returns the value and the quadrature's error estimate. The value must
    agree with :func:`mixture_moment` to ``rtol``.
    """
    if not (-a < p < a):
        raise ParameterError(f"moment order must satisfy -a < p < a, got p={p}, a={a}")
    value, error = 0.0, 0.0
    for lo, hi in ((-math.inf, 0.0), (0.0, math.inf)):
        part, err = integrate.quad(_moment_integrand, lo, hi, args=(p, a, b), epsabs=0.0, epsrel=1e-12, limit=200)
        value += part
        error += err
    closed = mixture_moment(p, a, b)
    if not abs(value - closed) <= rtol * abs(closed):
        raise ConvergenceError(
            f"weight moment p={p}: quadrature {value:.12g} (error {error:.1e}) "
            f"disagrees with the closed form {closed:.12g}"
        )
    return value, error


@dataclass(frozen=True)
class MixtureLaw(SpectralLaw):
    """Scale mixture φ_a(ξ) = ∫ φ_b(ξ/s) g(s, a, b) ds with base Linnik(b).

    With b = 2 the base is the Laplace law and the mixture is Linnik(a).
    The s-integral uses s = e^u, the trapezoid rule on [−u_range, u_range],
    the leading-order closures of g at both ends, and node doubling until the
    sup-norm change drops below ``tolerance``.
    """

    a: float
    b: float = 2.0
    u_range: float = MIXTURE_U_RANGE
    tolerance: float = MIXTURE_TOLERANCE

    def __post_init__(self):
        if not (0.0 < self.a < self.b <= 2.0):
            raise ParameterError(f"mixture needs 0 < a < b <= 2, got a={self.a}, b={self.b}")

    def _pass(self, xi: FloatArray, nodes: int, derivative: bool) -> FloatArray:
        base = LinnikLaw(self.b)
        u, h = np.linspace(-self.u_range, self.u_range, nodes + 1, retstep=True)
        w = np.full(u.shape, h)
        w[[0, -1]] *= 0.5
        s = np.exp(u)
        w = w * s * mixture_weight(s, self.a, self.b)
        out = np.zeros_like(xi)
        for start in range(0, s.size, MIXTURE_CHUNK):
            sc = s[start : start + MIXTURE_CHUNK]
            wc = w[start : start + MIXTURE_CHUNK]
            arg = xi[:, None] / sc[None, :]
            if self.b == 2.0:
                q = 1.0 / (1.0 + arg * arg)
                vals = -2.0 * arg * q * q / sc[None, :] if derivative else q
            elif derivative:
                vals = base.derivative(arg.ravel()).real.reshape(arg.shape) / sc[None, :]
            else:
                vals = base.value(arg.ravel()).real.reshape(arg.shape)
            out += vals @ wc
        k = _edge_coefficient(self.a, self.b)
        lo, hi = math.exp(-self.u_range), math.exp(self.u_range)
        if derivative:
            out += k * hi ** (-self.a) / self.a * base.derivative(xi / hi).real / hi
        else:
            out += k * lo**self.a / self.a * base.value(xi / lo).real
            out += k * hi ** (-self.a) / self.a * base.value(xi / hi).real
        return out

    def _converged(self, xi: FloatArray, derivative: bool) -> FloatArray:
        # symmetric law: evaluate on |ξ| and restore parity
        a = np.abs(np.asarray(xi, dtype=np.float64))
        uniq, inverse = np.unique(a, return_inverse=True)
        nodes = MIXTURE_START_NODES
        previous = self._pass(uniq, nodes, derivative)
        while nodes < MIXTURE_MAX_NODES:
            nodes *= 2
            current = self._pass(uniq, nodes, derivative)
            change = float(np.max(np.abs(current - previous)))
            if change < self.tolerance:
                logger.debug("mixture a=%s converged with %d nodes (change %.2e)", self.a, nodes, change)
                out = current[inverse].reshape(a.shape)
                return np.sign(xi) * out if derivative else out
            previous = current
        raise ConvergenceError(
            f"mixture quadrature for a={self.a} did not converge below {self.tolerance} "
            f"with {MIXTURE_MAX_NODES} nodes"
        )

    def value(self, xi):
        return self._converged(xi, False).astype(np.complex128)

    def derivative(self, xi):
        return self._converged(xi, True).astype(np.complex128)

    @property
    def tail_weight(self):
        return 1.0 if self.b == 2.0 else None

    @property
    def tail_order(self):
        return self.a
