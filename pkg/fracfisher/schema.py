"""Domain types: grids, sampled profiles, stable orders and the reports
produced by every verification."""

from __future__ import annotations

import csv
import math
import typing as tp
from pathlib import Path

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator, model_validator
from scipy.special import gamma

from .laws import SpectralLaw
from .lib.common import ReportDocument
from .lib.errors import FracFisherError, GridError, OrderError, ParameterError
from .lib.proto import ComplexArray, FloatArray
from .lib.utils import ttl_cache

REFERENCE_N_POINTS = 2**16
REFERENCE_X_MAX = 200.0
MIN_POINTS = 64
NEGATIVE_RINGING = 1e-10


def _is_power_of_two(n: int) -> bool:
    return n > 0 and n & (n - 1) == 0


def _frozen(array: np.ndarray) -> np.ndarray:
    array.flags.writeable = False
    return array


@ttl_cache(maxsize=32)
def _axes(n_points: int, x_max: float) -> tuple[FloatArray, FloatArray]:
    dx = 2.0 * x_max / n_points
    k = np.arange(n_points, dtype=np.float64) - n_points // 2
    return _frozen(k * dx), _frozen(k * (math.pi / x_max))


class _DomainModel(BaseModel):
    """Model whose validators raise library errors directly.

    pydantic reports a ValueError raised by a validator as ValidationError;
    the original library error is re-raised instead.
    """

    def __init__(self, /, **data: tp.Any) -> None:
        try:
            super().__init__(**data)
        except ValidationError as e:
            for item in e.errors():
                error = item.get("ctx", {}).get("error")
                if isinstance(error, FracFisherError):
                    raise error from None
            raise


class GridSpec(_DomainModel):
    """Uniform grid on [−x_max, x_max) with the center sample at x = 0.

    Frequencies are stored in the same centered order, so index 0 holds the
    unpaired Nyquist frequency −π/dx and index n_points/2 holds ξ = 0.
    """

    model_config = ConfigDict(frozen=True)

    n_points: int = REFERENCE_N_POINTS
    x_max: float = REFERENCE_X_MAX

    @field_validator("n_points")
    @classmethod
    def _check_points(cls, v: int) -> int:
        if v < MIN_POINTS or not _is_power_of_two(v):
            raise GridError(f"n_points must be a power of two >= {MIN_POINTS}, got {v}")
        return v

    @field_validator("x_max")
    @classmethod
    def _check_extent(cls, v: float) -> float:
        if not (v > 0 and math.isfinite(v)):
            raise GridError(f"x_max must be positive and finite, got {v}")
        return float(v)

    @property
    def dx(self) -> float:
        return 2.0 * self.x_max / self.n_points

    @property
    def dxi(self) -> float:
        return math.pi / self.x_max

    @property
    def xi_max(self) -> float:
        return math.pi / self.dx

    @property
    def center(self) -> int:
        return self.n_points // 2

    @property
    def x(self) -> FloatArray:
        return _axes(self.n_points, self.x_max)[0]

    @property
    def xi(self) -> FloatArray:
        return _axes(self.n_points, self.x_max)[1]

    def refined(self, factor: int) -> GridSpec:
        """Same window, ``factor`` times more samples."""
        return GridSpec(n_points=self.n_points * factor, x_max=self.x_max)

    def extended(self, factor: int = 2) -> GridSpec:
        """Same spacing, window ``factor`` times wider."""
        return GridSpec(n_points=self.n_points * factor, x_max=self.x_max * factor)


class _Profile(_DomainModel):
    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    grid: GridSpec
    samples: np.ndarray

    @model_validator(mode="after")
    def _check_length(self):
        if self.samples.shape != (self.grid.n_points,):
            raise GridError(
                f"samples shape {self.samples.shape} does not match n_points={self.grid.n_points}"
            )
        return self


class RealProfile(_Profile):
    """Real samples of a physical-space function.

    ``truncation`` is the estimated magnitude of what the window drops.
    """

    truncation: float = 0.0

    @field_validator("samples", mode="before")
    @classmethod
    def _as_real(cls, v: tp.Any) -> np.ndarray:
        return _frozen(np.array(v, dtype=np.float64))

    @property
    def x(self) -> FloatArray:
        return self.grid.x

    def sup_norm(self) -> float:
        return float(np.max(np.abs(self.samples)))

    def integral(self) -> float:
        return float(np.sum(self.samples) * self.grid.dx)

    def header(self) -> dict[str, tp.Any]:
        return {"n_points": self.grid.n_points, "x_max": self.grid.x_max}

    def to_csv(self, path: str | Path) -> Path:
        path = Path(path)
        with path.open("w", newline="") as fh:
            fh.write("# " + ", ".join(f"{k}={v!r}" for k, v in self.header().items()) + "\n")
            writer = csv.writer(fh)
            writer.writerow(["x", "value"])
            writer.writerows(zip(self.x.tolist(), self.samples.tolist()))
        return path


class DensityProfile(RealProfile):
    """Sampled probability density.

    ``law`` is the analytic characteristic function the samples were
    inverted from, when one is known.
    """

    mass_deficit: float
    clipped_mass: float = 0.0
    law: tp.Optional[SpectralLaw] = Field(default=None, exclude=True, repr=False)

    @model_validator(mode="after")
    def _check_sign(self):
        if np.min(self.samples) < -NEGATIVE_RINGING:
            raise ParameterError("density samples must be >= -1e-10 after clipping")
        return self

    @property
    def mass(self) -> float:
        return self.integral()

    def header(self) -> dict[str, tp.Any]:
        return {**super().header(), "mass_deficit": self.mass_deficit}


class ScoreProfile(RealProfile):
    """Score samples restricted to the computational support.

    Samples outside ``mask`` are zero and must be ignored.
    """

    mask: np.ndarray
    support_threshold: float

    @field_validator("mask", mode="before")
    @classmethod
    def _as_mask(cls, v: tp.Any) -> np.ndarray:
        return _frozen(np.array(v, dtype=bool))

    def retained(self) -> FloatArray:
        return self.samples[self.mask]


class SpectralProfile(_Profile):
    """Complex samples on the centered frequency grid."""

    @field_validator("samples", mode="before")
    @classmethod
    def _as_complex(cls, v: tp.Any) -> np.ndarray:
        return _frozen(np.array(v, dtype=np.complex128))

    @property
    def xi(self) -> FloatArray:
        return self.grid.xi

    @property
    def values(self) -> ComplexArray:
        return self.samples

    def at_zero(self) -> complex:
        return complex(self.samples[self.grid.center])

    def to_csv(self, path: str | Path) -> Path:
        path = Path(path)
        with path.open("w", newline="") as fh:
            fh.write(f"# n_points={self.grid.n_points!r}, x_max={self.grid.x_max!r}\n")
            writer = csv.writer(fh)
            writer.writerow(["xi", "re", "im"])
            writer.writerows(
                zip(self.xi.tolist(), self.samples.real.tolist(), self.samples.imag.tolist())
            )
        return path


class StableOrder(_DomainModel):
    """Order λ of a symmetric stable law, 1 < λ ≤ 2."""

    model_config = ConfigDict(frozen=True, populate_by_name=True)

    value: float = Field(alias="lambda")

    @field_validator("value")
    @classmethod
    def _check_range(cls, v: float) -> float:
        if not (1.0 < v <= 2.0):
            raise OrderError(f"stable order must satisfy 1 < lambda <= 2, got {v}")
        return float(v)

    @classmethod
    def of(cls, order: StableOrder | float) -> StableOrder:
        if isinstance(order, StableOrder):
            return order
        return cls(value=order)

    @property
    def derivative_order(self) -> float:
        return self.value - 1.0

    @property
    def rate(self) -> float:
        """Exponent (2 − λ)/λ of the normalized-sum decay."""
        return (2.0 - self.value) / self.value

    @property
    def tail_constant(self) -> float:
        """c = Γ(λ) sin(πλ/2)/π; densities in the attraction class decay like λc|x|^{−1−λ}."""
        return float(gamma(self.value) * math.sin(math.pi * self.value / 2) / math.pi)

    def require_fractional(self) -> StableOrder:
        if self.value >= 2.0:
            raise OrderError(f"operation needs 1 < lambda < 2, got {self.value}")
        return self


class MixtureParams(_DomainModel):
    """Parameters (a, b) of the mixing weight g(s, a, b), 0 < a < b ≤ 2."""

    model_config = ConfigDict(frozen=True)

    a: float
    b: float = 2.0

    @model_validator(mode="after")
    def _check_range(self):
        if not (0.0 < self.a < self.b <= 2.0):
            raise ParameterError(f"mixture needs 0 < a < b <= 2, got a={self.a}, b={self.b}")
        return self


class TailEnvelope(ReportDocument):
    A: float
    B: float
    probe_x: float
    max_ratio: float


class FisherReport(ReportDocument):
    lambda_: float = Field(alias="lambda")
    upsilon: float
    value: float
    support_threshold: float
    truncation_estimate: float
    n_points: int
    x_max: float
    method: tp.Literal["spectral", "physical"] = "spectral"

    @property
    def grid(self) -> GridSpec:
        return GridSpec(n_points=self.n_points, x_max=self.x_max)


class Comparison(ReportDocument):
    """Two sides of an identity or inequality with the tolerance applied."""

    name: str
    lhs: float
    rhs: float
    tolerance: float
    relation: tp.Literal["le", "eq"] = "le"

    @property
    def margin(self) -> float:
        return self.rhs - self.lhs

    @property
    def holds(self) -> bool:
        if self.relation == "eq":
            return abs(self.lhs - self.rhs) <= self.tolerance
        return self.lhs <= self.rhs + self.tolerance


class SweepEntry(ReportDocument):
    n: int
    fisher: FisherReport
    step_bound: float
    global_bound: float
    tolerance: float

    @property
    def value(self) -> float:
        return self.fisher.value

    @property
    def truncation(self) -> float:
        return self.fisher.truncation_estimate

    @property
    def step_holds(self) -> bool:
        return self.value <= self.step_bound + self.tolerance

    @property
    def global_holds(self) -> bool:
        return self.value <= self.global_bound + self.tolerance


class SweepReport(ReportDocument):
    lambda_: float = Field(alias="lambda")
    entries: list[SweepEntry]

    @property
    def values(self) -> list[float]:
        return [entry.value for entry in self.entries]

    @property
    def holds(self) -> bool:
        return all(entry.step_holds and entry.global_holds for entry in self.entries)


class EntropyReport(ReportDocument):
    lambda_: float = Field(alias="lambda")
    value: float
    t_max: float
    nodes: int
    tail_bound: float
    fisher_at_zero: float
    truncation_estimate: float = 0.0
    times: list[float] = Field(default_factory=list, exclude=True)
    integrand: list[float] = Field(default_factory=list, exclude=True)
    node_truncation: list[float] = Field(default_factory=list, exclude=True)

    @property
    def bound_factor(self) -> float:
        return self.lambda_ / (2.0 - self.lambda_)

    @property
    def total(self) -> float:
        return self.value + self.tail_bound


class EntropySweepEntry(ReportDocument):
    n: int
    entropy: EntropyReport
    step_bound: float
    global_bound: float
    tolerance: float

    @property
    def value(self) -> float:
        return self.entropy.value

    @property
    def step_holds(self) -> bool:
        return self.value <= self.step_bound + self.tolerance

    @property
    def global_holds(self) -> bool:
        return self.value <= self.global_bound + self.tolerance


class EntropySweepReport(ReportDocument):
    lambda_: float = Field(alias="lambda")
    entries: list[EntropySweepEntry]

    @property
    def holds(self) -> bool:
        return all(entry.step_holds and entry.global_holds for entry in self.entries)


class VarianceDropReport(ReportDocument):
    n: int
    m: int
    kernel: str
    base_law: str
    samples: int
    seed: int
    var_u: float
    bound: float
    stderr: float
    phi_second_moment: float

    @property
    def holds(self) -> bool:
        return self.var_u <= self.bound + 3.0 * self.stderr


class AttractionReport(ReportDocument):
    lambda_: float = Field(alias="lambda")
    tail_constant_c: float
    verdict: tp.Literal["consistent", "inconsistent"]
    max_remainder: float
    threshold: float
    xi: np.ndarray = Field(exclude=True, repr=False)
    remainder: np.ndarray = Field(exclude=True, repr=False)

    @property
    def remainder_trace(self) -> list[tuple[float, float]]:
        return list(zip(self.xi.tolist(), self.remainder.tolist()))


class MomentReport(ReportDocument):
    nu: float
    value: float
    extended_value: float
    relative_change: float
    divergent: bool


class HMomentReport(ReportDocument):
    lambda_: float = Field(alias="lambda")
    l2: float
    x4: float
    x4_spectral: float
    interp: float
    direct: float
    c_lambda: float
    radius: float

    @property
    def plancherel_mismatch(self) -> float:
        return abs(self.x4 - self.x4_spectral) / self.x4_spectral


class CertificateReport(ReportDocument):
    lambda_: float = Field(alias="lambda")
    fisher: float
    envelope_bound: float
    jensen_factor: float
    A: float
    B: float
    truncation_estimate: float

    @property
    def holds(self) -> bool:
        finite = all(
            math.isfinite(v) for v in (self.fisher, self.envelope_bound, self.jensen_factor)
        )
        return finite and self.fisher <= self.envelope_bound + 10.0 * self.truncation_estimate


Command = tp.Literal[
    "stable", "linnik", "fisher", "clt-sweep", "bs-check", "diffuse", "entropy", "verify-appendix", "udrop"
]


class ExperimentConfig(BaseModel):
    """One CLI experiment. Every numeric field is range-checked here so the
    driver fails before any computation starts."""

    model_config = ConfigDict(frozen=True, extra="forbid", populate_by_name=True)

    command: Command = "fisher"
    lambda_: float = Field(default=1.5, alias="lambda", gt=1.0, le=2.0)
    density: tp.Literal["linnik", "stable", "gaussian", "laplace"] = "linnik"
    method: tp.Literal["inversion", "mixture"] = "inversion"
    n_points: int = Field(default=REFERENCE_N_POINTS, ge=MIN_POINTS)
    x_max: float = Field(default=REFERENCE_X_MAX, gt=0.0)
    refine: int = Field(default=1, ge=1, le=8)
    n_max: int = Field(default=8, ge=1, le=32)
    epsilon: float = Field(default=0.3, ge=0.0, lt=1.0)
    delta: float = Field(default=0.5, gt=0.0, lt=1.0)
    upsilon: float = Field(default=1.0, gt=0.0)
    t_max: float = Field(default=50.0, gt=0.0)
    nodes: int = Field(default=64, ge=2)
    n: int = Field(default=4, ge=1, le=8)
    m: int = Field(default=2, ge=1, le=8)
    kernel: tp.Literal["linear", "product", "centered_square"] = "product"
    base_law: tp.Literal["gaussian", "laplace"] = "gaussian"
    samples: int = Field(default=100_000, ge=10_000)
    seed: int = Field(default=0, ge=0)
    output_dir: Path = Path("out")

    @field_validator("n_points")
    @classmethod
    def _check_points(cls, v: int) -> int:
        if not _is_power_of_two(v):
            raise ValueError("must be a power of two")
        return v

    @model_validator(mode="after")
    def _check_degree(self):
        if self.m > self.n:
            raise ValueError(f"udrop degree m={self.m} exceeds n={self.n}")
        if self.kernel == "linear" and self.m != 1:
            raise ValueError("the linear kernel has degree m = 1")
        return self

    @property
    def grid(self) -> GridSpec:
        return GridSpec(n_points=self.n_points, x_max=self.x_max)

    def public_dict(self) -> dict[str, tp.Any]:
        """Config as recorded in report.json: everything but the output path."""
        return self.model_dump(mode="json", by_alias=True, exclude={"output_dir"})
