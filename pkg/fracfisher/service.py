"""
Experiment service: one method per CLI command, each a thin composition of
library operations that returns a report, plot-ready traces and the list of
violated contracts.
"""

from __future__ import annotations

import csv
import datetime as dt
import io
import time
import typing as tp
from importlib import metadata

import numpy as np
from pydantic import BaseModel, ConfigDict, Field

from .attraction import (
    attraction_remainder,
    finiteness_certificate,
    g_equivalence_check,
    g_tail_exponent,
    h_moment_bounds,
)
from .clt import (
    blachman_stam_check,
    monotonicity_sweep,
    smooth_with_stable,
    smoothing_contraction_check,
    variance_drop_mc,
)
from .distributions import (
    gaussian_density,
    laplace_density,
    linnik_density,
    linnik_spectrum,
    stable_density,
    stable_eigen_residual,
    stable_spectrum,
    tail_constant_fit,
    tail_envelope_fit,
)
from .entropy import entropy_bound_check, evolve, integrand_domination
from .information import fisher_integrand, relative_fisher
from .laws import GaussianLaw
from .lib.common import ArtifactStore, StoredObject, dumps
from .lib.errors import ContractViolation
from .lib.proto import ExperimentProtocol
from .lib.utils import get_logger, handle
from .schema import Comparison, DensityProfile, ExperimentConfig, StableOrder
from .spectral import law_spectrum

logger = get_logger(__name__)

EIGEN_CONTRACT = 1e-4
MIXTURE_CONTRACT = 1e-4
FIXED_POINT_CONTRACT = 1e-4
G_EQUIVALENCE_CONTRACT = 1e-3
PLANCHEREL_CONTRACT = 1e-2
REMAINDER_CONTRACT = 1e-10
MASS_CONTRACT = 1e-6
BS_DELTAS = (0.25, 0.5, 0.75)
DIFFUSION_TIMES = (0.0, 0.5, 1.0, 2.0, 5.0, 10.0)
SMOOTHING_EPS = (0.1, 0.3, 0.5)
SMOOTHING_LIMIT_EPS = (0.2, 0.1, 0.05, 0.025)

PACKAGES = ("fracfisher", "numpy", "scipy", "pydantic", "orjson", "cachetools")


class Trace(BaseModel):
    """Columns of one CSV trace, written as trace-<name>.csv."""

    model_config = ConfigDict(arbitrary_types_allowed=True)

    columns: dict[str, tp.Any]
    header: dict[str, tp.Any] = Field(default_factory=dict)

    def to_csv(self) -> bytes:
        buffer = io.StringIO(newline="")
        if self.header:
            buffer.write("# " + ", ".join(f"{k}={v!r}" for k, v in self.header.items()) + "\n")
        writer = csv.writer(buffer, lineterminator="\n")
        names = list(self.columns)
        writer.writerow(names)
        writer.writerows(zip(*(np.asarray(self.columns[k]).tolist() for k in names)))
        return buffer.getvalue().encode()


class ExperimentResult(BaseModel):
    model_config = ConfigDict(arbitrary_types_allowed=True)

    command: str
    report: dict[str, tp.Any]
    traces: dict[str, Trace] = Field(default_factory=dict)
    checks: list[Comparison] = Field(default_factory=list)
    elapsed: float = 0.0

    @property
    def violations(self) -> list[dict[str, tp.Any]]:
        return [_check_dict(c) for c in self.checks if not c.holds]

    @property
    def ok(self) -> bool:
        return not self.violations

    def raise_for_violations(self) -> None:
        if self.violations:
            names = ", ".join(v["name"] for v in self.violations)
            raise ContractViolation(f"{self.command}: {len(self.violations)} contract(s) violated: {names}")


def _check_dict(c: Comparison) -> dict[str, tp.Any]:
    return {**c.to_dict(), "holds": c.holds}


def _bound(name: str, value: float, limit: float) -> Comparison:
    return Comparison(name=name, lhs=value, rhs=limit, tolerance=0.0)


def _versions() -> dict[str, str]:
    out: dict[str, str] = {}
    for name in PACKAGES:
        try:
            out[name] = metadata.version(name)
        except metadata.PackageNotFoundError:
            out[name] = "unknown"
    return out


class ExperimentService(ExperimentProtocol[ExperimentConfig, ExperimentResult]):
    """Runs one configured experiment. Commands map one-to-one onto methods."""

    def density(self, config: ExperimentConfig, kind: str | None = None) -> DensityProfile:
        kind = kind or config.density
        grid = config.grid
        if kind == "stable":
            return stable_density(config.lambda_, grid)
        if kind == "gaussian":
            return gaussian_density(grid)
        if kind == "laplace":
            return laplace_density(grid)
        return linnik_density(config.lambda_, grid, config.method)

    @handle
    def run(self, *, params: ExperimentConfig) -> ExperimentResult:
        start = time.perf_counter()
        method = getattr(self, params.command.replace("-", "_"))
        result: ExperimentResult = method(params)
        result.elapsed = time.perf_counter() - start
        logger.info(
            "%s finished in %.2fs with %d violation(s)", params.command, result.elapsed, len(result.violations)
        )
        return result

    def stable(self, config: ExperimentConfig) -> ExperimentResult:
        z = stable_density(config.lambda_, config.grid)
        residual = stable_eigen_residual(config.lambda_, config.grid)
        spectrum = stable_spectrum(config.lambda_, 1.0, config.grid)
        return ExperimentResult(
            command=config.command,
            report={
                "lambda": config.lambda_,
                "mass_deficit": z.mass_deficit,
                "clipped_mass": z.clipped_mass,
                "value_at_zero": float(z.samples[z.grid.center]),
                "eigen_residual": residual,
            },
            traces={
                "density": Trace(columns={"x": z.x, "value": z.samples}, header=z.header()),
                "spectrum": Trace(
                    columns={"xi": spectrum.xi, "re": spectrum.samples.real, "im": spectrum.samples.imag}
                ),
            },
            checks=[_bound("eigen_relation", residual, EIGEN_CONTRACT)],
        )

    def linnik(self, config: ExperimentConfig) -> ExperimentResult:
        order = StableOrder.of(config.lambda_)
        p = linnik_density(order, config.grid)
        report: dict[str, tp.Any] = {"lambda": order.value, "mass_deficit": p.mass_deficit}
        checks: list[Comparison] = []
        columns: dict[str, tp.Any] = {"x": p.x, "inversion": p.samples}
        if order.value < 2:
            mixture = linnik_density(order, config.grid, "mixture")
            gap = float(np.max(np.abs(mixture.samples - p.samples)))
            report["mixture_gap"] = gap
            report["envelope"] = tail_envelope_fit(p, order).to_dict()
            report["tail_constant"] = order.tail_constant
            report["tail_constant_fit"] = tail_constant_fit(p, order)
            checks.append(_bound("mixture_consistency", gap, MIXTURE_CONTRACT))
            columns["mixture"] = mixture.samples
            remainder = attraction_remainder(linnik_spectrum(order, config.grid), order)
            report["attraction"] = remainder.to_dict()
        return ExperimentResult(
            command=config.command,
            report=report,
            traces={"density": Trace(columns=columns, header=p.header())},
            checks=checks,
        )

    def fisher(self, config: ExperimentConfig) -> ExperimentResult:
        order = StableOrder.of(config.lambda_)
        f = self.density(config)
        fisher = relative_fisher(f, order, config.upsilon, refine=config.refine)
        integrand = fisher_integrand(
            f, order.derivative_order, 1.0 / (order.value * config.upsilon), refine=config.refine
        )
        checks = [_bound("nonnegative", -fisher.value, 0.0)]
        if config.density == "stable" and config.upsilon == 1.0:
            checks.append(_bound("fixed_point", fisher.value, FIXED_POINT_CONTRACT))
        return ExperimentResult(
            command=config.command,
            report={"density": config.density, "fisher": fisher.to_dict()},
            traces={
                "integrand": Trace(
                    columns={"x": integrand.grid.x, "integrand": integrand.values},
                    header={"lambda": order.value, "upsilon": config.upsilon},
                )
            },
            checks=checks,
        )

    def clt_sweep(self, config: ExperimentConfig) -> ExperimentResult:
        sweep = monotonicity_sweep(self.density(config), config.lambda_, config.n_max, refine=config.refine)
        checks: list[Comparison] = []
        for entry in sweep.entries:
            checks.append(
                Comparison(name=f"step(n={entry.n})", lhs=entry.value, rhs=entry.step_bound, tolerance=entry.tolerance)
            )
            checks.append(
                Comparison(
                    name=f"global(n={entry.n})", lhs=entry.value, rhs=entry.global_bound, tolerance=entry.tolerance
                )
            )
        trace = Trace(
            columns={
                "n": [e.n for e in sweep.entries],
                "fisher_value": sweep.values,
                "step_bound": [e.step_bound for e in sweep.entries],
                "global_bound": [e.global_bound for e in sweep.entries],
                "truncation": [e.truncation for e in sweep.entries],
            },
            header={"lambda": config.lambda_, "density": config.density},
        )
        return ExperimentResult(
            command=config.command,
            report={"density": config.density, "sweep": sweep.to_dict()},
            traces={"sweep": trace},
            checks=checks,
        )

    def bs_check(self, config: ExperimentConfig) -> ExperimentResult:
        order = StableOrder.of(config.lambda_).require_fractional()
        linnik = linnik_density(order, config.grid)
        catalog = {
            "linnik": linnik,
            "smoothed_linnik": smooth_with_stable(linnik, config.epsilon, order),
            "stable": stable_density(order, config.grid),
        }
        checks: list[Comparison] = []
        rows: dict[str, list[tp.Any]] = {k: [] for k in ("f1", "f2", "delta", "lhs", "rhs", "margin")}
        for name1, f1 in catalog.items():
            for name2, f2 in catalog.items():
                for delta in BS_DELTAS:
                    c = blachman_stam_check(f1, f2, delta, order, refine=config.refine)
                    c = c.model_copy(update={"name": f"{c.name}[{name1},{name2}]"})
                    checks.append(c)
                    if name1 == name2 == "stable":
                        checks.append(
                            Comparison(
                                name=f"equality(delta={delta:g})",
                                lhs=c.lhs,
                                rhs=c.rhs,
                                tolerance=FIXED_POINT_CONTRACT,
                                relation="eq",
                            )
                        )
                    for key, value in zip(rows, (name1, name2, delta, c.lhs, c.rhs, c.margin)):
                        rows[key].append(value)
        return ExperimentResult(
            command=config.command,
            report={"lambda": order.value, "epsilon": config.epsilon, "checks": [_check_dict(c) for c in checks]},
            traces={"blachman_stam": Trace(columns=rows, header={"lambda": order.value})},
            checks=checks,
        )

    def diffuse(self, config: ExperimentConfig) -> ExperimentResult:
        order = StableOrder.of(config.lambda_)
        f = self.density(config)
        checks: list[Comparison] = []
        masses = []
        for t in DIFFUSION_TIMES:
            mass = evolve(f, t, order.value / 2.0).mass
            masses.append(mass)
            checks.append(_bound(f"mass(t={t:g})", abs(mass - f.mass), MASS_CONTRACT))
        contraction = [smoothing_contraction_check(f, eps, order, refine=config.refine) for eps in SMOOTHING_EPS]
        checks.extend(contraction)
        limit = [relative_fisher(smooth_with_stable(f, eps, order), order, refine=config.refine).value for eps in SMOOTHING_LIMIT_EPS]
        base = relative_fisher(f, order, refine=config.refine)
        gaps = [abs(v - base.value) for v in limit]
        for i in range(1, len(gaps)):
            checks.append(
                Comparison(
                    name=f"smoothing_limit(eps={SMOOTHING_LIMIT_EPS[i]:g})",
                    lhs=gaps[i],
                    rhs=gaps[i - 1],
                    tolerance=10.0 * base.truncation_estimate,
                )
            )
        return ExperimentResult(
            command=config.command,
            report={
                "density": config.density,
                "fisher": base.value,
                "masses": dict(zip((f"{t:g}" for t in DIFFUSION_TIMES), masses)),
                "smoothing": [_check_dict(c) for c in contraction],
                "smoothing_limit": dict(zip((f"{e:g}" for e in SMOOTHING_LIMIT_EPS), limit)),
            },
            traces={"mass": Trace(columns={"t": list(DIFFUSION_TIMES), "mass": masses})},
            checks=checks,
        )

    def entropy(self, config: ExperimentConfig) -> ExperimentResult:
        f = self.density(config)
        comparison, report = entropy_bound_check(
            f, config.lambda_, t_max=config.t_max, nodes=config.nodes, refine=config.refine
        )
        checks = [comparison, *integrand_domination(report)]
        return ExperimentResult(
            command=config.command,
            report={"density": config.density, "entropy": report.to_dict(), "bound": _check_dict(comparison)},
            traces={"integrand": Trace(columns={"t": report.times, "h": report.integrand})},
            checks=checks,
        )

    def verify_appendix(self, config: ExperimentConfig) -> ExperimentResult:
        order = StableOrder.of(config.lambda_).require_fractional()
        grid = config.grid
        distance = g_equivalence_check(order, grid)
        moments = h_moment_bounds(order, grid)
        certificate = finiteness_certificate(order, grid)
        slope = g_tail_exponent(order, grid)
        remainder = attraction_remainder(linnik_spectrum(order, grid), order)
        exact = np.abs(remainder.xi) ** order.value / (1.0 + np.abs(remainder.xi) ** order.value)
        closed_form_gap = float(np.max(np.abs(remainder.remainder - exact)))
        gaussian = attraction_remainder(law_spectrum(GaussianLaw(1.0), grid), order)
        checks = [
            _bound("g_equivalence", distance, G_EQUIVALENCE_CONTRACT),
            _bound("plancherel", moments.plancherel_mismatch, PLANCHEREL_CONTRACT),
            Comparison(name="interpolation", lhs=moments.direct, rhs=moments.interp, tolerance=0.0),
            Comparison(
                name="certificate",
                lhs=certificate.fisher,
                rhs=certificate.envelope_bound,
                tolerance=10.0 * certificate.truncation_estimate,
            ),
            _bound("linnik_remainder", closed_form_gap, REMAINDER_CONTRACT),
            _bound("gaussian_flagged", float(gaussian.verdict == "consistent"), 0.0),
        ]
        return ExperimentResult(
            command=config.command,
            report={
                "lambda": order.value,
                "g_equivalence": distance,
                "g_tail_exponent": slope,
                "h_moments": moments.to_dict(),
                "certificate": certificate.to_dict(),
                "linnik_attraction": remainder.to_dict(),
                "gaussian_attraction": gaussian.to_dict(),
            },
            traces={"remainder": Trace(columns={"xi": remainder.xi, "R": remainder.remainder})},
            checks=checks,
        )

    def udrop(self, config: ExperimentConfig) -> ExperimentResult:
        report = variance_drop_mc(config.n, config.m, config.kernel, config.base_law, config.samples, config.seed)
        checks = [
            Comparison(name="variance_drop", lhs=report.var_u, rhs=report.bound, tolerance=3.0 * report.stderr)
        ]
        if config.m == 1:
            checks.append(
                Comparison(
                    name="independence_equality",
                    lhs=report.var_u,
                    rhs=report.bound,
                    tolerance=3.0 * report.stderr,
                    relation="eq",
                )
            )
        return ExperimentResult(command=config.command, report=report.to_dict(), checks=checks)


def _previous_report(artifacts: ArtifactStore) -> bytes | None:
    try:
        return artifacts.retrieve(id="report.json").body
    except FileNotFoundError:
        return None


def store(
    result: ExperimentResult, config: ExperimentConfig, artifacts: ArtifactStore | None = None
) -> ArtifactStore:
    """Writes report.json, trace-*.csv and metadata.json, each atomically.

    Traces left in the directory by an earlier run and not produced by this
    one are deleted; metadata records whether report.json changed.
    """
    artifacts = artifacts or ArtifactStore(config.output_dir)
    document = {
        "command": result.command,
        "config": config.public_dict(),
        "report": result.report,
        "violations": result.violations,
    }
    body = dumps(document)
    previous = _previous_report(artifacts)
    artifacts.create(params=StoredObject(key="report.json", body=body))
    traces = sorted(f"trace-{name}.csv" for name in result.traces)
    for name, trace in result.traces.items():
        artifacts.create(params=StoredObject(key=f"trace-{name}.csv", body=trace.to_csv()))
    stale = [obj.key for obj in artifacts.list(after="trace-") if obj.key not in traces]
    for key in stale:
        artifacts.delete(id=key)
    if stale:
        logger.info("removed %d stale trace(s): %s", len(stale), ", ".join(stale))
    meta = {
        "created_at": dt.datetime.now(dt.timezone.utc).isoformat(),
        "elapsed_seconds": result.elapsed,
        "versions": _versions(),
        "traces": traces,
        "previous_report_identical": None if previous is None else previous == body,
    }
    artifacts.create(params=StoredObject(key="metadata.json", body=dumps(meta)))
    return artifacts
