"""
Command-line driver.

Exit status is the verdict: 0 when every contract of the run holds, 1 on
contract violations, 2 on configuration errors, 3 on numerical failures.
"""

from __future__ import annotations

import argparse
import os
import sys
import tomllib
import typing as tp

from pydantic import ValidationError

from .lib.errors import ConfigError, ContractViolation, FracFisherError
from .lib.utils import get_logger, merge_dicts
from .schema import ExperimentConfig
from .service import ExperimentService, store

logger = get_logger(__name__)

OUT_ENV = "FRACFISHER_OUT"

EXIT_OK = 0
EXIT_VIOLATIONS = 1
EXIT_CONFIG = 2
EXIT_NUMERICAL = 3

SECTIONS: dict[str, tuple[str, ...]] = {
    "experiment": ("command", "lambda", "density", "method", "seed", "output_dir"),
    "grid": ("n_points", "x_max", "refine"),
    "sweep": ("n_max",),
    "smoothing": ("epsilon", "delta", "upsilon"),
    "entropy": ("t_max", "nodes"),
    "udrop": ("n", "m", "kernel", "base_law", "samples"),
}

CSV_SCHEMAS = """\
outputs (written atomically into --out):
  report.json             deterministic report and violations list
  metadata.json           timestamps, package versions, timings
  trace-density.csv       x, value | x, inversion, mixture
  trace-spectrum.csv      xi, re, im
  trace-integrand.csv     x, integrand (fisher) | t, h (entropy)
  trace-sweep.csv         n, fisher_value, step_bound, global_bound, truncation
  trace-blachman_stam.csv f1, f2, delta, lhs, rhs, margin
  trace-mass.csv          t, mass
  trace-remainder.csv     xi, R
The first line of every CSV is a '#' header of key=value pairs when present.
"""


def _format_validation(error: ValidationError) -> str:
    parts = []
    for item in error.errors():
        key = ".".join(str(p) for p in item["loc"]) or "config"
        parts.append(f"{key}: {item['msg']}")
    return "; ".join(parts)


def _flatten(document: dict[str, tp.Any]) -> dict[str, tp.Any]:
    flat: dict[str, tp.Any] = {}
    for key, value in document.items():
        if isinstance(value, dict):
            if key not in SECTIONS:
                raise ConfigError(f"{key}: unknown section (expected one of {', '.join(SECTIONS)})")
            for inner, v in value.items():
                if inner not in SECTIONS[key]:
                    raise ConfigError(f"{key}.{inner}: unknown key in section [{key}]")
                flat[inner] = v
        else:
            flat[key] = value
    return flat


def build_config(*layers: dict[str, tp.Any]) -> ExperimentConfig:
    """Later layers win. Validation failures name the key and the constraint."""
    try:
        return ExperimentConfig.model_validate(merge_dicts(*layers))
    except ValidationError as e:
        raise ConfigError(_format_validation(e)) from e


def read_config(text: str) -> dict[str, tp.Any]:
    try:
        return _flatten(tomllib.loads(text))
    except tomllib.TOMLDecodeError as e:
        raise ConfigError(f"config is not valid TOML: {e}") from e


def parse_config(text: str) -> ExperimentConfig:
    """TOML document to a validated config with defaults filled in."""
    return build_config(read_config(text))


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="fracfisher",
        description="Relative fractional Fisher information experiments",
        epilog=CSV_SCHEMAS,
        formatter_class=argparse.RawDescriptionHelpFormatter,
    )
    parser.add_argument("--config", help="TOML config with [experiment] [grid] [sweep] [smoothing] [entropy] [udrop]")
    parser.add_argument(
        "--command",
        choices=["stable", "linnik", "fisher", "clt-sweep", "bs-check", "diffuse", "entropy", "verify-appendix", "udrop"],
        help="Experiment to run",
    )
    parser.add_argument("--lambda", dest="lambda", type=float, help="Stable order, 1 < lambda <= 2")
    parser.add_argument("--n-points", dest="n_points", type=int, help="Grid size, a power of two >= 64")
    parser.add_argument("--x-max", dest="x_max", type=float, help="Grid half-extent")
    parser.add_argument("--n-max", dest="n_max", type=int, help="Largest n of the normalized-sum sweep (<= 32)")
    parser.add_argument("--seed", type=int, help="Monte Carlo seed")
    parser.add_argument("--out", dest="output_dir", help=f"Output directory (overrides ${OUT_ENV})")
    return parser


def resolve(argv: tp.Sequence[str] | None = None) -> ExperimentConfig:
    """defaults < config file < $FRACFISHER_OUT < flags."""
    args = vars(build_parser().parse_args(argv))
    path = args.pop("config")
    from_file: dict[str, tp.Any] = {}
    if path:
        try:
            with open(path, encoding="utf-8") as fh:
                from_file = read_config(fh.read())
        except OSError as e:
            raise ConfigError(f"config: cannot read {path}: {e.strerror}") from e
    from_env = {"output_dir": os.environ[OUT_ENV]} if os.environ.get(OUT_ENV) else {}
    flags = {k: v for k, v in args.items() if v is not None}
    return build_config(from_file, from_env, flags)


def run(config: ExperimentConfig) -> int:
    """Runs the experiment, writes its artifacts and returns the exit status."""
    result = ExperimentService().run(params=config)
    store(result, config)
    try:
        result.raise_for_violations()
    except ContractViolation as e:
        logger.warning("%s", e)
        return EXIT_VIOLATIONS
    return EXIT_OK


def main(argv: tp.Sequence[str] | None = None) -> int:
    try:
        config = resolve(argv)
    except ConfigError as e:
        logger.error("configuration error: %s", e)
        return EXIT_CONFIG
    try:
        return run(config)
    except (FracFisherError, ValueError, ArithmeticError) as e:
        logger.error("numerical failure in %s: %s", config.command, e)
        return EXIT_NUMERICAL


if __name__ == "__main__":
    sys.exit(main())
