import csv

import orjson
import pytest

from fracfisher.cli import (
    EXIT_CONFIG,
    EXIT_NUMERICAL,
    EXIT_OK,
    EXIT_VIOLATIONS,
    OUT_ENV,
    main,
    parse_config,
    resolve,
)
from fracfisher.lib.errors import ConfigError, ContractViolation
from fracfisher.schema import Comparison, ExperimentConfig
from fracfisher.service import ExperimentResult, ExperimentService

SMALL_GRID = ["--n-points", "4096", "--x-max", "100"]


def _report(path):
    return orjson.loads((path / "report.json").read_bytes())


def test_parse_config_defaults():
    assert parse_config("") == ExperimentConfig()
    config = parse_config('[experiment]\ncommand = "udrop"\nlambda = 1.8\n[udrop]\nn = 6\nm = 3\n')
    assert config.command == "udrop"
    assert config.lambda_ == 1.8
    assert (config.n, config.m) == (6, 3)


@pytest.mark.parametrize(
    "text, key",
    [
        ("[experiment]\nlambda = 2.5\n", "lambda"),
        ("[experiment]\nlambda = 1.0\n", "lambda"),
        ("[grid]\nn_points = 100\n", "n_points"),
        ("[grid]\nwidth = 3\n", "grid.width"),
        ("[plot]\ncolor = 1\n", "plot"),
        ("[udrop]\nn = 2\nm = 3\n", "m=3"),
        ("[experiment\n", "TOML"),
    ],
)
def test_parse_config_rejects(text, key):
    with pytest.raises(ConfigError, match=key):
        parse_config(text)


def test_resolve_precedence(tmp_path, monkeypatch):
    config_file = tmp_path / "run.toml"
    config_file.write_text('[experiment]\nlambda = 1.8\noutput_dir = "from-file"\n[sweep]\nn_max = 4\n')
    monkeypatch.delenv(OUT_ENV, raising=False)
    assert str(resolve(["--config", str(config_file)]).output_dir) == "from-file"

    monkeypatch.setenv(OUT_ENV, str(tmp_path / "from-env"))
    config = resolve(["--config", str(config_file)])
    assert config.output_dir == tmp_path / "from-env"
    assert config.lambda_ == 1.8
    assert config.n_max == 4

    config = resolve(["--config", str(config_file), "--lambda", "1.3", "--out", str(tmp_path / "flag")])
    assert config.lambda_ == 1.3
    assert config.output_dir == tmp_path / "flag"


def test_resolve_missing_file(tmp_path):
    with pytest.raises(ConfigError, match="cannot read"):
        resolve(["--config", str(tmp_path / "absent.toml")])


def test_udrop_run_writes_report(tmp_path):
    out = tmp_path / "udrop"
    assert main(["--command", "udrop", "--out", str(out)]) == EXIT_OK
    document = _report(out)
    assert document["command"] == "udrop"
    assert document["violations"] == []
    assert "output_dir" not in document["config"]
    assert document["report"]["var_u"] < document["report"]["bound"]
    meta = orjson.loads((out / "metadata.json").read_bytes())
    assert "numpy" in meta["versions"]


def test_report_is_byte_identical_across_runs(tmp_path):
    for name in ("a", "b"):
        assert main(["--command", "udrop", "--seed", "3", "--out", str(tmp_path / name)]) == EXIT_OK
    assert (tmp_path / "a" / "report.json").read_bytes() == (tmp_path / "b" / "report.json").read_bytes()


def test_rerun_replaces_stale_traces(tmp_path):
    (tmp_path / "trace-integrand.csv").write_text("x,integrand\n")
    argv = ["--command", "udrop", "--seed", "3", "--out", str(tmp_path)]
    assert main(argv) == EXIT_OK
    meta = orjson.loads((tmp_path / "metadata.json").read_bytes())
    assert meta["previous_report_identical"] is None
    assert not (tmp_path / "trace-integrand.csv").exists()
    assert sorted(p.name for p in tmp_path.glob("trace-*.csv")) == meta["traces"]

    assert main(argv) == EXIT_OK
    meta = orjson.loads((tmp_path / "metadata.json").read_bytes())
    assert meta["previous_report_identical"] is True


def test_fisher_on_stable(tmp_path):
    config_file = tmp_path / "stable.toml"
    config_file.write_text('[experiment]\ncommand = "fisher"\ndensity = "stable"\n')
    out = tmp_path / "fisher"
    assert main(["--config", str(config_file), *SMALL_GRID, "--out", str(out)]) == EXIT_OK
    assert _report(out)["report"]["fisher"]["value"] <= 1e-4
    with (out / "trace-integrand.csv").open() as fh:
        assert fh.readline().startswith("# lambda=1.5")
        assert next(csv.reader(fh)) == ["x", "integrand"]


def test_bad_flag_is_a_config_error(tmp_path):
    assert main(["--lambda", "2.5", "--out", str(tmp_path)]) == EXIT_CONFIG
    assert not (tmp_path / "report.json").exists()


def test_integer_order_is_a_numerical_failure(tmp_path):
    argv = ["--command", "verify-appendix", "--lambda", "2", *SMALL_GRID, "--out", str(tmp_path)]
    assert main(argv) == EXIT_NUMERICAL


@pytest.mark.slow
def test_clt_sweep_trace(tmp_path):
    argv = ["--command", "clt-sweep", "--n-max", "3", "--out", str(tmp_path)]
    assert main(argv) == EXIT_OK
    with (tmp_path / "trace-sweep.csv").open() as fh:
        rows = list(csv.reader(line for line in fh if not line.startswith("#")))
    assert rows[0] == ["n", "fisher_value", "step_bound", "global_bound", "truncation"]
    assert [int(r[0]) for r in rows[1:]] == [1, 2, 3]


def _failing_result() -> ExperimentResult:
    return ExperimentResult(
        command="udrop",
        report={},
        checks=[
            Comparison(name="variance_drop", lhs=2.0, rhs=1.0, tolerance=0.0),
            Comparison(name="independence_equality", lhs=1.0, rhs=1.0, tolerance=0.0, relation="eq"),
        ],
    )


def test_violations_are_raised_by_name():
    with pytest.raises(ContractViolation, match="1 contract"):
        _failing_result().raise_for_violations()


def test_violations_exit_one(tmp_path, monkeypatch):
    monkeypatch.setattr(ExperimentService, "udrop", lambda self, config: _failing_result())
    assert main(["--command", "udrop", "--out", str(tmp_path)]) == EXIT_VIOLATIONS
    assert [v["name"] for v in _report(tmp_path)["violations"]] == ["variance_drop"]
