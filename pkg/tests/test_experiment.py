import csv
import json

import pytest

from gnstorus.cli import EXIT_CONSTRAINT, EXIT_NUMERICAL, EXIT_OK, main
from gnstorus.errors import ConfigurationError, ConstraintError
from gnstorus.experiment import (
    RunReport,
    build_config,
    emit_report,
    load_config,
    load_report,
    parse_pairs,
    run_pipeline,
    stage_order,
)

COARSE = ["--override", "time.steps_per_decade=8", "--override", "probes.enabled=false"]


# ------------------------------------------------------------------ config


def test_parse_pairs_types_and_comments():
    pairs = parse_pairs(["# comment", "grid.n = 64", "construction.epsilon = 0.5  # trailing", "", "ladder.strict = true", "outputs.dir = a/b"])
    assert pairs == {"grid.n": 64, "construction.epsilon": 0.5, "ladder.strict": True, "outputs.dir": "a/b"}


def test_parse_pairs_rejects_malformed_lines():
    with pytest.raises(ConfigurationError, match="line 2"):
        parse_pairs(["grid.n = 64", "nonsense"])


def test_defaults_resolve_lattice_to_n0():
    cfg = build_config()
    assert cfg.grid.n == 128 and cfg.grid.lattice == 5
    assert cfg.construction.A == 5 and cfg.steps_per_decade == 60


def test_overrides_win_over_file(tmp_path):
    path = tmp_path / "run.cfg"
    path.write_text("construction.A = 10\ngrid.n = 256\n")
    cfg = load_config(path, ["grid.n=512"])
    assert cfg.construction.A == 10 and cfg.grid.lattice == 10 and cfg.grid.n == 512


def test_unknown_key_is_rejected():
    with pytest.raises(ConfigurationError, match="grid.size"):
        build_config(overrides=["grid.size=64"])


def test_constraint_violation_names_parameter():
    with pytest.raises(ConstraintError) as info:
        build_config(overrides=["construction.alpha=0.3"])
    assert info.value.param == "alpha"


def test_config_hash_ignores_output_dir():
    a = build_config(overrides=["outputs.dir=x"])
    b = build_config(overrides=["outputs.dir=y"])
    c = build_config(overrides=["seed=1"])
    assert a.hash == b.hash != c.hash


@pytest.mark.parametrize(
    "stage,order",
    [
        ("build", ["build"]),
        ("residual", ["build", "flows", "residual"]),
        ("separate", ["build", "flows", "residual", "perturb", "separate"]),
        ("verify", ["verify"]),
        ("all", ["build", "flows", "residual", "perturb", "separate", "verify"]),
    ],
)
def test_stage_order(stage, order):
    assert stage_order(stage) == order


def test_unknown_stage():
    with pytest.raises(ConfigurationError):
        stage_order("bogus")


# ------------------------------------------------------------------ report


def test_empty_report_is_valid_json(tmp_path):
    (path,) = emit_report(RunReport(), "json", tmp_path)
    d = json.loads(path.read_text())
    assert d["constants"] == {} and d["stages"] == []
    assert json.loads((tmp_path / "report.json.meta.json").read_text())["code_version"]


def test_unknown_format(tmp_path):
    with pytest.raises(ConfigurationError):
        emit_report(RunReport(), "xml", tmp_path)


def test_flows_stage_writes_decay_table(tmp_path):
    cfg = build_config(overrides=[f"outputs.dir={tmp_path}"])
    report = run_pipeline(cfg, "flows")
    emit_report(report, "csv_tables", tmp_path)
    with open(tmp_path / "decay.csv") as fh:
        rows = list(csv.DictReader(fh))
    assert len(rows) == len(report.tables["decay"]) == 25
    for row in rows:
        assert float(row["v0"]) == pytest.approx(float(row["v0_exact"]), rel=1e-12)


def test_payload_is_deterministic(tmp_path):
    runs = [run_pipeline(build_config(overrides=[f"outputs.dir={tmp_path / d}"]), "residual") for d in ("a", "b")]
    assert json.dumps(runs[0].payload(), sort_keys=True) == json.dumps(runs[1].payload(), sort_keys=True)


# --------------------------------------------------------------------- CLI


def test_cli_alpha_violation_exits_2(tmp_path, capsys):
    code = main(["build", "--out", str(tmp_path), "--override", "construction.alpha=0.3"])
    assert code == EXIT_CONSTRAINT
    assert "alpha" in capsys.readouterr().err


def test_cli_unknown_key_exits_2(tmp_path, capsys):
    assert main(["build", "--out", str(tmp_path), "--override", "bogus.key=1"]) == EXIT_CONSTRAINT


def test_cli_missing_config_exits_2(tmp_path):
    assert main(["build", "--config", str(tmp_path / "missing.cfg")]) == EXIT_CONSTRAINT


def test_cli_strict_ladder_exits_3(tmp_path, capsys):
    code = main(["build", "--out", str(tmp_path), "--override", "ladder.strict=true"])
    assert code == EXIT_NUMERICAL
    err = capsys.readouterr().err
    assert "stage build" in err and "level 0" in err


def test_cli_grid_flag_and_stage_flag(tmp_path, capsys):
    assert main(["report", "--stage", "build", "--grid", "64", "--out", str(tmp_path), "--format", "json"]) == EXIT_OK
    report = load_report(tmp_path / "report.json")
    assert report.stages == ["build"]
    assert report.provenance["config"]["grid.n"] == 64


@pytest.fixture(scope="module")
def pipeline_dir(tmp_path_factory):
    out = tmp_path_factory.mktemp("run")
    assert main(["separate", "--out", str(out)] + COARSE) == EXIT_OK
    return out


def test_pipeline_outputs(pipeline_dir):
    report = load_report(pipeline_dir / "report.json")
    assert report.stages == ["build", "flows", "residual", "perturb", "separate"]
    for name in ("datum", "phi_0", "phi_1", "omega_1_t0", "omega_2_t0", "residual_2_t0"):
        assert (pipeline_dir / "fields" / f"{name}.gns").exists()
    manifest = json.loads((pipeline_dir / "trajectory_manifest.json").read_text())
    assert {m["branch"] for m in manifest} == {1, 2}


def test_pipeline_separation_ledger(pipeline_dir):
    sep = load_report(pipeline_dir / "report.json").constants["separate"]
    assert sep["debug_separation"]["value"] == 0.0
    assert sep["head"]["value"] == pytest.approx(sep["head_exact"]["value"], rel=1e-12)
    assert sep["separation"]["value"] > 0


def test_report_reemits_and_compares(pipeline_dir, tmp_path, capsys):
    code = main(["report", "--out", str(pipeline_dir), "--format", "plot_data", "--compare", str(pipeline_dir)])
    assert code == EXIT_OK
    with open(pipeline_dir / "comparison.csv") as fh:
        rows = list(csv.DictReader(fh))
    assert len(rows) == 2 and rows[0]["y_alpha_2"] == rows[1]["y_alpha_2"]


def test_cli_verify_passes(tmp_path, capsys):
    code = main(["verify", "--out", str(tmp_path), "--override", "probes.enabled=false"])
    assert code == EXIT_OK
    summary = json.loads(capsys.readouterr().out.strip().splitlines()[-1])
    assert summary["checks_passed"] is True
