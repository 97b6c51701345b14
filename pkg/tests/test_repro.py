import json

import pytest

from kiro_leno.operator_learning.cli.main import EXIT_THRESHOLD, main
from kiro_leno.operator_learning.cli.repro import REPRO_CATALOG, RUNNERS, ReproOutcome, run_repro
from kiro_leno.operator_learning.errors import ThresholdError, ValidationError
from kiro_leno.operator_learning.pde_lab.catalog import CATALOG

TINY = {
    "description": "heat on a coarse grid",
    "kind": "single",
    "problem": "heat",
    "overrides": {"resolution": 17},
    "samples": 2,
    "modes": 4,
    "hidden": [8],
    "epochs": 2,
    "records": 3,
    "train_horizon": 3,
    "eval_horizon": 3,
    "thresholds": {"E_L2": 1.0e3},
}


@pytest.mark.parametrize("name", sorted(REPRO_CATALOG))
def test_catalog_entries_are_runnable(name):
    entry = REPRO_CATALOG[name]
    assert entry["kind"] in RUNNERS
    assert entry["problem"] in CATALOG
    assert entry["description"]
    assert entry.get("budget_s", 1) > 0


def test_unknown_experiment(tmp_path):
    with pytest.raises(ValidationError, match="unknown experiment"):
        run_repro("nope", out_dir=tmp_path)


def test_tiny_experiment_passes(tmp_path, mocker):
    mocker.patch.dict(REPRO_CATALOG, {"tiny": TINY})
    outcome = run_repro("tiny", seed=0, out_dir=tmp_path)
    assert outcome.passed
    summary = json.loads((tmp_path / "summary.json").read_text(encoding="utf-8"))
    assert summary["passed"] is True and summary["values"]["E_L2"] == pytest.approx(outcome.values["E_L2"])
    assert (tmp_path / "history_run.csv").exists()
    assert outcome.line().startswith("tiny: PASS E_L2=")


def test_failed_threshold_exits_with_threshold_code(tmp_path, mocker):
    mocker.patch.dict(REPRO_CATALOG, {"tiny": {**TINY, "thresholds": {"E_L2": 0.0}}})
    outcome = run_repro("tiny", seed=0, out_dir=tmp_path / "direct")
    assert not outcome.passed
    with pytest.raises(ThresholdError):
        outcome.raise_failure()
    assert main(["repro", "tiny", "--out", str(tmp_path / "cli")]) == EXIT_THRESHOLD
    assert (tmp_path / "cli" / "repro" / "tiny" / "summary.json").exists()


def test_outcome_bounds():
    outcome = ReproOutcome(name="x")
    outcome.upper("a", 0.5, 1.0)
    outcome.lower("b", 0.5, 0.1)
    outcome.upper("c", None, 0.0)
    assert outcome.passed
    outcome.lower("d", 0.05, 0.1)
    assert not outcome.passed
    assert "lower bound" in str(outcome.failures[0])
    assert outcome.to_json()["values"] == {"a": 0.5, "b": 0.5, "c": None, "d": 0.05}


@pytest.mark.acceptance
@pytest.mark.parametrize("name", sorted(REPRO_CATALOG))
def test_full_scale_experiment(name, tmp_path):
    outcome = run_repro(name, seed=0, threads=8, out_dir=tmp_path)
    assert outcome.passed, outcome.line()
