"""Named end-to-end experiments with pass/fail bounds, loaded from repro_catalog.yml."""

from __future__ import annotations

import json
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

import numpy as np
import yaml
from loguru import logger

from kiro_leno.operator_learning.dataset.projection import project_trajectories
from kiro_leno.operator_learning.entities.coeff_net import AdamSettings
from kiro_leno.operator_learning.entities.problem import ProblemSpec
from kiro_leno.operator_learning.entities.training import LossMode, TrainConfig
from kiro_leno.operator_learning.entities.transfer import TransferConfig
from kiro_leno.operator_learning.errors import ThresholdError, ValidationError
from kiro_leno.operator_learning.leno.operator import predict
from kiro_leno.operator_learning.metrics import fit_order
from kiro_leno.operator_learning.pde_lab.catalog import builtin_problem
from kiro_leno.operator_learning.pde_lab.reference_solver import generate_trajectories
from kiro_leno.operator_learning.pipeline import (
    PipelineRun,
    generate_dataset,
    problem_bases,
    problem_lift,
    run_pipeline,
)
from kiro_leno.operator_learning.reporting.renderer import (
    line_plot_svg,
    loss_plot_svg,
    norm_curve_rows,
    summary_line,
    write_history_csv,
    write_rows_csv,
    write_svg,
)
from kiro_leno.operator_learning.transfer import synthetic_patients, transfer_accuracy, transfer_train

# Load once at module import
with open(Path(__file__).parent / "repro_catalog.yml", encoding="utf-8") as f:
    _cfg = yaml.safe_load(f)

REPRO_CATALOG: dict[str, dict[str, Any]] = _cfg["experiments"]


@dataclass
class Failure:
    metric: str
    value: float
    limit: float
    note: str = ""

    def __str__(self) -> str:
        return f"{self.metric}={self.value:.3e} vs {self.limit:.3e}{' ' + self.note if self.note else ''}"


@dataclass
class ReproOutcome:
    name: str
    values: dict[str, float | None] = field(default_factory=dict)
    failures: list[Failure] = field(default_factory=list)
    wall: float = 0.0
    budget: float | None = None

    @property
    def passed(self) -> bool:
        return not self.failures

    def upper(self, metric: str, value: float | None, limit: float, note: str = "") -> None:
        self.values[metric] = value
        if value is not None and value > limit:
            self.failures.append(Failure(metric, value, limit, note))

    def lower(self, metric: str, value: float | None, limit: float, note: str = "") -> None:
        self.values[metric] = value
        if value is not None and value < limit:
            self.failures.append(Failure(metric, value, limit, note or "(lower bound)"))

    def line(self) -> str:
        return summary_line(self.name, self.passed, {**self.values, "wall_s": self.wall}, [str(f) for f in self.failures])

    def raise_failure(self) -> None:
        first = self.failures[0]
        raise ThresholdError(first.metric, first.value, first.limit)

    def to_json(self) -> dict:
        return {
            "name": self.name,
            "passed": self.passed,
            "values": self.values,
            "failures": [str(f) for f in self.failures],
            "wall_s": self.wall,
            "budget_s": self.budget,
        }


def _problem(entry: dict) -> ProblemSpec:
    return builtin_problem(entry["problem"], entry.get("overrides", {}))


def _train_config(entry: dict, seed: int, loss_mode: str = "combined") -> TrainConfig:
    return TrainConfig(
        epochs=entry["epochs"],
        loss_mode=LossMode(loss_mode),
        seed=seed,
        optimizer=AdamSettings(),
        horizon=entry["train_horizon"],
        log_every=max(1, entry["epochs"] // 10),
    )


def _save_run(run: PipelineRun, out_dir: Path, tag: str, plot: bool) -> None:
    write_history_csv(run.result.history, out_dir / f"history_{tag}.csv")
    run.report.to_csv(out_dir / f"errors_{tag}.csv")
    if plot:
        write_svg(loss_plot_svg(run.result.history, title=f"Training loss ({tag})"), out_dir / f"loss_{tag}.svg")


def _run_single(entry: dict, seed: int, threads: int, out_dir: Path, plot: bool, outcome: ReproOutcome) -> None:
    problem = _problem(entry)
    run = run_pipeline(
        problem,
        entry["modes"],
        entry["samples"],
        entry["hidden"],
        _train_config(entry, seed),
        n_records=entry["records"],
        eval_horizon=entry["eval_horizon"],
        threads=threads,
    )
    _save_run(run, out_dir, "run", plot)
    for metric, limit in entry.get("thresholds", {}).items():
        outcome.upper(metric, run.report.metrics()[metric], limit)
    for metric, limit in entry.get("per_variable", {}).items():
        for v in run.report.per_variable:
            outcome.upper(f"{metric}[{v.variable}]", getattr(v, metric.lower()), limit)

    if "predict" in entry:
        spec = entry["predict"]
        deviations = []
        for sample in range(min(spec["samples"], run.trajectories.M)):
            prediction = predict(
                run.net,
                run.bases,
                run.trajectories.samples[sample, 0],
                spec["horizon"],
                float(run.dataset.tau[0]),
                lambdas=run.dataset.lambdas,
                lift=run.lift,
                reference=run.trajectories.samples[sample],
            )
            deviations.append(prediction.deviation(start=spec["start"]))
            if sample == 0:
                headers, rows = norm_curve_rows(prediction.times, prediction.norms, prediction.reference_norms)
                write_rows_csv(out_dir / "predict_norms.csv", headers, rows)
                if plot:
                    series = {
                        "predicted": (prediction.times, prediction.norms),
                        "reference": (prediction.times, prediction.reference_norms),
                    }
                    svg = line_plot_svg(series, title="L2 norm", xlabel="t", ylabel="|u|", dashed=["reference"])
                    write_svg(svg, out_dir / "predict_norms.svg")
        outcome.upper("norm_deviation", max(deviations), spec["max_deviation"])


def _run_criteria(entry: dict, seed: int, threads: int, out_dir: Path, plot: bool, outcome: ReproOutcome) -> None:
    problem = _problem(entry)
    data = generate_dataset(problem, entry["modes"], entry["samples"], seed, entry["records"], threads=threads)
    runs = {}
    for mode in LossMode:
        runs[mode] = run_pipeline(
            problem,
            entry["modes"],
            entry["samples"],
            entry["hidden"],
            _train_config(entry, seed, mode.value),
            n_records=entry["records"],
            eval_horizon=entry["eval_horizon"],
            data=data,
        )
        _save_run(runs[mode], out_dir, mode.value, plot)
        outcome.values[f"E_L2[{mode.value}]"] = runs[mode].report.e_l2
    for mode in (LossMode.COMBINED, LossMode.RESIDUAL_ONLY):
        for metric, limit in entry["learned_max"].items():
            outcome.upper(f"{metric}[{mode.value}]", runs[mode].report.metrics()[metric], limit)
    for metric, limit in entry["data_only_min"].items():
        outcome.lower(f"{metric}[data-only]", runs[LossMode.DATA_ONLY].report.metrics()[metric], limit)
    combined = runs[LossMode.COMBINED].result.final.loss_residual
    residual_only = runs[LossMode.RESIDUAL_ONLY].result.final.loss_residual
    outcome.upper("L^R[combined]", combined, residual_only, "(must not exceed residual-only L^R)")
    if plot:
        series = {}
        for mode, run in runs.items():
            epochs = [r.epoch for r in run.result.history]
            series[f"L^R {mode.value}"] = (epochs, [r.loss_residual for r in run.result.history])
        write_svg(line_plot_svg(series, title="Residual loss by criterion", xlabel="epoch", ylabel="L^R", log_y=True), out_dir / "criteria.svg")


def _run_convergence(entry: dict, seed: int, threads: int, out_dir: Path, plot: bool, outcome: ReproOutcome) -> None:
    problem = _problem(entry)
    traj = generate_trajectories(problem, entry["samples"], seed, None, entry["records"], threads)
    lift = problem_lift(problem)
    errors: dict[int, tuple[float, float]] = {}
    for P in entry["P_values"]:
        bases = problem_bases(problem, P)
        data = (bases, traj, project_trajectories(traj, bases, lift), lift)
        run = run_pipeline(
            problem, P, entry["samples"], entry["hidden"], _train_config(entry, seed),
            n_records=entry["records"], eval_horizon=entry["eval_horizon"], data=data,
        )
        _save_run(run, out_dir, f"P{P}", plot)
        errors[P] = (run.report.e_l2, run.report.e_nonlinear)
    write_rows_csv(out_dir / "errors_vs_P.csv", ["P", "E_L2", "E_Nonlinear"], [[P, *e] for P, e in errors.items()])

    fit = entry["fit_P"]
    for index, metric in enumerate(("E_L2", "E_Nonlinear")):
        slope, r2 = fit_order(fit, [errors[P][index] for P in fit])
        outcome.upper(f"slope[{metric}]", slope, entry["max_slope"])
        outcome.values[f"r2[{metric}]"] = r2
        reference = errors[max(fit)][index]
        for P in (p for p in entry["P_values"] if p > max(fit)):
            outcome.upper(f"{metric}[P={P}]", errors[P][index], entry["saturation_factor"] * reference)
    if plot:
        Ps = list(errors)
        series = {"E_L2": (Ps, [errors[P][0] for P in Ps]), "E_Nonlinear": (Ps, [errors[P][1] for P in Ps])}
        write_svg(line_plot_svg(series, title="Errors versus P", xlabel="P", ylabel="error", log_x=True, log_y=True), out_dir / "errors_vs_P.svg")


def _run_sweep(entry: dict, seed: int, threads: int, out_dir: Path, plot: bool, outcome: ReproOutcome) -> None:
    metric = entry["metric"]
    values = []
    for index, variant in enumerate(entry["variants"]):
        merged = {**entry, **variant}
        run = run_pipeline(
            _problem(merged), merged["modes"], merged["samples"], merged["hidden"], _train_config(merged, seed),
            n_records=merged["records"], eval_horizon=merged["eval_horizon"], threads=threads,
        )
        _save_run(run, out_dir, f"variant{index}", plot)
        label = ",".join(f"{k}={v}" for k, v in variant.items())
        values.append(run.report.metrics()[metric])
        outcome.values[f"{metric}[{label}]"] = values[-1]
    outcome.upper(f"{metric}[last]", values[-1], values[0] * (1.0 + entry.get("slack", 0.0)), "(last variant vs first)")


def _run_transfer(entry: dict, seed: int, threads: int, out_dir: Path, plot: bool, outcome: ReproOutcome) -> None:
    problem = _problem(entry)
    base = run_pipeline(
        problem, entry["modes"], entry["samples"], entry["hidden"], _train_config(entry, seed),
        n_records=entry["records"], eval_horizon=entry["eval_horizon"], threads=threads,
    )
    _save_run(base, out_dir, "base", plot)
    subjects = synthetic_patients(
        problem, entry["subjects"], seed + 1, entry["alpha_true"], n_records=entry["records"], threads=threads
    )
    dataset = project_trajectories(subjects, base.bases, base.lift)
    config = TransferConfig(**entry["transfer"], seed=seed)
    result = transfer_train(base.net, dataset, config, basis_hash=base.dataset.basis_hash)
    write_history_csv(result.history, out_dir / "history_transfer.csv")
    accuracy = transfer_accuracy(result, dataset, base.bases, subjects)

    alpha_error = abs(result.alpha - entry["alpha_true"]) / entry["alpha_true"]
    outcome.values["alpha"] = result.alpha
    outcome.upper("alpha_rel_error", alpha_error, entry["alpha_tolerance"])
    outcome.lower("1-L^D", accuracy["1-L^D"], entry["accuracy_min"])
    outcome.values["1-E_L2"] = accuracy["1-E_L2"]
    outcome.values["1-E_Res"] = accuracy["1-E_Res"]
    changed = [name for name in result.net.frozen if not np.array_equal(result.net.params[name], base.net.params[name])]
    outcome.upper("frozen_changed", float(len(changed)), 0.0)


RUNNERS = {
    "single": _run_single,
    "criteria": _run_criteria,
    "convergence": _run_convergence,
    "sweep": _run_sweep,
    "transfer": _run_transfer,
}


def run_repro(name: str, seed: int = 0, threads: int = 1, out_dir: Path | str = "runs/repro", plot: bool = False) -> ReproOutcome:
    """Run one catalog experiment end to end and judge it against its bounds."""
    if name not in REPRO_CATALOG:
        raise ValidationError(f"unknown experiment '{name}', expected one of {sorted(REPRO_CATALOG)}")
    entry = REPRO_CATALOG[name]
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    outcome = ReproOutcome(name=name, budget=entry.get("budget_s"))
    logger.info(f"repro {name}: {entry['description']}")

    started = time.perf_counter()
    RUNNERS[entry["kind"]](entry, seed, threads, out_dir, plot, outcome)
    outcome.wall = time.perf_counter() - started
    if outcome.budget is not None and outcome.wall > outcome.budget:
        outcome.failures.append(Failure("wall_s", outcome.wall, outcome.budget, "(over budget)"))

    (out_dir / "summary.json").write_text(json.dumps(outcome.to_json(), indent=2) + "\n", encoding="utf-8")
    logger.info(outcome.line())
    return outcome
