"""Subcommand handlers; each reads and writes .leno containers and CSV reports under the run directory."""

from __future__ import annotations

import argparse
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from loguru import logger
from rich.console import Console

from kiro_leno.operator_learning.config import ExperimentConfig, RuntimeSettings
from kiro_leno.operator_learning.dataset.artifacts import (
    load_basis,
    load_dataset,
    load_model,
    load_trajectories,
    save_basis,
    save_dataset,
    save_model,
    save_trajectories,
)
from kiro_leno.operator_learning.dataset.projection import project_trajectories
from kiro_leno.operator_learning.entities.coeff_net import CoeffNet
from kiro_leno.operator_learning.entities.eigen_basis import EigenBasis
from kiro_leno.operator_learning.errors import ValidationError
from kiro_leno.operator_learning.leno.operator import predict
from kiro_leno.operator_learning.leno.trainer import train
from kiro_leno.operator_learning.metrics import check_thresholds, evaluate
from kiro_leno.operator_learning.pde_lab.reference_solver import generate_trajectories
from kiro_leno.operator_learning.pipeline import layer_sizes, problem_bases, problem_lift, reference_reaction
from kiro_leno.operator_learning.reporting.renderer import (
    history_table,
    line_plot_svg,
    loss_plot_svg,
    norm_curve_rows,
    write_rows_csv,
    write_svg,
)
from kiro_leno.operator_learning.transfer import (
    accuracy_table,
    synthetic_patients,
    transfer_accuracy,
    transfer_train,
    write_accuracy_csv,
)

console = Console()


@dataclass
class Context:
    """Resolved config, runtime settings and flags shared by every handler."""

    config: ExperimentConfig
    settings: RuntimeSettings
    args: argparse.Namespace

    @property
    def threads(self) -> int:
        return self.args.threads or self.settings.threads

    def path(self, name: str) -> Path:
        return self.config.paths.resolve(name)

    def reports(self, filename: str) -> Path:
        return self.path("reports") / filename

    def seed(self, section: str) -> int:
        seed = self.args.seed if self.args.seed is not None else getattr(self.config, section).seed
        if seed is None:
            raise ValidationError(f"--seed is required for {self.args.command}")
        return int(seed)


def _require(path: Path) -> Path:
    if not path.exists():
        raise FileNotFoundError(f"missing input {path}; run the producing command first")
    return path


def _bases(ctx: Context, variables: int) -> list[EigenBasis]:
    return [load_basis(_require(ctx.path("basis")))] * variables


def _print(text: str) -> None:
    console.print(text, markup=False, highlight=False)


def cmd_eig(ctx: Context) -> int:
    problem = ctx.config.problem_spec()
    bases = problem_bases(problem, problem.defaults.modes)
    if any(b is not bases[0] for b in bases):
        raise ValidationError("variables with different non-constant diffusion cannot share one basis file")
    basis = bases[0]
    digest = save_basis(basis, ctx.path("basis"))
    ctx.config.to_file(ctx.config.paths.out / "config.json")
    _print(
        f"basis {basis.solver} P={basis.P} lambda[0]={basis.lambdas[0]:.6g} lambda[-1]={basis.lambdas[-1]:.6g} "
        f"-> {ctx.path('basis')} ({digest})"
    )
    return 0


def cmd_gen(ctx: Context) -> int:
    problem = ctx.config.problem_spec()
    defaults = problem.defaults
    traj = generate_trajectories(
        problem,
        M=defaults.samples,
        seed=ctx.seed("data"),
        record_dt=defaults.record_dt,
        n_records=defaults.eval_horizon,
        threads=ctx.threads,
        force=ctx.args.force_dt or ctx.config.data.force_dt,
    )
    digest = save_trajectories(traj, ctx.path("trajectories"))
    _print(f"trajectories M={traj.M} N={traj.N} grid={traj.grid_shape} -> {ctx.path('trajectories')} ({digest})")
    return 0


def cmd_project(ctx: Context) -> int:
    traj = load_trajectories(_require(ctx.path("trajectories")))
    bases = _bases(ctx, traj.variables)
    lift = problem_lift(traj.problem) if traj.problem is not None else None
    dataset = project_trajectories(traj, bases, lift)
    digest = save_dataset(dataset, ctx.path("dataset"))
    residual_check = dataset.verify_residuals()
    _print(
        f"dataset M={dataset.M} N={dataset.N} width={dataset.width} lifted={lift is not None} "
        f"residual check {residual_check:.1e} -> {ctx.path('dataset')} ({digest})"
    )
    return 0


def cmd_train(ctx: Context) -> int:
    dataset = load_dataset(_require(ctx.path("dataset")))
    problem = ctx.config.problem_spec()
    seed = ctx.seed("training")
    config = ctx.config.train_config(problem, seed, checkpoint_dir=ctx.config.paths.out / "checkpoints")
    hidden = ctx.config.model.hidden or problem.defaults.hidden
    net = CoeffNet.init(layer_sizes(dataset.width, hidden), seed)
    result = train(net, dataset, config, history_path=ctx.reports("history.csv"))
    meta = {
        **result.meta,
        "lambdas": dataset.lambdas.tolist(),
        "record_dt": float(dataset.tau[0]),
        "problem": dataset.provenance.get("problem"),
    }
    digest = save_model(result.net, ctx.path("model"), result.state, meta)
    if ctx.args.plot:
        write_svg(loss_plot_svg(result.history), ctx.reports("loss.svg"))
    _print(history_table(result.history, every=max(1, config.epochs // 10)))
    _print(f"model {'-'.join(map(str, net.layer_sizes))} -> {ctx.path('model')} ({digest})")
    return 0


def cmd_eval(ctx: Context) -> int:
    net, _, meta = load_model(_require(ctx.path("model")))
    dataset = load_dataset(_require(ctx.path("dataset")))
    if meta.get("basis_hash") and meta["basis_hash"] != dataset.basis_hash:
        raise ValidationError("model was trained on a different basis than the dataset")
    traj = load_trajectories(ctx.path("trajectories")) if ctx.path("trajectories").exists() else None
    bases = _bases(ctx, dataset.variables)
    reference = None
    if traj is not None and traj.problem is not None:
        reference = reference_reaction(traj.problem, problem_lift(traj.problem))
    horizon = ctx.config.horizons.eval or meta.get("horizon")
    report = evaluate(net, dataset, bases, reference, traj, horizon=min(horizon or dataset.N, dataset.N))
    report.to_csv(ctx.reports("errors.csv"))
    _print(report.to_table())
    check_thresholds(report, ctx.config.acceptance.thresholds)
    return 0


def cmd_predict(ctx: Context) -> int:
    net, _, meta = load_model(_require(ctx.path("model")))
    traj = load_trajectories(_require(ctx.path("trajectories")))
    bases = _bases(ctx, traj.variables)
    sample = ctx.args.sample
    if not 0 <= sample < traj.M:
        raise ValidationError(f"sample {sample} out of range for {traj.M} trajectories")
    horizon = ctx.args.horizon if ctx.args.horizon is not None else traj.N
    dt = float(meta.get("record_dt") or traj.times[1] - traj.times[0])
    lambdas = np.asarray(meta["lambdas"]) * float(meta.get("diffusion_scale", 1.0)) if "lambdas" in meta else None
    lift = problem_lift(traj.problem) if traj.problem is not None else None
    prediction = predict(
        net,
        bases,
        traj.samples[sample, 0],
        horizon,
        dt,
        lambdas=lambdas,
        lift=lift,
        reference=traj.samples[sample],
        time_scale=float(meta.get("alpha", 1.0)),
        diffusion=traj.problem.diffusion if traj.problem is not None else None,
    )
    headers, rows = norm_curve_rows(prediction.times, prediction.norms, prediction.reference_norms)
    out = write_rows_csv(ctx.reports("predict_norms.csv"), headers, rows)
    if ctx.args.plot:
        series = {"predicted": (prediction.times, prediction.norms)}
        if prediction.reference_norms is not None:
            n = prediction.reference_norms.size
            series["reference"] = (traj.times[:n], prediction.reference_norms)
        write_svg(
            line_plot_svg(series, title="L2 norm", xlabel="t", ylabel="|u|", dashed=["reference"]),
            ctx.reports("predict_norms.svg"),
        )
    _print(f"predicted {horizon} steps from sample {sample} -> {out} ({len(rows)} rows)")
    return 0


def cmd_transfer(ctx: Context) -> int:
    base_path = Path(ctx.args.base_model) if ctx.args.base_model else ctx.path("model")
    base, _, meta = load_model(_require(base_path))
    bases: list[EigenBasis]
    traj = None
    if ctx.args.synthetic_alpha is not None:
        problem = ctx.config.problem_spec()
        seed = ctx.seed("data")
        traj = synthetic_patients(
            problem,
            M=problem.defaults.samples,
            seed=seed,
            alpha=ctx.args.synthetic_alpha,
            record_dt=problem.defaults.record_dt,
            n_records=problem.defaults.train_horizon,
            threads=ctx.threads,
        )
        bases = _bases(ctx, traj.variables)
        dataset = project_trajectories(traj, bases, problem_lift(problem))
    else:
        dataset = load_dataset(_require(Path(ctx.args.dataset) if ctx.args.dataset else ctx.path("dataset")))
        bases = _bases(ctx, dataset.variables)
    result = transfer_train(
        base,
        dataset,
        ctx.config.transfer,
        basis_hash=meta.get("basis_hash"),
        history_path=ctx.reports("transfer_history.csv"),
    )
    accuracies = {"subject": transfer_accuracy(result, dataset, bases, traj)}
    write_accuracy_csv(accuracies, ctx.reports("transfer_accuracy.csv"))
    save_model(
        result.net,
        ctx.config.paths.out / "transfer_model.leno",
        meta={**meta, "alpha": result.alpha, "diffusion_scale": result.diffusion, "transfer": True},
    )
    _print(accuracy_table(accuracies))
    logger.info(f"fitted alpha={result.alpha:.4f} D={result.diffusion:.4f}")
    return 0


def cmd_repro(ctx: Context) -> int:
    from kiro_leno.operator_learning.cli.repro import REPRO_CATALOG, run_repro

    if ctx.args.list or not ctx.args.name:
        for name, entry in REPRO_CATALOG.items():
            _print(f"{name:<20} {entry['description']}")
        return 0
    outcome = run_repro(
        ctx.args.name,
        seed=ctx.args.seed if ctx.args.seed is not None else 0,
        threads=ctx.threads,
        out_dir=ctx.config.paths.out / "repro" / ctx.args.name,
        plot=ctx.args.plot,
    )
    _print(outcome.line())
    if not outcome.passed:
        outcome.raise_failure()
    return 0


HANDLERS = {
    "eig": cmd_eig,
    "gen": cmd_gen,
    "project": cmd_project,
    "train": cmd_train,
    "eval": cmd_eval,
    "predict": cmd_predict,
    "transfer": cmd_transfer,
    "repro": cmd_repro,
}
