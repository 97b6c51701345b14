"""Prefect flow running the eig -> gen -> project -> train -> eval stages from one experiment config."""

from pathlib import Path

from loguru import logger
from prefect import flow, task
from prefect.task_runners import ConcurrentTaskRunner

from kiro_leno.operator_learning.config import ExperimentConfig, get_config
from kiro_leno.operator_learning.dataset.artifacts import save_basis, save_dataset, save_model, save_trajectories
from kiro_leno.operator_learning.dataset.projection import project_trajectories
from kiro_leno.operator_learning.entities.coeff_dataset import CoeffDataset
from kiro_leno.operator_learning.entities.coeff_net import CoeffNet
from kiro_leno.operator_learning.entities.eigen_basis import EigenBasis
from kiro_leno.operator_learning.entities.error_report import ErrorReport
from kiro_leno.operator_learning.entities.problem import ProblemSpec
from kiro_leno.operator_learning.entities.training import TrainConfig
from kiro_leno.operator_learning.entities.trajectory import TrajectorySet
from kiro_leno.operator_learning.leno.trainer import TrainResult, train
from kiro_leno.operator_learning.logs import configure_logging
from kiro_leno.operator_learning.metrics import check_thresholds, evaluate
from kiro_leno.operator_learning.pde_lab.reference_solver import generate_trajectories
from kiro_leno.operator_learning.pipeline import layer_sizes, problem_bases, problem_lift, reference_reaction
from kiro_leno.operator_learning.reporting.renderer import loss_plot_svg, write_svg


@task
def build_bases(problem: ProblemSpec, P: int, basis_path: Path) -> list[EigenBasis]:
    """Eigenpairs for every variable; the first basis is written to disk."""
    bases = problem_bases(problem, P)
    save_basis(bases[0], basis_path)
    return bases


@task
def generate(problem: ProblemSpec, seed: int, threads: int, force: bool, path: Path) -> TrajectorySet:
    defaults = problem.defaults
    traj = generate_trajectories(
        problem, defaults.samples, seed, defaults.record_dt, defaults.eval_horizon, threads, force
    )
    save_trajectories(traj, path)
    return traj


@task
def project(traj: TrajectorySet, bases: list[EigenBasis], path: Path) -> CoeffDataset:
    dataset = project_trajectories(traj, bases, problem_lift(traj.problem))
    save_dataset(dataset, path)
    return dataset


@task
def fit(dataset: CoeffDataset, hidden: list[int], config: TrainConfig, model_path: Path, reports: Path) -> TrainResult:
    net = CoeffNet.init(layer_sizes(dataset.width, hidden), config.seed)
    result = train(net, dataset, config, history_path=reports / "history.csv")
    save_model(result.net, model_path, result.state, {**result.meta, "lambdas": dataset.lambdas.tolist()})
    write_svg(loss_plot_svg(result.history), reports / "loss.svg")
    return result


@task
def score(
    result: TrainResult,
    dataset: CoeffDataset,
    bases: list[EigenBasis],
    traj: TrajectorySet,
    horizon: int | None,
    reports: Path,
) -> ErrorReport:
    reference = reference_reaction(traj.problem, problem_lift(traj.problem))
    report = evaluate(result.net, dataset, bases, reference, traj, horizon=min(horizon or dataset.N, dataset.N))
    report.to_csv(reports / "errors.csv")
    return report


@flow(
    name="leno-pipeline",
    description="Build the basis, generate and project reference data, train and evaluate a coefficient network",
    task_runner=ConcurrentTaskRunner(),
    validate_parameters=False,
)
def leno_pipeline_flow(
    config_path: str | None = None,
    seed: int = 0,
    overrides: list[str] | None = None,
    check: bool = True,
):
    """Run one experiment config end to end and write its artifacts under paths.out.

    Args:
        config_path: JSON/YAML experiment config; the default kpp experiment when omitted
        seed: Seed for data generation and network initialisation
        overrides: "section.key=value" assignments applied on top of the config
        check: Raise ThresholdError when an acceptance threshold is violated
    """
    settings = get_config()
    configure_logging(settings.log_level, settings.log_json)
    config = ExperimentConfig.from_file(config_path) if config_path else ExperimentConfig()
    config = config.with_overrides(overrides or [])
    problem = config.problem_spec()
    defaults = problem.defaults
    reports = config.paths.resolve("reports")
    config.to_file(config.paths.out / "config.json")
    logger.info(f"Pipeline flow for {problem.name} into {config.paths.out}")

    # Basis and trajectories do not depend on each other
    bases_future = build_bases.submit(problem, defaults.modes, config.paths.resolve("basis"))
    traj_future = generate.submit(
        problem, config.data.seed if config.data.seed is not None else seed, settings.threads,
        config.data.force_dt, config.paths.resolve("trajectories"),
    )
    bases, traj = bases_future.result(), traj_future.result()

    dataset = project(traj, bases, config.paths.resolve("dataset"))
    train_config = config.train_config(problem, seed, checkpoint_dir=config.paths.out / "checkpoints")
    result = fit(dataset, config.model.hidden or defaults.hidden, train_config, config.paths.resolve("model"), reports)
    report = score(result, dataset, bases, traj, config.horizons.eval or defaults.eval_horizon, reports)

    logger.info(report.to_table())
    if check:
        check_thresholds(report, config.acceptance.thresholds)
    print("LE-NO pipeline flow completed")
    return report.metrics()


if __name__ == "__main__":
    leno_pipeline_flow()
