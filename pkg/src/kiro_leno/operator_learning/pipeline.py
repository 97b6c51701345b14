"""
In-memory eig -> gen -> project -> train -> eval stages shared by the CLI,
the repro experiments and the Prefect flow.
"""

from __future__ import annotations

import time
from collections.abc import Callable
from dataclasses import dataclass, field

import numpy as np
from loguru import logger

from kiro_leno.operator_learning.dataset.projection import project_trajectories
from kiro_leno.operator_learning.entities.coeff_dataset import CoeffDataset
from kiro_leno.operator_learning.entities.coeff_net import CoeffNet
from kiro_leno.operator_learning.entities.eigen_basis import EigenBasis
from kiro_leno.operator_learning.entities.error_report import ErrorReport
from kiro_leno.operator_learning.entities.lift import BoundaryLift
from kiro_leno.operator_learning.entities.problem import ProblemSpec
from kiro_leno.operator_learning.entities.training import TrainConfig
from kiro_leno.operator_learning.entities.trajectory import TrajectorySet
from kiro_leno.operator_learning.errors import ValidationError
from kiro_leno.operator_learning.leno.trainer import TrainResult, train
from kiro_leno.operator_learning.lifting import harmonic_extend, shifted_reaction
from kiro_leno.operator_learning.metrics import evaluate
from kiro_leno.operator_learning.pde_lab.reactions import reaction_for
from kiro_leno.operator_learning.pde_lab.reference_solver import generate_trajectories
from kiro_leno.operator_learning.spectral_basis.basis import build_basis


def problem_bases(problem: ProblemSpec, P: int) -> list[EigenBasis]:
    """One basis per variable.

    Constant coefficients share the basis of the first variable (the dataset
    rescales eigenvalues per variable); other coefficients get their own.
    """
    if all(d.is_constant for d in problem.diffusion):
        basis = build_basis(problem.domain, problem.bc, problem.diffusion[0], P)
        return [basis] * problem.variables
    built: dict[str, EigenBasis] = {}
    bases = []
    for diffusion in problem.diffusion:
        key = diffusion.fingerprint()
        if key not in built:
            built[key] = build_basis(problem.domain, problem.bc, diffusion, P)
        bases.append(built[key])
    return bases


def problem_lift(problem: ProblemSpec) -> BoundaryLift | None:
    """Harmonic extension of the boundary data, or None for homogeneous problems."""
    if not problem.bc.has_data:
        return None
    return harmonic_extend(problem.domain, problem.bc, problem.diffusion[0])


def reference_reaction(problem: ProblemSpec, lift: BoundaryLift | None = None) -> Callable[[np.ndarray], np.ndarray]:
    """Closed-form F acting on the fields the network sees (shifted when lifted)."""
    return reaction_for(problem) if lift is None else shifted_reaction(problem, lift)


def layer_sizes(width: int, hidden: list[int] | tuple[int, ...]) -> list[int]:
    return [width, *hidden, width]


@dataclass
class PipelineRun:
    problem: ProblemSpec
    bases: list[EigenBasis]
    trajectories: TrajectorySet
    dataset: CoeffDataset
    lift: BoundaryLift | None
    result: TrainResult
    report: ErrorReport
    timings: dict[str, float] = field(default_factory=dict)

    @property
    def net(self) -> CoeffNet:
        return self.result.net


def generate_dataset(
    problem: ProblemSpec,
    P: int,
    M: int,
    seed: int,
    n_records: int,
    record_dt: float | None = None,
    threads: int = 1,
    force: bool = False,
    bases: list[EigenBasis] | None = None,
) -> tuple[list[EigenBasis], TrajectorySet, CoeffDataset, BoundaryLift | None]:
    bases = bases or problem_bases(problem, P)
    traj = generate_trajectories(problem, M, seed, record_dt, n_records, threads, force)
    lift = problem_lift(problem)
    return bases, traj, project_trajectories(traj, bases, lift), lift


def run_pipeline(
    problem: ProblemSpec,
    P: int,
    M: int,
    hidden: list[int],
    train_config: TrainConfig,
    n_records: int,
    eval_horizon: int | None = None,
    record_dt: float | None = None,
    threads: int = 1,
    force: bool = False,
    data: tuple[list[EigenBasis], TrajectorySet, CoeffDataset, BoundaryLift | None] | None = None,
) -> PipelineRun:
    """Build the basis, generate and project data, train, then evaluate on `eval_horizon` steps.

    `data` reuses the output of generate_dataset (several trainings on one dataset).
    """
    timings = {}
    started = time.perf_counter()
    if data is None:
        data = generate_dataset(problem, P, M, train_config.seed, n_records, record_dt, threads, force)
    bases, traj, dataset, lift = data
    if dataset.P != P:
        raise ValidationError(f"dataset carries P={dataset.P}, run asks for P={P}")
    timings["data"] = time.perf_counter() - started

    started = time.perf_counter()
    net = CoeffNet.init(layer_sizes(dataset.width, hidden), train_config.seed)
    result = train(net, dataset, train_config)
    timings["train"] = time.perf_counter() - started

    started = time.perf_counter()
    report = evaluate(
        result.net,
        dataset,
        bases,
        reference_F=reference_reaction(problem, lift),
        trajectories=traj,
        horizon=min(eval_horizon or dataset.N, dataset.N),
    )
    timings["eval"] = time.perf_counter() - started
    logger.info(f"Pipeline {problem.name} P={P} M={M}: " + ", ".join(f"{k} {v:.1f}s" for k, v in timings.items()))
    return PipelineRun(problem, bases, traj, dataset, lift, result, report, timings)
