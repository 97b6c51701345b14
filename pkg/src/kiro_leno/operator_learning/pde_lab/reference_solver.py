"""Explicit Euler reference solutions on the same stencils as the eigenbasis."""

from __future__ import annotations

import math
import time
from concurrent.futures import ThreadPoolExecutor

import numpy as np
from loguru import logger

from kiro_leno.operator_learning.entities.domain import BCKind, DiffusionSpec
from kiro_leno.operator_learning.entities.problem import ProblemSpec
from kiro_leno.operator_learning.entities.trajectory import TrajectorySet
from kiro_leno.operator_learning.errors import DivergenceError, StabilityError, ValidationError
from kiro_leno.operator_learning.pde_lab.grf import GRFParams, sample_grf_batch
from kiro_leno.operator_learning.pde_lab.reactions import evaluate_reaction
from kiro_leno.operator_learning.spectral_basis.assembly import DiscreteOperator, assemble_operator
from kiro_leno.operator_learning.spectral_basis.basis import build_basis

GRF_MODES = 256


def _operators(problem: ProblemSpec) -> list[DiscreteOperator]:
    return [assemble_operator(problem.domain, problem.bc.kind, d) for d in problem.diffusion]


def stable_dt(problem: ProblemSpec) -> float:
    return min(op.stable_dt() for op in _operators(problem))


def _pinned_values(problem: ProblemSpec, op: DiscreteOperator) -> tuple[np.ndarray, np.ndarray]:
    """Flat indices that are not unknowns and the values they are held at (g or 0)."""
    pinned = np.setdiff1d(np.arange(problem.domain.size), op.dof)
    if problem.bc.kind == BCKind.INHOMOGENEOUS_DIRICHLET:
        return pinned, problem.bc.g.reshape(-1)[pinned]
    return pinned, np.zeros(pinned.size)


def evolve_reference(
    problem: ProblemSpec,
    u0: np.ndarray,
    dt: float,
    n_steps: int,
    record_every: int = 1,
    force: bool = False,
    seed: int | None = None,
) -> TrajectorySet:
    """u^{n+1} = u^n + dt (div(D grad u^n) + F(u^n)), recording every `record_every` steps.

    u0 is (c, *grid) or a batch (B, c, *grid).
    """
    ops = _operators(problem)
    bound = min(op.stable_dt() for op in ops)
    if dt > bound and not force:
        raise StabilityError(dt, bound)
    if n_steps < 0 or record_every < 1 or n_steps % record_every:
        raise ValidationError(f"n_steps={n_steps} must be a non-negative multiple of record_every={record_every}")

    c, grid = problem.variables, problem.domain.shape
    u = np.array(u0, dtype=float)
    single = u.shape == (c, *grid)
    if single:
        u = u[None]
    if u.shape[1:] != (c, *grid):
        raise ValidationError(f"initial condition shape {np.shape(u0)} does not match ({c}, *{grid})")

    flat = u.reshape(u.shape[0], c, -1)
    pins = [_pinned_values(problem, op) for op in ops]
    fluxes = [op.flux_vector(problem.bc.g) for op in ops]
    for v, (idx, values) in enumerate(pins):
        flat[:, v, idx] = values

    records = [flat.copy()]
    for step in range(1, n_steps + 1):
        reaction = evaluate_reaction(problem, flat.reshape(u.shape)).reshape(flat.shape)
        for v, op in enumerate(ops):
            flat[:, v] += dt * (op.apply(flat[:, v].reshape(-1, *grid), fluxes[v]).reshape(flat.shape[0], -1) + reaction[:, v])
            idx, values = pins[v]
            flat[:, v, idx] = values
        if not np.all(np.isfinite(flat)):
            raise DivergenceError("reference solution became non-finite", step)
        if step % record_every == 0:
            records.append(flat.copy())

    samples = np.stack(records, axis=1).reshape(u.shape[0], len(records), c, *grid)
    times = np.arange(len(records)) * dt * record_every
    return TrajectorySet(times=times, samples=samples, problem=problem, seed=seed)


def solver_substeps(record_dt: float, bound: float) -> int:
    """Fewest equal substeps of record_dt that respect the stability bound."""
    return max(1, math.ceil(record_dt / bound - 1e-9))


def initial_conditions(
    problem: ProblemSpec, count: int, seed: int, grf: GRFParams | None = None, grf_modes: int = GRF_MODES
) -> np.ndarray:
    """Independent GRF draws per variable, plus the harmonic lift for inhomogeneous Dirichlet data."""
    from kiro_leno.operator_learning.lifting import harmonic_extend

    n_dof = assemble_operator(problem.domain, problem.bc.kind, DiffusionSpec.constant(1.0)).n_dof
    basis = build_basis(problem.domain, problem.bc, DiffusionSpec.constant(1.0), min(grf_modes, n_dof))
    fields = sample_grf_batch(basis, count, seed, problem.variables, grf)
    if problem.bc.kind == BCKind.INHOMOGENEOUS_DIRICHLET:
        fields = fields + harmonic_extend(problem.domain, problem.bc).u_g
    return fields


def generate_trajectories(
    problem: ProblemSpec,
    M: int,
    seed: int,
    record_dt: float | None = None,
    n_records: int | None = None,
    threads: int = 1,
    force: bool = False,
    grf: GRFParams | None = None,
    grf_modes: int = GRF_MODES,
) -> TrajectorySet:
    """M seeded reference trajectories recorded every record_dt for n_records steps.

    The solver step is the largest stable divisor of record_dt; with `force`
    it is record_dt itself.
    """
    defaults = problem.defaults
    record_dt = record_dt or (defaults.record_dt if defaults else None)
    n_records = n_records if n_records is not None else (defaults.eval_horizon if defaults else None)
    if record_dt is None or n_records is None:
        raise ValidationError("record_dt and n_records are required for problems without defaults")
    if M < 1:
        raise ValidationError(f"M must be >= 1, got {M}")

    bound = stable_dt(problem)
    substeps = 1 if force else solver_substeps(record_dt, bound)
    dt = record_dt / substeps
    u0 = initial_conditions(problem, M, seed, grf, grf_modes)
    logger.info(
        f"Generating {M} {problem.name} trajectories: {n_records} records of {record_dt}, "
        f"{substeps} substeps (dt={dt:.3e}, bound {bound:.3e}), threads={threads}"
    )

    started = time.perf_counter()
    chunks = np.array_split(np.arange(M), max(1, min(threads, M)))
    with ThreadPoolExecutor(max_workers=len(chunks)) as pool:
        parts = list(
            pool.map(
                lambda idx: evolve_reference(problem, u0[idx], dt, n_records * substeps, substeps, force=force).samples,
                chunks,
            )
        )
    samples = np.concatenate(parts, axis=0)
    times = np.arange(n_records + 1) * record_dt
    logger.info(f"Generated trajectories {samples.shape} in {time.perf_counter() - started:.1f}s")
    return TrajectorySet(times=times, samples=samples, problem=problem, seed=seed)
