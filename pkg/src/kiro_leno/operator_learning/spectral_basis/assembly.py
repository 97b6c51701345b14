"""
Finite-difference assembly of -div(D grad u) in weak (stiffness/weight) form.

K is an edge-based graph Laplacian: every grid edge between nodes a and b
contributes c (e_a - e_b)(e_a - e_b)^T with c = D_edge * transverse_weight / h.
Off-diagonal matrix coefficients add a per-cell cross term built from
cell-averaged gradients, which keeps K exactly symmetric. The discrete
operator is W^-1 K on the degrees of freedom.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np
import scipy.sparse as sp
from loguru import logger

from kiro_leno.operator_learning.entities.domain import BCKind, DiffusionKind, DiffusionSpec, Domain, DomainKind
from kiro_leno.operator_learning.errors import ValidationError

STABILITY_SAFETY = 0.9


def trapezoid_weights(n: int, h: float) -> np.ndarray:
    w = np.full(n, h)
    w[0] = w[-1] = h / 2
    return w


@dataclass(frozen=True, eq=False)
class DiscreteOperator:
    """Stiffness K on the full flat grid plus the index sets that restrict it."""

    domain: Domain
    bc_kind: BCKind
    stiffness: sp.csr_matrix  # (size, size)
    weights: np.ndarray  # (*grid)
    dof: np.ndarray  # flat indices of unknowns
    boundary: np.ndarray  # flat indices of boundary nodes
    boundary_measure: np.ndarray  # (*grid), boundary length carried by each node
    max_diffusion: float

    @property
    def n_dof(self) -> int:
        return int(self.dof.size)

    @cached_property
    def stiffness_dof(self) -> sp.csr_matrix:
        return self.stiffness[self.dof][:, self.dof].tocsr()

    @cached_property
    def weights_dof(self) -> np.ndarray:
        return self.weights.reshape(-1)[self.dof]

    def flux_vector(self, g: np.ndarray | None) -> np.ndarray | None:
        """b_i = g_i s_i for Neumann normal-flux data g, None when there is no flux."""
        if g is None or self.bc_kind != BCKind.NEUMANN:
            return None
        return (np.asarray(g, dtype=float) * self.boundary_measure).reshape(-1)

    def apply(self, fields: np.ndarray, flux: np.ndarray | None = None) -> np.ndarray:
        """div(D grad u) for a batch of grid functions (B, *grid); zero off the DOFs."""
        batch = fields.reshape(-1, self.domain.size)
        out = np.zeros_like(batch)
        ku = (self.stiffness @ batch.T).T
        values = -ku[:, self.dof]
        if flux is not None:
            values += flux[self.dof]
        out[:, self.dof] = values / self.weights_dof
        return out.reshape(fields.shape)

    def stable_dt(self) -> float:
        """Largest explicit Euler step dt <= 0.9 h^2 / (2 d max D)."""
        return STABILITY_SAFETY * self.domain.h_min**2 / (2 * self.domain.dim * self.max_diffusion)


def _axis_coefficients(domain: Domain, diffusion: DiffusionSpec) -> list[np.ndarray]:
    """Per-axis diffusivity sampled on the grid (diagonal entries for matrix fields)."""
    if diffusion.kind == DiffusionKind.SPD_MATRIX_FIELD:
        field = diffusion.matrix_on(domain)
        return [np.asarray(field[..., k, k]) for k in range(domain.dim)]
    scalar = diffusion.scalar_on(domain)
    return [scalar] * domain.dim


def _add_edges(rows: list, cols: list, vals: list, a: np.ndarray, b: np.ndarray, c: np.ndarray) -> None:
    rows += [a, a, b, b]
    cols += [a, b, a, b]
    vals += [c, -c, -c, c]


def _tensor_grid(domain: Domain, diffusion: DiffusionSpec) -> tuple[sp.csr_matrix, np.ndarray, np.ndarray]:
    shape, spacing = domain.shape, domain.spacing
    index = np.arange(domain.size).reshape(shape)
    axis_w = [trapezoid_weights(n, h) for n, h in zip(shape, spacing, strict=True)]
    weights = axis_w[0] if domain.dim == 1 else np.outer(axis_w[0], axis_w[1])
    coeffs = _axis_coefficients(domain, diffusion)

    rows: list = []
    cols: list = []
    vals: list = []
    for axis in range(domain.dim):
        lo = [slice(None)] * domain.dim
        hi = [slice(None)] * domain.dim
        lo[axis], hi[axis] = slice(0, -1), slice(1, None)
        lo, hi = tuple(lo), tuple(hi)
        d_edge = 0.5 * (coeffs[axis][lo] + coeffs[axis][hi])
        transverse = np.ones_like(d_edge)
        if domain.dim == 2:
            other = axis_w[1 - axis]
            transverse = np.broadcast_to(other[None, :] if axis == 0 else other[:, None], d_edge.shape)
        c = d_edge * transverse / spacing[axis]
        _add_edges(rows, cols, vals, index[lo].ravel(), index[hi].ravel(), c.ravel())

    if diffusion.kind == DiffusionKind.SPD_MATRIX_FIELD and domain.dim == 2:
        _add_cross_terms(domain, diffusion, index, rows, cols, vals)

    K = sp.coo_matrix(
        (np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))), shape=(domain.size, domain.size)
    ).tocsr()

    measure = np.zeros(shape)
    if domain.dim == 1:
        measure[0] = measure[-1] = 1.0
    else:
        wx, wy = axis_w
        measure[0, :] += wy
        measure[-1, :] += wy
        measure[:, 0] += wx
        measure[:, -1] += wx
    return K, weights, measure


def _add_cross_terms(domain, diffusion, index, rows, cols, vals) -> None:
    """Symmetric 9-point contribution of D_xy from cell-averaged gradients."""
    dxy = diffusion.matrix_on(domain)[..., 0, 1]
    if not np.any(dxy):
        return
    hx, hy = domain.spacing
    cell = 0.25 * (dxy[:-1, :-1] + dxy[1:, :-1] + dxy[:-1, 1:] + dxy[1:, 1:])
    nodes = [index[:-1, :-1], index[1:, :-1], index[:-1, 1:], index[1:, 1:]]
    a = np.array([-1.0, 1.0, -1.0, 1.0]) / (2 * hx)
    b = np.array([-1.0, -1.0, 1.0, 1.0]) / (2 * hy)
    local = np.outer(a, b) + np.outer(b, a)
    scale = (cell * hx * hy).ravel()
    for p in range(4):
        for q in range(4):
            if local[p, q] == 0.0:
                continue
            rows.append(nodes[p].ravel())
            cols.append(nodes[q].ravel())
            vals.append(scale * local[p, q])


def _masked_grid(
    domain: Domain, bc_kind: BCKind, diffusion: DiffusionSpec
) -> tuple[sp.csr_matrix, np.ndarray, np.ndarray]:
    if diffusion.kind == DiffusionKind.SPD_MATRIX_FIELD:
        matrix = diffusion.matrix_on(domain)
        if np.any(matrix[..., 0, 1]):
            raise ValidationError("off-diagonal diffusion is not supported on masked grids")
    mask = domain.mask
    hx, hy = domain.spacing
    index = np.arange(domain.size).reshape(domain.shape)
    coeffs = _axis_coefficients(domain, diffusion)
    transverse = (hy / hx, hx / hy)
    lengths = (hy, hx)

    rows: list = []
    cols: list = []
    vals: list = []
    diag = np.zeros(domain.shape)
    measure = np.zeros(domain.shape)
    padded = np.pad(mask, 1, constant_values=False)
    for axis in range(2):
        lo = [slice(None)] * 2
        hi = [slice(None)] * 2
        lo[axis], hi[axis] = slice(0, -1), slice(1, None)
        lo, hi = tuple(lo), tuple(hi)
        both = mask[lo] & mask[hi]
        d_edge = 0.5 * (coeffs[axis][lo] + coeffs[axis][hi])
        c = (d_edge * transverse[axis])[both]
        _add_edges(rows, cols, vals, index[lo][both], index[hi][both], c)

        for shift in (-1, 1):
            neighbour = np.roll(padded, shift, axis=axis)[1:-1, 1:-1]
            missing = mask & ~neighbour
            measure += missing * lengths[axis]
            if bc_kind == BCKind.HOMOGENEOUS_DIRICHLET:
                # zero-extension: the outside neighbour holds u = 0
                diag += missing * coeffs[axis] * transverse[axis]

    inside = index[mask]
    rows.append(inside)
    cols.append(inside)
    vals.append(diag[mask])
    K = sp.coo_matrix(
        (np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))), shape=(domain.size, domain.size)
    ).tocsr()
    weights = np.where(mask, hx * hy, 0.0)
    return K, weights, measure


def boundary_measure(domain: Domain) -> np.ndarray:
    """Boundary length carried by each node (point measure 1 at interval ends)."""
    return assemble_operator(domain, BCKind.NEUMANN, DiffusionSpec.constant(1.0)).boundary_measure


def assemble_operator(domain: Domain, bc_kind: BCKind | str, diffusion: DiffusionSpec) -> DiscreteOperator:
    bc_kind = BCKind(bc_kind)
    if bc_kind == BCKind.INHOMOGENEOUS_DIRICHLET:
        bc_kind_eff = BCKind.HOMOGENEOUS_DIRICHLET
    else:
        bc_kind_eff = bc_kind

    if domain.kind == DomainKind.MASKED_GRID:
        K, weights, measure = _masked_grid(domain, bc_kind_eff, diffusion)
        dof = np.flatnonzero(domain.mask.ravel())
        boundary = np.flatnonzero((measure > 0).ravel())
    else:
        K, weights, measure = _tensor_grid(domain, diffusion)
        boundary = np.flatnonzero((measure > 0).ravel())
        if bc_kind_eff == BCKind.HOMOGENEOUS_DIRICHLET:
            dof = np.setdiff1d(np.arange(domain.size), boundary)
        else:
            dof = np.arange(domain.size)

    logger.debug(f"Assembled {domain.kind.value} operator: {dof.size} dof, nnz={K.nnz}, bc={bc_kind.value}")
    return DiscreteOperator(
        domain=domain,
        bc_kind=bc_kind,
        stiffness=K,
        weights=weights,
        dof=dof,
        boundary=boundary,
        boundary_measure=measure,
        max_diffusion=diffusion.max_coefficient(),
    )
