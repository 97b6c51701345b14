"""Eigenpairs of the assembled operator: analytic separable modes, dense eigh or shift-invert Lanczos."""

from __future__ import annotations

import numpy as np
import scipy.linalg as sla
import scipy.sparse as sp
import scipy.sparse.linalg as spla
from loguru import logger

from kiro_leno.operator_learning.entities.domain import BCKind, Domain
from kiro_leno.operator_learning.errors import CapacityError, NumericalError
from kiro_leno.operator_learning.spectral_basis.assembly import DiscreteOperator

DENSE_DOF_LIMIT = 4096
RESIDUAL_TOL = 1e-8
SIGN_THRESHOLD = 1e-8
SHIFT = -1.0


def fix_signs(modes: np.ndarray) -> np.ndarray:
    """Flip each row so its first component with |v| > 1e-8 is positive."""
    significant = np.abs(modes) > SIGN_THRESHOLD
    first = np.argmax(significant, axis=1)
    lead = modes[np.arange(modes.shape[0]), first]
    signs = np.where(lead < 0, -1.0, 1.0)
    return modes * signs[:, None]


def orthonormalize(modes: np.ndarray, weights: np.ndarray) -> np.ndarray:
    """Cholesky re-orthonormalisation of rows under the weighted inner product."""
    gram = (modes * weights) @ modes.T
    try:
        L = sla.cholesky(gram, lower=True)
    except sla.LinAlgError as e:
        raise NumericalError(f"mode Gram matrix is not positive definite: {e}") from e
    return sla.solve_triangular(L, modes, lower=True)


def _axis_modes(n: int, h: float, d: float, bc_kind: BCKind, count: int | None = None):
    """Discrete sine (Dirichlet) or cosine (Neumann) modes of the 3-point stencil on n nodes."""
    if bc_kind == BCKind.NEUMANN:
        k = np.arange(0, n)
        trig = np.cos
    else:
        k = np.arange(1, n - 1)
        trig = np.sin
    if count is not None:
        k = k[:count]
    lam = d * (4.0 / h**2) * np.sin(k * np.pi / (2 * (n - 1))) ** 2
    j = np.arange(n)
    vecs = trig(np.pi * np.outer(k, j) / (n - 1))
    return lam, vecs, k


def analytic_modes(
    domain: Domain, bc_kind: BCKind, factors: tuple[float, ...], P: int
) -> tuple[np.ndarray, np.ndarray]:
    """Tensor-product trigonometric eigenpairs for separable constant coefficients.

    Eigenvalues equal those of the assembled 3-point operator exactly; ties are
    ordered by (lambda, k_x, k_y).
    """
    shape, spacing = domain.shape, domain.spacing
    if domain.dim == 1:
        lam, vecs, _ = _axis_modes(shape[0], spacing[0], factors[0], bc_kind, count=P)
        return lam, vecs

    lx, _, kx = _axis_modes(shape[0], spacing[0], factors[0], bc_kind)
    ly, _, ky = _axis_modes(shape[1], spacing[1], factors[1], bc_kind)
    total = (lx[:, None] + ly[None, :]).ravel()
    KX, KY = np.meshgrid(kx, ky, indexing="ij")
    order = np.lexsort((KY.ravel(), KX.ravel(), total))[:P]
    ix, iy = np.unravel_index(order, (lx.size, ly.size))

    _, vx, _ = _axis_modes(shape[0], spacing[0], factors[0], bc_kind, count=int(ix.max()) + 1)
    _, vy, _ = _axis_modes(shape[1], spacing[1], factors[1], bc_kind, count=int(iy.max()) + 1)
    modes = (vx[ix][:, :, None] * vy[iy][:, None, :]).reshape(P, -1)
    return total[order], modes


def rayleigh_residuals(op: DiscreteOperator, lambdas: np.ndarray, phi: np.ndarray) -> np.ndarray:
    """||K phi - lambda W phi|| / ||W phi|| per mode; phi is (n_dof, P)."""
    w = op.weights_dof[:, None]
    r = op.stiffness_dof @ phi - lambdas[None, :] * (w * phi)
    return np.linalg.norm(r, axis=0) / np.linalg.norm(w * phi, axis=0)


def solve_modes(op: DiscreteOperator, P: int) -> tuple[np.ndarray, np.ndarray, str]:
    """P smallest eigenpairs of K phi = lambda W phi on the DOFs, phi W-orthonormal, (n_dof, P)."""
    n = op.n_dof
    if P > n:
        raise CapacityError(f"P={P} exceeds the {n} interior degrees of freedom")
    scale = 1.0 / np.sqrt(op.weights_dof)
    if n <= DENSE_DOF_LIMIT or P >= n - 1:
        S = op.stiffness_dof.toarray() * scale[:, None] * scale[None, :]
        S = 0.5 * (S + S.T)
        lambdas, y = sla.eigh(S, subset_by_index=[0, P - 1])
        solver = "dense"
    else:
        Ds = sp.diags(scale)
        S = (Ds @ op.stiffness_dof @ Ds).tocsc()
        S = 0.5 * (S + S.T)
        v0 = np.full(n, 1.0 / np.sqrt(n))
        try:
            lambdas, y = spla.eigsh(S, k=P, sigma=SHIFT, which="LM", v0=v0)
        except spla.ArpackNoConvergence as e:
            raise NumericalError(
                f"shift-invert Lanczos did not converge: {len(e.eigenvalues)} of {P} pairs found"
            ) from e
        order = np.argsort(lambdas, kind="stable")
        lambdas, y = lambdas[order], y[:, order]
        solver = "lanczos"

    phi = y * scale[:, None]
    residual = rayleigh_residuals(op, lambdas, phi)
    worst = float(residual.max())
    if worst > RESIDUAL_TOL:
        raise NumericalError(f"eigenpairs did not converge: max Rayleigh residual {worst:.3e}")
    logger.debug(f"{solver} eigensolve: n_dof={n}, P={P}, max residual {worst:.3e}")
    return lambdas, phi, solver
