"""Space-time predictor: implicit Taylor expansion at the cell node grid.

Per cell, the solution at each space-time node (xi_m, tau_j) satisfies

    Q = W(xi_m) - sum_k ((-tau)^k / k!) * G(k),      tau = tau_j * dt,

where G(k) is the k-th time derivative delivered by the recursive
Cauchy-Kowalewskaya functional.  The source part B**(k-1) S(Q) of G(k) is
kept implicit; everything else is frozen at the current iterate.  The
resulting algebraic system H(Y) = 0 is relaxed by a nested Picard iteration:
M outer sweeps, each refreshing the interpolated derivative stacks and
performing a single Newton step per node.

All arrays are batched over cells: Q has shape (n_cells, n_S, n_T, m).
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np

from .ck import (CKCoefficients, NodeDerivativeStack, _matvec, matrix_c,
                 taylor_terms)
from .nodes import NodeGrid, space_derivative, time_derivative
from .systems import HyperbolicSystem

_SPACE_AXIS = 1
_TIME_AXIS = 2


class PredictorError(RuntimeError):
    """Newton system became singular (stiffness beyond the method's design)."""


@dataclass(frozen=True)
class PredictorConfig:
    """Iteration controls for the nested Picard/Newton solve.

    The sweep budget is always M; cells whose residual drops below
    ``residual_tol`` stop updating early (no accuracy change).  With
    ``monitor=True`` the residual after the final sweep is also computed so
    the recorded sequence covers every iterate.
    """

    functional_form: str = "recursive"
    residual_tol: float = 1.0e-12
    monitor: bool = False


@dataclass
class SpaceTimeNodeSet:
    """Predictor values and workspace for a batch of cells."""

    Q: np.ndarray                 # (n_cells, n_S, n_T, m)
    W_nodal: np.ndarray           # (n_cells, n_S, m)
    dxW: np.ndarray               # physically scaled reconstruction gradient
    grid: NodeGrid
    stack: NodeDerivativeStack | None = None
    C: CKCoefficients | None = None
    sweeps: int = 0
    residuals: list = field(default_factory=list)


def initial_guess(system: HyperbolicSystem, W_nodal: np.ndarray,
                  dxW: np.ndarray, grid: NodeGrid) -> np.ndarray:
    """Second-order implicit starting guess at every space-time node.

    Linearizing Q = W + tau(-A dxQ + S(Q)) around W gives the per-node solve

        [I - tau B(W)] Q = W - tau A(W) dxW + tau (S(W) - B(W) W),

    with tau the physical time offset.  The affine source terms vanish for
    linear sources but are essential near equilibria of nonlinear ones
    (constant data with S(W) = 0 must yield Q = W exactly).  A singular or
    amplifying matrix falls back to Q = W with a warning.
    """
    m = W_nodal.shape[-1]
    tau = (grid.tau * grid.dt)[None, None, :, None]
    a_w = system.flux_jacobian(W_nodal)
    b_w = system.source_jacobian(W_nodal)
    adv = _matvec(a_w, dxW)
    if not b_w.any():
        forcing = system.source(W_nodal) - adv
        return W_nodal[:, :, None, :] + tau * forcing[:, :, None, :]
    affine = system.source(W_nodal) - _matvec(b_w, W_nodal)
    rhs = W_nodal[:, :, None, :] + tau * (affine - adv)[:, :, None, :]
    mats = np.eye(m) - tau[..., None] * b_w[:, :, None, :, :]
    w_nodes = np.broadcast_to(W_nodal[:, :, None, :], rhs.shape)
    det = np.linalg.det(mats)
    good = np.abs(det) > np.finfo(float).tiny
    out = w_nodes.copy()
    if good.all():
        out = np.linalg.solve(mats, rhs[..., None])[..., 0]
    elif good.any():
        warnings.warn("stiff-initialization failure: singular [I - tau B], "
                      "falling back to Q = W at the affected nodes")
        out[good] = np.linalg.solve(mats[good], rhs[good][..., None])[..., 0]
    # The linearized solve only stabilizes when the relaxation is
    # dissipative; near an anti-dissipative equilibrium (tau B -> 1) it
    # amplifies instead of damping, so such nodes also fall back to W.
    scale = 1.0 + np.max(np.abs(w_nodes), axis=-1)
    wild = ~np.isfinite(out).all(axis=-1)
    wild |= np.max(np.abs(out - w_nodes), axis=-1) > 10.0 * scale
    if wild.any():
        out = np.where(wild[..., None], w_nodes, out)
    return out


def populate_stacks(system: HyperbolicSystem, Q: np.ndarray,
                    grid: NodeGrid) -> NodeDerivativeStack:
    """Evaluate A, B, S at the nodes and fill all derivative stacks.

    Spatial derivatives: Q to order M, A to M-1, B to M-2 (interpolation
    across the space nodes at fixed time node); temporal derivatives of B to
    order M-2 (interpolation across the time nodes at fixed space node).
    All physically scaled.
    """
    M = grid.M
    stack = NodeDerivativeStack(
        Q=Q,
        A=system.flux_jacobian(Q),
        B=system.source_jacobian(Q),
        S=system.source(Q),
    )
    for l in range(1, M + 1):
        stack.dxQ[l] = space_derivative(Q, l, grid, axis=_SPACE_AXIS)
    for l in range(1, M):
        stack.dxA[l] = space_derivative(stack.A, l, grid, axis=_SPACE_AXIS)
    if not stack.b_is_zero:
        for l in range(1, M - 1):
            stack.dxB[l] = space_derivative(stack.B, l, grid, axis=_SPACE_AXIS)
            stack.dtB[l] = time_derivative(stack.B, l, grid, axis=_TIME_AXIS)
    return stack


def residual_and_jacobian(stack: NodeDerivativeStack, C: CKCoefficients,
                          W_nodal: np.ndarray, tau_phys: np.ndarray, M: int,
                          form: str = "recursive"):
    """Algebraic system H and its Jacobian J at the current iterate.

    H(Y) = Y - W + sum_k c_k [explicit part of G(k)] + sum_k c_k B**(k-1) S(Y)
    with c_k = (-tau)^k / k!, evaluated at Y = stack.Q;
    J = I + sum_k c_k B**(k-1) B(Y).
    """
    m = W_nodal.shape[-1]
    terms = taylor_terms(stack, C, stack.S, M, form=form)
    h = stack.Q - W_nodal[:, :, None, :]
    source_free = not stack.B.any() and not stack.S.any()
    b_pow = None if source_free else np.broadcast_to(np.eye(m), stack.B.shape)
    implicit_weight = None
    for k in range(1, M + 1):
        ck = ((-tau_phys) ** k / math.factorial(k))[None, None, :, None]
        h = h + ck * terms.explicit[k]
        if source_free:
            continue
        contrib = ck[..., None] * b_pow
        implicit_weight = contrib if implicit_weight is None else implicit_weight + contrib
        if k < M:
            b_pow = b_pow @ stack.B
    if source_free:
        return h, None
    h = h + _matvec(implicit_weight, stack.S)
    jac = np.eye(m) + implicit_weight @ stack.B
    return h, jac


def newton_sweep(stack: NodeDerivativeStack, C: CKCoefficients,
                 W_nodal: np.ndarray, grid: NodeGrid,
                 cfg: PredictorConfig):
    """One Newton step Q <- Q - delta, J delta = H, at every node.

    Returns the updated nodal values together with the per-cell max-norm of
    H at the incoming iterate.
    """
    tau_phys = grid.tau * grid.dt
    h, jac = residual_and_jacobian(stack, C, W_nodal, tau_phys, grid.M,
                                   form=cfg.functional_form)
    cell_res = np.max(np.abs(h), axis=(1, 2, 3))
    if jac is None:   # source-free: the system is affine with unit Jacobian
        return stack.Q - h, cell_res
    try:
        delta = np.linalg.solve(jac, h[..., None])[..., 0]
    except np.linalg.LinAlgError:
        det = np.linalg.det(jac)
        bad = np.argwhere(~(np.abs(det) > np.finfo(float).tiny))
        raise PredictorError(
            "singular Newton system at (cell, space node, time node) indices "
            f"{bad[:10].tolist()}") from None
    return stack.Q - delta, cell_res


def predictor_solve(system: HyperbolicSystem, W_nodal: np.ndarray,
                    dxW: np.ndarray, grid: NodeGrid,
                    cfg: PredictorConfig | None = None) -> SpaceTimeNodeSet:
    """Run the nested Picard iteration for a batch of cells.

    M sweeps of {populate stacks, build C matrices, Newton step at every
    node}; cells whose residual already meets the tolerance keep their
    values (the early exit is per cell, so results do not depend on how
    cells are batched).
    """
    cfg = cfg or PredictorConfig()
    M = grid.M
    Q = initial_guess(system, W_nodal, dxW, grid)
    out = SpaceTimeNodeSet(Q=Q, W_nodal=W_nodal, dxW=dxW, grid=grid)
    active = np.ones(Q.shape[0], dtype=bool)
    for _ in range(M):
        if not active.any():
            break
        stack = populate_stacks(system, Q, grid)
        C = matrix_c(stack, M, grid, time_axis=_TIME_AXIS)
        q_new, cell_res = newton_sweep(stack, C, W_nodal, grid, cfg)
        out.residuals.append(float(cell_res.max()))
        active = active & (cell_res > cfg.residual_tol)
        Q = np.where(active[:, None, None, None], q_new, Q)
        out.stack, out.C = stack, C
        out.sweeps += 1
    out.Q = Q
    if cfg.monitor:
        stack = populate_stacks(system, Q, grid)
        C = matrix_c(stack, M, grid, time_axis=_TIME_AXIS)
        h, _ = residual_and_jacobian(stack, C, W_nodal, grid.tau * grid.dt,
                                     M, form=cfg.functional_form)
        out.residuals.append(float(np.max(np.abs(h))))
        out.stack, out.C = stack, C
    return out
