"""One-step ADER finite-volume update and time-marching loop.

Each step: WENO-reconstruct every cell (plus one ghost cell per side so the
boundary interfaces have two predictors), solve the space-time predictor,
then update

    Qbar_i^{n+1} = Qbar_i^n - dt/dx (F_{i+1/2} - F_{i-1/2}) + dt S_i

with the interface flux a Gauss-weighted time average of Rusanov fluxes of
the predictor traces and the cell source a Newton-Cotes x Gauss quadrature
of the predictor nodes.  The time step obeys dt = C_cfl dx / lambda_abs with
lambda_abs the global maximum wave speed of the cell averages.
"""
from __future__ import annotations

import os
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Optional, TextIO

import numpy as np

from .nodes import NodeGrid, build_grid, gauss_legendre, newton_cotes_weights, SUPPORTED_M
from .predictor import PredictorConfig, predictor_solve
from .systems import HyperbolicSystem, InadmissibleStateError
from .weno import CellField, ReconstructionSet, WenoConfig, reconstruct_padded

THREADS_ENV_VAR = "ADERFV_THREADS"


class SchemeError(RuntimeError):
    """The marching loop aborted (non-finite data or step budget exhausted)."""


@dataclass
class RunConfig:
    """Complete description of one solver run."""

    system: HyperbolicSystem
    initial: Callable[[np.ndarray], np.ndarray]
    M: int
    n_cells: int
    x_left: float
    x_right: float
    t_out: float
    cfl: float = 0.9
    boundary: str = "periodic"
    weno: WenoConfig = field(default_factory=WenoConfig)
    predictor: PredictorConfig = field(default_factory=PredictorConfig)
    n_threads: Optional[int] = None
    verbose: bool = False
    max_steps: int = 2_000_000

    def __post_init__(self):
        if self.M not in SUPPORTED_M:
            raise ValueError(f"unsupported M={self.M} (orders 2..5)")
        if not 0.0 < self.cfl < 1.0:
            raise ValueError("CFL number must lie in (0, 1)")
        if self.t_out < 0.0:
            raise ValueError("t_out must be non-negative")
        if self.x_right <= self.x_left:
            raise ValueError("empty spatial domain")
        if self.n_cells < 3:
            raise ValueError("need at least 3 cells")

    @property
    def order(self) -> int:
        return self.M + 1

    @property
    def dx(self) -> float:
        return (self.x_right - self.x_left) / self.n_cells

    def thread_count(self) -> int:
        if self.n_threads is not None:
            return max(1, self.n_threads)
        return max(1, int(os.environ.get(THREADS_ENV_VAR, "1")))


def rusanov_flux(q_left: np.ndarray, q_right: np.ndarray,
                 system: HyperbolicSystem) -> np.ndarray:
    """F = (F(QL) + F(QR))/2 - s (QR - QL)/2, s the largest local wave speed."""
    if system.admissible is not None:
        ok = system.admissible(q_left) & system.admissible(q_right)
        if not np.all(ok):
            raise InadmissibleStateError(
                f"inadmissible state at interface indices {np.argwhere(~ok)[:10].tolist()}")
    s_left = np.max(np.abs(system.eigenvalues(q_left)), axis=-1)
    s_right = np.max(np.abs(system.eigenvalues(q_right)), axis=-1)
    s = np.maximum(s_left, s_right)[..., None]
    return 0.5 * (system.flux(q_left) + system.flux(q_right)) \
        - 0.5 * s * (q_right - q_left)


def interface_flux(left_trace: np.ndarray, right_trace: np.ndarray,
                   system: HyperbolicSystem, grid: NodeGrid) -> np.ndarray:
    """Gauss-weighted time average of Rusanov fluxes of the interface traces.

    Traces have shape (n_interfaces, n_T, m): the left cell evaluated at
    xi = +1/2 and the right cell at xi = -1/2, at every time node.
    """
    fh = rusanov_flux(left_trace, right_trace, system)
    return np.einsum("j,njm->nm", grid.tau_weights, fh)


def cell_source(q_nodal: np.ndarray, system: HyperbolicSystem,
                grid: NodeGrid) -> np.ndarray:
    """Newton-Cotes (space) x Gauss (time) quadrature of S over the nodes."""
    w_space = newton_cotes_weights(grid.M + 1)
    s_nodal = system.source(q_nodal)
    return np.einsum("s,j,nsjm->nm", w_space, grid.tau_weights, s_nodal)


def cfl_timestep(field: CellField, system: HyperbolicSystem, cfl: float) -> float:
    """dt = C_cfl dx / lambda_abs from the cell-average wave speeds."""
    lam = float(np.max(np.abs(system.eigenvalues(field.averages))))
    if not np.isfinite(lam):
        raise SchemeError("non-finite wave speed in CFL estimate")
    if lam == 0.0:
        raise ValueError("no wave propagation: maximum eigenvalue is zero")
    return cfl * field.dx / lam


def _predict(config: RunConfig, W_nodal: np.ndarray, dxW: np.ndarray,
             grid: NodeGrid):
    """Predictor over all cells, optionally split into thread blocks.

    The per-cell solve is independent, so the result is bitwise identical
    for any thread count.
    """
    n_threads = config.thread_count()
    n_cells = W_nodal.shape[0]
    if n_threads <= 1 or n_cells < 2 * n_threads:
        node_set = predictor_solve(config.system, W_nodal, dxW, grid,
                                   config.predictor)
        return node_set.Q, node_set.residuals

    bounds = np.linspace(0, n_cells, n_threads + 1, dtype=int)
    blocks = [(int(a), int(b)) for a, b in zip(bounds[:-1], bounds[1:]) if b > a]
    q_out = np.empty(W_nodal.shape[:2] + (grid.n_time, W_nodal.shape[-1]))
    residual_lists = [None] * len(blocks)

    def work(idx, lo, hi):
        ns = predictor_solve(config.system, W_nodal[lo:hi], dxW[lo:hi], grid,
                             config.predictor)
        q_out[lo:hi] = ns.Q
        residual_lists[idx] = ns.residuals

    with ThreadPoolExecutor(max_workers=n_threads) as pool:
        futures = [pool.submit(work, i, lo, hi)
                   for i, (lo, hi) in enumerate(blocks)]
        for fut in futures:
            fut.result()
    n_sweeps = max(len(r) for r in residual_lists)
    merged = [max(r[i] for r in residual_lists if len(r) > i)
              for i in range(n_sweeps)]
    return q_out, merged


def step(field: CellField, config: RunConfig, dt: float):
    """Advance the field by one time step of size dt.

    Returns the updated field and the predictor residual trace for the step.
    """
    M = config.M
    grid = build_grid(M, field.dx, dt)
    avg_ext = field.extended(M + 1)
    coeffs = reconstruct_padded(avg_ext, M, config.weno)  # cells -1 .. N
    recon = ReconstructionSet(M, coeffs)
    W_nodal = recon.evaluate(grid.xi)
    dxW = recon.evaluate(grid.xi, l=1) / field.dx

    q_nodal, residuals = _predict(config, W_nodal, dxW, grid)

    left_trace = q_nodal[:-1, -1]    # cells -1..N-1 at xi = +1/2
    right_trace = q_nodal[1:, 0]     # cells 0..N at xi = -1/2
    fluxes = interface_flux(left_trace, right_trace, config.system, grid)
    sources = cell_source(q_nodal[1:-1], config.system, grid)

    new_avg = field.averages \
        - (dt / field.dx) * (fluxes[1:] - fluxes[:-1]) \
        + dt * sources
    new_field = CellField(n_cells=field.n_cells, dx=field.dx,
                          x_left=field.x_left, averages=new_avg,
                          boundary=field.boundary)
    return new_field, residuals


def project_initial(initial: Callable[[np.ndarray], np.ndarray],
                    n_cells: int, x_left: float, dx: float,
                    boundary: str = "periodic") -> CellField:
    """Cell averages of the initial condition by 5-point Gauss per cell."""
    nodes, wts = gauss_legendre(5, -0.5, 0.5)
    centers = x_left + (np.arange(n_cells) + 0.5) * dx
    xg = centers[:, None] + nodes[None, :] * dx
    vals = np.asarray(initial(xg), dtype=float)
    avg = np.einsum("g,ngm->nm", wts, vals)
    return CellField(n_cells=n_cells, dx=dx, x_left=x_left, averages=avg,
                     boundary=boundary)


@dataclass
class RunResult:
    """Final field plus marching diagnostics."""

    field: CellField
    t_final: float
    n_steps: int
    seconds: float
    predictor_residuals: list = field(default_factory=list)


def run(config: RunConfig, log_stream: Optional[TextIO] = None) -> RunResult:
    """March from the projected initial condition to t_out.

    Emits per-step lines ``t dt lambda_abs`` on ``log_stream`` when the
    config is verbose; the final step is clipped to land exactly on t_out.
    """
    field_now = project_initial(config.initial, config.n_cells, config.x_left,
                                config.dx, config.boundary)
    t = 0.0
    n_steps = 0
    residual_log = []
    tol = 1e-12 * max(1.0, config.t_out)
    t_start = time.perf_counter()
    while config.t_out - t > tol:
        dt_cfl = cfl_timestep(field_now, config.system, config.cfl)
        dt = min(dt_cfl, config.t_out - t)
        if config.verbose and log_stream is not None:
            lam = config.cfl * field_now.dx / dt_cfl
            log_stream.write(f"{t:.8e} {dt:.8e} {lam:.8e}\n")
        field_now, residuals = step(field_now, config, dt)
        if not np.all(np.isfinite(field_now.averages)):
            bad = np.argwhere(~np.isfinite(field_now.averages))[:5]
            raise SchemeError(
                f"non-finite averages after step {n_steps + 1} at "
                f"(cell, component) {bad.tolist()}")
        if config.predictor.monitor:
            residual_log.append(residuals)
        t += dt
        n_steps += 1
        if n_steps > config.max_steps:
            raise SchemeError(f"step budget {config.max_steps} exhausted at t={t:g}")
    seconds = time.perf_counter() - t_start
    return RunResult(field=field_now, t_final=t, n_steps=n_steps,
                     seconds=seconds, predictor_residuals=residual_log)
