"""WENO reconstruction of per-cell polynomials from cell averages.

Each cell gets a degree-M polynomial W_i(xi) on the reference cell
[-1/2, 1/2], built as a nonlinearly weighted combination of candidate
polynomials that match the cell averages over M+1-cell stencils: two
one-sided stencils for M = 1, and left-, right-biased plus a central stencil
for M >= 2.  The weights follow the standard finite-volume WENO recipe
``w_s ~ lambda_s / (sigma_s + eps)^r`` with the oscillation indicator
``sigma_s`` summing integrals of squared derivatives of the candidate.
Reconstruction is component-wise and conservative by construction.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

BOUNDARY_RULES = ("periodic", "transmissive")


@dataclass(frozen=True)
class WenoConfig:
    """Nonlinear weight parameters (literature defaults).

    ``eps`` regularizes the oscillation indicators; a sizeable value keeps a
    candidate whose indicator happens to vanish (a one-sided slope crossing
    zero in smooth data) from overriding the preferred central stencil.
    """

    lambda_central: float = 1.0e5
    lambda_sided: float = 1.0
    eps: float = 1.0e-6
    power: int = 8


@dataclass
class CellField:
    """Uniform 1-D mesh with per-cell conserved averages at one time level."""

    n_cells: int
    dx: float
    x_left: float
    averages: np.ndarray
    boundary: str = "periodic"

    def __post_init__(self):
        self.averages = np.atleast_2d(np.asarray(self.averages, dtype=float))
        if self.n_cells < 3:
            raise ValueError("need at least 3 cells")
        if self.dx <= 0.0:
            raise ValueError("dx must be positive")
        if self.boundary not in BOUNDARY_RULES:
            raise ValueError(f"boundary must be one of {BOUNDARY_RULES}")
        if self.averages.shape[0] != self.n_cells:
            raise ValueError("averages must have one row per cell")

    @property
    def m(self) -> int:
        return self.averages.shape[1]

    def cell_centers(self) -> np.ndarray:
        return self.x_left + (np.arange(self.n_cells) + 0.5) * self.dx

    def extended(self, n_ghost: int) -> np.ndarray:
        """Averages padded with ghost cells per the boundary rule."""
        if self.boundary == "periodic":
            idx = np.arange(-n_ghost, self.n_cells + n_ghost) % self.n_cells
            return self.averages[idx]
        return np.pad(self.averages, ((n_ghost, n_ghost), (0, 0)), mode="edge")


def _cell_moment_row(d: int, degree: int) -> np.ndarray:
    k = np.arange(degree + 1)
    return ((d + 0.5) ** (k + 1) - (d - 0.5) ** (k + 1)) / (k + 1)


def _oscillation_matrix(degree: int) -> np.ndarray:
    def even_moment(a):
        return 0.0 if a % 2 else 0.5**a / (a + 1)

    n = degree + 1
    osc = np.zeros((n, n))
    for p in range(n):
        for q in range(n):
            osc[p, q] = sum(
                math.perm(p, l) * math.perm(q, l) * even_moment(p + q - 2 * l)
                for l in range(1, min(p, q) + 1)
            )
    return osc


@lru_cache(maxsize=None)
def _stencil_tables(M: int):
    """Stencil layouts for degree M: (window start, coefficient map, weight).

    Each stencil is a window of cells around cell i plus a matrix mapping the
    window averages to polynomial coefficients.  One-sided stencils of M+1
    cells match all their cell averages; the central candidate is preferred
    via ``lambda_central``.  For M = 1 the central candidate keeps the cell
    mean and takes the central slope (conservative by construction).
    """
    maps = []
    if M == 1:
        for start in (-1, 0):
            mat = np.array([_cell_moment_row(start + j, M) for j in range(2)])
            maps.append((start, np.linalg.inv(mat), False))
        maps.append((-1, np.array([[0.0, 1.0, 0.0], [-0.5, 0.0, 0.5]]), True))
    else:
        for start, is_central in ((-M, False), (0, False), (-((M + 1) // 2), True)):
            mat = np.array([_cell_moment_row(start + j, M) for j in range(M + 1)])
            maps.append((start, np.linalg.inv(mat), is_central))
    return maps, _oscillation_matrix(M)


def reconstruct_padded(avg_padded: np.ndarray, M: int,
                       config: WenoConfig | None = None) -> np.ndarray:
    """WENO coefficients for the cells of a padded average array.

    ``avg_padded`` has shape (N + 2M, m); the M leading/trailing rows feed
    the widest stencils of the N cells of interest.  Returns coefficients
    with shape (N, M+1, m).
    """
    cfg = config or WenoConfig()
    maps, osc = _stencil_tables(M)
    n_out = avg_padded.shape[0] - 2 * M
    if n_out < 1:
        raise ValueError("padded array too short for the stencil width")

    num = 0.0
    den = 0.0
    for start, coeff_map, is_central in maps:
        width = coeff_map.shape[1]
        vals = np.stack([avg_padded[M + start + j: M + start + j + n_out]
                         for j in range(width)], axis=1)
        cand = np.einsum("kc,Ncm->Nkm", coeff_map, vals)
        sigma = np.einsum("Nkm,kl,Nlm->Nm", cand, osc, cand)
        lam = cfg.lambda_central if is_central else cfg.lambda_sided
        w = lam / (sigma + cfg.eps) ** cfg.power
        num = num + w[:, None, :] * cand
        den = den + w
    return num / den[:, None, :]


@dataclass(frozen=True)
class ReconstructionPoly:
    """Degree-M polynomial sum_k c_k xi^k for one cell, xi in [-1/2, 1/2]."""

    degree: int
    coefficients: np.ndarray  # (M+1, m)

    def evaluate(self, xi, l: int = 0) -> np.ndarray:
        return evaluate(self, xi, l)

    def cell_mean(self) -> np.ndarray:
        k = np.arange(self.degree + 1)
        moments = (0.5 ** (k + 1) - (-0.5) ** (k + 1)) / (k + 1)
        return moments @ self.coefficients


class ReconstructionSet:
    """Sequence of per-cell reconstruction polynomials (batched storage)."""

    def __init__(self, M: int, coeffs: np.ndarray):
        self.M = M
        self.coeffs = coeffs  # (N, M+1, m)

    def __len__(self) -> int:
        return self.coeffs.shape[0]

    def __getitem__(self, i: int) -> ReconstructionPoly:
        return ReconstructionPoly(degree=self.M, coefficients=self.coeffs[i])

    def evaluate(self, xi, l: int = 0) -> np.ndarray:
        """Values (or l-th xi-derivatives) at reference point(s) xi.

        Scalar xi gives (N, m); a 1-D array of G points gives (N, G, m).
        """
        basis = _basis(np.atleast_1d(np.asarray(xi, dtype=float)), self.M, l)
        out = np.einsum("gk,Nkm->Ngm", basis, self.coeffs)
        return out[:, 0] if np.ndim(xi) == 0 else out


def _basis(xi: np.ndarray, degree: int, l: int) -> np.ndarray:
    basis = np.zeros((len(xi), degree + 1))
    for k in range(l, degree + 1):
        basis[:, k] = math.perm(k, l) * xi ** (k - l)
    return basis


def evaluate(poly: ReconstructionPoly, xi, l: int = 0) -> np.ndarray:
    """l-th xi-derivative of the polynomial at xi (reference scale).

    Physical derivatives carry the caller-applied factor dx**-l; orders
    beyond the degree are exactly zero.
    """
    if l < 0:
        raise ValueError("derivative order must be non-negative")
    xi_arr = np.atleast_1d(np.asarray(xi, dtype=float))
    if l > poly.degree:
        out = np.zeros((len(xi_arr), poly.coefficients.shape[1]))
    else:
        out = _basis(xi_arr, poly.degree, l) @ poly.coefficients
    return out[0] if np.ndim(xi) == 0 else out


def reconstruct(field: CellField, M: int,
                config: WenoConfig | None = None) -> ReconstructionSet:
    """Per-cell WENO reconstruction of a field (one polynomial per cell)."""
    from .nodes import SUPPORTED_M

    if M not in SUPPORTED_M:
        raise ValueError(f"unsupported polynomial degree M={M}")
    padded = field.extended(M)
    return ReconstructionSet(M, reconstruct_padded(padded, M, config))
