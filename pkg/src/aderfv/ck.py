"""Recursive Cauchy-Kowalewskaya machinery for time derivatives.

Treating the flux Jacobian A and the source Jacobian B as space-time fields
(rather than state-dependent matrices) closes the Cauchy-Kowalewskaya
procedure into a recursion over two families of m-by-m matrices:

* ``matrix_d(l, k)``  -- coefficients of the expansion of the l-1-th spatial
  derivative of the time derivative in terms of pure spatial derivatives,
  built from binomial factors times spatial derivatives of A and B;
* ``matrix_c(k, l)``  -- coefficients of the k-th time derivative,
  ``dtQ[k] = sum_l C(k,l) dx^l Q + d_t^(k-2)(B dtQ)``, generated level by
  level from ``matrix_d`` and the time gradient of the previous level.

The time derivatives themselves follow the recursion
``dtQ[k] = M_k + B dtQ[k-1]`` with ``M_k`` assembled by :func:`m_vector` and
the base case ``dtQ[1] = -A dxQ + S``.  All functions broadcast over leading
array axes, so a "node" may equally be a single state or a whole grid of
cells times space-time nodes.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .nodes import NodeGrid, time_derivative


def binom(n: int, k: int) -> int:
    """Binomial coefficient with the convention C(n, k) = 0 for k < 0 or k > n."""
    if n < 0:
        raise ValueError("binom requires n >= 0")
    if k < 0 or k > n:
        return 0
    return math.comb(n, k)


def pascal_coeffs(l: int):
    """Rows (a, b) of the two Pascal-triangle coefficient families.

    Entry index k = 1..l+1 (0-based k-1): ``a[k] = C(l, l+1-k)`` multiplies
    the spatial-derivative-of-A term and ``b[k] = C(l-1, l+1-k)`` the
    B term in the mixed-derivative expansion of order l.
    """
    if l < 1:
        raise ValueError("pascal_coeffs requires l >= 1")
    a = np.array([binom(l, l + 1 - k) for k in range(1, l + 2)])
    b = np.array([binom(l - 1, l + 1 - k) for k in range(1, l + 2)])
    return a, b


def _matvec(mat: np.ndarray, vec: np.ndarray) -> np.ndarray:
    return (mat @ vec[..., None])[..., 0]


@dataclass
class NodeDerivativeStack:
    """Per-node workspace of states, Jacobians and their derivative stacks.

    Spatial derivative dicts are keyed by order (1..M for Q, 1..M-1 for A,
    1..M-2 for B); ``dtB`` holds time derivatives of B up to order M-2.
    All arrays are physically scaled.  ``dtQ`` is filled progressively by
    :func:`time_derivatives` in increasing order.
    """

    Q: np.ndarray
    A: np.ndarray
    B: np.ndarray
    S: np.ndarray
    dxQ: dict = field(default_factory=dict)
    dxA: dict = field(default_factory=dict)
    dxB: dict = field(default_factory=dict)
    dtB: dict = field(default_factory=dict)
    dtQ: dict = field(default_factory=dict)
    b_is_zero: bool = False

    def __post_init__(self):
        self.b_is_zero = not np.asarray(self.B).any()

    def Ax(self, order: int) -> np.ndarray:
        return self.A if order == 0 else self.dxA[order]

    def Bx(self, order: int) -> np.ndarray:
        return self.B if order == 0 else self.dxB[order]

    def Bt(self, order: int) -> np.ndarray:
        return self.B if order == 0 else self.dtB[order]


@dataclass
class CKCoefficients:
    """Matrices C(k, l), 1 <= l <= k <= M, with C(k, 0) = 0 by convention."""

    M: int
    mats: dict

    def __call__(self, k: int, l: int) -> np.ndarray:
        if not 1 <= k <= self.M or not 0 <= l <= k:
            raise KeyError(f"C({k},{l}) outside 1 <= l <= k <= {self.M}")
        if l == 0:
            return np.zeros_like(self.mats[(1, 1)])
        return self.mats[(k, l)]


def matrix_d(l: int, k: int, stack: NodeDerivativeStack) -> np.ndarray:
    """Matrix D(l, k) = C(l-2, l-1-k) Bx^(l-1-k) - C(l-1, l-k) Ax^(l-k).

    Vanishing binomial factors suppress the corresponding term entirely, so
    negative derivative orders are never touched (D(2,2) = -A,
    D(2,1) = B - Ax).
    """
    if l < 2 or not 1 <= k <= l:
        raise ValueError(f"matrix_d requires l >= 2 and 1 <= k <= l, got ({l},{k})")
    cb = 0 if stack.b_is_zero else binom(l - 2, l - 1 - k)
    ca = binom(l - 1, l - k)
    if cb and ca:
        return cb * stack.Bx(l - 1 - k) - ca * stack.Ax(l - k)
    if cb:
        return cb * stack.Bx(l - 1 - k)
    if ca:
        return -ca * stack.Ax(l - k)
    return np.zeros_like(stack.A)


def matrix_c(stack: NodeDerivativeStack, M: int, grid: NodeGrid,
             time_axis: int = -3) -> CKCoefficients:
    """Generate C(k, l) for all nodes, level by level.

    ``C(1,1) = -A``; the diagonal advances as ``C(k,k) = C(k-1,k-1) D(k,k)``
    and off-diagonal entries add the time gradient of the previous level,
    obtained by differentiating the interpolant of nodal C values across the
    time nodes (axis ``time_axis``) and scaling by dt**-1.
    """
    d_cache: dict = {}

    def d_mat(p, q):
        if (p, q) not in d_cache:
            d_cache[(p, q)] = matrix_d(p, q, stack)
        return d_cache[(p, q)]

    mats = {(1, 1): -stack.A}
    for k in range(2, M + 1):
        mats[(k, k)] = mats[(k - 1, k - 1)] @ d_mat(k, k)
        for l in range(1, k):
            acc = time_derivative(mats[(k - 1, l)], 1, grid, axis=time_axis)
            for m in range(max(l - 1, 1), k):
                acc = acc + mats[(k - 1, m)] @ d_mat(m + 1, l)
            mats[(k, l)] = acc
    return CKCoefficients(M=M, mats=mats)


def m_vector(k: int, stack: NodeDerivativeStack, C: CKCoefficients) -> np.ndarray:
    """M_k = sum_l C(k,l) dx^l Q + sum_{l<=k-2} binom(k-2,l-1) Bt^(k-1-l) dtQ[l].

    For k <= 2 the time-derivative sum is empty; for k >= 3 it reads
    ``stack.dtQ`` entries already produced by the recursion.
    """
    out = _matvec(C(k, 1), stack.dxQ[1])
    for l in range(2, k + 1):
        out = out + _matvec(C(k, l), stack.dxQ[l])
    if not stack.b_is_zero:
        for l in range(1, k - 1):
            coeff = binom(k - 2, l - 1)
            if coeff:
                out = out + coeff * _matvec(stack.Bt(k - 1 - l), stack.dtQ[l])
    return out


def time_derivatives(stack: NodeDerivativeStack, C: CKCoefficients,
                     S_value: np.ndarray, M: int) -> list:
    """Fill stack.dtQ with dtQ[1..M] and return them as a list.

    ``dtQ[1] = -A dxQ + S`` and ``dtQ[k] = M_k + B dtQ[k-1]``, computed in
    increasing k so that M_k can read the lower-order time derivatives.
    """
    terms = taylor_terms(stack, C, S_value, M)
    return [terms.dtQ[k] for k in range(1, M + 1)]


@dataclass
class TaylorTerms:
    """Time derivatives and their source-free (explicit) parts per order."""

    dtQ: dict
    explicit: dict


def taylor_terms(stack: NodeDerivativeStack, C: CKCoefficients,
                 S_value: np.ndarray, M: int, form: str = "recursive") -> TaylorTerms:
    """Time derivatives split as dtQ[k] = explicit[k] + B**(k-1) S.

    ``form="recursive"`` accumulates the explicit parts with the same
    recursion as dtQ (``E_k = M_k + B E_{k-1}``, so
    ``E_k = sum_r B**(k-r) M_r``); ``form="literal"`` instead uses the plain
    sum ``E_k = sum_{r=2..k} M_r`` (with E_1 = M_1), kept selectable for
    comparison.  dtQ itself always follows the recursion.
    """
    if form not in ("recursive", "literal"):
        raise ValueError(f"unknown functional form {form!r}")
    stack.dtQ.clear()
    dtq: dict = {}
    expl: dict = {}
    m_sum = None
    for k in range(1, M + 1):
        mk = m_vector(k, stack, C)
        if k == 1:
            dtq[1] = mk + S_value
            expl[1] = mk
        elif stack.b_is_zero:
            dtq[k] = mk
            if form == "recursive":
                expl[k] = mk
            else:
                m_sum = mk if m_sum is None else m_sum + mk
                expl[k] = m_sum
        else:
            dtq[k] = mk + _matvec(stack.B, dtq[k - 1])
            if form == "recursive":
                expl[k] = mk + _matvec(stack.B, expl[k - 1])
            else:
                m_sum = mk if m_sum is None else m_sum + mk
                expl[k] = m_sum
        stack.dtQ[k] = dtq[k]
    return TaylorTerms(dtQ=dtq, explicit=expl)


def leibniz_expand(l: int, a_derivs, b_derivs) -> np.ndarray:
    """Leibniz rule d_t^l (A.B) = sum_k C(l,k) A_t^(l-k) . B_t^(k).

    ``a_derivs``/``b_derivs`` are sequences indexed by derivative order
    0..l; the product is matrix-matrix or matrix-vector depending on the
    rank of the b entries.
    """
    if l < 0:
        raise ValueError("leibniz_expand requires l >= 0")
    if len(a_derivs) < l + 1 or len(b_derivs) < l + 1:
        raise ValueError("need derivative stacks up to order l")
    matvec = np.asarray(b_derivs[0]).ndim < np.asarray(a_derivs[0]).ndim
    out = None
    for k in range(l + 1):
        a = np.asarray(a_derivs[l - k])
        b = np.asarray(b_derivs[k])
        term = binom(l, k) * (_matvec(a, b) if matvec else a @ b)
        out = term if out is None else out + term
    return out
