r"""Skew-symmetric matrices, Pfaffians and Fredholm determinants of 2x2 kernels.

A matrix kernel :math:`G(x, y)` with blocks :math:`G_{ab}` and the
antisymmetry :math:`G(x, y) = -G(y, x)^T` defines a Pfaffian point process.
Its gap probabilities are :math:`\sqrt{\det(1 - J^{-1} G)}` on
:math:`(s, \infty)`, where :math:`J = [[0, 1], [-1, 0]]`. Discretizing on
Gauss-Legendre nodes gives a 2m x 2m skew matrix
:math:`M = W^{1/2} G W^{1/2}`, interleaved so that row ``2k + a`` is node
``k`` and block index ``a``. Then
:math:`\det(1 - J^{-1} G) \approx \det(J_m - M) = \mathrm{Pf}(J_m - M)^2`.

Kernels may carry a jump term ``c * sgn(x - y)`` in the (2, 2) block. Weighted
point evaluation of a discontinuous kernel converges only like ``m**-2``, so
that term is integrated exactly against the Lagrange basis of each panel
piece instead (product integration). The result stays exactly skew.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import Callable

import numpy as np

from .config import TOL

__all__ = [
    "AntisymmetryError",
    "DiscretizationError",
    "PanelTooShort",
    "SeriesDivergence",
    "SkewMatrix",
    "pfaffian",
    "pfaffian_bruteforce",
    "congruence_pfaffian_check",
    "QuadPanel",
    "MatrixKernel",
    "assemble_block_kernel",
    "block_pfaffian_matrix",
    "fredholm_pfaffian",
    "fredholm_det_nystrom",
    "fredholm_det_series",
]


class AntisymmetryError(ValueError):
    pass


class DiscretizationError(ArithmeticError):
    """The discretized determinant is not a valid probability (e.g. negative)."""


class PanelTooShort(ValueError):
    pass


class SeriesDivergence(ArithmeticError):
    pass


def _as_skew_array(A, tol: float = TOL.antisymmetry) -> np.ndarray:
    if isinstance(A, SkewMatrix):
        return A.entries
    a = np.asarray(A, dtype=float)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {a.shape}")
    n = a.shape[0]
    if n == 0 or n % 2:
        raise ValueError(f"Pfaffian needs an even positive dimension, got {n}")
    scale = max(1.0, float(np.max(np.abs(a))))
    dev = float(np.max(np.abs(a + a.T)))
    if dev > tol * scale:
        raise AntisymmetryError(f"matrix is not antisymmetric: max |A + A^T| = {dev:.3e}")
    a = 0.5 * (a - a.T)
    np.fill_diagonal(a, 0.0)
    return a


class SkewMatrix:
    """Even-dimensional antisymmetric matrix.

    The entries are validated once and stored exactly antisymmetric (the
    input is replaced by ``(A - A^T)/2`` after the tolerance check).
    """

    __slots__ = ("entries",)

    def __init__(self, entries, tol: float = TOL.antisymmetry):
        a = _as_skew_array(entries, tol)
        a.setflags(write=False)
        self.entries = a

    @property
    def dim(self) -> int:
        return self.entries.shape[0]

    def pfaffian(self) -> float:
        return pfaffian(self)

    def det(self) -> float:
        return float(np.linalg.det(self.entries))

    def __repr__(self):
        return f"SkewMatrix(dim={self.dim})"


def pfaffian(A) -> float:
    """Pfaffian by skew Gaussian elimination (Parlett-Reid) with pivoting.

    The matrix is reduced to skew-tridiagonal form by congruence with unit
    lower-triangular matrices and row/column swaps; the Pfaffian is the
    product of the super-diagonal pivots, with one sign flip per swap.
    Convention: ``Pf([[0, a], [-a, 0]]) = a``.
    """
    a = np.array(_as_skew_array(A), dtype=float)
    n = a.shape[0]
    result = 1.0
    for k in range(0, n - 1, 2):
        kp = k + 1 + int(np.argmax(np.abs(a[k + 1:, k])))
        if kp != k + 1:
            a[[k + 1, kp], :] = a[[kp, k + 1], :]
            a[:, [k + 1, kp]] = a[:, [kp, k + 1]]
            result = -result
        pivot = a[k, k + 1]
        if pivot == 0.0:
            return 0.0
        result *= pivot
        if k + 2 < n:
            tau = a[k, k + 2:] / pivot
            col = a[k + 2:, k + 1]
            a[k + 2:, k + 2:] += np.outer(tau, col) - np.outer(col, tau)
    return float(result)


def pfaffian_bruteforce(A) -> float:
    """Pfaffian as the signed sum over all perfect matchings (dim <= 12)."""
    a = _as_skew_array(A)
    n = a.shape[0]
    if n > 12:
        raise ValueError("brute-force Pfaffian is limited to dim <= 12")

    def rec(idx: tuple) -> float:
        if not idx:
            return 1.0
        i = idx[0]
        total = 0.0
        for pos in range(1, len(idx)):
            j = idx[pos]
            rest = idx[1:pos] + idx[pos + 1:]
            # removing i and j: j sits pos-1 places after i in the remainder
            sign = -1.0 if (pos - 1) % 2 else 1.0
            total += sign * a[i, j] * rec(rest)
        return total

    return rec(tuple(range(n)))


def congruence_pfaffian_check(A, X) -> tuple[float, float]:
    """Return ``(Pf(X^T A X), Pf(A) det X)``."""
    a = _as_skew_array(A)
    x = np.asarray(X, dtype=float)
    if x.shape != a.shape:
        raise ValueError(f"dimension mismatch: A is {a.shape}, X is {x.shape}")
    b = x.T @ a @ x
    b = 0.5 * (b - b.T)
    return pfaffian(b), pfaffian(a) * float(np.linalg.det(x))


# --------------------------------------------------------------------------
# Quadrature panels
# --------------------------------------------------------------------------


def _legendre_table(t: np.ndarray, m: int) -> np.ndarray:
    P = np.zeros((m + 1, len(t)))
    P[0] = 1.0
    P[1] = t
    for k in range(1, m):
        P[k + 1] = ((2 * k + 1) * t * P[k] - k * P[k - 1]) / (k + 1)
    return P


def _reference_integration(t: np.ndarray, w: np.ndarray) -> np.ndarray:
    """Q[i, j] = integral from -1 to t_i of the j-th Lagrange basis polynomial."""
    m = len(t)
    P = _legendre_table(t, m)
    Q = np.outer(t + 1.0, w) / 2.0
    for k in range(1, m):
        # int_{-1}^t P_k = (P_{k+1}(t) - P_{k-1}(t)) / (2k + 1)
        # and the basis expansion coefficient of P_k is (2k + 1)/2 w_j P_k(t_j)
        Q += 0.5 * np.outer(P[k + 1] - P[k - 1], w * P[k])
    return Q


@dataclass(frozen=True)
class QuadPanel:
    """Composite Gauss-Legendre rule on the interval (s, s + L].

    ``pieces`` equal sub-intervals carry ``m // pieces`` nodes each.
    """

    nodes: np.ndarray
    weights: np.ndarray
    s: float
    L: float
    pieces: int = 1
    _ref: tuple = field(default=(), repr=False, compare=False)

    @classmethod
    def gauss_legendre(cls, s: float, L: float = 16.0, m: int = 60, pieces: int = 1) -> "QuadPanel":
        if L <= 0:
            raise ValueError("panel length must be positive")
        if m < 2 or m % pieces:
            raise ValueError("node count must be >= 2 and divisible by the number of pieces")
        q = m // pieces
        t, w = np.polynomial.legendre.leggauss(q)
        h = L / pieces
        nodes = np.concatenate([s + h * p + h * (t + 1.0) / 2.0 for p in range(pieces)])
        weights = np.tile(w * h / 2.0, pieces)
        nodes.setflags(write=False)
        weights.setflags(write=False)
        panel = cls(nodes, weights, float(s), float(L), pieces, (t, w))
        panel._validate()
        return panel

    def _validate(self):
        if np.any(self.weights <= 0):
            raise ValueError("weights must be positive")
        if abs(self.weights.sum() - self.L) > 1e-12 * max(1.0, self.L):
            raise ValueError("weights do not sum to the panel length")
        if np.any(np.diff(self.nodes) <= 0):
            raise ValueError("nodes must be strictly increasing")
        if self.nodes[0] <= self.s or self.nodes[-1] > self.s + self.L:
            raise ValueError("nodes must lie in (s, s + L]")

    @property
    def m(self) -> int:
        return len(self.nodes)

    def refined(self) -> "QuadPanel":
        """Same interval, twice the nodes."""
        return QuadPanel.gauss_legendre(self.s, self.L, 2 * self.m, self.pieces)

    def extended(self, extra: float) -> "QuadPanel":
        """Longer interval at the same node density."""
        L = self.L + extra
        pieces = self.pieces
        q = self.m // pieces
        m = int(math.ceil(q * L / self.L))
        return QuadPanel.gauss_legendre(self.s, L, m * pieces, pieces)

    @cached_property
    def sign_matrix(self) -> np.ndarray:
        r"""Symmetrized discretization of :math:`f \mapsto \int \mathrm{sgn}(x - y) f(y)\,dy`.

        Entry ``(i, j)`` is :math:`\sqrt{w_i} E_{ij} / \sqrt{w_j}` where
        ``E @ f`` integrates the piecewise polynomial interpolant of ``f``
        exactly. The matrix is antisymmetric up to rounding.
        """
        t, w = self._ref
        q = len(t)
        h = self.L / self.pieces
        Qloc = _reference_integration(t, w) * h / 2.0
        m = self.m
        Q = np.zeros((m, m))
        wl = w * h / 2.0
        for p in range(self.pieces):
            rows = slice(p * q, (p + 1) * q)
            for r in range(p):
                Q[rows, r * q:(r + 1) * q] = wl[None, :]
            Q[rows, rows] = Qloc
        E = 2.0 * Q - self.weights[None, :]
        sw = np.sqrt(self.weights)
        S = sw[:, None] * E / sw[None, :]
        return 0.5 * (S - S.T)


# --------------------------------------------------------------------------
# Matrix kernels
# --------------------------------------------------------------------------


BlockGrid = Callable[[np.ndarray, np.ndarray], tuple]


@dataclass(frozen=True)
class MatrixKernel:
    """2x2 block kernel with ``G(x, y) = -G(y, x)^T``.

    ``grid(x, y)`` returns the four smooth blocks ``(G11, G12, G21, G22)`` as
    ``len(x) x len(y)`` arrays. A jump ``sign_coeff * sgn(x - y)`` in the
    (2, 2) block is kept separate so quadrature can treat it exactly.
    ``tail(x)`` bounds the kernel's contribution beyond ``x``.
    """

    grid: BlockGrid
    sign_coeff: float = 0.0
    tail: Callable[[float], float] | None = None
    name: str = "kernel"

    def blocks(self, x, y) -> np.ndarray:
        x = np.atleast_1d(np.asarray(x, dtype=float))
        y = np.atleast_1d(np.asarray(y, dtype=float))
        g11, g12, g21, g22 = (np.broadcast_to(b, (len(x), len(y))) for b in self.grid(x, y))
        if self.sign_coeff:
            g22 = g22 + self.sign_coeff * np.sign(x[:, None] - y[None, :])
        return np.stack([np.stack([g11, g12], -1), np.stack([g21, g22], -1)], -2)

    def __call__(self, x: float, y: float) -> np.ndarray:
        return self.blocks([x], [y])[0, 0]

    @classmethod
    def from_blocks(cls, g11=None, g12=None, g22=None, **kw) -> "MatrixKernel":
        """Build a kernel from pointwise functions; G21 follows from G12.

        ``g11`` and ``g22`` must already be antisymmetric functions.
        """

        def zero(x, y):
            return np.zeros(np.broadcast(x, y).shape)

        f11, f12, f22 = (f if f is not None else zero for f in (g11, g12, g22))

        def grid(x, y):
            X, Y = x[:, None], y[None, :]
            return f11(X, Y), f12(X, Y), -np.asarray(f12(Y, X)), f22(X, Y)

        return cls(grid, **kw)


def zero_kernel() -> MatrixKernel:
    return MatrixKernel.from_blocks(name="zero")


def _interleave(b11, b12, b21, b22) -> np.ndarray:
    m, n = b11.shape
    out = np.empty((2 * m, 2 * n))
    out[0::2, 0::2] = b11
    out[0::2, 1::2] = b12
    out[1::2, 0::2] = b21
    out[1::2, 1::2] = b22
    return out


def assemble_block_kernel(kernel: MatrixKernel, panel: QuadPanel) -> np.ndarray:
    """Weight-symmetrized 2m x 2m sample of ``kernel`` on ``panel``.

    Returns an exactly antisymmetric matrix (validated by ``SkewMatrix``).
    """
    x = panel.nodes
    sw = np.sqrt(panel.weights)
    g11, g12, g21, g22 = (np.broadcast_to(b, (len(x), len(x))) for b in kernel.grid(x, x))
    W = sw[:, None] * sw[None, :]
    b22 = g22 * W
    if kernel.sign_coeff:
        b22 = b22 + kernel.sign_coeff * panel.sign_matrix
    M = _interleave(g11 * W, g12 * W, g21 * W, b22)
    return SkewMatrix(M).entries


def block_pfaffian_matrix(kernel: MatrixKernel, points) -> np.ndarray:
    """The 2n x 2n matrix ``[G(xi_i, xi_j)]`` with interleaved blocks."""
    p = np.asarray(points, dtype=float)
    B = kernel.blocks(p, p)
    return _interleave(B[..., 0, 0], B[..., 0, 1], B[..., 1, 0], B[..., 1, 1])


def _j_matrix(m: int) -> np.ndarray:
    J = np.zeros((2 * m, 2 * m))
    idx = np.arange(m)
    J[2 * idx, 2 * idx + 1] = 1.0
    J[2 * idx + 1, 2 * idx] = -1.0
    return J


def _check_panel(kernel: MatrixKernel, s: float, panel: QuadPanel | None) -> QuadPanel:
    if panel is None:
        panel = QuadPanel.gauss_legendre(s)
    elif abs(panel.s - s) > 1e-12 * max(1.0, abs(s)):
        raise ValueError(f"panel starts at {panel.s}, expected {s}")
    if kernel.tail is not None:
        bound = kernel.tail(panel.s + panel.L)
        if bound > TOL.fredholm_tail:
            raise PanelTooShort(
                f"kernel tail beyond {panel.s + panel.L:g} is {bound:.2e} > {TOL.fredholm_tail:g}; "
                "lengthen the panel"
            )
    return panel


def fredholm_pfaffian(kernel: MatrixKernel, s: float, panel: QuadPanel | None = None) -> float:
    """``Pf(J - M)``, the square root of ``Det(1 - J^{-1} G)`` with the sign kept."""
    panel = _check_panel(kernel, s, panel)
    M = assemble_block_kernel(kernel, panel)
    return pfaffian(_j_matrix(panel.m) - M)


def fredholm_det_nystrom(kernel: MatrixKernel, s: float, panel: QuadPanel | None = None) -> float:
    """``Det(1 - J^{-1} G)`` on ``(s, s + L]`` from the Nystrom discretization.

    Raises ``DiscretizationError`` if the determinant comes out negative,
    which would make its square root (the gap probability) meaningless.
    """
    panel = _check_panel(kernel, s, panel)
    M = assemble_block_kernel(kernel, panel)
    sign, logdet = np.linalg.slogdet(_j_matrix(panel.m) - M)
    det = float(sign * math.exp(logdet)) if sign != 0 else 0.0
    if det < -TOL.fredholm_tail:
        raise DiscretizationError(f"negative determinant {det:.3e} at s={s}")
    return max(det, 0.0)


def fredholm_det_series(
    kernel: MatrixKernel, s: float, panel: QuadPanel | None = None, nmax: int = 80
) -> float:
    r"""Truncated series :math:`\sum_{n \le n_{max}} (-1)^n e_n` for ``Det(1 - J^{-1} G)``.

    ``e_n`` is the n-th term of the Fredholm expansion with the integrals
    replaced by the quadrature: the sum of all n x n principal minors of the
    discretized ``K = J^{-1} G``. They are accumulated from the power traces
    :math:`\mathrm{tr}(K^k)` by Newton's identities. Raises
    ``SeriesDivergence`` if the terms are still not decaying past
    ``nmax / 2``.
    """
    if nmax < 1:
        raise ValueError("nmax must be >= 1")
    panel = _check_panel(kernel, s, panel)
    M = assemble_block_kernel(kernel, panel)
    K = _j_matrix(panel.m).T @ M  # J^{-1} = J^T
    return _series_from_traces(K, nmax)


def _series_from_traces(K: np.ndarray, nmax: int) -> float:
    p = np.zeros(nmax + 1)
    P = np.eye(K.shape[0])
    for k in range(1, nmax + 1):
        P = P @ K
        p[k] = np.trace(P)
    e = np.zeros(nmax + 1)
    e[0] = 1.0
    for n in range(1, nmax + 1):
        acc = 0.0
        for k in range(1, n + 1):
            acc += (-1.0) ** (k - 1) * e[n - k] * p[k]
        e[n] = acc / n
    terms = (-1.0) ** np.arange(nmax + 1) * e
    half = nmax // 2
    tail = np.abs(terms[half:])
    if tail.max() > 1e-3 * max(1.0, np.abs(terms[:half]).max()) or np.abs(terms[-3:]).max() > 1e-12:
        raise SeriesDivergence(
            f"series terms not decaying: |term| at n >= {half} up to {tail.max():.2e}"
        )
    return float(terms.sum())


def minors_sum(K: np.ndarray, n: int) -> float:
    """Sum of all n x n principal minors, by enumeration (small n only)."""
    dim = K.shape[0]
    total = 0.0
    for idx in itertools.combinations(range(dim), n):
        total += np.linalg.det(K[np.ix_(idx, idx)])
    return total
