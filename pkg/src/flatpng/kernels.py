r"""Finite-time flat PNG kernel, its edge scaling, and the GOE limit.

Two independent evaluations of the finite kernel are provided:

* ``FinitePngKernel`` / ``kernel_bessel``: closed Bessel sums.
* ``MatrixRouteState`` / ``kernel_matrix``: the transfer matrix
  :math:`\Phi_{x,i} = \tilde T^{x-i}/(x-i)!`, the parity-sign matrix ``S``
  and the closed-form inverse of :math:`A = \Phi^t S \Phi` on
  :math:`\ell^2(\mathbb{Z}_-)`, in multiprecision arithmetic.

Both use *height coordinates*: ``x`` and ``y`` are the lattice positions of
the line-ensemble points. The Bessel sums are naturally written in a
coordinate shifted by one (``x' = x - 1``). ``FinitePngKernel.sum_blocks``
works in that shifted coordinate and the edge scaling is applied there.

The GOE kernel is evaluated by Gauss-Legendre quadrature of the Airy
integrals, with the (2, 2) sign jump kept separate for exact treatment in
Fredholm determinants.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property, lru_cache

import mpmath as mp
import numpy as np

from .config import (
    EDGE_BOUND_C,
    GOE_NODES_PER_UNIT,
    GOE_REACH,
    KERNEL_CUTOFF_CUBE,
    KERNEL_CUTOFF_PAD,
    SIGN_DAMPING,
    TOL,
)
from .skewlinalg import (
    MatrixKernel,
    QuadPanel,
    _reference_integration,
    block_pfaffian_matrix,
    fredholm_det_nystrom,
    fredholm_det_series,
    pfaffian,
)
from .specfun import CutoffTooSmall, airy_all, bessel_j_sequence, bessel_tail_estimate

__all__ = [
    "WindowTooSmall",
    "FinitePngKernel",
    "kernel_bessel",
    "MatrixRouteState",
    "kernel_matrix",
    "edge_index",
    "edge_blocks",
    "edge_kernel",
    "omega0",
    "omega1",
    "omega2",
    "edge_bound_ratios",
    "parity_averaged_residual",
    "GoeKernel",
    "goe_kernel",
    "goe_matrix_kernel",
    "sign_identity",
    "rho_n",
    "rho1_goe",
    "f1_cdf",
    "f1_table",
]


class WindowTooSmall(ArithmeticError):
    pass


def _parity_sign(x, y):
    """S(x, y) = e(x) o(y) for x > y, -o(x) e(y) for x < y, 0 on the diagonal."""
    x = np.asarray(x)
    y = np.asarray(y)
    ex, ey = (x % 2 == 0), (y % 2 == 0)
    return np.where(x > y, ex & ~ey, 0).astype(float) - np.where(x < y, ~ex & ey, 0).astype(float)


def _check_time(T_tilde: float) -> float:
    T_tilde = float(T_tilde)
    if not (T_tilde > 0 and math.isfinite(T_tilde)):
        raise ValueError(f"rescaled time must be positive, got {T_tilde}")
    return T_tilde


# --------------------------------------------------------------------------
# Bessel route
# --------------------------------------------------------------------------


class FinitePngKernel:
    r"""Flat PNG kernel at rescaled time :math:`\tilde T` from Bessel sums.

    All infinite sums run over Bessel orders up to ``cutoff``; the neglected
    tail :math:`\sum_{k > cutoff} |J_k(2\tilde T)|` is certified below
    ``TOL.kernel_tail`` at construction, else ``CutoffTooSmall``.
    """

    route = "bessel"

    def __init__(self, T_tilde: float, cutoff: int | None = None):
        self.T_tilde = _check_time(T_tilde)
        z = 2.0 * self.T_tilde
        if cutoff is None:
            cutoff = int(math.ceil(z + KERNEL_CUTOFF_CUBE * self.T_tilde ** (1 / 3) + KERNEL_CUTOFF_PAD))
        self.cutoff = int(cutoff)
        J = bessel_j_sequence(self.cutoff + 2, z)
        self.tail = bessel_tail_estimate(J, z, self.cutoff)
        if self.tail > TOL.kernel_tail:
            raise CutoffTooSmall(
                f"Bessel tail beyond order {self.cutoff} is {self.tail:.2e} > {TOL.kernel_tail:g}"
            )
        self._J = np.array(J[: self.cutoff + 1])

    def _tables(self, lo: int, hi: int):
        """J_k and the every-other tail sums sum_{j>=0} J_{k+2j} for k in [lo, hi]."""
        lo = min(lo, 0)
        hi = max(hi, self.cutoff) + 2
        k = np.arange(lo, hi + 1)
        J = np.zeros(len(k))
        pos = (k >= 0) & (k <= self.cutoff)
        J[pos] = self._J[k[pos]]
        neg = k < 0
        J[neg] = np.where(k[neg] % 2 == 0, 1.0, -1.0) * self._J[-k[neg]]
        T2 = np.zeros(len(k) + 2)
        for i in range(len(k) - 1, -1, -1):
            T2[i] = J[i] + T2[i + 2]
        return J, T2[: len(k)], -lo

    def sum_blocks(self, x, y) -> tuple[np.ndarray, np.ndarray]:
        """``(G, R)`` on integer arrays ``x``, ``y`` in the shifted coordinate.

        Both have shape ``(len(x), len(y), 2, 2)``.
        """
        x = np.atleast_1d(np.asarray(x, dtype=np.int64))
        y = np.atleast_1d(np.asarray(y, dtype=np.int64))
        low = int(min(x.min(), y.min()))
        nmax = max(1, self.cutoff - low + 2)
        J, T2, off = self._tables(low - 2, int(max(x.max(), y.max())) + 2 * nmax + 4)
        n = np.arange(1, nmax + 1)
        m = np.arange(1, nmax // 2 + 2)
        X, Y = x[:, None], y[None, :]

        def at(arr, idx):
            return arr[idx + off]

        Jx, Jy = at(J, x[:, None] + n), at(J, y[:, None] + n)  # (nx, n), (ny, n)
        Jx1, Jy1 = at(J, x[:, None] + n + 1), at(J, y[:, None] + n + 1)
        g11 = -Jx1 @ Jy.T + Jx @ Jy1.T
        s = Jx @ Jy.T
        Jx_1, Jy_1 = at(J, x + 1), at(J, y + 1)
        T2x_1, T2y_1 = at(T2, x + 1), at(T2, y + 1)
        T2x_2, T2y_2 = at(T2, x + 2), at(T2, y + 2)
        g12 = s - Jx_1[:, None] * (T2y_1[None, :] - 0.5)
        g21 = -s + Jy_1[None, :] * (T2x_1[:, None] - 0.5)
        sgn = np.sign(X - Y)
        g22 = (
            at(J, x[:, None] + 2 * m) @ at(T2, y[:, None] + 2 * m + 1).T
            - at(T2, x[:, None] + 2 * m + 1) @ at(J, y[:, None] + 2 * m).T
            - 0.5 * T2x_2[:, None]
            + 0.5 * T2y_2[None, :]
            - 0.25 * sgn
        )
        px = np.where(x % 2 == 0, 1.0, -1.0)[:, None]
        py = np.where(y % 2 == 0, 1.0, -1.0)[None, :]
        r12 = -0.5 * py * Jx_1[:, None]
        r21 = 0.5 * px * Jy_1[None, :]
        # the parity-sign term sits at the unshifted (height) positions
        r22 = -_parity_sign(X + 1, Y + 1) + 0.25 * sgn - 0.5 * px * T2y_2[None, :] + 0.5 * py * T2x_2[:, None]
        G = np.stack([np.stack([g11, g12], -1), np.stack([g21, g22], -1)], -2)
        r12, r21 = np.broadcast_to(r12, g11.shape), np.broadcast_to(r21, g11.shape)
        R = np.stack([np.stack([np.zeros_like(g11), r12], -1), np.stack([r21, r22], -1)], -2)
        return G, R

    def blocks(self, x, y) -> np.ndarray:
        """``K = G + R`` at height coordinates, shape ``(len(x), len(y), 2, 2)``."""
        G, R = self.sum_blocks(np.asarray(x) - 1, np.asarray(y) - 1)
        return G + R

    def __call__(self, x: int, y: int) -> np.ndarray:
        return self.blocks([x], [y])[0, 0]


@lru_cache(maxsize=16)
def _bessel_kernel(T_tilde: float) -> FinitePngKernel:
    return FinitePngKernel(T_tilde)


def kernel_bessel(x: int, y: int, T_tilde: float) -> np.ndarray:
    """2x2 kernel block at height coordinates ``(x, y)`` from Bessel sums."""
    return _bessel_kernel(float(T_tilde))(int(x), int(y))


# --------------------------------------------------------------------------
# Matrix route
# --------------------------------------------------------------------------


class MatrixRouteState:
    r"""Kernel from :math:`\Phi`, ``S`` and the inverse of ``A`` on a finite window.

    The index window is :math:`I = \{-2N+1, \dots, 0\}` with default
    :math:`N = 4\tilde T + 25`. ``inverse="closed"`` uses the closed form
    :math:`B_{ij} = C(i+1, j) - C(i, j+1)`,
    :math:`C(a, b) = \sum_{k=\max(a,b)}^{0} f(k-a) f(k-b)`,
    :math:`f(n) = (-\tilde T)^n/n!`. ``inverse="finite"`` inverts the
    truncated ``A_N`` directly. Arithmetic is carried at about
    :math:`30 + 4\tilde T \log_{10} e` digits because ``K22`` cancels terms of
    size :math:`e^{4\tilde T}`.
    """

    route = "matrix"

    def __init__(self, T_tilde: float, N: int | None = None, inverse: str = "closed"):
        self.T_tilde = _check_time(T_tilde)
        self.N = int(N) if N is not None else int(math.ceil(4 * self.T_tilde)) + 25
        if self.N < 2:
            raise ValueError("window size N must be >= 2")
        if inverse not in ("closed", "finite"):
            raise ValueError(f"unknown inverse {inverse!r}")
        self.inverse = inverse
        self.dps = int(30 + 4 * self.T_tilde * math.log10(math.e)) + 5
        self.index = list(range(-2 * self.N + 1, 1))
        with mp.workdps(self.dps):
            self._T = mp.mpf(self.T_tilde)
            self._cosh = mp.cosh(self._T)
            self._sinh = mp.sinh(self._T)
            if inverse == "closed":
                self.B = self._closed_inverse()
            else:
                self.B = self._finite_inverse()

    # -- building blocks
    @cached_property
    def _inv_fact(self):
        with mp.workdps(self.dps):
            top = 4 * self.N + int(8 * self.T_tilde) + 200
            out = [mp.mpf(1)]
            for k in range(1, top):
                out.append(out[-1] / k)
            return out

    def _phi_row(self, x: int) -> np.ndarray:
        r"""Row :math:`\Phi_{x, i}` over the window."""
        inv = self._inv_fact
        with mp.workdps(self.dps):
            out = np.empty(len(self.index), dtype=object)
            for c, i in enumerate(self.index):
                out[c] = self._T ** (x - i) * inv[x - i] if x >= i else mp.mpf(0)
        return out

    def _sphi_row(self, x: int) -> np.ndarray:
        r"""Row :math:`(S\Phi)_{x, i}` over the window."""
        inv = self._inv_fact
        with mp.workdps(self.dps):
            out = np.empty(len(self.index), dtype=object)
            for c, i in enumerate(self.index):
                if x % 2 == 0:
                    out[c] = mp.fsum(self._T ** (y - i) * inv[y - i] for y in range(i, x) if y % 2)
                else:
                    tot = self._cosh if i % 2 == 0 else self._sinh
                    part = mp.fsum(self._T ** (y - i) * inv[y - i] for y in range(i, x + 1) if y % 2 == 0)
                    out[c] = -(tot - part)
        return out

    def _closed_inverse(self) -> np.ndarray:
        lo = -2 * self.N + 1
        size = 2 - lo  # a, b in [lo, 1]
        inv = self._inv_fact
        f = [(-self._T) ** n * inv[n] for n in range(size + 1)]
        C = np.empty((size + 1, size + 1), dtype=object)
        C[:] = mp.mpf(0)
        # C(a, b) = C(a+1, b+1) + f(-a) f(-b), zero once max(a, b) = 1
        for a in range(0, lo - 1, -1):
            for b in range(0, lo - 1, -1):
                C[a - lo, b - lo] = C[a + 1 - lo, b + 1 - lo] + f[-a] * f[-b]
        n = len(self.index)
        B = np.empty((n, n), dtype=object)
        for r, i in enumerate(self.index):
            for c, j in enumerate(self.index):
                B[r, c] = C[i + 1 - lo, j - lo] - C[i - lo, j + 1 - lo]
        return B

    def _xmax(self) -> int:
        """Heights beyond which every Phi entry is negligible at working precision."""
        eps = mp.mpf(10) ** (-self.dps) / self._cosh
        d = 1
        while self._T ** d * self._inv_fact[d] > eps or d < self._T:
            d += 1
        return d

    def a_matrix(self, rows=None) -> np.ndarray:
        r""":math:`A_{ij} = \sum_x \Phi_{x,i} (S\Phi)_{x,j}` for ``i`` in ``rows``, ``j`` in the window."""
        rows = self.index if rows is None else list(rows)
        with mp.workdps(self.dps):
            xs = range(self.index[0], self._xmax() + 1)
            P = np.array([self._phi_row(x) for x in xs], dtype=object)
            SP = self._sphi_cumulative(list(xs))
            cols = [self.index.index(i) for i in rows]
            return np.dot(P[:, cols].T, SP)

    def _sphi_cumulative(self, xs: list[int]) -> np.ndarray:
        """(S Phi) rows for consecutive heights by running parity sums."""
        inv = self._inv_fact
        n = len(self.index)
        out = np.empty((len(xs), n), dtype=object)
        for c, i in enumerate(self.index):
            tot = self._cosh if i % 2 == 0 else self._sinh
            odd_before = mp.mpf(0)  # sum over odd y < x
            even_upto = mp.mpf(0)  # sum over even y <= x
            for r, x in enumerate(xs):
                p = self._T ** (x - i) * inv[x - i] if x >= i else mp.mpf(0)
                if x % 2:
                    out[r, c] = -(tot - even_upto)
                    odd_before += p
                else:
                    even_upto += p
                    out[r, c] = odd_before
        return out

    def _finite_inverse(self) -> np.ndarray:
        A = self.a_matrix()
        return np.array(mp.inverse(mp.matrix(A.tolist())).tolist(), dtype=object)

    # -- checks
    def ab_residual(self) -> float:
        """max |A B - 1| on the inner window L = {-N+1, ..., 0}."""
        inner = self.index[self.N:]
        with mp.workdps(self.dps):
            A = self.a_matrix(inner)
            AB = np.dot(A, self.B[:, self.N:])
            dev = mp.mpf(0)
            for r in range(len(inner)):
                for c in range(len(inner)):
                    dev = max(dev, abs(AB[r, c] - (1 if r == c else 0)))
        return float(dev)

    def toeplitz_deviation(self, shift: int = 1) -> float:
        """max |B_ij - B_{i-shift, j-shift}| over max(i, j) <= -N/2 inside the window."""
        lo = self.index[0]
        dev = 0.0
        for i in range(lo + shift, -self.N // 2 + 1):
            for j in range(lo + shift, -self.N // 2 + 1):
                a = self.B[i - lo, j - lo]
                b = self.B[i - shift - lo, j - shift - lo]
                dev = max(dev, float(abs(a - b)))
        return dev

    def offdiagonal_profile(self) -> np.ndarray:
        """max |B_ij| for each distance |i - j| inside the bulk (max(i, j) <= -N/2)."""
        lo = self.index[0]
        top = -self.N // 2
        out = np.zeros(top - lo + 1)
        for i in range(lo, top + 1):
            for j in range(lo, top + 1):
                d = abs(i - j)
                out[d] = max(out[d], float(abs(self.B[i - lo, j - lo])))
        return out

    # -- kernel
    def _blocks_with(self, x, y, B, cols) -> np.ndarray:
        x = [int(v) for v in np.atleast_1d(x)]
        y = [int(v) for v in np.atleast_1d(y)]
        with mp.workdps(self.dps):
            px = np.array([self._phi_row(v)[cols] for v in x], dtype=object)
            sx = np.array([self._sphi_row(v)[cols] for v in x], dtype=object)
            py = np.array([self._phi_row(v)[cols] for v in y], dtype=object)
            sy = np.array([self._sphi_row(v)[cols] for v in y], dtype=object)
            Bpy, Bsy = np.dot(B, py.T), np.dot(B, sy.T)
            k11 = -np.dot(px, Bpy)
            k12 = -np.dot(px, Bsy)
            k21 = -np.dot(sx, Bpy)
            Sxy = _parity_sign(np.array(y)[None, :], np.array(x)[:, None])
            k22 = Sxy - np.dot(sx, Bsy)
            out = np.empty((len(x), len(y), 2, 2))
            out[..., 0, 0] = np.vectorize(float)(k11)
            out[..., 0, 1] = np.vectorize(float)(k12)
            out[..., 1, 0] = np.vectorize(float)(k21)
            out[..., 1, 1] = np.vectorize(float)(k22)
        return out

    def blocks(self, x, y) -> np.ndarray:
        cols = np.arange(len(self.index))
        return self._blocks_with(x, y, self.B, cols)

    def window_deviation(self, x, y) -> float:
        """Change of the kernel when the two lowest window indices are dropped."""
        full = self.blocks(x, y)
        cols = np.arange(2, len(self.index))
        cut = self._blocks_with(x, y, self.B[2:, 2:], cols)
        return float(np.max(np.abs(full - cut)))

    def __call__(self, x: int, y: int) -> np.ndarray:
        return self.blocks([x], [y])[0, 0]


@lru_cache(maxsize=16)
def _matrix_state(T_tilde: float, N: int | None) -> MatrixRouteState:
    return MatrixRouteState(T_tilde, N)


def kernel_matrix(x: int, y: int, T_tilde: float, N: int | None = None) -> np.ndarray:
    """2x2 kernel block at height coordinates from the matrix route.

    Raises ``WindowTooSmall`` if dropping the lowest window indices moves
    the block by more than ``TOL.window_boundary``.
    """
    state = _matrix_state(float(T_tilde), N)
    dev = state.window_deviation([x], [y])
    if dev > TOL.window_boundary:
        raise WindowTooSmall(f"window N={state.N} too small at T~={T_tilde}: boundary effect {dev:.2e}")
    return state(int(x), int(y))


# --------------------------------------------------------------------------
# Edge scaling
# --------------------------------------------------------------------------

_EDGE_PREFACTOR = np.array([[2.0, 1.0], [1.0, 0.0]]) / 3.0  # exponents of T~


def edge_index(xi, T_tilde: float) -> np.ndarray:
    """Lattice argument floor(2 T~ + xi T~^(1/3))."""
    T_tilde = _check_time(T_tilde)
    pos = 2.0 * T_tilde + np.asarray(xi, dtype=float) * T_tilde ** (1.0 / 3.0)
    return np.floor(pos + 1e-12).astype(np.int64)


def edge_blocks(xi1, xi2, T_tilde: float, kernel: FinitePngKernel | None = None):
    """Edge-scaled ``(G, R)`` on the grid ``xi1 x xi2``, each ``(n1, n2, 2, 2)``."""
    if T_tilde < 4:
        raise ValueError("edge scaling needs T~ >= 4")
    kernel = kernel or _bessel_kernel(float(T_tilde))
    G, R = kernel.sum_blocks(edge_index(xi1, T_tilde), edge_index(xi2, T_tilde))
    scale = float(T_tilde) ** _EDGE_PREFACTOR
    return G * scale, R * scale


def edge_kernel(xi1: float, xi2: float, T_tilde: float) -> tuple[np.ndarray, np.ndarray]:
    """Edge-scaled 2x2 blocks ``(G, R)`` at one point pair."""
    G, R = edge_blocks([xi1], [xi2], T_tilde)
    return G[0, 0], R[0, 0]


def omega0(x):
    x = np.asarray(x, dtype=float)
    return np.where(x <= 0, 1.0, np.exp(-np.maximum(x, 0) / 2))


def omega1(x):
    x = np.asarray(x, dtype=float)
    return np.where(x <= 0, 1.0 + np.abs(x), np.exp(-np.maximum(x, 0) / 2))


def omega2(x):
    x = np.asarray(x, dtype=float)
    return np.where(x <= 0, (1.0 + np.abs(x)) ** 2, np.exp(-np.maximum(x, 0) / 2))


def edge_bound_ratios(xi1, xi2, T_tilde: float) -> dict[str, float]:
    """Largest ``|block| / envelope`` over the grid for the seven edge bounds.

    Each value must stay below ``EDGE_BOUND_C`` for the envelopes to hold.
    """
    G, R = edge_blocks(xi1, xi2, T_tilde)
    a = np.asarray(xi1, dtype=float)[:, None]
    b = np.asarray(xi2, dtype=float)[None, :]
    env = {
        "R12": omega0(a) + 0 * b,
        "R21": omega0(b) + 0 * a,
        "R22": omega1(a) + omega1(b),
        "G11": omega2(a) * omega2(b),
        "G12": omega1(a) * (1 + omega2(b)),
        "G21": omega1(b) * (1 + omega2(a)),
        "G22": 1 + omega1(a) + omega1(b) + omega1(a) * omega1(b),
    }
    vals = {
        "R12": R[..., 0, 1],
        "R21": R[..., 1, 0],
        "R22": R[..., 1, 1],
        "G11": G[..., 0, 0],
        "G12": G[..., 0, 1],
        "G21": G[..., 1, 0],
        "G22": G[..., 1, 1],
    }
    return {k: float(np.max(np.abs(vals[k]) / env[k])) for k in env}


def edge_bounds_hold(xi1, xi2, T_tilde: float, C: float = EDGE_BOUND_C) -> bool:
    return all(v <= C for v in edge_bound_ratios(xi1, xi2, T_tilde).values())


def parity_averaged_residual(xi1, xi2, T_tilde: float) -> dict[str, tuple[float, float]]:
    """Per R-block ``(max |R|, max |R_avg|)`` off the near-diagonal.

    ``R_avg`` averages the block over the four even/odd offsets
    ``(x1 + a, x2 + b)``, ``a, b in {0, 1}``. Pairs with ``|x1 - x2| <= 1``
    are excluded because the offsets then cross the diagonal.
    """
    kernel = _bessel_kernel(float(T_tilde))
    x1, x2 = edge_index(xi1, T_tilde), edge_index(xi2, T_tilde)
    scale = float(T_tilde) ** _EDGE_PREFACTOR
    _, R = kernel.sum_blocks(x1, x2)
    avg = np.zeros_like(R)
    for a in (0, 1):
        for b in (0, 1):
            avg += kernel.sum_blocks(x1 + a, x2 + b)[1]
    avg /= 4.0
    mask = np.abs(x1[:, None] - x2[None, :]) > 1
    out = {}
    for name, (p, q) in (("R12", (0, 1)), ("R21", (1, 0)), ("R22", (1, 1))):
        raw = np.abs(R[..., p, q] * scale[p, q])[mask]
        av = np.abs(avg[..., p, q] * scale[p, q])[mask]
        out[name] = (float(raw.max()), float(av.max()))
    return out


# --------------------------------------------------------------------------
# GOE kernel
# --------------------------------------------------------------------------


def _composite_rule(lo: float, hi: float, per_unit: int) -> tuple[np.ndarray, np.ndarray]:
    t, w = np.polynomial.legendre.leggauss(per_unit)
    n = max(1, int(math.ceil(hi - lo)))
    h = (hi - lo) / n
    x = (lo + h * np.arange(n)[:, None] + h * (t[None, :] + 1.0) / 2.0).ravel()
    return x, np.tile(w * h / 2.0, n)


@dataclass(frozen=True)
class GoeKernel:
    r"""GOE matrix kernel by Airy quadrature over :math:`\lambda \in [0, \Lambda]`.

    ``per_unit`` Gauss-Legendre nodes per unit length; :math:`\Lambda` is
    chosen per call so that every Airy argument reaches ``reach``, where the
    neglected integrand is below 1e-12.

    Blocks, with :math:`A(\xi) = \int_\xi^\infty Ai`:

    * ``G11 = int Ai(x+l) Ai'(y+l) - (x <-> y)``
    * ``G12 = int Ai(x+l) Ai(y+l) + Ai(x) (1 - A(y)) / 2``
    * ``G22 = [int Ai(x+l) A(y+l) - (x <-> y)] / 4 + (A(y) - A(x)) / 4 - sgn(x - y) / 4``
    """

    per_unit: int = GOE_NODES_PER_UNIT
    reach: float = GOE_REACH
    name: str = field(default="goe", compare=False)

    def rule(self, low: float) -> tuple[np.ndarray, np.ndarray]:
        return _composite_rule(0.0, max(1.0, self.reach - low), self.per_unit)

    def cutoff_residual(self, low: float) -> float:
        lam, _ = self.rule(low)
        return float(abs(airy_all(low + lam[-1])[2]))

    def grid(self, x, y):
        x = np.atleast_1d(np.asarray(x, dtype=float))
        y = np.atleast_1d(np.asarray(y, dtype=float))
        lam, w = self.rule(min(x.min(), y.min()))
        ax, bx, cx = airy_all(x[:, None] + lam[None, :])
        ay, by, cy = airy_all(y[:, None] + lam[None, :])
        Ax, _, Fx = airy_all(x)
        Ay, _, Fy = airy_all(y)
        aw = ax * w
        g11 = aw @ by.T - (bx * w) @ ay.T
        s = aw @ ay.T
        g12 = s + 0.5 * Ax[:, None] * (1.0 - Fy[None, :])
        g21 = -s - 0.5 * Ay[None, :] * (1.0 - Fx[:, None])
        g22 = 0.25 * (aw @ cy.T - (cx * w) @ ay.T) + 0.25 * (Fy[None, :] - Fx[:, None])
        return g11, g12, g21, g22

    def matrix_kernel(self) -> MatrixKernel:
        return MatrixKernel(self.grid, sign_coeff=-0.25, tail=_airy_tail, name=self.name)


def _airy_tail(x: float) -> float:
    return float(abs(airy_all(x)[2]))


_GOE = GoeKernel()


def goe_matrix_kernel(per_unit: int = GOE_NODES_PER_UNIT) -> MatrixKernel:
    return GoeKernel(per_unit=per_unit).matrix_kernel()


def goe_kernel(xi1: float, xi2: float, per_unit: int = GOE_NODES_PER_UNIT) -> np.ndarray:
    """2x2 GOE block at ``(xi1, xi2)``, including the sign term."""
    return GoeKernel(per_unit=per_unit).matrix_kernel()(xi1, xi2)


def rho1_goe(xi) -> np.ndarray:
    """One-point density G12(xi, xi) of the GOE edge process, vectorized."""
    xi = np.atleast_1d(np.asarray(xi, dtype=float))
    lam, w = _GOE.rule(float(xi.min()))
    a = airy_all(xi[:, None] + lam[None, :])[0]
    Ai, _, F = airy_all(xi)
    return (a * a) @ w + 0.5 * Ai * (1.0 - F)


def sign_identity(xi1: float, xi2: float, eps: float = SIGN_DAMPING) -> float:
    r""":math:`\iint Ai(\xi_1+\lambda) Ai(\xi_2+\mu) \mathrm{sgn}(\lambda-\mu)` by quadrature.

    The double integral converges only conditionally. Both factors are
    damped by :math:`e^{\epsilon t}` in their own argument ``t``; the damped
    value is exactly :math:`e^{2\epsilon^3/3} \mathrm{erf}(d / \sqrt{8\epsilon})`
    with :math:`d = \xi_2 - \xi_1`, so the damping bias is below 1e-7 for
    :math:`|d| \ge 1`. The inner integral is the running integral of the
    second factor, computed exactly per panel on the interpolant.
    """
    t, w = np.polynomial.legendre.leggauss(16)
    Q = _reference_integration(t, w)
    lo, hi = -10.0 / eps + max(xi1, xi2), 25.0
    edges = [hi]
    x = hi
    while x > lo:
        # about one local Airy wavelength per panel
        x = max(lo, x - min(0.5, 6.0 / math.sqrt(max(abs(x), 1.0))))
        edges.append(x)
    e = np.array(edges[::-1])
    a, h = e[:-1], np.diff(e)
    lam = a[:, None] + h[:, None] * (t[None, :] + 1.0) / 2.0
    wl = h[:, None] * w[None, :] / 2.0
    psi1 = np.exp(eps * (xi1 + lam)) * airy_all(xi1 + lam)[0]
    psi2 = np.exp(eps * (xi2 + lam)) * airy_all(xi2 + lam)[0]
    panel = (wl * psi2).sum(axis=1)
    before = np.concatenate([[0.0], np.cumsum(panel)[:-1]])
    running = before[:, None] + (psi2 @ Q.T) * (h[:, None] / 2.0)
    return float(np.sum(wl * psi1 * (2.0 * running - panel.sum())))


# --------------------------------------------------------------------------
# Correlation functions and F1
# --------------------------------------------------------------------------


def rho_n(kernel, points) -> float:
    """n-point correlation: Pfaffian of the 2n x 2n block matrix at ``points``."""
    pts = np.atleast_1d(np.asarray(points, dtype=float))
    if pts.size < 1:
        raise ValueError("need at least one point")
    return pfaffian(block_pfaffian_matrix(kernel, pts))


def f1_panel(s: float, m: int = 60, L: float | None = None) -> QuadPanel:
    """Default panel: 60 nodes on (s, s + L] with s + L >= 12 (L >= 16)."""
    if L is None:
        L = max(16.0, 12.0 - s)
    return QuadPanel.gauss_legendre(s, L, m)


def f1_cdf(s: float, m: int = 60, L: float | None = None, route: str = "nystrom") -> float:
    """GOE Tracy-Widom distribution function, the root of the Fredholm determinant."""
    if not (-10.0 <= s <= 10.0):
        raise ValueError("f1_cdf is calibrated on s in [-10, 10]")
    panel = f1_panel(s, m, L)
    K = _GOE.matrix_kernel()
    if route == "nystrom":
        det = fredholm_det_nystrom(K, s, panel)
    elif route == "series":
        det = fredholm_det_series(K, s, panel)
    else:
        raise ValueError(f"unknown route {route!r}")
    return math.sqrt(max(det, 0.0))


def f1_table(s_values, m: int = 60, L: float | None = None, route: str = "nystrom") -> list[tuple[float, float]]:
    return [(float(s), f1_cdf(float(s), m, L, route)) for s in s_values]
