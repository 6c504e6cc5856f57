r"""Graded time grids and product-rectangle convolution quadrature.

For a kernel k with primitive F (``F' = k``) the convolution

.. math::

    \int_0^{t_n} k(t_n - r)\, g(r)\, dr \approx
    \sum_{m<n} g(t_m) \bigl[F(t_n - t_m) - F(t_n - t_{m+1})\bigr]

integrates the kernel exactly on every subinterval and samples the density at
the left node, which keeps the scheme causal.  For the mild-solution kernel
:math:`s^{\alpha-1}E_{\alpha,\alpha}(-\lambda s^\alpha)` the primitive is
:math:`-E_{\alpha,1}(-\lambda s^\alpha)/\lambda`.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Callable

import numpy as np
from numpy.typing import ArrayLike, NDArray
from scipy import integrate, special

from .errors import DomainError, GridError
from .mittag_leffler import ml_array


@dataclass(frozen=True, eq=False)
class TimeGrid:
    """Nodes t_n = T (n/N)^grading, n = 0..N."""

    T: float
    N: int
    grading: float
    nodes: NDArray

    @property
    def steps(self) -> NDArray:
        return np.diff(self.nodes)


def make_grid(T: float, N: int, grading: float = 2.0) -> TimeGrid:
    """Graded grid clustered at t = 0.

    Raises
    ------
    GridError
        If T <= 0, N < 1 or grading < 1.
    """
    if not (T > 0 and math.isfinite(T)):
        raise GridError(f"T must be positive, got {T}")
    if int(N) != N or N < 1:
        raise GridError(f"N must be a positive integer, got {N}")
    if not grading >= 1.0:
        raise GridError(f"grading must be >= 1, got {grading}")
    N = int(N)
    nodes = T * (np.arange(N + 1) / N) ** grading
    nodes[-1] = T
    return TimeGrid(float(T), N, float(grading), nodes)


def rectangle_weights(nodes: ArrayLike, primitive: Callable[[NDArray], NDArray]) -> NDArray:
    """Lower-triangular weight matrix W[n, m] = F(t_n - t_m) - F(t_n - t_{m+1}), m < n."""
    t = np.asarray(nodes, dtype=float)
    n = t.size
    rows, cols = np.tril_indices(n)
    lag = np.zeros((n, n))
    lag[rows, cols] = t[rows] - t[cols]
    F = np.zeros((n, n))
    F[rows, cols] = primitive(lag[rows, cols])
    W = np.zeros((n, n))
    W[:, :-1] = F[:, :-1] - F[:, 1:]
    return np.tril(W, -1)


def power_primitive(alpha: float) -> Callable[[NDArray], NDArray]:
    """Primitive of s^(alpha-1)/Gamma(alpha), the lambda -> 0 limit of the P kernel."""
    g = math.gamma(alpha + 1.0)
    return lambda s: np.asarray(s, dtype=float) ** alpha / g


@dataclass(frozen=True, eq=False)
class KernelTables:
    """Per-mode convolution weights on one grid.

    ``W[j, n, m]`` integrates the P kernel of mode j against the density on
    [t_m, t_{m+1}] for target node t_n.  ``E_nodes[n, j]`` is
    E_{alpha,1}(-lambda_j t_n^alpha).
    """

    alpha: float
    lambdas: NDArray
    grid: TimeGrid
    W: NDArray
    E_nodes: NDArray

    def convolve(self, density: NDArray) -> NDArray:
        """int_0^{t_n} P_j(t_n - r) g_j(r) dr for every node; density has shape (N+1, J)."""
        return np.einsum("jnm,mj->nj", self.W, density, optimize=True)

    def convolve_terminal(self, density: NDArray) -> NDArray:
        """The same integral at t = T only; shape (J,)."""
        return np.einsum("jm,mj->j", self.W[:, -1, :], density)


def _mode_tables(alpha: float, lam: float, t: NDArray) -> tuple[NDArray, NDArray]:
    n = t.size
    rows, cols = np.tril_indices(n)
    lag = t[rows] - t[cols]
    E = np.zeros((n, n))
    E[rows, cols] = ml_array(alpha, 1.0, -lam * lag**alpha)
    W = np.zeros((n, n))
    W[:, :-1] = (E[:, 1:] - E[:, :-1]) / lam
    return np.tril(W, -1), E[:, 0]


def kernel_tables(alpha: float, lambdas: ArrayLike, grid: TimeGrid, threads: int = 1) -> KernelTables:
    """Exact-moment weights for every retained mode (memory J (N+1)^2 doubles)."""
    lam = np.asarray(lambdas, dtype=float)
    if np.any(lam <= 0):
        raise DomainError("eigenvalues must be positive")
    t = grid.nodes
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as ex:
            parts = list(ex.map(lambda l: _mode_tables(alpha, l, t), lam))
    else:
        parts = [_mode_tables(alpha, l, t) for l in lam]
    W = np.stack([p[0] for p in parts])
    E = np.stack([p[1] for p in parts], axis=1)
    return KernelTables(alpha, lam, grid, W, E)


def derivative_weights(alpha: float, lambdas: ArrayLike, grid: TimeGrid) -> NDArray:
    """Moments of the kernel s^(alpha-2) E_{alpha,alpha-1}(-lambda s^alpha).

    Its primitive is s^(alpha-1) E_{alpha,alpha}(-lambda s^alpha), which vanishes at 0.
    """
    lam = np.asarray(lambdas, dtype=float)
    out = []
    for l in lam:
        out.append(
            rectangle_weights(grid.nodes, lambda s, l=l: s ** (alpha - 1.0) * ml_array(alpha, alpha, -l * s**alpha))
        )
    return np.stack(out)


# ---------------------------------------------------------------------------
# Beta-integral identities
# ---------------------------------------------------------------------------


def beta_kernel_integral(z1: float, z2: float, a: float, b: float) -> float:
    r"""Closed form of :math:`\int_a^b (b-r)^{z_1-1}(r-a)^{z_2-1}dr = (b-a)^{z_1+z_2-1}B(z_1,z_2)`."""
    if not (z1 > 0 and z2 > 0 and b > a):
        raise DomainError("need z1, z2 > 0 and b > a")
    return float((b - a) ** (z1 + z2 - 1.0) * special.beta(z1, z2))


def reflection_beta(z: float) -> float:
    """B(z, 1 - z) = pi / sin(pi z) for 0 < z < 1."""
    if not 0 < z < 1:
        raise DomainError("need 0 < z < 1")
    return math.pi / math.sin(math.pi * z)


@dataclass(frozen=True)
class LimitCheck:
    hs: NDArray
    closed_form: NDArray
    numeric: NDArray
    limit: float
    monotone: bool


def limit_check_ap2(a: float, b: float, t: float, hs: ArrayLike) -> LimitCheck:
    r"""Convergence of :math:`\int_0^t (t+h-r)^{a-1} r^{b-1} dr` to :math:`t^{a+b-1}B(a,b)` as h -> 0.

    The integral is computed both in closed form, via the regularised incomplete
    beta function, and by adaptive quadrature.  ``monotone`` reports whether the
    distance to the limit shrinks as h decreases.
    """
    if not (a > 0 and b > 0 and t > 0):
        raise DomainError("need a, b, t > 0")
    hs = np.sort(np.asarray(hs, dtype=float))[::-1]
    limit = t ** (a + b - 1.0) * special.beta(a, b)
    closed = np.array(
        [(t + h) ** (a + b - 1.0) * special.beta(a, b) * special.betainc(b, a, t / (t + h)) for h in hs]
    )
    numeric = np.array(
        [
            integrate.quad(lambda r, h=h: (t + h - r) ** (a - 1.0), 0.0, t, weight="alg", wvar=(b - 1.0, 0.0), limit=200)[0]
            for h in hs
        ]
    )
    dist = np.abs(closed - limit)
    return LimitCheck(hs, closed, numeric, float(limit), bool(np.all(np.diff(dist) <= 1e-15 * limit)))
