r"""Terminal value problem solvers on a graded time grid.

The mild formulation is

.. math::

    u(t) = \mathbf B(t) f + \int_0^t \mathbf P(t-r) G(r, u(r))\,dr
           - \mathbf B(t) \int_0^T \mathbf P(T-r) G(r, u(r))\,dr,

iterated as :math:`w^{k+1} = \mathcal Q w^k` from :math:`w^0 = \mathbf B(\cdot) f`.
Both integrals use the exact-moment product rectangle rule of
:mod:`fracterm.quadrature` with the density sampled at the left node.  Node 0
stores :math:`\mathcal Q w(0) = (f - \int_0^T \mathbf P(T-r)G\,dr)/E_{\alpha,1}(-\lambda T^\alpha)`,
which is the reconstructed initial state.

Stopping is measured in the norm of the space where the corresponding
existence theorem contracts:

* Picard (Lipschitz case): :math:`\max_n t_n^{\alpha(1-\theta)}\|\cdot\|_{\mathbb H^\nu}`;
* path space: :math:`\max_n \|\cdot\|_{\mathbb H^\nu} + (\int_0^T \|\cdot\|_{\mathbb H^\sigma}^q)^{1/q}`;
* critical case: :math:`\max_n t_n^{\alpha\vartheta}\|\cdot\|_{\mathbb H^\nu}`.
"""

from __future__ import annotations

import logging
import math
import warnings
from dataclasses import dataclass, field, replace
from typing import Callable

import numpy as np
from numpy.typing import ArrayLike, NDArray

from .constants import ConstantsBundle, RegularityParams
from .errors import DomainError, HypothesisError, NonConvergence, RadiusExceeded
from .nonlinearity import NonlinearitySpec, eval_G
from .operators import TerminalSetup
from .quadrature import KernelTables, TimeGrid, derivative_weights, kernel_tables
from .spectral_basis import SpectralBasis, SpectralField

log = logging.getLogger(__name__)


@dataclass(frozen=True, eq=False)
class ProblemSpec:
    """Terminal data, nonlinearity and smoothness indices on one terminal setup."""

    setup: TerminalSetup
    f: NDArray
    nonlinearity: NonlinearitySpec
    regularity: RegularityParams = field(default_factory=RegularityParams)

    def __post_init__(self) -> None:
        f = np.asarray(self.f, dtype=float)
        if f.shape != (self.setup.basis.J,):
            raise DomainError(f"terminal data has shape {f.shape}, expected ({self.setup.basis.J},)")
        object.__setattr__(self, "f", f)

    @property
    def alpha(self) -> float:
        return self.setup.alpha

    @property
    def T(self) -> float:
        return self.setup.T

    @property
    def basis(self) -> SpectralBasis:
        return self.setup.basis

    def with_f(self, f: ArrayLike) -> "ProblemSpec":
        return replace(self, f=np.asarray(f, dtype=float))


@dataclass(frozen=True)
class IterationRecord:
    k: int
    weighted_diff: float
    ratio: float


@dataclass(frozen=True, eq=False)
class Trajectory:
    """Coefficient vectors at every grid node plus iteration diagnostics.

    ``states[n]`` holds u(t_n); ``states[0]`` is the reconstructed u(0) for
    terminal solves and the given initial state for forward marches.
    """

    grid: TimeGrid
    basis: SpectralBasis
    states: NDArray
    mode: str
    alpha: float
    iterations: tuple[IterationRecord, ...] = ()
    converged: bool = True
    weight_exponent: float = 0.0
    norm_index: float = 0.0
    f: NDArray | None = None
    observed_factor: float = float("nan")
    max_weighted_norm: float = float("nan")

    @property
    def times(self) -> NDArray:
        return self.grid.nodes

    def norms(self, gamma: float) -> NDArray:
        """||u(t_n)||_{H^gamma} for every node."""
        return np.asarray(self.basis.norm(self.states, gamma))

    def weighted_norm(self, gamma: float | None = None, exponent: float | None = None) -> float:
        g = self.norm_index if gamma is None else gamma
        e = self.weight_exponent if exponent is None else exponent
        return float(np.max(self.times**e * self.norms(g)))

    def field(self, n: int) -> SpectralField:
        return SpectralField(self.basis, self.states[n])

    def final(self) -> SpectralField:
        return self.field(-1)

    def initial(self) -> SpectralField:
        return self.field(0)


# ---------------------------------------------------------------------------
# Mild map
# ---------------------------------------------------------------------------


def _tables_for(problem: ProblemSpec, grid: TimeGrid, tables: KernelTables | None, threads: int = 1) -> KernelTables:
    if tables is not None:
        if tables.grid.N != grid.N or not np.array_equal(tables.grid.nodes, grid.nodes):
            raise DomainError("kernel tables were built on a different grid")
        if tables.alpha != problem.alpha or not np.array_equal(tables.lambdas, problem.basis.lambdas):
            raise DomainError("kernel tables do not match the problem")
        return tables
    return kernel_tables(problem.alpha, problem.basis.lambdas, grid, threads=threads)


def _density(problem: ProblemSpec, grid: TimeGrid, w: NDArray) -> NDArray:
    return eval_G(problem.nonlinearity, grid.nodes, w, problem.basis)


def mild_map(problem: ProblemSpec, grid: TimeGrid, tables: KernelTables, w: NDArray) -> NDArray:
    """One application of the discrete mild map to node values w of shape (N+1, J)."""
    Bt = tables.E_nodes / problem.setup.denominators
    if problem.nonlinearity.is_zero:
        return Bt * problem.f
    g = _density(problem, grid, w)
    conv = tables.convolve(g)
    return Bt * (problem.f - conv[-1]) + conv


def fixed_point_residual(problem: ProblemSpec, traj: Trajectory, tables: KernelTables) -> float:
    """Change of the run's weighted norm under one more application of the mild map."""
    d = mild_map(problem, traj.grid, tables, traj.states) - traj.states
    return float(np.max(traj.times**traj.weight_exponent * problem.basis.norm(d, traj.norm_index)))


def _weighted(basis: SpectralBasis, t: NDArray, exponent: float, gamma: float) -> Callable[[NDArray], float]:
    w = t**exponent

    def norm(d: NDArray) -> float:
        return float(np.max(w * basis.norm(d, gamma)))

    return norm


def _path_norm(basis: SpectralBasis, grid: TimeGrid, nu: float, sigma: float, q: float) -> Callable[[NDArray], float]:
    h = grid.steps

    def norm(d: NDArray) -> float:
        sup = float(np.max(basis.norm(d, nu)))
        # left-node rule, matching the density sampling of the convolutions
        lq = float(np.sum(h * basis.norm(d[:-1], sigma) ** q)) ** (1.0 / q)
        return sup + lq

    return norm


def _iterate(
    problem: ProblemSpec,
    grid: TimeGrid,
    tables: KernelTables,
    norm: Callable[[NDArray], float],
    mode: str,
    weight_exponent: float,
    norm_index: float,
    tol: float,
    max_iter: int,
    size: Callable[[NDArray], float] | None = None,
    radius: float | None = None,
) -> Trajectory:
    if not tol > 0:
        raise DomainError("tol must be positive")
    if int(max_iter) < 1:
        raise DomainError("max_iter must be at least 1")
    w = (tables.E_nodes / problem.setup.denominators) * problem.f
    records: list[IterationRecord] = []
    prev = math.nan
    biggest = size(w) if size is not None else math.nan
    converged = False
    for k in range(1, int(max_iter) + 1):
        w_new = mild_map(problem, grid, tables, w)
        if not np.all(np.isfinite(w_new)):
            raise NonConvergence(f"{mode}: iterate {k} is not finite", _traj(problem, grid, w, mode, records, False, weight_exponent, norm_index, math.nan, biggest))
        diff = norm(w_new - w)
        ratio = diff / prev if prev > 0 else math.nan
        records.append(IterationRecord(k, diff, ratio))
        log.debug("%s k=%d diff=%.3e ratio=%.3g", mode, k, diff, ratio)
        w = w_new
        if size is not None:
            biggest = max(biggest, size(w))
        prev = diff
        if diff <= tol:
            converged = True
            break
    ratios = [r.ratio for r in records[1:] if np.isfinite(r.ratio)]
    factor = max(ratios) if ratios else 0.0
    traj = _traj(problem, grid, w, mode, records, converged, weight_exponent, norm_index, factor, biggest)
    if radius is not None and biggest > radius:
        warnings.warn(RadiusExceeded(f"iterates reached weighted norm {biggest:.4g} > R_hat = {radius:.4g}"), stacklevel=3)
    if not converged:
        last = records[-1]
        raise NonConvergence(
            f"{mode}: no convergence after {max_iter} iterations (last diff {last.weighted_diff:.3e}, ratio {last.ratio:.3g})",
            traj,
        )
    return traj


def _traj(problem, grid, w, mode, records, converged, weight_exponent, norm_index, factor, biggest) -> Trajectory:
    return Trajectory(
        grid=grid,
        basis=problem.basis,
        states=w,
        mode=mode,
        alpha=problem.alpha,
        iterations=tuple(records),
        converged=converged,
        weight_exponent=weight_exponent,
        norm_index=norm_index,
        f=problem.f,
        observed_factor=factor,
        max_weighted_norm=biggest,
    )


# ---------------------------------------------------------------------------
# Public solvers
# ---------------------------------------------------------------------------


def solve_tvp_picard(
    problem: ProblemSpec,
    grid: TimeGrid,
    tol: float = 1e-10,
    max_iter: int = 200,
    *,
    tables: KernelTables | None = None,
    bundle: ConstantsBundle | None = None,
    threads: int = 1,
) -> Trajectory:
    """Picard iteration in the weighted space with weight t^(alpha (1-theta)).

    Raises
    ------
    HypothesisError
        If theta is missing or outside ((alpha-1)/alpha, 1).
    NonConvergence
        After ``max_iter`` iterations; the last iterate is attached.
    """
    a = problem.alpha
    th = problem.regularity.theta
    if th is None or not ((a - 1.0) / a < th < 1.0):
        raise HypothesisError("(alpha-1)/alpha < theta < 1", f"theta={th}, alpha={a}")
    if problem.nonlinearity.growth_class != "H1":
        raise HypothesisError("globally Lipschitz nonlinearity", f"{problem.nonlinearity.kind} is {problem.nonlinearity.growth_class}")
    if bundle is not None and bundle.picard_admissible is False:
        warnings.warn(f"||L1|| scrM1 = {bundle.L1 * bundle.scrM1:.3g} >= 1: outside the certified range", stacklevel=2)
    tables = _tables_for(problem, grid, tables, threads)
    e = a * (1.0 - th)
    nu = problem.regularity.nu
    return _iterate(problem, grid, tables, _weighted(problem.basis, grid.nodes, e, nu), "picard", e, nu, tol, max_iter)


def solve_tvp_path(
    problem: ProblemSpec,
    grid: TimeGrid,
    tol: float = 1e-10,
    max_iter: int = 200,
    *,
    tables: KernelTables | None = None,
    threads: int = 1,
) -> Trajectory:
    """Fixed-point iteration stopped in the C([0,T]; H^nu) + L^q(H^sigma) norm."""
    p = problem.regularity
    if p.sigma is None or p.q is None:
        raise HypothesisError("path space needs sigma and q")
    if problem.nonlinearity.growth_class != "H1":
        raise HypothesisError("globally Lipschitz nonlinearity", problem.nonlinearity.kind)
    tables = _tables_for(problem, grid, tables, threads)
    norm = _path_norm(problem.basis, grid, p.nu, p.sigma, p.q)
    return _iterate(problem, grid, tables, norm, "path", 0.0, p.nu, tol, max_iter)


def solve_tvp_contraction(
    problem: ProblemSpec,
    grid: TimeGrid,
    tol: float = 1e-10,
    max_iter: int = 200,
    *,
    tables: KernelTables | None = None,
    radius: float | None = None,
    threads: int = 1,
) -> Trajectory:
    """Critical-case iteration in the weighted space with weight t^(alpha vartheta).

    ``observed_factor`` of the result is the largest ratio of consecutive
    weighted differences from the second iteration on.  With ``radius`` set, a
    :class:`RadiusExceeded` warning is emitted if any iterate leaves that ball.
    """
    p = problem.regularity
    vt = p.vartheta
    if vt is None or not (0.0 < vt < 1.0):
        raise HypothesisError("vartheta in (0, 1)", f"vartheta={vt}")
    if p.sigma is not None and not (p.nu - p.sigma < vt):
        raise HypothesisError("vartheta in (nu - sigma, 1)", f"vartheta={vt}, mu={p.nu - p.sigma}")
    tables = _tables_for(problem, grid, tables, threads)
    e = problem.alpha * vt
    norm = _weighted(problem.basis, grid.nodes, e, p.nu)
    return _iterate(problem, grid, tables, norm, "contraction", e, p.nu, tol, max_iter, size=norm, radius=radius)


def solve_ivp_forward(
    setup: TerminalSetup,
    grid: TimeGrid,
    u0: ArrayLike,
    nonlinearity: NonlinearitySpec,
    *,
    tables: KernelTables | None = None,
    threads: int = 1,
) -> Trajectory:
    """March u(t_n) = B0(t_n) u0 + sum_{m<n} W[n, m] G(t_m, u(t_m)) node by node.

    The left-node rule makes every node depend on earlier nodes only, so no
    iteration is needed.
    """
    basis = setup.basis
    u0 = np.asarray(u0.coeffs if isinstance(u0, SpectralField) else u0, dtype=float)
    if u0.shape != (basis.J,):
        raise DomainError(f"initial state has shape {u0.shape}, expected ({basis.J},)")
    if tables is None:
        tables = kernel_tables(setup.alpha, basis.lambdas, grid, threads=threads)
    states = tables.E_nodes * u0
    if not nonlinearity.is_zero:
        t = grid.nodes
        g = np.zeros_like(states)
        for n in range(1, grid.N + 1):
            g[n - 1] = eval_G(nonlinearity, t[n - 1], states[n - 1], basis)
            states[n] += np.einsum("jm,mj->j", tables.W[:, n, :n], g[:n])
    return Trajectory(grid=grid, basis=basis, states=states, mode="forward", alpha=setup.alpha)


def reconstruct_initial(problem: ProblemSpec, traj: Trajectory, tables: KernelTables) -> SpectralField:
    """u(0)_j = (f_j - int_0^T P_j(T-r) G_j dr) / E_{alpha,1}(-lambda_j T^alpha)."""
    if problem.nonlinearity.is_zero:
        return SpectralField(problem.basis, problem.f / problem.setup.denominators)
    g = _density(problem, traj.grid, traj.states)
    return SpectralField(problem.basis, (problem.f - tables.convolve_terminal(g)) / problem.setup.denominators)


def reconstruct_derivatives(problem: ProblemSpec, traj: Trajectory, order: str, tables: KernelTables | None = None) -> NDArray:
    """First-order or Caputo derivative at nodes t_1..t_N, shape (N, J).

    ``order="first"`` assembles D1(t) f + int D2(t-r) G dr - D1(t) int P(T-r) G dr;
    ``order="alpha"`` assembles D3(t) f + int D4(t-r) G dr - D3(t) int P(T-r) G dr + G(t, u(t)).
    Node 0 is excluded because both derivatives may be singular there.
    """
    if order not in ("first", "alpha"):
        raise DomainError("order must be 'first' or 'alpha'")
    setup, grid = problem.setup, traj.grid
    t = grid.nodes[1:]
    lam = problem.basis.lambdas
    zero = problem.nonlinearity.is_zero
    if not zero:
        tables = _tables_for(problem, grid, tables)
        g = _density(problem, grid, traj.states)
        conv_T = tables.convolve_terminal(g)
    if order == "first":
        D1 = setup.D1(t)
        out = D1 * problem.f
        if not zero:
            W2 = derivative_weights(problem.alpha, lam, grid)
            out += np.einsum("jnm,mj->nj", W2, g)[1:] - D1 * conv_T
        return out
    D3 = setup.D3(t)
    out = D3 * problem.f
    if not zero:
        out += -lam * tables.convolve(g)[1:] - D3 * conv_T + g[1:]
    return out


def equation_residual(problem: ProblemSpec, traj: Trajectory, d_alpha: NDArray, gamma: float = 0.0) -> NDArray:
    """||d^alpha u + Lambda u - G(t, u)||_{H^gamma} at nodes t_1..t_N."""
    u = traj.states[1:]
    g = 0.0 if problem.nonlinearity.is_zero else _density(problem, traj.grid, traj.states)[1:]
    r = d_alpha + problem.basis.lambdas * u - g
    return np.asarray(problem.basis.norm(r, gamma))
