"""Exponent fits, estimate envelopes and stability sweeps on solver output.

The hidden constants of the regularity estimates are existence-only.  They are
made falsifiable by an envelope protocol: each estimate is evaluated on the
linear problem (G = 0) for every single-mode datum, the largest value is frozen
as that estimate's constant, and other problems are then measured against it.
Because the linear solution operators are diagonal, the per-mode supremum is
the operator norm, so every linear datum passes by construction.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
from numpy.typing import ArrayLike, NDArray

from .constants import ConstantsBundle, RegularityParams, eta_cri, eta_glo
from .errors import DegenerateWindow, DomainError, HypothesisError
from .quadrature import KernelTables, TimeGrid
from .solver import ProblemSpec, Trajectory, reconstruct_derivatives

EDGE = 3


# ---------------------------------------------------------------------------
# Exponent fits
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ExponentFit:
    slope: float
    intercept: float
    r_squared: float
    window: tuple[int, int]


def fit_power_law(x: ArrayLike, y: ArrayLike, window: tuple[int, int] | None = None) -> ExponentFit:
    """Least-squares line through (log x, log y) on index range ``window`` (half-open)."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    lo, hi = window if window is not None else (0, x.size)
    xs, ys = x[lo:hi], y[lo:hi]
    if xs.size < 5:
        raise DegenerateWindow(f"window {lo}:{hi} has {xs.size} points, need at least 5")
    if np.any(xs <= 0) or np.any(ys <= 0) or not np.all(np.isfinite(ys)):
        raise DegenerateWindow("window contains non-positive or non-finite values")
    lx, ly = np.log(xs), np.log(ys)
    A = np.column_stack([lx, np.ones_like(lx)])
    (slope, intercept), *_ = np.linalg.lstsq(A, ly, rcond=None)
    resid = ly - A @ np.array([slope, intercept])
    ss = float(np.sum((ly - ly.mean()) ** 2))
    # a flat window leaves only rounding noise in ss
    flat = ss <= ly.size * (1e-13 * max(1.0, abs(float(ly.mean())))) ** 2
    r2 = 1.0 if flat else max(0.0, 1.0 - float(np.sum(resid**2)) / ss)
    return ExponentFit(float(slope), float(intercept), r2, (lo, hi))


def first_decade_window(t: NDArray, edge: int = EDGE) -> tuple[int, int]:
    """Nodes from index ``edge`` up to ten times that node's time."""
    t0 = t[edge]
    hi = int(np.searchsorted(t, 10.0 * t0, side="right"))
    return edge, min(hi, t.size - edge)


def fit_blowup_exponent(traj: Trajectory, gamma: float, window: tuple[int, int] | None = None) -> ExponentFit:
    """Slope of log ||u(t_n)||_{H^gamma} against log t_n, default over the first decade."""
    t = traj.times
    if window is None:
        window = first_decade_window(t)
    return fit_power_law(t, traj.norms(gamma), window)


def interior_window(n_nodes: int, edge: int = EDGE) -> tuple[int, int]:
    return edge, n_nodes - edge


def fit_holder_modulus(
    traj: Trajectory,
    gamma: float,
    window: tuple[int, int] | None = None,
    method: str = "anchored",
) -> ExponentFit:
    """Hölder exponent of t -> u(t) in H^gamma.

    ``method="anchored"`` regresses ||u(t_n) - u(0)|| on t_n, which measures the
    modulus at the singular end.  ``method="adjacent"`` regresses
    ||u(t_{n+1}) - u(t_n)|| on t_{n+1} - t_n; on a graded mesh this mixes the
    exponent with the grading and is kept for comparison.
    """
    t = traj.times
    u = traj.states
    if window is None:
        window = interior_window(t.size)
    if method == "anchored":
        d = np.asarray(traj.basis.norm(u - u[0], gamma))
        return fit_power_law(t, d, window)
    if method == "adjacent":
        d = np.asarray(traj.basis.norm(np.diff(u, axis=0), gamma))
        lo, hi = window
        return fit_power_law(np.diff(t), d, (lo, min(hi, t.size - 1)))
    raise DomainError(f"unknown method {method!r}")


def holder_constant(traj: Trajectory, gamma: float, exponent: float, window: tuple[int, int] | None = None) -> float:
    """max over adjacent interior pairs of ||u(t_{n+1}) - u(t_n)||_{H^gamma} / (t_{n+1} - t_n)^exponent."""
    t = traj.times
    lo, hi = window if window is not None else interior_window(t.size)
    d = np.asarray(traj.basis.norm(np.diff(traj.states, axis=0), gamma))[lo : hi - 1]
    return float(np.max(d / np.diff(t)[lo : hi - 1] ** exponent))


def fit_weyl(lambdas: ArrayLike, skip: int = 0) -> ExponentFit:
    """Slope of log lambda_j against log j; 2/N for a domain of dimension N."""
    lam = np.asarray(lambdas, dtype=float)
    j = np.arange(1, lam.size + 1, dtype=float)
    return fit_power_law(j, lam, (skip, lam.size))


@dataclass(frozen=True)
class WeylFit:
    c_L: float
    boundary: float
    dim: int


def weyl_constant(lambdas: ArrayLike, dim: int, skip: int = 0) -> WeylFit:
    """Least-squares fit of lambda_j ~ c_L j^(2/d) + c_1 j^(1/d).

    The second term absorbs the boundary correction of the Weyl law, which
    otherwise biases c_L by O(j^(-1/d)) on a finite spectrum.
    """
    lam = np.asarray(lambdas, dtype=float)
    if dim < 1:
        raise DomainError("dimension must be at least 1")
    j = np.arange(1, lam.size + 1, dtype=float)[skip:]
    if j.size < 5:
        raise DegenerateWindow(f"{j.size} eigenvalues after skipping {skip}, need at least 5")
    A = np.column_stack([j ** (2.0 / dim), j ** (1.0 / dim)])
    (c, c1), *_ = np.linalg.lstsq(A, lam[skip:], rcond=None)
    return WeylFit(float(c), float(c1), int(dim))


# ---------------------------------------------------------------------------
# Estimates
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class EstimateSpec:
    """One displayed estimate.

    ``quantity`` is ``u``, ``du`` or ``dalpha``; ``kind`` is ``pointwise``
    (t^exponent ||q(t)||_{H^gamma}), ``holder`` (||u(t')-u(t)||_{H^gamma}/|t'-t|^exponent)
    or ``path`` (sup ||u||_{H^gamma} + (int ||u||_{H^gamma2}^q)^{1/q}).  All are
    divided by ||f||_{H^kappa}.
    """

    id: str
    kind: str
    quantity: str
    gamma: float
    exponent: float
    kappa: float
    gamma2: float = 0.0
    q: float = 1.0


def lipschitz_estimates(alpha: float, p: RegularityParams) -> list[EstimateSpec]:
    """Estimates of the Picard theorem (main bound and parts a-d) for the indices present."""
    a, nu, th = alpha, p.nu, p.theta
    if th is None or not ((a - 1) / a < th < 1):
        raise HypothesisError("(alpha-1)/alpha < theta < 1", f"theta={th}, alpha={a}")
    k = nu + th
    out = [EstimateSpec("lipschitz_main", "pointwise", "u", nu, a * (1 - th), k)]
    if p.theta_prime is not None:
        out.append(EstimateSpec("lipschitz_a", "pointwise", "u", nu + th - p.theta_prime, a * (1 - p.theta_prime), k))
    if p.nu_prime is not None:
        out.append(EstimateSpec("lipschitz_b", "holder", "u", nu - p.nu_prime, eta_glo(a, th, p.nu_prime), k))
    if p.nu1 is not None:
        out.append(EstimateSpec("lipschitz_c", "pointwise", "du", nu - p.nu1 - 1 / a, a * (1 - th - p.nu1), k))
    if p.nu_alpha is not None:
        e = a * min(1 - th - p.nu_alpha, 1 - th)
        out.append(EstimateSpec("lipschitz_d", "pointwise", "dalpha", nu - p.nu_alpha - 1 / a, e, k))
    return out


def path_estimates(alpha: float, p: RegularityParams) -> list[EstimateSpec]:
    if p.theta is None or p.sigma is None or p.q is None:
        raise HypothesisError("path space needs theta, sigma and q")
    return [EstimateSpec("path_main", "path", "u", p.nu, 0.0, p.nu + p.theta + 1, gamma2=p.sigma, q=p.q)]


def critical_estimates(alpha: float, p: RegularityParams) -> list[EstimateSpec]:
    a, nu, vt = alpha, p.nu, p.vartheta
    if vt is None or not (0 < vt < 1):
        raise HypothesisError("vartheta in (nu - sigma, 1)", f"vartheta={vt}")
    k = nu + 1 - vt
    out = [EstimateSpec("critical_main", "pointwise", "u", nu, a * vt, k)]
    if p.vartheta_prime is not None:
        out.append(EstimateSpec("critical_a", "pointwise", "u", nu + p.vartheta_prime - vt, a * p.vartheta_prime, k))
    if p.eta is not None:
        out.append(EstimateSpec("critical_b", "holder", "u", nu - p.eta, eta_cri(a, p.eta, vt), k))
    return out


def _pointwise(t: NDArray, e: float, norms: NDArray) -> NDArray:
    with np.errstate(divide="ignore", invalid="ignore"):
        return t**e * norms


def _holder_sup(basis, t: NDArray, states: NDArray, gamma: float, e: float) -> float:
    """max over all node pairs n < m of ||u_m - u_n||_{H^gamma} / (t_m - t_n)^e."""
    best = 0.0
    for n in range(t.size - 1):
        d = np.asarray(basis.norm(states[n + 1 :] - states[n], gamma))
        best = max(best, float(np.max(d / (t[n + 1 :] - t[n]) ** e)))
    return best


def _holder_sup_modes(t: NDArray, X: NDArray, scale: NDArray, e: float) -> NDArray:
    """Per-mode version of :func:`_holder_sup` for multipliers X (nodes, J)."""
    best = np.zeros(X.shape[1])
    for n in range(t.size - 1):
        r = np.abs(X[n + 1 :] - X[n]) / ((t[n + 1 :] - t[n]) ** e)[:, None]
        best = np.maximum(best, r.max(axis=0))
    return best * scale


def _path_value(basis, t: NDArray, states: NDArray, gamma: float, gamma2: float, q: float) -> float:
    h = np.diff(t)
    sup = float(np.max(basis.norm(states, gamma)))
    lq = float(np.sum(h * np.asarray(basis.norm(states[:-1], gamma2)) ** q)) ** (1 / q)
    return sup + lq


@dataclass(frozen=True)
class Envelope:
    """Frozen per-estimate constants from the linear calibration."""

    constants: dict[str, float]
    specs: tuple[EstimateSpec, ...]
    grid_N: int
    T: float


def calibrate_envelope(problem: ProblemSpec, grid: TimeGrid, specs: Sequence[EstimateSpec]) -> Envelope:
    """Evaluate every estimate on G = 0 with f = phi_j for all retained j and keep the maximum.

    The linear solution for f = phi_j is the multiplier column B_j(t) (and
    D1_j, D3_j for the derivatives), so the calibration reads the multipliers
    directly instead of running J solves.
    """
    setup = problem.setup
    lam = problem.basis.lambdas
    t = grid.nodes
    X = {"u": setup.B(t)}
    if any(s.quantity == "du" for s in specs):
        X["du"] = np.vstack([np.full((1, lam.size), np.nan), setup.D1(t[1:])])
    if any(s.quantity == "dalpha" for s in specs):
        X["dalpha"] = np.vstack([np.full((1, lam.size), np.nan), setup.D3(t[1:])])
    consts: dict[str, float] = {}
    for s in specs:
        m = np.abs(X[s.quantity])
        scale = lam ** (s.gamma - s.kappa)
        if s.kind == "pointwise":
            v = _pointwise(t, s.exponent, 1.0)[:, None] * m * scale
            c = float(np.nanmax(v[1:]))
        elif s.kind == "holder":
            c = float(np.max(_holder_sup_modes(t, X[s.quantity], scale, s.exponent)))
        elif s.kind == "path":
            sup = float(np.max(m * scale))
            ratio = np.max(m[:-1] * lam ** (s.gamma2 - s.kappa), axis=1)
            c = sup + float(np.sum(np.diff(t) * ratio**s.q)) ** (1 / s.q)
        else:
            raise DomainError(f"unknown estimate kind {s.kind!r}")
        consts[s.id] = c
    return Envelope(consts, tuple(specs), grid.N, grid.T)


@dataclass(frozen=True)
class ReportRow:
    estimate_id: str
    lhs_max: float
    rhs_envelope: float
    ratio: float
    passed: bool


def estimate_values(problem: ProblemSpec, traj: Trajectory, specs: Sequence[EstimateSpec], tables: KernelTables | None = None) -> dict[str, float]:
    """Normalised left-hand side of every estimate on one trajectory."""
    basis = problem.basis
    t = traj.times
    derivs: dict[str, NDArray] = {}
    out: dict[str, float] = {}
    for s in specs:
        fn = float(basis.norm(problem.f, s.kappa))
        if fn == 0:
            out[s.id] = 0.0
            continue
        if s.quantity in ("du", "dalpha") and s.quantity not in derivs:
            order = "first" if s.quantity == "du" else "alpha"
            derivs[s.quantity] = reconstruct_derivatives(problem, traj, order, tables)
        if s.kind == "pointwise":
            if s.quantity == "u":
                v = _pointwise(t[1:], s.exponent, traj.norms(s.gamma)[1:])
            else:
                v = _pointwise(t[1:], s.exponent, np.asarray(basis.norm(derivs[s.quantity], s.gamma)))
            lhs = float(np.max(v))
        elif s.kind == "holder":
            lhs = _holder_sup(basis, t, traj.states, s.gamma, s.exponent)
        else:
            lhs = _path_value(basis, t, traj.states, s.gamma, s.gamma2, s.q)
        out[s.id] = lhs / fn
    return out


def verify_estimate_suite(
    problem: ProblemSpec,
    traj: Trajectory,
    envelope: Envelope,
    tables: KernelTables | None = None,
    slack: float = 1.0,
) -> list[ReportRow]:
    """Compare each estimate with its frozen envelope; pass when ratio <= slack."""
    if traj.grid.N != envelope.grid_N or traj.grid.T != envelope.T:
        raise DomainError("trajectory grid differs from the calibration grid")
    vals = estimate_values(problem, traj, envelope.specs, tables)
    rows = []
    for s in envelope.specs:
        c = envelope.constants[s.id]
        r = vals[s.id] / c if c > 0 else (0.0 if vals[s.id] == 0 else math.inf)
        rows.append(ReportRow(s.id, vals[s.id], c, r, bool(r <= slack)))
    return rows


# ---------------------------------------------------------------------------
# Contraction diagnostics
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class BoundRow:
    k: int
    observed: float
    bound: float
    ok: bool


def picard_difference_bound(traj: Trajectory, bundle: ConstantsBundle, f_norm: float) -> list[BoundRow]:
    """Observed weighted differences against 2 N1 (||L1|| scrM1)^(k-1) ||f||_{H^{nu+theta}}."""
    if math.isnan(bundle.calN1):
        raise HypothesisError("||L1|| scrM1 < 1", "N1 undefined")
    rho = bundle.L1 * bundle.scrM1
    rows = []
    for r in traj.iterations:
        b = 2.0 * bundle.calN1 * rho ** (r.k - 1) * f_norm
        rows.append(BoundRow(r.k, r.weighted_diff, b, bool(r.weighted_diff <= b)))
    return rows


def fitted_ratio(traj: Trajectory, start: int = 3) -> float:
    """Geometric decay rate from a log-linear fit of the differences from iteration ``start`` on."""
    recs = [r for r in traj.iterations if r.k >= start and r.weighted_diff > 0]
    if len(recs) < 2:
        return float("nan")
    k = np.array([r.k for r in recs], dtype=float)
    d = np.log([r.weighted_diff for r in recs])
    return float(np.exp(np.polyfit(k, d, 1)[0]))


# ---------------------------------------------------------------------------
# Stability
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class StabilityRow:
    delta: float
    trial: int
    diff_norm: float
    data_norm: float
    ratio: float


@dataclass(frozen=True)
class StabilityReport:
    rows: tuple[StabilityRow, ...]

    @property
    def spread(self) -> float:
        """Largest over smallest ratio among non-zero perturbations."""
        r = [x.ratio for x in self.rows if x.data_norm > 0]
        return max(r) / min(r) if r else 1.0


def stability_experiment(
    problem: ProblemSpec,
    solve: Callable[[ProblemSpec], Trajectory],
    data_index: float,
    deltas: Sequence[float] = (1e-2, 1e-4, 1e-6),
    n_trials: int = 1,
    seed: int = 0,
    base: Trajectory | None = None,
) -> StabilityReport:
    """Solve for f and f + delta d and report weighted ||u(f) - u(f + delta d)|| / ||delta d||_{H^data_index}.

    The direction d is drawn once per trial (seeded) with unit H^data_index norm
    and shaped like the data.  The difference is measured in the weighted norm
    of the solver's own space.
    """
    rng = np.random.default_rng(seed)
    basis = problem.basis
    ref = solve(problem) if base is None else base
    e, g = ref.weight_exponent, ref.norm_index
    w = ref.times**e
    rows = []
    for trial in range(n_trials):
        d = rng.standard_normal(basis.J) * np.abs(problem.f)
        if not np.any(d):
            d = rng.standard_normal(basis.J) * basis.lambdas ** (-data_index - 1.0)
        d /= basis.norm(d, data_index)
        for delta in deltas:
            tr = solve(problem.with_f(problem.f + delta * d))
            diff = float(np.max(w * basis.norm(tr.states - ref.states, g)))
            dn = float(basis.norm(delta * d, data_index))
            rows.append(StabilityRow(float(delta), trial, diff, dn, diff / dn if dn > 0 else 0.0))
    return StabilityReport(tuple(rows))
