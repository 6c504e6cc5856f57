"""Build problems from an :class:`ExperimentConfig` and run the configured pipeline."""

from __future__ import annotations

import logging
import math
import warnings
from dataclasses import dataclass, field

import numpy as np
from numpy.typing import NDArray

from . import analysis as an
from .config import BasisConfig, DataConfig, ExperimentConfig
from .constants import (
    ConstantsBundle,
    Check,
    compute_constants,
    critical_hypotheses,
    eta_cri,
    eta_glo,
    lipschitz_hypotheses,
    path_space_hypotheses,
    validate_application_params,
)
from .errors import ConfigError, DomainError, RadiusExceeded
from .nonlinearity import (
    NonlinearitySpec,
    burgers,
    critical_K0,
    fit_growth_constant,
    ginzburg_landau,
    lipschitz_scaled,
    rho_for_K0,
    zero,
)
from .operators import TerminalSetup, kernel_constants, make_terminal_setup
from .quadrature import KernelTables, kernel_tables, make_grid
from .solver import (
    ProblemSpec,
    Trajectory,
    equation_residual,
    reconstruct_derivatives,
    solve_ivp_forward,
    solve_tvp_contraction,
    solve_tvp_path,
    solve_tvp_picard,
)
from .spectral_basis import SpectralBasis, dirichlet_1d, dirichlet_2d, load_spectrum

log = logging.getLogger(__name__)


def build_basis(cfg: BasisConfig) -> SpectralBasis:
    if cfg.kind == "dirichlet_1d":
        return dirichlet_1d(cfg.L, cfg.J, cfg.M)
    if cfg.kind == "dirichlet_2d":
        return dirichlet_2d(cfg.Lx, cfg.Ly, cfg.J, cfg.M)
    return load_spectrum(cfg.spectrum, cfg.samples)


def build_data(cfg: DataConfig, basis: SpectralBasis) -> NDArray:
    J = basis.J
    if cfg.preset == "single_mode":
        if cfg.j > J:
            raise ConfigError("problem.f.j", f"mode {cfg.j} exceeds J={J}")
        f = np.zeros(J)
        f[cfg.j - 1] = cfg.amplitude
        return f
    if cfg.preset == "power_law":
        j = np.arange(1, J + 1, dtype=float)
        return cfg.amplitude * basis.lambdas ** (-cfg.exponent) * j ** (-0.5 - cfg.offset)
    try:
        f = np.atleast_1d(np.loadtxt(cfg.path, delimiter=",", comments="#", ndmin=1))
    except (OSError, ValueError) as exc:
        raise ConfigError("problem.f.path", f"cannot read coefficients: {exc}") from None
    if f.ndim != 1 or f.size != J:
        raise ConfigError("problem.f.path", f"expected {J} coefficients, got {f.size}")
    return cfg.amplitude * f


@dataclass
class Built:
    cfg: ExperimentConfig
    basis: SpectralBasis
    setup: TerminalSetup
    f: NDArray
    nonlinearity: NonlinearitySpec
    bundle: ConstantsBundle
    extra: dict[str, float] = field(default_factory=dict)

    @property
    def problem(self) -> ProblemSpec:
        return ProblemSpec(self.setup, self.f, self.nonlinearity, self.cfg.regularity)


def _data_index(cfg: ExperimentConfig, critical: bool) -> float | None:
    p = cfg.regularity
    if critical:
        return None if p.vartheta is None else p.nu + 1 - p.vartheta
    return None if p.theta is None else p.nu + p.theta


def build(cfg: ExperimentConfig, seed: int = 0, setup_only: bool = False) -> Built:
    """Basis, terminal setup, data, nonlinearity and constants for one configuration.

    Raises
    ------
    TerminalTimeInadmissible
        If a terminal denominator is below ``eps_den``.
    """
    basis = build_basis(cfg.basis)
    setup = make_terminal_setup(cfg.alpha, cfg.T, basis, cfg.eps_den)
    f = build_data(cfg.f, basis)
    p = cfg.regularity
    nl = cfg.nonlinearity
    kc = kernel_constants(setup)
    extra = {"m_alpha": kc.m_alpha, "M_alpha": kc.M_alpha, "M_beta_one": kc.M_beta_one, "M_beta_alpha": kc.M_beta_alpha}
    critical = nl.kind in ("ginzburg_landau", "burgers")
    s = nl.s if critical else None
    kidx = _data_index(cfg, critical)
    f_norm = float(basis.norm(f, kidx)) if kidx is not None else None
    base = compute_constants(cfg.alpha, cfg.T, basis.lambdas[0], p, kc.m_alpha, kc.M_alpha, s=s, f_norm=f_norm, L1=0.0 if nl.kind == "lipschitz_scaled" else None)

    if nl.kind == "zero":
        spec = zero()
    elif nl.kind == "lipschitz_scaled":
        if nl.L1 is not None:
            L1 = nl.L1
        else:
            if math.isnan(base.scrM1):
                raise ConfigError("nonlinearity.L1_fraction", "needs regularity.theta to evaluate the admissible bound")
            L1 = nl.L1_fraction / base.scrM1
        spec = lipschitz_scaled(L1)
    else:
        maker = ginzburg_landau if nl.kind == "ginzburg_landau" else burgers
        if nl.kind == "burgers" and basis.kind != "dirichlet_1d":
            raise ConfigError("nonlinearity.kind", "burgers runs on the 1D Dirichlet basis only")
        proto = maker(nl.s, 1.0, nl.b) if nl.kind == "ginzburg_landau" else maker(1.0, nl.b)
        c_rho = nl.c_rho
        if p.sigma is not None and p.zeta is not None:
            KG = fit_growth_constant(proto, basis, p.sigma, p.nu, seed=seed)
            extra["K_G"] = KG
            if nl.K0_fraction is not None:
                if math.isnan(base.critical_threshold):
                    raise ConfigError("nonlinearity.K0_fraction", "needs sigma, vartheta, zeta and non-zero data")
                target = nl.K0_fraction * base.critical_threshold / cfg.T ** (nl.s * cfg.alpha * p.vartheta)
                c_rho = rho_for_K0(proto, KG, cfg.T, cfg.alpha, p.zeta, target)
        elif nl.K0_fraction is not None:
            raise ConfigError("nonlinearity.K0_fraction", "needs regularity.sigma and regularity.zeta")
        spec = ginzburg_landau(nl.s, c_rho, nl.b) if nl.kind == "ginzburg_landau" else burgers(c_rho, nl.b)
        extra["c_rho"] = c_rho
    kw = {}
    if spec.kind == "lipschitz_scaled":
        kw["L1"] = spec.lipschitz
    if critical and "K_G" in extra:
        try:
            kw["K0"] = critical_K0(spec, extra["K_G"], cfg.T, cfg.alpha, p.zeta)
        except DomainError as exc:
            log.warning("K0 unavailable: %s", exc)
    bundle = compute_constants(cfg.alpha, cfg.T, basis.lambdas[0], p, kc.m_alpha, kc.M_alpha, s=s, f_norm=f_norm, **kw)
    return Built(cfg, basis, setup, f, spec, bundle, extra)


# ---------------------------------------------------------------------------
# Validation (dry run)
# ---------------------------------------------------------------------------


def hypothesis_checks(b: Built) -> list[Check]:
    cfg = b.cfg
    mode = cfg.solver.mode
    nl = b.nonlinearity
    checks: list[Check] = []
    if nl.growth_class == "H3":
        checks += critical_hypotheses(cfg.alpha, cfg.regularity, nl.s, b.bundle)
    elif mode == "path":
        checks += path_space_hypotheses(cfg.alpha, cfg.regularity, b.bundle)
    elif mode != "forward":
        checks += lipschitz_hypotheses(cfg.alpha, cfg.regularity, b.bundle)
    if cfg.application is not None:
        a = cfg.application
        r = validate_application_params(a.kind, a.N, a.nu, a.mu, a.vartheta, a.vartheta_prime, s=a.s, varrho=a.varrho, b=a.b, alpha=cfg.alpha)
        checks += [Check(f"{a.kind}:{c.id}", c.ok, c.detail) for c in r.checks]
    return checks


# ---------------------------------------------------------------------------
# Run
# ---------------------------------------------------------------------------


@dataclass
class RunResult:
    built: Built
    trajectory: Trajectory
    report: list[an.ReportRow]
    forward: Trajectory | None = None
    extra: dict[str, float] = field(default_factory=dict)

    @property
    def ok(self) -> bool:
        return all(r.passed for r in self.report)


def _row(name: str, lhs: float, rhs: float, upper: bool = True) -> an.ReportRow:
    """Row that passes when lhs <= rhs (upper) or lhs >= rhs (lower); ratio <= 1 means pass."""
    if upper:
        r = lhs / rhs if rhs > 0 else (0.0 if lhs <= 0 else math.inf)
    else:
        r = rhs / lhs if lhs > 0 else math.inf
    return an.ReportRow(name, float(lhs), float(rhs), float(r), bool(r <= 1.0))


def solve_problem(b: Built, grid, tables: KernelTables, mode: str | None = None) -> Trajectory:
    cfg = b.cfg
    mode = mode or cfg.solver.mode
    tol, it = cfg.solver.tol, cfg.solver.max_iter
    pr = b.problem
    if mode == "roundtrip":
        mode = "contraction" if b.nonlinearity.growth_class == "H3" else "picard"
    if mode == "picard":
        return solve_tvp_picard(pr, grid, tol, it, tables=tables, bundle=b.bundle)
    if mode == "path":
        return solve_tvp_path(pr, grid, tol, it, tables=tables)
    if mode == "contraction":
        radius = None if math.isnan(b.bundle.R_hat) else b.bundle.R_hat
        return solve_tvp_contraction(pr, grid, tol, it, tables=tables, radius=radius)
    if mode == "forward":
        return solve_ivp_forward(b.setup, grid, b.f, b.nonlinearity, tables=tables)
    raise ConfigError("solver.mode", f"unknown mode {mode!r}")


def run_experiment(cfg: ExperimentConfig, threads: int = 1, seed: int = 0, suites: tuple[str, ...] | None = None) -> RunResult:
    b = build(cfg, seed=seed)
    grid = make_grid(cfg.T, cfg.grid.N, cfg.grid.gamma_mesh)
    tables = kernel_tables(cfg.alpha, b.basis.lambdas, grid, threads=threads)
    mode = cfg.solver.mode
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always", RadiusExceeded)
        traj = solve_problem(b, grid, tables)
    radius_ok = not any(issubclass(w.category, RadiusExceeded) for w in caught)
    pr = b.problem
    tol = cfg.solver.tol
    rows: list[an.ReportRow] = []
    extra: dict[str, float] = dict(b.extra)
    fwd = None
    if mode != "forward":
        last = traj.iterations[-1].weighted_diff if traj.iterations else 0.0
        rows.append(_row("converged", last, tol))
        rows.append(_row("terminal_consistency", float(b.basis.norm(traj.states[-1] - b.f, cfg.regularity.nu)), max(tol, 1e-12 * max(1.0, float(np.max(np.abs(b.f)))))))
        if mode == "contraction" or (mode == "roundtrip" and b.nonlinearity.growth_class == "H3"):
            rows.append(_row("contraction_factor", traj.observed_factor, b.bundle.contraction_bound if not math.isnan(b.bundle.contraction_bound) else 1.0))
            if not math.isnan(b.bundle.R_hat):
                rows.append(_row("radius", traj.max_weighted_norm, b.bundle.R_hat))
            extra["radius_ok"] = float(radius_ok)
        if b.nonlinearity.is_zero:
            exact = b.setup.B(grid.nodes) * b.f
            scale = max(1.0, float(np.max(np.abs(exact))))
            rows.append(_row("linear_closed_form", float(np.max(np.abs(traj.states - exact))) / scale, 1e-10))
    if mode == "roundtrip":
        fwd = solve_ivp_forward(b.setup, grid, traj.states[0], b.nonlinearity, tables=tables)
        err = float(b.basis.norm(fwd.states[-1] - b.f, 0.0) / b.basis.norm(b.f, 0.0))
        rows.append(_row("roundtrip_error", err, 1e-3))
    suites = cfg.analysis.suites if suites is None else suites
    if mode != "forward":
        rows += _analysis_rows(b, traj, grid, tables, suites, seed)
    return RunResult(b, traj, rows, fwd, extra)


def _analysis_rows(b: Built, traj: Trajectory, grid, tables, suites, seed: int) -> list[an.ReportRow]:
    cfg = b.cfg
    pr = b.problem
    p = cfg.regularity
    a = cfg.alpha
    critical = b.nonlinearity.growth_class == "H3"
    rows: list[an.ReportRow] = []
    if "residual" in suites:
        d_alpha = reconstruct_derivatives(pr, traj, "alpha", tables)
        res = equation_residual(pr, traj, d_alpha, traj.norm_index)
        w = grid.nodes[1:] ** traj.weight_exponent
        rows.append(_row("equation_residual", float(np.max(w * res)), 10 * cfg.solver.tol))
    if "estimates" in suites:
        if critical:
            specs = an.critical_estimates(a, p)
        elif cfg.solver.mode == "path":
            specs = an.path_estimates(a, p)
        else:
            specs = an.lipschitz_estimates(a, p)
        env = an.calibrate_envelope(pr, grid, specs)
        rows += an.verify_estimate_suite(pr, traj, env, tables)
    if "blowup" in suites:
        e = a * p.vartheta if critical else a * (1 - p.theta)
        fit = an.fit_blowup_exponent(traj, p.nu)
        rows.append(_row("blowup_slope", -fit.slope, 1.15 * e))
        rows.append(_row("blowup_slope_sign", max(0.0, fit.slope), 0.0))
    if "holder" in suites:
        if critical:
            if p.eta is None:
                raise ConfigError("regularity.eta", "required for the holder suite in the critical case")
            g, eta = p.nu - p.eta, eta_cri(a, p.eta, p.vartheta)
        else:
            if p.nu_prime is None:
                raise ConfigError("regularity.nu_prime", "required for the holder suite")
            g, eta = p.nu - p.nu_prime, eta_glo(a, p.theta, p.nu_prime)
        fit = an.fit_holder_modulus(traj, g)
        rows.append(_row("holder_slope", fit.slope, 0.85 * eta, upper=False))
    if "stability" in suites:
        kidx = _data_index(cfg, critical)
        rep = an.stability_experiment(
            pr, lambda q: solve_problem(Built(cfg, b.basis, b.setup, q.f, b.nonlinearity, b.bundle), grid, tables),
            kidx, cfg.analysis.deltas, cfg.analysis.n_trials, seed, base=traj,
        )
        rows.append(_row("stability_spread", rep.spread, 2.0))
    return rows
