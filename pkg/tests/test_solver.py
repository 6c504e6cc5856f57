import math
import warnings

import numpy as np
import pytest

from fracterm.constants import RegularityParams
from fracterm.errors import DomainError, HypothesisError, NonConvergence, RadiusExceeded
from fracterm.mittag_leffler import ml_array
from fracterm.nonlinearity import ginzburg_landau, lipschitz_scaled, zero
from fracterm.operators import make_terminal_setup
from fracterm.quadrature import kernel_tables, make_grid
from fracterm.solver import (
    ProblemSpec,
    equation_residual,
    fixed_point_residual,
    reconstruct_derivatives,
    reconstruct_initial,
    solve_ivp_forward,
    solve_tvp_contraction,
    solve_tvp_path,
    solve_tvp_picard,
)
from fracterm.spectral_basis import dirichlet_1d

# 1 / E_{1.5,1}(-2^1.5), extended-precision series
U0_FIRST_MODE_T2 = -6.695058399748427

PIC = RegularityParams(nu=0.0, theta=0.8)


def first_mode(J):
    f = np.zeros(J)
    f[0] = 1.0
    return f


class TestLinear:
    def test_closed_form_one_iteration(self):
        setup = make_terminal_setup(1.5, 2.0, dirichlet_1d(math.pi, 4))
        grid = make_grid(2.0, 32)
        tr = solve_tvp_picard(ProblemSpec(setup, first_mode(4), zero(), PIC), grid)
        assert len(tr.iterations) == 1 and tr.converged
        assert tr.states[0, 0] == pytest.approx(U0_FIRST_MODE_T2, rel=1e-12)
        ref = ml_array(1.5, 1.0, -grid.nodes**1.5) / ml_array(1.5, 1.0, -(2.0**1.5))
        assert np.allclose(tr.states[:, 0], ref, rtol=1e-13, atol=1e-15)
        assert not np.any(tr.states[:, 1:])
        assert np.array_equal(tr.states[-1], first_mode(4))

    def test_wave_limit(self):
        b = dirichlet_1d(math.pi, 3)
        setup = make_terminal_setup(2.0, 1.0, b)
        grid = make_grid(1.0, 16, 1.0)
        f = np.array([1.0, -0.5, 0.25])
        tr = solve_tvp_path(ProblemSpec(setup, f, zero(), RegularityParams(nu=0.0, sigma=0.5, q=1.0)), grid)
        k = np.arange(1, 4)
        ref = np.cos(k[None, :] * grid.nodes[:, None]) / np.cos(k) * f
        assert np.allclose(tr.states, ref, atol=1e-12)


def _lip_problem(J=8, L=0.3, T=1.0, alpha=1.5):
    setup = make_terminal_setup(alpha, T, dirichlet_1d(math.pi, J))
    f = 1.0 / np.arange(1, J + 1) ** 2
    return ProblemSpec(setup, f, lipschitz_scaled(L), PIC)


def _shifted_exact(problem, t):
    # G = L u turns the equation into one with eigenvalues lambda - L
    kappa = problem.basis.lambdas - problem.nonlinearity.lipschitz
    a, T = problem.alpha, problem.T
    return ml_array(a, 1.0, -kappa[None, :] * t[:, None] ** a) / ml_array(a, 1.0, -kappa * T**a) * problem.f


class TestLipschitz:
    def test_first_order_convergence(self):
        p = _lip_problem()
        errs = []
        for N in (64, 128, 256):
            g = make_grid(1.0, N)
            tr = solve_tvp_picard(p, g, tol=1e-14)
            ex = _shifted_exact(p, g.nodes)
            errs.append(np.max(np.abs(tr.states - ex)) / np.max(np.abs(ex)))
        rates = [math.log2(a / b) for a, b in zip(errs, errs[1:])]
        assert all(0.9 < r < 1.1 for r in rates)
        assert errs[-1] < 1e-2

    def test_discrete_fixed_point(self):
        p = _lip_problem()
        g = make_grid(1.0, 64)
        kt = kernel_tables(1.5, p.basis.lambdas, g)
        tr = solve_tvp_picard(p, g, tol=1e-13, tables=kt)
        assert fixed_point_residual(p, tr, kt) <= 1e-12

    def test_ratios_monotone_and_small(self):
        p = _lip_problem(L=0.02)
        tr = solve_tvp_picard(p, make_grid(1.0, 64), tol=1e-14)
        d = [r.weighted_diff for r in tr.iterations]
        assert all(b < a for a, b in zip(d, d[1:]) if a > 1e-15)
        assert tr.observed_factor < 1

    def test_terminal_consistency(self):
        p = _lip_problem()
        tr = solve_tvp_picard(p, make_grid(1.0, 64), tol=1e-14)
        assert np.allclose(tr.states[-1], p.f, atol=1e-14)

    def test_roundtrip(self):
        p = _lip_problem()
        g = make_grid(1.0, 64)
        kt = kernel_tables(1.5, p.basis.lambdas, g)
        tr = solve_tvp_picard(p, g, tol=1e-14, tables=kt)
        u0 = reconstruct_initial(p, tr, kt)
        assert np.allclose(u0.coeffs, tr.states[0], atol=1e-13)
        fw = solve_ivp_forward(p.setup, g, u0, p.nonlinearity, tables=kt)
        assert p.basis.norm(fw.states[-1] - p.f, 0.0) <= 1e-12 * p.basis.norm(p.f, 0.0)

    def test_nonconvergence_carries_trajectory(self):
        p = _lip_problem()
        with pytest.raises(NonConvergence) as ei:
            solve_tvp_picard(p, make_grid(1.0, 32), tol=1e-14, max_iter=2)
        tr = ei.value.trajectory
        assert tr is not None and not tr.converged and len(tr.iterations) == 2

    def test_path_solver(self):
        p = _lip_problem()
        p = ProblemSpec(p.setup, p.f, p.nonlinearity, RegularityParams(nu=0.0, theta=0.8, sigma=0.5, q=2.0))
        g = make_grid(1.0, 64)
        a = solve_tvp_path(p, g, tol=1e-13)
        b = solve_tvp_picard(p, g, tol=1e-13)
        assert np.allclose(a.states, b.states, atol=1e-11)


class TestDerivatives:
    def test_first_linear_exact(self):
        setup = make_terminal_setup(1.5, 1.0, dirichlet_1d(math.pi, 4))
        p = ProblemSpec(setup, np.ones(4), zero(), PIC)
        g = make_grid(1.0, 16)
        tr = solve_tvp_picard(p, g)
        d1 = reconstruct_derivatives(p, tr, "first")
        assert np.allclose(d1, setup.D1(g.nodes[1:]), rtol=1e-14)
        da = reconstruct_derivatives(p, tr, "alpha")
        assert np.allclose(da, -setup.lambdas * tr.states[1:], rtol=1e-13)

    def test_against_shifted_oracle(self):
        p = _lip_problem(J=4)
        g = make_grid(1.0, 256)
        tr = solve_tvp_picard(p, g, tol=1e-14)
        kappa = p.basis.lambdas - p.nonlinearity.lipschitz
        t = g.nodes[1:]
        denom = ml_array(1.5, 1.0, -kappa * 1.0)
        ref = -kappa * t[:, None] ** 0.5 * ml_array(1.5, 1.5, -kappa * t[:, None] ** 1.5) / denom * p.f
        d1 = reconstruct_derivatives(p, tr, "first")
        mid = slice(len(t) // 4, None)
        assert np.max(np.abs(d1[mid] - ref[mid])) <= 2e-2 * np.max(np.abs(ref))
        da = reconstruct_derivatives(p, tr, "alpha")
        exact = _shifted_exact(p, t)
        assert np.max(np.abs(da - (-kappa * exact))) <= 2e-2 * np.max(np.abs(kappa * exact))

    def test_bad_order(self):
        p = _lip_problem()
        tr = solve_tvp_picard(p, make_grid(1.0, 8))
        with pytest.raises(DomainError):
            reconstruct_derivatives(p, tr, "second")


class TestResidual:
    def test_converged_is_small(self):
        p = _lip_problem()
        g = make_grid(1.0, 64)
        tr = solve_tvp_picard(p, g, tol=1e-14)
        r = equation_residual(p, tr, reconstruct_derivatives(p, tr, "alpha"))
        assert np.max(r) <= 1e-10

    def test_single_iteration_negative_control(self):
        p = _lip_problem()
        g = make_grid(1.0, 64)
        with pytest.raises(NonConvergence) as ei:
            solve_tvp_picard(p, g, tol=1e-14, max_iter=1)
        tr = ei.value.trajectory
        r = equation_residual(p, tr, reconstruct_derivatives(p, tr, "alpha"))
        assert np.max(r) > 1e-3


class TestForward:
    def test_linear(self):
        setup = make_terminal_setup(1.5, 1.0, dirichlet_1d(math.pi, 3))
        g = make_grid(1.0, 32)
        fw = solve_ivp_forward(setup, g, [1.0, 0.0, 2.0], zero())
        ref = ml_array(1.5, 1.0, -setup.lambdas * g.nodes[:, None] ** 1.5) * [1.0, 0.0, 2.0]
        assert np.allclose(fw.states, ref, atol=1e-14)

    def test_shifted_convergence(self):
        setup = make_terminal_setup(1.5, 1.0, dirichlet_1d(math.pi, 2))
        L = 0.5
        errs = []
        for N in (64, 128, 256):
            g = make_grid(1.0, N)
            fw = solve_ivp_forward(setup, g, [1.0, 1.0], lipschitz_scaled(L))
            ref = ml_array(1.5, 1.0, -(setup.lambdas - L) * g.nodes[:, None] ** 1.5)
            errs.append(np.max(np.abs(fw.states - ref)))
        assert errs[0] > errs[1] > errs[2]
        assert math.log2(errs[1] / errs[2]) > 0.8

    def test_shape(self):
        setup = make_terminal_setup(1.5, 1.0, dirichlet_1d(math.pi, 2))
        with pytest.raises(DomainError):
            solve_ivp_forward(setup, make_grid(1.0, 4), [1.0], zero())


class TestCritical:
    def _problem(self, scale):
        b = dirichlet_1d(math.pi, 8)
        setup = make_terminal_setup(1.5, 1.0, b)
        reg = RegularityParams(nu=0.25, sigma=-0.25, vartheta=0.6, zeta=-0.6)
        f = scale / np.arange(1, 9) ** 2
        return ProblemSpec(setup, f, ginzburg_landau(1.0, 0.5, b=1.0), reg)

    def test_converges_small_data(self):
        p = self._problem(0.1)
        tr = solve_tvp_contraction(p, make_grid(1.0, 64), tol=1e-12)
        assert tr.converged and tr.observed_factor < 0.75
        assert np.allclose(tr.states[-1], p.f, atol=1e-12)

    def test_radius_warning(self):
        p = self._problem(0.1)
        with pytest.warns(RadiusExceeded):
            solve_tvp_contraction(p, make_grid(1.0, 32), tol=1e-12, radius=1e-6)

    def test_no_warning_inside(self):
        p = self._problem(0.1)
        with warnings.catch_warnings():
            warnings.simplefilter("error", RadiusExceeded)
            solve_tvp_contraction(p, make_grid(1.0, 32), tol=1e-12, radius=1e6)

    def test_hypotheses(self):
        p = self._problem(0.1)
        with pytest.raises(HypothesisError):
            solve_tvp_picard(ProblemSpec(p.setup, p.f, p.nonlinearity, PIC), make_grid(1.0, 8))
        bad = ProblemSpec(p.setup, p.f, p.nonlinearity, RegularityParams(nu=0.25, sigma=-0.25, vartheta=0.4))
        with pytest.raises(HypothesisError):
            solve_tvp_contraction(bad, make_grid(1.0, 8))


class TestValidation:
    def test_theta_required(self):
        p = _lip_problem()
        with pytest.raises(HypothesisError):
            solve_tvp_picard(ProblemSpec(p.setup, p.f, p.nonlinearity), make_grid(1.0, 8))

    def test_table_mismatch(self):
        p = _lip_problem()
        kt = kernel_tables(1.5, p.basis.lambdas, make_grid(1.0, 16))
        with pytest.raises(DomainError):
            solve_tvp_picard(p, make_grid(1.0, 8), tables=kt)

    def test_f_shape(self):
        p = _lip_problem()
        with pytest.raises(DomainError):
            ProblemSpec(p.setup, np.ones(3), zero())

    def test_tol(self):
        with pytest.raises(DomainError):
            solve_tvp_picard(_lip_problem(), make_grid(1.0, 8), tol=0.0)
