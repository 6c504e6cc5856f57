import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from fracterm.analysis import (
    _holder_sup,
    calibrate_envelope,
    critical_estimates,
    fit_blowup_exponent,
    fit_holder_modulus,
    fit_power_law,
    fitted_ratio,
    holder_constant,
    lipschitz_estimates,
    path_estimates,
    picard_difference_bound,
    stability_experiment,
    verify_estimate_suite,
)
from fracterm.constants import RegularityParams, compute_constants
from fracterm.errors import DegenerateWindow, DomainError, HypothesisError
from fracterm.nonlinearity import lipschitz_scaled, zero
from fracterm.operators import kernel_constants, make_terminal_setup
from fracterm.quadrature import kernel_tables, make_grid
from fracterm.solver import IterationRecord, ProblemSpec, Trajectory, solve_tvp_picard
from fracterm.spectral_basis import dirichlet_1d


def synthetic(profile, N=256, J=2):
    """Trajectory whose first mode follows profile(t)."""
    g = make_grid(1.0, N)
    b = dirichlet_1d(math.pi, J)
    states = np.zeros((N + 1, J))
    states[:, 0] = profile(g.nodes)
    return Trajectory(grid=g, basis=b, states=states, mode="synthetic", alpha=1.5)


class TestPowerLaw:
    @given(st.floats(-2, 2), st.floats(0.1, 10))
    @settings(max_examples=50, deadline=None)
    def test_exact(self, p, c):
        x = np.logspace(-3, 0, 40)
        fit = fit_power_law(x, c * x**p)
        assert fit.slope == pytest.approx(p, abs=1e-10)
        assert math.exp(fit.intercept) == pytest.approx(c, rel=1e-9)

    def test_example(self):
        x = np.logspace(-4, 0, 30)
        assert fit_power_law(x, x**-0.3).slope == pytest.approx(-0.3, abs=1e-12)

    def test_constant(self):
        fit = fit_power_law(np.linspace(1, 2, 10), np.full(10, 3.0))
        assert abs(fit.slope) < 1e-12 and fit.r_squared == 1.0

    def test_too_few(self):
        with pytest.raises(DegenerateWindow):
            fit_power_law(np.arange(1, 5.0), np.arange(1, 5.0))

    def test_non_positive(self):
        with pytest.raises(DegenerateWindow):
            fit_power_law(np.arange(10.0), np.ones(10))


class TestTrajectoryFits:
    def test_blowup(self):
        tr = synthetic(lambda t: np.where(t > 0, t, 1.0) ** -0.3)
        assert fit_blowup_exponent(tr, 0.0).slope == pytest.approx(-0.3, abs=1e-10)

    def test_holder_exact(self):
        tr = synthetic(lambda t: t**0.4)
        assert fit_holder_modulus(tr, 0.0).slope == pytest.approx(0.4, abs=1e-10)
        # |t^a - s^a| <= |t - s|^a with equality at s = 0
        assert _holder_sup(tr.basis, tr.times, tr.states, 0.0, 0.4) == pytest.approx(1.0, rel=1e-12)

    def test_holder_adjacent(self):
        tr = synthetic(lambda t: t, N=64)
        fit = fit_holder_modulus(tr, 0.0, method="adjacent")
        assert fit.slope == pytest.approx(1.0, abs=1e-10)
        assert holder_constant(tr, 0.0, 1.0) == pytest.approx(1.0, rel=1e-10)

    def test_bad_method(self):
        with pytest.raises(DomainError):
            fit_holder_modulus(synthetic(lambda t: t), 0.0, method="nope")

    def test_fitted_ratio(self):
        g = make_grid(1.0, 4)
        recs = tuple(IterationRecord(k, 0.1**k, 0.1) for k in range(1, 9))
        tr = Trajectory(grid=g, basis=dirichlet_1d(math.pi, 1), states=np.zeros((5, 1)), mode="picard", alpha=1.5, iterations=recs)
        assert fitted_ratio(tr) == pytest.approx(0.1, rel=1e-12)
        assert math.isnan(fitted_ratio(tr, start=8))


def _problem(L=0.0, J=16, f=None):
    setup = make_terminal_setup(1.5, 1.0, dirichlet_1d(math.pi, J))
    reg = RegularityParams(nu=0.0, theta=0.8, theta_prime=0.7, nu_prime=0.6, nu1=0.1, nu_alpha=-0.4)
    if f is None:
        f = np.random.default_rng(0).standard_normal(J) * np.arange(1, J + 1) ** -3.0
    nl = zero() if L == 0 else lipschitz_scaled(L)
    return ProblemSpec(setup, f, nl, reg)


class TestEstimates:
    def test_linear_data_within_envelope(self):
        p = _problem()
        g = make_grid(1.0, 128)
        specs = lipschitz_estimates(1.5, p.regularity)
        env = calibrate_envelope(p, g, specs)
        tr = solve_tvp_picard(p, g)
        rows = verify_estimate_suite(p, tr, env)
        assert {r.estimate_id for r in rows} == {"lipschitz_main", "lipschitz_a", "lipschitz_b", "lipschitz_c", "lipschitz_d"}
        assert all(r.passed and r.ratio <= 1 + 1e-12 for r in rows)

    def test_single_mode_attains_envelope(self):
        p = _problem()
        g = make_grid(1.0, 64)
        specs = lipschitz_estimates(1.5, p.regularity)[:1]
        env = calibrate_envelope(p, g, specs)
        ratios = []
        for j in range(16):
            f = np.zeros(16)
            f[j] = 1.0
            q = p.with_f(f)
            ratios.append(verify_estimate_suite(q, solve_tvp_picard(q, g), env)[0].ratio)
        assert max(ratios) == pytest.approx(1.0, rel=1e-12)

    def test_inadmissible_theta(self):
        with pytest.raises(HypothesisError):
            lipschitz_estimates(1.5, RegularityParams(theta=0.3))

    def test_other_suites(self):
        assert path_estimates(1.5, RegularityParams(theta=0.8, sigma=0.5, q=2.0))[0].kind == "path"
        ids = [s.id for s in critical_estimates(1.5, RegularityParams(nu=0.25, vartheta=0.6, vartheta_prime=0.7, eta=0.9))]
        assert ids == ["critical_main", "critical_a", "critical_b"]

    def test_grid_mismatch(self):
        p = _problem()
        env = calibrate_envelope(p, make_grid(1.0, 32), lipschitz_estimates(1.5, p.regularity))
        with pytest.raises(DomainError):
            verify_estimate_suite(p, solve_tvp_picard(p, make_grid(1.0, 16)), env)

    def test_holder_seminorm_stable_under_refinement(self):
        p = _problem(L=0.01)
        vals = []
        for N in (128, 256, 512):
            tr = solve_tvp_picard(p, make_grid(1.0, N), tol=1e-13)
            vals.append(_holder_sup(p.basis, tr.times, tr.states, -0.6, 0.45))
        for a, b in zip(vals, vals[1:]):
            assert abs(b / a - 1) <= 0.2


class TestPicardBound:
    def test_bound_holds(self):
        p = _problem(L=0.0)
        kc = kernel_constants(p.setup)
        b0 = compute_constants(1.5, 1.0, 1.0, p.regularity, kc.m_alpha, kc.M_alpha)
        L1 = 0.5 / b0.scrM1
        q = ProblemSpec(p.setup, p.f, lipschitz_scaled(L1), p.regularity)
        bundle = compute_constants(1.5, 1.0, 1.0, q.regularity, kc.m_alpha, kc.M_alpha, L1=L1)
        tr = solve_tvp_picard(q, make_grid(1.0, 128), tol=1e-14)
        rows = picard_difference_bound(tr, bundle, float(q.basis.norm(q.f, 0.8)))
        assert rows and all(r.ok for r in rows)

    def test_needs_N1(self):
        p = _problem()
        bundle = compute_constants(1.5, 1.0, 1.0, p.regularity, 1.0, 1.0, L1=10.0)
        with pytest.raises(HypothesisError):
            picard_difference_bound(solve_tvp_picard(p, make_grid(1.0, 8)), bundle, 1.0)


class TestStability:
    def test_zero_delta(self):
        p = _problem(L=0.1)
        g = make_grid(1.0, 32)
        kt = kernel_tables(1.5, p.basis.lambdas, g)
        rep = stability_experiment(p, lambda q: solve_tvp_picard(q, g, tol=1e-14, tables=kt), 0.8, deltas=(0.0,))
        assert rep.rows[0].ratio == 0.0 and rep.rows[0].diff_norm == 0.0

    def test_linear_delta_independent(self):
        p = _problem()
        g = make_grid(1.0, 32)
        rep = stability_experiment(p, lambda q: solve_tvp_picard(q, g), 0.8, n_trials=3, seed=4)
        for trial in range(3):
            r = [x.ratio for x in rep.rows if x.trial == trial]
            assert max(r) / min(r) == pytest.approx(1.0, abs=1e-6)
        assert all(r.ratio > 0 for r in rep.rows)

    def test_seeded(self):
        p = _problem(L=0.1)
        g = make_grid(1.0, 32)
        run = lambda: stability_experiment(p, lambda q: solve_tvp_picard(q, g, tol=1e-14), 0.8, seed=9)
        assert [r.ratio for r in run().rows] == [r.ratio for r in run().rows]
