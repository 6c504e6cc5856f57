import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.special import rgamma

from fracterm.errors import AccuracyError, DomainError
from fracterm.mittag_leffler import (
    ASYMPTOTIC_R0,
    TAYLOR_R0,
    _asymptotic,
    _hankel,
    _taylor,
    derivative_identity_residuals,
    fit_bound_constants,
    ml,
    ml_array,
    ml_kernel,
    ml_with_error,
    ratio_bound_check,
    terminal_lower_constant,
)

from oracles import ml_laplace, ml_series

# frozen from the extended-precision series (cross-checked by Talbot inversion)
E_15_1_AT_M2 = 0.02943068560282647
P_15_LAM4_T05 = 0.404217408677648


class TestEvaluation:
    def test_exponential(self):
        assert ml(1.0, 1.0, -1.0) == pytest.approx(0.36787944117144233, rel=1e-15)

    def test_cosine_zero(self):
        assert abs(ml_array(2.0, 1.0, -(math.pi / 2) ** 2)) <= 1e-12

    def test_value_at_zero(self):
        assert ml(1.5, 1.5, 0.0) == pytest.approx(1.1283791670955126, rel=1e-15)

    def test_series_oracle(self):
        assert ml(1.5, 1.0, -2.0) == pytest.approx(E_15_1_AT_M2, rel=1e-13)
        assert ml_series(1.5, 1.0, -2.0) == pytest.approx(ml_laplace(1.5, 1.0, -2.0), rel=1e-13)

    @pytest.mark.parametrize("alpha,beta", [(1.5, 1.0), (1.5, 1.5), (1.2, 0.2), (1.9, 1.9), (0.7, 1.0), (1.05, 2.5)])
    @pytest.mark.parametrize("r0", [0.5, 3.0, 10.0, 60.0, 120.0])
    def test_against_series(self, alpha, beta, r0):
        z = -(r0**alpha)
        ref = ml_series(alpha, beta, z)
        v = ml_with_error(alpha, beta, z)
        assert abs(v.value - ref) <= 1e-12 * abs(ref) + 1e-16
        # the estimate covers the actual error
        assert abs(v.value - ref) <= max(10 * v.error, 1e-15 * abs(ref))

    def test_array_matches_scalar(self):
        z = -np.logspace(-3, 4, 40)
        vals = ml_array(1.5, 1.0, z)
        assert np.allclose(vals, [ml_with_error(1.5, 1.0, x).value for x in z], rtol=1e-14, atol=0)

    def test_array_shape(self):
        z = -np.ones((3, 4))
        assert ml_array(1.5, 1.0, z).shape == (3, 4)

    @pytest.mark.parametrize("bad", [(1.5, 1.0, 0.5), (2.5, 1.0, -1.0), (1.5, 0.0, -1.0), (0.0, 1.0, -1.0), (1.5, 1.0, math.nan)])
    def test_domain(self, bad):
        with pytest.raises(DomainError):
            ml_with_error(*bad)

    def test_certification_failure(self, monkeypatch):
        import fracterm.mittag_leffler as mlm

        monkeypatch.setattr(mlm, "ml_with_error", lambda a, b, z: mlm.MLValue(1.0, 1.0, "taylor"))
        with pytest.raises(AccuracyError):
            mlm.ml(1.5, 1.0, -1.0)

    def test_branch_labels(self):
        assert ml_with_error(1.5, 1.0, -1.0).branch == "taylor"
        assert ml_with_error(1.5, 1.0, -100.0).branch == "integral"
        assert ml_with_error(1.5, 1.0, -1e4).branch == "asymptotic"


class TestKernel:
    def test_sine_identity(self):
        assert ml_kernel(2.0, 1.0, math.pi / 2) == pytest.approx(1.0, abs=1e-14)

    def test_oracle(self):
        assert ml_kernel(1.5, 4.0, 0.5) == pytest.approx(P_15_LAM4_T05, rel=1e-13)

    def test_small_time(self):
        t = 1e-8
        assert ml_kernel(1.9, 1.0, t) == pytest.approx(t**0.9 / math.gamma(1.9), rel=1e-6)


class TestIdentities:
    t = np.linspace(0.0, 50.0, 500)

    def test_exp(self):
        e = np.exp(-self.t)
        assert np.max(np.abs(ml_array(1.0, 1.0, -self.t) - e) / e) <= 1e-10

    def test_cos(self):
        c = np.cos(self.t)
        err = np.abs(ml_array(2.0, 1.0, -self.t**2) - c)
        assert np.all(err <= 1e-10 * np.maximum(np.abs(c), 1.0))

    def test_sin(self):
        s = np.sin(self.t)
        err = np.abs(self.t * ml_array(2.0, 2.0, -self.t**2) - s)
        assert np.all(err <= 1e-10 * np.maximum(np.abs(s), 1.0))

    @given(st.floats(1.01, 1.99), st.floats(0.05, 3.0))
    @settings(max_examples=40, deadline=None)
    def test_value_at_zero(self, alpha, beta):
        assert ml_array(alpha, beta, 0.0) == pytest.approx(float(rgamma(beta)), rel=1e-14)


class TestBranchAgreement:
    """Neighbouring branches agree on the overlap of their natural ranges."""

    @given(st.floats(1.02, 1.98), st.floats(0.1, 3.0), st.floats(0.0, 1.0))
    @settings(max_examples=100, deadline=None)
    def test_taylor_vs_integral(self, alpha, beta, u):
        r0 = 0.75 * TAYLOR_R0 + u * 0.25 * TAYLOR_R0
        z = np.array([-(r0**alpha)])
        a = _taylor(alpha, beta, z)[0][0]
        b = _hankel(alpha, beta, z)[0]
        assert abs(a - b) <= 1e-10 * max(abs(b), 1e-3)

    @given(st.floats(1.02, 1.98), st.floats(0.1, 3.0), st.floats(0.0, 1.0))
    @settings(max_examples=100, deadline=None)
    def test_integral_vs_asymptotic(self, alpha, beta, u):
        r0 = ASYMPTOTIC_R0 * (1.0 + 0.5 * u)
        z = np.array([-(r0**alpha)])
        a = _asymptotic(alpha, beta, z)[0][0]
        b = _hankel(alpha, beta, z)[0]
        assert abs(a - b) <= 1e-10 * max(abs(b), 1e-12)


class TestDerivativeIdentities:
    def test_example(self):
        r = derivative_identity_residuals(1.5, 1.0, 1.0, 1e-5)
        assert max(r.values()) <= 1e-6

    def test_wave_case(self):
        r = derivative_identity_residuals(2.0, 1.0, 1.0, 1e-5)
        assert r["a_first"] <= 1e-6

    def test_stiff(self):
        r = derivative_identity_residuals(1.1, 100.0, 0.3, 1e-6)
        assert max(r.values()) <= 1e-5

    def test_domain(self):
        with pytest.raises(DomainError):
            derivative_identity_residuals(0.9, 1.0, 1.0)


class TestBoundConstants:
    def test_exponential_case(self):
        bc = fit_bound_constants(1.0, 1.0, 50.0)
        assert bc.M_alpha == pytest.approx(1.0, rel=1e-12)
        assert bc.m_alpha == pytest.approx(51.0 * math.exp(-50.0), rel=1e-6)

    def test_no_flag_before_first_zero(self):
        bc = fit_bound_constants(1.5, 1.0, 1.0)
        assert 0 < bc.m_alpha <= bc.M_alpha
        assert not bc.lower_bound_violated

    def test_alpha_alpha_flag_is_structural(self):
        # 1/Gamma(beta - alpha) = 0, so (1+t)|E| decays to zero whatever the range
        assert fit_bound_constants(1.5, 1.5, 4.0).lower_bound_violated

    def test_alpha_alpha_changes_sign(self):
        # E_{a,a}(-t) ~ -t^-2 / Gamma(-a) for large t, so a long scan must flag
        bc = fit_bound_constants(1.5, 1.5, 1e4)
        assert 0 < bc.m_alpha <= bc.M_alpha
        assert bc.lower_bound_violated
        from scipy.optimize import brentq

        z0 = brentq(lambda t: ml_array(1.5, 1.5, -t), 4.0, 6.0)
        assert z0 == pytest.approx(5.075430029543829, rel=1e-10)

    def test_sign_change_flag(self):
        bc = fit_bound_constants(1.95, 1.0, 100.0)
        assert bc.lower_bound_violated
        from scipy.optimize import brentq

        z0 = brentq(lambda t: ml_array(1.95, 1.0, -t), 1.0, 4.0)
        assert z0 < 100.0
        # the minimiser of (1+t)|E| sits on a zero of E
        assert abs(ml_array(1.95, 1.0, -bc.argmin_t)) < 1e-6

    def test_envelope_on_grid(self):
        bc = fit_bound_constants(1.5, 1.5, 1e3)
        t = np.logspace(-4, 3, 300)
        g = (1 + t) * np.abs(ml_array(1.5, 1.5, -t))
        assert np.all(g <= bc.M_alpha * (1 + 1e-12))
        assert np.all(g >= bc.m_alpha * (1 - 1e-12))

    def test_alpha_alpha_decay(self):
        t = np.logspace(-3, 4, 400)
        for a in (1.2, 1.5, 1.8):
            v = np.abs(ml_array(a, a, -t)) * (1 + t**2)
            assert np.max(v) < 1e3


class TestRatioBounds:
    def test_fitted_constants_hold(self):
        lam = (np.arange(1, 33) ** 2).astype(float)
        T = 1.0
        x = lam.max() * T**1.5
        M = max(fit_bound_constants(1.5, 1.0, x).M_alpha, fit_bound_constants(1.5, 1.5, x).M_alpha)
        m = terminal_lower_constant(1.5, lam, T)
        r = ratio_bound_check(1.5, lam, T, 0.9, np.logspace(-4, 0, 50), m, M)
        assert r.ok

    def test_at_terminal_time(self):
        lam = np.array([1.0, 4.0])
        r = ratio_bound_check(1.5, lam, 1.0, 0.5, [1.0], 0.1, 2.0)
        assert np.allclose(r.lhs_b, 1.0)
        assert r.violations_b == 0
