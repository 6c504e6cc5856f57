r"""Two-parameter Mittag-Leffler function on the non-positive real axis.

.. math::

    E_{\alpha,\beta}(z) = \sum_{k=0}^{\infty} \frac{z^k}{\Gamma(\alpha k + \beta)},
    \qquad z \le 0.

Evaluation is split by :math:`r_0 = |z|^{1/\alpha}`:

* ``r0 <= TAYLOR_R0``: power series with compensated summation.
* ``TAYLOR_R0 < r0 <= ASYMPTOTIC_R0``: the Laplace inversion contour is
  collapsed onto the negative real axis.  What remains is a real integral,
  evaluated by double-exponential quadrature, plus the residues at the two
  poles :math:`r_0 e^{\pm i\pi/\alpha}` (present when :math:`\alpha > 1`).
* ``r0 > ASYMPTOTIC_R0``: algebraic asymptotic series truncated at its
  smallest term, plus the same pole residues.

The plain power series loses about :math:`r_0/\ln 10` digits to cancellation,
so it is only used where that loss is harmless.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache

import numpy as np
from numpy.typing import ArrayLike, NDArray
from scipy import optimize
from scipy.special import gammaln, rgamma, roots_jacobi

from .errors import AccuracyError, DomainError

ML_RTOL = 1e-12
TAYLOR_R0 = 4.0
ASYMPTOTIC_R0 = 50.0
DE_STEP = 1.0 / 12.0
_EPS = np.finfo(float).eps
_CHUNK = 4096


@dataclass(frozen=True)
class MLParams:
    """Validated (alpha, beta) pair."""

    alpha: float
    beta: float

    def __post_init__(self) -> None:
        _check_params(self.alpha, self.beta)


@dataclass(frozen=True)
class MLValue:
    """Certified value with its error estimate and the branch that produced it."""

    value: float
    error: float
    branch: str


@dataclass(frozen=True)
class MLBoundConstants:
    """Fitted constants of m/(1+t) <= |E_{alpha,beta}(-t)| <= M/(1+t)."""

    alpha: float
    beta: float
    m_alpha: float
    M_alpha: float
    scan_range: tuple[float, float]
    lower_bound_violated: bool
    argmin_t: float
    argmax_t: float


def _check_params(alpha: float, beta: float) -> None:
    if not (0.0 < alpha <= 2.0) or not math.isfinite(alpha):
        raise DomainError(f"alpha must lie in (0, 2], got {alpha}")
    if not (beta > 0.0) or not math.isfinite(beta):
        raise DomainError(f"beta must be positive, got {beta}")


def _sinpi(x: float) -> float:
    # exact zero at integers so identities like E_{2,1} stay clean
    if float(x).is_integer():
        return 0.0
    return math.sin(math.pi * x)


# ---------------------------------------------------------------------------
# branch kernels (vectorised, z <= 0, no validation)
# ---------------------------------------------------------------------------


def _taylor(alpha: float, beta: float, z: NDArray) -> tuple[NDArray, NDArray]:
    """Power series; returns (value, sum of |terms|)."""
    zmax = float(np.max(np.abs(z))) if z.size else 0.0
    # find K so the envelope zmax^k / Gamma(alpha k + beta) is negligible past it
    floor = math.log(1e-20 * min(1.0, abs(float(rgamma(beta))) or 1.0))
    k = 0
    logz = math.log(zmax) if zmax > 0 else -np.inf
    while True:
        k += 1
        env = k * logz - gammaln(alpha * k + beta)
        if k > 3 and env < floor and alpha * k + beta > 2.0:
            break
        if k > 5000:
            break
    K = k
    coef = rgamma(alpha * np.arange(K + 1) + beta)
    s = np.zeros_like(z)
    c = np.zeros_like(z)
    mag = np.zeros_like(z)
    p = np.ones_like(z)
    for kk in range(K + 1):
        term = p * coef[kk]
        tsum = s + term
        big = np.abs(s) >= np.abs(term)
        c += np.where(big, (s - tsum) + term, (term - tsum) + s)
        s = tsum
        mag += np.abs(term)
        p = p * z
    return s + c, mag


def _de_nodes(h: float) -> tuple[NDArray, NDArray]:
    """tanh-sinh nodes on [0, 1] followed by exp-sinh nodes on [1, inf)."""
    n1 = int(round(4.5 / h))
    u = h * np.arange(-n1, n1 + 1)
    s = 0.5 * np.pi * np.sinh(u)
    x1 = 1.0 / (1.0 + np.exp(-2.0 * s))
    w1 = h * 0.25 * np.pi * np.cosh(u) / np.cosh(s) ** 2
    v = h * np.arange(-n1, int(round(3.0 / h)) + 1)
    y = np.exp(0.5 * np.pi * np.sinh(v))
    w2 = h * 0.5 * np.pi * np.cosh(v) * y
    x = np.concatenate([x1, 1.0 + y])
    w = np.concatenate([w1, w2])
    keep = (w > 1e-300) & (x > 0.0) & (x < 1e3)
    return x[keep], w[keep]


def _hankel_weights(alpha: float, beta: float, h: float) -> tuple[NDArray, NDArray]:
    x, w = _de_nodes(h)
    xa = x**alpha
    q = xa * xa + 2.0 * xa * math.cos(math.pi * alpha) + 1.0
    num = xa * _sinpi(beta) - _sinpi(alpha - beta)
    return x, w * x ** (alpha - beta) * num / q


def _residues(alpha: float, beta: float, r0: NDArray) -> NDArray:
    """Contribution of the poles r0 exp(+-i pi/alpha); zero for alpha <= 1."""
    if alpha <= 1.0:
        return np.zeros_like(r0)
    phi = math.pi / alpha
    return (2.0 / alpha) * r0 ** (1.0 - beta) * np.exp(r0 * math.cos(phi)) * np.cos(
        (1.0 - beta) * phi + r0 * math.sin(phi)
    )


def _residue_scale(alpha: float, beta: float, r0: float) -> float:
    """Amplitude of the pole terms times the growth of their phase and modulus
    errors, which are of order r0 * eps in absolute terms."""
    if alpha <= 1.0:
        return 0.0
    amp = (2.0 / alpha) * r0 ** (1.0 - beta) * math.exp(r0 * math.cos(math.pi / alpha))
    return amp * (1.0 + r0)


def _hankel(alpha: float, beta: float, z: NDArray, h: float = DE_STEP) -> NDArray:
    """Collapsed-contour integral plus pole residues.

    The integrand carries x^(alpha-beta) at the origin; for beta > alpha + 1/2
    the truncated quadrature tail is not negligible, so the recurrence
    E_{a,b}(z) = (E_{a,b-a}(z) - 1/Gamma(b-a)) / z lowers beta first.
    """
    if beta > alpha + 0.5:
        inner = _hankel(alpha, beta - alpha, z, h)
        return (inner - rgamma(beta - alpha)) / z
    r0 = (-z) ** (1.0 / alpha)
    x, c = _hankel_weights(alpha, beta, h)
    out = np.empty_like(z)
    for i in range(0, z.size, _CHUNK):
        rr = r0[i : i + _CHUNK]
        out[i : i + _CHUNK] = np.exp(-np.outer(rr, x)) @ c
    return r0 ** (1.0 - beta) / math.pi * out + _residues(alpha, beta, r0)


def _rgamma_shifted(alpha: float, beta: float, k: int) -> float:
    """1/Gamma(beta - alpha k) with the argument formed exactly.

    Near a pole the rounding of ``beta - alpha*k`` would dominate, so the
    distance to the nearest non-positive integer is taken in exact arithmetic
    and the reflection formula is used.
    """
    x = Fraction(beta) - Fraction(alpha) * k
    n = round(x)
    d = float(x - n)
    if n > 0 or abs(d) > 1e-3:
        return float(rgamma(float(x)))
    # 1/Gamma(x) = Gamma(1 - x) sin(pi x) / pi, sin(pi(n + d)) = (-1)^n sin(pi d)
    return float((-1.0) ** n * math.sin(math.pi * d) * math.gamma(1.0 - float(x)) / math.pi)


def _asymptotic(alpha: float, beta: float, z: NDArray) -> tuple[NDArray, NDArray]:
    """Algebraic series truncated at the smallest term; returns (value, tail)."""
    t = -z
    r0 = t ** (1.0 / alpha)
    logt = np.log(t)
    s = np.zeros_like(t)
    tail = np.zeros_like(t)
    active = np.ones(t.shape, dtype=bool)
    prev = np.full(t.shape, np.inf)
    kmax = int(min(400, math.ceil(float(np.max(r0)) / alpha) + 2))
    for k in range(1, kmax + 1):
        arg = alpha * k + 1.0 - beta
        term = (-1.0) ** (k + 1) * np.exp(-k * logt) * _rgamma_shifted(alpha, beta, k)
        if arg > 1.0:
            env = np.exp(gammaln(arg) - k * logt) / math.pi
            rising = env > prev
            small = env < 1e-17 * np.abs(s)
            stop = active & (rising | small)
            tail = np.where(stop, env, tail)
            active &= ~stop
            prev = np.where(active, env, prev)
        s = s + np.where(active, term, 0.0)
        if not active.any():
            break
    tail = np.where(active, prev, tail)
    return s + _residues(alpha, beta, r0), tail


def _alpha_one(beta: float, z: NDArray) -> NDArray:
    if beta == 1.0:
        return np.exp(z)
    t = -z
    out = np.empty_like(z)
    lo = t <= TAYLOR_R0
    hi = t > ASYMPTOTIC_R0
    mid = ~(lo | hi)
    if lo.any():
        out[lo] = _taylor(1.0, beta, z[lo])[0]
    if hi.any():
        out[hi] = _asymptotic(1.0, beta, z[hi])[0]
    if mid.any():
        zm = z[mid]
        if float(beta).is_integer():
            n = int(beta)
            poly = sum(zm**k / math.factorial(k) for k in range(n - 1))
            out[mid] = zm ** (1 - n) * (np.exp(zm) - poly)
        elif beta > 1.0:
            out[mid] = _euler_integral(beta, zm)
        else:
            out[mid] = rgamma(beta) + zm * _euler_integral(beta + 1.0, zm)
    return out


def _euler_integral(beta: float, z: NDArray) -> NDArray:
    """E_{1,beta}(z) = int_0^1 exp(z x)(1-x)^(beta-2) dx / Gamma(beta-1), beta > 1."""
    h = DE_STEP / 2
    n = int(round(4.5 / h))
    u = h * np.arange(-n, n + 1)
    s = 0.5 * np.pi * np.sinh(u)
    x = 1.0 / (1.0 + np.exp(-2.0 * s))
    one_minus = 1.0 / (1.0 + np.exp(2.0 * s))
    w = h * 0.25 * np.pi * np.cosh(u) / np.cosh(s) ** 2
    keep = w > 1e-300
    x, one_minus, w = x[keep], one_minus[keep], w[keep]
    c = w * one_minus ** (beta - 2.0)
    return (np.exp(np.outer(z, x)) @ c) * rgamma(beta - 1.0)


# ---------------------------------------------------------------------------
# public evaluation
# ---------------------------------------------------------------------------


def ml_array(alpha: float, beta: float, z: ArrayLike) -> NDArray:
    """Vectorised E_{alpha,beta}(z) for z <= 0 (no certification).

    Raises
    ------
    DomainError
        For parameters outside alpha in (0, 2], beta > 0, or any z > 0.
    """
    _check_params(alpha, beta)
    z = np.asarray(z, dtype=float)
    shape = z.shape
    z = z.ravel()
    if not np.all(np.isfinite(z)) or np.any(z > 0):
        raise DomainError("z must be finite and non-positive")
    out = np.empty_like(z)
    zero = z == 0.0
    out[zero] = rgamma(beta)
    nz = ~zero
    if alpha == 1.0:
        out[nz] = _alpha_one(beta, z[nz])
        return out.reshape(shape)
    r0 = np.abs(z) ** (1.0 / alpha)
    tay = nz & (r0 <= TAYLOR_R0)
    asy = r0 > ASYMPTOTIC_R0
    mid = nz & ~tay & ~asy
    if tay.any():
        out[tay] = _taylor(alpha, beta, z[tay])[0]
    if mid.any():
        out[mid] = _hankel(alpha, beta, z[mid])
    if asy.any():
        out[asy] = _asymptotic(alpha, beta, z[asy])[0]
    return out.reshape(shape)


def ml_with_error(alpha: float, beta: float, z: float) -> MLValue:
    """Scalar evaluation returning the value, an error estimate and the branch."""
    _check_params(alpha, beta)
    z = float(z)
    if not math.isfinite(z) or z > 0:
        raise DomainError(f"z must be finite and non-positive, got {z}")
    if z == 0.0:
        return MLValue(float(rgamma(beta)), 0.0, "exact")
    za = np.array([z])
    if alpha == 1.0 and beta == 1.0:
        return MLValue(math.exp(z), _EPS * math.exp(z), "exact")
    r0 = abs(z) ** (1.0 / alpha)
    if r0 <= TAYLOR_R0:
        val, mag = _taylor(alpha, beta, za)
        return MLValue(float(val[0]), float(4 * _EPS * mag[0]), "taylor")
    if r0 > ASYMPTOTIC_R0:
        val, tail = _asymptotic(alpha, beta, za)
        res = _residue_scale(alpha, beta, r0)
        err = float(tail[0]) + 8 * _EPS * (abs(float(val[0])) + res)
        return MLValue(float(val[0]), err, "asymptotic")
    if alpha == 1.0:
        fine = float(_alpha_one(beta, za)[0])
        return MLValue(fine, 64 * _EPS * max(abs(fine), 1.0), "integral")
    coarse = float(_hankel(alpha, beta, za, DE_STEP)[0])
    fine = float(_hankel(alpha, beta, za, DE_STEP / 2)[0])
    res = _residue_scale(alpha, beta, r0)
    err = abs(fine - coarse) + 8 * _EPS * (abs(fine) + res)
    return MLValue(fine, err, "integral")


def ml(alpha: float, beta: float, z: float, rtol: float = ML_RTOL) -> float:
    """Certified scalar E_{alpha,beta}(z).

    Raises
    ------
    AccuracyError
        If the branch error estimate exceeds ``rtol * |E|`` (with a small
        absolute allowance near zeros of E).
    """
    r = ml_with_error(alpha, beta, z)
    allowance = rtol * abs(r.value) + 1e-15 * max(1.0, abs(float(rgamma(beta))))
    if r.error > allowance:
        raise AccuracyError(
            f"E_{{{alpha},{beta}}}({z}) not certified: estimate {r.error:.2e} on {r.branch} branch",
            value=r.value,
            error=r.error,
        )
    return r.value


def ml_kernel(alpha: float, lam: float, t: ArrayLike) -> NDArray | float:
    """P-kernel t^(alpha-1) E_{alpha,alpha}(-lam t^alpha)."""
    t_arr = np.asarray(t, dtype=float)
    if np.any(t_arr < 0) or lam < 0:
        raise DomainError("t and lambda must be non-negative")
    with np.errstate(divide="ignore"):
        val = t_arr ** (alpha - 1.0) * ml_array(alpha, alpha, -lam * t_arr**alpha)
    return float(val) if np.ndim(t) == 0 else val


# ---------------------------------------------------------------------------
# identity and bound checks
# ---------------------------------------------------------------------------


@lru_cache(maxsize=32)
def _jacobi(n: int, a: float, b: float) -> tuple[NDArray, NDArray]:
    return roots_jacobi(n, a, b)


def derivative_identity_residuals(alpha: float, lam: float, t: float, h: float = 1e-6, n_quad: int = 800) -> dict[str, float]:
    """Residuals of the derivative identities at one point.

    ``a_first`` and ``a_second`` compare central differences with the closed
    forms of the first derivatives of E_{a,1}(-lam t^a) and of the P kernel.
    ``b_first`` and ``b_second`` check the fractional identities in their
    integrated form, ``E = 1 - lam I^a E`` and
    ``P = t^(a-1)/Gamma(a) - lam I^a P``, with the Riemann-Liouville
    integral computed by ``n_quad``-point Gauss-Jacobi quadrature.

    Each residual is absolute, divided by ``max(1, |reference|)``.
    """
    if not (1.0 < alpha <= 2.0) or t <= h or lam < 0:
        raise DomainError("need 1 < alpha <= 2, lam >= 0 and t > h")

    def e1(s):
        return ml_array(alpha, 1.0, -lam * np.asarray(s) ** alpha)

    def pk(s):
        s = np.asarray(s, dtype=float)
        return s ** (alpha - 1.0) * ml_array(alpha, alpha, -lam * s**alpha)

    out = {}
    fd = (e1(t + h) - e1(t - h)) / (2 * h)
    ref = -lam * pk(t)
    out["a_first"] = float(abs(fd - ref) / max(1.0, abs(ref)))
    fd = (pk(t + h) - pk(t - h)) / (2 * h)
    ref = t ** (alpha - 2.0) * ml_array(alpha, alpha - 1.0, -lam * t**alpha)
    out["a_second"] = float(abs(fd - ref) / max(1.0, abs(ref)))

    g = math.gamma(alpha)
    # I^a f(t) = (1/Gamma(a)) int_0^t (t-s)^(a-1) f(s) ds by Gauss-Jacobi on the (t-s)^(a-1) weight;
    # the s^(a-1) factor of the P kernel goes into the second Jacobi exponent
    x, w = _jacobi(n_quad, alpha - 1.0, 0.0)
    s = 0.5 * t * (x + 1.0)
    ie = (0.5 * t) ** alpha * float(np.sum(w * e1(s)))
    ref = float(e1(t))
    out["b_first"] = abs(ref - (1.0 - lam * ie / g)) / max(1.0, abs(ref))
    x, w = _jacobi(n_quad, alpha - 1.0, alpha - 1.0)
    s = 0.5 * t * (x + 1.0)
    ip = (0.5 * t) ** (2.0 * alpha - 1.0) * float(np.sum(w * ml_array(alpha, alpha, -lam * s**alpha)))
    ref = float(pk(t))
    out["b_second"] = abs(ref - (t ** (alpha - 1.0) / g - lam * ip / g)) / max(1.0, abs(ref))
    return out


def fit_bound_constants(alpha: float, beta: float, t_max: float, n_points: int = 2000) -> MLBoundConstants:
    """Fit m, M with m/(1+t) <= |E_{alpha,beta}(-t)| <= M/(1+t) on [0, t_max].

    The sup and inf of ``(1+t)|E(-t)|`` are located on a log-spaced grid and
    polished with a bounded scalar search.  ``lower_bound_violated`` is set when
    E changes sign on the scan, when ``(1+t)|E(-t)|`` decays to zero as t grows
    (``1/Gamma(beta-alpha) = 0``), or when the fitted m is negligible.
    """
    _check_params(alpha, beta)
    if not t_max > 0:
        raise DomainError("t_max must be positive")
    t = np.concatenate([[0.0], np.logspace(-4, math.log10(t_max), max(n_points, 16) - 1)])
    e = ml_array(alpha, beta, -t)
    g = (1.0 + t) * np.abs(e)

    def polish(i: int, sign: float) -> tuple[float, float]:
        lo = t[max(i - 1, 0)]
        hi = t[min(i + 1, t.size - 1)]
        if hi <= lo:
            return float(t[i]), float(g[i])
        fun = lambda s: -sign * (1.0 + s) * abs(float(ml_array(alpha, beta, np.array([-s]))[0]))
        r = optimize.minimize_scalar(fun, bounds=(lo, hi), method="bounded", options={"xatol": 1e-12 * max(hi, 1.0)})
        best = -sign * r.fun
        if sign * best > sign * g[i]:
            return float(r.x), float(best)
        return float(t[i]), float(g[i])

    tmax_at, M = polish(int(np.argmax(g)), 1.0)
    tmin_at, m = polish(int(np.argmin(g)), -1.0)
    sign_change = bool(np.any(np.sign(e[1:]) != np.sign(e[:-1])) and np.any(e < 0))
    decays = float(rgamma(beta - alpha)) == 0.0
    violated = sign_change or decays or m <= 1e-12 * M
    return MLBoundConstants(alpha, beta, m, M, (0.0, float(t_max)), violated, tmin_at, tmax_at)


def terminal_lower_constant(alpha: float, lambdas: ArrayLike, T: float) -> float:
    """min_j (1 + lambda_j T^alpha) |E_{alpha,1}(-lambda_j T^alpha)| over the given modes."""
    lam = np.asarray(lambdas, dtype=float)
    x = lam * T**alpha
    return float(np.min((1.0 + x) * np.abs(ml_array(alpha, 1.0, -x))))


@dataclass(frozen=True)
class RatioBoundReport:
    """Pointwise check of the two kernel inequalities on a (mode, time) grid."""

    lhs_a: NDArray
    rhs_a: NDArray
    lhs_b: NDArray
    rhs_b: NDArray
    violations_a: int
    violations_b: int

    @property
    def ok(self) -> bool:
        return self.violations_a == 0 and self.violations_b == 0


def ratio_bound_check(
    alpha: float,
    lambdas: ArrayLike,
    T: float,
    theta: float,
    times: ArrayLike,
    m_alpha: float,
    M_alpha: float,
) -> RatioBoundReport:
    r"""Check the kernel bounds used throughout the contraction estimates.

    (a) :math:`|t^{\alpha-1}E_{\alpha,\alpha}(-\lambda_j t^\alpha)| \le
    M_\alpha \lambda_j^{-\theta} t^{\alpha(1-\theta)-1}`

    (b) :math:`|E_{\alpha,1}(-\lambda_j t^\alpha)/E_{\alpha,1}(-\lambda_j T^\alpha)|
    \le M_\alpha m_\alpha^{-1} (\lambda_1^{-1}+T^\alpha)\lambda_j^\theta t^{-\alpha(1-\theta)}`

    ``M_alpha`` must dominate both the beta=1 and beta=alpha envelopes and
    ``m_alpha`` is the terminal constant of :func:`terminal_lower_constant`.
    """
    if not (0.0 <= theta <= 1.0):
        raise DomainError("theta must lie in [0, 1]")
    lam = np.asarray(lambdas, dtype=float)[:, None]
    t = np.asarray(times, dtype=float)[None, :]
    if np.any(t <= 0) or np.any(t > T * (1 + 1e-15)):
        raise DomainError("times must lie in (0, T]")
    lhs_a = np.abs(t ** (alpha - 1.0) * ml_array(alpha, alpha, -lam * t**alpha))
    rhs_a = M_alpha * lam ** (-theta) * t ** (alpha * (1.0 - theta) - 1.0)
    den = ml_array(alpha, 1.0, -lam * T**alpha)
    lhs_b = np.abs(ml_array(alpha, 1.0, -lam * t**alpha) / den)
    lam1 = float(np.min(lam))
    rhs_b = M_alpha / m_alpha * (1.0 / lam1 + T**alpha) * lam**theta * t ** (-alpha * (1.0 - theta))
    return RatioBoundReport(
        lhs_a, rhs_a, lhs_b, rhs_b, int(np.sum(lhs_a > rhs_a)), int(np.sum(lhs_b > rhs_b))
    )
