r"""Explicit constants of the well-posedness theory and the hypothesis checks.

Every constant is evaluated exactly as written in the list of constants:
:math:`\mathcal M_1, \mathcal M_2, \mathscr M_1, \overline{\mathcal M}_{1,2,3},
\mathscr M_2, \mathcal N_1, \mathcal N_2, \mathscr N_1, \mathscr N_2,
\overline{\mathscr N_2}, \mathcal N_f, \widehat{\mathcal R}` and the Hölder
exponents :math:`\eta_{glo}, \eta_{cri}`.  The Mittag-Leffler constants
``m_alpha`` and ``M_alpha`` and the embedding constants ``C1``, ``C2`` are
inputs; for spectral norms ``C1 = lambda_1^{-theta}`` and
``C2 = lambda_1^{sigma - nu - 1}`` are exact (see :func:`spectral_embedding_constants`).

Hypotheses of the existence theorems and of the two applications
(Ginzburg-Landau and Burgers) are exposed as lists of :class:`Check` records so
that the CLI can print them and tests can compare them against a golden table.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field, fields

import numpy as np
from scipy import special

from .errors import HypothesisError
from .spectral_basis import embedding_validator

NAN = float("nan")


@dataclass(frozen=True)
class RegularityParams:
    """Smoothness indices of one problem.  Unused indices stay ``None``.

    ``vartheta`` and ``vartheta_prime`` are the critical-case weights, ``eta``
    the Hölder index of the critical case, ``zeta`` the singularity exponent of
    the growth bound.
    """

    nu: float = 0.0
    theta: float | None = None
    theta_prime: float | None = None
    nu_prime: float | None = None
    nu1: float | None = None
    nu_alpha: float | None = None
    sigma: float | None = None
    q: float | None = None
    vartheta: float | None = None
    vartheta_prime: float | None = None
    eta: float | None = None
    zeta: float | None = None
    vartheta1: float | None = None
    vartheta_alpha: float | None = None

    @property
    def mu(self) -> float | None:
        return None if self.sigma is None else self.nu - self.sigma

    def to_dict(self) -> dict:
        return {k: v for k, v in asdict(self).items() if v is not None}


@dataclass(frozen=True)
class Check:
    """One hypothesis: identifier, outcome and the substituted inequality."""

    id: str
    ok: bool
    detail: str = ""


# ---------------------------------------------------------------------------
# Hölder exponents
# ---------------------------------------------------------------------------


def _holder_branch(x: float, alpha: float, name: str) -> float:
    if 0 < x <= 1:
        return min(x, alpha - 1.0)
    if 1 < x < 2:
        return min(x - 1.0, alpha - 1.0)
    raise HypothesisError(name, f"exponent argument {x:.6g} outside (0, 2)")


def eta_glo(alpha: float, theta: float, nu_prime: float) -> float:
    """Hölder exponent of the Lipschitz case, piecewise in x = alpha (theta + nu' - 1)."""
    return _holder_branch(alpha * (theta + nu_prime - 1.0), alpha, "eta_glo")


def eta_cri(alpha: float, eta: float, vartheta: float) -> float:
    """Hölder exponent of the critical case, piecewise in x = alpha (eta - vartheta)."""
    return _holder_branch(alpha * (eta - vartheta), alpha, "eta_cri")


def spectral_embedding_constants(lambda1: float, nu: float, theta: float | None, sigma: float | None) -> tuple[float, float]:
    """Sharp embedding constants for spectrally defined norms.

    ``||v||_{H^nu} <= lambda_1^{-theta} ||v||_{H^{nu+theta}}`` and
    ``||v||_{H^sigma} <= lambda_1^{sigma-nu-1} ||v||_{H^{nu+1}}``, both attained on
    the first mode.
    """
    C1 = lambda1 ** (-theta) if theta is not None else NAN
    C2 = lambda1 ** (sigma - nu - 1.0) if sigma is not None else NAN
    return float(C1), float(C2)


# ---------------------------------------------------------------------------
# Bundle
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ConstantsBundle:
    # inputs
    alpha: float
    T: float
    lambda1: float
    m_alpha: float
    M_alpha: float
    C1: float
    C2: float
    nu: float
    theta: float
    sigma: float
    q: float
    vartheta: float
    zeta: float
    s: float
    L1: float
    L2: float
    K0: float
    f_norm: float
    # Lipschitz case
    calM1: float = NAN
    calM2: float = NAN
    scrM1: float = NAN
    barM1: float = NAN
    barM2: float = NAN
    barM3: float = NAN
    sum_barM: float = NAN
    scrM2: float = NAN
    calN1: float = NAN
    # critical case
    calN2: float = NAN
    scrN1: float = NAN
    scrN2: float = NAN
    barN2: float = NAN
    calNf: float = NAN
    R_hat: float = NAN
    pi_hat_R: float = NAN
    # Hölder exponents
    eta_glo: float = NAN
    eta_cri: float = NAN
    # admissibility
    picard_admissible: bool | None = None
    path_admissible: bool | None = None
    path_admissible_proof: bool | None = None
    critical_admissible: bool | None = None
    self_map: bool | None = None
    critical_threshold: float = NAN
    contraction_bound: float = NAN
    notes: tuple[str, ...] = field(default=(), compare=False)

    @property
    def L1_bound(self) -> float:
        """Upper end of the admissible interval for ||L1||."""
        return 1.0 / self.scrM1

    def rows(self) -> list[tuple[str, float]]:
        """(name, value) pairs for every numeric field, predicates as 0/1."""
        out = []
        for f in fields(self):
            v = getattr(self, f.name)
            if f.name == "notes":
                continue
            if isinstance(v, bool) or v is None:
                v = NAN if v is None else float(v)
            out.append((f.name, float(v)))
        return out


def _opt(x: float | None) -> float:
    return NAN if x is None else float(x)


def compute_constants(
    alpha: float,
    T: float,
    lambda1: float,
    params: RegularityParams,
    m_alpha: float,
    M_alpha: float,
    C1: float | None = None,
    C2: float | None = None,
    *,
    s: float | None = None,
    L1: float | None = None,
    L2: float | None = None,
    K0: float | None = None,
    f_norm: float | None = None,
) -> ConstantsBundle:
    """Evaluate every listed constant that the supplied parameters determine.

    Lipschitz-case constants need ``params.theta``; the path-space ones also
    ``q`` and ``sigma``; the critical ones ``sigma``, ``vartheta``, ``zeta`` and
    ``s``.  Missing inputs leave the dependent constants as NaN.  ``C1`` and
    ``C2`` default to the sharp spectral values.

    Raises
    ------
    HypothesisError
        When a supplied parameter makes a constant undefined; the violated
        hypothesis is named.
    """
    for name, v in (("alpha", alpha), ("T", T), ("lambda1", lambda1), ("m_alpha", m_alpha), ("M_alpha", M_alpha)):
        if not (math.isfinite(v) and v > 0):
            raise HypothesisError(f"{name} > 0", f"got {v}")
    a = float(alpha)
    M, m, lam1 = float(M_alpha), float(m_alpha), float(lambda1)
    nu = float(params.nu)
    th, sig, q, vt, ze = params.theta, params.sigma, params.q, params.vartheta, params.zeta
    c1d, c2d = spectral_embedding_constants(lam1, nu, th, sig)
    C1 = c1d if C1 is None else float(C1)
    C2 = c2d if C2 is None else float(C2)
    out: dict = {}
    notes: list[str] = []

    if th is not None:
        if not ((a - 1.0) / a < th < 1.0):
            raise HypothesisError("(alpha-1)/alpha < theta < 1", f"theta={th}, alpha={a}")
        g = a * (1.0 - th)
        calM1 = M**2 / m * T**g * (T ** (a * th) + lam1 ** (-th))
        out["calM1"] = calM1
        out["calM2"] = M**2 / m * T**g / (a**2 * th * (1.0 - th)) * (T**a + 1.0 / lam1)
        scrM1 = (math.pi * M * lam1 ** (-th) * T**g + math.pi * calM1) / math.sin(math.pi * g)
        out["scrM1"] = scrM1
        if L1 is not None:
            out["picard_admissible"] = bool(0 < L1 < 1.0 / scrM1)
            if L1 * scrM1 < 1:
                out["calN1"] = calM1 / M * C1 / (1.0 - L1 * scrM1)
            else:
                notes.append("calN1 undefined: ||L1|| scrM1 >= 1")
        if q is not None and sig is not None:
            if not (1.0 <= q < 1.0 / g):
                raise HypothesisError("1 <= q < 1/(alpha(1-theta))", f"q={q}")
            out["barM1"] = C2 * M * T ** (a + 1.0 / q) / (a * (a * q + 1.0) ** (1.0 / q))
            out["barM2"] = T**g * (T ** (a * th + 1.0 / q) + lam1 ** (-th)) / ((1.0 - g * q) ** (1.0 / q) * g)
            out["barM3"] = M * T**a / a * (1.0 + M / m * (T**a + 1.0 / lam1))
            sb = out["barM1"] + out["barM2"] + out["barM3"]
            out["sum_barM"] = sb
            if L2 is not None:
                out["scrM2"] = L2 * sb
                out["path_admissible"] = bool(0 < L2 < 1.0 / out["scrM2"])
                out["path_admissible_proof"] = bool(0 < L2 * sb < 1.0)
        if params.nu_prime is not None:
            out["eta_glo"] = eta_glo(a, th, params.nu_prime)

    if vt is not None:
        out["calN2"] = M / m * T ** (a * vt) * (T ** (a * (1.0 - vt)) + lam1 ** (vt - 1.0))
        if params.eta is not None:
            out["eta_cri"] = eta_cri(a, params.eta, vt)
    if vt is not None and sig is not None and ze is not None and s is not None:
        mu = nu - sig
        z = (vt - mu, 1.0 - mu)
        second = 1.0 - a * (1.0 + s) * vt - a * ze
        if not (z[0] > 0):
            raise HypothesisError("vartheta > mu", f"vartheta={vt}, mu={mu}")
        if not (second > 0):
            raise HypothesisError("zeta < 1/alpha - (1+s) vartheta", f"zeta={ze}")
        scrN1 = max(math.exp(special.betaln(a * zj, second)) for zj in z)
        scrN2 = M * scrN1 * max(T ** (a * (zj - s * vt - ze)) for zj in z)
        barN2 = scrN2 * (1.0 + out["calN2"] * T ** (-a * vt))
        out.update(scrN1=scrN1, scrN2=scrN2, barN2=barN2, contraction_bound=(2.0 + s) / (2.0 + 2.0 * s))
        if f_norm is not None and f_norm > 0:
            calNf = (s / (out["calN2"] * f_norm)) ** s / (2.0 + 2.0 * s) ** (1.0 + s)
            out["calNf"] = calNf
            out["critical_threshold"] = min(0.5 / barN2, calNf)
        elif f_norm is not None:
            out["calNf"] = math.inf
            out["critical_threshold"] = 0.5 / barN2
        if K0 is not None and K0 > 0:
            x = K0 * T ** (s * a * vt)
            out["critical_admissible"] = bool(x < out["critical_threshold"]) if "critical_threshold" in out else None
            num = 1.0 - barN2 * x
            out["R_hat"] = (num / ((1.0 + s) * barN2 * K0)) ** (1.0 / s) if num > 0 else NAN
            if num <= 0:
                notes.append("R_hat undefined: barN2 K0 T^(s alpha vartheta) >= 1")
            elif f_norm is not None:
                # pi(R) - R at R = R_hat; negative means the R_hat-ball is mapped into itself
                out["pi_hat_R"] = out["calN2"] * f_norm - s / (1.0 + s) * num * out["R_hat"]
                out["self_map"] = bool(out["pi_hat_R"] < 0)
                if not out["self_map"]:
                    notes.append("calN2 ||f|| exceeds s/(1+s) (1 - barN2 K0 T^(s alpha vartheta)) R_hat: ball not mapped into itself")

    return ConstantsBundle(
        alpha=a, T=float(T), lambda1=lam1, m_alpha=m, M_alpha=M, C1=C1, C2=C2,
        nu=nu, theta=_opt(th), sigma=_opt(sig), q=_opt(q), vartheta=_opt(vt), zeta=_opt(ze),
        s=_opt(s), L1=_opt(L1), L2=_opt(L2), K0=_opt(K0), f_norm=_opt(f_norm),
        notes=tuple(notes), **out,
    )


# ---------------------------------------------------------------------------
# Theorem hypotheses
# ---------------------------------------------------------------------------


def _c(checks: list[Check], cid: str, ok: bool, detail: str) -> None:
    checks.append(Check(cid, bool(ok), detail))


def lipschitz_hypotheses(alpha: float, p: RegularityParams, bundle: ConstantsBundle | None = None) -> list[Check]:
    """Hypotheses of the Picard existence theorem and its parts a-d, for the indices present."""
    a = alpha
    ch: list[Check] = []
    th = p.theta
    lo = (a - 1.0) / a
    _c(ch, "nu_nonneg", p.nu >= 0, f"nu={p.nu} >= 0")
    if th is None:
        _c(ch, "theta_picard", False, "theta missing")
        return ch
    _c(ch, "theta_picard", lo < th < 1, f"(alpha-1)/alpha={lo:.6g} < theta={th} < 1")
    if p.theta_prime is not None:
        _c(ch, "theta_prime_range", lo < p.theta_prime <= th, f"{lo:.6g} < theta'={p.theta_prime} <= theta={th}")
    if p.nu_prime is not None:
        _c(ch, "nu_prime_range", 1 - th < p.nu_prime <= 2 - th, f"{1 - th:.6g} < nu'={p.nu_prime} <= {2 - th:.6g}")
    if p.nu1 is not None:
        hi = min(1 - th, lo)
        _c(ch, "nu1_range", 0 <= p.nu1 <= hi, f"0 <= nu1={p.nu1} <= {hi:.6g}")
    if p.nu_alpha is not None:
        hi = min(1 / a - th, lo)
        _c(ch, "nu_alpha_range", lo - th < p.nu_alpha <= hi, f"{lo - th:.6g} < nu_alpha={p.nu_alpha} <= {hi:.6g}")
    if bundle is not None and not math.isnan(bundle.L1):
        _c(ch, "L1_admissible", 0 < bundle.L1 * bundle.scrM1 < 1, f"||L1|| scrM1 = {bundle.L1 * bundle.scrM1:.6g} < 1")
    return ch


def path_space_hypotheses(alpha: float, p: RegularityParams, bundle: ConstantsBundle | None = None) -> list[Check]:
    """Hypotheses of the path-space (Banach fixed point) theorem."""
    a = alpha
    ch: list[Check] = []
    th, q, sig = p.theta, p.q, p.sigma
    if th is None or q is None or sig is None:
        _c(ch, "path_params", False, "theta, q and sigma are required")
        return ch
    lo = (a * q - 1.0) / (a * q)
    _c(ch, "theta_path", lo < th < 1, f"(alpha q-1)/(alpha q)={lo:.6g} < theta={th} < 1")
    _c(ch, "sigma_range", 0 <= p.nu <= sig <= p.nu + 1, f"0 <= nu={p.nu} <= sigma={sig} <= nu+1")
    hi = 1.0 / (a * (1 - th)) if th < 1 else math.inf
    _c(ch, "q_range", 1 <= q < hi, f"1 <= q={q} < {hi:.6g}")
    if bundle is not None and not math.isnan(bundle.L2):
        _c(ch, "L2_admissible", bool(bundle.path_admissible), f"L2={bundle.L2:.6g} < 1/scrM2={1 / bundle.scrM2:.6g}")
    return ch


def critical_hypotheses(alpha: float, p: RegularityParams, s: float, bundle: ConstantsBundle | None = None) -> list[Check]:
    """Hypotheses of the critical-nonlinearity theorem, its parts a-b and the derivative remark."""
    a = alpha
    ch: list[Check] = []
    sig, vt, ze = p.sigma, p.vartheta, p.zeta
    _c(ch, "alpha_range", 1 < a < 2, f"1 < alpha={a} < 2")
    _c(ch, "s_positive", s > 0, f"s={s} > 0")
    if sig is None or vt is None:
        _c(ch, "critical_params", False, "sigma and vartheta are required")
        return ch
    mu = p.nu - sig
    _c(ch, "sigma_range", -1 < sig < 0, f"-1 < sigma={sig} < 0")
    _c(ch, "nu_range", 0 < p.nu < 1 + sig, f"0 < nu={p.nu} < 1+sigma={1 + sig:.6g}")
    _c(ch, "vartheta_range", mu < vt < 1, f"mu={mu:.6g} < vartheta={vt} < 1")
    if ze is not None:
        zmax = min(1 / a - (1 + s) * vt, vt * (1 - s) - p.nu + sig)
        _c(ch, "zeta_upper", ze < zmax, f"zeta={ze} < {zmax:.6g}")
    if p.vartheta_prime is not None:
        _c(ch, "vartheta_prime_range", vt <= p.vartheta_prime <= 1, f"vartheta={vt} <= vartheta'={p.vartheta_prime} <= 1")
    if p.eta is not None:
        _c(ch, "eta_range", vt < p.eta <= vt + 1, f"vartheta={vt} < eta={p.eta} <= {vt + 1:.6g}")
    if p.vartheta1 is not None:
        _c(ch, "derivative_first_vartheta", vt < (mu + 1) / 2, f"vartheta={vt} < (mu+1)/2={(mu + 1) / 2:.6g}")
        _c(ch, "vartheta1_range", vt <= p.vartheta1 < (mu + 1) / 2, f"{vt} <= vartheta1={p.vartheta1} < {(mu + 1) / 2:.6g}")
    if p.vartheta_alpha is not None:
        _c(ch, "derivative_alpha_vartheta", vt <= (2 * mu + 1) / 3, f"vartheta={vt} <= (2mu+1)/3={(2 * mu + 1) / 3:.6g}")
        lo, hi = (mu + 2) / 3, (mu + 5) / 3
        _c(ch, "vartheta_alpha_range", lo <= p.vartheta_alpha < hi, f"{lo:.6g} <= vartheta_alpha={p.vartheta_alpha} < {hi:.6g}")
    if bundle is not None and bundle.critical_admissible is not None:
        x = bundle.K0 * bundle.T ** (bundle.s * a * vt)
        _c(ch, "K0_admissible", bundle.critical_admissible, f"K0 T^(s alpha vartheta)={x:.6g} < {bundle.critical_threshold:.6g}")
    return ch


def derivative_exponents(alpha: float, p: RegularityParams) -> dict[str, float]:
    """Time exponents of the critical-case derivative envelopes (report only)."""
    mu = p.nu - p.sigma
    out = {}
    if p.vartheta1 is not None:
        out["first"] = -alpha * (2 * p.vartheta1 - mu - (alpha - 1) / alpha)
    if p.vartheta_alpha is not None:
        out["alpha"] = -max(alpha * (p.vartheta_alpha - (mu + 2) / 3), alpha * (2 * p.vartheta - mu))
    return out


# ---------------------------------------------------------------------------
# Application parameters
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ValidationResult:
    kind: str
    case: str
    checks: tuple[Check, ...]

    @property
    def ok(self) -> bool:
        return all(c.ok for c in self.checks)

    @property
    def violations(self) -> tuple[str, ...]:
        return tuple(c.id for c in self.checks if not c.ok)


def _embed(ch: list[Check], cid: str, kind: str, **kw: float) -> None:
    r = embedding_validator(kind, **kw)
    _c(ch, cid, r.ok, "; ".join(r.violations) if r.violations else "holds")


def validate_application_params(
    kind: str,
    N: int,
    nu: float,
    mu: float,
    vartheta: float,
    vartheta_prime: float,
    s: float = 1.0,
    varrho: float | None = None,
    b: float | None = None,
    alpha: float | None = None,
) -> ValidationResult:
    """Check the parameter ranges of the Ginzburg-Landau or Burgers existence result.

    ``kind`` is ``"ginzburg_landau"`` or ``"burgers"``; ``mu = nu - sigma``.
    For Ginzburg-Landau the case is chosen by ``s < 4/N`` (case a, needs
    ``varrho``) or ``s >= 4/N`` (case b).  The lower bound on ``b`` is checked
    only when both ``b`` and ``alpha`` are given.  Constraint ids:
    ``dimension``, ``s_positive``, ``rho_range``, ``nu_range``, ``mu_range``,
    ``theta_range`` (vartheta), ``theta_prime_range`` (vartheta'), ``b_lower``
    and ``embedding_*``.
    """
    ch: list[Check] = []
    sigma = nu - mu
    top = (N + 4) / 8
    if kind == "ginzburg_landau":
        _c(ch, "dimension", 2 <= N <= 4, f"2 <= N={N} <= 4")
        _c(ch, "s_positive", s > 0, f"s={s} > 0")
        case = "a" if s < 4 / N else "b"
        if case == "a":
            if varrho is None:
                _c(ch, "rho_range", False, "varrho required when s < 4/N")
                nu_lo = N / 4
            else:
                _c(ch, "rho_range", 0 < varrho <= N * s / 8, f"0 < varrho={varrho} <= Ns/8={N * s / 8:.6g}")
                nu_lo = N / 4 - varrho / s
        else:
            nu_lo = N / 4 - 1 / (2 * s)
        _c(ch, "nu_range", nu_lo <= nu < N / 4, f"{nu_lo:.6g} <= nu={nu} < N/4={N / 4:.6g}")
        mu0 = max(nu, s * (N / 4 - nu))
        _c(ch, "mu_range", mu0 < mu < top, f"mu0={mu0:.6g} < mu={mu} < {top:.6g}")
        if b is not None and alpha is not None:
            blo = -min(1 / alpha - (1 + s) * vartheta, (vartheta - mu) - s * vartheta)
            _c(ch, "b_lower", b > blo, f"b={b} > {blo:.6g}")
        _embed(ch, "embedding_lebesgue_to_dual", "from_lebesgue", N=N, sigma=2 * sigma, q=2 * N / (N - 4 * sigma))
        if N - 4 * nu > 0:
            _embed(ch, "embedding_nu_to_lebesgue", "into_lebesgue", N=N, sigma=2 * nu, q=2 * N * (1 + s) / (N - 4 * sigma))
        else:
            _c(ch, "embedding_nu_to_lebesgue", False, "needs 2 nu < N/2")
    elif kind == "burgers":
        case = "-"
        _c(ch, "dimension", 3 <= N <= 4, f"3 <= N={N} <= 4")
        _c(ch, "nu_range", 0.5 <= nu < N / 4, f"1/2 <= nu={nu} < N/4={N / 4:.6g}")
        mu2 = max(nu, (N + 2) / 4 - nu)
        _c(ch, "mu_range", mu2 <= mu < top, f"mu2={mu2:.6g} <= mu={mu} < {top:.6g}")
        if b is not None and alpha is not None:
            blo = -min(-mu, 1 / alpha - 2 * vartheta)
            _c(ch, "b_lower", b > blo, f"b={b} > {blo:.6g}")
        _embed(ch, "embedding_lebesgue_to_dual", "from_lebesgue", N=N, sigma=2 * sigma, q=2 * N / (N - 4 * sigma))
        if N + 2 - 4 * nu > 0 and 2 * nu >= 1:
            _embed(ch, "embedding_nu_to_gradient", "sobolev", N=N, sigma=2 * nu, p=2, gamma=1, q=2 * N / (N + 2 - 4 * nu))
        else:
            _c(ch, "embedding_nu_to_gradient", False, "needs 1 <= 2 nu < (N+2)/2")
        if 4 * mu - 2 > 0 and N - 4 * nu > 0:
            _embed(ch, "embedding_nu_to_lebesgue", "into_lebesgue", N=N, sigma=2 * nu, q=2 * N / (4 * mu - 2))
        else:
            _c(ch, "embedding_nu_to_lebesgue", False, "needs mu > 1/2 and 2 nu < N/2")
    else:
        raise HypothesisError("kind", f"unknown application {kind!r}")
    _c(ch, "theta_range", mu < vartheta < top, f"mu={mu} < vartheta={vartheta} < {top:.6g}")
    lo = vartheta + (4 - N) / 8
    _c(ch, "theta_prime_range", lo <= vartheta_prime < 1, f"{lo:.6g} <= vartheta'={vartheta_prime} < 1")
    return ValidationResult(kind, case, tuple(ch))
