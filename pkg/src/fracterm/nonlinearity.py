"""Source terms G(t, u) acting on spectral coefficient vectors.

Kinds
-----
``zero``
    G = 0.
``lipschitz_scaled``
    G = L1 * u, a globally Lipschitz map with constant exactly L1.
``linear_inhomogeneous``
    G = rho(t) g for a fixed source field g.
``ginzburg_landau``
    G = rho(t) |u|^s u, evaluated pointwise on the collocation grid.
``burgers``
    G = -rho(t) u u_x in one space dimension; the sine series of u is
    differentiated termwise into a cosine series before the product.

Here rho(t) = C_rho t^b.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from numpy.typing import ArrayLike, NDArray

from .errors import DomainError
from .spectral_basis import SpectralBasis, SpectralField

KINDS = ("zero", "lipschitz_scaled", "linear_inhomogeneous", "ginzburg_landau", "burgers")
GROWTH_CLASS = {
    "zero": "H1",
    "lipschitz_scaled": "H1",
    "linear_inhomogeneous": "H1",
    "ginzburg_landau": "H3",
    "burgers": "H3",
}


@dataclass(frozen=True)
class NonlinearitySpec:
    kind: str
    lipschitz: float = 0.0
    s: float = 1.0
    c_rho: float = 1.0
    b: float = 0.0
    source: tuple[float, ...] | None = None
    meta: dict = field(default_factory=dict, compare=False)

    def __post_init__(self) -> None:
        if self.kind not in KINDS:
            raise DomainError(f"unknown nonlinearity kind {self.kind!r}; expected one of {KINDS}")
        if self.kind == "burgers" and self.s != 1.0:
            raise DomainError("burgers has s = 1")
        if self.kind == "ginzburg_landau" and not self.s > 0:
            raise DomainError("ginzburg_landau needs s > 0")
        if self.kind == "linear_inhomogeneous" and self.source is None:
            raise DomainError("linear_inhomogeneous needs a source vector")
        if self.lipschitz < 0:
            raise DomainError("lipschitz constant must be non-negative")

    @property
    def growth_class(self) -> str:
        return GROWTH_CLASS[self.kind]

    @property
    def is_zero(self) -> bool:
        return (
            self.kind == "zero"
            or (self.kind == "lipschitz_scaled" and self.lipschitz == 0.0)
            or (self.kind in ("ginzburg_landau", "burgers", "linear_inhomogeneous") and self.c_rho == 0.0)
        )

    def rho(self, t: ArrayLike) -> NDArray:
        """C_rho t^b, with rho(0) = 0 for b > 0 and C_rho for b = 0."""
        tt = np.asarray(t, dtype=float)
        if self.b < 0 and np.any(tt == 0):
            raise DomainError("rho(0) is unbounded for b < 0")
        if self.b == 0:
            return np.full(tt.shape, self.c_rho)
        return self.c_rho * tt**self.b


def zero() -> NonlinearitySpec:
    return NonlinearitySpec("zero")


def lipschitz_scaled(L1: float) -> NonlinearitySpec:
    return NonlinearitySpec("lipschitz_scaled", lipschitz=float(L1))


def ginzburg_landau(s: float, c_rho: float, b: float = 0.0) -> NonlinearitySpec:
    return NonlinearitySpec("ginzburg_landau", s=float(s), c_rho=float(c_rho), b=float(b))


def burgers(c_rho: float, b: float = 0.0) -> NonlinearitySpec:
    return NonlinearitySpec("burgers", s=1.0, c_rho=float(c_rho), b=float(b))


def pointwise_term(spec: NonlinearitySpec, basis: SpectralBasis, coeffs: NDArray) -> NDArray:
    """The u-dependent factor without rho: |u|^s u or -u u_x, projected back to coefficients."""
    if spec.kind == "ginzburg_landau":
        u = basis.to_samples(coeffs)
        return basis.from_samples(np.abs(u) ** spec.s * u)
    if spec.kind == "burgers":
        if basis.kind != "dirichlet_1d":
            raise DomainError("burgers is implemented for the 1D Dirichlet basis only")
        u = basis.to_samples(coeffs)
        ux = basis.dx_samples(coeffs)
        return -basis.from_samples(u * ux)
    raise DomainError(f"{spec.kind} has no pointwise term")


def eval_G(spec: NonlinearitySpec, t: ArrayLike, coeffs: ArrayLike, basis: SpectralBasis) -> NDArray:
    """G(t, u) in coefficient space.

    ``t`` may be a scalar with ``coeffs`` of shape (J,), or an array of times of
    shape (n,) with ``coeffs`` of shape (n, J).
    """
    c = np.asarray(coeffs, dtype=float)
    if c.shape[-1] != basis.J:
        raise DomainError(f"expected {basis.J} coefficients, got {c.shape[-1]}")
    if spec.kind == "zero":
        return np.zeros_like(c)
    if spec.kind == "lipschitz_scaled":
        return spec.lipschitz * c
    rho = spec.rho(t)
    rho = rho[..., None] if np.ndim(rho) else float(rho)
    if spec.kind == "linear_inhomogeneous":
        g = np.asarray(spec.source, dtype=float)
        if g.shape != (basis.J,):
            raise DomainError("source length does not match the basis")
        return rho * np.broadcast_to(g, c.shape)
    if spec.c_rho == 0.0:
        return np.zeros_like(c)
    return rho * pointwise_term(spec, basis, c)


def eval_G_field(spec: NonlinearitySpec, t: float, u: SpectralField) -> SpectralField:
    return SpectralField(u.basis, eval_G(spec, float(t), u.coeffs, u.basis))


def fit_growth_constant(
    spec: NonlinearitySpec,
    basis: SpectralBasis,
    sigma: float,
    nu: float,
    n_pairs: int = 400,
    seed: int = 0,
) -> float:
    r"""Empirical constant K_G of the critical growth bound.

    Returns the largest observed value of

    .. math::

        \frac{\|N(v_1) - N(v_2)\|_{\mathbb{H}^\sigma}}
             {(1 + \|v_1\|_{\mathbb{H}^\nu}^s + \|v_2\|_{\mathbb{H}^\nu}^s)\,\|v_1 - v_2\|_{\mathbb{H}^\nu}}

    over random pairs, where N is the u-dependent factor of G (rho excluded).
    Pairs mix independent draws and close perturbations, and amplitudes span four
    decades.  The result is a lower estimate of the true supremum.
    """
    if spec.kind not in ("ginzburg_landau", "burgers"):
        raise DomainError("growth constant applies to ginzburg_landau and burgers")
    rng = np.random.default_rng(seed)
    J = basis.J
    decay = basis.lambdas ** (-nu) * np.arange(1, J + 1) ** -0.6
    best = 0.0
    s = spec.s
    amps = np.logspace(-2, 2, 9)
    per = max(1, n_pairs // (2 * amps.size))
    for amp in amps:
        for close in (False, True):
            v1 = rng.standard_normal((per, J)) * decay
            v1 *= amp / basis.norm(v1, nu)[:, None]
            if close:
                v2 = v1 + 1e-3 * amp * rng.standard_normal((per, J)) * decay / np.sqrt(J)
            else:
                v2 = rng.standard_normal((per, J)) * decay
                v2 *= amp * rng.uniform(0.1, 1.0, (per, 1)) / basis.norm(v2, nu)[:, None]
            num = basis.norm(pointwise_term(spec, basis, v1) - pointwise_term(spec, basis, v2), sigma)
            n1 = basis.norm(v1, nu)
            n2 = basis.norm(v2, nu)
            den = (1.0 + n1**s + n2**s) * basis.norm(v1 - v2, nu)
            best = max(best, float(np.max(num / den)))
    return best


def critical_K0(spec: NonlinearitySpec, K_G: float, T: float, alpha: float, zeta: float) -> float:
    """K0 = sup_{0<t<=T} K_G rho(t) t^(alpha zeta) = K_G C_rho T^(b + alpha zeta).

    Raises
    ------
    DomainError
        If b + alpha*zeta < 0, where the supremum is infinite.
    """
    expo = spec.b + alpha * zeta
    if expo < 0:
        raise DomainError(f"rho(t) t^(alpha zeta) is unbounded near 0 (b + alpha*zeta = {expo:.3g} < 0)")
    return float(K_G * abs(spec.c_rho) * T**expo)


def rho_for_K0(spec: NonlinearitySpec, K_G: float, T: float, alpha: float, zeta: float, target: float) -> float:
    """C_rho that makes :func:`critical_K0` equal to ``target``."""
    expo = spec.b + alpha * zeta
    if expo < 0:
        raise DomainError("b + alpha*zeta must be non-negative")
    return float(target / (K_G * T**expo))


def lipschitz_ratio(spec: NonlinearitySpec, basis: SpectralBasis, t: float, v1: ArrayLike, v2: ArrayLike, gamma: float = 0.0) -> float:
    """||G(t,v1) - G(t,v2)|| / ||v1 - v2|| in H^gamma."""
    d = basis.norm(np.asarray(v1) - np.asarray(v2), gamma)
    if d == 0:
        return 0.0
    return float(basis.norm(eval_G(spec, t, v1, basis) - eval_G(spec, t, v2, basis), gamma) / d)

