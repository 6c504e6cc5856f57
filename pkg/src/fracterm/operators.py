r"""Diagonal solution operators of the terminal value problem.

For mode j with eigenvalue :math:`\lambda` and terminal denominator
:math:`d = E_{\alpha,1}(-\lambda T^\alpha)`:

==========  ===============================================================
B(t)        :math:`E_{\alpha,1}(-\lambda t^\alpha)/d`
B0(t)       :math:`E_{\alpha,1}(-\lambda t^\alpha)`
P(t)        :math:`t^{\alpha-1}E_{\alpha,\alpha}(-\lambda t^\alpha)`
D1(t)       :math:`-\lambda t^{\alpha-1}E_{\alpha,\alpha}(-\lambda t^\alpha)/d`
D2(t)       :math:`t^{\alpha-2}E_{\alpha,\alpha-1}(-\lambda t^\alpha)`
D3(t)       :math:`-\lambda E_{\alpha,1}(-\lambda t^\alpha)/d`
D4(t)       :math:`-\lambda t^{\alpha-1}E_{\alpha,\alpha}(-\lambda t^\alpha)`
==========  ===============================================================

D1 and D2 are the time derivatives of B and P.  D3 and D4 are their Caputo
derivatives, :math:`-\lambda B` and :math:`-\lambda P`.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numpy.typing import ArrayLike, NDArray

from .errors import DomainError, TerminalTimeInadmissible
from .mittag_leffler import fit_bound_constants, ml_array, terminal_lower_constant
from .spectral_basis import SpectralBasis

EPS_DEN = 1e-10


@dataclass(frozen=True, eq=False)
class TerminalSetup:
    """Fractional order, terminal time, basis and the terminal denominators."""

    alpha: float
    T: float
    basis: SpectralBasis
    eps_den: float
    denominators: NDArray

    @property
    def lambdas(self) -> NDArray:
        return self.basis.lambdas

    def _times(self, t: ArrayLike) -> NDArray:
        tt = np.asarray(t, dtype=float)
        if np.any(tt < 0):
            raise DomainError("times must be non-negative")
        return tt[..., None]

    def B(self, t: ArrayLike) -> NDArray:
        """Multipliers of B(t); shape (..., J) for times of shape (...)."""
        tt = self._times(t)
        return ml_array(self.alpha, 1.0, -self.lambdas * tt**self.alpha) / self.denominators

    def B0(self, t: ArrayLike) -> NDArray:
        tt = self._times(t)
        return ml_array(self.alpha, 1.0, -self.lambdas * tt**self.alpha)

    def P(self, t: ArrayLike) -> NDArray:
        tt = self._times(t)
        with np.errstate(divide="ignore"):
            return tt ** (self.alpha - 1.0) * ml_array(self.alpha, self.alpha, -self.lambdas * tt**self.alpha)

    def D1(self, t: ArrayLike) -> NDArray:
        return -self.lambdas * self.P(t) / self.denominators

    def D2(self, t: ArrayLike) -> NDArray:
        tt = self._times(t)
        with np.errstate(divide="ignore"):
            return tt ** (self.alpha - 2.0) * ml_array(self.alpha, self.alpha - 1.0, -self.lambdas * tt**self.alpha)

    def D3(self, t: ArrayLike) -> NDArray:
        return -self.lambdas * self.B(t)

    def D4(self, t: ArrayLike) -> NDArray:
        return -self.lambdas * self.P(t)

    def apply(self, name: str, t: float, coeffs: ArrayLike) -> NDArray:
        """Apply one of the named operators at a single time to a coefficient vector."""
        op = getattr(self, name, None)
        if name not in ("B", "B0", "P", "D1", "D2", "D3", "D4") or op is None:
            raise DomainError(f"unknown operator {name!r}")
        return op(float(t)) * np.asarray(coeffs, dtype=float)


def make_terminal_setup(alpha: float, T: float, basis: SpectralBasis, eps_den: float = EPS_DEN) -> TerminalSetup:
    """Compute the terminal denominators and check they stay away from zero.

    Raises
    ------
    TerminalTimeInadmissible
        Naming the first mode j (1-based) with |E_{alpha,1}(-lambda_j T^alpha)| <= eps_den.
    """
    if not (1.0 < alpha <= 2.0):
        raise DomainError(f"alpha must lie in (1, 2], got {alpha}")
    if not T > 0:
        raise DomainError(f"T must be positive, got {T}")
    den = ml_array(alpha, 1.0, -basis.lambdas * T**alpha)
    bad = np.flatnonzero(np.abs(den) <= eps_den)
    if bad.size:
        j = int(bad[0])
        raise TerminalTimeInadmissible(j + 1, float(den[j]), eps_den)
    return TerminalSetup(float(alpha), float(T), basis, float(eps_den), den)


def scan_terminal_times(alpha: float, basis: SpectralBasis, T_values: ArrayLike, eps_den: float = EPS_DEN) -> list[tuple[float, int | None]]:
    """For each T, the first inadmissible mode (1-based) or None."""
    out = []
    for T in np.asarray(T_values, dtype=float):
        den = ml_array(alpha, 1.0, -basis.lambdas * T**alpha)
        bad = np.flatnonzero(np.abs(den) <= eps_den)
        out.append((float(T), int(bad[0]) + 1 if bad.size else None))
    return out


@dataclass(frozen=True)
class KernelConstants:
    """Fitted Mittag-Leffler constants for one setup.

    ``M_alpha`` bounds (1+x)|E_{alpha,beta}(-x)| for beta in {1, alpha} over the
    arguments the setup can produce.  ``m_alpha`` is the smallest
    (1+lambda_j T^alpha)|E_{alpha,1}(-lambda_j T^alpha)| over retained modes.
    """

    m_alpha: float
    M_alpha: float
    M_beta_one: float
    M_beta_alpha: float
    x_max: float


def kernel_constants(setup: TerminalSetup, n_points: int = 2000) -> KernelConstants:
    x_max = float(setup.lambdas.max() * setup.T**setup.alpha)
    c1 = fit_bound_constants(setup.alpha, 1.0, x_max, n_points)
    ca = fit_bound_constants(setup.alpha, setup.alpha, x_max, n_points)
    m = terminal_lower_constant(setup.alpha, setup.lambdas, setup.T)
    return KernelConstants(m, max(c1.M_alpha, ca.M_alpha), c1.M_alpha, ca.M_alpha, x_max)
