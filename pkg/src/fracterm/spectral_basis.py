r"""Dirichlet eigenbasis, spectral Sobolev norms and collocation transforms.

Fields are stored as coefficient vectors over the first J eigenpairs of the
Dirichlet Laplacian, sorted by eigenvalue.  The scale of spaces is

.. math::

    \|v\|_{\mathbb{H}^\gamma}^2 = \sum_j \lambda_j^{2\gamma} v_j^2 .

Pointwise nonlinearities are evaluated on a uniform interior collocation grid
where the discrete sine transform is exactly orthogonal, so
``from_samples(to_samples(c)) == c`` for any c.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from numpy.typing import ArrayLike, NDArray

from .errors import AliasError, ConfigError, DomainError


@dataclass(frozen=True, eq=False)
class SpectralBasis:
    """First J eigenpairs plus a collocation grid.

    Build one with :func:`dirichlet_1d`, :func:`dirichlet_2d` or
    :func:`load_spectrum` rather than calling the constructor directly.
    """

    kind: str
    lambdas: NDArray
    lengths: tuple[float, ...] = ()
    indices: NDArray | None = None
    points: NDArray | None = None
    weights: NDArray | None = None
    synthesis: NDArray | None = None
    synthesis_dx: NDArray | None = None
    analysis: NDArray | None = None
    grid_shape: tuple[int, ...] = ()
    meta: dict = field(default_factory=dict)

    @property
    def J(self) -> int:
        return int(self.lambdas.size)

    @property
    def dim(self) -> int:
        return len(self.lengths) if self.lengths else 0

    @property
    def has_grid(self) -> bool:
        return self.synthesis is not None

    def norm(self, coeffs: ArrayLike, gamma: float) -> NDArray | float:
        """H^gamma norm over the last axis of ``coeffs``."""
        c = np.asarray(coeffs, dtype=float)
        val = np.sqrt(np.sum(self.lambdas ** (2.0 * gamma) * c * c, axis=-1))
        return float(val) if np.ndim(val) == 0 else val

    def to_samples(self, coeffs: ArrayLike) -> NDArray:
        """Values on the collocation grid; leading axes are batch axes."""
        self._need_grid()
        return np.asarray(coeffs, dtype=float) @ self.synthesis.T

    def dx_samples(self, coeffs: ArrayLike) -> NDArray:
        """x-derivative on the collocation grid (1D bases only)."""
        if self.synthesis_dx is None:
            raise DomainError("x-derivative samples are only available for the 1D Dirichlet basis")
        return np.asarray(coeffs, dtype=float) @ self.synthesis_dx.T

    def from_samples(self, samples: ArrayLike) -> NDArray:
        """Project grid values back to coefficients."""
        self._need_grid()
        return np.asarray(samples, dtype=float) @ self.analysis.T

    def field(self, coeffs: ArrayLike) -> "SpectralField":
        c = np.asarray(coeffs, dtype=float)
        if c.shape != (self.J,):
            raise DomainError(f"expected {self.J} coefficients, got shape {c.shape}")
        return SpectralField(self, c)

    def _need_grid(self) -> None:
        if self.synthesis is None:
            raise DomainError("basis has no collocation grid (supply a sample matrix)")


@dataclass(frozen=True, eq=False)
class SpectralField:
    """A coefficient vector tied to its basis."""

    basis: SpectralBasis
    coeffs: NDArray

    def norm(self, gamma: float) -> float:
        return float(self.basis.norm(self.coeffs, gamma))

    def to_samples(self) -> NDArray:
        return self.basis.to_samples(self.coeffs)

    def _other(self, other) -> NDArray:
        if isinstance(other, SpectralField):
            if other.basis is not self.basis:
                raise DomainError("fields live on different bases")
            return other.coeffs
        return np.asarray(other, dtype=float)

    def __add__(self, other):
        return SpectralField(self.basis, self.coeffs + self._other(other))

    def __sub__(self, other):
        return SpectralField(self.basis, self.coeffs - self._other(other))

    def __mul__(self, scalar: float):
        return SpectralField(self.basis, self.coeffs * float(scalar))

    __rmul__ = __mul__

    def __neg__(self):
        return SpectralField(self.basis, -self.coeffs)


def _check_grid(M: int, kmax: int) -> None:
    if M < 2 * kmax + 1:
        raise AliasError(f"collocation size {M} below dealiasing floor {2 * kmax + 1}")


def dirichlet_1d(L: float, J: int, M: int | None = None) -> SpectralBasis:
    """Dirichlet Laplacian on (0, L): lambda_j = (j pi / L)^2, phi_j = sqrt(2/L) sin(j pi x / L)."""
    if not (L > 0) or J < 1:
        raise DomainError("need L > 0 and J >= 1")
    M = 3 * J if M is None else int(M)
    _check_grid(M, J)
    j = np.arange(1, J + 1)
    x = L * np.arange(1, M + 1) / (M + 1)
    k = j * math.pi / L
    phi = math.sqrt(2.0 / L) * np.sin(np.outer(x, k))
    dphi = math.sqrt(2.0 / L) * np.cos(np.outer(x, k)) * k
    w = np.full(M, L / (M + 1))
    return SpectralBasis(
        kind="dirichlet_1d",
        lambdas=k**2,
        lengths=(float(L),),
        indices=j[:, None],
        points=x[:, None],
        weights=w,
        synthesis=phi,
        synthesis_dx=dphi,
        analysis=(phi * w[:, None]).T,
        grid_shape=(M,),
    )


def rectangle_modes(Lx: float, Ly: float, J: int) -> tuple[NDArray, NDArray]:
    """First J (m, n) index pairs on a rectangle, ascending eigenvalue, ties lexicographic."""
    n_side = int(math.ceil(math.sqrt(J))) + 2
    # enlarge the candidate box until it provably contains the J smallest
    while True:
        m, n = np.meshgrid(np.arange(1, n_side + 1), np.arange(1, n_side + 1), indexing="ij")
        m = m.ravel()
        n = n.ravel()
        lam = math.pi**2 * (m**2 / Lx**2 + n**2 / Ly**2)
        key = np.round(lam, 10 - int(math.floor(math.log10(lam.max()))))
        order = np.lexsort((n, m, key))
        cutoff = lam[order[J - 1]]
        edge = math.pi**2 * min((n_side + 1) ** 2 / Lx**2, (n_side + 1) ** 2 / Ly**2)
        if edge > cutoff:
            break
        n_side *= 2
    sel = order[:J]
    return np.stack([m[sel], n[sel]], axis=1), lam[sel]


def dirichlet_2d(Lx: float, Ly: float, J: int, M: int | None = None) -> SpectralBasis:
    """Dirichlet Laplacian on a rectangle with tensor sine eigenfunctions.

    ``M`` is the number of interior grid points per axis; it defaults to three
    times the largest retained wave index.
    """
    if not (Lx > 0 and Ly > 0) or J < 1:
        raise DomainError("need positive side lengths and J >= 1")
    idx, lam = rectangle_modes(Lx, Ly, J)
    kmax = int(idx.max())
    M = 3 * kmax if M is None else int(M)
    _check_grid(M, kmax)
    x = Lx * np.arange(1, M + 1) / (M + 1)
    y = Ly * np.arange(1, M + 1) / (M + 1)
    sx = math.sqrt(2.0 / Lx) * np.sin(np.outer(x, idx[:, 0] * math.pi / Lx))
    sy = math.sqrt(2.0 / Ly) * np.sin(np.outer(y, idx[:, 1] * math.pi / Ly))
    phi = (sx[:, None, :] * sy[None, :, :]).reshape(M * M, J)
    X, Y = np.meshgrid(x, y, indexing="ij")
    w = np.full(M * M, Lx * Ly / (M + 1) ** 2)
    return SpectralBasis(
        kind="dirichlet_2d",
        lambdas=lam,
        lengths=(float(Lx), float(Ly)),
        indices=idx,
        points=np.stack([X.ravel(), Y.ravel()], axis=1),
        weights=w,
        synthesis=phi,
        analysis=(phi * w[:, None]).T,
        grid_shape=(M, M),
    )


def load_spectrum(path: str | Path, samples_path: str | Path | None = None) -> SpectralBasis:
    """Read a user spectrum from CSV with header ``j,lambda``.

    An optional sample matrix (rows are grid points, columns are modes) enables
    pointwise nonlinearities; coefficients are recovered by least squares.
    """
    path = Path(path)
    with path.open(newline="") as fh:
        reader = csv.reader(fh)
        header = [h.strip() for h in next(reader, [])]
        if header != ["j", "lambda"]:
            raise ConfigError("spectrum_file", f"header must be 'j,lambda', got {header}")
        rows = [r for r in reader if r and not r[0].lstrip().startswith("#")]
    try:
        j = np.array([int(r[0]) for r in rows])
        lam = np.array([float(r[1]) for r in rows])
    except (ValueError, IndexError) as exc:
        raise ConfigError("spectrum_file", f"unparsable row ({exc})") from None
    if lam.size == 0 or not np.array_equal(j, np.arange(1, lam.size + 1)):
        raise ConfigError("spectrum_file", "j must run 1, 2, ..., J")
    if np.any(lam <= 0) or np.any(np.diff(lam) < 0):
        raise ConfigError("spectrum_file", "eigenvalues must be positive and non-decreasing")
    if samples_path is None:
        return SpectralBasis(kind="user", lambdas=lam)
    S = np.loadtxt(samples_path, delimiter=",", ndmin=2, comments="#")
    if S.shape[1] != lam.size:
        raise ConfigError("samples_file", f"expected {lam.size} columns, got {S.shape[1]}")
    if S.shape[0] < 2 * lam.size + 1:
        raise AliasError(f"sample matrix has {S.shape[0]} rows, below {2 * lam.size + 1}")
    return SpectralBasis(
        kind="user",
        lambdas=lam,
        synthesis=S,
        analysis=np.linalg.pinv(S),
        grid_shape=(S.shape[0],),
    )


# ---------------------------------------------------------------------------
# Sobolev embedding checks
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class EmbeddingCheck:
    ok: bool
    violations: tuple[str, ...]


_TOL = 1e-12


def embedding_validator(kind: str, **p: float) -> EmbeddingCheck:
    """Check the parameter conditions of one of the standard embeddings.

    ``kind`` is one of

    * ``"sobolev"``: W^{sigma,p} into W^{gamma,q}; keys N, sigma, p, gamma, q.
    * ``"into_lebesgue"``: W^{sigma,2} into L^q; keys N, sigma, q.
    * ``"from_lebesgue"``: L^q into W^{sigma,2} with sigma <= 0; keys N, sigma, q.
    * ``"hilbert"``: H^s into W^{2s,2}; key s.
    """
    bad: list[str] = []

    def need(cond: bool, name: str) -> None:
        if not cond:
            bad.append(name)

    try:
        if kind == "sobolev":
            N, sig, pp, gam, qq = (float(p[k]) for k in ("N", "sigma", "p", "gamma", "q"))
            need(1 <= pp < math.inf, "1 <= p < inf")
            need(1 <= qq < math.inf, "1 <= q < inf")
            need(0 <= gam <= sig < math.inf, "0 <= gamma <= sigma")
            need(sig - gam >= N / pp - N / qq - _TOL, "sigma - gamma >= N/p - N/q")
        elif kind == "into_lebesgue":
            N, sig, qq = (float(p[k]) for k in ("N", "sigma", "q"))
            need(0 <= sig < N / 2, "0 <= sigma < N/2")
            need(1 <= qq <= 2 * N / (N - 2 * sig) * (1 + _TOL) if sig < N / 2 else False, "1 <= q <= 2N/(N-2 sigma)")
        elif kind == "from_lebesgue":
            N, sig, qq = (float(p[k]) for k in ("N", "sigma", "q"))
            need(-N / 2 < sig <= 0, "-N/2 < sigma <= 0")
            need(qq >= 2 * N / (N - 2 * sig) * (1 - _TOL), "q >= 2N/(N-2 sigma)")
        elif kind == "hilbert":
            need(float(p["s"]) >= 0, "s >= 0")
        else:
            raise DomainError(f"unknown embedding kind {kind!r}")
    except KeyError as exc:
        raise DomainError(f"missing parameter {exc} for embedding {kind!r}") from None
    return EmbeddingCheck(not bad, tuple(bad))
