"""Truncated Fock-space kernel.

States and operators live on the span of |0>, ..., |dim-1>.  Operators are
plain complex ``numpy`` arrays; states are thin immutable wrappers that
enforce normalization on construction.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Union

import numpy as np
from scipy.linalg import expm
from scipy.special import gammaln

from .errors import (
    AccuracyError,
    DimensionMismatchError,
    InvalidSpaceError,
    ValidationError,
)

OperatorMatrix = np.ndarray

NORM_TOL = 1e-12
RENORM_TOL = 1e-6
HERMITIAN_TOL = 1e-12
EIG_FLOOR = -1e-10


def _frozen(arr: np.ndarray) -> np.ndarray:
    arr = np.array(arr, dtype=complex, copy=True)
    arr.flags.writeable = False
    return arr


@dataclass(frozen=True)
class HilbertSpace:
    """Fock levels 0..dim-1 of a single bosonic mode."""

    dim: int

    def __post_init__(self):
        if not isinstance(self.dim, (int, np.integer)) or self.dim < 2:
            raise InvalidSpaceError(f"dim must be an integer >= 2, got {self.dim!r}")

    def identity(self) -> OperatorMatrix:
        return np.eye(self.dim, dtype=complex)


SpaceLike = Union[HilbertSpace, int]


def as_space(space: SpaceLike) -> HilbertSpace:
    return space if isinstance(space, HilbertSpace) else HilbertSpace(space)


@dataclass(frozen=True, eq=False)
class StateVector:
    """Normalized Fock amplitudes A_n = <n|psi>.

    Amplitudes whose norm is within 1e-6 of one are silently renormalized;
    anything further off is treated as a user error.
    """

    amps: np.ndarray

    def __post_init__(self):
        amps = np.asarray(self.amps, dtype=complex).ravel()
        if amps.size < 2:
            raise InvalidSpaceError("state vector needs at least two levels")
        if not np.all(np.isfinite(amps)):
            raise ValidationError("state amplitudes must be finite")
        norm = np.linalg.norm(amps)
        if abs(norm**2 - 1.0) > RENORM_TOL:
            raise ValidationError(f"state norm^2 = {norm**2:.6g} is not 1 within {RENORM_TOL}")
        object.__setattr__(self, "amps", _frozen(amps / norm))

    @property
    def dim(self) -> int:
        return self.amps.size

    @property
    def space(self) -> HilbertSpace:
        return HilbertSpace(self.dim)

    def to_density(self) -> "DensityMatrix":
        return DensityMatrix(np.outer(self.amps, self.amps.conj()))


@dataclass(frozen=True, eq=False)
class DensityMatrix:
    """Density matrix rho_mn = <m|rho|n>.

    Construction hermitizes and renormalizes inputs that are within 1e-6 of
    unit trace, then checks Hermiticity (1e-12), trace (1e-12) and the
    eigenvalue floor (-1e-10).
    """

    elems: np.ndarray

    def __post_init__(self):
        m = np.asarray(self.elems, dtype=complex)
        if m.ndim != 2 or m.shape[0] != m.shape[1]:
            raise ValidationError(f"density matrix must be square, got shape {m.shape}")
        if m.shape[0] < 2:
            raise InvalidSpaceError("density matrix needs at least two levels")
        if not np.all(np.isfinite(m)):
            raise ValidationError("density matrix entries must be finite")
        skew = np.abs(m - m.conj().T).max()
        if skew > RENORM_TOL * max(1.0, np.abs(m).max()):
            raise ValidationError(f"density matrix is not Hermitian (max skew {skew:.3g})")
        m = 0.5 * (m + m.conj().T)
        tr = np.trace(m).real
        if abs(tr - 1.0) > RENORM_TOL:
            raise ValidationError(f"density matrix trace {tr:.9g} is not 1 within {RENORM_TOL}")
        m = m / tr
        lo = np.linalg.eigvalsh(m).min()
        if lo < EIG_FLOOR:
            raise ValidationError(f"density matrix has negative eigenvalue {lo:.3g}")
        object.__setattr__(self, "elems", _frozen(m))

    @property
    def dim(self) -> int:
        return self.elems.shape[0]

    @property
    def space(self) -> HilbertSpace:
        return HilbertSpace(self.dim)

    def purity(self) -> float:
        return float(np.real(np.sum(self.elems * self.elems.T)))

    def populations(self) -> np.ndarray:
        return np.real(np.diag(self.elems)).copy()


def annihilation(space: SpaceLike) -> OperatorMatrix:
    """Ladder operator with <n-1|a|n> = sqrt(n)."""
    dim = as_space(space).dim
    return np.diag(np.sqrt(np.arange(1, dim, dtype=float)), 1).astype(complex)


def creation(space: SpaceLike) -> OperatorMatrix:
    return annihilation(space).conj().T


def number_operator(space: SpaceLike) -> OperatorMatrix:
    return np.diag(np.arange(as_space(space).dim, dtype=float)).astype(complex)


def xi_operator(space: SpaceLike) -> OperatorMatrix:
    """Operator sum_m |2m+1><2m| / sqrt(2m+1).

    It inverts the anticommutator with the annihilation operator,
    ``xi @ a + a @ xi == 1``, on every level except an even top level,
    where the partner |dim> is missing.
    """
    dim = as_space(space).dim
    xi = np.zeros((dim, dim), dtype=complex)
    odd = np.arange(1, dim, 2)
    xi[odd, odd - 1] = 1.0 / np.sqrt(odd)
    return xi


def laguerre(p: int, alpha: int, x: float) -> float:
    """Generalized Laguerre polynomial L_p^(alpha)(x).

    Uses the three-term recurrence
    (n+1) L_{n+1} = (2n+1+alpha-x) L_n - (n+alpha) L_{n-1}
    accumulated in extended precision so that cancellation near the roots
    stays below 1e-12 relative to max(1, |L|).
    """
    if p < 0 or int(p) != p:
        raise ValidationError(f"Laguerre degree must be a nonnegative integer, got {p!r}")
    if alpha < -p:
        raise ValidationError(f"Laguerre parameter alpha={alpha} below -p={-p}")
    p = int(p)
    x = np.longdouble(x)
    a = np.longdouble(alpha)
    prev = np.longdouble(1.0)
    if p == 0:
        return 1.0
    cur = 1 + a - x
    for n in range(1, p):
        prev, cur = cur, ((2 * n + 1 + a - x) * cur - (n + a) * prev) / (n + 1)
    return float(cur)


def guard_levels(kappa: complex) -> int:
    """Default guard band max(10, ceil(4|kappa|^2))."""
    return max(10, int(math.ceil(4 * abs(kappa) ** 2)))


def displacement_closed(kappa: complex, space: SpaceLike, *, max_exponent: float = 700.0) -> OperatorMatrix:
    """Matrix of D_{-kappa} = exp(-kappa a^dag + kappa^* a) from Laguerre kernels.

    Column m holds exp(-|kappa|^2/2) S_mp(kappa) over rows p:

    * p <= m: (kappa^*)^(m-p) sqrt(p!/m!) L_p^(m-p)(|kappa|^2)
    * p >  m: (-kappa)^(p-m) sqrt(m!/p!) L_m^(p-m)(|kappa|^2)

    Each diagonal band is generated by the recurrence for the normalized
    polynomial sqrt(n!/(n+d)!) L_n^(d), seeded with the prefactor
    exp(-x/2) x^(d/2) / sqrt(d!) computed through log-gamma.  That keeps all
    intermediate values of order one for any dimension.

    Parameters
    ----------
    kappa : complex
        displacement factor
    space : HilbertSpace or int
    max_exponent : float
        largest |kappa|^2 / 2 accepted before the Gaussian prefactor is
        considered to have underflowed.

    Returns
    -------
    numpy.ndarray
        dim x dim complex matrix, exact matrix elements of the infinite
        operator restricted to the retained levels.
    """
    dim = as_space(space).dim
    kappa = complex(kappa)
    if not np.isfinite(kappa):
        raise ValidationError("kappa must be finite")
    x = abs(kappa) ** 2
    if x == 0.0:
        return np.eye(dim, dtype=complex)
    if x / 2 > max_exponent:
        raise AccuracyError(
            f"|kappa|^2/2 = {x / 2:.3g} exceeds {max_exponent}; exp(-|kappa|^2/2) underflows"
        )
    log_x = math.log(x)
    below = cmath_phase(-kappa)
    above = cmath_phase(kappa.conjugate())
    # bands[n, d]: magnitude of <n+d|D|n>, all diagonals advanced together in n
    d = np.arange(dim, dtype=float)
    bands = np.zeros((dim, dim))
    bands[0] = np.exp(-x / 2 + 0.5 * d * log_x - 0.5 * gammaln(d + 1))
    if dim > 1:
        bands[1] = (1 + d - x) * bands[0] / np.sqrt(1 + d)
    for n in range(1, dim - 1):
        bands[n + 1] = (
            (2 * n + 1 + d - x) * bands[n] - np.sqrt(n * (n + d)) * bands[n - 1]
        ) / np.sqrt((n + 1) * (n + 1 + d))
    n_idx, d_idx = np.nonzero(np.add.outer(np.arange(dim), np.arange(dim)) < dim)
    mag = bands[n_idx, d_idx]
    out = np.zeros((dim, dim), dtype=complex)
    out[n_idx + d_idx, n_idx] = mag * below**d_idx
    upper = d_idx > 0
    out[n_idx[upper], n_idx[upper] + d_idx[upper]] = mag[upper] * above ** d_idx[upper]
    return out


def cmath_phase(z: complex) -> complex:
    r = abs(z)
    return z / r if r else 1.0 + 0j


def displacement_exp(kappa: complex, space: SpaceLike, *, pad: int = 0) -> OperatorMatrix:
    """Brute-force D_{-kappa} as expm(-kappa a^dag + kappa^* a).

    With ``pad > 0`` the exponential is taken on ``dim + pad`` levels and the
    leading ``dim`` block is returned, pushing the truncation defect of the
    generator away from the retained levels.
    """
    dim = as_space(space).dim
    big = dim + int(pad)
    a = annihilation(big)
    gen = -complex(kappa) * a.conj().T + complex(kappa).conjugate() * a
    return expm(gen)[:dim, :dim]


def certified_levels(kappa: complex, space: SpaceLike, tol: float = 1e-10) -> int:
    """Number of leading levels whose displaced image stays inside the space.

    Level m is certified when 1 - sum_p |<p|D|m>|^2 <= tol, i.e. displacement
    leaks at most ``tol`` of its population past the top level.
    """
    dim = as_space(space).dim
    d = displacement_closed(kappa, dim)
    leak = 1.0 - np.sum(np.abs(d) ** 2, axis=0)
    bad = np.nonzero(leak > tol)[0]
    return int(bad[0]) if bad.size else dim


def _elems(rho) -> np.ndarray:
    return rho.elems if isinstance(rho, DensityMatrix) else np.asarray(rho)


def expectation(rho: DensityMatrix, op: OperatorMatrix) -> complex:
    """tr(rho @ op)."""
    m = _elems(rho)
    op = np.asarray(op)
    if op.shape != m.shape:
        raise DimensionMismatchError(f"operator shape {op.shape} does not match state {m.shape}")
    return complex(np.einsum("ij,ji->", m, op))


def mean_annihilation(rho: DensityMatrix) -> complex:
    """<a> = sum_n sqrt(n+1) rho_{n+1,n}."""
    m = _elems(rho)
    lower = np.diagonal(m, offset=-1)
    return complex(np.sum(np.sqrt(np.arange(1, m.shape[0])) * lower))
