"""Optical response of a dilute quantum-dot composite.

Conventions: time dependence exp(-i omega t), forward waves exp(+i k n z),
host permittivity rescaled to one.  The lossless "+i0" of the resonance
denominators is replaced by a finite damping ``gamma``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Optional, Tuple, Union

import numpy as np
from scipy.integrate import quad

from .errors import PoleError, QuadratureError, ValidationError
from .fock import OperatorMatrix, SpaceLike, annihilation, as_space, xi_operator

HBAR_CGS = 1.054571817e-27  # erg s
C_CGS = 2.99792458e10  # cm / s

UNITS_MODES = ("physical", "dimensionless")


@dataclass(frozen=True)
class MediumParams:
    """Physical parameters of the composite.

    In ``dimensionless`` mode hbar = c = 1 and frequencies are expected in
    units of the depolarization shift.  ``gamma=None`` selects the default
    regularization 1e-6 * delta_omega.
    """

    omega0: float
    delta_omega: float
    mu_sq: float
    vol: float
    rho: float
    gamma: Optional[float] = None
    units_mode: str = "dimensionless"
    light_speed: Optional[float] = None

    def __post_init__(self):
        if self.units_mode not in UNITS_MODES:
            raise ValidationError(f"units_mode must be one of {UNITS_MODES}, got {self.units_mode!r}")
        for name in ("omega0", "delta_omega", "mu_sq", "vol", "rho"):
            val = getattr(self, name)
            if not isinstance(val, (int, float)) or not math.isfinite(val):
                raise ValidationError(f"{name} must be a finite number, got {val!r}")
        if self.vol <= 0 or self.mu_sq <= 0:
            raise ValidationError("vol and mu_sq must be positive")
        if self.delta_omega < 0 or self.rho < 0:
            raise ValidationError("delta_omega and rho must be nonnegative")
        if self.gamma is None:
            object.__setattr__(self, "gamma", 1e-6 * self.delta_omega)
        if self.gamma < 0:
            raise ValidationError(f"gamma must be >= 0, got {self.gamma}")

    @property
    def hbar(self) -> float:
        return HBAR_CGS if self.units_mode == "physical" else 1.0

    @property
    def c(self) -> float:
        if self.light_speed is not None:
            return self.light_speed
        return C_CGS if self.units_mode == "physical" else 1.0

    @property
    def omega1(self) -> float:
        return self.omega0 + self.delta_omega

    @property
    def coupling(self) -> float:
        """4 pi rho |mu|^2 / (hbar V), the oscillator strength in frequency units."""
        return 4 * math.pi * self.rho * self.mu_sq / (self.hbar * self.vol)

    def with_host_permittivity(self, eps_h: float) -> "MediumParams":
        """Fold a real host permittivity in via c -> c/sqrt(eps_h), mu -> mu/sqrt(eps_h)."""
        if eps_h <= 0:
            raise ValidationError("host permittivity must be positive")
        return replace(self, light_speed=self.c / math.sqrt(eps_h), mu_sq=self.mu_sq / eps_h)


@dataclass(frozen=True)
class OpticalResponse:
    omega: float
    k: float
    f1: complex
    f2: complex
    n1: complex
    n2: complex
    L0: float
    forbidden: bool

    @classmethod
    def from_indices(cls, n1: complex, n2: complex, k: float, rho: float = 1.0) -> "OpticalResponse":
        """Response with prescribed partial indices (frequency set to k, c = 1)."""
        n1, n2 = complex(n1), complex(n2)
        f1 = (n1 * n1 - 1) * k * k / (4 * math.pi * rho)
        f2 = (n2 * n2 - 1) * k * k / (4 * math.pi * rho)
        forbidden = (n1 * n1).real <= 0 or (n2 * n2).real <= 0
        return cls(k, k, f1, f2, n1, n2, modulation_period(n1, n2, k), forbidden)

    @property
    def lossy(self) -> bool:
        return self.n1.imag != 0 or self.n2.imag != 0

    @property
    def index_ratio(self) -> complex:
        return self.n2 / self.n1


def principal_index(n_sq: complex) -> complex:
    """Square root with Re(n) >= 0, and Im(n) >= 0 on the imaginary axis."""
    n = complex(np.sqrt(complex(n_sq)))
    if n.real < 0 or (n.real == 0 and n.imag < 0):
        n = -n
    return n


def modulation_period(n1: complex, n2: complex, k: float) -> float:
    """Beating period 2 pi / (|n1 - n2| k); infinity when n1 == n2."""
    diff = abs(complex(n1) - complex(n2))
    return math.inf if diff == 0 else 2 * math.pi / (diff * k)


def _resonance_denominators(omega: float, p: MediumParams, gamma: float) -> Tuple[complex, complex]:
    den1 = complex(omega - p.omega1, gamma)
    den2 = complex(omega - p.omega0, gamma)
    if den1 == 0 or den2 == 0:
        raise PoleError(f"omega = {omega} sits on a lossless resonance")
    return den1, den2


def partial_amplitudes(omega: float, p: MediumParams) -> Tuple[complex, complex]:
    """Forward amplitudes f_j = -(k^2 |mu|^2 / hbar V) / (omega - omega_j + i gamma).

    omega_1 = omega0 + delta_omega (coherent channel), omega_2 = omega0.
    """
    if omega <= 0:
        raise ValidationError(f"omega must be positive, got {omega}")
    k = omega / p.c
    den1, den2 = _resonance_denominators(omega, p, p.gamma)
    strength = k * k * p.mu_sq / (p.hbar * p.vol)
    return -strength / den1, -strength / den2


def refractive_indices(omega: float, p: MediumParams) -> OpticalResponse:
    """Partial indices n_j^2 = 1 + 4 pi rho f_j / k^2, beating period and forbidden flag."""
    f1, f2 = partial_amplitudes(omega, p)
    k = omega / p.c
    scale = 4 * math.pi * p.rho / (k * k)
    n1 = principal_index(1 + scale * f1)
    n2 = principal_index(1 + scale * f2)
    try:
        lossless1, lossless2 = _resonance_denominators(omega, p, 0.0)
        g = p.coupling
        forbidden = (1 - g / lossless1).real <= 0 or (1 - g / lossless2).real <= 0
    except PoleError:
        forbidden = True
    return OpticalResponse(omega, k, f1, f2, n1, n2, modulation_period(n1, n2, k), forbidden)


def f0_operator(mean_a: complex, resp: OpticalResponse, space: SpaceLike) -> OperatorMatrix:
    """Forward-amplitude operator 2<a>(f1 - f2) xi + f2."""
    space = as_space(space)
    return 2 * mean_a * (resp.f1 - resp.f2) * xi_operator(space) + resp.f2 * space.identity()


def verify_f0_equation(fhat: OperatorMatrix, mean_a: complex, f1: complex, f2: complex,
                       space: SpaceLike) -> float:
    """Max-norm of f a + a f - 2 f2 a - 2 <a>(f1 - f2) on kets |n>, n <= dim-2."""
    space = as_space(space)
    a = annihilation(space)
    res = fhat @ a + a @ fhat - 2 * f2 * a - 2 * mean_a * (f1 - f2) * space.identity()
    return float(np.abs(res[:, : space.dim - 1]).max())


def permittivity_operator(mean_a: complex, resp: OpticalResponse, space: SpaceLike) -> OperatorMatrix:
    """eps = 2<a> xi n1^2 + (1 - 2<a> xi) n2^2.  Not Hermitian when <a> != 0."""
    space = as_space(space)
    two_xi = 2 * mean_a * xi_operator(space)
    return two_xi * resp.n1**2 + (space.identity() - two_xi) * resp.n2**2


def polarizability_operator(omega: float, p: MediumParams, mean_E0: complex,
                            space: SpaceLike) -> OperatorMatrix:
    """Dipole operator of one dot driven by the field E0 = a (unit field scale).

    P = -(|mu|^2 / hbar V) / (omega - omega0 + i gamma)
        * [E0 + delta_omega <E0> / (omega - omega0 - delta_omega + i gamma)]
    """
    space = as_space(space)
    den1, den2 = _resonance_denominators(omega, p, p.gamma)
    bracket = annihilation(space) + p.delta_omega * mean_E0 / den1 * space.identity()
    return -(p.mu_sq / (p.hbar * p.vol)) / den2 * bracket


def polarization_from_amplitude(fhat: OperatorMatrix, field_op: OperatorMatrix, k: float) -> OperatorMatrix:
    """Symmetrized dipole (f E + E f) / (2 k^2) of one scatterer."""
    return (fhat @ field_op + field_op @ fhat) / (2 * k * k)


def displacement_field(eps_hat: OperatorMatrix, field_op: OperatorMatrix) -> OperatorMatrix:
    """Operator constitutive relation D = (eps E + E eps) / 2."""
    return 0.5 * (eps_hat @ field_op + field_op @ eps_hat)


# --- depolarization ---------------------------------------------------------


@dataclass(frozen=True)
class UniformEllipsoid:
    """|xi|^2 = 1/V inside an axis-aligned ellipsoid with the given semi-axes."""

    semi_axes: Tuple[float, float, float]

    def __post_init__(self):
        if len(self.semi_axes) != 3 or min(self.semi_axes) <= 0:
            raise ValidationError(f"semi-axes must be three positive lengths, got {self.semi_axes!r}")

    @property
    def volume(self) -> float:
        a, b, c = self.semi_axes
        return 4 * math.pi * a * b * c / 3

    @property
    def overlap(self) -> float:
        """Integral of |xi|^4."""
        return 1.0 / self.volume


@dataclass(frozen=True, eq=False)
class GridEnvelope:
    """|xi(r)|^2 sampled on a regular cubic grid of spacing ``h``.

    ``volume`` defaults to the volume of the cells where the envelope is
    nonzero, which is the dot volume for a uniform envelope.
    """

    values: np.ndarray
    h: float
    volume: Optional[float] = None
    norm_tol: float = 1e-3

    def __post_init__(self):
        vals = np.asarray(self.values, dtype=float)
        if vals.ndim != 3:
            raise ValidationError("envelope grid must be three-dimensional")
        if self.h <= 0:
            raise ValidationError("grid spacing must be positive")
        if np.any(vals < 0) or not np.all(np.isfinite(vals)):
            raise ValidationError("|xi|^2 must be finite and nonnegative")
        total = vals.sum() * self.h**3
        if abs(total - 1.0) > self.norm_tol:
            raise ValidationError(f"envelope integrates to {total:.6g}, expected 1")
        vals = vals / total
        vals.flags.writeable = False
        object.__setattr__(self, "values", vals)
        if self.volume is None:
            object.__setattr__(self, "volume", float(np.count_nonzero(vals)) * self.h**3)

    @property
    def overlap(self) -> float:
        return float(np.sum(self.values**2) * self.h**3)

    @classmethod
    def ellipsoid(cls, semi_axes, h: float) -> "GridEnvelope":
        """Voxelized uniform ellipsoid (cell centres inside the surface)."""
        a = np.asarray(semi_axes, dtype=float)
        axes = [np.arange(-math.ceil(s / h), math.ceil(s / h)) * h + h / 2 for s in a]
        x, y, z = np.meshgrid(*axes, indexing="ij")
        inside = (x / a[0]) ** 2 + (y / a[1]) ** 2 + (z / a[2]) ** 2 <= 1.0
        vals = inside.astype(float)
        return cls(vals / (vals.sum() * h**3), h)


Envelope = Union[str, UniformEllipsoid, GridEnvelope]


def ellipsoid_depolarization_factors(semi_axes) -> np.ndarray:
    """Classical factors N_i = (abc/2) int_0^inf ds / ((s + a_i^2) R(s)), summing to 1."""
    a, b, c = (float(s) for s in semi_axes)

    def factor(ai):
        def integrand(s):
            return 1.0 / ((s + ai * ai) * math.sqrt((s + a * a) * (s + b * b) * (s + c * c)))
        val, _ = quad(integrand, 0, math.inf, epsabs=1e-14, epsrel=1e-12, limit=200)
        return a * b * c / 2 * val

    return np.array([factor(a), factor(b), factor(c)])


def _spectral_depolarization(env: GridEnvelope, pad: int) -> np.ndarray:
    """N_ij = V int d^3k/(2pi)^3 |rho(k)|^2 k_i k_j / k^2 on a zero-padded grid."""
    # cubic box: the dipole lattice sum of the periodic images then vanishes
    shape = (pad * max(env.values.shape),) * 3
    power = np.abs(np.fft.fftn(env.values, s=shape, axes=(0, 1, 2))) ** 2
    ks = np.meshgrid(*[np.fft.fftfreq(n) for n in shape], indexing="ij")
    k2 = ks[0] ** 2 + ks[1] ** 2 + ks[2] ** 2
    k2[0, 0, 0] = 1.0
    out = np.empty((3, 3))
    for i in range(3):
        for j in range(i, 3):
            w = ks[i] * ks[j] / k2
            w[0, 0, 0] = 1.0 / 3.0 if i == j else 0.0
            out[i, j] = out[j, i] = np.sum(power * w)
    return env.volume * env.h**3 * out / np.prod(shape)


def depolarization_tensor(envelope: Envelope, *, tol: float = 5e-3) -> np.ndarray:
    """Depolarization tensor of the exciton envelope.

    ``"uniform_sphere"`` returns I/3, a :class:`UniformEllipsoid` the
    classical ellipsoid factors, and a :class:`GridEnvelope` a spectral
    quadrature of the Coulomb double integral.  In Fourier space the kernel
    becomes k k / k^2, so the 1/r^3 singularity never has to be sampled.
    The grid estimate is repeated with two zero-padding factors; if they
    differ by more than ``tol`` a QuadratureError is raised.
    """
    if isinstance(envelope, str):
        if envelope != "uniform_sphere":
            raise ValidationError(f"unknown analytic envelope {envelope!r}")
        return np.eye(3) / 3.0
    if isinstance(envelope, UniformEllipsoid):
        return np.diag(ellipsoid_depolarization_factors(envelope.semi_axes))
    if isinstance(envelope, GridEnvelope):
        if not np.any(envelope.values):
            raise ValidationError("envelope is identically zero")
        coarse = _spectral_depolarization(envelope, 2)
        fine = _spectral_depolarization(envelope, 3)
        err = np.abs(fine - coarse).max()
        if err > tol:
            raise QuadratureError(f"spectral quadrature unconverged: padding changes N by {err:.3g}")
        return fine
    raise ValidationError(f"unsupported envelope {envelope!r}")


def depolarization_shift(mu_vec, vol: float, N, hbar: float = 1.0) -> float:
    """Local-field shift (4 pi / hbar V) mu . N mu.

    Pass ``hbar=HBAR_CGS`` for Gaussian units.
    """
    mu = np.asarray(mu_vec, dtype=complex)
    N = np.asarray(N, dtype=float)
    if mu.shape != (3,) or N.shape != (3, 3):
        raise ValidationError("need a 3-vector dipole and a 3x3 tensor")
    if vol <= 0:
        raise ValidationError("volume must be positive")
    if np.abs(N - N.T).max() > 1e-12 * max(1.0, np.abs(N).max()):
        raise ValidationError("depolarization tensor must be symmetric")
    return float(4 * math.pi / (hbar * vol) * np.vdot(mu, N @ mu).real)
