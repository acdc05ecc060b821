"""Propagation of quantum light through the bulk composite.

A forward mode splits into a coherent part riding on n1 and an incoherent
part riding on n2.  Referred to the incoherent carrier, the mode operator
becomes alpha(z) = a + kappa(z), so the state seen at depth z is the input
state displaced by kappa(z).
"""
from __future__ import annotations

import cmath
import math
from dataclasses import dataclass
from typing import Optional, Sequence, Tuple, Union

import numpy as np
from scipy.special import gammaln

from .errors import (
    ForbiddenZoneError,
    G2UndefinedError,
    TruncationError,
    ValidationError,
)
from .fock import (
    DensityMatrix,
    OperatorMatrix,
    SpaceLike,
    StateVector,
    annihilation,
    as_space,
    displacement_closed,
    displacement_exp,
    expectation,
    guard_levels,
    mean_annihilation,
)
from .medium import OpticalResponse

TRACE_DRIFT_TOL = 1e-8

State = Union[StateVector, DensityMatrix]


def _check_response(resp: OpticalResponse) -> None:
    if resp.forbidden:
        raise ForbiddenZoneError(f"omega = {resp.omega} lies in a forbidden zone")
    if resp.n1 == 0 or resp.n2 == 0:
        raise ForbiddenZoneError("a partial refractive index vanishes")


def kappa_at(z: float, mean_a: complex, resp: OpticalResponse) -> complex:
    """Displacement factor <a> [sqrt(n2/n1) exp(i (n1 - n2) k z) - 1]."""
    _check_response(resp)
    mean_a = complex(mean_a)
    if mean_a == 0 or resp.n1 == resp.n2:
        return 0j
    phase = cmath.exp(1j * (resp.n1 - resp.n2) * resp.k * z)
    return mean_a * (cmath.sqrt(resp.n2 / resp.n1) * phase - 1)


def _density(rho: State) -> DensityMatrix:
    return rho.to_density() if isinstance(rho, StateVector) else rho


def _displace(elems: np.ndarray, dmat: np.ndarray) -> Tuple[np.ndarray, float]:
    out = dmat @ elems @ dmat.conj().T
    drift = abs(1.0 - np.trace(out).real)
    return out, drift


def _finish(out: np.ndarray, drift: float, kappa: complex) -> DensityMatrix:
    if drift > TRACE_DRIFT_TOL:
        raise TruncationError(
            f"displacement by kappa={kappa:.6g} leaks {drift:.3g} of the trace past the top level; "
            f"raise dim (guard band for this kappa is {guard_levels(kappa)} levels)",
            captured=1.0 - drift,
        )
    return DensityMatrix(out)


def transform_density(rho_in: State, kappa: complex) -> DensityMatrix:
    """rho' = D_kappa^dag rho D_kappa, which carries |beta> to |beta + kappa>.

    The conjugating matrix is the Laguerre-kernel displacement.  Trace lost
    to truncation is restored when it is at most 1e-8; beyond that a
    TruncationError is raised.  kappa == 0 returns the input untouched.
    """
    rho = _density(rho_in)
    kappa = complex(kappa)
    if kappa == 0:
        return rho
    return _finish(*_displace(rho.elems, displacement_closed(-kappa, rho.dim)), kappa)


def trace_drift(rho_in: State, kappa: complex) -> float:
    """Population lost past the top level by transform_density, before renormalizing."""
    rho = _density(rho_in)
    if complex(kappa) == 0:
        return 0.0
    return _displace(rho.elems, displacement_closed(-complex(kappa), rho.dim))[1]


def transform_density_oracle(rho_in: State, kappa: complex, pad: int = 0) -> DensityMatrix:
    """Same channel with the displacement from a dense matrix exponential."""
    rho = _density(rho_in)
    kappa = complex(kappa)
    if kappa == 0:
        return rho
    return _finish(*_displace(rho.elems, displacement_exp(-kappa, rho.dim, pad=pad)), kappa)


def fock_qubit_closed(beta0: complex, beta1: complex, kappa: complex, space: SpaceLike) -> StateVector:
    """Displaced Fock qubit D_kappa^dag (beta0|0> + beta1|1>) in closed form.

    Amplitudes exp(-|k|^2/2) k^n / sqrt(n!) (beta0 - beta1 k^* + beta1 n / k).
    """
    dim = as_space(space).dim
    beta0, beta1, kappa = complex(beta0), complex(beta1), complex(kappa)
    if abs(abs(beta0) ** 2 + abs(beta1) ** 2 - 1.0) > 1e-10:
        raise ValidationError("Fock-qubit coefficients must be normalized")
    if kappa == 0:
        amps = np.zeros(dim, dtype=complex)
        amps[:2] = beta0, beta1
        return StateVector(amps)
    n = np.arange(dim)
    r = abs(kappa)
    coh = np.exp(-0.5 * r * r + n * math.log(r) - 0.5 * gammaln(n + 1)) * (kappa / r) ** n
    amps = coh * (beta0 - beta1 * kappa.conjugate() + beta1 * n / kappa)
    norm2 = float(np.sum(np.abs(amps) ** 2))
    if abs(norm2 - 1.0) > 1e-10:
        raise TruncationError(f"dim={dim} holds only {norm2:.12f} of the displaced qubit", captured=norm2)
    return StateVector(amps)


# --- second-order coherence -------------------------------------------------


def _alpha_mean_photons(mean_n: float, mean_a: complex, kappa: complex) -> float:
    # <alpha^dag alpha> = <n> + |<a> + kappa|^2 - |<a>|^2; with real indices the
    # last two terms reduce to (n2/n1 - 1)|<a>|^2
    return mean_n + abs(mean_a + kappa) ** 2 - abs(mean_a) ** 2


def g2_paper(state: StateVector, z: float, resp: OpticalResponse,
             mean_a: Optional[complex] = None) -> float:
    """Closed-form g2(z) of a pure state from its Fock amplitudes.

    numerator   sum_n |k^2 A_{n-1} + 2 k sqrt(n) A_n + sqrt(n(n+1)) A_{n+1}|^2
    denominator [sum_n n |A_n|^2 + (n2/n1 - 1)|<a>|^2]^2

    The numerator runs one level past the space so the k^2 A_{dim-1} term is
    kept.  For complex indices the bracket uses |<a> + k|^2 - |<a>|^2, which
    equals the real-index expression when n2/n1 is real.
    """
    if not isinstance(state, StateVector):
        raise ValidationError("g2_paper needs a pure StateVector; use g2_oracle for mixed states")
    A = state.amps
    dim = A.size
    if mean_a is None:
        mean_a = complex(np.sum(np.sqrt(np.arange(1, dim)) * A[:-1].conj() * A[1:]))
    kappa = kappa_at(z, mean_a, resp)
    # shifted copy, Ap[j + 1] = A_j, zero outside the space
    Ap = np.zeros(dim + 3, dtype=complex)
    Ap[1 : dim + 1] = A
    n = np.arange(1, dim + 1)
    terms = kappa**2 * Ap[n] + 2 * kappa * np.sqrt(n) * Ap[n + 1] + np.sqrt(n * (n + 1.0)) * Ap[n + 2]
    num = float(np.sum(np.abs(terms) ** 2))
    mean_n = float(np.dot(np.arange(dim), np.abs(A) ** 2))
    den = _alpha_mean_photons(mean_n, mean_a, kappa)
    if den <= 0:
        raise G2UndefinedError("no photons in the mode at this depth: g2 is 0/0")
    return num / den**2


def g2_oracle(rho: State, z: float, resp: OpticalResponse,
              mean_a: Optional[complex] = None) -> float:
    """tr(rho alpha^dag^2 alpha^2) / tr(rho alpha^dag alpha)^2 with alpha = a + kappa(z)."""
    rho = _density(rho)
    if mean_a is None:
        mean_a = mean_annihilation(rho)
    kappa = kappa_at(z, mean_a, resp)
    alpha = annihilation(rho.dim) + kappa * np.eye(rho.dim)
    alpha_dag = alpha.conj().T
    den = expectation(rho, alpha_dag @ alpha).real
    if den <= 0:
        raise G2UndefinedError("no photons in the mode at this depth: g2 is 0/0")
    num = expectation(rho, alpha_dag @ alpha_dag @ alpha @ alpha).real
    return num / den**2


def g2(state: State, z: float, resp: OpticalResponse, mean_a: Optional[complex] = None) -> float:
    """Pure states use the amplitude formula, mixed states the trace."""
    if isinstance(state, StateVector):
        return g2_paper(state, z, resp, mean_a)
    return g2_oracle(state, z, resp, mean_a)


# --- fields and energy flux -------------------------------------------------


@dataclass(frozen=True)
class FieldMode:
    """Affine mode operator c_coh <a> + c_inc (a - <a>) at depth z.

    ``kind`` is "E" (polarization e_y, overall factor i) or "H"
    (polarization e_x, overall factor -i); field scale sqrt(hbar k / A) = 1.
    """

    z: float
    c_coh: complex
    c_inc: complex
    kind: str

    @property
    def prefactor(self) -> complex:
        return 1j if self.kind == "E" else -1j

    @property
    def polarization(self) -> np.ndarray:
        return np.array([0.0, 1.0, 0.0]) if self.kind == "E" else np.array([1.0, 0.0, 0.0])

    def operator(self, mean_a: complex, space: SpaceLike) -> OperatorMatrix:
        """Scalar amplitude operator (without prefactor and polarization)."""
        space = as_space(space)
        eye = space.identity()
        return self.c_coh * mean_a * eye + self.c_inc * (annihilation(space) - mean_a * eye)

    def mean(self, mean_a: complex) -> complex:
        """<field> including the i / -i prefactor."""
        return self.prefactor * self.c_coh * complex(mean_a)


def field_mode(z: float, resp: OpticalResponse, kind: str = "E") -> FieldMode:
    _check_response(resp)
    if kind not in ("E", "H"):
        raise ValidationError(f"field kind must be 'E' or 'H', got {kind!r}")
    n1, n2, k = resp.n1, resp.n2, resp.k
    e1 = cmath.exp(1j * k * n1 * z)
    e2 = cmath.exp(1j * k * n2 * z)
    if kind == "E":
        return FieldMode(z, e1 / cmath.sqrt(n1), e2 / cmath.sqrt(n2), kind)
    return FieldMode(z, e1 * cmath.sqrt(n1), e2 * cmath.sqrt(n2), kind)


def poynting_flux(state: State, z: float, resp: OpticalResponse,
                  mean_a: Optional[complex] = None) -> float:
    """z component of Re <E^dag x H> for the forward mode, in units hbar k / A.

    E = i e_y eps, H = -i e_x eta, so E^dag x H = e_z eps^dag eta.
    """
    rho = _density(state)
    if mean_a is None:
        mean_a = mean_annihilation(rho)
    e_mode = field_mode(z, resp, "E")
    h_mode = field_mode(z, resp, "H")
    eps = e_mode.operator(mean_a, rho.dim)
    eta = h_mode.operator(mean_a, rho.dim)
    cross = np.cross(e_mode.polarization, h_mode.polarization)
    pref = (e_mode.prefactor.conjugate() * h_mode.prefactor).real
    return float(pref * cross[2] * expectation(rho, eps.conj().T @ eta).real)


def wave_step(resp: OpticalResponse, divisions: int = 2048) -> float:
    """Finite-difference step: the shorter of L0 and the shortest wavelength, over ``divisions``."""
    wavelength = 2 * math.pi / (resp.k * max(abs(resp.n1), abs(resp.n2)))
    return min(resp.L0, wavelength) / divisions


def wave_residuals(z: Sequence[float], mean_a: complex, resp: OpticalResponse,
                   h: Optional[float] = None) -> Tuple[float, float]:
    """Relative residuals of the two Helmholtz equations at the points ``z``.

    The mean field <E>(z) must satisfy f'' + k^2 n1^2 f = 0 and the
    coefficient of (a - <a>) must satisfy f'' + k^2 n2^2 f = 0.  Second
    derivatives come from a fourth-order central stencil; each residual is
    max |f'' + k^2 n^2 f| / max |k^2 n^2 f|.
    """
    _check_response(resp)
    if h is None:
        h = wave_step(resp)
    z = np.asarray(z, dtype=float)
    offsets = np.array([-2, -1, 0, 1, 2]) * h
    weights = np.array([-1, 16, -30, 16, -1]) / (12 * h * h)
    pts = z[:, None] + offsets[None, :]

    def residual(fn, n):
        vals = fn(pts)
        d2 = vals @ weights
        target = (resp.k * n) ** 2 * vals[:, 2]
        return float(np.abs(d2 + target).max() / np.abs(target).max())

    coh = lambda s: 1j * complex(mean_a) * np.exp(1j * resp.k * resp.n1 * s) / cmath.sqrt(resp.n1)
    inc = lambda s: 1j * np.exp(1j * resp.k * resp.n2 * s) / cmath.sqrt(resp.n2)
    res_coh = residual(coh, resp.n1) if mean_a != 0 else 0.0
    return res_coh, residual(inc, resp.n2)


# --- one depth sample ---------------------------------------------------------


@dataclass(frozen=True)
class PropagationPoint:
    z: float
    kappa: complex
    rho_out: DensityMatrix
    g2: Optional[float]  # None when undefined (0/0)
    flux: float
    trace_drift: float
    lossy: bool


def propagate_point(state: State, z: float, resp: OpticalResponse,
                    mean_a: Optional[complex] = None) -> PropagationPoint:
    """Everything reported at one depth: kappa, displaced state, g2, flux."""
    rho = _density(state)
    if mean_a is None:
        mean_a = mean_annihilation(rho)
    kappa = kappa_at(z, mean_a, resp)
    drift = trace_drift(rho, kappa)
    rho_out = transform_density(rho, kappa)
    try:
        g2_val = g2(state, z, resp, mean_a)
    except G2UndefinedError:
        g2_val = None
    flux = poynting_flux(rho, z, resp, mean_a)
    return PropagationPoint(z, kappa, rho_out, g2_val, flux, drift, resp.lossy)
