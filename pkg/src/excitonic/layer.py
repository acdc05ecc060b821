"""Planar composite slab at normal incidence.

The coherent part of the field sees a slab of index n1 and the fluctuation
part a slab of index n2.  Outgoing operators are therefore affine in the
incoming ones:

    a_out(+) = T2 a(+) + R2 a(-) + (T1 - T2)<a(+)> + (R1 - R2)<a(-)>

and likewise with + and - exchanged.  The shift is what makes the output
mean T1 <a(+)> + R1 <a(-)> while fluctuations pick up T2 and R2.
"""
from __future__ import annotations

import cmath
import math
import warnings
from dataclasses import dataclass
from typing import Tuple

import numpy as np

from .errors import ForbiddenZoneError, ValidationError
from .fock import OperatorMatrix, SpaceLike, annihilation, as_space
from .medium import MediumParams, OpticalResponse, refractive_indices

RESONANCE_WARN = 1e-14


class ConditioningWarning(RuntimeWarning):
    pass


@dataclass(frozen=True)
class LayerSpec:
    d: float
    medium: MediumParams
    omega: float

    def __post_init__(self):
        if not (self.d > 0 and math.isfinite(self.d)):
            raise ValidationError(f"layer thickness must be positive, got {self.d!r}")


@dataclass(frozen=True)
class LayerResponse:
    T1: complex
    R1: complex
    T2: complex
    R2: complex

    def unitarity_defect(self) -> Tuple[float, float]:
        return (abs(self.T1) ** 2 + abs(self.R1) ** 2 - 1.0,
                abs(self.T2) ** 2 + abs(self.R2) ** 2 - 1.0)


def slab_amplitudes(n: complex, k: float, d: float) -> Tuple[complex, complex]:
    """Airy transmission and reflection of a vacuum-clad slab.

    r = (1 - n)/(1 + n), phi = n k d,
    R = r (1 - e^{2i phi}) / (1 - r^2 e^{2i phi}),
    T = (1 - r^2) e^{i phi} / (1 - r^2 e^{2i phi}).
    """
    n = complex(n)
    if n == 0:
        raise ValidationError("slab index must be nonzero")
    r = (1 - n) / (1 + n)
    e1 = cmath.exp(1j * n * k * d)
    e2 = e1 * e1
    den = 1 - r * r * e2
    if abs(den) < RESONANCE_WARN:
        warnings.warn(f"slab resonance denominator |1 - r^2 e^(2i phi)| = {abs(den):.3g}",
                      ConditioningWarning, stacklevel=2)
    return (1 - r * r) * e1 / den, r * (1 - e2) / den


def response_from_indices(resp: OpticalResponse, d: float) -> LayerResponse:
    if resp.forbidden:
        raise ForbiddenZoneError(f"omega = {resp.omega} lies in a forbidden zone")
    T1, R1 = slab_amplitudes(resp.n1, resp.k, d)
    T2, R2 = slab_amplitudes(resp.n2, resp.k, d)
    return LayerResponse(T1, R1, T2, R2)


def layer_response(spec: LayerSpec) -> LayerResponse:
    return response_from_indices(refractive_indices(spec.omega, spec.medium), spec.d)


def output_means(a_plus_mean: complex, a_minus_mean: complex,
                 resp: LayerResponse) -> Tuple[complex, complex]:
    """<a_out(+-)> = T1 <a(+-)> + R1 <a(-+)>."""
    return (resp.T1 * a_plus_mean + resp.R1 * a_minus_mean,
            resp.T1 * a_minus_mean + resp.R1 * a_plus_mean)


@dataclass(frozen=True)
class AffineOutput:
    """c-number shift plus coefficients of a(+) and a(-)."""

    shift: complex
    coef_plus: complex
    coef_minus: complex

    def commutator(self) -> float:
        """[b, b^dag] for independent input modes."""
        return abs(self.coef_plus) ** 2 + abs(self.coef_minus) ** 2

    def matrix(self, space: SpaceLike) -> OperatorMatrix:
        """Realization on the two-mode space, ordered plus (x) minus."""
        space = as_space(space)
        a = annihilation(space)
        eye = space.identity()
        return (self.shift * np.kron(eye, eye)
                + self.coef_plus * np.kron(a, eye)
                + self.coef_minus * np.kron(eye, a))


def output_operator(direction: str, resp: LayerResponse,
                    means: Tuple[complex, complex]) -> AffineOutput:
    """Outgoing annihilation operator towards ``direction`` ("+" or "-")."""
    m_plus, m_minus = complex(means[0]), complex(means[1])
    if direction == "+":
        same, other = m_plus, m_minus
        shift = (resp.T1 - resp.T2) * same + (resp.R1 - resp.R2) * other
        return AffineOutput(shift, resp.T2, resp.R2)
    if direction == "-":
        same, other = m_minus, m_plus
        shift = (resp.T1 - resp.T2) * same + (resp.R1 - resp.R2) * other
        return AffineOutput(shift, resp.R2, resp.T2)
    raise ValidationError(f"direction must be '+' or '-', got {direction!r}")


def photocurrent(mean_n: float, mean_a: complex, resp: LayerResponse) -> float:
    """Transmitted detector signal |T2|^2 <n> + (|T1|^2 - |T2|^2)|<a>|^2, one-sided input."""
    t1, t2 = abs(resp.T1) ** 2, abs(resp.T2) ** 2
    return t2 * mean_n + (t1 - t2) * abs(mean_a) ** 2


def reflected_photocurrent(mean_n: float, mean_a: complex, resp: LayerResponse) -> float:
    """Same signal on the input side, |R2|^2 <n> + (|R1|^2 - |R2|^2)|<a>|^2."""
    r1, r2 = abs(resp.R1) ** 2, abs(resp.R2) ** 2
    return r2 * mean_n + (r1 - r2) * abs(mean_a) ** 2
