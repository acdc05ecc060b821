"""Initial light states: Fock, coherent, thermal, Fock qubit and custom payloads."""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Any, Mapping, Optional, Union

import numpy as np
from scipy.special import gammaincc, gammaln

from .errors import TruncationError, ValidationError
from .fock import DensityMatrix, SpaceLike, StateVector, as_space, mean_annihilation

CAPTURE_TOL = 1e-10


@dataclass(frozen=True)
class Fock:
    n: int

    def __post_init__(self):
        if int(self.n) != self.n or self.n < 0:
            raise ValidationError(f"Fock number must be a nonnegative integer, got {self.n!r}")


@dataclass(frozen=True)
class Coherent:
    beta: complex


@dataclass(frozen=True)
class Thermal:
    nbar: float

    def __post_init__(self):
        if not (self.nbar >= 0 and math.isfinite(self.nbar)):
            raise ValidationError(f"thermal occupancy must be >= 0, got {self.nbar!r}")


@dataclass(frozen=True)
class FockQubit:
    """beta0 |0> + beta1 |1>."""

    beta0: complex
    beta1: complex

    def __post_init__(self):
        norm = abs(self.beta0) ** 2 + abs(self.beta1) ** 2
        if abs(norm - 1.0) > 1e-10:
            raise ValidationError(f"|beta0|^2 + |beta1|^2 = {norm!r}, expected 1")


@dataclass(frozen=True, eq=False)
class Custom:
    """Either a Fock-amplitude vector or a full density matrix."""

    payload: Any

    @property
    def is_vector(self) -> bool:
        return np.ndim(self.payload) == 1


StateSpec = Union[Fock, Coherent, Thermal, FockQubit, Custom]


def coherent_amplitudes(beta: complex, dim: int) -> np.ndarray:
    """Unnormalized-by-truncation amplitudes e^{-|b|^2/2} b^n / sqrt(n!)."""
    n = np.arange(dim)
    beta = complex(beta)
    if beta == 0:
        out = np.zeros(dim, dtype=complex)
        out[0] = 1.0
        return out
    r = abs(beta)
    log_mag = -0.5 * r * r + n * math.log(r) - 0.5 * gammaln(n + 1)
    return np.exp(log_mag) * (beta / r) ** n


def _check_capture(captured: float, what: str) -> None:
    if captured < 1.0 - CAPTURE_TOL:
        raise TruncationError(
            f"{what}: truncated space captures only {captured:.12f} of the population",
            captured=captured,
        )


def build_vector(spec: StateSpec, space: SpaceLike) -> StateVector:
    """Pure-state amplitudes for ``spec``; mixed specs raise ValidationError."""
    dim = as_space(space).dim
    if isinstance(spec, Fock):
        if spec.n >= dim:
            raise ValidationError(f"Fock level {spec.n} outside space of dim {dim}")
        amps = np.zeros(dim, dtype=complex)
        amps[spec.n] = 1.0
        return StateVector(amps)
    if isinstance(spec, Coherent):
        _check_capture(float(gammaincc(dim, abs(spec.beta) ** 2)), f"coherent({spec.beta})")
        return StateVector(coherent_amplitudes(spec.beta, dim))
    if isinstance(spec, FockQubit):
        amps = np.zeros(dim, dtype=complex)
        amps[:2] = spec.beta0, spec.beta1
        return StateVector(amps)
    if isinstance(spec, Custom) and spec.is_vector:
        amps = np.asarray(spec.payload, dtype=complex)
        if amps.size > dim:
            if np.linalg.norm(amps[dim:]) ** 2 > CAPTURE_TOL:
                raise TruncationError("custom vector has population beyond the space")
            amps = amps[:dim]
        return StateVector(np.pad(amps, (0, dim - amps.size)))
    raise ValidationError(f"{type(spec).__name__} spec is not a pure state")


def build_state(spec: StateSpec, space: SpaceLike) -> DensityMatrix:
    """Normalized density matrix for ``spec`` on ``space``.

    Raises TruncationError (carrying the captured population) when the space
    holds less than 1 - 1e-10 of the state.
    """
    dim = as_space(space).dim
    if isinstance(spec, Thermal):
        if spec.nbar == 0:
            return build_vector(Fock(0), dim).to_density()
        q = spec.nbar / (1.0 + spec.nbar)
        _check_capture(1.0 - q**dim, f"thermal({spec.nbar})")
        pops = q ** np.arange(dim) / (1.0 + spec.nbar)
        return DensityMatrix(np.diag(pops / pops.sum()))
    if isinstance(spec, Custom) and not spec.is_vector:
        m = np.asarray(spec.payload, dtype=complex)
        if m.shape[0] > dim:
            if np.trace(m[dim:, dim:]).real > CAPTURE_TOL:
                raise TruncationError("custom matrix has population beyond the space")
            m = m[:dim, :dim]
        pad = dim - m.shape[0]
        return DensityMatrix(np.pad(m, ((0, pad), (0, pad))))
    return build_vector(spec, dim).to_density()


def mean_a_of(spec: StateSpec, space: Optional[SpaceLike] = None) -> complex:
    """<a> of the spec; analytic except for custom payloads."""
    if isinstance(spec, (Fock, Thermal)):
        return 0j
    if isinstance(spec, Coherent):
        return complex(spec.beta)
    if isinstance(spec, FockQubit):
        return complex(spec.beta0).conjugate() * complex(spec.beta1)
    if isinstance(spec, Custom):
        n = space if space is not None else len(spec.payload)
        return mean_annihilation(build_state(spec, n))
    raise ValidationError(f"unknown state spec {spec!r}")


def mean_photon_number(spec: StateSpec, space: Optional[SpaceLike] = None) -> float:
    if isinstance(spec, Fock):
        return float(spec.n)
    if isinstance(spec, Coherent):
        return abs(spec.beta) ** 2
    if isinstance(spec, Thermal):
        return float(spec.nbar)
    if isinstance(spec, FockQubit):
        return abs(spec.beta1) ** 2
    n = space if space is not None else len(spec.payload)
    rho = build_state(spec, n)
    return float(np.dot(np.arange(rho.dim), rho.populations()))


def parse_complex(value) -> complex:
    """Accept a real number, [re, im] pair, or {"re":..., "im":...}."""
    if isinstance(value, Mapping):
        return complex(float(value.get("re", 0.0)), float(value.get("im", 0.0)))
    if isinstance(value, (list, tuple)):
        if len(value) != 2:
            raise ValidationError(f"complex value must be [re, im], got {value!r}")
        return complex(float(value[0]), float(value[1]))
    if isinstance(value, (int, float)) and not isinstance(value, bool):
        return complex(value)
    raise ValidationError(f"cannot read complex number from {value!r}")


def parse_state_spec(tree: Mapping) -> StateSpec:
    """Build a StateSpec from a tagged record such as {"kind": "coherent", "beta": [1, 0]}."""
    if not isinstance(tree, Mapping) or "kind" not in tree:
        raise ValidationError(f"state spec needs a 'kind' field, got {tree!r}")
    kind = tree["kind"]
    try:
        if kind == "fock":
            return Fock(int(tree["n"]))
        if kind == "coherent":
            return Coherent(parse_complex(tree["beta"]))
        if kind == "thermal":
            return Thermal(float(tree["nbar"]))
        if kind == "fock_qubit":
            return FockQubit(parse_complex(tree["beta0"]), parse_complex(tree["beta1"]))
        if kind == "custom":
            if "vector" in tree:
                return Custom(np.array([parse_complex(v) for v in tree["vector"]]))
            if "matrix" in tree:
                rows = [[parse_complex(v) for v in row] for row in tree["matrix"]]
                return Custom(np.array(rows))
            raise ValidationError("custom state needs 'vector' or 'matrix'")
    except KeyError as exc:
        raise ValidationError(f"state spec '{kind}' missing field {exc}") from None
    raise ValidationError(f"unknown state kind {kind!r}")
