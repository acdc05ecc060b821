"""Brute-force oracles and seeded random cases for cross-checking.

Nothing here reuses the closed forms it is meant to check: correlators are
dense traces, Laguerre values are exact rational sums, and the
depolarization tensor is a Monte-Carlo ray integral in real space (the
library computes it spectrally).
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from fractions import Fraction
from typing import Optional, Tuple, Union

import numpy as np

from .errors import QuadratureError, ValidationError
from .fock import (
    DensityMatrix,
    OperatorMatrix,
    StateVector,
    certified_levels,
    mean_annihilation,
)
from .layer import LayerResponse, output_operator
from .medium import GridEnvelope, MediumParams, OpticalResponse, UniformEllipsoid, refractive_indices
from .states import Custom

TOP_LEVEL_WARN = 1e-10


class TruncationWarning(RuntimeWarning):
    pass


# --- random cases -------------------------------------------------------------


def random_pure_state(seed: int, dim: int, support: Optional[int] = None) -> StateVector:
    """Normalized complex Gaussian vector; only the first ``support`` levels are populated."""
    if dim < 2:
        raise ValidationError("dim must be >= 2")
    support = dim if support is None else max(1, min(int(support), dim))
    rng = np.random.default_rng(seed)
    amps = np.zeros(dim, dtype=complex)
    amps[:support] = rng.normal(size=support) + 1j * rng.normal(size=support)
    return StateVector(amps / np.linalg.norm(amps))


def random_in_disk(rng: np.random.Generator, radius: float = 1.0) -> complex:
    r = radius * math.sqrt(rng.uniform())
    return r * complex(math.cos(t := rng.uniform(0, 2 * math.pi)), math.sin(t))


@dataclass(frozen=True)
class RandomCase:
    seed: int
    dim: int
    state: Custom
    kappa: complex
    kappa_bound: float
    detuning: float
    mean_a: complex


def random_case(seed: int, dim: int = 40, kappa_bound: float = 1.5) -> RandomCase:
    """Reproducible case: displacement, detuning, <a> and a state living on the certified block."""
    rng = np.random.default_rng([seed, 0x5eed])
    kappa = random_in_disk(rng, kappa_bound)
    detuning = float(rng.choice([-1, 1]) * rng.uniform(0.2, 5.0))
    mean_a = random_in_disk(rng, 1.0)
    support = max(2, certified_levels(kappa, dim) - 2)
    state = random_pure_state(seed, dim, support)
    return RandomCase(seed, dim, Custom(state.amps), kappa, kappa_bound, detuning, mean_a)


def lossless_medium(coupling: float = 0.5, omega0: float = 10.0, mu_sq: float = 0.01) -> MediumParams:
    """Dimensionless medium (delta_omega = 1, gamma = 0) with 4 pi rho |mu|^2 / V = coupling.

    The defaults keep forward amplitudes of order one near the resonances.
    """
    return MediumParams(omega0=omega0, delta_omega=1.0, mu_sq=mu_sq, vol=1.0,
                        rho=coupling / (4 * math.pi * mu_sq), gamma=0.0)


def random_response(rng: np.random.Generator, coupling: float = 0.5,
                    max_ratio: float = 3.0) -> OpticalResponse:
    """Real-index response at a random detuning outside the forbidden zones and poles.

    Detunings where n2/n1 leaves [1/max_ratio, max_ratio] are redrawn so that
    displacements stay of order <a>.
    """
    p = lossless_medium(coupling)
    while True:
        delta = float(rng.choice([-1, 1]) * rng.uniform(0.05, 6.0))
        resp = refractive_indices(p.omega0 + delta, p)
        if resp.forbidden:
            continue
        ratio = abs(resp.n2 / resp.n1)
        if 1 / max_ratio <= ratio <= max_ratio:
            return resp


# --- correlators ----------------------------------------------------------------


def normally_ordered_moment(rho: Union[DensityMatrix, StateVector], op_alpha: OperatorMatrix,
                            orders: Tuple[int, int]) -> complex:
    """tr(rho (alpha^dag)^j alpha^l) by dense products."""
    if isinstance(rho, StateVector):
        rho = rho.to_density()
    j, l = orders
    m = rho.elems
    if m[-1, -1].real > TOP_LEVEL_WARN:
        warnings.warn(f"top Fock level holds {m[-1, -1].real:.3g} of the population; moments may be truncated",
                      TruncationWarning, stacklevel=2)
    op = np.asarray(op_alpha)
    prod = np.linalg.matrix_power(op.conj().T, j) @ np.linalg.matrix_power(op, l)
    return complex(np.trace(m @ prod))


def g2_dense(rho: Union[DensityMatrix, StateVector], alpha: OperatorMatrix) -> float:
    num = normally_ordered_moment(rho, alpha, (2, 2)).real
    den = normally_ordered_moment(rho, alpha, (1, 1)).real
    return num / den**2


def laguerre_series(p: int, alpha: int, x: float) -> float:
    """L_p^(alpha)(x) = sum_i (-1)^i C(p+alpha, p-i) x^i / i!, summed exactly in rationals."""
    if p < 0:
        raise ValidationError("degree must be nonnegative")
    xf = Fraction(x)
    total = Fraction(0)
    term_x = Fraction(1)
    for i in range(p + 1):
        total += (-1) ** i * math.comb(p + alpha, p - i) * term_x / math.factorial(i)
        term_x *= xf
    return float(total)


# --- layer output on the two-mode space ------------------------------------------


def two_mode_output(rho_plus: DensityMatrix, rho_minus: DensityMatrix, resp: LayerResponse,
                    direction: str = "+"):
    """Dense realization of the outgoing mode for product inputs.

    Returns (<b>, <b^dag b>, [b, b^dag]) with the commutator as a matrix on
    the plus (x) minus space.
    """
    means = (mean_annihilation(rho_plus), mean_annihilation(rho_minus))
    dim = rho_plus.dim
    b = output_operator(direction, resp, means).matrix(dim)
    rho = np.kron(rho_plus.elems, rho_minus.elems)
    bd = b.conj().T
    mean_b = complex(np.trace(rho @ b))
    n_b = float(np.trace(rho @ bd @ b).real)
    return mean_b, n_b, b @ bd - bd @ b


# --- depolarization Monte Carlo ---------------------------------------------------


def _unit_vectors(rng, n):
    v = rng.normal(size=(n, 3))
    return v / np.linalg.norm(v, axis=1, keepdims=True)


def _ellipsoid_chunk(env: UniformEllipsoid, rng, n):
    axes = np.asarray(env.semi_axes, dtype=float)
    r = _unit_vectors(rng, n) * rng.uniform(size=(n, 1)) ** (1 / 3) * axes
    s = _unit_vectors(rng, n)
    A = np.sum((s / axes) ** 2, axis=1)
    B = 2 * np.sum(r * s / axes**2, axis=1)
    C = np.sum((r / axes) ** 2, axis=1) - 1
    s_max = (-B + np.sqrt(B * B - 4 * A * C)) / (2 * A)
    # density 1/V inside; g = rho0 ln s_max up to an isotropic constant
    g = np.log(s_max) / env.volume
    return s, g


def _grid_chunk(env: GridEnvelope, rng, n):
    vals = env.values
    shape = np.array(vals.shape)
    h = env.h
    flat = vals.ravel()
    cells = rng.choice(flat.size, size=n, p=flat / flat.sum())
    idx = np.stack(np.unravel_index(cells, vals.shape), axis=1)
    r = (idx + rng.uniform(size=(n, 3))) * h
    s = _unit_vectors(rng, n)
    rho0 = flat[cells]
    with np.errstate(divide="ignore", invalid="ignore"):
        exit_t = np.min(np.where(s > 0, (shape * h - r) / s, np.where(s < 0, -r / s, np.inf)), axis=1)
        # parameters at which the ray crosses a grid plane inside the box
        t = np.concatenate(
            [(np.arange(shape[ax] + 1)[None, :] * h - r[:, ax : ax + 1]) / s[:, ax : ax + 1] for ax in range(3)],
            axis=1,
        )
    inside = np.isfinite(t) & (t > 0) & (t < exit_t[:, None])
    t = np.sort(np.where(inside, t, exit_t[:, None]), axis=1)
    lo, hi = t[:, :-1], t[:, 1:]
    ok = hi > lo
    mid = 0.5 * (lo + hi)
    pts = np.floor((r[:, None, :] + mid[..., None] * s[:, None, :]) / h).astype(int)
    pts = np.clip(pts, 0, shape - 1)
    rho_seg = vals[pts[..., 0], pts[..., 1], pts[..., 2]]
    with np.errstate(divide="ignore", invalid="ignore"):
        seg = np.where(ok, (rho_seg - rho0[:, None]) * np.log(hi / lo), 0.0)
    # the segment from r to the first plane stays in r's own cell and adds nothing;
    # past the box rho = 0, giving -rho0 ln(L / exit) with the isotropic ln L dropped
    g = seg.sum(axis=1) + rho0 * np.log(exit_t)
    return s, g


def mc_depolarization(envelope, samples: int = 10**6, seed: int = 0, *,
                      chunk: int = 200_000, tol: Optional[float] = None):
    """Monte-Carlo estimate of the depolarization tensor and its standard error.

    The dyadic kernel is split into its delta part, which gives
    (V/3) int |xi|^4 I, and a principal-value part.  With r' = r + s u the
    latter becomes an average over r ~ |xi|^2 and uniform directions u of
    -V (3 u u - I) g(r, u), where g = int ds [rho(r + s u) - rho(r)] / s is
    done exactly along the ray (uniform ellipsoids in closed form, grid
    envelopes voxel segment by voxel segment).

    Returns (N, sigma), both 3x3.
    """
    if isinstance(envelope, str):
        if envelope != "uniform_sphere":
            raise ValidationError(f"unknown analytic envelope {envelope!r}")
        envelope = UniformEllipsoid((1.0, 1.0, 1.0))
    if isinstance(envelope, UniformEllipsoid):
        step = _ellipsoid_chunk
        vol = envelope.volume
        overlap = 1.0 / vol
    elif isinstance(envelope, GridEnvelope):
        if not np.any(envelope.values):
            raise ValidationError("envelope is identically zero")
        step = _grid_chunk
        vol = envelope.volume
        overlap = envelope.overlap
    else:
        raise ValidationError(f"unsupported envelope {envelope!r}")
    if samples < 2:
        raise ValidationError("need at least two samples")

    rng = np.random.default_rng(seed)
    eye = np.eye(3)
    total = np.zeros((3, 3))
    total_sq = np.zeros((3, 3))
    done = 0
    while done < samples:
        n = min(chunk, samples - done)
        s, g = step(envelope, rng, n)
        dyad = 3 * s[:, :, None] * s[:, None, :] - eye
        x = -vol * dyad * g[:, None, None] + (vol / 3.0) * overlap * eye
        total += x.sum(axis=0)
        total_sq += (x * x).sum(axis=0)
        done += n
    mean = total / samples
    var = np.maximum(total_sq / samples - mean * mean, 0.0)
    sigma = np.sqrt(var / (samples - 1))
    if tol is not None and sigma.max() > tol:
        raise QuadratureError(f"Monte-Carlo standard error {sigma.max():.3g} exceeds {tol:.3g}")
    return mean, sigma
