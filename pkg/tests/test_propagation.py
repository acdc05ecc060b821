import cmath
import math

import numpy as np
import pytest

from excitonic.errors import ForbiddenZoneError, G2UndefinedError, TruncationError, ValidationError
from excitonic.fock import StateVector, displacement_exp
from excitonic.medium import OpticalResponse
from excitonic.propagation import (
    field_mode,
    fock_qubit_closed,
    g2,
    g2_oracle,
    g2_paper,
    kappa_at,
    poynting_flux,
    propagate_point,
    trace_drift,
    transform_density,
    transform_density_oracle,
    wave_residuals,
)
from excitonic.states import Coherent, Fock, Thermal, build_state, build_vector, coherent_amplitudes


class TestKappa:
    def test_entrance_value(self, unit_resp):
        # the mismatch between channels is present already at z = 0
        assert kappa_at(0, 1.0, unit_resp) == pytest.approx(math.sqrt(1.4 / 1.5) - 1, abs=1e-15)

    def test_periodic(self, unit_resp):
        for z in (0.0, 1.3, 7.9):
            assert kappa_at(z + 10, 0.5j, unit_resp) == pytest.approx(kappa_at(z, 0.5j, unit_resp), abs=1e-13)

    def test_half_period(self, unit_resp):
        assert kappa_at(5, 1.0, unit_resp) == pytest.approx(-math.sqrt(1.4 / 1.5) - 1, abs=1e-13)

    def test_no_mean_field(self, unit_resp):
        assert kappa_at(3.3, 0, unit_resp) == 0

    def test_equal_indices(self):
        assert kappa_at(2.0, 1 + 1j, OpticalResponse.from_indices(1.2, 1.2, 1.0)) == 0

    def test_forbidden(self):
        with pytest.raises(ForbiddenZoneError):
            kappa_at(0, 1.0, OpticalResponse.from_indices(2j, 1.2, 1.0))


class TestTransform:
    def test_vacuum_becomes_coherent(self):
        kappa = 0.8 - 0.3j
        out = transform_density(build_state(Fock(0), 40), kappa)
        want = coherent_amplitudes(kappa, 40)
        assert np.abs(out.elems - np.outer(want, want.conj())).max() <= 1e-12

    def test_coherent_shift(self):
        out = transform_density(build_state(Coherent(0.5), 40), 0.7j)
        want = coherent_amplitudes(0.5 + 0.7j, 40)
        assert np.vdot(want, out.elems @ want).real == pytest.approx(1.0, abs=1e-12)

    def test_zero_is_identity(self):
        rho = build_state(Thermal(0.4), 30)
        assert transform_density(rho, 0) is rho

    def test_matches_oracle(self):
        rho = build_state(Fock(3), 40)
        fast = transform_density(rho, 1.1 + 0.4j)
        slow = transform_density_oracle(rho, 1.1 + 0.4j, pad=40)
        assert np.abs(fast.elems - slow.elems)[:20, :20].max() <= 1e-10

    def test_truncation(self):
        rho = build_state(Coherent(1.0), 16)
        with pytest.raises(TruncationError):
            transform_density(rho, 3.0)
        assert trace_drift(rho, 3.0) > 1e-3

    def test_small_drift_is_renormalized(self):
        rho = build_state(Fock(0), 30)
        out = transform_density(rho, 0.5)
        assert trace_drift(rho, 0.5) <= 1e-8
        assert abs(np.trace(out.elems) - 1) <= 1e-14


class TestFockQubit:
    def test_matches_brute_force(self):
        b0, b1, kappa = 0.6, 0.8j, 0.9 - 0.2j
        psi = np.zeros(40, dtype=complex)
        psi[:2] = b0, b1
        closed = fock_qubit_closed(b0, b1, kappa, 40).amps
        assert np.abs(closed - displacement_exp(-kappa, 40, pad=40) @ psi).max() <= 1e-12

    def test_high_levels_populated(self):
        b = 1 / math.sqrt(2)
        amps = fock_qubit_closed(b, b, 0.5, 30).amps
        assert abs(amps[3]) > 1e-3
        assert abs(amps[3]) == pytest.approx(
            math.exp(-0.125) * 0.5**3 / math.sqrt(6) * abs(b - b * 0.5 + 3 * b / 0.5), rel=1e-12)

    def test_zero_kappa(self):
        amps = fock_qubit_closed(0.6, 0.8, 0, 5).amps
        assert amps.tolist() == [0.6, 0.8, 0, 0, 0]

    def test_truncation(self):
        with pytest.raises(TruncationError):
            fock_qubit_closed(0.6, 0.8, 3.0, 10)


class TestG2:
    @pytest.mark.parametrize("z", [0.0, 2.5, 6.0])
    def test_coherent_is_one(self, unit_resp, z):
        v = build_vector(Coherent(1.2 - 0.5j), 60)
        assert g2_paper(v, z, unit_resp) == pytest.approx(1.0, abs=1e-10)

    @pytest.mark.parametrize("n", [1, 2, 5])
    def test_fock_values(self, unit_resp, n):
        # no mean field, so no displacement: g2 = 1 - 1/n
        v = build_vector(Fock(n), 20)
        assert g2_paper(v, 3.0, unit_resp) == pytest.approx(1 - 1 / n, abs=1e-14)

    def test_thermal_bunching(self, unit_resp):
        rho = build_state(Thermal(0.3), 80)
        assert g2(rho, 1.0, unit_resp) == pytest.approx(2.0, abs=1e-9)

    def test_vacuum_undefined(self, unit_resp):
        with pytest.raises(G2UndefinedError):
            g2_paper(build_vector(Fock(0), 10), 0.0, unit_resp)
        with pytest.raises(G2UndefinedError):
            g2_oracle(build_state(Fock(0), 10), 0.0, unit_resp)

    def test_closed_form_needs_pure_state(self, unit_resp):
        with pytest.raises(ValidationError):
            g2_paper(build_state(Fock(1), 10), 0.0, unit_resp)

    def test_closed_agrees_with_trace(self, unit_resp):
        b = 1 / math.sqrt(2)
        amps = np.zeros(40, dtype=complex)
        amps[:3] = 0.5, b, 0.5j
        v = StateVector(amps)
        for z in np.linspace(0, 10, 7):
            assert g2_paper(v, z, unit_resp) == pytest.approx(g2_oracle(v, z, unit_resp), abs=1e-12)


class TestFields:
    def test_flux_values(self, unit_resp):
        assert poynting_flux(build_state(Fock(0), 10), 0.3, unit_resp) == pytest.approx(0, abs=1e-15)
        assert poynting_flux(build_state(Fock(3), 10), 0.3, unit_resp) == pytest.approx(3, abs=1e-13)

    def test_flux_constant_with_mean_field(self, unit_resp):
        v = build_vector(Coherent(1.0 + 0.5j), 40)
        vals = [poynting_flux(v, z, unit_resp) for z in np.linspace(0, 10, 11)]
        assert np.ptp(vals) <= 1e-12
        assert vals[0] == pytest.approx(1.25, abs=1e-10)

    def test_mean_field_follows_coherent_index(self, unit_resp):
        mode = field_mode(2.0, unit_resp, "E")
        want = 1j * 0.5 * cmath.exp(1j * unit_resp.k * 1.5 * 2.0) / math.sqrt(1.5)
        assert mode.mean(0.5) == pytest.approx(want, abs=1e-14)

    def test_wave_equations(self, unit_resp):
        res_coh, res_inc = wave_residuals(np.linspace(0, 10, 33), 0.7, unit_resp)
        assert res_coh <= 1e-6 and res_inc <= 1e-6

    def test_bad_kind(self, unit_resp):
        with pytest.raises(ValidationError):
            field_mode(0, unit_resp, "B")


class TestPoint:
    def test_lossless(self, unit_resp):
        pt = propagate_point(build_vector(Coherent(0.5), 40), 1.0, unit_resp)
        assert not pt.lossy
        assert pt.trace_drift <= 1e-8
        assert pt.g2 == pytest.approx(1.0, abs=1e-10)

    def test_lossy_flag(self):
        resp = OpticalResponse.from_indices(1.5 + 0.01j, 1.4 + 0.002j, 2 * np.pi)
        pt = propagate_point(build_vector(Coherent(0.5), 40), 1.0, resp)
        assert pt.lossy

    def test_vacuum_g2_is_none(self, unit_resp):
        assert propagate_point(build_vector(Fock(0), 10), 1.0, unit_resp).g2 is None
