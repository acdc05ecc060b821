import cmath
import math

import numpy as np
import pytest

from excitonic.errors import ForbiddenZoneError, ValidationError
from excitonic.fock import mean_annihilation
from excitonic.layer import (
    ConditioningWarning,
    LayerSpec,
    layer_response,
    output_means,
    output_operator,
    photocurrent,
    reflected_photocurrent,
    response_from_indices,
    slab_amplitudes,
)
from excitonic.medium import MediumParams, OpticalResponse, refractive_indices
from excitonic.reference import lossless_medium, two_mode_output
from excitonic.states import Coherent, Fock, build_state


class TestSlab:
    def test_vacuum_slab(self):
        T, R = slab_amplitudes(1.0, 2.0, 0.7)
        assert T == pytest.approx(cmath.exp(1.4j), abs=1e-15)
        assert R == 0

    def test_thin_limit(self):
        T, R = slab_amplitudes(1.7, 1.0, 1e-9)
        assert abs(T - 1) < 1e-8 and abs(R) < 1e-8

    def test_half_wave_is_transparent(self):
        n, k = 1.5, 2.0
        T, R = slab_amplitudes(n, k, math.pi / (n * k))
        assert abs(R) <= 1e-15
        assert T == pytest.approx(-1, abs=1e-15)

    def test_quarter_wave_reflectance(self):
        n, k = 2.0, 1.0
        T, R = slab_amplitudes(n, k, math.pi / (2 * n * k))
        # |R|^2 = ((n^2 - 1) / (n^2 + 1))^2 for a quarter-wave layer
        assert abs(R) ** 2 == pytest.approx((3 / 5) ** 2, abs=1e-14)
        assert abs(T) ** 2 + abs(R) ** 2 == pytest.approx(1, abs=1e-14)

    def test_resonance_warning(self):
        # n -> 0 drives r -> 1, so 1 - r^2 e^(2i phi) collapses at d = 0
        with pytest.warns(ConditioningWarning):
            slab_amplitudes(1e-15 + 0j, 1.0, 0.0)

    def test_zero_index(self):
        with pytest.raises(ValidationError):
            slab_amplitudes(0, 1.0, 1.0)


class TestResponse:
    def test_unitarity(self, real_resp):
        lr = response_from_indices(real_resp, 3.3)
        assert max(abs(x) for x in lr.unitarity_defect()) <= 1e-13

    def test_degenerate_channels(self):
        p = MediumParams(omega0=10, delta_omega=0, mu_sq=0.01, vol=1, rho=4.0, gamma=0)
        lr = layer_response(LayerSpec(2.0, p, 8.0))
        assert lr.T1 == lr.T2 and lr.R1 == lr.R2

    def test_empty_medium(self):
        p = MediumParams(omega0=10, delta_omega=1, mu_sq=0.01, vol=1, rho=0, gamma=0)
        lr = layer_response(LayerSpec(2.0, p, 8.0))
        assert lr.T1 == pytest.approx(cmath.exp(16j), abs=1e-14)
        assert lr.R1 == 0 and lr.R2 == 0

    def test_forbidden(self, medium):
        with pytest.raises(ForbiddenZoneError):
            layer_response(LayerSpec(1.0, medium, medium.omega0 + 0.2))

    @pytest.mark.parametrize("d", [0, -1.0, math.inf])
    def test_bad_thickness(self, medium, d):
        with pytest.raises(ValidationError):
            LayerSpec(d, medium, 9.0)


class TestOutput:
    def test_means(self, real_resp):
        lr = response_from_indices(real_resp, 1.0)
        plus, minus = output_means(0.5, 0.2j, lr)
        assert plus == pytest.approx(lr.T1 * 0.5 + lr.R1 * 0.2j, abs=1e-15)
        assert minus == pytest.approx(lr.T1 * 0.2j + lr.R1 * 0.5, abs=1e-15)

    @pytest.mark.parametrize("direction", ["+", "-"])
    def test_operator_mean_and_commutator(self, real_resp, direction):
        lr = response_from_indices(real_resp, 1.0)
        means = (0.5, -0.3 + 0.1j)
        op = output_operator(direction, lr, means)
        mean = op.shift + op.coef_plus * means[0] + op.coef_minus * means[1]
        want = output_means(*means, lr)[0 if direction == "+" else 1]
        assert mean == pytest.approx(want, abs=1e-15)
        assert op.commutator() == pytest.approx(1.0, abs=1e-13)

    def test_no_mean_field_no_shift(self, real_resp):
        lr = response_from_indices(real_resp, 1.0)
        op = output_operator("+", lr, (0, 0))
        assert op.shift == 0 and op.coef_plus == lr.T2 and op.coef_minus == lr.R2

    def test_bad_direction(self, real_resp):
        with pytest.raises(ValidationError):
            output_operator("up", response_from_indices(real_resp, 1.0), (0, 0))

    def test_two_mode_vacuum(self, real_resp):
        lr = response_from_indices(real_resp, 1.0)
        vac = build_state(Fock(0), 6)
        mean_b, n_b, comm = two_mode_output(vac, vac, lr)
        assert mean_b == 0 and n_b == pytest.approx(0, abs=1e-15)
        assert comm[0, 0] == pytest.approx(1, abs=1e-13)

    def test_two_mode_coherent(self, real_resp):
        lr = response_from_indices(real_resp, 1.0)
        rp, rm = build_state(Coherent(0.5), 20), build_state(Fock(0), 20)
        mean_b, n_b, _ = two_mode_output(rp, rm, lr)
        assert mean_b == pytest.approx(lr.T1 * 0.5, abs=1e-10)
        # a coherent input leaves the output in a coherent state of mean T1 beta
        assert n_b == pytest.approx(abs(lr.T1 * 0.5) ** 2, abs=1e-10)


class TestPhotocurrent:
    def test_vacuum(self, real_resp):
        lr = response_from_indices(real_resp, 1.0)
        assert photocurrent(0, 0, lr) == 0

    def test_fock(self, real_resp):
        lr = response_from_indices(real_resp, 1.0)
        assert photocurrent(3, 0, lr) == pytest.approx(3 * abs(lr.T2) ** 2)

    def test_coherent_uses_coherent_channel(self, real_resp):
        lr = response_from_indices(real_resp, 1.0)
        assert photocurrent(0.25, 0.5, lr) == pytest.approx(0.25 * abs(lr.T1) ** 2, abs=1e-15)

    def test_coherent_and_fock_differ(self):
        p = lossless_medium()
        lr = response_from_indices(refractive_indices(p.omega0 - 0.3, p), 2.0)
        assert abs(abs(lr.T1) - abs(lr.T2)) > 1e-3
        assert abs(photocurrent(4, 2.0, lr) - photocurrent(4, 0, lr)) > 1e-3

    def test_balance(self, real_resp):
        lr = response_from_indices(real_resp, 2.7)
        rho = build_state(Coherent(0.8 - 0.2j), 30)
        n = float(np.dot(np.arange(30), rho.populations()))
        m = mean_annihilation(rho)
        assert photocurrent(n, m, lr) + reflected_photocurrent(n, m, lr) == pytest.approx(n, abs=1e-12)


def test_from_indices_response_matches_slab():
    r = OpticalResponse.from_indices(1.5, 1.4, 2 * np.pi)
    lr = response_from_indices(r, 0.3)
    assert (lr.T1, lr.R1) == slab_amplitudes(1.5, 2 * np.pi, 0.3)
    assert (lr.T2, lr.R2) == slab_amplitudes(1.4, 2 * np.pi, 0.3)
