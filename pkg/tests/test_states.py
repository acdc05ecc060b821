import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from excitonic.errors import TruncationError, ValidationError
from excitonic.fock import annihilation, expectation
from excitonic.states import (
    Coherent,
    Custom,
    Fock,
    FockQubit,
    Thermal,
    build_state,
    build_vector,
    mean_a_of,
    mean_photon_number,
    parse_complex,
    parse_state_spec,
)


def test_fock_projector():
    rho = build_state(Fock(2), 5)
    assert np.array_equal(rho.elems, np.diag([0, 0, 1, 0, 0]).astype(complex))


def test_coherent_expansion():
    v = build_vector(Coherent(1.0), 25)
    n = np.arange(25)
    want = math.exp(-0.5) / np.sqrt([float(math.factorial(int(k))) for k in n])
    assert np.allclose(v.amps, want, atol=1e-15)
    assert mean_a_of(Coherent(1.0)) == 1.0
    assert expectation(v.to_density(), annihilation(25)) == pytest.approx(1.0, abs=1e-10)


def test_thermal_geometric_populations():
    nbar = 0.5
    rho = build_state(Thermal(nbar), 60)
    n = np.arange(60)
    assert np.allclose(rho.populations(), nbar**n / (1 + nbar) ** (n + 1), atol=1e-15)
    assert np.dot(n, rho.populations()) == pytest.approx(nbar, abs=1e-12)
    assert mean_a_of(Thermal(nbar)) == 0
    assert expectation(rho, annihilation(60)) == 0


def test_thermal_zero_is_vacuum():
    assert build_state(Thermal(0.0), 4).populations()[0] == 1.0


def test_fock_qubit_mean_field():
    b = 1 / math.sqrt(2)
    assert mean_a_of(FockQubit(b, b)) == pytest.approx(0.5)
    assert mean_a_of(FockQubit(0.6, 0.8j)) == pytest.approx(0.48j)


def test_fock_qubit_normalization():
    with pytest.raises(ValidationError):
        FockQubit(0.5, 0.5)


def test_truncation_reports_capture():
    with pytest.raises(TruncationError) as info:
        build_state(Coherent(3.0), 10)
    n = np.arange(10)
    want = math.exp(-9) * sum(9.0**k / math.factorial(int(k)) for k in n)
    assert info.value.captured == pytest.approx(want, abs=1e-12)
    with pytest.raises(TruncationError):
        build_state(Thermal(5.0), 20)


def test_fock_outside_space():
    with pytest.raises(ValidationError):
        build_state(Fock(5), 5)
    with pytest.raises(ValidationError):
        Fock(-1)


def test_custom_vector_and_matrix():
    v = build_state(Custom(np.array([0.6, 0.8j])), 6)
    assert v.dim == 6 and v.populations()[1] == pytest.approx(0.64)
    m = build_state(Custom(np.diag([0.25, 0.75])), 4)
    assert m.populations().tolist() == pytest.approx([0.25, 0.75, 0, 0])
    with pytest.raises(ValidationError):
        build_vector(Custom(np.diag([0.25, 0.75])), 4)


def test_mixed_spec_has_no_vector():
    with pytest.raises(ValidationError):
        build_vector(Thermal(0.3), 8)


def test_mean_photon_numbers():
    assert mean_photon_number(Fock(3)) == 3
    assert mean_photon_number(Coherent(1 + 1j)) == pytest.approx(2)
    assert mean_photon_number(FockQubit(0.6, 0.8)) == pytest.approx(0.64)


spec_strategy = st.one_of(
    st.builds(Fock, st.integers(0, 15)),
    st.builds(Coherent, st.complex_numbers(max_magnitude=2.5)),
    st.builds(Thermal, st.floats(0, 1.5)),
    st.floats(0, math.pi / 2).map(lambda t: FockQubit(math.cos(t), 1j * math.sin(t))),
)


@settings(max_examples=80, deadline=None)
@given(spec_strategy)
def test_every_state_is_valid_and_mean_field_agrees(spec):
    rho = build_state(spec, 64)
    m = rho.elems
    assert np.abs(m - m.conj().T).max() <= 1e-12
    assert abs(np.trace(m) - 1) <= 1e-12
    assert np.linalg.eigvalsh(m).min() >= -1e-10
    assert abs(mean_a_of(spec) - expectation(rho, annihilation(64))) <= 1e-10


@pytest.mark.parametrize("tree, want", [
    ({"kind": "fock", "n": 3}, Fock(3)),
    ({"kind": "coherent", "beta": [1, -2]}, Coherent(1 - 2j)),
    ({"kind": "coherent", "beta": {"re": 0.5}}, Coherent(0.5)),
    ({"kind": "thermal", "nbar": 0.5}, Thermal(0.5)),
    ({"kind": "fock_qubit", "beta0": 0.6, "beta1": [0, 0.8]}, FockQubit(0.6, 0.8j)),
])
def test_parse_specs(tree, want):
    assert parse_state_spec(tree) == want


def test_parse_custom():
    spec = parse_state_spec({"kind": "custom", "vector": [0.6, [0, 0.8]]})
    assert spec.is_vector and spec.payload[1] == 0.8j


@pytest.mark.parametrize("tree", [{"n": 1}, {"kind": "squeezed"}, {"kind": "fock"},
                                  {"kind": "custom"}, {"kind": "coherent", "beta": [1, 2, 3]}])
def test_parse_rejects(tree):
    with pytest.raises(ValidationError):
        parse_state_spec(tree)


def test_parse_complex_rejects_strings():
    with pytest.raises(ValidationError):
        parse_complex("1+2j")
