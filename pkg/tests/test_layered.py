import numpy as np
import pytest

from rmtgrf.errors import DomainError
from rmtgrf.layered import (MU0, LayeredModel, apparent_resistivity_phase, column_fields,
                            field_profile_1d, impedance_1d, skin_depth)


def propagator_impedance(rho, h, f):
    """Independent oracle: carry (E, dE/dz) upward through each layer."""
    w = 2 * np.pi * f
    k = np.sqrt(1j * w * MU0 / np.asarray(rho, dtype=float))
    E, dE = 1.0 + 0j, 1j * k[-1]  # downgoing wave in the basement
    for j in range(len(h) - 1, -1, -1):
        c, s = np.cos(k[j] * h[j]), np.sin(k[j] * h[j])
        E, dE = c * E - s / k[j] * dE, k[j] * s * E + c * dE
    Z = 1j * w * MU0 * E / dE
    return np.conj(Z)


@pytest.mark.parametrize("rho", [10.0, 100.0, 1000.0])
@pytest.mark.parametrize("f", [1e3, 3e4, 2.5e5])
def test_half_space(rho, f):
    ra, ph = apparent_resistivity_phase(impedance_1d(LayeredModel([rho], []), f), f)
    assert ra == pytest.approx(rho, rel=1e-12)
    assert ph == pytest.approx(45.0, abs=1e-10)


@pytest.mark.parametrize("f", [1e3, 1e4, 1e5, 2.5e5])
def test_matches_propagator_oracle(f):
    rho = [100.0, 10.0, 1000.0, 50.0]
    h = [5.0, 12.0, 30.0]
    Z = impedance_1d(LayeredModel(rho, h), f)
    Zo = propagator_impedance(rho, h, f)
    assert abs(Z - Zo) / abs(Zo) < 1e-10


def test_random_models_match_oracle(rng):
    for _ in range(20):
        n = rng.integers(2, 6)
        rho = 10 ** rng.uniform(0, 4, n)
        h = rng.uniform(1, 40, n - 1)
        f = 10 ** rng.uniform(3, 5.4)
        Z = impedance_1d(LayeredModel(rho, h), f)
        Zo = propagator_impedance(rho, h, f)
        assert abs(Z - Zo) / abs(Zo) < 1e-9


def test_phase_quadrant_for_conductor_over_resistor():
    # resistive basement lowers the phase below 45 deg at low frequency
    ra, ph = apparent_resistivity_phase(impedance_1d(LayeredModel([10.0, 1000.0], [5.0]), 1e3), 1e3)
    assert 0 < ph < 45
    ra, ph = apparent_resistivity_phase(impedance_1d(LayeredModel([1000.0, 10.0], [20.0]), 1e3), 1e3)
    assert 45 < ph < 90


def test_thin_layer_limit():
    # very thin top layer is invisible
    Z1 = impedance_1d(LayeredModel([5.0, 100.0], [1e-6]), 1e4)
    Z0 = impedance_1d(LayeredModel([100.0], []), 1e4)
    assert abs(Z1 - Z0) / abs(Z0) < 1e-6


def test_skin_depth():
    assert skin_depth(100.0, 1e4) == pytest.approx(503.29 * np.sqrt(100 / 1e4), rel=1e-4)


@pytest.mark.parametrize("bad", [0.0, -1.0, np.nan])
def test_bad_frequency(bad):
    with pytest.raises(DomainError):
        impedance_1d(LayeredModel([10.0], []), bad)


def test_bad_model():
    with pytest.raises(DomainError):
        LayeredModel([10.0, -1.0], [5.0])
    with pytest.raises(DomainError):
        LayeredModel([10.0, 1.0], [])


@pytest.mark.parametrize("mode", ["TE", "TM"])
def test_field_profile_satisfies_ode(mode):
    """Second difference of the profile matches the 1D ODE inside each layer."""
    rho = [30.0, 300.0, 10.0]
    h = [15.0, 20.0]
    f = 2e4
    w = 2 * np.pi * f
    dz = 1e-3
    for z in (3.0, 25.0, 60.0):
        u = field_profile_1d(LayeredModel(rho, h), f, [z - dz, z, z + dz], mode)
        r = rho[np.searchsorted(np.cumsum(h), z)]
        d2 = (u[0] - 2 * u[1] + u[2]) / dz ** 2
        # both modes: u'' = -i w mu / rho u within a homogeneous layer
        assert abs(d2 + 1j * w * MU0 / r * u[1]) < 1e-5 * abs(w * MU0 / r * u[1])


@pytest.mark.parametrize("mode", ["TE", "TM"])
def test_field_profile_flux_continuity(mode):
    rho = [30.0, 300.0]
    h = [10.0]
    f = 5e4
    dz = 1e-4
    u = field_profile_1d(LayeredModel(rho, h), f, [10 - 2 * dz, 10 - dz, 10 + dz, 10 + 2 * dz], mode)
    above = (u[1] - u[0]) / dz
    below = (u[3] - u[2]) / dz
    if mode == "TE":
        assert abs(above - below) < 1e-3 * abs(above)
    else:
        assert abs(rho[0] * above - rho[1] * below) < 1e-3 * abs(rho[0] * above)


def test_field_profile_impedance_consistent():
    """Surface field / flux of the profile reproduces the recursion impedance."""
    rho = [50.0, 5.0, 500.0]
    h = [8.0, 14.0]
    f = 1e4
    w = 2 * np.pi * f
    dz = 1e-5
    u = field_profile_1d(LayeredModel(rho, h), f, [0.0, dz, 2 * dz], "TE")
    dE = (-3 * u[0] + 4 * u[1] - u[2]) / (2 * dz)
    Z = np.conj(u[0] / (dE / (1j * w * MU0)))
    Zr = impedance_1d(LayeredModel(rho, h), f)
    assert abs(Z - Zr) / abs(Zr) < 1e-6


@pytest.mark.parametrize("mode", ["TE", "TM"])
def test_column_fields_match_profile(mode, rng):
    h = rng.uniform(1, 5, 12)
    rho = 10 ** rng.uniform(0.5, 3.5, (3, 12))
    f = 3e4
    cols = column_fields(rho, h, f, mode)
    z = np.concatenate([[0], np.cumsum(h)])
    for c in range(3):
        ref = field_profile_1d(LayeredModel(rho[c], h[:-1]), f, z, mode)
        np.testing.assert_allclose(cols[c], ref, rtol=1e-10, atol=1e-14)
