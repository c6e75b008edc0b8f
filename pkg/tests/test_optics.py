import numpy as np
import pytest

from rydlink.atomic.scheme import COUPLING_DIPOLE, TWO_PI
from rydlink.errors import ConfigurationError
from rydlink.optics import (
    GaussianBeam,
    diameter_at,
    fit_beam,
    fraction_through_aperture,
    rabi_from_power,
    radius_at,
    rayleigh_length,
)

COUPLING = GaussianBeam.from_diameter(480e-9, 6e-3, 10e-3)
PROBE = GaussianBeam.from_diameter(780e-9, 2.5e-3, 1e-3)


def test_rayleigh_lengths():
    assert rayleigh_length(COUPLING) == pytest.approx(58.9, abs=0.05)
    assert rayleigh_length(PROBE) == pytest.approx(6.29, abs=0.005)
    assert rayleigh_length(GaussianBeam(780e-9, 2.5e-3)) == pytest.approx(4 * rayleigh_length(PROBE))


def test_radius_landmarks():
    b = GaussianBeam(780e-9, 1.25e-3, waist_position=2.0)
    assert radius_at(b, 2.0) == b.waist
    assert radius_at(b, 2.0 + rayleigh_length(b)) == pytest.approx(b.waist * np.sqrt(2))
    # near the stated ~60 m link limit the probe fills most of a 1 inch aperture
    assert 22e-3 < diameter_at(PROBE, 60.0) < 25.4e-3


def test_aperture_fraction():
    w = radius_at(PROBE, 10.0)
    assert fraction_through_aperture(PROBE, 10.0, w) == pytest.approx(1 - np.exp(-2))
    assert fraction_through_aperture(PROBE, 0.0, 1.0) == 1.0
    z = np.linspace(0, 60, 50)
    assert np.all(np.diff(fraction_through_aperture(PROBE, z, 5e-3)) < 0)
    with pytest.raises(ConfigurationError):
        fraction_through_aperture(PROBE, 0.0, 0.0)


def test_coupling_rabi_calibration():
    assert rabi_from_power(COUPLING, 0.0, COUPLING_DIPOLE) == pytest.approx(TWO_PI * 0.1e6, rel=1e-3)


def test_rabi_scalings():
    r = rabi_from_power(COUPLING, 5.0, COUPLING_DIPOLE)
    assert rabi_from_power(COUPLING.with_power(4 * COUPLING.power), 5.0, COUPLING_DIPOLE) == pytest.approx(2 * r)
    wide = GaussianBeam(480e-9, 2 * COUPLING.waist, COUPLING.power)
    assert rabi_from_power(wide, 0.0, COUPLING_DIPOLE) == pytest.approx(rabi_from_power(COUPLING, 0.0, COUPLING_DIPOLE) / 2)
    assert rabi_from_power(COUPLING, 0.0, COUPLING_DIPOLE, intensity_factor=0.25) == pytest.approx(
        rabi_from_power(COUPLING, 0.0, COUPLING_DIPOLE) / 2
    )
    with pytest.raises(ConfigurationError):
        rabi_from_power(COUPLING, 0.0, 0.0)


def test_fit_recovers_beam():
    b = GaussianBeam(780e-9, 1.25e-3, waist_position=0.7)
    z = np.linspace(1, 30, 12)
    w0, z0, zr = fit_beam(z, diameter_at(b, z), b.wavelength)
    assert w0 == pytest.approx(b.waist, rel=1e-3)
    assert zr == pytest.approx(rayleigh_length(b), rel=1e-3)
    assert z0 == pytest.approx(0.7, abs=1e-2)


@pytest.mark.parametrize("kw", [{"wavelength": 0}, {"waist": -1}, {"power": -1}])
def test_invalid_beam(kw):
    args = {"wavelength": 780e-9, "waist": 1e-3, "power": 0.0} | kw
    with pytest.raises(ConfigurationError):
        GaussianBeam(**args)
