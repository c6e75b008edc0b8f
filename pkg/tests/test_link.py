import numpy as np
import pytest

from rydlink.atomic.scheme import COUPLING_DIPOLE, PROBE_DIPOLE
from rydlink.errors import ConfigurationError
from rydlink.link import (
    LinkGeometry,
    crossover_distance,
    evaluate_link,
    loss_channels,
    probe_power_for_constant_rabi,
)
from rydlink.optics import GaussianBeam, rabi_from_power, radius_at

PROBE = GaussianBeam.from_diameter(780.241e-9, 2.5e-3, 1e-3)
COUPLING = GaussianBeam.from_diameter(480e-9, 6e-3, 10e-3)
IDEAL = dict(surface_transmittance=1.0, reflector_reflectance=1.0, contamination=1.0)


def report(geometry, probe=PROBE):
    return evaluate_link(geometry, probe, COUPLING, PROBE_DIPOLE, COUPLING_DIPOLE)


def test_lossless_short_link():
    g = LinkGeometry(2e-3, cell_length=1e-3, **IDEAL)
    assert report(g).efficiency == pytest.approx(1.0, abs=1e-12)


def test_demo_efficiency_at_30m():
    assert report(LinkGeometry(30.0)).efficiency == pytest.approx(0.55, abs=0.02)


def test_coated_link_keeps_most_power():
    g = LinkGeometry(10.0, surface_transmittance=0.995, contamination=1.0)
    assert report(g).efficiency > 0.90


def test_efficiency_is_product_of_channels():
    g = LinkGeometry(25.0)
    full = report(g).efficiency
    ch = loss_channels(g, PROBE)
    assert full == pytest.approx(np.prod(list(ch.values())), rel=1e-12)
    # switch every channel off but one, then multiply the single-channel efficiencies
    huge = dict(cell_bore=10.0, reflector_aperture=10.0, detector_aperture_radius=10.0)
    singles = [
        report(LinkGeometry(25.0, **{**IDEAL, **huge, "surface_transmittance": g.surface_transmittance})).efficiency,
        report(LinkGeometry(25.0, **{**IDEAL, **huge, "reflector_reflectance": g.reflector_reflectance})).efficiency,
        report(LinkGeometry(25.0, **{**IDEAL, **huge, "contamination": g.contamination})).efficiency,
        report(LinkGeometry(25.0, **IDEAL)).efficiency,
    ]
    assert np.prod(singles) == pytest.approx(full, rel=1e-12)


def test_returned_power_non_increasing():
    p = [report(LinkGeometry(d)).returned_power for d in np.linspace(0.5, 60, 120)]
    assert np.all(np.diff(p) <= 0)


def test_constant_rabi_power():
    g1 = LinkGeometry(1.0)
    assert probe_power_for_constant_rabi(g1, PROBE, 1.0) == pytest.approx(PROBE.power, rel=1e-15)
    ratio = probe_power_for_constant_rabi(LinkGeometry(20.0), PROBE, 1.0) / PROBE.power
    assert 10 < ratio < 13
    ratios = [probe_power_for_constant_rabi(LinkGeometry(d), PROBE, 1.0) for d in np.linspace(1, 50, 40)]
    assert np.all(np.diff(ratios) > 0)
    with pytest.raises(ConfigurationError):
        probe_power_for_constant_rabi(g1, PROBE, 0.0)


def test_constant_rabi_composition_is_exact():
    ref = rabi_from_power(PROBE, 1.0 + 0.075, PROBE_DIPOLE)
    for d in (0.5, 3.0, 17.0, 42.0):
        g = LinkGeometry(d)
        beam = PROBE.with_power(probe_power_for_constant_rabi(g, PROBE, 1.0))
        assert rabi_from_power(beam, g.cell_position, PROBE_DIPOLE) == pytest.approx(ref, rel=1e-12)


def test_crossover_against_closed_form():
    wp, wc = PROBE.waist, COUPLING.waist
    ap, ac = wp**2 / (np.pi * wp**2 / PROBE.wavelength) ** 2, wc**2 / (np.pi * wc**2 / COUPLING.wavelength) ** 2
    expected = np.sqrt((wc**2 - wp**2) / (ap - ac))
    z = crossover_distance(PROBE, COUPLING)
    assert z == pytest.approx(expected, rel=1e-10)
    assert radius_at(PROBE, z) == pytest.approx(radius_at(COUPLING, z), rel=1e-9)
    assert 12 < z < 20


def test_crossover_limits():
    assert crossover_distance(PROBE, PROBE) == np.inf
    zs = [crossover_distance(GaussianBeam(780.241e-9, w), COUPLING) for w in (1.0e-3, 1.25e-3, 1.5e-3, 2e-3)]
    assert np.all(np.diff(zs) > 0)


def test_overlap_flags_along_link():
    near = report(LinkGeometry(5.0)).overlap
    far = report(LinkGeometry(20.0)).overlap
    assert not near.probe_exceeds_coupling and far.probe_exceeds_coupling
    limit = report(LinkGeometry(70.0)).overlap
    assert limit.probe_clipped_cell and limit.probe_clipped_reflector
    assert report(LinkGeometry(30.0)).overlap.flags.keys() == limit.flags.keys()


@pytest.mark.parametrize(
    "kw,field",
    [
        ({"distance": 0.0}, "link.distance"),
        ({"distance": 0.1}, "link.cell_length"),
        ({"distance": 5.0, "contamination": 1.5}, "link.contamination"),
        ({"distance": 5.0, "cell_bore": 0.0}, "link.cell_bore"),
        ({"distance": 5.0, "beam_separation": -1.0}, "link.beam_separation"),
    ],
)
def test_geometry_validation(kw, field):
    with pytest.raises(ConfigurationError) as info:
        LinkGeometry(**kw)
    assert info.value.field == field
