import numpy as np
import pytest
import scipy.constants as sc

from rydlink.analysis import eit_linewidth, peak_pair_splitting, refine_extremum
from rydlink.atomic.doppler import transit_broadening
from rydlink.atomic.response import AtomicConfig, coupling_scan
from rydlink.atomic.scheme import (
    GAMMA_5P,
    RF_DIPOLE_48F,
    TECHNICAL_DEPHASING,
    TWO_PI,
    default_scheme,
)
from rydlink.errors import ConfigurationError

OP, OC = TWO_PI * 1e4, TWO_PI * 1e5
F48 = 19.84e9


def quiet(**kw):
    return AtomicConfig(scheme=default_scheme(rydberg_dephasing=0.0), include_transit=False, **kw)


def test_calibrated_linewidth_is_about_ten_megahertz():
    at = AtomicConfig(include_transit=False)
    x = TWO_PI * np.linspace(-15e6, 15e6, 81)
    fit = eit_linewidth(x, coupling_scan(at, OP, OC, x).imag)
    assert fit.fwhm / TWO_PI == pytest.approx(10e6, rel=0.02)
    assert abs(fit.center) < TWO_PI * 0.1e6


def test_residual_doppler_floor_quick():
    x = TWO_PI * np.linspace(-15e6, 15e6, 61)
    fit = eit_linewidth(x, coupling_scan(quiet(), OP, OC, x).imag)
    assert fit.fwhm / GAMMA_5P == pytest.approx(780.241 / 480 - 1, rel=0.03)


def test_transit_added_once_as_collective_dephasing():
    at = AtomicConfig()
    out = at.with_transit(2.5e-3)
    extra = transit_broadening(2.5e-3, at.ensemble)
    assert out.scheme.collective_dephasing == pytest.approx(TECHNICAL_DEPHASING + extra)
    assert out.with_transit(2.5e-3) is out
    off = AtomicConfig(include_transit=False)
    assert off.with_transit(2.5e-3) is off


def test_beam_average_reduces_to_on_axis_without_intensity_dependence():
    # no coupling light and a weak probe: every ray sees the same absorption
    at = AtomicConfig()
    weak = OP / 10
    on_axis = at.transmission(at.drives(weak, 0.0))
    assert at.beam_transmission(weak, 0.0, 0.3) == pytest.approx(on_axis, rel=1e-7)
    flat = AtomicConfig(transverse_nodes=0)
    assert flat.beam_transmission(OP, OC, 0.3) == pytest.approx(flat.transmission(flat.drives(OP, OC)), rel=1e-14)


def test_beam_average_loses_eit_outside_coupling_beam():
    at = AtomicConfig()
    weak, oc = OP / 10, TWO_PI * 2e6
    bare = at.transmission(at.drives(weak, 0.0))
    narrow = at.beam_transmission(weak, oc, 50.0)  # coupling much smaller than probe
    wide = at.beam_transmission(weak, oc, 0.01)
    assert bare < narrow < wide


def test_beam_average_rejects_bad_ratio():
    with pytest.raises(ConfigurationError):
        AtomicConfig().beam_transmission(OP, OC, 0.0)


def test_config_validation():
    with pytest.raises(ConfigurationError, match="cell_length"):
        AtomicConfig(cell_length=-0.1)
    with pytest.raises(ConfigurationError, match="passes"):
        AtomicConfig(passes=0)


def _rf_field(rabi):
    return rabi * sc.hbar / RF_DIPOLE_48F


def test_autler_townes_separation_equals_rf_rabi():
    at = quiet(rf_window=1e9)
    om = TWO_PI * 50e6
    e = _rf_field(om)

    def absorption(dc):
        return -at.susceptibility(at.drives(OP, OC, F48, e, coupling_detuning=dc)).imag

    x = np.linspace(-0.5 * om - TWO_PI * 20e6, 0.5 * om + TWO_PI * 20e6, 121)
    a, b = peak_pair_splitting(x, np.array([absorption(v) for v in x]), absorption)
    assert b - a == pytest.approx(om, rel=0.02)


def test_ac_stark_shift_matches_second_order():
    at = quiet(rf_window=1e9)
    om, delta = TWO_PI * 10e6, TWO_PI * 100e6

    def peak(e):
        f = lambda dc: -at.susceptibility(at.drives(OP, OC, F48 + delta / TWO_PI, e, coupling_detuning=dc)).imag
        return refine_extremum(f, -TWO_PI * 3e6, TWO_PI * 3e6, xtol=1.0)

    shift = peak(_rf_field(om)) - peak(0.0)
    assert abs(shift) == pytest.approx(om**2 / (4 * delta), rel=0.05)


def test_coupling_scan_symmetric_on_resonance():
    at = quiet(rf_window=1e9)
    x = TWO_PI * np.linspace(1e6, 40e6, 9)
    e = _rf_field(TWO_PI * 20e6)
    plus = coupling_scan(at, OP, OC, x, F48, e).imag
    minus = coupling_scan(at, OP, OC, -x, F48, e).imag
    np.testing.assert_allclose(plus, minus, rtol=1e-6)
