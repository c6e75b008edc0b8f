from dataclasses import replace

import numpy as np
import pytest

from rydlink.atomic.response import AtomicConfig
from rydlink.atomic.scheme import COUPLING_DIPOLE, PROBE_DIPOLE
from rydlink.errors import ConfigurationError, ModelError, NumericalError
from rydlink.link import LinkGeometry, evaluate_link
from rydlink.optics import GaussianBeam
from rydlink.transduction import (
    DetectionChain,
    RFScene,
    Waveform,
    carrier_scan,
    check_quasi_static,
    envelope,
    instantaneous_field,
    tone_power_and_snr,
    transmission_waveform,
)

PROBE = GaussianBeam.from_diameter(780.241e-9, 2.5e-3, 1e-3)
COUPLING = GaussianBeam.from_diameter(480e-9, 6e-3, 10e-3)
REPORT = evaluate_link(LinkGeometry(10.0), PROBE, COUPLING, PROBE_DIPOLE, COUPLING_DIPOLE)
ATOMIC = AtomicConfig(transverse_nodes=2)
CHAIN = DetectionChain()


def synthetic(values):
    values = np.asarray(values, dtype=float)
    return Waveform(np.arange(values.size) / values.size, np.ones(values.size), values, 1.0)


class TestEnvelope:
    def test_depths(self):
        t = np.linspace(0, 1 / 60e3, 101)
        assert np.all(envelope(RFScene(19e9, 0.0, modulation_depth=0.0), t) == 1.0)
        assert envelope(RFScene(19e9, 0.0, modulation_depth=1.0), 0.5 / 60e3) == pytest.approx(0.0, abs=1e-15)
        e = instantaneous_field(RFScene(19e9, 0.0), t)
        assert e.min() / e.max() == pytest.approx(0.05 / 1.95, rel=1e-6)

    def test_peak_field_calibration(self):
        s = RFScene(19e9, 0.0, calibration=2.4)
        assert s.peak_field == pytest.approx(2.4)
        assert replace(s, power_dbm=20.0).peak_field == pytest.approx(24.0)

    @pytest.mark.parametrize("kw", [{"modulation_depth": 1.2}, {"modulation_frequency": 0.0}, {"calibration": -1.0}])
    def test_invalid_scene(self, kw):
        with pytest.raises(ConfigurationError):
            RFScene(19e9, 0.0, **kw)


class TestWaveform:
    def test_unmodulated_is_flat(self):
        wf = transmission_waveform(RFScene(19.84e9, 0.0, modulation_depth=0.0), ATOMIC, REPORT, 8)
        assert wf.contrast == 0.0

    def test_periodic_and_mirror_symmetric(self):
        wf = transmission_waveform(RFScene(19.84e9, -6.0), ATOMIC, REPORT, 16)
        np.testing.assert_array_equal(wf.transmission[1:], wf.transmission[1:][::-1])
        assert wf.period == pytest.approx(1 / 60e3)

    def test_resonant_carrier_is_anti_phase(self):
        # at the envelope peak the EIT window is split, so transmission is lowest
        wf = transmission_waveform(RFScene(19.84e9, -6.0), ATOMIC, REPORT, 16)
        assert np.argmax(wf.field) == np.argmin(wf.transmission)
        assert np.argmin(wf.field) == np.argmax(wf.transmission)
        # direct evaluation at the envelope extremes
        at = ATOMIC.with_transit(REPORT.probe_diameter)
        ratio = (REPORT.probe_diameter / REPORT.coupling_diameter) ** 2
        high = at.beam_transmission(REPORT.probe_rabi, REPORT.coupling_rabi, ratio, 19.84e9, wf.field.max())
        low = at.beam_transmission(REPORT.probe_rabi, REPORT.coupling_rabi, ratio, 19.84e9, wf.field.min())
        assert wf.transmission.min() == high and wf.transmission.max() == low

    def test_far_detuned_low_power_is_flat(self):
        atomic = replace(ATOMIC, rf_window=1e9)
        wf = transmission_waveform(RFScene(10e9, -12.0), atomic, REPORT, 8)
        assert wf.contrast == 0.0
        wf = transmission_waveform(RFScene(16e9, -12.0), ATOMIC, REPORT, 8)
        assert wf.contrast < 1e-5 * wf.transmission.mean()

    def test_quasi_static_guard(self):
        with pytest.raises(ModelError, match="smaller modulation frequency"):
            check_quasi_static(RFScene(19e9, 0.0, modulation_frequency=1e6))
        with pytest.raises(ConfigurationError):
            transmission_waveform(RFScene(19e9, 0.0), ATOMIC, REPORT, 2)


class TestSNR:
    def test_flat_waveform_reads_zero_db(self):
        _, snr = tone_power_and_snr(synthetic(np.full(32, 0.3)), REPORT, CHAIN)
        assert snr == 0.0

    def test_signal_follows_contrast(self):
        t = np.arange(64) / 64
        small = synthetic(0.3 + 1e-4 * np.cos(2 * np.pi * t))
        double = synthetic(0.3 + 2e-4 * np.cos(2 * np.pi * t))
        s1, _ = tone_power_and_snr(small, REPORT, CHAIN)
        s2, _ = tone_power_and_snr(double, REPORT, CHAIN)
        assert s2 - s1 == pytest.approx(20 * np.log10(2), abs=1e-9)

    def test_snr_is_a_ratio(self):
        wf = synthetic(0.3 + 1e-3 * np.cos(2 * np.pi * np.arange(32) / 32))
        dark = DetectionChain(shot_factor=0.0)
        _, a = tone_power_and_snr(wf, REPORT, dark)
        # responsivity scales tone and dark noise by the same factor
        _, b = tone_power_and_snr(wf, REPORT, replace(dark, responsivity=7 * dark.responsivity))
        assert a == pytest.approx(b, rel=1e-12)
        _, c = tone_power_and_snr(wf, REPORT, replace(CHAIN, load=1e3))
        assert c == pytest.approx(tone_power_and_snr(wf, REPORT, CHAIN)[1], rel=1e-15)

    def test_no_returned_power(self):
        dead = replace(REPORT, returned_power=0.0)
        with pytest.raises(NumericalError):
            tone_power_and_snr(synthetic([0.2, 0.3, 0.2, 0.1]), dead, CHAIN)

    @pytest.mark.parametrize("kw", [{"responsivity": 0.0}, {"rbw": 0.0}, {"nep": -1.0}])
    def test_invalid_chain(self, kw):
        with pytest.raises(ConfigurationError):
            DetectionChain(**kw)


def test_carrier_scan_needs_increasing_axis():
    with pytest.raises(ConfigurationError):
        carrier_scan([19e9, 18e9], RFScene(19e9, 0.0), ATOMIC, REPORT, CHAIN, 4)


def test_carrier_scan_records():
    res = carrier_scan([18.14e9, 19.0e9], RFScene(19e9, -12.0), ATOMIC, REPORT, CHAIN, 8)
    assert res.axis == "carrier_frequency" and res.unit == "Hz"
    np.testing.assert_array_equal(res.values, [18.14e9, 19.0e9])
    snr = res.column("snr")
    assert snr[0] > snr[1] > 0
