"""AM microwave -> probe transmission -> photocurrent tone -> SNR.

The atoms follow the 60 kHz envelope adiabatically (every relaxation rate
involved is far faster), so the probe transmission over one modulation period
is a sequence of steady states, one per envelope sample.
"""
from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np
import scipy.constants as sc

from .atomic.response import AtomicConfig
from .atomic.scheme import GAMMA_5P
from .errors import ConfigurationError, ModelError, NumericalError
from .link import LinkBudgetReport


@dataclass(frozen=True)
class RFScene:
    """AM carrier at the cell.

    ``calibration`` maps source power to field amplitude at the cell,
    E0 = calibration * sqrt(P / 1 mW), so powers are source-referred.
    """

    carrier: float
    power_dbm: float
    calibration: float = 2.4
    modulation_frequency: float = 60e3
    modulation_depth: float = 0.95

    def __post_init__(self):
        if not 0 <= self.modulation_depth <= 1:
            raise ConfigurationError("must be within [0, 1]", field="rf.modulation_depth")
        if self.modulation_frequency <= 0:
            raise ConfigurationError("must be > 0", field="rf.modulation_frequency")
        if self.calibration <= 0:
            raise ConfigurationError("must be > 0", field="rf.calibration")

    @property
    def peak_field(self) -> float:
        return self.calibration * np.sqrt(10 ** (self.power_dbm / 10))


@dataclass(frozen=True)
class DetectionChain:
    responsivity: float = 0.5  # A/W
    nep: float = 2e-12  # dark noise-equivalent power, W/sqrt(Hz)
    #: Multiplies 2 q I. The default lumps laser excess noise into the
    #: shot term; it only sets the absolute SNR scale, which is not claimed.
    shot_factor: float = 3000.0
    rbw: float = 1e3
    load: float = 50.0

    def __post_init__(self):
        if self.responsivity <= 0:
            raise ConfigurationError("must be > 0", field="detection.responsivity")
        if self.rbw <= 0:
            raise ConfigurationError("must be > 0", field="detection.rbw")
        if self.nep < 0 or self.shot_factor < 0:
            raise ConfigurationError("noise terms must be >= 0", field="detection")

    def noise_variance(self, dc_current: float) -> float:
        """Noise current variance (A^2) within one resolution bandwidth."""
        dark = (self.responsivity * self.nep) ** 2
        shot = self.shot_factor * 2 * sc.e * dc_current
        return (dark + shot) * self.rbw


@dataclass(frozen=True)
class Waveform:
    times: np.ndarray
    field: np.ndarray
    transmission: np.ndarray
    period: float

    @property
    def contrast(self) -> float:
        return float(np.ptp(self.transmission))


@dataclass
class ScanResult:
    axis: str
    unit: str
    records: list[dict] = field(default_factory=list)

    @property
    def values(self) -> np.ndarray:
        return np.array([r[self.axis] for r in self.records])

    def column(self, name: str) -> np.ndarray:
        return np.array([r[name] for r in self.records])


def envelope(scene: RFScene, t):
    """Normalised AM envelope, peak 1 and trough (1 - m)/(1 + m)."""
    m = scene.modulation_depth
    return (1 + m * np.cos(2 * np.pi * scene.modulation_frequency * np.asarray(t))) / (1 + m)


def instantaneous_field(scene: RFScene, t):
    """Envelope of the carrier field amplitude (V/m) at time ``t``."""
    return scene.peak_field * envelope(scene, t)


def _sample_envelope(scene: RFScene, n: int) -> np.ndarray:
    # cos(2 pi k / n) is mirror-symmetric; mirror explicitly so samples k and n-k agree bit for bit
    half = scene.peak_field * envelope(scene, np.arange(n // 2 + 1) / (n * scene.modulation_frequency))
    full = np.empty(n)
    full[: n // 2 + 1] = half
    full[n // 2 + 1 :] = half[1 : n - n // 2][::-1]
    return full


def check_quasi_static(scene: RFScene, slowest_rate: float = GAMMA_5P) -> None:
    if 2 * np.pi * scene.modulation_frequency >= slowest_rate / 10:
        raise ModelError(
            f"modulation at {scene.modulation_frequency:.3g} Hz is too fast for the quasi-static "
            f"treatment (needs 2 pi f_m < {slowest_rate / 10:.3g} rad/s); use a smaller modulation frequency"
        )


def transmission_waveform(
    scene: RFScene,
    atomic: AtomicConfig,
    report: LinkBudgetReport,
    n_samples: int = 64,
    coupling_detuning: float | None = None,
) -> Waveform:
    """Probe transmission over one modulation period, one steady state per sample.

    The transmission is that of the full probe beam (see
    :meth:`AtomicConfig.beam_transmission`), so a probe wider than the coupling
    beam carries an unmodulated fraction.
    """
    check_quasi_static(scene)
    if n_samples < 4:
        raise ConfigurationError("need at least 4 samples per period", field="n_samples")
    atomic = atomic.with_transit(report.probe_diameter)
    ratio = (report.probe_diameter / report.coupling_diameter) ** 2
    fields = _sample_envelope(scene, n_samples)
    cache: dict[float, float] = {}
    trans = np.empty(n_samples)
    for i, e in enumerate(fields):
        if e not in cache:
            cache[e] = atomic.beam_transmission(
                report.probe_rabi, report.coupling_rabi, ratio, scene.carrier, e, coupling_detuning
            )
        trans[i] = cache[e]
    period = 1 / scene.modulation_frequency
    return Waveform(np.arange(n_samples) * period / n_samples, fields, trans, period)


def tone_power_and_snr(waveform: Waveform, report: LinkBudgetReport, chain: DetectionChain) -> tuple[float, float]:
    """Tone power at f_m (dBm into the load) and SNR in dB.

    The SNR follows the spectrum-analyser procedure: level at f_m with
    modulation on over the level with it off, ``(S + N) / N``. A flat
    waveform therefore reads exactly 0 dB.
    """
    if report.returned_power <= 0:
        raise NumericalError("no probe power reaches the detector; SNR undefined")
    current = chain.responsivity * report.returned_power * waveform.transmission
    dc = float(np.mean(current))
    n = current.size
    phase = np.exp(-2j * np.pi * np.arange(n) / n)
    c1 = np.sum((current - dc) * phase) / n
    tone = 2 * abs(c1) ** 2  # mean-square current of the f_m component
    noise = chain.noise_variance(dc)
    signal_dbm = 10 * np.log10(max(tone * chain.load, 1e-300) / 1e-3)
    snr = 10 * np.log10((tone + noise) / noise)
    return float(signal_dbm), float(snr)


def carrier_scan(
    carriers,
    scene: RFScene,
    atomic: AtomicConfig,
    report: LinkBudgetReport,
    chain: DetectionChain,
    n_samples: int = 64,
) -> ScanResult:
    """SNR versus carrier frequency at fixed source power."""
    carriers = np.asarray(carriers, dtype=float)
    if carriers.size > 1 and not np.all(np.diff(carriers) > 0):
        raise ConfigurationError("carrier axis must be strictly increasing", field="scan.axis")
    result = ScanResult("carrier_frequency", "Hz")
    for f in carriers:
        wf = transmission_waveform(replace(scene, carrier=float(f)), atomic, report, n_samples)
        signal, snr = tone_power_and_snr(wf, report, chain)
        result.records.append(
            {
                "carrier_frequency": float(f),
                "snr": snr,
                "signal": signal,
                "transmission_mean": float(np.mean(wf.transmission)),
                "transmission_contrast": wf.contrast,
            }
        )
    return result
