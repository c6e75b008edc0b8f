"""Probe transmission of the sensing cell for given optical Rabi frequencies and RF field."""
from __future__ import annotations

from dataclasses import dataclass, field, replace
from functools import lru_cache

import numpy as np

from ..errors import ConfigurationError
from .doppler import doppler_average, transit_broadening, transmission
from .scheme import (
    COUPLING_WAVELENGTH,
    PROBE_WAVELENGTH,
    DriveField,
    LevelScheme,
    ThermalEnsemble,
    default_scheme,
    rf_drives,
    wavenumber,
)


@dataclass(frozen=True)
class AtomicConfig:
    """Everything atomic that stays fixed while a scan runs.

    Probe and coupling detunings are angular. ``rf_window`` (Hz) selects which
    RF transitions a carrier couples to. ``transverse_nodes`` sets the
    Gauss-Laguerre order used to average the transmission over the probe's
    Gaussian profile; 0 means on-axis only.
    """

    scheme: LevelScheme = field(default_factory=default_scheme)
    ensemble: ThermalEnsemble = field(default_factory=ThermalEnsemble)
    probe_wavelength: float = PROBE_WAVELENGTH
    coupling_wavelength: float = COUPLING_WAVELENGTH
    probe_detuning: float = 0.0
    coupling_detuning: float = 0.0
    cell_length: float = 0.150
    passes: int = 2
    rf_window: float = 5e9
    include_transit: bool = True
    method: str = "poles"
    transverse_nodes: int = 8

    def __post_init__(self):
        if self.cell_length <= 0:
            raise ConfigurationError("must be > 0", field="atomic.cell_length")
        if self.passes < 1:
            raise ConfigurationError("must be >= 1", field="atomic.passes")
        if self.transverse_nodes < 0:
            raise ConfigurationError("must be >= 0", field="atomic.transverse_nodes")

    @property
    def probe_pair(self) -> tuple[str, str]:
        labels = self.scheme.labels
        return labels[0], labels[1]

    @property
    def coupling_pair(self) -> tuple[str, str]:
        labels = self.scheme.labels
        return labels[1], labels[2]

    def with_transit(self, probe_diameter: float) -> "AtomicConfig":
        """Add transit-time dephasing of the Rydberg coherences for a probe beam of ``probe_diameter``."""
        if not self.include_transit:
            return self
        rate = transit_broadening(probe_diameter, self.ensemble)
        return replace(self, scheme=self.scheme.with_dephasing(rate), include_transit=False)

    def drives(
        self,
        probe_rabi: float,
        coupling_rabi: float,
        carrier: float | None = None,
        rf_field: float = 0.0,
        coupling_detuning: float | None = None,
    ) -> list[DriveField]:
        dc = self.coupling_detuning if coupling_detuning is None else coupling_detuning
        out = [
            DriveField(self.probe_pair, probe_rabi, self.probe_detuning, wavenumber(self.probe_wavelength), "probe"),
            # counter-propagating
            DriveField(self.coupling_pair, coupling_rabi, dc, -wavenumber(self.coupling_wavelength), "coupling"),
        ]
        if carrier is not None and rf_field > 0:
            out += rf_drives(self.scheme, carrier, rf_field, self.rf_window)
        return out

    def susceptibility(self, drives: list[DriveField]) -> complex:
        return doppler_average(self.scheme, drives, self.ensemble, self.method)

    def transmission(self, drives: list[DriveField]) -> float:
        return transmission(self.susceptibility(drives), self.probe_wavelength, self.cell_length, self.passes)

    def beam_transmission(
        self,
        probe_rabi: float,
        coupling_rabi: float,
        size_ratio: float,
        carrier: float | None = None,
        rf_field: float = 0.0,
        coupling_detuning: float | None = None,
    ) -> float:
        """Power transmission of the whole probe beam.

        Each radial ray sees the local Rabi frequencies of two Gaussian
        profiles and its own Beer-Lambert attenuation; the rays are weighted by
        the probe power they carry. ``size_ratio`` is (probe diameter /
        coupling diameter)^2. With u = 2 r^2 / w_p^2 the power weight is
        exp(-u), so Gauss-Laguerre nodes integrate it directly.
        """
        if size_ratio <= 0:
            raise ConfigurationError("must be > 0", field="size_ratio")
        u, weights = _laguerre(self.transverse_nodes)
        total = 0.0
        for ui, wi in zip(u, weights):
            drives = self.drives(
                probe_rabi * np.exp(-ui / 2),
                coupling_rabi * np.exp(-ui * size_ratio / 2),
                carrier,
                rf_field,
                coupling_detuning,
            )
            total += wi * self.transmission(drives)
        return float(total)


@lru_cache(maxsize=16)
def _laguerre(order: int) -> tuple[np.ndarray, np.ndarray]:
    if order == 0:
        return np.zeros(1), np.ones(1)
    return np.polynomial.laguerre.laggauss(order)


def coupling_scan(config: AtomicConfig, probe_rabi: float, coupling_rabi: float, detunings, carrier=None, rf_field=0.0):
    """Doppler-averaged susceptibility along a coupling-laser detuning scan."""
    return np.array(
        [
            config.susceptibility(config.drives(probe_rabi, coupling_rabi, carrier, rf_field, coupling_detuning=dc))
            for dc in np.asarray(detunings, dtype=float)
        ]
    )
