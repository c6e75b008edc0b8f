"""Level schemes, drive fields and the thermal ensemble.

Rates, detunings and Rabi frequencies are angular (rad/s). RF transition
frequencies are cyclic (Hz) because that is how they are quoted and scanned.
"""
from __future__ import annotations

import dataclasses
from dataclasses import dataclass, field
from typing import Iterable, Literal, Sequence

import numpy as np
import scipy.constants as sc

from ..errors import ConfigurationError

TWO_PI = 2.0 * np.pi
BOHR = sc.physical_constants["Bohr radius"][0]
EA0 = sc.e * BOHR

RB87_MASS = 86.909180527 * sc.atomic_mass
RB87_ABUNDANCE = 0.2783

#: 5P3/2 natural linewidth.
GAMMA_5P = TWO_PI * 6.07e6
#: Rydberg population decay; not measured in the experiment, kept configurable.
GAMMA_RYDBERG = TWO_PI * 2e3

PROBE_WAVELENGTH = 780.241e-9
COUPLING_WAVELENGTH = 480.0e-9

#: 5S1/2 -> 5P3/2 cycling-transition dipole.
PROBE_DIPOLE = 2.534e-29
#: 5P3/2 -> 49D5/2. Chosen so 10 mW in a 6 mm (1/e^2) beam gives 2pi x 0.1 MHz
#: on axis: hbar * 2pi * 1e5 / sqrt(4 P / (pi w^2 c eps0)).
COUPLING_DIPOLE = 9.0763e-32
RF_DIPOLE_48F = 1300.0 * EA0
RF_DIPOLE_50P = 900.0 * EA0

#: Zero-RF EIT linewidth calibration: collective dephasing of the Rydberg
#: manifold (laser phase noise, collisions) that brings the Doppler-averaged coupling-scan linewidth to 2pi x 10 MHz with the
#: default 1 m link (weak probe, Omega_c = 2pi x 0.1 MHz, 293 K).
TECHNICAL_DEPHASING = TWO_PI * 3.1e6

DriveKind = Literal["probe", "coupling", "rf"]


@dataclass(frozen=True)
class Level:
    """One atomic level.

    ``offset`` is a static shift of the level in the rotating frame,
    ``decay`` its population decay rate and ``dephasing`` an extra pure
    dephasing rate. Decayed population goes to ``decays_to`` (the ground
    level when ``None``).
    """

    label: str
    offset: float = 0.0
    decay: float = 0.0
    dephasing: float = 0.0
    decays_to: str | None = None

    def __post_init__(self):
        if self.decay < 0 or self.dephasing < 0:
            raise ConfigurationError(
                f"rates must be >= 0 (decay={self.decay}, dephasing={self.dephasing})",
                field=f"levels.{self.label}",
            )


@dataclass(frozen=True)
class DipoleLink:
    pair: tuple[str, str]
    dipole: float


@dataclass(frozen=True)
class RFTransition:
    """RF-coupled pair, ordered (lower, upper) in energy."""

    pair: tuple[str, str]
    frequency: float


@dataclass(frozen=True)
class LevelScheme:
    levels: tuple[Level, ...]
    dipole_links: tuple[DipoleLink, ...] = ()
    rf_transitions: tuple[RFTransition, ...] = ()
    #: Dephasing common to every Rydberg level (index >= 2). It damps the
    #: optical coherences to the Rydberg manifold but leaves the RF coherences
    #: between Rydberg levels untouched, as laser phase noise does.
    collective_dephasing: float = 0.0

    def __post_init__(self):
        if self.collective_dephasing < 0:
            raise ConfigurationError("collective dephasing must be >= 0", field="scheme.collective_dephasing")
        if len(self.levels) < 2:
            raise ConfigurationError("a level scheme needs at least two levels", field="levels")
        labels = [lv.label for lv in self.levels]
        if len(set(labels)) != len(labels):
            raise ConfigurationError(f"duplicate level labels in {labels}", field="levels")
        for lv in self.levels:
            if lv.decays_to is not None:
                self.index(lv.decays_to)
        for group, name in ((self.dipole_links, "dipole_links"), (self.rf_transitions, "rf_transitions")):
            seen = set()
            for item in group:
                a, b = item.pair
                self.index(a), self.index(b)
                if a == b:
                    raise ConfigurationError(f"pair {item.pair} couples a level to itself", field=name)
                key = frozenset(item.pair)
                if key in seen:
                    raise ConfigurationError(f"pair {item.pair} listed twice", field=name)
                seen.add(key)
        for link in self.dipole_links:
            if link.dipole <= 0:
                raise ConfigurationError(f"dipole for {link.pair} must be > 0", field="dipole_links")
        for tr in self.rf_transitions:
            if tr.frequency <= 0:
                raise ConfigurationError(f"frequency for {tr.pair} must be > 0", field="rf_transitions")

    @property
    def n(self) -> int:
        return len(self.levels)

    @property
    def labels(self) -> list[str]:
        return [lv.label for lv in self.levels]

    def index(self, label: str) -> int:
        for i, lv in enumerate(self.levels):
            if lv.label == label:
                return i
        raise ConfigurationError(f"unknown level {label!r}; known levels are {self.labels}")

    def dipole(self, pair: Sequence[str]) -> float:
        key = frozenset(pair)
        for link in self.dipole_links:
            if frozenset(link.pair) == key:
                return link.dipole
        raise ConfigurationError(f"no dipole moment configured for pair {tuple(pair)}")

    def with_dephasing(self, extra: float, labels: Iterable[str] | None = None) -> "LevelScheme":
        """Copy with ``extra`` dephasing: collective on the Rydberg manifold, or per level for ``labels``."""
        if labels is None:
            return dataclasses.replace(self, collective_dephasing=self.collective_dephasing + extra)
        targets = set(labels)
        levels = tuple(
            dataclasses.replace(lv, dephasing=lv.dephasing + extra) if lv.label in targets else lv
            for lv in self.levels
        )
        return dataclasses.replace(self, levels=levels)

    def rydberg_labels(self) -> list[str]:
        # everything above the intermediate state
        return self.labels[2:]


@dataclass(frozen=True)
class DriveField:
    """A coherent drive on ``pair`` = (lower, upper).

    ``detuning`` is drive frequency minus transition frequency. ``wavenumber``
    carries the propagation direction; the Doppler shift enters as
    ``detuning - wavenumber * velocity``.
    """

    pair: tuple[str, str]
    rabi: float
    detuning: float = 0.0
    wavenumber: float = 0.0
    kind: DriveKind = "rf"

    def __post_init__(self):
        if self.rabi < 0:
            raise ConfigurationError(f"Rabi frequency must be >= 0, got {self.rabi}", field=f"drive{self.pair}")


@dataclass(frozen=True)
class ThermalEnsemble:
    temperature: float = 293.15
    mass: float = RB87_MASS
    density: float = field(default=None)  # type: ignore[assignment]
    quadrature_order: int = 48

    def __post_init__(self):
        if self.temperature <= 0:
            raise ConfigurationError("temperature must be > 0", field="ensemble.temperature")
        if self.density is None:
            object.__setattr__(self, "density", rb_number_density(self.temperature))
        if self.density <= 0:
            raise ConfigurationError("number density must be > 0", field="ensemble.density")
        if self.quadrature_order < 3:
            raise ConfigurationError("quadrature order must be >= 3", field="ensemble.quadrature_order")

    @property
    def velocity_spread(self) -> float:
        """Standard deviation of the 1-D Maxwell velocity distribution."""
        return float(np.sqrt(sc.k * self.temperature / self.mass))

    @property
    def mean_speed(self) -> float:
        return float(np.sqrt(8 * sc.k * self.temperature / (np.pi * self.mass)))


def rb_vapor_pressure(temperature: float) -> float:
    """Rubidium vapor pressure in Pa (Alcock-type fit, solid/liquid branches)."""
    if temperature < 312.45:
        log_atm = 4.857 - 4215.0 / temperature
    else:
        log_atm = 4.312 - 4040.0 / temperature
    return 10.0**log_atm * sc.atm


def rb_number_density(temperature: float, isotope_fraction: float = RB87_ABUNDANCE) -> float:
    """87Rb number density (m^-3) of a cell at ``temperature``."""
    return isotope_fraction * rb_vapor_pressure(temperature) / (sc.k * temperature)


def default_scheme(
    rydberg_decay: float = GAMMA_RYDBERG,
    rydberg_dephasing: float = TECHNICAL_DEPHASING,
) -> LevelScheme:
    """The 87Rb ladder: 5S1/2 - 5P3/2 - 49D5/2 with RF links to 50P3/2 and 48F7/2.

    Rydberg decay is lumped into a direct return to the ground state: the
    radiative cascade runs through low-lying levels, and spontaneous decay
    between the RF-coupled neighbours (rate ~ omega^3 at 20 GHz) is negligible.
    """
    levels = (
        Level("5S1/2"),
        Level("5P3/2", decay=GAMMA_5P),
        Level("49D5/2", decay=rydberg_decay),
        Level("50P3/2", decay=rydberg_decay),
        Level("48F7/2", decay=rydberg_decay),
    )
    links = (
        DipoleLink(("5S1/2", "5P3/2"), PROBE_DIPOLE),
        DipoleLink(("5P3/2", "49D5/2"), COUPLING_DIPOLE),
        DipoleLink(("50P3/2", "49D5/2"), RF_DIPOLE_50P),
        DipoleLink(("49D5/2", "48F7/2"), RF_DIPOLE_48F),
    )
    rf = (
        RFTransition(("50P3/2", "49D5/2"), 18.14e9),
        RFTransition(("49D5/2", "48F7/2"), 19.84e9),
    )
    return LevelScheme(levels, links, rf, collective_dephasing=rydberg_dephasing)


def rf_drives(
    scheme: LevelScheme,
    carrier: float,
    field_amplitude: float,
    window: float = 5e9,
) -> list[DriveField]:
    """Drives from one RF carrier (Hz) on every rf_transition within ``window`` of it.

    Each coupled pair gets its own Rabi frequency (dipole x field / hbar) and
    detuning 2pi (carrier - transition frequency).
    """
    if field_amplitude < 0:
        raise ConfigurationError("RF field amplitude must be >= 0", field="rf.field")
    drives = []
    for tr in scheme.rf_transitions:
        if abs(carrier - tr.frequency) <= window:
            rabi = scheme.dipole(tr.pair) * field_amplitude / sc.hbar
            drives.append(DriveField(tr.pair, rabi, TWO_PI * (carrier - tr.frequency), 0.0, "rf"))
    return drives


def wavenumber(wavelength: float) -> float:
    return TWO_PI / wavelength
