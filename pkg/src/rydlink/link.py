"""Retroreflected free-space link: powers, Rabi frequencies and clipping vs distance.

The probe leaves the base station, crosses the cell, is returned by the corner
cube through the cell a second time and is collected by the detection optics.
The cell sits directly in front of the reflector.
"""
from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from .errors import ConfigurationError
from .optics import (
    GaussianBeam,
    diameter_at,
    fraction_through_aperture,
    rabi_from_power,
    radius_at,
    rayleigh_length,
)

#: Bare glass at normal incidence, n ~ 1.5.
UNCOATED_TRANSMITTANCE = 0.96
#: Lumped loss (Rb on the windows, residual misalignment) that brings the demo
#: link to ~55 % total probe efficiency at 30 m.
DEMO_CONTAMINATION = 0.8615


@dataclass(frozen=True)
class LinkGeometry:
    distance: float
    cell_length: float = 0.150
    cell_bore: float = 0.027
    reflector_aperture: float = 0.0254
    detector_aperture_radius: float = 0.0127
    surface_transmittance: float = UNCOATED_TRANSMITTANCE
    reflector_reflectance: float = 0.99
    contamination: float = DEMO_CONTAMINATION
    beam_separation: float = 0.008
    surfaces_per_pass: int = 4

    def __post_init__(self):
        if self.distance <= 0:
            raise ConfigurationError("distance must be > 0", field="link.distance")
        for name in ("cell_length", "cell_bore", "reflector_aperture", "detector_aperture_radius"):
            if getattr(self, name) <= 0:
                raise ConfigurationError("must be > 0", field=f"link.{name}")
        for name in ("surface_transmittance", "reflector_reflectance", "contamination"):
            value = getattr(self, name)
            if not 0 < value <= 1:
                raise ConfigurationError(f"must be in (0, 1], got {value}", field=f"link.{name}")
        if self.beam_separation < 0:
            raise ConfigurationError("must be >= 0", field="link.beam_separation")
        if self.cell_length >= self.distance:
            raise ConfigurationError(
                f"cell length {self.cell_length} m must be shorter than the link distance {self.distance} m",
                field="link.cell_length",
            )

    @property
    def cell_position(self) -> float:
        return self.distance + self.cell_length / 2

    def at(self, distance: float) -> "LinkGeometry":
        return replace(self, distance=distance)


@dataclass(frozen=True)
class OverlapDiagnostics:
    crossover_distance: float  # probe diameter exceeds coupling diameter beyond this; inf if never
    probe_margin_cell: float  # (bore - separation) - probe diameter
    coupling_margin_cell: float
    probe_margin_reflector: float
    probe_exceeds_coupling: bool
    probe_clipped_cell: bool
    coupling_clipped_cell: bool
    probe_clipped_reflector: bool
    pairs_overlap: bool  # counter-propagating pairs touch at the 1/e^2 radius

    @property
    def flags(self) -> dict[str, bool]:
        return {
            "probe_exceeds_coupling": self.probe_exceeds_coupling,
            "probe_clipped_cell": self.probe_clipped_cell,
            "coupling_clipped_cell": self.coupling_clipped_cell,
            "probe_clipped_reflector": self.probe_clipped_reflector,
            "pairs_overlap": self.pairs_overlap,
        }


@dataclass(frozen=True)
class LinkBudgetReport:
    distance: float
    probe_diameter: float
    coupling_diameter: float
    probe_rabi: float
    coupling_rabi: float
    probe_power: float
    returned_power: float
    efficiency: float
    channels: dict[str, float] = field(default_factory=dict)
    overlap: OverlapDiagnostics | None = None


def crossover_distance(probe: GaussianBeam, coupling: GaussianBeam) -> float:
    """First distance beyond the base station where the probe becomes wider than the coupling beam."""
    # w^2(z) = w0^2 (1 + (z - z0)^2 / zR^2) is quadratic in z
    def coeffs(b: GaussianBeam):
        c = b.waist**2 / rayleigh_length(b) ** 2
        return np.array([c, -2 * c * b.waist_position, b.waist**2 + c * b.waist_position**2])

    poly = coeffs(probe) - coeffs(coupling)
    if np.allclose(poly, 0, atol=1e-18):
        return np.inf
    roots = np.roots(np.trim_zeros(poly, "f"))
    candidates = sorted(r.real for r in roots if abs(r.imag) < 1e-12 and r.real > 0)
    for z in candidates:
        if radius_at(probe, z * 1.0001 + 1e-9) > radius_at(coupling, z * 1.0001 + 1e-9):
            return float(z)
    return np.inf


def overlap_diagnostics(geometry: LinkGeometry, probe: GaussianBeam, coupling: GaussianBeam) -> OverlapDiagnostics:
    z = geometry.cell_position
    d_probe = float(diameter_at(probe, z))
    d_coupling = float(diameter_at(coupling, z))
    room = geometry.cell_bore - geometry.beam_separation
    probe_margin = room - d_probe
    coupling_margin = room - d_coupling
    reflector_margin = geometry.reflector_aperture - geometry.beam_separation - d_probe
    return OverlapDiagnostics(
        crossover_distance=crossover_distance(probe, coupling),
        probe_margin_cell=probe_margin,
        coupling_margin_cell=coupling_margin,
        probe_margin_reflector=reflector_margin,
        probe_exceeds_coupling=d_probe > d_coupling,
        probe_clipped_cell=probe_margin < 0,
        coupling_clipped_cell=coupling_margin < 0,
        probe_clipped_reflector=reflector_margin < 0,
        pairs_overlap=max(d_probe, d_coupling) > geometry.beam_separation,
    )


def loss_channels(geometry: LinkGeometry, probe: GaussianBeam) -> dict[str, float]:
    """Single-channel efficiencies; their product is the total probe efficiency."""
    L = geometry.distance
    cell = fraction_through_aperture(probe, geometry.cell_position, geometry.cell_bore / 2)
    return {
        "surfaces": geometry.surface_transmittance ** (2 * geometry.surfaces_per_pass),
        "reflector": geometry.reflector_reflectance,
        "contamination": geometry.contamination,
        "clip_cell": float(cell**2),
        "clip_reflector": float(
            fraction_through_aperture(probe, L + geometry.cell_length, geometry.reflector_aperture / 2)
        ),
        "clip_detector": float(
            fraction_through_aperture(probe, 2 * L, geometry.detector_aperture_radius)
        ),
    }


def evaluate_link(
    geometry: LinkGeometry,
    probe: GaussianBeam,
    coupling: GaussianBeam,
    probe_dipole: float,
    coupling_dipole: float,
    intensity_factor: float = 1.0,
) -> LinkBudgetReport:
    """Beam sizes and Rabi frequencies at the cell centre plus the returned probe power.

    Clipping beyond the cell bore or reflector is reported through the overlap
    flags rather than raised.
    """
    z = geometry.cell_position
    channels = loss_channels(geometry, probe)
    efficiency = float(np.prod(list(channels.values())))
    return LinkBudgetReport(
        distance=geometry.distance,
        probe_diameter=float(diameter_at(probe, z)),
        coupling_diameter=float(diameter_at(coupling, z)),
        probe_rabi=float(rabi_from_power(probe, z, probe_dipole, intensity_factor)),
        coupling_rabi=float(rabi_from_power(coupling, z, coupling_dipole, intensity_factor)),
        probe_power=probe.power,
        returned_power=probe.power * efficiency,
        efficiency=efficiency,
        channels=channels,
        overlap=overlap_diagnostics(geometry, probe, coupling),
    )


def probe_power_for_constant_rabi(geometry: LinkGeometry, probe: GaussianBeam, reference_distance: float) -> float:
    """Probe power that reproduces, at ``geometry.distance``, the on-axis probe
    Rabi frequency that ``probe.power`` gives at ``reference_distance``."""
    if reference_distance <= 0:
        raise ConfigurationError("reference distance must be > 0", field="reference_distance")
    w = radius_at(probe, geometry.cell_position)
    w_ref = radius_at(probe, reference_distance + geometry.cell_length / 2)
    return float(probe.power * (w / w_ref) ** 2)
