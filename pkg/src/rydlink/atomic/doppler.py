"""Probe susceptibility, thermal Doppler averaging and cell transmission.

Two averaging routes are provided:

``"poles"`` (default)
    The generator is affine in velocity, ``L(v) = L0 + v L1`` with ``L1``
    diagonal, so any coherence is a rational function of ``v``. Its poles and
    residues follow from one small eigenproblem, and each pole is averaged
    exactly over the Maxwell distribution with the Faddeeva function. This
    resolves sub-kHz two-photon features inside a ~GHz Doppler profile, which
    no fixed-order Gauss-Hermite rule can.

``"quadrature"``
    Composite Gauss-Legendre over +-6 sigma with the panel count doubled until
    successive estimates agree to ``rtol``.
"""
from __future__ import annotations

import logging
import warnings

import numpy as np
import scipy.constants as sc
import scipy.linalg as sla
from scipy.special import wofz

from ..errors import ConfigurationError, ConvergenceWarning, NumericalError, PhysicsViolationError
from .lindblad import (
    SteadyState,
    _augmented,
    build_liouvillian,
    doppler_generator,
    solve_augmented,
    steady_state_many,
)
from .scheme import DriveField, LevelScheme, ThermalEnsemble

log = logging.getLogger(__name__)

GL_NODES, GL_WEIGHTS = np.polynomial.legendre.leggauss(8)
MAX_PANELS = 4096
_CHUNK = 4096


def susceptibility_constant(density: float, dipole: float) -> float:
    return 2 * density * dipole**2 / (sc.epsilon_0 * sc.hbar)


def probe_drive(drives: list[DriveField]) -> DriveField:
    for d in drives:
        if d.kind == "probe":
            return d
    raise ConfigurationError("no probe drive configured")


def probe_susceptibility(
    state: SteadyState,
    ensemble: ThermalEnsemble,
    probe: DriveField,
    dipole: float,
    scheme: LevelScheme | None = None,
) -> complex:
    """Linear susceptibility seen by the probe at a single velocity.

    Without ``scheme`` the probe is assumed to couple levels 0 and 1.
    """
    if probe.rabi <= 0:
        raise ConfigurationError(
            "probe Rabi frequency is zero; susceptibility divides by it. "
            "Use a small finite probe Rabi frequency for the weak-probe limit."
        )
    lo, up = (0, 1) if scheme is None else (scheme.index(probe.pair[0]), scheme.index(probe.pair[1]))
    return susceptibility_constant(ensemble.density, dipole) * state.coherence(lo, up) / probe.rabi


def gaussian_resolvent(pole: complex, sigma: float) -> complex:
    """<1/(v - pole)> over a zero-mean normal distribution of width sigma."""
    z = pole / (np.sqrt(2) * sigma)
    pref = np.sqrt(np.pi) / (np.sqrt(2) * sigma)
    if z.imag > 0:
        return 1j * pref * wofz(z)
    if z.imag < 0:
        return -1j * pref * np.conj(wofz(np.conj(z)))
    raise NumericalError(f"undamped resonance on the real velocity axis (pole {pole:.6g} m/s)")


class _PoleExpansion:
    """c(v) = c0 - sum_k v a_k / (1 + v lam_k) for one density-matrix element."""

    def __init__(self, scheme: LevelScheme, drives: list[DriveField], target: int):
        L0 = build_liouvillian(scheme, drives, 0.0)
        a0, b, scale = _augmented(L0)
        a1 = doppler_generator(scheme, drives) / scale
        a1[0] = 0.0
        x0 = solve_augmented(a0, b)
        self.c0 = x0[target]
        cols = np.flatnonzero(np.abs(a1) > 0)
        self.lam = np.zeros(0, dtype=complex)
        self.amp = np.zeros(0, dtype=complex)
        self.cond = 1.0
        if cols.size == 0:
            return
        rhs = np.zeros((a0.shape[0], cols.size), dtype=complex)
        rhs[cols, np.arange(cols.size)] = a1[cols]
        gd = sla.solve(a0, rhs, check_finite=False)
        q = gd[cols, :]
        lam, vecs = np.linalg.eig(q)
        self.cond = float(np.linalg.cond(vecs))
        alpha = gd[target, :] @ vecs
        beta = np.linalg.solve(vecs, x0[cols])
        self.lam = lam
        self.amp = alpha * beta

    def __call__(self, v: np.ndarray) -> np.ndarray:
        v = np.asarray(v, dtype=float)[..., None]
        return self.c0 - np.sum(v * self.amp / (1 + v * self.lam), axis=-1)

    def average(self, sigma: float) -> complex:
        total = complex(self.c0)
        for lam, amp in zip(self.lam, self.amp):
            x = lam * sigma
            if abs(x) < 1e-3:
                # far pole: moment series of -v a / (1 + v lam)
                total += amp * (lam * sigma**2 + 3 * lam**3 * sigma**4 + 15 * lam**5 * sigma**6)
            else:
                pole = -1.0 / lam
                total += -amp / lam + amp / lam**2 * gaussian_resolvent(pole, sigma)
        return total


def _direct_element(scheme, drives, velocities, target):
    return steady_state_many(scheme, drives, velocities)[:, target]


def _pole_average(scheme, drives, sigma, target) -> complex | None:
    expansion = _PoleExpansion(scheme, drives, target)
    if expansion.cond > 1e8:
        log.debug("pole expansion eigenbasis ill-conditioned (%.3g)", expansion.cond)
        return None
    probe_v = np.array([-1.7, -0.4, 0.9, 2.3]) * sigma
    direct = _direct_element(scheme, drives, probe_v, target)
    err = np.max(np.abs(expansion(probe_v) - direct))
    if err > 1e-8 * max(np.max(np.abs(direct)), 1e-300) + 1e-15:
        log.debug("pole expansion failed reconstruction check (err %.3g)", err)
        return None
    return expansion.average(sigma)


def _composite_rule(panels: int, sigma: float) -> tuple[np.ndarray, np.ndarray]:
    edges = np.linspace(-6 * sigma, 6 * sigma, panels + 1)
    half = 0.5 * np.diff(edges)
    mid = 0.5 * (edges[1:] + edges[:-1])
    v = (mid[:, None] + half[:, None] * GL_NODES[None, :]).ravel()
    w = (half[:, None] * GL_WEIGHTS[None, :]).ravel()
    w = w * np.exp(-0.5 * (v / sigma) ** 2) / (np.sqrt(2 * np.pi) * sigma)
    return v, w


def _quadrature_average(scheme, drives, sigma, target, order, rtol) -> complex:
    def estimate(panels):
        v, w = _composite_rule(panels, sigma)
        acc = 0j
        for start in range(0, v.size, _CHUNK):
            sl = slice(start, start + _CHUNK)
            acc += np.sum(w[sl] * _direct_element(scheme, drives, v[sl], target))
        return acc

    panels = order
    previous = estimate(panels)
    while True:
        panels *= 2
        current = estimate(panels)
        if abs(current - previous) <= rtol * abs(current):
            return current
        if panels >= MAX_PANELS:
            warnings.warn(
                f"Doppler quadrature not converged at {panels} panels: "
                f"last estimates {previous:.6g}, {current:.6g}",
                ConvergenceWarning,
                stacklevel=3,
            )
            return current
        previous = current


def averaged_element(
    scheme: LevelScheme,
    drives: list[DriveField],
    ensemble: ThermalEnsemble,
    pair: tuple[int, int],
    method: str = "poles",
    rtol: float = 1e-3,
) -> complex:
    """Maxwell-averaged steady-state element ``rho[pair]``."""
    target = pair[0] * scheme.n + pair[1]
    sigma = ensemble.velocity_spread
    if method == "poles":
        value = _pole_average(scheme, drives, sigma, target)
        if value is not None:
            return value
        method = "quadrature"
    if method == "quadrature":
        return _quadrature_average(scheme, drives, sigma, target, ensemble.quadrature_order, rtol)
    raise ConfigurationError(f"unknown Doppler averaging method {method!r}")


def doppler_average(
    scheme: LevelScheme,
    drives: list[DriveField],
    ensemble: ThermalEnsemble,
    method: str = "poles",
    rtol: float = 1e-3,
) -> complex:
    """Doppler-averaged probe susceptibility.

    The probe and coupling wavenumbers must have opposite signs, as they do
    for the counter-propagating pairs set up by the retroreflector.
    """
    probe = probe_drive(drives)
    if probe.rabi <= 0:
        raise ConfigurationError(
            "probe Rabi frequency is zero; use a small finite value for the weak-probe limit"
        )
    coupling = [d for d in drives if d.kind == "coupling"]
    if coupling and coupling[0].wavenumber * probe.wavenumber > 0:
        raise ConfigurationError("probe and coupling must counter-propagate (opposite wavenumber signs)")
    pair = (scheme.index(probe.pair[0]), scheme.index(probe.pair[1]))
    rho = averaged_element(scheme, drives, ensemble, pair, method, rtol)
    return susceptibility_constant(ensemble.density, scheme.dipole(probe.pair)) * rho / probe.rabi


def transmission(chi: complex, wavelength: float, cell_length: float, passes: int = 2) -> float:
    """Beer-Lambert intensity transmission through ``passes`` transits of the cell."""
    if cell_length <= 0:
        raise ConfigurationError("cell length must be > 0", field="cell_length")
    if chi.imag < -(1e-9 * abs(chi) + 1e-18):
        raise PhysicsViolationError(f"negative absorption Im(chi) = {chi.imag:.3g}")
    k = 2 * np.pi / wavelength
    return float(np.exp(-k * max(chi.imag, 0.0) * passes * cell_length))


def transit_broadening(beam_diameter: float, ensemble: ThermalEnsemble) -> float:
    """Transit-time dephasing sqrt(2) v_mean / d in rad/s."""
    if beam_diameter <= 0:
        raise ConfigurationError("beam diameter must be > 0", field="beam_diameter")
    return np.sqrt(2) * ensemble.mean_speed / beam_diameter
