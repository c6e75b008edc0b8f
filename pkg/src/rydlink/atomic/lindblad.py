"""Rotating-frame Lindblad generator and its steady state.

Density matrices are vectorised row-major, ``vec(rho)[i*N + j] = rho[i, j]``,
so ``A rho B`` maps to ``kron(A, B.T)``.
"""
from __future__ import annotations

from collections import deque
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
import scipy.linalg as sla

from ..errors import ConfigurationError, ModelError, NumericalError
from .scheme import DriveField, LevelScheme

#: Reciprocal condition number below which the steady-state system is rejected.
RCOND_MIN = 1e-14


@dataclass(frozen=True)
class SteadyState:
    rho: np.ndarray
    residual: float

    @property
    def populations(self) -> np.ndarray:
        return self.rho.diagonal().real.copy()

    def coherence(self, i: int, j: int) -> complex:
        return complex(self.rho[i, j])


def _check_drives(scheme: LevelScheme, drives: list[DriveField]) -> list[tuple[int, int, DriveField]]:
    kinds = [d.kind for d in drives]
    for kind in ("probe", "coupling"):
        if kinds.count(kind) > 1:
            raise ConfigurationError(f"at most one {kind} drive is allowed, got {kinds.count(kind)}")
    out = []
    seen = set()
    for d in drives:
        try:
            lo, up = scheme.index(d.pair[0]), scheme.index(d.pair[1])
        except ConfigurationError as exc:
            raise ConfigurationError(f"drive on nonexistent pair {d.pair}: {exc}") from None
        if lo == up:
            raise ConfigurationError(f"drive on pair {d.pair} couples a level to itself")
        key = frozenset((lo, up))
        if key in seen:
            raise ConfigurationError(f"two drives on pair {d.pair}")
        seen.add(key)
        out.append((lo, up, d))
    return out


def frame_diagonal(scheme: LevelScheme, drives: list[DriveField], velocity: float = 0.0) -> np.ndarray:
    """Diagonal of the rotating-frame Hamiltonian (rad/s).

    Walks the drive graph from the ground level; each drive fixes the frame of
    one level relative to another. A closed loop whose detunings do not add up
    cannot be absorbed into a single frame and raises :class:`ModelError`.
    """
    indexed = _check_drives(scheme, drives)
    n = scheme.n
    h = np.full(n, np.nan)
    adjacency: dict[int, list[tuple[int, int, float]]] = {i: [] for i in range(n)}
    for lo, up, d in indexed:
        delta = d.detuning - d.wavenumber * velocity
        adjacency[lo].append((lo, up, delta))
        adjacency[up].append((lo, up, delta))

    for root in range(n):
        if not np.isnan(h[root]):
            continue
        h[root] = 0.0
        queue = deque([root])
        while queue:
            a = queue.popleft()
            for lo, up, delta in adjacency[a]:
                # upper level sits at (lower - detuning)
                if a == lo:
                    other, value = up, h[lo] - delta
                else:
                    other, value = lo, h[up] + delta
                if np.isnan(h[other]):
                    h[other] = value
                    queue.append(other)
                elif not np.isclose(h[other], value, rtol=1e-9, atol=1e-6):
                    raise ModelError(
                        f"inconsistent rotating frame at pair "
                        f"({scheme.labels[lo]}, {scheme.labels[up]}): level "
                        f"{scheme.labels[other]} would need two frame frequencies"
                    )
    return h + np.array([lv.offset for lv in scheme.levels])


@lru_cache(maxsize=64)
def dissipator(scheme: LevelScheme) -> np.ndarray:
    """Decay and dephasing part of the generator (independent of the drives)."""
    n = scheme.n
    eye = np.eye(n)
    out = np.zeros((n * n, n * n), dtype=complex)

    def add_jump(c: np.ndarray) -> None:
        cdc = c.conj().T @ c
        out[...] += np.kron(c, c.conj()) - 0.5 * (np.kron(cdc, eye) + np.kron(eye, cdc.T))

    for i, lv in enumerate(scheme.levels):
        if lv.decay > 0:
            target = 0 if lv.decays_to is None else scheme.index(lv.decays_to)
            c = np.zeros((n, n))
            c[target, i] = np.sqrt(lv.decay)
            add_jump(c)
        if lv.dephasing > 0:
            # coherences rho_ij (j != i) decay at +dephasing
            c = np.zeros((n, n))
            c[i, i] = np.sqrt(2 * lv.dephasing)
            add_jump(c)
    if scheme.collective_dephasing > 0 and n > 2:
        c = np.zeros((n, n))
        c[np.arange(2, n), np.arange(2, n)] = np.sqrt(2 * scheme.collective_dephasing)
        add_jump(c)
    out.setflags(write=False)
    return out


def hamiltonian(scheme: LevelScheme, drives: list[DriveField], velocity: float = 0.0) -> np.ndarray:
    h = np.diag(frame_diagonal(scheme, drives, velocity)).astype(complex)
    for lo, up, d in _check_drives(scheme, drives):
        h[lo, up] += d.rabi / 2
        h[up, lo] += d.rabi / 2
    return h


def build_liouvillian(scheme: LevelScheme, drives: list[DriveField], velocity: float = 0.0) -> np.ndarray:
    """Generator ``L`` with ``d vec(rho)/dt = L vec(rho)``.

    Optical drives see the detuning ``Delta - k v``; RF drives carry ``k = 0``.
    """
    h = hamiltonian(scheme, drives, velocity)
    eye = np.eye(scheme.n)
    return -1j * (np.kron(h, eye) - np.kron(eye, h.T)) + dissipator(scheme)


def doppler_generator(scheme: LevelScheme, drives: list[DriveField]) -> np.ndarray:
    """Diagonal of ``dL/dv`` (the generator is affine in velocity)."""
    n = scheme.n
    s = frame_diagonal(scheme, drives, 1.0) - frame_diagonal(scheme, drives, 0.0)
    return (-1j * (s[:, None] - s[None, :])).ravel()


def _augmented(L: np.ndarray) -> tuple[np.ndarray, np.ndarray, float]:
    """Scale ``L`` and replace the rho_00 equation by the trace condition."""
    dim = L.shape[0]
    n = int(round(np.sqrt(dim)))
    if n * n != dim:
        raise ConfigurationError(f"superoperator of size {dim} is not N^2 x N^2")
    scale = float(np.max(np.abs(L)))
    if scale == 0.0:
        raise NumericalError("steady state undefined: generator is identically zero", condition=np.inf)
    a = L / scale
    a[0, :] = 0.0
    a[0, :: n + 1] = 1.0
    b = np.zeros(dim, dtype=complex)
    b[0] = 1.0
    return a, b, scale


def solve_augmented(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    lu, piv = sla.lu_factor(a, check_finite=False)
    (gecon,) = sla.get_lapack_funcs(("gecon",), (lu,))
    anorm = np.linalg.norm(a, 1)
    rcond, _ = gecon(lu, anorm, norm="1")
    if not np.isfinite(rcond) or rcond < RCOND_MIN:
        raise NumericalError(
            f"steady-state system is singular or ill-conditioned (condition ~ {1 / max(rcond, 1e-300):.3g})",
            condition=1 / max(rcond, 1e-300),
        )
    return sla.lu_solve((lu, piv), b, check_finite=False)


def _finish(L: np.ndarray, x: np.ndarray) -> SteadyState:
    n = int(round(np.sqrt(x.size)))
    rho = x.reshape(n, n)
    rho = 0.5 * (rho + rho.conj().T)
    rho = rho / np.trace(rho).real
    vec = rho.ravel()
    residual = float(np.linalg.norm(L @ vec) / (np.linalg.norm(L) * np.linalg.norm(vec)))
    return SteadyState(rho, residual)


def steady_state(L: np.ndarray) -> SteadyState:
    """Solve ``L rho = 0`` with ``tr rho = 1`` by dense LU.

    The reported residual is ``|L rho| / (|L|_F |rho|)``.
    """
    a, b, _ = _augmented(L)
    return _finish(L, solve_augmented(a, b))


def steady_state_many(scheme: LevelScheme, drives: list[DriveField], velocities: np.ndarray) -> np.ndarray:
    """Steady-state vectors for many velocities at once, shape (len(v), N^2).

    Uses the affine velocity dependence to batch the solves; no condition
    check, so callers use it where :func:`steady_state` has already been
    validated for the same drives.
    """
    L0 = build_liouvillian(scheme, drives, 0.0)
    dl = doppler_generator(scheme, drives)
    n = scheme.n
    scale = float(np.max(np.abs(L0)))
    v = np.asarray(velocities, dtype=float)
    a = np.broadcast_to(L0 / scale, (v.size,) + L0.shape).copy()
    idx = np.arange(n * n)
    a[:, idx, idx] += v[:, None] * dl[None, :] / scale
    a[:, 0, :] = 0.0
    a[:, 0, :: n + 1] = 1.0
    b = np.zeros((v.size, n * n, 1), dtype=complex)
    b[:, 0, 0] = 1.0
    return np.linalg.solve(a, b)[..., 0]
