"""Line-shape and curve analysis used on simulated spectra and scans.

Frequencies here are whatever unit the caller passes in; the helpers never
convert.
"""
from __future__ import annotations

from dataclasses import dataclass
import warnings
from typing import Callable

import numpy as np
from scipy.optimize import OptimizeWarning, curve_fit, minimize_scalar
from scipy.signal import find_peaks

from .errors import NumericalError


@dataclass(frozen=True)
class LinewidthFit:
    fwhm: float
    center: float
    residual: float  # rms misfit relative to the peak-to-peak signal


def _double_pole(x, amplitude, phase, half_width, center, background):
    return background + amplitude * np.real(np.exp(1j * phase) / (half_width - 1j * (x - center)) ** 2)


def eit_linewidth(detuning, absorption) -> LinewidthFit:
    """EIT linewidth of a coupling-laser scan of Im(chi).

    Doppler averaging over a ladder turns the transparency window into a
    double pole in the coupling detuning, so the scan is fitted to
    ``B + A Re[exp(i phi) / (a - i (x - x0))^2]``. The reported linewidth is
    the pole FWHM ``2 a``. The fit reproduces the residual-Doppler floor
    ``|k_p - k_c| / k_p * Gamma_e`` when all other broadening is off.
    """
    x = np.asarray(detuning, dtype=float)
    y = np.asarray(absorption, dtype=float)
    if x.size < 8:
        raise NumericalError("need at least 8 points to fit a linewidth")
    span = np.ptp(y)
    if span == 0:
        raise NumericalError("flat spectrum: no EIT feature to fit")
    # work in units of the scan width to keep the fit well scaled
    scale = np.ptp(x) / 10
    xs = x / scale
    x0 = xs[np.argmin(y)]
    p0 = [-span * 1.0, 0.0, 1.0, x0, float(np.median(y))]
    try:
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", OptimizeWarning)
            p, _ = curve_fit(_double_pole, xs, y, p0=p0, maxfev=20000)
    except RuntimeError as exc:
        raise NumericalError(f"linewidth fit did not converge: {exc}") from None
    residual = float(np.std(y - _double_pole(xs, *p)) / span)
    return LinewidthFit(fwhm=float(2 * abs(p[2]) * scale), center=float(p[3] * scale), residual=residual)


def refine_extremum(f: Callable[[float], float], lo: float, hi: float, maximum: bool = True, xtol: float = 1e-6) -> float:
    """Location of the extremum of ``f`` bracketed by ``[lo, hi]``."""
    sign = -1.0 if maximum else 1.0
    res = minimize_scalar(lambda x: sign * f(x), bounds=(lo, hi), method="bounded", options={"xatol": xtol})
    return float(res.x)


def peak_pair_splitting(x, y, f: Callable[[float], float] | None = None) -> tuple[float, float]:
    """Positions of the two most prominent maxima of ``y(x)``.

    With ``f`` given, each grid maximum is polished by a bounded search of
    ``f`` over its neighbouring grid cells.
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    idx, props = find_peaks(y, prominence=0)
    if idx.size < 2:
        raise NumericalError(f"expected two peaks, found {idx.size}")
    top = np.sort(idx[np.argsort(props["prominences"])[-2:]])
    out = []
    for i in top:
        if f is None:
            out.append(float(x[i]))
        else:
            out.append(refine_extremum(f, x[max(i - 1, 0)], x[min(i + 1, x.size - 1)], xtol=abs(x[1] - x[0]) * 1e-6))
    return out[0], out[1]


@dataclass(frozen=True)
class Resonance:
    center: float
    height: float
    fwhm: float
    truncated: bool  # a half-maximum crossing fell outside the data
    edges: tuple[float, float] = (float("nan"), float("nan"))

    @property
    def midpoint(self) -> float:
        """Centre of the half-maximum span; robust to a split or flat top."""
        return 0.5 * (self.edges[0] + self.edges[1])


def _crossing(x, y, i, j, level):
    # linear interpolation between samples i and j straddling level
    return x[i] + (level - y[i]) * (x[j] - x[i]) / (y[j] - y[i])


def resonance_width(x, y, near: float, window: float, baseline: float = 0.0) -> Resonance:
    """Full width at half maximum of the feature around ``near``.

    The maximum is taken inside ``near +- window / 2``; the width runs between
    the outermost half-maximum crossings reached by walking outward from
    it, so a central dip above half maximum does not split the line. When a
    crossing lies beyond the data the width is measured to the data edge and
    ``truncated`` is set.
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float) - baseline
    inside = np.flatnonzero(np.abs(x - near) <= window / 2)
    if inside.size == 0:
        raise NumericalError(f"no samples within {window} of {near}")
    k = inside[np.argmax(y[inside])]
    peak = y[k]
    if peak <= 0:
        raise NumericalError("no feature above the baseline")
    half = peak / 2
    truncated = False
    i = k
    while i > 0 and y[i - 1] >= half:
        i -= 1
    if i == 0:
        left, truncated = x[0], True
    else:
        left = _crossing(x, y, i - 1, i, half)
    j = k
    while j < x.size - 1 and y[j + 1] >= half:
        j += 1
    if j == x.size - 1:
        right, truncated = x[-1], True
    else:
        right = _crossing(x, y, j, j + 1, half)
    return Resonance(
        center=float(x[k]),
        height=float(peak + baseline),
        fwhm=float(right - left),
        truncated=truncated,
        edges=(float(left), float(right)),
    )


@dataclass(frozen=True)
class Knee:
    position: float  # in the same units as the input x
    slopes: tuple[float, float]
    residual: float


def _two_segment(x, y, b):
    a = np.column_stack([np.ones_like(x), x, np.maximum(x - b, 0.0)])
    coef, *_ = np.linalg.lstsq(a, y, rcond=None)
    r = y - a @ coef
    return float(r @ r), coef


def two_segment_knee(x, y) -> Knee:
    """Breakpoint of the continuous two-segment linear fit of ``y(x)``.

    The breakpoint is searched on a fine grid between the second and the
    second-to-last sample and then polished with a bounded scalar search.
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.size < 4:
        raise NumericalError("need at least 4 points for a two-segment fit")
    grid = np.linspace(x[1], x[-2], 512)
    sse = np.array([_two_segment(x, y, b)[0] for b in grid])
    b0 = grid[int(np.argmin(sse))]
    h = grid[1] - grid[0]
    res = minimize_scalar(
        lambda b: _two_segment(x, y, b)[0],
        bounds=(max(b0 - h, x[1]), min(b0 + h, x[-2])),
        method="bounded",
    )
    sse, coef = _two_segment(x, y, res.x)
    return Knee(position=float(res.x), slopes=(float(coef[1]), float(coef[1] + coef[2])), residual=float(np.sqrt(sse / x.size)))


def saturation_knee(power, snr_db, span_db: float = 20.0) -> float:
    """Probe power at the onset of SNR saturation.

    Two-segment fit of SNR (dB) against log10(power) over the points leading
    up to the SNR maximum and lying within ``span_db`` of it. Tying the window
    to the peak rather than to the scan range keeps the result unchanged when
    a curve is merely shifted in power, and keeps the detection floor and the
    post-maximum roll-off out of the fit.
    """
    p = np.asarray(power, dtype=float)
    s = np.asarray(snr_db, dtype=float)
    if np.any(p <= 0):
        raise NumericalError("probe powers must be > 0")
    order = np.argsort(p)
    p, s = p[order], s[order]
    stop = int(np.argmax(s))
    start = stop
    while start > 0 and s[start - 1] >= s[stop] - span_db:
        start -= 1
    if stop - start < 3:
        raise NumericalError("too few points below the SNR maximum to locate a knee; extend the scan to lower power")
    return float(10 ** two_segment_knee(np.log10(p[start : stop + 1]), s[start : stop + 1]).position)


def power_law_exponent(x, y) -> float:
    """Slope of log|y| against log|x|."""
    x = np.abs(np.asarray(x, dtype=float))
    y = np.abs(np.asarray(y, dtype=float))
    return float(np.polyfit(np.log(x), np.log(y), 1)[0])
