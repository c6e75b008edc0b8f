"""Scan execution and result files.

Each scan point is an independent pure evaluation. Points may be farmed out
to worker processes; results are collected in submission order and written by
this process alone, so output does not depend on the worker count.
"""
from __future__ import annotations

import copy
import csv
import json
import logging
import os
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from functools import lru_cache
from pathlib import Path
from typing import Any

import numpy as np

from .. import __version__
from ..analysis import saturation_knee
from ..atomic.response import AtomicConfig
from ..atomic.scheme import (
    TWO_PI,
    DipoleLink,
    Level,
    LevelScheme,
    RFTransition,
    ThermalEnsemble,
    rb_number_density,
)
from ..errors import ConfigurationError, RydlinkError
from ..link import LinkGeometry, evaluate_link, probe_power_for_constant_rabi
from ..optics import GaussianBeam, fit_beam
from ..transduction import DetectionChain, RFScene, ScanResult, tone_power_and_snr, transmission_waveform
from .config import SCAN_AXIS, ScenarioConfig, field_spec
from .units import BASE_UNIT, UNITS

log = logging.getLogger(__name__)


class ScanError(RydlinkError):
    """A scan point failed; ``index`` is its position in the scan order."""

    def __init__(self, index: int, cause: BaseException):
        self.index = index
        self.cause = cause
        super().__init__(f"scan point {index}: {type(cause).__name__}: {cause}")


# ----------------------------------------------------------------- model setup

@dataclass(frozen=True)
class Models:
    atomic: AtomicConfig
    probe: GaussianBeam
    coupling: GaussianBeam
    geometry: LinkGeometry
    scene: RFScene
    chain: DetectionChain
    probe_dipole: float
    coupling_dipole: float
    reference_distance: float
    constant_rabi: bool


def _scheme(data: dict) -> LevelScheme:
    s = data["scheme"]
    levels = tuple(
        Level(lv["label"], TWO_PI * lv["offset"], TWO_PI * lv["decay"], TWO_PI * lv["dephasing"], lv["decays_to"])
        for lv in s["levels"]
    )
    links = tuple(DipoleLink(tuple(d["pair"]), d["dipole"]) for d in s["dipoles"])
    rf = tuple(RFTransition(tuple(t["pair"]), t["frequency"]) for t in s["rf_transitions"])
    return LevelScheme(levels, links, rf, collective_dephasing=TWO_PI * s["collective_dephasing"])


def build_models(data: dict) -> Models:
    scheme = _scheme(data)
    e = data["ensemble"]
    density = e["density"] if e["density"] is not None else rb_number_density(e["temperature"], e["rb87_fraction"])
    ensemble = ThermalEnsemble(e["temperature"], density=density, quadrature_order=e["quadrature_order"])
    a = data["atomic"]
    beams = {
        name: GaussianBeam.from_diameter(b["wavelength"], b["diameter"], b["power"], b["waist_position"])
        for name, b in data["beams"].items()
    }
    atomic = AtomicConfig(
        scheme=scheme,
        ensemble=ensemble,
        probe_wavelength=beams["probe"].wavelength,
        coupling_wavelength=beams["coupling"].wavelength,
        probe_detuning=TWO_PI * a["probe_detuning"],
        coupling_detuning=TWO_PI * a["coupling_detuning"],
        cell_length=a["cell_length"],
        passes=a["passes"],
        rf_window=a["rf_window"],
        include_transit=a["include_transit"],
        method=e["method"],
        transverse_nodes=a["transverse_nodes"],
    )
    ln = data["link"]
    geometry = LinkGeometry(
        distance=ln["distance"],
        cell_length=a["cell_length"],
        cell_bore=ln["cell_bore"],
        reflector_aperture=ln["reflector_aperture"],
        detector_aperture_radius=ln["detector_aperture_radius"],
        surface_transmittance=ln["surface_transmittance"],
        reflector_reflectance=ln["reflector_reflectance"],
        contamination=ln["contamination"],
        beam_separation=ln["beam_separation"],
        surfaces_per_pass=ln["surfaces_per_pass"],
    )
    r = data["rf"]
    scene = RFScene(r["carrier"], r["power"], r["calibration"], r["modulation_frequency"], r["modulation_depth"])
    d = data["detection"]
    chain = DetectionChain(d["responsivity"], d["nep"], d["shot_factor"], d["rbw"], d["load"])
    labels = scheme.labels
    return Models(
        atomic=atomic,
        probe=beams["probe"],
        coupling=beams["coupling"],
        geometry=geometry,
        scene=scene,
        chain=chain,
        probe_dipole=scheme.dipole((labels[0], labels[1])),
        coupling_dipole=scheme.dipole((labels[1], labels[2])),
        reference_distance=ln["reference_distance"],
        constant_rabi=ln["probe_power_mode"] == "constant-rabi",
    )


def _set_path(data: dict, path: str, value) -> dict:
    out = copy.deepcopy(data)
    node = out
    *parents, leaf = path.split(".")
    for p in parents:
        node = node[p]
    node[leaf] = value
    return out


@lru_cache(maxsize=32)
def _models_for(key: str) -> Models:
    return build_models(json.loads(key))


def _key(data: dict) -> str:
    return json.dumps(data, sort_keys=True)


# -------------------------------------------------------------- scan points

def axis_values(scan: dict) -> np.ndarray:
    if scan["points"] == 1:
        return np.array([scan["start"]])
    if scan["spacing"] == "log":
        return np.geomspace(scan["start"], scan["stop"], scan["points"])
    return np.linspace(scan["start"], scan["stop"], scan["points"])


def scan_points(config: ScenarioConfig) -> list[dict]:
    """Every point of the scan, in output order: series outermost, then the axis."""
    data = config.data
    scan = data["scan"]
    axis = axis_values(scan)
    series = data["series"]
    series_values = series["values"] if series else [None]
    points = []
    for sv in series_values:
        for x in axis:
            if scan["type"] == "detuning-carrier-map":
                d = scan["detuning"]
                inner = np.linspace(d["start"], d["stop"], d["points"]) if d["points"] > 1 else np.array([d["start"]])
                for y in inner:
                    points.append({"series": sv, "x": float(x), "y": float(y)})
            else:
                points.append({"series": sv, "x": float(x)})
    return points


def _waveform_record(models: Models, geometry: LinkGeometry, probe: GaussianBeam, scene: RFScene, samples: int,
                     coupling_detuning: float | None = None) -> tuple[dict, Any]:
    report = evaluate_link(geometry, probe, models.coupling, models.probe_dipole, models.coupling_dipole)
    wf = transmission_waveform(scene, models.atomic, report, samples, coupling_detuning)
    signal, snr = tone_power_and_snr(wf, report, models.chain)
    rec = {
        "snr": snr,
        "signal": signal,
        "transmission_mean": float(np.mean(wf.transmission)),
        "transmission_contrast": wf.contrast,
    }
    return rec, report


def evaluate_point(data_key: str, scan_type: str, samples: int, point: dict) -> dict:
    """One scan point as a flat record (SI values, frequencies cyclic)."""
    models = _models_for(data_key)
    x = point["x"]
    if scan_type == "carrier":
        rec, _ = _waveform_record(models, models.geometry, models.probe, replace(models.scene, carrier=x), samples)
        return {"carrier_frequency": x, **rec}
    if scan_type == "coupling-detuning":
        rec, _ = _waveform_record(models, models.geometry, models.probe, models.scene, samples, TWO_PI * x)
        return {"coupling_detuning": x, **rec}
    if scan_type == "detuning-carrier-map":
        rec, _ = _waveform_record(
            models, models.geometry, models.probe, replace(models.scene, carrier=x), samples, TWO_PI * point["y"]
        )
        return {"carrier_frequency": x, "coupling_detuning": point["y"], **rec}
    if scan_type in ("distance", "probe-power"):
        if scan_type == "distance":
            geometry = models.geometry.at(x)
            probe = models.probe
            if models.constant_rabi:
                power = probe_power_for_constant_rabi(geometry, probe, models.reference_distance)
                probe = probe.with_power(power)
        else:
            geometry = models.geometry
            probe = models.probe.with_power(x)
        rec, report = _waveform_record(models, geometry, probe, models.scene, samples)
        head = {"distance": x, "probe_power": probe.power} if scan_type == "distance" else {"probe_power": x}
        return {
            **head,
            **rec,
            "probe_diameter": report.probe_diameter,
            "coupling_diameter": report.coupling_diameter,
            "probe_rabi": report.probe_rabi,
            "coupling_rabi": report.coupling_rabi,
            "returned_power": report.returned_power,
            "efficiency": report.efficiency,
        }
    if scan_type == "beam-diagnostics":
        geometry = models.geometry.at(x)
        report = evaluate_link(geometry, models.probe, models.coupling, models.probe_dipole, models.coupling_dipole)
        ov = report.overlap
        return {
            "distance": x,
            "probe_diameter": report.probe_diameter,
            "coupling_diameter": report.coupling_diameter,
            "efficiency": report.efficiency,
            "clip_cell": report.channels["clip_cell"],
            "clip_reflector": report.channels["clip_reflector"],
            "clip_detector": report.channels["clip_detector"],
            "probe_margin_cell": ov.probe_margin_cell,
            "probe_margin_reflector": ov.probe_margin_reflector,
            **{k: bool(v) for k, v in ov.flags.items()},
        }
    raise ConfigurationError(f"unknown scan type {scan_type!r}", field="scan.type")  # pragma: no cover


def _task(args):
    data_key, scan_type, samples, point = args
    return evaluate_point(data_key, scan_type, samples, point)


# ------------------------------------------------------------------- columns

UNIT = {
    "carrier_frequency": "Hz",
    "coupling_detuning": "Hz",
    "distance": "m",
    "probe_power": "W",
    "snr": "dB",
    "signal": "dBm",
    "transmission_mean": "1",
    "transmission_contrast": "1",
    "probe_diameter": "m",
    "coupling_diameter": "m",
    "probe_rabi": "rad/s",
    "coupling_rabi": "rad/s",
    "returned_power": "W",
    "efficiency": "1",
    "clip_cell": "1",
    "clip_reflector": "1",
    "clip_detector": "1",
    "probe_margin_cell": "m",
    "probe_margin_reflector": "m",
}


def _series_column(series: dict | None) -> tuple[str, str] | None:
    if not series:
        return None
    kind = field_spec(series["field"]).kind
    return series["field"], BASE_UNIT.get(kind, "1") if kind in UNITS else "1"


def _format(value) -> str:
    if isinstance(value, (bool, np.bool_)):
        return "true" if value else "false"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        return repr(float(value))
    return str(value)


# ------------------------------------------------------------------- running

@dataclass
class RunOutcome:
    result: ScanResult
    status: str  # "complete" or "failed"
    files: list[Path] = field(default_factory=list)
    wall_time: float = 0.0
    summary: dict = field(default_factory=dict)
    error: ScanError | None = None


def _summary(config: ScenarioConfig, records: list[dict]) -> dict:
    scan_type = config.scan["type"]
    series = config.data["series"]
    groups: dict[Any, list[dict]] = {}
    for r in records:
        groups.setdefault(r.get("series"), []).append(r)
    out: dict[str, Any] = {}
    if scan_type == "probe-power":
        knees = []
        for sv, rows in groups.items():
            try:
                knee = saturation_knee([r["probe_power"] for r in rows], [r["snr"] for r in rows])
            except RydlinkError as exc:
                knee = None
                log.info("no saturation knee for series value %s: %s", sv, exc)
            knees.append({"series": sv, "saturation_knee_W": knee})
        out["saturation_knees"] = knees
    elif scan_type == "beam-diagnostics" and len(records) >= 3:
        fits = {}
        rows = groups[next(iter(groups))]
        data = config.data
        # diameters are sampled at the cell centre
        z = np.array([r["distance"] for r in rows]) + data["atomic"]["cell_length"] / 2
        for name in ("probe", "coupling"):
            b = data["beams"][name]
            try:
                w0, z0, zr = fit_beam(z, np.array([r[f"{name}_diameter"] for r in rows]), b["wavelength"])
                fits[name] = {"waist_radius_m": w0, "waist_position_m": z0, "rayleigh_length_m": zr}
            except (RydlinkError, RuntimeError) as exc:
                fits[name] = {"error": str(exc)}
        out["gaussian_fits"] = fits
    elif scan_type in ("carrier", "distance", "coupling-detuning"):
        axis = SCAN_AXIS[scan_type][0]
        out["snr_maximum"] = [
            {"series": sv, axis: rows[int(np.argmax([r["snr"] for r in rows]))][axis], "snr_dB": max(r["snr"] for r in rows)}
            for sv, rows in groups.items()
        ]
    if series:
        out["series_field"] = series["field"]
    return out


def run_scan(config: ScenarioConfig, workers: int | None = None, out_dir=None, fmt: str = "csv",
             write: bool = True) -> RunOutcome:
    """Evaluate every scan point and write the result files.

    ``workers`` defaults to the available CPUs. On a failed point the
    records computed before it are still written, marked as partial, and the
    :class:`ScanError` (carrying the point index) is attached to the outcome.
    """
    if fmt not in ("csv", "json"):
        raise ConfigurationError(f"unknown output format {fmt!r}", field="--format")
    if workers is None:
        workers = os.cpu_count() or 1
    if workers < 1:
        raise ConfigurationError("must be >= 1", field="--workers")
    data = config.data
    scan = data["scan"]
    points = scan_points(config)
    key = _key(data if not data["series"] else {**data, "series": None})
    keys = {}
    tasks = []
    for p in points:
        sv = p["series"]
        if sv is not None:
            if sv not in keys:
                keys[sv] = _key(_set_path({**data, "series": None}, data["series"]["field"], sv))
            k = keys[sv]
        else:
            k = key
        tasks.append((k, scan["type"], scan["samples"], p))

    t0 = time.perf_counter()
    records: list[dict] = []
    error = None
    try:
        if workers == 1 or len(tasks) == 1:
            for i, t in enumerate(tasks):
                try:
                    records.append(_task(t))
                except Exception as exc:  # noqa: BLE001 - wrapped with the point index
                    raise ScanError(i, exc) from exc
        else:
            with ProcessPoolExecutor(max_workers=workers) as pool:
                it = pool.map(_task, tasks, chunksize=max(1, len(tasks) // (8 * workers)))
                i = 0
                try:
                    for rec in it:
                        records.append(rec)
                        i += 1
                except Exception as exc:  # noqa: BLE001
                    raise ScanError(i, exc) from exc
    except ScanError as exc:
        error = exc
        log.error("%s", exc)
    wall = time.perf_counter() - t0

    series_col = _series_column(data["series"])
    for rec, p in zip(records, points):
        if series_col:
            rec["series"] = p["series"]
    axis_name, axis_dim = SCAN_AXIS[scan["type"]]
    result = ScanResult(axis_name, BASE_UNIT[axis_dim])
    result.records = records
    status = "complete" if error is None else "failed"
    outcome = RunOutcome(result, status, wall_time=wall, error=error)
    if error is None:
        outcome.summary = _summary(config, records)
    if write:
        outcome.files = _write(config, records, series_col, outcome, out_dir, fmt)
    return outcome


def _columns(records: list[dict], series_col) -> list[str]:
    if not records:
        return []
    cols = [c for c in records[0] if c != "series"]
    return (["series"] if series_col else []) + cols


def _header(col: str, series_col) -> str:
    if col == "series":
        return f"{series_col[0]} [{series_col[1]}]"
    return f"{col} [{UNIT.get(col, '1')}]"


def _write(config: ScenarioConfig, records, series_col, outcome: RunOutcome, out_dir, fmt) -> list[Path]:
    directory = Path(out_dir if out_dir is not None else config.data["output"]["directory"])
    directory.mkdir(parents=True, exist_ok=True)
    stem = config.data["output"]["stem"]
    if outcome.status != "complete":
        stem += ".partial"
    cols = _columns(records, series_col)
    meta = {
        "software": {"name": "rydlink", "version": __version__},
        "status": outcome.status,
        "points_expected": len(scan_points(config)),
        "points_written": len(records),
        "wall_time_s": outcome.wall_time,
        "columns": [_header(c, series_col) for c in cols],
        "summary": outcome.summary,
        "config": config.echo(),
    }
    if outcome.error is not None:
        meta["error"] = {"point_index": outcome.error.index, "message": str(outcome.error)}
    files = []
    if fmt == "csv":
        path = directory / f"{stem}.csv"
        with open(path, "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow([_header(c, series_col) for c in cols])
            for r in records:
                w.writerow([_format(r[c]) for c in cols])
        files.append(path)
        side = directory / f"{stem}.json"
    else:
        side = directory / f"{stem}.json"
        meta["records"] = [{c: (bool(r[c]) if isinstance(r[c], (bool, np.bool_)) else r[c]) for c in cols} for r in records]
    with open(side, "w", encoding="utf-8") as fh:
        json.dump(meta, fh, indent=2, default=_json_default)
        fh.write("\n")
    files.append(side)
    return files


def _json_default(obj):
    if isinstance(obj, np.generic):
        return obj.item()
    raise TypeError(f"not JSON serialisable: {type(obj).__name__}")
