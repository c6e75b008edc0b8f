import csv
import json

import numpy as np
import pytest

from rydlink.errors import NumericalError
from rydlink.scenario import load_config, load_preset, loads, run_scan
from rydlink.scenario import runner

FAST = """
name: quick
atomic: {transverse_nodes: 1}
scan: {type: carrier, start: 19.6GHz, stop: 20.0GHz, points: 5, samples: 4}
series: {field: rf.power, values: [-6dBm, 6dBm]}
"""


def read(path):
    with open(path, newline="") as fh:
        return list(csv.reader(fh))


def test_csv_layout_and_sidecar(tmp_path):
    out = run_scan(loads(FAST), workers=1, out_dir=tmp_path)
    assert out.status == "complete"
    rows = read(tmp_path / "quick.csv")
    assert rows[0][:3] == ["rf.power [dBm]", "carrier_frequency [Hz]", "snr [dB]"]
    assert len(rows) - 1 == 5 * 2
    # series outermost, axis innermost, full precision
    assert [float(r[0]) for r in rows[1:]] == [-6.0] * 5 + [6.0] * 5
    assert float(rows[2][1]) == np.linspace(19.6e9, 20e9, 5)[1]
    side = json.loads((tmp_path / "quick.json").read_text())
    assert side["status"] == "complete"
    assert side["software"]["name"] == "rydlink"
    assert side["wall_time_s"] >= 0
    assert side["points_written"] == side["points_expected"] == 10


def test_echoed_config_reproduces_scan(tmp_path):
    run_scan(loads(FAST), workers=1, out_dir=tmp_path / "a")
    again = load_config(tmp_path / "a" / "quick.json")
    run_scan(again, workers=1, out_dir=tmp_path / "b")
    assert (tmp_path / "a" / "quick.csv").read_bytes() == (tmp_path / "b" / "quick.csv").read_bytes()


def test_worker_count_does_not_change_output(tmp_path):
    cfg = loads(FAST)
    run_scan(cfg, workers=1, out_dir=tmp_path / "one")
    run_scan(cfg, workers=2, out_dir=tmp_path / "two")
    assert (tmp_path / "one" / "quick.csv").read_bytes() == (tmp_path / "two" / "quick.csv").read_bytes()


def test_json_format(tmp_path):
    out = run_scan(loads(FAST), workers=1, out_dir=tmp_path, fmt="json")
    assert [p.name for p in out.files] == ["quick.json"]
    doc = json.loads((tmp_path / "quick.json").read_text())
    assert len(doc["records"]) == 10
    assert doc["records"][3]["snr"] == out.result.records[3]["snr"]


def test_failed_point_flushes_partial(tmp_path, monkeypatch):
    real = runner._task

    def flaky(args):
        if args[3]["x"] > 19.85e9:
            raise NumericalError("synthetic failure")
        return real(args)

    monkeypatch.setattr(runner, "_task", flaky)
    out = run_scan(loads(FAST), workers=1, out_dir=tmp_path)
    assert out.status == "failed"
    assert out.error.index == 3
    assert isinstance(out.error.cause, NumericalError)
    rows = read(tmp_path / "quick.partial.csv")
    assert len(rows) - 1 == 3
    side = json.loads((tmp_path / "quick.partial.json").read_text())
    assert side["status"] == "failed"
    assert side["error"]["point_index"] == 3
    assert not (tmp_path / "quick.csv").exists()


@pytest.mark.parametrize("name", ["fig3b_beams", "fig3a_distance", "fig3de_power", "supp_map", "fig2_carrier_scan"])
def test_presets_run_small(tmp_path, name):
    cfg = load_preset(name).with_points(3)
    out = run_scan(cfg, workers=1, out_dir=tmp_path)
    series = cfg.data["series"]
    inner = cfg.scan.get("detuning", {}).get("points", 1)
    expected = 3 * inner * (len(series["values"]) if series else 1)
    assert len(read(out.files[0])) - 1 == expected


def test_beam_diagnostics_fit():
    out = run_scan(load_preset("fig3b_beams"), workers=1, write=False)
    fits = out.summary["gaussian_fits"]
    assert fits["coupling"]["rayleigh_length_m"] == pytest.approx(58.9, abs=0.1)
    assert fits["probe"]["rayleigh_length_m"] == pytest.approx(6.29, abs=0.01)
    assert fits["probe"]["waist_position_m"] == pytest.approx(0.0, abs=1e-6)


def test_constant_rabi_mode():
    doc = """
scan: {type: distance, start: 1m, stop: 20m, points: 3, samples: 4}
atomic: {transverse_nodes: 0}
link: {probe_power_mode: constant-rabi, reference_distance: 1m}
"""
    recs = run_scan(loads(doc), workers=1, write=False).result.records
    rabi = [r["probe_rabi"] for r in recs]
    assert rabi == pytest.approx([rabi[0]] * 3, rel=1e-12)
    assert recs[-1]["probe_power"] > 10 * recs[0]["probe_power"]
