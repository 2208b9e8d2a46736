import json
import os

import numpy as np
import pytest

from dvppres.cli import main


def base_config(**grid_extra):
    grid = {"h0": 10.0, "d0": 2.0, "r": 10.0, "t_sg": 7.0, "f_base": 50.0}
    grid.update(grid_extra)
    return {
        "grid": grid,
        "limits": {"rocof_lim": 0.4, "nadir_lim": 0.55, "ss_lim": 0.45},
        "forecast": {"n": 5, "tau": 60.0,
                     "magnitudes": [0.095, 0.109, -0.204, -0.158, 0.253],
                     "probabilities": [0.8, 0.5, 0.8, 0.9, 0.7]},
        "ibrs": [
            {"a": 3.0, "b": 2.0, "p_av": 0.1212, "h_bounds": [0.1, 6], "d_bounds": [0.1, 6]},
            {"a": 4.0, "b": 3.0, "p_av": 0.109, "h_bounds": [0.1, 6], "d_bounds": [0.1, 6]},
            {"a": 1.0, "b": 1.0, "p_av": 0.0122, "h_bounds": [0.1, 6], "d_bounds": [0.1, 6]},
            {"a": 1.0, "b": 1.0, "p_av": 0.0242, "h_bounds": [0.1, 6], "d_bounds": [0.1, 6]},
            {"a": 2.0, "b": 1.6, "p_av": 0.0848, "h_bounds": [0.1, 6], "d_bounds": [0.1, 6]},
            {"a": 1.0, "b": 1.0, "p_av": 0.0484, "h_bounds": [0.1, 6], "d_bounds": [0.1, 6]},
        ],
        "solver": {"resolution": 80, "constraint_scenario": "per_step",
                   "weighting": "realized"},
        "output": {"dir": "out"},
    }


def write_config(tmp_path, doc, name="cfg.json"):
    path = tmp_path / name
    path.write_text(json.dumps(doc, indent=1))
    return str(path)


def read_csv_table(path):
    """Columns of a '#'-commented CSV as a dict of float arrays."""
    with open(path) as fh:
        rows = [ln for ln in fh.read().splitlines()
                if ln and not ln.startswith("#")]
    header = rows[0].split(",")
    data = np.array([[float(v) for v in ln.split(",")] for ln in rows[1:]])
    return {name: data[:, i] for i, name in enumerate(header)}


def read_csv_values(path, key_col, val_col):
    out = {}
    with open(path) as fh:
        rows = [ln for ln in fh.read().splitlines() if not ln.startswith("#")]
    header = rows[0].split(",")
    ki, vi = header.index(key_col), header.index(val_col)
    for ln in rows[1:]:
        parts = ln.split(",")
        out[parts[ki]] = parts[vi]
    return out


def test_analyze_produces_artifacts(tmp_path):
    cfg = write_config(tmp_path, base_config())
    out = str(tmp_path / "run")
    assert main(["analyze", "--config", cfg, "--out", out]) == 0
    for name in ("region.csv", "region_runs.csv", "worst_scenarios.csv",
                 "selection.csv", "allocation.csv", "reserves.csv",
                 "manifest.json"):
        assert os.path.exists(os.path.join(out, name)), name
    vals = read_csv_values(os.path.join(out, "reserves.csv"), "key", "value")
    assert float(vals["r_up"]) == pytest.approx(0.1623, rel=0.02)
    assert float(vals["r_down_abs"]) == pytest.approx(0.1473, rel=0.02)
    # manifest row counts match the files on disk
    from dvppres.csvio import Manifest
    with open(os.path.join(out, "manifest.json")) as fh:
        doc = json.load(fh)
    m = Manifest.__new__(Manifest)
    m.doc = doc
    assert m.verify_outputs(out) == []


def test_zero_ss_limit_exits_2(tmp_path, capsys):
    doc = base_config()
    doc["limits"]["ss_lim"] = 1e-9
    doc["solver"]["resolution"] = 30
    cfg = write_config(tmp_path, doc)
    code = main(["analyze", "--config", cfg, "--out", str(tmp_path / "o")])
    assert code == 2
    assert "feasible-region" in capsys.readouterr().err


def test_missing_forecast_section_exits_1(tmp_path, capsys):
    doc = base_config()
    del doc["forecast"]
    cfg = write_config(tmp_path, doc)
    assert main(["analyze", "--config", cfg, "--out", str(tmp_path / "o")]) == 1
    assert "forecast" in capsys.readouterr().err


def test_invalid_bounds_exit_1(tmp_path):
    doc = base_config()
    doc["solver"]["h_bounds"] = [10.0, 5.0]
    cfg = write_config(tmp_path, doc)
    assert main(["region", "--config", cfg, "--out", str(tmp_path / "o")]) == 1


def test_simulate_worst_selected_point(tmp_path):
    doc = base_config(h_dvpp=19.86, d_dvpp=10.68)
    cfg = write_config(tmp_path, doc)
    out = str(tmp_path / "sim")
    assert main(["simulate", "--config", cfg, "--out", out,
                 "--scenario", "worst"]) == 0
    data = read_csv_table(os.path.join(out, "trace.csv"))
    assert np.abs(data["delta_f"]).max() <= 0.55


def test_simulate_worst_baseline_point_violates(tmp_path):
    doc = base_config(h_dvpp=16.05, d_dvpp=0.0)
    cfg = write_config(tmp_path, doc)
    out = str(tmp_path / "sim")
    assert main(["simulate", "--config", cfg, "--out", out,
                 "--scenario", "worst"]) == 0
    data = read_csv_table(os.path.join(out, "trace.csv"))
    # nadir or steady-state limit exceeded on the trace
    assert np.abs(data["delta_f"]).max() > 0.45


def test_simulate_none_is_flat(tmp_path):
    cfg = write_config(tmp_path, base_config())
    out = str(tmp_path / "sim")
    assert main(["simulate", "--config", cfg, "--out", out,
                 "--scenario", "none"]) == 0
    data = read_csv_table(os.path.join(out, "trace.csv"))
    assert np.all(data["delta_f"] == 0.0)


def test_simulate_unknown_selector(tmp_path):
    cfg = write_config(tmp_path, base_config())
    assert main(["simulate", "--config", cfg, "--out", str(tmp_path / "o"),
                 "--scenario", "nonsense"]) == 1


def test_simulate_index_selector(tmp_path):
    doc = base_config(h_dvpp=19.86, d_dvpp=10.68)
    cfg = write_config(tmp_path, doc)
    out = str(tmp_path / "sim")
    assert main(["simulate", "--config", cfg, "--out", out,
                 "--scenario", "0"]) == 0
    assert main(["simulate", "--config", cfg, "--out", out,
                 "--scenario", "100000"]) == 1


def test_region_degenerate_grid(tmp_path):
    doc = base_config()
    cfg = write_config(tmp_path, doc)
    out = str(tmp_path / "reg")
    assert main(["region", "--config", cfg, "--out", out,
                 "--resolution", "2"]) == 0
    with open(os.path.join(out, "region.csv")) as fh:
        rows = [ln for ln in fh.read().splitlines()
                if ln and not ln.startswith("#")]
    assert len(rows) - 1 == 4


def test_dt_precondition(tmp_path):
    cfg = write_config(tmp_path, base_config())
    assert main(["simulate", "--config", cfg, "--out", str(tmp_path / "o"),
                 "--dt", "0.5"]) == 1


def test_byte_determinism(tmp_path):
    doc = base_config()
    doc["solver"]["resolution"] = 40
    cfg = write_config(tmp_path, doc)
    out1, out2 = str(tmp_path / "a"), str(tmp_path / "b")
    assert main(["analyze", "--config", cfg, "--out", out1]) == 0
    assert main(["analyze", "--config", cfg, "--out", out2,
                 "--threads", "3"]) == 0
    for name in ("region.csv", "region_runs.csv", "worst_scenarios.csv",
                 "selection.csv", "allocation.csv", "reserves.csv"):
        with open(os.path.join(out1, name), "rb") as fh:
            b1 = fh.read()
        with open(os.path.join(out2, name), "rb") as fh:
            b2 = fh.read()
        assert b1 == b2, name
    # manifests agree apart from the timestamp
    doc1 = json.load(open(os.path.join(out1, "manifest.json")))
    doc2 = json.load(open(os.path.join(out2, "manifest.json")))
    doc1.pop("timestamp"), doc2.pop("timestamp")
    assert doc1 == doc2


def test_allocate_command(tmp_path):
    cfg = write_config(tmp_path, base_config())
    out = str(tmp_path / "alloc")
    assert main(["allocate", "--config", cfg, "--out", out]) == 0
    assert os.path.exists(os.path.join(out, "allocation.csv"))
    assert os.path.exists(os.path.join(out, "reserves.csv"))
