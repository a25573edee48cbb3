import csv
import json

import numpy as np
import pytest

from siws.eval import (METHODS, TABLES, MseReport, build_tapers, central_region, hermite_h, mse,
                       optimality_spot_check, run_model, run_table, table_layout, window_sweep,
                       write_reports_json, write_table_csv, write_window_sweep_csv)
from siws.loggrid import GridError, LogGrid
from siws.models import PRESETS, lssp
from siws.taper import matched_alpha

SMALL = LogGrid.centered(0.2, 32)


def test_central_region():
    rs, cs = central_region(128)
    assert (rs.start, rs.stop) == (32, 96) and rs == cs


def test_mse_values():
    ref = np.arange(16.0).reshape(4, 4)
    assert mse(ref, ref) == 0.0
    assert mse(ref + 0.5, ref) == pytest.approx(0.25)
    stack = np.stack([ref + 1, ref - 3])
    assert mse(stack, ref) == pytest.approx(5.0)
    assert mse(ref + 2j, ref, (slice(0, 4), slice(0, 4))) == pytest.approx(4.0)


def test_mse_errors():
    ref = np.zeros((4, 4))
    with pytest.raises(GridError):
        mse(np.zeros((3, 4)), ref)
    with pytest.raises(GridError):
        mse(ref, ref, (slice(2, 2), slice(0, 4)))
    with pytest.raises(GridError):
        mse(ref, ref, (slice(0, 6), slice(0, 4)))


def test_hermite_h():
    assert hermite_h(PRESETS["lssp-c7"]) == 0.5
    assert hermite_h(PRESETS["mlssp-c4-10"]) == pytest.approx(0.5)
    assert hermite_h(lssp(0.3, 4)) == pytest.approx(0.3)


def test_build_tapers_alpha():
    # the fitted scale needs a log span of about 12.8 to settle
    g = LogGrid.centered(0.2, 64)
    eigen, herm, a = build_tapers(lssp(0.5, 4), g, k_used=3)
    assert len(eigen) == len(herm) == 3 and np.array_equal(herm.weights, eigen.weights)
    assert a == pytest.approx(matched_alpha(4), rel=1e-3)
    assert build_tapers(lssp(0.5, 4), SMALL, 3, alpha=np.e)[2] == np.e


def test_report_is_thread_independent():
    a = run_model(PRESETS["lsscp-c7"], SMALL, n_paths=70, seed=3, k_used=4, threads=1)
    b = run_model(PRESETS["lsscp-c7"], SMALL, n_paths=70, seed=3, k_used=4, threads=3)
    assert a.mse == b.mse and a.to_dict() == b.to_dict()
    c = run_model(PRESETS["lsscp-c7"], SMALL, n_paths=70, seed=4, k_used=4)
    assert c.mse != a.mse
    assert "wall_time" not in a.to_dict()


def test_table_outputs(tmp_path):
    reps = run_table(["lssp-c7", "lssp-c20"], SMALL, n_paths=20, k_used=4)
    assert [r.model for r in reps] == ["lssp-c7", "lssp-c20"]
    rows = table_layout(reps, ["c=7", "c=20"])
    assert [r[0] for r in rows] == list(METHODS)
    f = tmp_path / "t.csv"
    write_table_csv(reps, ["c=7", "c=20"], f)
    lines = list(csv.reader(f.open()))
    assert lines[0] == ["method", "c=7", "c=20"]
    assert float(lines[3][2]) == reps[1].mse["SIWD"]
    write_reports_json(reps, tmp_path / "t.json", {"table": "lssp"})
    doc = json.loads((tmp_path / "t.json").read_text())
    assert doc["table"] == "lssp" and doc["reports"][0]["ratio_siwd_simw"] == reps[0].ratio
    with pytest.raises(ValueError):
        table_layout(reps, ["one"])


def test_table_definitions():
    assert list(TABLES) == ["lssp", "lsscp", "mlssp"]
    for layout in TABLES.values():
        assert len(layout["columns"]) == len(layout["presets"]) == 3
        assert all(p in PRESETS for p in layout["presets"])


def test_report_ordering():
    r = MseReport("m", {"SIMW": 1.0, "Hermite": 2.0, "SIWD": 6.0}, 1, "g", 0, 8, 1.0)
    assert r.ordered and r.ratio == 6.0
    r.mse["Hermite"] = 0.5
    assert not r.ordered


def test_window_sweep_small(tmp_path):
    res = window_sweep((4, 20), (0.2, 0.8), grid=LogGrid.centered(0.2, 64))
    assert res.errors.shape == (2, 2, 3)
    assert np.all((res.errors >= 0) & (res.errors <= 2))
    assert np.all((res.overlaps >= 0) & (res.overlaps <= 1 + 1e-12))
    assert np.allclose(res.alphas, [matched_alpha(4), matched_alpha(20)], rtol=1e-3)
    write_window_sweep_csv(res, tmp_path / "f.csv")
    lines = (tmp_path / "f.csv").read_text().splitlines()
    assert lines[0] == "c,alpha,H,k,e_k,overlap" and len(lines) == 1 + 12


def test_optimality_spot_check():
    out = optimality_spot_check(lssp(0.5, 4), SMALL, n_paths=200, seed=2, n_kernels=4)
    assert len(out["rivals"]) == 4
    # finite-sample noise gets a 10% allowance
    assert all(out["optimal"] <= 1.1 * r for r in out["rivals"])
