import json

import numpy as np
import pytest

from tdainsar import io
from tdainsar.cli import main
from tdainsar.scene import HeightField, write_dem_csv

SMALL = {"scene": {"rows": 24, "cols": 24, "max_height": 40, "block_count": 3}, "coherence": 1.0}
GRID = {"antenna_grid": {"start": 5, "stop": 20, "step": 5}, "satellite_grid": {"start": 50, "stop": 400, "step": 50},
        "coherences": [0.98, 0.99], "modes": [2, 4], "expected_height_precision": 1.0}


def _write_cfg(tmp_path, payload, name="cfg.json"):
    path = tmp_path / name
    path.write_text(json.dumps(payload))
    return str(path)


def _error(capsys):
    return json.loads(capsys.readouterr().err.strip().splitlines()[-1])


def test_simulate_defaults_mode2(tmp_path, capsys):
    out = tmp_path / "a" / "b"
    assert main(["simulate", "--config", _write_cfg(tmp_path, SMALL), "--out", str(out)]) == 0
    manifest = io.read_json(out / "manifest.json")
    assert manifest["members"] == ["ifg_1.csv", "ifg_2.csv", "ifg_3.csv"]
    assert [float(io.read_grid_csv(out / m)[0]["b_perp"]) for m in manifest["members"]] == [150, 165, 315]
    assert manifest["truth"] == "scene.csv" and manifest["seed"] == 0
    assert "height ambiguity" in capsys.readouterr().out


def test_simulate_is_byte_identical(tmp_path):
    cfg = _write_cfg(tmp_path, {**SMALL, "coherence": 0.98})
    for d in ("x", "y"):
        assert main(["simulate", "--config", cfg, "--out", str(tmp_path / d), "--seed", "5"]) == 0
    for name in ("ifg_1.csv", "ifg_2.csv", "ifg_3.csv", "manifest.json", "scene.csv"):
        assert (tmp_path / "x" / name).read_bytes() == (tmp_path / "y" / name).read_bytes()
    main(["simulate", "--config", cfg, "--out", str(tmp_path / "z"), "--seed", "6"])
    assert (tmp_path / "x" / "ifg_1.csv").read_bytes() != (tmp_path / "z" / "ifg_1.csv").read_bytes()


def test_unwrap_noise_free(tmp_path):
    out = tmp_path / "run"
    main(["simulate", "--config", _write_cfg(tmp_path, SMALL), "--out", str(out)])
    assert main(["unwrap", str(out / "manifest.json")]) == 0
    summary = io.read_json(out / "unwrap_summary.json")
    assert summary["link_failure_fractions"] == [0.0, 0.0, 0.0]
    assert summary["success_rate"] == 1.0
    assert summary["effective_baselines"] == [15.0, 150.0, 165.0, 315.0]
    assert len(summary["members"]) == 3


def test_unwrap_summary_self_consistent(tmp_path):
    out = tmp_path / "run"
    main(["simulate", "--config", _write_cfg(tmp_path, {**SMALL, "coherence": 0.99}), "--out", str(out)])
    main(["unwrap", str(out / "manifest.json")])
    summary = io.read_json(out / "unwrap_summary.json")
    expected = 1.0 - max(summary["link_failure_fractions"])
    assert summary["success_rate"] <= expected + 1e-12
    assert summary["success_rate"] >= 1.0 - sum(summary["link_failure_fractions"]) - 1e-12


def test_unwrap_mismatched_grid(tmp_path, capsys):
    out = tmp_path / "run"
    main(["simulate", "--config", _write_cfg(tmp_path, SMALL), "--out", str(out)])
    io.write_grid_csv(out / "ifg_2.csv", {"b_perp": 165.0, "coherence": 1.0, "kind": "dual_satellite_bistatic"},
                      np.zeros((10, 10)))
    assert main(["unwrap", str(out / "manifest.json")]) == 1
    err = _error(capsys)
    assert err["error"] == "FormatError" and "ifg_2.csv" in err["message"]


def test_unwrap_corrupt_row_named(tmp_path, capsys):
    out = tmp_path / "run"
    main(["simulate", "--config", _write_cfg(tmp_path, SMALL), "--out", str(out)])
    lines = (out / "ifg_3.csv").read_text().splitlines()
    lines[6] = lines[6].replace(",", ",x", 1)
    (out / "ifg_3.csv").write_text("\n".join(lines) + "\n")
    assert main(["unwrap", str(out / "manifest.json")]) == 1
    assert "ifg_3.csv line 7" in _error(capsys)["message"]


def test_config_errors_exit_1(tmp_path, capsys):
    assert main(["simulate", "--config", _write_cfg(tmp_path, {"scene": {"bogus": 1}})]) == 1
    err = _error(capsys)
    assert err["error"] == "ConfigError" and err["details"][0]["field"] == "scene.bogus"
    assert main(["design", "--config", _write_cfg(tmp_path, SMALL), "--threads", "-1"]) == 1


def test_computation_errors_exit_2(tmp_path, capsys):
    h = np.zeros((12, 12))
    h[:, 6] = np.nan
    write_dem_csv(tmp_path / "dem.csv", HeightField(h))
    cfg = _write_cfg(tmp_path, {"scene": {"generator": "dem", "dem_path": str(tmp_path / "dem.csv")},
                                "coherence": 1.0})
    out = tmp_path / "run"
    assert main(["simulate", "--config", cfg, "--out", str(out)]) == 0
    assert main(["unwrap", str(out / "manifest.json")]) == 2
    assert _error(capsys)["error"] == "UnwrapError"


def test_design_outputs(tmp_path):
    cfg = _write_cfg(tmp_path, {**SMALL, "coherence": 0.99, "design": GRID})
    for d in ("a", "b"):
        assert main(["design", "--config", cfg, "--out", str(tmp_path / d)]) == 0
    assert (tmp_path / "a" / "design_grid.csv").read_bytes() == (tmp_path / "b" / "design_grid.csv").read_bytes()
    opt = io.read_json(tmp_path / "a" / "design_optimum.json")
    assert set(opt) == {"mode2", "mode4"}
    assert opt["mode2"]["selected"]["feasible"]
    rows = (tmp_path / "a" / "design_grid.csv").read_text().splitlines()
    assert len(rows) == 1 + 2 * 4 * 8


def test_design_empty_selection(tmp_path):
    cfg = _write_cfg(tmp_path, {**SMALL, "coherence": 0.99, "design": {**GRID, "expected_height_precision": 0.001}})
    assert main(["design", "--config", cfg, "--out", str(tmp_path / "o")]) == 0
    opt = io.read_json(tmp_path / "o" / "design_optimum.json")
    assert opt["mode2"]["selected"] is None and opt["mode2"]["reason"]


def test_design_refinement(tmp_path):
    cfg = _write_cfg(tmp_path, {**SMALL, "coherence": 0.99, "design": {**GRID, "refine_top_k": 2}})
    assert main(["design", "--config", cfg, "--out", str(tmp_path / "o"), "--trials", "50", "--threads", "0"]) == 0
    rows = [line.split(",") for line in (tmp_path / "o" / "design_grid.csv").read_text().splitlines()[1:]]
    for mode in ("2", "4"):
        feasible = [r for r in rows if r[2] == mode and r[7] == "true"]
        refined = [r for r in rows if r[2] == mode and r[4] != ""]
        assert len(refined) == min(2, len(feasible)) > 0


ORBIT_RUN = {"geometry": {"range_spacing": 1500.0, "azimuth_time_step": 0.05},
             "scene": {"rows": 32, "cols": 32, "max_height": 60},
             "configuration": {"mode": 2, "antenna_baseline": 20, "satellite_baseline": 150},
             "orbit": {"delta_bc": 0.3, "delta_bc_rate": 0.02, "delta_bn": 0.1, "delta_bn_rate": 0.02},
             "coherence": 0.99, "seed": 2}


def _pipeline(tmp_path, payload):
    out = tmp_path / "run"
    cfg = _write_cfg(tmp_path, payload)
    assert main(["simulate", "--config", cfg, "--out", str(out)]) == 0
    assert main(["unwrap", str(out / "manifest.json")]) == 0
    return out


def test_estimate_with_truth(tmp_path):
    out = _pipeline(tmp_path, ORBIT_RUN)
    assert main(["estimate", str(out / "unwrap_summary.json"), "--truth", str(out / "scene.csv")]) == 0
    est = io.read_json(out / "estimate.json")
    assert est["solver"] == "joint"
    assert est["corrected_to_uncorrected_std_ratio"] < 0.1
    assert est["orbit"]["delta_bc"] == pytest.approx(0.3, rel=0.05)
    assert (out / "accuracy.json").exists() and (out / "error_histogram.csv").exists()
    assert not (out / "delays.csv").exists()


def test_estimate_without_truth_and_heights_only(tmp_path):
    out = _pipeline(tmp_path, ORBIT_RUN)
    assert main(["estimate", str(out / "unwrap_summary.json"), "--heights-only", "--out", str(out / "h")]) == 0
    est = io.read_json(out / "h" / "estimate.json")
    assert est["solver"] == "heights_only" and "accuracy" not in est
    assert not (out / "h" / "accuracy.json").exists()


def test_estimate_monostatic_writes_delays(tmp_path):
    payload = {**ORBIT_RUN, "configuration": {"mode": 4, "antenna_baseline": 20, "satellite_baseline": 100},
               "atmosphere": {"rms": 1.0}, "orbit": None, "coherence": 1.0}
    out = _pipeline(tmp_path, payload)
    assert main(["estimate", str(out / "unwrap_summary.json"), "--truth", str(out / "scene.csv"), "--no-orbit"]) == 0
    assert (out / "delays.csv").exists()
    acc = io.read_json(out / "accuracy.json")
    assert acc["rmse"] < 1e-6


def test_estimate_rank_error_exit_2(tmp_path, capsys):
    out = _pipeline(tmp_path, {**ORBIT_RUN, "configuration": {"mode": 4, "antenna_baseline": 20,
                                                              "satellite_baseline": 100}, "coherence": 1.0})
    assert main(["estimate", str(out / "unwrap_summary.json"), "--delays", "--no-orbit", "--out",
                 str(out / "e")]) == 0
    summary = io.read_json(out / "unwrap_summary.json")
    # a lone mono-static interferogram cannot separate height from delay
    summary["members"] = summary["members"][2:]
    manifest = io.read_json(out / "manifest.json")
    manifest["members"] = manifest["members"][2:]
    io.write_json(out / "manifest.json", manifest)
    io.write_json(out / "unwrap_summary.json", summary)
    assert main(["estimate", str(out / "unwrap_summary.json"), "--delays", "--no-orbit"]) == 2
    assert _error(capsys)["error"] == "RankDeficientError"


def test_report(tmp_path):
    cfg = _write_cfg(tmp_path, {**SMALL, "coherence": 0.99, "design": GRID, "trials": 100})
    assert main(["report", "--config", cfg, "--out", str(tmp_path / "r"), "--threads", "2"]) == 0
    for name in ("coherence_sweep.csv", "simplified_sweep.csv", "precision_table.csv", "report.json"):
        assert (tmp_path / "r" / name).exists()
    table = (tmp_path / "r" / "precision_table.csv").read_text().splitlines()
    assert len(table) == 3
