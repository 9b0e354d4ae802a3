"""CLI driver: configs in, canonical artifacts out, honest exit codes."""

import json

import numpy as np
import numpy.testing as npt
import pytest

from platecell.cli import main
from platecell.fileio import phase_grid_from_dict, read_field, read_json
from oracles import single_phase_bending_discrete

MATS_ONE = [{"phase_id": 0, "mu": 1.0, "lambda": 1.0},
            {"phase_id": 1, "mu": 1.0, "lambda": 1.0}]
MATS_TWO = [{"phase_id": 0, "mu": 1.0, "lambda": 1.0},
            {"phase_id": 1, "mu": 5.0, "lambda": 5.0}]
CHECKER = {"kind": "checkerboard", "period_hint": 0.5}
VORONOI = {"kind": "poisson_voronoi", "intensity": 8.0}
GRID = {"n1": 4, "n2": 4, "n3": 4, "gamma": 1.0, "L": 1.0}


def write_cfg(tmp_path, cfg, name="cfg.json"):
    path = tmp_path / name
    path.write_text(json.dumps(cfg))
    return str(path)


def run(command, cfg_path, out, *extra):
    return main([command, "--config", cfg_path, "--out", str(out)]
                + list(extra))


# ---------------------------------------------------------------------------
# Validation and exit codes
# ---------------------------------------------------------------------------

def test_missing_materials_names_block(tmp_path, capsys):
    cfg = write_cfg(tmp_path, {"model": CHECKER, "grid": GRID, "seed": 0})
    assert run("effective", cfg, tmp_path / "out.json") == 2
    assert "materials" in capsys.readouterr().err


def test_invalid_json_config(tmp_path, capsys):
    path = tmp_path / "bad.json"
    path.write_text("{ this is not json")
    assert run("effective", str(path), tmp_path / "out.json") == 2
    assert "not valid JSON" in capsys.readouterr().err


def test_unreadable_config(tmp_path, capsys):
    assert run("effective", str(tmp_path / "nope.json"),
               tmp_path / "out.json") == 2
    assert "cannot read config" in capsys.readouterr().err


def test_unknown_command(tmp_path):
    with pytest.raises(SystemExit):
        main(["frobnicate", "--config", "x.json"])


def test_thread_count_validated(tmp_path, capsys):
    cfg = write_cfg(tmp_path, {"model": CHECKER, "seed": 0, "L": 1.0})
    assert run("generate", cfg, tmp_path / "o.json", "--threads", "0") == 2
    assert "--threads" in capsys.readouterr().err


def test_solve_cell_missing_load(tmp_path, capsys):
    cfg = write_cfg(tmp_path, {"model": CHECKER, "grid": GRID, "seed": 0,
                               "materials": MATS_ONE})
    assert run("solve-cell", cfg, tmp_path / "o.json") == 2
    assert "load" in capsys.readouterr().err


def test_grid_needs_a_side_length(tmp_path, capsys):
    grid = {k: v for k, v in GRID.items() if k != "L"}
    cfg = write_cfg(tmp_path, {"model": CHECKER, "grid": grid, "seed": 0,
                               "materials": MATS_ONE})
    assert run("effective", cfg, tmp_path / "o.json") == 2
    assert "grid.L" in capsys.readouterr().err


# ---------------------------------------------------------------------------
# Subcommands
# ---------------------------------------------------------------------------

def test_generate_with_raster(tmp_path):
    cfg_dict = {"model": CHECKER, "seed": 0, "L": 1.0,
                "raster": {"n1": 4, "n2": 4}}
    cfg = write_cfg(tmp_path, cfg_dict)
    out = tmp_path / "gen.json"
    assert run("generate", cfg, out) == 0
    payload = read_json(out)
    assert payload["command"] == "generate"
    assert payload["config"] == cfg_dict        # full config echo
    assert isinstance(payload["version"], str)
    assert payload["realization"]["points"] == []
    pg = phase_grid_from_dict(payload["phase_grid"])
    want = (np.add.outer(np.arange(4) // 2, np.arange(4) // 2) % 2)
    npt.assert_array_equal(pg.cell_phase, want)


def test_effective_single_phase_matches_analytic(tmp_path):
    cfg = write_cfg(tmp_path, {"model": CHECKER, "grid": GRID, "seed": 0,
                               "materials": MATS_ONE, "tol": 1e-10})
    out = tmp_path / "eff.json"
    assert run("effective", cfg, out) == 0
    payload = read_json(out)
    got = np.asarray(payload["voigt3"]).reshape(3, 3)
    npt.assert_allclose(got, single_phase_bending_discrete(1.0, 1.0, 4),
                        atol=1e-7)
    assert len(payload["voigt6"]) == 36
    assert "wall_time" in payload               # no --deterministic flag
    assert payload["asymmetry"] <= 1e-12


def test_effective_accepts_box_side_alias(tmp_path):
    grid = {"n1": 4, "n2": 4, "n3": 2, "gamma": 1.0, "box_side": 1.0}
    cfg = write_cfg(tmp_path, {"model": CHECKER, "grid": grid, "seed": 0,
                               "materials": MATS_TWO})
    assert run("effective", cfg, tmp_path / "eff.json") == 0


def test_effective_rescale_check_at_unit_gamma(tmp_path):
    cfg = write_cfg(tmp_path, {"model": CHECKER, "grid": GRID, "seed": 0,
                               "materials": MATS_TWO, "rescale_check": True})
    out = tmp_path / "eff.json"
    assert run("effective", cfg, out) == 0
    assert read_json(out)["rescale_discrepancy"] == 0.0


def test_sweep_gamma_single_phase_is_flat(tmp_path):
    grid = {"n1": 4, "n2": 4, "n3": 2, "gamma": 1.0, "L": 1.0}
    cfg = write_cfg(tmp_path, {"model": CHECKER, "grid": grid, "seed": 0,
                               "materials": MATS_ONE, "tol": 1e-10,
                               "gammas": [0.5, 1.0, 2.0]})
    out = tmp_path / "sweep.json"
    assert run("sweep-gamma", cfg, out) == 0
    payload = read_json(out)
    assert payload["max_spread"] <= 1e-8
    assert len(payload["voigt3_per_gamma"]) == 3


def test_solve_cell_writes_field(tmp_path):
    cfg = write_cfg(tmp_path, {"model": CHECKER, "grid": GRID, "seed": 0,
                               "materials": MATS_TWO,
                               "load": {"G": [[1.0, 0.0], [0.0, 1.0]]}})
    out = tmp_path / "cell.json"
    assert run("solve-cell", cfg, out) == 0
    payload = read_json(out)
    values, header = read_field(payload["field_file"])
    assert values.shape == (4, 4, 5, 3)
    assert header["L"] == 1.0
    assert payload["cg_residuals"][-1] <= 1e-8


def test_solver_failure_exits_1_with_residual_history(tmp_path, capsys):
    cfg = write_cfg(tmp_path, {"model": CHECKER, "grid": GRID, "seed": 0,
                               "materials": MATS_TWO, "tol": 1e-30,
                               "load": {"G": [[1.0, 0.4], [0.4, -0.2]]}})
    out = tmp_path / "cell.json"
    assert run("solve-cell", cfg, out) == 1
    err = capsys.readouterr().err
    assert "numerical failure" in err
    sidecar = read_json(str(out) + ".residuals.json")
    assert len(sidecar["residual_history"]) > 1


def test_ergodic_command(tmp_path):
    cfg = write_cfg(tmp_path, {
        "model": CHECKER, "seed": 0, "L": 1.0,
        "window": [0.0, 0.0, 1.0, 1.0],
        "epsilons": [0.5, 0.25, 0.125],
        "f_table": {"0": 0.0, "1": 1.0},
    })
    out = tmp_path / "erg.json"
    assert run("ergodic", cfg, out) == 0
    payload = read_json(out)
    assert payload["reference"] == 0.5
    assert len(payload["averages"]) == 3
    assert isinstance(payload["rate_ok"], bool)
    rows = (tmp_path / "erg.json.csv").read_text().strip().splitlines()
    assert len(rows) == 4


def test_decompose_command(tmp_path):
    cfg = write_cfg(tmp_path, {"grid": GRID, "seed": 3,
                               "write_potential": True})
    out = tmp_path / "dec.json"
    assert run("decompose", cfg, out) == 0
    payload = read_json(out)
    report = payload["report"]
    for key in ("pot_sol", "pot_mean", "sol_mean", "pythagoras"):
        assert report[key] <= 1e-8
    psi, _ = read_field(payload["psi_file"])
    assert psi.shape == (4, 4, 5, 3)


def test_recovery_command(tmp_path):
    grid = {"n1": 4, "n2": 4, "n3": 2, "gamma": 1.0, "L": 1.0}
    cfg_dict = {"model": CHECKER, "grid": grid, "seed": 0,
                "materials": MATS_ONE,
                "isometry": {"kind": "cylinder", "radius": 1.0},
                "recovery": {"patch_size": 0.5, "h_schedule": [0.4, 0.2]}}
    cfg = write_cfg(tmp_path, cfg_dict)
    out = tmp_path / "rec.json"
    assert run("recovery", cfg, out) == 0
    payload = read_json(out)
    npt.assert_allclose(payload["limit_energy"],
                        single_phase_bending_discrete(1.0, 1.0, 2)[0, 0],
                        rtol=1e-7)
    assert payload["gaps"][1] < payload["gaps"][0]
    # schedule is mandatory for the sweep
    del cfg_dict["recovery"]["h_schedule"]
    cfg = write_cfg(tmp_path, cfg_dict, name="cfg2.json")
    assert run("recovery", cfg, out) == 2


# ---------------------------------------------------------------------------
# Determinism and threading
# ---------------------------------------------------------------------------

def test_deterministic_runs_byte_identical(tmp_path):
    cfg = write_cfg(tmp_path, {"model": VORONOI, "grid": GRID, "seed": 5,
                               "materials": MATS_TWO})
    out = tmp_path / "eff.json"
    assert run("effective", cfg, out, "--deterministic") == 0
    first = out.read_bytes()
    payload = read_json(out)
    assert "wall_time" not in payload
    assert "wall_time" in read_json(str(out) + ".timing.json")
    assert run("effective", cfg, out, "--deterministic") == 0
    assert out.read_bytes() == first


def test_isotropy_thread_count_invisible(tmp_path):
    grid = {"n1": 4, "n2": 4, "n3": 2, "gamma": 1.0, "L": 2.0}
    cfg = write_cfg(tmp_path, {"model": VORONOI, "grid": grid,
                               "seeds": [0, 1, 2], "materials": MATS_TWO})
    out = tmp_path / "iso.json"
    assert run("isotropy", cfg, out, "--deterministic", "--threads", "1") == 0
    first = out.read_bytes()
    first_csv = (tmp_path / "iso.json.csv").read_bytes()
    assert run("isotropy", cfg, out, "--deterministic", "--threads", "4") == 0
    assert out.read_bytes() == first
    assert (tmp_path / "iso.json.csv").read_bytes() == first_csv
    payload = read_json(out)
    assert payload["rotations"] == 8
    assert len(payload["per_seed_defects"]) == 3


def test_threads_env_override_is_logged(tmp_path, capsys, monkeypatch):
    grid = {"n1": 4, "n2": 4, "n3": 2, "gamma": 1.0, "L": 2.0}
    cfg = write_cfg(tmp_path, {"model": VORONOI, "grid": grid,
                               "seeds": [0, 1], "materials": MATS_TWO})
    monkeypatch.setenv("PLATECELL_THREADS", "2")
    assert run("isotropy", cfg, tmp_path / "iso.json") == 0
    assert "PLATECELL_THREADS=2 overrides" in capsys.readouterr().err
    monkeypatch.setenv("PLATECELL_THREADS", "many")
    assert run("isotropy", cfg, tmp_path / "iso.json") == 2
    assert "PLATECELL_THREADS" in capsys.readouterr().err
