"""Command-line driver: exit codes, manifests, and byte-level determinism."""

import json
import math

import numpy as np
import pytest

from plapbench.cli import canonical_json, main
from plapbench.field import load_field

GOOD_EXPONENTS = {
    "N": 3, "p": 2.5, "q": 2.0,
    "alpha1": -0.5, "beta1": 0.3, "gamma1": 0.4, "delta1": 0.3,
    "m1": 1.0, "mhat1": 1.0,
    "alpha2": 0.3, "beta2": -0.5, "gamma2": 0.3, "delta2": 0.4,
    "m2": 1.0, "mhat2": 1.0,
    "zeta1": "inf", "zeta2": "inf",
}

SCHEME_CFG = {
    "exponents": {**GOOD_EXPONENTS, "N": 2},
    "grid": {"N": 2, "extent": 2.0, "cells_per_axis": 24},
    "weight": {"kind": "gaussian", "amplitude": 1.0},
    "n_list": [1, 2],
    "rho": 0.5,
    "picard": {"tol": 1e-4},
}


def run(tmp_path, command, cfg, name="cfg.json", seed=0, out="out"):
    cfg_path = tmp_path / name
    cfg_path.write_text(json.dumps(cfg))
    out_dir = tmp_path / out
    code = main([command, "--config", str(cfg_path), "--out", str(out_dir), "--seed", str(seed)])
    return code, out_dir


def tree_bytes(root):
    return {p.name: p.read_bytes() for p in sorted(root.iterdir()) if p.is_file()}


def test_canonical_json_layout():
    s = canonical_json({"b": 1, "a": [math.inf, -math.inf], "c": np.float64(0.5)})
    assert s == '{"a":["inf","-inf"],"b":1,"c":0.5}\n'
    with pytest.raises(ValueError):
        canonical_json({"x": math.nan})


def test_check_pass_and_manifest(tmp_path):
    code, out_dir = run(tmp_path, "check", {"exponents": GOOD_EXPONENTS})
    assert code == 0
    report = json.loads((out_dir / "admissibility.json").read_text())
    assert report["admissible"] is True
    manifest = json.loads((out_dir / "manifest.json").read_text())
    assert manifest["command"] == "check"
    assert manifest["seed"] == 0
    assert "admissibility.json" in manifest["files"]
    assert "timestamp" not in manifest


def test_check_fail_exit_code(tmp_path):
    bad = {**GOOD_EXPONENTS, "beta1": 0.9, "alpha2": 1.4}  # breaks the product condition
    code, out_dir = run(tmp_path, "check", {"exponents": bad})
    assert code == 1
    report = json.loads((out_dir / "admissibility.json").read_text())
    assert report["admissible"] is False


def test_config_errors_exit_2(tmp_path):
    cfg_path = tmp_path / "broken.json"
    cfg_path.write_text("{not json")
    assert main(["check", "--config", str(cfg_path), "--out", str(tmp_path / "o1")]) == 2
    # missing required key
    code, _ = run(tmp_path, "check", {"wrong": 1}, name="c2.json", out="o2")
    assert code == 2
    # config root must be an object
    cfg_path2 = tmp_path / "list.json"
    cfg_path2.write_text("[1,2]")
    assert main(["check", "--config", str(cfg_path2), "--out", str(tmp_path / "o3")]) == 2
    # missing --config entirely
    assert main(["check", "--out", str(tmp_path / "o4")]) == 2
    # unknown command and missing --out are argparse errors
    assert main(["frobnicate", "--out", str(tmp_path / "o5")]) == 2
    assert main(["check"]) == 2


def test_solve_radial_oracle(tmp_path):
    cfg = {
        "grid": {"N": 2, "extent": 2.0, "cells_per_axis": 64},
        "p": 2.0,
        "field": {"kind": "ball_indicator", "radius": 1.0},
        "domain": {"ball_radius": 1.0},
        "tol": 1e-12,
        "radial_oracle": {"R": 1.0},
    }
    code, out_dir = run(tmp_path, "solve", cfg)
    assert code == 0
    report = json.loads((out_dir / "solve_report.json").read_text())
    assert report["converged"] is True
    assert report["radial_linf_error"] < 0.02
    u = load_field(out_dir / "solution.fld")
    assert u.grid.cells_per_axis == 64
    assert u.values.max() > 0.0


def test_solve_nonconvergence_exit_1(tmp_path):
    cfg = {
        "grid": {"N": 2, "extent": 2.0, "cells_per_axis": 24},
        "p": 3.0,
        "field": {"kind": "constant", "value": 1.0},
        "tol": 1e-14,
        "max_iter": 1,
    }
    code, _ = run(tmp_path, "solve", cfg)
    assert code == 1


def test_solve_random_bumps_seed_flow(tmp_path):
    cfg = {
        "grid": {"N": 2, "extent": 2.0, "cells_per_axis": 16},
        "p": 2.0,
        "field": {"kind": "random_bumps", "max_bumps": 2},
        "tol": 1e-10,
    }
    _, out_a = run(tmp_path, "solve", cfg, seed=5, out="a")
    _, out_b = run(tmp_path, "solve", cfg, seed=5, out="b")
    _, out_c = run(tmp_path, "solve", cfg, seed=6, out="c")
    assert tree_bytes(out_a) == tree_bytes(out_b)
    assert tree_bytes(out_a)["solution.fld"] != tree_bytes(out_c)["solution.fld"]


def test_potential_report(tmp_path):
    cfg = {
        "grid": {"N": 2, "extent": 2.0, "cells_per_axis": 64},
        "field": {"kind": "constant", "value": 1.0},
        "R": 1.0,
        "holder_r": [6.0],
    }
    code, out_dir = run(tmp_path, "potential", cfg)
    assert code == 0
    report = json.loads((out_dir / "potential_report.json").read_text())
    assert abs(report["value_at_x"] - math.sqrt(math.pi)) < 0.02
    assert report["sup_over_box"] >= report["value_at_x"] - 1e-12
    assert report["holder_bounds"]["6.0"] >= report["sup_over_box"]
    header = (out_dir / "potential_profile.csv").read_text().splitlines()[0]
    assert header.startswith("#") or "," in header


def test_scheme_verify_and_determinism(tmp_path):
    code, scheme_out = run(tmp_path, "scheme", SCHEME_CFG, out="scheme1")
    assert code == 0
    states = json.loads((scheme_out / "states.json").read_text())
    assert [s["n"] for s in states] == [1, 2]
    assert all(s["converged"] for s in states)
    for n in (1, 2):
        assert (scheme_out / f"level_{n:04d}_u.fld").exists()
        assert (scheme_out / f"level_{n:04d}_v.fld").exists()

    # byte-identical rerun
    code2, scheme_out2 = run(tmp_path, "scheme", SCHEME_CFG, out="scheme2")
    assert code2 == 0
    assert tree_bytes(scheme_out) == tree_bytes(scheme_out2)

    # verify consumes the scheme output
    vcfg = {
        "scheme_out": str(scheme_out),
        "t": 0.4,
        "s": 0.6,
        "R": 1.25,
        "h_cells": [[3, 0], [2, 0], [1, 0]],
    }
    code3, verify_out = run(tmp_path, "verify", vcfg, name="v.json", out="verify")
    assert code3 == 0
    vrep = json.loads((verify_out / "verify_report.json").read_text())
    assert vrep["chain_all_ok"] is True
    assert vrep["decay_non_increasing"] is True
    assert vrep["chain_instances"] == 6  # 2 levels x 3 shifts
    # r defaults to the midpoint of the derived admissible window
    assert vrep["r"] > 2.0
    table = json.loads((verify_out / "decay_table.json").read_text())
    assert len(table["rows"]) == 3

    # report validates all hashes in place
    assert main(["report", "--out", str(verify_out)]) == 0

    # tampering is caught
    target = scheme_out / "states.json"
    target.write_bytes(target.read_bytes() + b" ")
    assert main(["report", "--out", str(scheme_out)]) == 1


def test_verify_rejects_non_scheme_dir(tmp_path):
    (tmp_path / "empty").mkdir()
    vcfg = {"scheme_out": str(tmp_path / "empty"), "t": 0.4, "s": 0.6, "R": 1.25,
            "h_cells": [[1, 0]]}
    code, _ = run(tmp_path, "verify", vcfg)
    assert code == 2


def test_report_missing_manifest(tmp_path):
    (tmp_path / "nothing").mkdir()
    assert main(["report", "--out", str(tmp_path / "nothing")]) == 1
