import hashlib
import json
import math
from pathlib import Path

import pytest

from fracbubble.cli import main


def read_json(path):
    return json.loads(Path(path).read_text())


def test_constants_json(tmp_path):
    out = tmp_path / "out"
    assert main(["constants", "--n", "2", "--s", "0.5", "--out", str(out)]) == 0
    data = read_json(out / "constants.json")
    assert data["c_inf"] == pytest.approx(math.pi / 4.0, abs=1e-10)
    assert data["two_star"] == 4.0
    manifest = read_json(out / "manifest.json")
    assert manifest["passed"] is True
    names = {f["path"] for f in manifest["files"]}
    assert "constants.json" in names


def test_constants_validation_exit_code(tmp_path, capsys):
    code = main(["constants", "--n", "2", "--s", "1.5", "--out", str(tmp_path / "x")])
    assert code == 2
    assert "params.s" in capsys.readouterr().err


def test_unknown_command_exits_2(tmp_path):
    with pytest.raises(SystemExit) as exc:
        main(["make-coffee", "--out", str(tmp_path)])
    assert exc.value.code == 2


def test_manifest_hashes_are_real(tmp_path):
    out = tmp_path / "out"
    assert main(["constants", "--n", "3", "--s", "0.5", "--out", str(out)]) == 0
    manifest = read_json(out / "manifest.json")
    for entry in manifest["files"]:
        digest = hashlib.sha256((out / entry["path"]).read_bytes()).hexdigest()
        assert digest == entry["sha256"]


def test_capacity_runs_and_is_deterministic(tmp_path):
    out1, out2 = tmp_path / "a", tmp_path / "b"
    cfg = tmp_path / "cap.json"
    cfg.write_text(json.dumps({"thetas": [1e-1, 1e-2, 1e-3]}))
    assert main(["capacity", "--config", str(cfg), "--out", str(out1)]) == 0
    assert main(["capacity", "--config", str(cfg), "--out", str(out2)]) == 0
    m1, m2 = read_json(out1 / "manifest.json"), read_json(out2 / "manifest.json")
    assert m1["files"] == m2["files"]
    report = read_json(out1 / "capacity.json")
    assert report["passed"] is True


def test_verify_estimates_light_config(tmp_path):
    eps = 0.2
    cfg = tmp_path / "ve.json"
    cfg.write_text(
        json.dumps(
            {
                "params": {"n": 2, "s": 0.25},
                "eps": eps,
                "deltas": [eps / 64, eps / 32, eps / 16, eps / 8],
                "tolerance": 0.25,
            }
        )
    )
    out = tmp_path / "out"
    assert main(["verify-estimates", "--config", str(cfg), "--out", str(out)]) == 0
    report = read_json(out / "verify_estimates.json")
    assert report["passed"] is True
    assert report["upper_energy"]["passed"] and report["lower_mass"]["passed"]
    assert (out / "sweep.csv").exists()
    assert (out / "rate_energy.svg").exists()


def test_verify_estimates_flat_data_exits_1(tmp_path, capsys):
    # slab far from the bubble support: width-independent fields, no fit
    eps = 0.2
    cfg = tmp_path / "flat.json"
    cfg.write_text(
        json.dumps(
            {
                "params": {"n": 2, "s": 0.25},
                "eps": eps,
                "deltas": [eps / 32, eps / 16, eps / 8, eps / 4],
                "z": [2.5, 0.0],
            }
        )
    )
    code = main(["verify-estimates", "--config", str(cfg), "--out", str(tmp_path / "o")])
    assert code == 1


def test_bubble_energy_with_cutoff_spec(tmp_path):
    cfg = tmp_path / "be.json"
    cfg.write_text(
        json.dumps(
            {
                "params": {"n": 2, "s": 0.5},
                "bubble": {"eps": 0.3, "z": [0.0, 0.0]},
                "cutoff": {"kind": "psi_bump", "rho": 0.2},
                "grid": {"half_width": 2.4, "points": 97},
            }
        )
    )
    out = tmp_path / "out"
    assert main(["bubble-energy", "--config", str(cfg), "--out", str(out)]) == 0
    report = read_json(out / "bubble_energy.json")
    assert report["cutoff"] == {"kind": "psi_bump", "rho": 0.2}
    assert report["mass_at_minimum"] == pytest.approx(math.pi, rel=1e-12)
    assert report["seminorm_sq"] == pytest.approx(math.pi, rel=0.01)
    assert (out / "bubble_field.bin").exists()
    assert (out / "bubble_profile.svg").exists()


def test_bad_config_json_exits_2(tmp_path, capsys):
    cfg = tmp_path / "broken.json"
    cfg.write_text("{not json")
    assert main(["capacity", "--config", str(cfg), "--out", str(tmp_path / "o")]) == 2
    assert "config" in capsys.readouterr().err


def test_nehari_command_on_saved_field(tmp_path):
    import numpy as np

    from fracbubble.fields import Field, Grid

    g = Grid.centered((0.0, 0.0), 2.0, 41)
    x, y = g.meshgrid()
    u = Field(g, np.exp(-2 * (x**2 + y**2)) * np.maximum(1 - (x**2 + y**2) / 2.5, 0) ** 2)
    field_path = tmp_path / "u.bin"
    u.save_binary(field_path)
    out = tmp_path / "out"
    assert main(["nehari", "--field", str(field_path), "--out", str(out)]) == 0
    data = read_json(out / "nehari.json")
    assert data["report"]["seminorm_sq"] > 0
    assert data["report"]["energy"] == pytest.approx(
        data["report"]["seminorm_sq"] / 2 - data["report"]["mass"] / 4, rel=1e-12
    )
    assert len(data["barycenter"]) == 2
    assert abs(data["barycenter"][0]) < 1e-10


def test_nehari_command_missing_field_exits_2(tmp_path, capsys):
    assert main(["nehari", "--out", str(tmp_path / "o")]) == 2
    assert "field" in capsys.readouterr().err
