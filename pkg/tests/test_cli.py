import json
import math
from pathlib import Path

import numpy as np
import pytest

from dispwave.cli import load_state, main, read_toml


def run_cli(*args) -> int:
    return main([str(a) for a in args])


def test_version_runs():
    with pytest.raises(SystemExit) as exc:
        run_cli("--version")
    assert exc.value.code == 0


def test_coeffs_and_decompose_round_trip(tmp_path):
    eff = tmp_path / "effective.toml"
    code = run_cli("coeffs", "--geometry", "laminate", "--cell-res", "60x80",
                   "--out", eff)
    assert code == 0
    data = read_toml(eff)["effective"]
    assert data["a1"] == pytest.approx(0.92, abs=1e-9)
    assert data["a2"] == pytest.approx(0.3125, abs=1e-6)
    assert Path(str(eff) + ".manifest.json").is_file()

    ef = tmp_path / "ef.toml"
    assert run_cli("decompose", eff, "--symmetric-2d", "--out", ef) == 0
    out = read_toml(ef)["effective"]
    assert out["decomposition"] == "symmetric-2d"
    assert out["residual"] < 1e-10
    E = np.asarray(out["E"])
    assert E[0, 0] > 0.0


def test_coeffs_manifest_reproducible(tmp_path):
    out1 = tmp_path / "a.toml"
    out2 = tmp_path / "b.toml"
    for out in (out1, out2):
        assert run_cli("coeffs", "--geometry", "laminate", "--cell-res", "20x20",
                       "--out", out) == 0
    assert out1.read_text() == out2.read_text()
    manifest = json.loads(Path(str(out1) + ".manifest.json").read_text())
    assert manifest["subcommand"] == "coeffs"
    assert "wall_time_s" in manifest and "workers" in manifest


def test_coeffs_dump_fields(tmp_path):
    dump = tmp_path / "fields"
    assert run_cli("coeffs", "--geometry", "laminate", "--cell-res", "20x20",
                   "--out", tmp_path / "e.toml", "--dump-fields", dump) == 0
    files = sorted(p.name for p in dump.glob("psi_*.csv"))
    assert "psi_01.csv" in files and "psi_21.csv" in files
    header = (dump / "psi_01.csv").read_text().splitlines()[0]
    assert header == "y1,y2,re,im"


def test_missing_geometry_is_config_error(capsys):
    assert run_cli("coeffs", "--cell-res", "8x8") == 1
    assert "geometry" in capsys.readouterr().err


def test_band_csv(tmp_path):
    out = tmp_path / "band.csv"
    code = run_cli("band", "--geometry", "laminate", "--cell-res", "16x16",
                   "--waypoints", "0,0;0.5,0", "--samples", "3", "--bands", "2",
                   "--out", out)
    assert code == 0
    lines = out.read_text().strip().splitlines()
    assert lines[0] == "k1,k2,mu0,mu1"
    assert len(lines) == 1 + 4
    first = [float(x) for x in lines[1].split(",")]
    assert first[2] == pytest.approx(0.0, abs=1e-12)


def test_taylor_check_subcommand(tmp_path, capsys):
    out = tmp_path / "taylor.json"
    code = run_cli("taylor-check", "--geometry", "laminate", "--cell-res", "24x40",
                   "--step", "0.02", "--out", out)
    assert code == 0
    report = json.loads(out.read_text())
    assert report["max_rel_A"] < 1e-4
    assert "d2 mu0" in capsys.readouterr().out


def test_simulate_compare_ray(tmp_path):
    outdir = tmp_path / "snaps"
    code = run_cli("simulate", "--equation", "eps", "--geometry", "rect",
                   "--eps", "0.3", "--t-final", "1.0", "--snapshots", "0.5,1.0",
                   "--cells", "13x12", "--extent", "4.0", "--out", outdir)
    assert code == 0
    files = sorted(outdir.glob("ueps_*.npz"))
    assert len(files) == 2
    state, eps = load_state(files[0])
    assert eps == 0.3
    assert state.u_now.shape == state.grid.shape

    code = run_cli("compare", files[0], files[0])
    assert code == 0

    ray = tmp_path / "ray.csv"
    code = run_cli("ray", files[1], "--angle", "0.0", "--a1", "0.27", "--a2", "0.15",
                   "--r-max", "3.0", "--out", ray)
    assert code == 0
    assert ray.read_text().splitlines()[0] == "r,value"


def test_simulate_dispersive_from_model_file(tmp_path):
    eff = tmp_path / "eff.toml"
    assert run_cli("coeffs", "--geometry", "laminate", "--cell-res", "20x20",
                   "--out", eff) == 0
    ef = tmp_path / "ef.toml"
    assert run_cli("decompose", eff, "--out", ef) == 0
    outdir = tmp_path / "w"
    code = run_cli("simulate", "--equation", "dispersive", "--model", ef,
                   "--eps", "0.2", "--t-final", "1.0", "--snapshots", "1.0",
                   "--extent", "4.0", "--csv", "--out", outdir)
    assert code == 0
    files = list(outdir.glob("weps_*.npz"))
    assert len(files) == 1
    assert (outdir / f"{files[0].name}.csv").exists()


def test_kdv_subcommand(tmp_path):
    out = tmp_path / "kdv.csv"
    assert run_cli("kdv", "--kappa", "-0.5", "--t0", "1.0", "--times", "2,4",
                   "--r-extent", "100", "--n", "512", "--out", out) == 0
    lines = out.read_text().strip().splitlines()
    assert lines[0] == "r,U_t2,U_t4"
    assert len(lines) == 1 + 512


def test_convergence_subcommand_smoke(tmp_path, capsys):
    out = tmp_path / "conv.csv"
    code = run_cli("convergence", "--geometry", "rect", "--eps-list", "0.5,0.4,0.3",
                   "--T0", "0.5", "--cells", "13x12", "--out", out)
    assert code == 0
    text = capsys.readouterr().out
    assert "fitted rate" in text
    assert len(out.read_text().strip().splitlines()) == 4


def test_bad_model_file_is_config_error(tmp_path):
    bad = tmp_path / "bad.toml"
    bad.write_text("[effective]\nnothing = 1\n")
    code = run_cli("simulate", "--equation", "dispersive", "--model", bad,
                   "--eps", "0.1", "--t-final", "1.0", "--snapshots", "1.0")
    assert code == 1
