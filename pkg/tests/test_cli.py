import json
import os
import subprocess
import sys

import numpy as np
import pytest
from scipy.ndimage import maximum_filter

from wardsoliton import specfile
from wardsoliton.cli import (
    DEFAULT_GRID,
    frame_times,
    main,
    read_grid_csv,
    sample_grid,
)
from wardsoliton.backlund import probe_points
from wardsoliton.errors import SpecError
from wardsoliton.loopgroup import ward_evaluator, ward_map

SMALL = "-3,3,13,-3,3,13"


def write(tmp_path, doc, name="spec.json"):
    p = tmp_path / name
    p.write_text(json.dumps(doc), encoding="utf-8")
    return str(p)


def one_doc(pole="i", span=(("1", "w"),)):
    return {"construction": "one_soliton", "pole": pole, "span": [list(m) for m in span]}


def lumps(v):
    peak = (v == maximum_filter(v, size=5)) & (v > 0.1 * np.nanmax(v))
    return int(peak.sum())


# build ------------------------------------------------------------------


def test_build_summaries(tmp_path, capsys):
    assert main(["build", "--spec", write(tmp_path, one_doc())]) == 0
    assert capsys.readouterr().out.splitlines()[0] == "degree 1, poles [(i,1)], ranks [1]"
    assert main(["build", "--spec", str(specfile.shipped_path("double_pole"))]) == 0
    assert capsys.readouterr().out.splitlines()[0] == "degree 2, poles [(i,2)], ranks [1,1]"
    assert main(["build", "--spec", str(specfile.shipped_path("two_double_poles"))]) == 0
    line = capsys.readouterr().out.splitlines()[0]
    assert line.startswith("degree 4, poles [") and "(i,2)" in line and "(-1+2i,2)" in line


def test_build_record_round_trip(tmp_path, capsys):
    rec = tmp_path / "rec.json"
    spec = str(specfile.shipped_path("triple_pole"))
    assert main(["build", "--spec", spec, "--out", str(rec)]) == 0
    _, psi2 = specfile.load_record(rec)
    psi1 = specfile.build(specfile.shipped("triple_pole"))
    p = probe_points(30, 3)
    assert np.max(np.abs(ward_map(psi1, p) - ward_map(psi2, p))) < 1e-12
    # a record is itself an accepted --spec input
    assert main(["verify", "--spec", str(rec), "--skip-energy"]) == 0


# input errors -------------------------------------------------------------


@pytest.mark.parametrize(
    "doc, needle",
    [
        ({"construction": "one_soliton", "pole": "1.0", "span": [["1", "w"]]}, "real"),
        ({"construction": "one_soliton", "span": [["1", "w"]]}, "pole"),
        ({"construction": "knot", "pole": "i"}, "construction"),
        ({"construction": "one_soliton", "pole": "i", "span": [["1", "w+"]]}, "span/0"),
        ({"construction": "limiting", "pole": "i", "k": 0, "columns": [[["1", "w"]]]}, "k"),
        ({"construction": "bt_chain", "steps": [{"pole": "i", "span": [["1", "w", "1"]]},
                                                {"pole": "2i", "span": [["1", "w"]]}]}, "dimension"),
    ],
)
def test_schema_errors(tmp_path, capsys, doc, needle):
    assert main(["verify", "--spec", write(tmp_path, doc)]) == 2
    err = capsys.readouterr().err
    assert err.startswith("error: ") and needle in err
    with pytest.raises(SpecError):
        specfile.validate(doc)


def test_other_input_errors(tmp_path, capsys):
    spec = write(tmp_path, one_doc())
    assert main(["build", "--spec", str(tmp_path / "missing.json")]) == 2
    (tmp_path / "bad.json").write_text("{not json", encoding="utf-8")
    assert main(["build", "--spec", str(tmp_path / "bad.json")]) == 2
    assert main(["sample", "--spec", spec, "--grid", "0,1,1,0,1,5", "--out", str(tmp_path / "g.csv")]) == 2
    assert main(["sample", "--spec", spec, "--quantity", "entry(5,0,re)", "--grid", SMALL,
                 "--out", str(tmp_path / "g.csv")]) == 2
    assert main(["verify", "--spec", spec, "--fd-step", "0.5"]) == 2
    assert main(["nonsense"]) == 2
    capsys.readouterr()


def test_shipped_names():
    assert specfile.shipped_names() == sorted(
        ["one_soliton", "two_pole_bt", "double_pole", "triple_pole", "two_double_poles", "uniton_c3"])
    for name in specfile.shipped_names():
        specfile.validate(specfile.shipped(name))


# verify -----------------------------------------------------------------


def test_verify_pass_and_negative_control(tmp_path, capsys):
    spec = str(specfile.shipped_path("two_pole_bt"))
    assert main(["verify", "--spec", spec, "--skip-energy"]) == 0
    out = capsys.readouterr().out
    assert out.rstrip().endswith("suite pass")
    assert main(["verify", "--spec", spec, "--skip-energy", "--debug-corrupt"]) == 1
    out = capsys.readouterr().out
    ward = [ln for ln in out.splitlines() if ln.startswith("ward_residual ")]
    assert ward and ward[0].endswith(" fail") and out.rstrip().endswith("suite fail")


def test_verify_report_deterministic(tmp_path, capsys):
    spec = str(specfile.shipped_path("one_soliton"))
    main(["verify", "--spec", spec, "--skip-energy", "--seed", "7"])
    a = capsys.readouterr().out
    main(["verify", "--spec", spec, "--skip-energy", "--seed", "7"])
    assert capsys.readouterr().out == a


def test_seed_environment_override(tmp_path):
    spec = str(specfile.shipped_path("one_soliton"))
    cmd = [sys.executable, "-m", "wardsoliton.cli", "verify", "--spec", spec, "--skip-energy"]
    env = dict(os.environ, WSF_SEED="7")
    via_env = subprocess.run(cmd + ["--seed", "1"], env=env, capture_output=True, text=True)
    env.pop("WSF_SEED")
    via_flag = subprocess.run(cmd + ["--seed", "7"], env=env, capture_output=True, text=True)
    assert via_env.returncode == 0 and via_env.stdout == via_flag.stdout
    bad = subprocess.run(cmd, env=dict(env, WSF_SEED="x"), capture_output=True, text=True)
    assert bad.returncode == 2


# sample / frames ----------------------------------------------------------


def test_sample_golden_layout(tmp_path, capsys):
    out = tmp_path / "g.csv"
    spec = write(tmp_path, one_doc())
    assert main(["sample", "--spec", spec, "--grid", "-1,1,3,-2,2,2", "--t", "0.5",
                 "--quantity", "entry(0,1,abs)", "--out", str(out)]) == 0
    lines = out.read_text(encoding="utf-8").splitlines()
    assert lines[0] == "# -1.0 1.0 3 -2.0 2.0 2 0.5 entry(0,1,abs)"
    assert len(lines) == 3 and all(len(ln.split(",")) == 3 for ln in lines[1:])
    # row-major in y: row r is y = y_min + r*dy, column c is x = x_min + c*dx
    J = ward_evaluator(specfile.build(one_doc()))
    M = J(np.array([1.0]), np.array([2.0]), np.array([0.5]))[0]
    assert lines[2].split(",")[2] == f"{abs(M[0, 1]):.12e}"
    capsys.readouterr()


def test_sample_byte_identical_and_multi_t(tmp_path, capsys):
    spec = str(specfile.shipped_path("double_pole"))
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    for p in (a, b):
        assert main(["sample", "--spec", spec, "--grid", SMALL, "--out", str(p)]) == 0
    assert a.read_bytes() == b.read_bytes()
    assert main(["sample", "--spec", spec, "--grid", SMALL, "--t", "-1,1", "--out", str(tmp_path / "m.csv")]) == 0
    metas = [read_grid_csv(tmp_path / f"m_{i:04d}.csv")[0]["t"] for i in range(2)]
    assert metas == [-1.0, 1.0]
    capsys.readouterr()


def test_constant_field_gives_zero_grid(tmp_path, capsys):
    # a span of constant vectors gives a constant J
    spec = write(tmp_path, one_doc(span=(("1", "2"),)))
    out = tmp_path / "z.csv"
    assert main(["sample", "--spec", spec, "--grid", SMALL, "--out", str(out)]) == 0
    _, vals = read_grid_csv(out)
    assert np.all(vals == 0)
    capsys.readouterr()


def test_masked_fraction_on_default_grid():
    for name in specfile.shipped_names():
        J = ward_evaluator(specfile.build(specfile.shipped(name)))
        grid = (-10.0, 10.0, 101, -10.0, 10.0, 101)
        vals = sample_grid(J, grid, 0.0, ("energy_density",), 1e-4)
        assert np.mean(np.isnan(vals)) < 0.01, name


def test_double_pole_scattering_lumps():
    J = ward_evaluator(specfile.build(specfile.shipped("double_pole")))
    counts = [lumps(sample_grid(J, DEFAULT_GRID, t, ("energy_density",), 1e-4)) for t in (-4.0, 0.0, 4.0)]
    assert counts[0] == 2 and counts[1] >= 1 and counts[2] == 2


def test_frames_and_manifest(tmp_path, capsys):
    spec = write(tmp_path, one_doc("2i"))
    out = tmp_path / "frames"
    assert main(["frames", "--spec", spec, "--grid", "-6,6,61,-6,6,61", "--t-start", "-1",
                 "--t-end", "1", "--steps", "4", "--out", str(out)]) == 0
    man = json.loads((out / "manifest.json").read_text(encoding="utf-8"))
    assert [f["file"] for f in man["frames"]] == [f"frame_{i:04d}.csv" for i in range(5)]
    ts = [f["t"] for f in man["frames"]]
    assert ts == sorted(ts) and ts[0] == -1.0 and ts[-1] == 1.0
    assert man["grid"]["nx"] == 61 and man["quantity"] == "energy_density"
    # lump drifts at (0, -3/5) per unit time
    peaks = []
    for f in man["frames"]:
        meta, v = read_grid_csv(out / f["file"])
        r, c = np.unravel_index(np.nanargmax(v), v.shape)
        peaks.append((-6 + 0.2 * c, -6 + 0.2 * r))
    dy = (peaks[-1][1] - peaks[0][1]) / 2.0
    assert abs(peaks[-1][0] - peaks[0][0]) <= 0.2 and abs(dy + 0.6) <= 0.1
    capsys.readouterr()


def test_single_frame_equals_sample(tmp_path, capsys):
    spec = write(tmp_path, one_doc())
    out = tmp_path / "fr"
    main(["frames", "--spec", spec, "--grid", SMALL, "--t-start", "0.5", "--t-end", "0.5", "--steps", "1",
          "--out", str(out)])
    main(["sample", "--spec", spec, "--grid", SMALL, "--t", "0.5", "--out", str(tmp_path / "s.csv")])
    assert (out / "frame_0000.csv").read_bytes() == (tmp_path / "s.csv").read_bytes()
    assert not (out / "frame_0001.csv").exists()
    assert frame_times(0, 1, 3) == [0.0, 1 / 3, 2 / 3, 1.0]
    capsys.readouterr()


def test_kinematics_grid_displacement():
    J = ward_evaluator(specfile.build(one_doc("2i")))
    grid = (-5.0, 5.0, 101, -5.0, 5.0, 101)
    cell = 0.1
    pos = []
    for t in (0.0, 2.0):
        v = sample_grid(J, grid, t, ("energy_density",), 1e-4)
        r, c = np.unravel_index(np.nanargmax(v), v.shape)
        pos.append(np.array([-5 + cell * c, -5 + cell * r]))
    d = pos[1] - pos[0]
    assert np.all(np.abs(d - 2 * np.array([0.0, -0.6])) <= cell + 1e-9)


# factor -----------------------------------------------------------------


def test_factor_listings(tmp_path, capsys):
    assert main(["factor", "--spec", str(specfile.shipped_path("triple_pole"))]) == 0
    assert capsys.readouterr().out.splitlines()[0] == (
        "pole 1+i: prefactor exponent 0, factors: 3, ranks [1,1,1], input minimal yes")
    assert main(["factor", "--spec", str(specfile.shipped_path("two_double_poles"))]) == 0
    lines = capsys.readouterr().out.splitlines()
    assert len([ln for ln in lines if ln.startswith("pole ")]) == 2
    assert all("prefactor exponent 0, factors: 2, ranks [1,1], input minimal yes" in ln for ln in lines[:2])
