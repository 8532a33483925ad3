"""End-to-end CLI behaviour: artifacts, determinism, exit codes, SVG."""

import json
import xml.etree.ElementTree as ET

import numpy as np
import pytest

from homoflow.cli import main
from homoflow.datasets import PointCloud
from homoflow.io import cloud_from_csv, cloud_to_csv, load_checkpoint
from homoflow.rng import Rng
from homoflow.svgplot import emit_scatter_svg

FAST_CONFIG = {
    "dataset": {
        "kind": "gaussian_modes", "mode_count": 4, "src_radius": 5.0,
        "tgt_radius": 14.0, "points_per_mode": 25,
    },
    "losses": "M1+M2+SC",
    "batch_size": 64,
    "steps": 10,
    "learning_rate": 0.005,
    "sampler": {"steps": 8},
}


def write_config(tmp_path, doc, name="config.json"):
    path = tmp_path / name
    path.write_text(json.dumps(doc))
    return str(path)


def test_train_writes_artifact_set(tmp_path, capsys):
    cfg = dict(FAST_CONFIG, out=str(tmp_path / "run"))
    rc = main(["train", "--config", write_config(tmp_path, cfg), "--seed", "3"])
    assert rc == 0
    out = tmp_path / "run"
    for artifact in ("model.json", "loss.csv", "generated.csv", "metrics.json",
                     "scatter.svg", "traj.csv", "run.log"):
        assert (out / artifact).exists(), artifact
    metrics = json.loads((out / "metrics.json").read_text())
    assert metrics["seed"] == 3
    assert metrics["losses"] == "M1+M2+SC"
    assert metrics["euclidean_distance"] > 0
    printed = json.loads(capsys.readouterr().out)
    assert printed == metrics
    # loss history has header plus one row per step
    lines = (out / "loss.csv").read_text().strip().split("\n")
    assert lines[0] == "step,total,m1,m2,m3,sc"
    assert len(lines) == 1 + 10


def test_train_determinism_byte_identical(tmp_path):
    cfg_a = dict(FAST_CONFIG, out=str(tmp_path / "a"))
    cfg_b = dict(FAST_CONFIG, out=str(tmp_path / "b"))
    assert main(["train", "--config", write_config(tmp_path, cfg_a, "a.json")]) == 0
    assert main(["train", "--config", write_config(tmp_path, cfg_b, "b.json")]) == 0
    for name in ("metrics.json", "model.json", "generated.csv", "loss.csv", "scatter.svg"):
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes(), name


def test_checkpoint_roundtrip_bit_exact(tmp_path):
    cfg = dict(FAST_CONFIG, out=str(tmp_path / "run"))
    main(["train", "--config", write_config(tmp_path, cfg)])
    fields, meta = load_checkpoint(tmp_path / "run" / "model.json")
    assert meta["step_count"] == 10
    assert fields.order == 2
    assert fields.step_conditioned
    # saving again must reproduce the file byte-for-byte
    from homoflow.io import save_checkpoint

    save_checkpoint(tmp_path / "again.json", fields, meta["rng_seed"], meta["step_count"])
    assert (tmp_path / "again.json").read_bytes() == \
        (tmp_path / "run" / "model.json").read_bytes()


def test_sample_command_from_checkpoint(tmp_path):
    cfg = dict(FAST_CONFIG, out=str(tmp_path / "run"))
    main(["train", "--config", write_config(tmp_path, cfg)])
    rc = main(["sample", "--checkpoint", str(tmp_path / "run" / "model.json"),
               "--steps", "4", "--n", "32", "--out", str(tmp_path / "samples"),
               "--traj"])
    assert rc == 0
    clouds = cloud_from_csv(tmp_path / "samples" / "generated.csv")
    assert clouds[0].label == "generated"
    assert len(clouds[0]) == 32
    traj_lines = (tmp_path / "samples" / "traj.csv").read_text().strip().split("\n")
    assert traj_lines[0] == "point_id,step,t,x,y"
    assert len(traj_lines) == 1 + 32 * 5


def test_eval_command(tmp_path, capsys):
    a = PointCloud(np.zeros((1, 2)), "generated")
    b = PointCloud(np.array([[3.0, 4.0]]), "target")
    cloud_to_csv(a, tmp_path / "gen.csv")
    cloud_to_csv(b, tmp_path / "tgt.csv")
    rc = main(["eval", "--generated", str(tmp_path / "gen.csv"),
               "--target", str(tmp_path / "tgt.csv")])
    assert rc == 0
    assert json.loads(capsys.readouterr().out)["euclidean_distance"] == 5.0


def test_count_params_command(capsys):
    assert main(["count-params", "--losses", "M1+SC"]) == 0
    doc = json.loads(capsys.readouterr().out)
    assert doc["param_count"] == 10_802


def test_print_config_dumps_defaults(capsys):
    assert main(["print-config"]) == 0
    doc = json.loads(capsys.readouterr().out)
    assert doc["losses"] == "M1+M2+SC"
    assert doc["schedule"] == {"kind": "vp", "a": 19.9, "b": 0.1}
    assert "sampler" in doc and "steps" in doc["sampler"]


def test_print_config_is_idempotent(tmp_path, capsys):
    assert main(["print-config"]) == 0
    first = capsys.readouterr().out
    path = tmp_path / "dump.json"
    path.write_text(first)
    assert main(["print-config", "--config", str(path)]) == 0
    assert capsys.readouterr().out == first


def test_config_errors_exit_code_2(tmp_path, capsys):
    bad = write_config(tmp_path, {"dataset": "no_such_dataset"})
    assert main(["train", "--config", bad]) == 2
    assert main(["train", "--config", str(tmp_path / "missing.json")]) == 2
    unknown_key = write_config(tmp_path, {"datasett": "eight_mode"}, "k.json")
    assert main(["train", "--config", unknown_key]) == 2
    capsys.readouterr()


def test_numeric_failure_exit_code_3(tmp_path, capsys):
    cfg = dict(FAST_CONFIG, learning_rate=1e150, steps=50, out=None)
    with np.errstate(over="ignore", invalid="ignore"):
        rc = main(["train", "--config", write_config(tmp_path, cfg)])
    assert rc == 3
    assert "numeric failure" in capsys.readouterr().err


def test_svg_single_point_single_circle(tmp_path):
    emit_scatter_svg([PointCloud(np.array([[1.0, 2.0]]), "source")], tmp_path / "one.svg")
    root = ET.parse(tmp_path / "one.svg").getroot()
    circles = root.findall(".//{http://www.w3.org/2000/svg}circle")
    assert len(circles) == 1


def test_svg_empty_clouds_rejected(tmp_path):
    with pytest.raises(ValueError):
        emit_scatter_svg([], tmp_path / "none.svg")


def test_svg_800_points_parseable_with_colors(tmp_path):
    pts = Rng(0).points(800) * 3.0
    emit_scatter_svg([PointCloud(pts, "generated")], tmp_path / "many.svg")
    root = ET.parse(tmp_path / "many.svg").getroot()
    circles = root.findall(".//{http://www.w3.org/2000/svg}circle")
    assert len(circles) == 800
    groups = root.findall(".//{http://www.w3.org/2000/svg}g")
    assert groups[0].get("fill") == "#FFC0CB"


def test_cloud_csv_roundtrip_exact(tmp_path):
    cloud = PointCloud(Rng(1).points(17) * 7.3, "target")
    cloud_to_csv(cloud, tmp_path / "c.csv")
    lines = (tmp_path / "c.csv").read_text().strip().split("\n")
    assert lines[0] == "x,y,label"
    back = cloud_from_csv(tmp_path / "c.csv")[0]
    assert back.label == "target"
    assert np.array_equal(back.points, cloud.points)
