import json

import numpy as np
import pytest

from trajsc.benchmark import shape_by_name
from trajsc.cli import main
from trajsc.io import write_collection, write_trajectory
from trajsc.trajectory import Trajectory


def placed(name, tid, angle=0.0, scale=1.0, shift=(200.0, 200.0)):
    pts = shape_by_name(name).points()
    c, s = np.cos(angle), np.sin(angle)
    return Trajectory(tid, pts @ (scale * np.array([[c, -s], [s, c]])).T + shift)


def run(capsys, *argv):
    code = main([str(a) for a in argv])
    out = capsys.readouterr()
    return code, out.out, out.err


@pytest.fixture
def files(tmp_path):
    circ = placed("circle", "c0")
    write_trajectory(circ, tmp_path / "c0.traj.json")
    write_trajectory(placed("circle", "c1", 0.7, 1.3, (180, 210)), tmp_path / "c1.traj.json")
    write_trajectory(placed("square", "s0"), tmp_path / "s0.traj.json")
    coll = [placed("circle", f"c{k}", 0.4 * k, 0.8 + 0.15 * k, (190 + 5 * k, 200)) for k in range(3)]
    coll += [placed("square", f"s{k}", 0.3 * k, 0.9 + 0.1 * k, (200, 195 + 4 * k)) for k in range(3)]
    write_collection(coll, tmp_path / "mixed.traj.json")
    (tmp_path / "bad.json").write_text("{not json")
    write_trajectory(Trajectory("z", [[5, 5], [5, 5]]), tmp_path / "z.traj.json")
    return tmp_path


def test_distance_to_self_is_zero(files, capsys):
    code, out, _ = run(capsys, "distance", files / "c0.traj.json", files / "c0.traj.json")
    assert code == 0
    assert json.loads(out)["distance"] < 1e-6


def test_distance_under_similarity(files, capsys):
    code, out, _ = run(capsys, "distance", files / "c0.traj.json", files / "c1.traj.json", "--group", "sim")
    assert code == 0
    res = json.loads(out)
    assert res["distance"] < 0.5 and res["group"] == "sim"


def test_distance_table(files, capsys):
    code, out, _ = run(capsys, "distance", files / "c0.traj.json", files / "s0.traj.json", "--table")
    assert code == 0
    assert out.startswith("c0\ts0\trigid\t")


def test_malformed_input_exit_2(files, capsys):
    code, _, err = run(capsys, "distance", files / "bad.json", files / "c0.traj.json")
    assert code == 2
    assert "bad.json" in err


def test_degenerate_exit_3(files, capsys):
    code, _, err = run(capsys, "distance", files / "z.traj.json", files / "c0.traj.json")
    assert code == 3
    assert "zero arc length" in err


def test_unknown_group_exit_2(files, capsys):
    code, _, _ = run(capsys, "distance", files / "c0.traj.json", files / "c1.traj.json", "--group", "projective")
    assert code == 2


def test_missing_argument_exit_2(capsys):
    assert run(capsys, "distance")[0] == 2


def test_cluster_two_shapes(files, capsys):
    svg = files / "clusters.svg"
    code, out, _ = run(capsys, "cluster", files / "mixed.traj.json", "--group", "simref", "--render", svg)
    assert code == 0
    res = json.loads(out)
    assert res["n_clusters"] == 2
    assert list(res["labels"].values()) == [0, 0, 0, 1, 1, 1]
    text = svg.read_text()
    assert text.count("<polyline") == 6
    assert text.count('class="cluster"') == 2


def test_cluster_criterion_trace(files, capsys):
    code, out, _ = run(capsys, "cluster", files / "mixed.traj.json", "--criterion", "most", "--table")
    assert code == 0
    lines = out.strip().splitlines()
    assert lines[-1] == "chosen\trigid"


def test_cluster_family_then_verify(files, capsys):
    fam = files / "family.json"
    code, out, _ = run(capsys, "cluster", files / "mixed.traj.json", "--criterion", "oracle:simref",
                       "--family-out", fam)
    assert code == 0
    chosen = json.loads(out)
    assert chosen["chosen_group"] == "sim_ref"
    assert run(capsys, "verify", fam, files / "c1.traj.json")[0] == 0
    assert run(capsys, "verify", fam, files / "s0.traj.json")[0] == 1
    assert run(capsys, "verify", fam, files / "bad.json")[0] == 2


def test_cluster_needs_two(files, capsys):
    assert run(capsys, "cluster", files / "c0.traj.json", "--group", "rigid")[0] == 2


def test_render(files, capsys):
    out_svg = files / "all.svg"
    code, _, _ = run(capsys, "render", files / "mixed.traj.json", "-o", out_svg, "--resample", 30)
    assert code == 0
    assert out_svg.read_text().count("<circle") == 6 * 30


def test_ingest(files, capsys):
    (files / "manifest.json").write_text(json.dumps({"p": ["c0.traj.json", "bad.json"]}))
    code, out, err = run(capsys, "ingest", files, "-o", files / "ing")
    assert code == 0
    assert json.loads(out)["files_ok"] == 1
    assert "bad.json" in err
    assert (files / "ing" / "p.traj.json").exists()
    (files / "manifest.json").write_text(json.dumps({"p": ["bad.json"]}))
    assert run(capsys, "ingest", files)[0] == 2


SMALL = {"n_samples": 6, "per_class": 1, "tasks": ["square_ccw", "ellipse"], "criteria": ["majority", "hierarchical"]}


def test_bench_config_unknown_key(tmp_path, capsys):
    (tmp_path / "cfg.json").write_text(json.dumps({"n_sample": 5}))
    code, _, err = run(capsys, "bench", "eval", "--config", tmp_path / "cfg.json", "-o", tmp_path / "r")
    assert code == 2
    assert "n_sample" in err


@pytest.mark.slow
def test_bench_generate_eval_deterministic(tmp_path, capsys):
    (tmp_path / "cfg.json").write_text(json.dumps(SMALL))
    assert run(capsys, "bench", "generate", "--config", tmp_path / "cfg.json", "-o", tmp_path / "b")[0] == 0
    for name in ("r1", "r2"):
        code, _, _ = run(capsys, "bench", "eval", "--config", tmp_path / "cfg.json", "--bench", tmp_path / "b",
                         "-o", tmp_path / name, "--tau-sweep")
        assert code == 0
    for f in ("report.json", "table.tsv", "metrics.png", "tau_sweep.png"):
        assert (tmp_path / "r1" / f).read_bytes() == (tmp_path / "r2" / f).read_bytes(), f
    rows = json.loads((tmp_path / "r1" / "report.json").read_text())["rows"]
    for crit in ("majority", "hierarchical", "oracle", "direct"):
        assert len([r for r in rows if r["criterion"] == crit]) == 6
    table = (tmp_path / "r1" / "table.tsv").read_text().splitlines()
    assert table[0].split("\t") == ["criterion", "tau", "accuracy", "precision", "recall", "f1"]
