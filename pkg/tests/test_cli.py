"""Command-line surface: exit codes, determinism, and that the CLI is a
thin shell over the library (outputs diffed against direct library calls)."""

import json
import subprocess
import sys

import pytest

from conftest import make_scene_spec
from gaugekit.fixtures import parse_fixture, serialize_fixture, serialize_report
from gaugekit.pipeline import evaluate_batch, read_gauge, serialize_summary
from gaugekit.synthgauge import generate_scene, scene_spec_to_jsonable


def run_cli(*args, cwd=None):
    return subprocess.run(
        [sys.executable, "-m", "gaugekit", *args],
        capture_output=True,
        cwd=cwd,
    )


@pytest.fixture()
def scene_file(tmp_path):
    fixture, _ = generate_scene(make_scene_spec())
    path = tmp_path / "scene.json"
    path.write_bytes(serialize_fixture(fixture))
    return path


def test_read_valid_fixture_exit_zero(scene_file):
    proc = run_cli("read", str(scene_file))
    assert proc.returncode == 0
    doc = json.loads(proc.stdout)
    assert doc["readings"]
    assert doc["unit"] == "bar"


def test_read_output_matches_library(scene_file):
    proc = run_cli("read", str(scene_file))
    expected = serialize_report(read_gauge(parse_fixture(scene_file.read_bytes())))
    assert proc.stdout == expected + b"\n"


def test_read_table_output(scene_file):
    proc = run_cli("read", "--table", str(scene_file))
    assert proc.returncode == 0
    line = proc.stdout.decode()
    assert "inner=" in line and "bar" in line and "ellipse:ok" in line


def test_read_failing_fixture_exit_one(tmp_path):
    fixture, _ = generate_scene(make_scene_spec())
    doc = json.loads(serialize_fixture(fixture))
    doc["keypoints"] = doc["keypoints"][:4]
    path = tmp_path / "fail.json"
    path.write_text(json.dumps(doc), encoding="utf-8")
    proc = run_cli("read", str(path))
    assert proc.returncode == 1
    report = json.loads(proc.stdout)
    assert report["stage_statuses"]["ellipse"]["reason"] == "insufficient_notches"


def test_read_missing_file_exit_two(tmp_path):
    proc = run_cli("read", str(tmp_path / "nope.json"))
    assert proc.returncode == 2
    assert b"gaugekit:" in proc.stderr


def test_read_malformed_fixture_exit_three(tmp_path):
    path = tmp_path / "bad.json"
    path.write_text("{not json", encoding="utf-8")
    assert run_cli("read", str(path)).returncode == 3
    path.write_text('{"schema": 2}', encoding="utf-8")
    assert run_cli("read", str(path)).returncode == 3


def _write_generation_manifest(tmp_path, n=4, perturb=True):
    scenes = []
    for k in range(n):
        spec = make_scene_spec(needle_value=1.0 + 2.0 * k)
        entry = {"spec": scene_spec_to_jsonable(spec)}
        if perturb:
            entry["perturbation"] = {
                "keypoint_noise_sigma": 0.5,
                "n_outlier_ocr": 1,
                "seed": k,
            }
        scenes.append(entry)
    path = tmp_path / "scenes.json"
    path.write_text(json.dumps({"scenes": scenes}), encoding="utf-8")
    return path


def test_generate_single_spec_then_read(tmp_path):
    spec_path = tmp_path / "spec.json"
    spec_path.write_text(json.dumps(scene_spec_to_jsonable(make_scene_spec())))
    out_dir = tmp_path / "out"
    proc = run_cli("generate", str(spec_path), "--out-dir", str(out_dir))
    assert proc.returncode == 0
    fixture_path = out_dir / "scene_000.json"
    assert fixture_path.exists()
    assert str(fixture_path) in proc.stdout.decode()
    assert run_cli("read", str(fixture_path)).returncode == 0


def test_generate_manifest_writes_all_files(tmp_path):
    manifest = _write_generation_manifest(tmp_path, n=5)
    out_dir = tmp_path / "batch"
    assert run_cli("generate", str(manifest), "--out-dir", str(out_dir)).returncode == 0
    files = sorted(p.name for p in out_dir.glob("scene_*.json"))
    assert files == [f"scene_{k:03d}.json" for k in range(5)]
    listed = json.loads((out_dir / "manifest.json").read_text())
    assert listed["fixtures"] == files


def test_generate_same_seed_is_byte_identical(tmp_path):
    manifest = _write_generation_manifest(tmp_path, n=3)
    out_a, out_b = tmp_path / "a", tmp_path / "b"
    for out in (out_a, out_b):
        proc = run_cli("generate", str(manifest), "--seed", "7", "--out-dir", str(out))
        assert proc.returncode == 0
    for name in ("scene_000.json", "scene_001.json", "scene_002.json", "manifest.json"):
        assert (out_a / name).read_bytes() == (out_b / name).read_bytes()


def test_generate_output_matches_library(tmp_path):
    spec = make_scene_spec(needle_value=7.25)
    spec_path = tmp_path / "spec.json"
    spec_path.write_text(json.dumps(scene_spec_to_jsonable(spec)))
    out_dir = tmp_path / "out"
    run_cli("generate", str(spec_path), "--out-dir", str(out_dir))
    expected = serialize_fixture(generate_scene(spec)[0]) + b"\n"
    assert (out_dir / "scene_000.json").read_bytes() == expected


def test_generate_bad_spec_exit_three(tmp_path):
    spec = scene_spec_to_jsonable(make_scene_spec())
    spec["n_major_notches"] = 3
    path = tmp_path / "bad_spec.json"
    path.write_text(json.dumps(spec))
    assert run_cli("generate", str(path), "--out-dir", str(tmp_path / "x")).returncode == 3


def test_eval_manifest_matches_library(tmp_path):
    manifest = _write_generation_manifest(tmp_path, n=4, perturb=False)
    out_dir = tmp_path / "fixtures"
    run_cli("generate", str(manifest), "--out-dir", str(out_dir))
    proc = run_cli("eval", str(out_dir / "manifest.json"))
    assert proc.returncode == 0
    fixtures = [
        parse_fixture((out_dir / f"scene_{k:03d}.json").read_bytes()) for k in range(4)
    ]
    assert proc.stdout == serialize_summary(evaluate_batch(fixtures)) + b"\n"
    assert b"full RE mean" in proc.stderr
    doc = json.loads(proc.stdout)
    assert doc["n_fixtures"] == 4
    assert doc["full_re_mean_percent"] < 0.1


def test_eval_out_file(tmp_path):
    manifest = _write_generation_manifest(tmp_path, n=2, perturb=False)
    out_dir = tmp_path / "fx"
    run_cli("generate", str(manifest), "--out-dir", str(out_dir))
    summary_path = tmp_path / "summary.json"
    proc = run_cli("eval", str(out_dir / "manifest.json"), "--out", str(summary_path))
    assert proc.returncode == 0
    assert proc.stdout.decode().strip() == str(summary_path)
    assert json.loads(summary_path.read_text())["n_fixtures"] == 2


def test_eval_missing_ground_truth_exit_three(tmp_path):
    fixture, _ = generate_scene(make_scene_spec())
    doc = json.loads(serialize_fixture(fixture))
    del doc["ground_truth"]
    (tmp_path / "fx.json").write_text(json.dumps(doc))
    (tmp_path / "man.json").write_text(json.dumps({"schema": 1, "fixtures": ["fx.json"]}))
    proc = run_cli("eval", str(tmp_path / "man.json"))
    assert proc.returncode == 3


def test_eval_is_deterministic(tmp_path):
    manifest = _write_generation_manifest(tmp_path, n=3)
    out_dir = tmp_path / "fx"
    run_cli("generate", str(manifest), "--out-dir", str(out_dir))
    a = run_cli("eval", str(out_dir / "manifest.json"))
    b = run_cli("eval", str(out_dir / "manifest.json"))
    assert a.stdout == b.stdout


def test_usage_error_exit_two():
    assert run_cli().returncode == 2
    assert run_cli("read").returncode == 2
