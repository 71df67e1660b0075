import json
import shutil
import subprocess
import sys
from pathlib import Path

import numpy as np
import pytest

from panobench import io
from panobench.cli import main
from panobench.control import LatentGrid, NormalMap
from panobench.metrics import ClassRaster, default_registry

FIXTURE = Path(__file__).parent / "fixtures" / "eval5"
REG = default_registry()


def run(capsys, *argv):
    code = main([str(a) for a in argv])
    out, err = capsys.readouterr()
    return code, out, err


def test_expert_score(capsys):
    code, out, _ = run(capsys, "expert-score", "--aesthetic", 2.66, "--spatial", 3.33,
                       "--plausibility", 3.79)
    assert code == 0 and out.strip() == "3.20 B"


def test_schedule_start_and_end(capsys):
    assert run(capsys, "schedule", "--step", 0, "--warmup", 100)[1].strip() == "1.0 0.0"
    assert run(capsys, "schedule", "--step", 500, "--warmup", 100)[1].strip() == "0.2 0.8"


def test_reward(capsys):
    code, out, _ = run(capsys, "reward", "--structural-iou", 0.7, "--omniaid", 0.2,
                       "--longclip", 0.8, "--hpsv3", 5.0)
    assert code == 0 and float(out) == pytest.approx(0.55)


def test_reward_bad_weights(capsys):
    code, _, err = run(capsys, "reward", "--structural-iou", 0.7, "--omniaid", 0.2,
                       "--longclip", 0.8, "--hpsv3", 5.0, "--weights", "1,2")
    assert code == 1 and "weights" in err


def test_iou_identical(capsys, tmp_path):
    r = ClassRaster(np.arange(7).repeat(16).reshape(8, 14), REG)
    io.write_class_raster(tmp_path / "a.png", r)
    code, out, _ = run(capsys, "iou", "--pred", tmp_path / "a.png", "--ref", tmp_path / "a.png",
                       "--csv", tmp_path / "r.csv")
    assert code == 0
    assert out.splitlines()[-1] == "Average\t1.0000"
    assert (tmp_path / "r.csv").read_text().splitlines()[0].startswith("id,Wall")


def test_unknown_flag_exits_one(capsys):
    code, _, err = run(capsys, "schedule", "--step", 0, "--warmup", 1, "--bogus")
    assert code == 1 and "unrecognized" in err


def test_missing_subcommand(capsys):
    assert run(capsys)[0] == 1


def test_invalid_value_exits_one(capsys):
    assert run(capsys, "schedule", "--step", -1, "--warmup", 10)[0] == 1


def test_eval_fixture_and_idempotent(capsys, tmp_path):
    a, b = tmp_path / "a", tmp_path / "b"
    code, out, _ = run(capsys, "eval", "--manifest", FIXTURE / "manifest.json", "--out-dir", a)
    assert code == 0 and out.startswith("5/5 items ok")
    run(capsys, "eval", "--manifest", FIXTURE / "manifest.json", "--out-dir", b)
    for name in ("items.csv", "summary.csv", "report.json"):
        assert (a / name).read_bytes() == (b / name).read_bytes()


def test_eval_empty_manifest_exits_one(capsys, tmp_path):
    (tmp_path / "m.json").write_text(json.dumps({"version": "1.0", "items": []}))
    code, _, err = run(capsys, "eval", "--manifest", tmp_path / "m.json", "--out-dir", tmp_path / "o")
    assert code == 1 and "no items" in err


def test_eval_missing_file_exits_two(capsys, tmp_path):
    d = tmp_path / "fx"
    shutil.copytree(FIXTURE, d)
    (d / "item2_pred.png").unlink()
    code, _, err = run(capsys, "eval", "--manifest", d / "manifest.json", "--out-dir", tmp_path / "o")
    assert code == 2 and "item2" in err


def latent_blob(tmp_path):
    io.write_latent(tmp_path / "z.bin", LatentGrid(np.random.default_rng(0).normal(size=(8, 8, 2))))
    return tmp_path / "z.bin"


def test_latent_mask_seed_flag_and_env(capsys, tmp_path, monkeypatch):
    z = latent_blob(tmp_path)
    run(capsys, "latent-mask", "--input", z, "--out", tmp_path / "a.bin", "--keep-prob", 0.5,
        "--seed", 9)
    monkeypatch.setenv("PANOBENCH_SEED", "9")
    run(capsys, "latent-mask", "--input", z, "--out", tmp_path / "b.bin", "--keep-prob", 0.5)
    monkeypatch.setenv("PANOBENCH_SEED", "10")
    run(capsys, "latent-mask", "--input", z, "--out", tmp_path / "c.bin", "--keep-prob", 0.5)
    # the flag wins over the environment
    run(capsys, "latent-mask", "--input", z, "--out", tmp_path / "d.bin", "--keep-prob", 0.5,
        "--seed", 9)
    a = (tmp_path / "a.bin").read_bytes()
    assert a == (tmp_path / "b.bin").read_bytes() == (tmp_path / "d.bin").read_bytes()
    assert a != (tmp_path / "c.bin").read_bytes()


def test_bad_env_seed(capsys, tmp_path, monkeypatch):
    monkeypatch.setenv("PANOBENCH_SEED", "abc")
    code, _, err = run(capsys, "latent-mask", "--input", latent_blob(tmp_path),
                       "--out", tmp_path / "o.bin", "--keep-prob", 0.5)
    assert code == 1 and "PANOBENCH_SEED" in err


def test_config_file_sets_defaults(capsys, tmp_path):
    cfg = tmp_path / "c.json"
    cfg.write_text(json.dumps({"schedule": {"warmup": 10}}))
    code, out, _ = run(capsys, "--config", cfg, "schedule", "--step", 5)
    assert code == 0 and out.strip() == "0.6 0.4"
    # explicit flag overrides the config block
    assert run(capsys, "--config", cfg, "schedule", "--step", 5, "--warmup", 5)[1].strip() == "0.2 0.8"


def test_unreadable_config(capsys, tmp_path):
    assert run(capsys, "--config", tmp_path / "none.json", "schedule", "--step", 0,
               "--warmup", 1)[0] == 1


def test_mask_elements_jsonl(capsys, tmp_path):
    rec = {"style": "Japandi", "room_type": "bedroom", "description": "a calm bedroom",
           "elements": [{"category": "Bed", "attributes": ["oak", "linen"]},
                        {"category": "Plants", "attributes": ["ceramic"]}]}
    (tmp_path / "in.jsonl").write_text(json.dumps(rec) + "\n" + json.dumps(rec) + "\n")
    for name in ("a", "b"):
        code, _, _ = run(capsys, "mask-elements", "--input", tmp_path / "in.jsonl",
                         "--out", tmp_path / f"{name}.jsonl", "--seed", 3)
        assert code == 0
    a = (tmp_path / "a.jsonl").read_text()
    assert a == (tmp_path / "b.jsonl").read_text()
    lines = [json.loads(x) for x in a.splitlines()]
    assert len(lines) == 2 and lines[0]["target"] == "a calm bedroom"
    assert lines[0]["inputs"]["elements"]["elements"][0]["category"] == "Bed"


def test_transfer(capsys, tmp_path):
    (tmp_path / "e.json").write_text(json.dumps(
        {"elements": [{"category": "Bed", "attributes": ["walnut"]}]}))
    code, out, _ = run(capsys, "transfer", "--input", tmp_path / "e.json",
                       "--place-categories", "Cabinet")
    assert code == 0
    assert json.loads(out)["elements"] == [{"category": "Cabinet", "attributes": ["walnut"]}]


def test_std_report(capsys, tmp_path):
    (tmp_path / "g.csv").write_text(
        "group_id,label,value\np,dpo,0\np,dpo,2\ng,nft,0.4\ng,nft,0.6\ng,nft,0.5\n")
    code, out, err = run(capsys, "std-report", "--input", tmp_path / "g.csv")
    assert code == 0
    assert out.splitlines()[0] == "group_id,label,n,mean,std"
    assert "flagged" in err


def test_report_expert(capsys, tmp_path):
    rows = ["model,sample_id,metric,value"]
    for sid, (a, s, p) in enumerate([(4, 4, 4), (2, 2, 2)]):
        rows += [f"m,{sid},aesthetic,{a}", f"m,{sid},spatial_consistency,{s}",
                 f"m,{sid},plausibility,{p}"]
    (tmp_path / "s.csv").write_text("\n".join(rows) + "\n")
    code, _, _ = run(capsys, "report", "--scores", tmp_path / "s.csv", "--out", tmp_path / "t.csv")
    assert code == 0
    lines = (tmp_path / "t.csv").read_text().splitlines()
    assert lines[1].split(",")[4] == "3.0000"


def test_project_and_fuse(capsys, tmp_path):
    pano = np.random.default_rng(0).uniform(0, 1, (32, 64, 3))
    io.write_image(tmp_path / "p.png", pano)
    code, _, _ = run(capsys, "project", "--panorama", tmp_path / "p.png", "--out", tmp_path / "v.png",
                     "--width", 16, "--height", 12)
    assert code == 0 and io.read_image(tmp_path / "v.png").shape == (12, 16, 3)

    v = np.random.default_rng(1).normal(size=(8, 16, 3))
    v /= np.linalg.norm(v, axis=-1, keepdims=True)
    io.write_normals(tmp_path / "n.png", NormalMap.from_vectors(v))
    io.write_class_raster(tmp_path / "i.png", ClassRaster(np.full((8, 16), 5), REG))
    code, _, _ = run(capsys, "fuse-control", "--normals", tmp_path / "n.png",
                     "--instances", tmp_path / "i.png", "--out-dir", tmp_path / "ctl")
    assert code == 0
    meta = json.loads((tmp_path / "ctl" / "control.json").read_text())
    assert meta["provenance"]["normal_source_id"] == "n.png"


def test_curate(capsys, tmp_path):
    rng = np.random.default_rng(0)
    lines = ["id,width,height,mean_luma,luma_std,aesthetic_score,embedding,expert_approved"]
    for i in range(12):
        np.save(tmp_path / f"e{i}.npy", rng.normal(size=4))
        lines.append(f"i{i},2048,1024,0.5,0.2,4,e{i}.npy,{'true' if i % 2 else 'false'}")
    (tmp_path / "items.csv").write_text("\n".join(lines) + "\n")
    for name in ("a", "b"):
        code, _, _ = run(capsys, "curate", "--items", tmp_path / "items.csv", "--out-dir",
                         tmp_path / name, "--budget", 6, "--k", 2, "--seed", 1)
        assert code == 0
    for s in (1, 2, 3):
        assert (tmp_path / "a" / f"stage{s}.json").read_bytes() == \
            (tmp_path / "b" / f"stage{s}.json").read_bytes()


def test_console_entry_point():
    exe = shutil.which("panobench")
    cmd = [exe] if exe else [sys.executable, "-m", "panobench.cli"]
    p = subprocess.run([*cmd, "schedule", "--step", "0", "--warmup", "5"],
                       capture_output=True, text=True)
    assert p.returncode == 0 and p.stdout.strip() == "1.0 0.0"
