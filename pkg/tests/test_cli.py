import json

import numpy as np
import pytest

from relightkit.cli import main
from relightkit.io import read_image_pfm, read_png, write_env, write_image_pfm
from relightkit.radiance import LinearImage
from relightkit.synthgen import make_env


SCENE = {
    "width": 32,
    "height": 32,
    "spheres": [{"center": [16, 16], "depth": 0.0, "radius": 12,
                 "albedo": [0.8, 0.5, 0.3], "specular": 0.2}],
}


@pytest.fixture(scope="module")
def workdir(tmp_path_factory):
    """One synthetic capture stack plus env maps shared by the CLI tests."""
    root = tmp_path_factory.mktemp("cli")
    (root / "scene.json").write_text(json.dumps(SCENE))
    rc = main(["synthgen", "--spec", str(root / "scene.json"),
               "--lights", "64", "--out", str(root / "stack")])
    assert rc == 0
    write_env(root / "sun.hdr",
              make_env("sun_sky", height=16, sun_direction=(0.4, 0.3, 0.866),
                       sun_value=5.0, sky_value=0.4))
    write_env(root / "flat.hdr", make_env("constant", height=16, value=0.8))
    return root


def test_synthgen_outputs(workdir):
    manifest = json.loads((workdir / "stack" / "manifest.json").read_text())
    assert len(manifest["lights"]) == 64
    assert (workdir / "stack" / "gt_normals.pfm").exists()
    assert (workdir / "stack" / "gt_albedo.pfm").exists()


def test_prefilter_command(workdir, tmp_path):
    rc = main(["prefilter", "--env", str(workdir / "sun.hdr"),
               "--exponents", "1,16", "--out", str(tmp_path / "pf")])
    assert rc == 0
    meta = json.loads((tmp_path / "pf" / "meta.json").read_text())
    assert meta["exponents"] == [1.0, 16.0]
    assert (tmp_path / "pf" / "diffuse.pfm").exists()
    assert (tmp_path / "pf" / "specular_0016.pfm").exists()


def test_relight_pfm_and_png(workdir, tmp_path):
    stack = str(workdir / "stack" / "manifest.json")
    rc = main(["relight", "--olat", stack, "--env", str(workdir / "flat.hdr"),
               "--out", str(tmp_path / "out.pfm")])
    assert rc == 0
    linear = read_image_pfm(tmp_path / "out.pfm")
    assert linear.data.max() > 1.0  # linear radiance, not display values
    rc = main(["relight", "--olat", stack, "--env", str(workdir / "sun.hdr"),
               "--yaw", "0.5", "--out", str(tmp_path / "out.png")])
    assert rc == 0
    disp = read_png(tmp_path / "out.png")
    assert disp.data.max() <= 1.0
    rc = main(["relight", "--olat", stack, "--env", str(workdir / "sun.hdr"),
               "--out", str(tmp_path / "out.bmp")])
    assert rc == 2


def test_olat_fit_command(workdir, tmp_path, capsys):
    rc = main(["olat-fit", "--olat", str(workdir / "stack" / "manifest.json"),
               "--out-normals", str(tmp_path / "n.pfm"),
               "--out-albedo", str(tmp_path / "a.pfm")])
    assert rc == 0
    gt = read_image_pfm(workdir / "stack" / "gt_albedo.pfm")
    fit = read_image_pfm(tmp_path / "a.pfm")
    mask = read_image_pfm(workdir / "stack" / "mask.pfm")
    core = mask.data[:, :, 0] > 0.999 if mask.data.ndim == 3 else mask.data > 0.999
    assert np.median(np.abs(fit.data[core] - gt.data[core])) < 0.02
    assert "valid fraction" in capsys.readouterr().out


def test_augment_single_and_pair(workdir, tmp_path):
    raw = workdir / "raw.pfm"
    rng = np.random.default_rng(0)
    write_image_pfm(raw, LinearImage(rng.uniform(0, 1, (24, 24, 3))
                                     .astype(np.float32)))
    rc = main(["augment", "--in", str(raw), "--seed", "3",
               "--out", str(tmp_path / "deg.png")])
    assert rc == 0
    record = json.loads((tmp_path / "deg.json").read_text())
    assert set(record["stages"]) == {"glare", "noise", "blur"}
    # same seed, same bytes
    rc = main(["augment", "--in", str(raw), "--seed", "3",
               "--out", str(tmp_path / "deg2.png")])
    assert (tmp_path / "deg.png").read_bytes() == (tmp_path / "deg2.png").read_bytes()

    rc = main(["augment", "--in", str(raw), "--seed", "5", "--pair",
               "--out", str(tmp_path / "pair.png")])
    assert rc == 0
    assert (tmp_path / "pair_clean.png").exists()
    assert (tmp_path / "pair_degraded.png").exists()
    rec = json.loads((tmp_path / "pair.json").read_text())
    assert "raw_seed" in rec


def test_consist_command(workdir, capsys):
    stack = str(workdir / "stack" / "manifest.json")
    # mask: reuse a single-channel render of the stored stack mask
    rc = main(["consist",
               "--relighter", f"builtin:{stack}",
               "--albedo", f"builtin:{workdir / 'stack' / 'gt_albedo.pfm'}",
               "--image", str(workdir / "stack" / "gt_albedo.pfm"),
               "--envs", f"{workdir / 'sun.hdr'},{workdir / 'flat.hdr'}",
               "--mask", str(workdir / "stack" / "mask.pfm")])
    assert rc == 0
    out = json.loads(capsys.readouterr().out)
    assert out["l_env"] == 0.0  # oracle albedo cannot drift
    assert out["l_consist"] == 25.0 * out["l_env"] + 500.0 * out["l_amb"]
    assert out["amb_probe"] == {"gain": 1.5, "contrast": 1.2}


def test_consist_rejects_bad_envs_arg(workdir, capsys):
    rc = main(["consist", "--relighter", "builtin:x", "--albedo", "builtin",
               "--image", "x.pfm", "--envs", "only_one.hdr", "--mask", "m.pfm"])
    assert rc == 2


def test_metrics_command(workdir, tmp_path, capsys):
    stack = str(workdir / "stack" / "manifest.json")
    main(["relight", "--olat", stack, "--env", str(workdir / "sun.hdr"),
          "--out", str(tmp_path / "a.pfm")])
    main(["relight", "--olat", stack, "--env", str(workdir / "sun.hdr"),
          "--out", str(tmp_path / "a.png")])
    capsys.readouterr()
    rc = main(["metrics", "--a", str(tmp_path / "a.pfm"),
               "--b", str(tmp_path / "a.pfm"),
               "--mask", str(workdir / "stack" / "mask.pfm"), "--json"])
    assert rc == 0
    rep = json.loads(capsys.readouterr().out)
    assert rep["mse"] == 0.0 and rep["psnr"] == "inf" and rep["ssim"] == 1.0
    # the png went through 8-bit quantization; scores stay near-perfect
    rc = main(["metrics", "--a", str(tmp_path / "a.pfm"),
               "--b", str(tmp_path / "a.png"),
               "--mask", str(workdir / "stack" / "mask.pfm"), "--json"])
    rep = json.loads(capsys.readouterr().out)
    assert rep["psnr"] > 45.0 and rep["ssim"] > 0.99


def test_route_command(workdir, tmp_path, capsys):
    entries = [{"id": f"{tag}-{i}", "tag": tag, "files": {}}
               for tag in ("curated", "video", "olat", "residual")
               for i in range(30)]
    (tmp_path / "manifest.json").write_text(json.dumps({"entries": entries}))
    (tmp_path / "plan.json").write_text(json.dumps(
        {"batch_size": 20, "num_batches": 2}))
    rc = main(["route", "--manifest", str(tmp_path / "manifest.json"),
               "--plan", str(tmp_path / "plan.json"), "--seed", "11"])
    assert rc == 0
    report = json.loads(capsys.readouterr().out)
    assert len(report["batches"]) == 2
    assert len(report["batches"][0]) == 20
    tags = [r["tag"] for r in report["batches"][0]]
    assert tags.count("curated") == 12


def test_bench_command(capsys):
    rc = main(["bench", "--op", "noop", "--res", "8", "--iters", "5",
               "--warmup", "1"])
    assert rc == 0
    out = capsys.readouterr().out
    assert "noop" in out and "median" in out
    with pytest.raises(SystemExit):
        main(["bench", "--op", "mystery", "--iters", "1", "--warmup", "0"])
