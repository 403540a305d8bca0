import math
from pathlib import Path

import numpy as np
import pytest

from lfqtok.cli import build_parser, main
from lfqtok.codec import read_header, write_video
from lfqtok.lfq import LfqConfig
from lfqtok.selftest import tiny_config
from lfqtok.tokenizer import TokenizerModel, load_model, save_model

TINY_YAML = """\
steps: 2
warmup_steps: 1
batch_size: 1
clip_frames: 5
clip_height: 8
clip_width: 8
synthetic_clips: 4
prefetch: 0
log_every: 1
tokenizer.base_channels: 4
tokenizer.channel_multipliers: [1, 1]
tokenizer.spatial_strides: [2, 1]
tokenizer.temporal_strides: [1, 2]
tokenizer.norm_groups: 2
tokenizer.lfq.codebook_size: 16
"""

# ──────────────────────────────────────────────────────────────────────────────
# FIXTURES
# ──────────────────────────────────────────────────────────────────────────────


@pytest.fixture
def workspace(tmp_path: Path):
    ckpt = save_model(tmp_path / "tiny.lfqc", TokenizerModel(tiny_config()))
    video = np.random.default_rng(0).uniform(-1, 1, size=(5, 8, 8, 3))
    clip = write_video(tmp_path / "clip.lfqv", video)
    return tmp_path, ckpt, clip


def _values(out: str) -> dict:
    pairs = (line.split("=", 1) for line in out.strip().splitlines() if "=" in line)
    return {k: v for k, v in pairs}


# ──────────────────────────────────────────────────────────────────────────────
# PIPELINE
# ──────────────────────────────────────────────────────────────────────────────

def test_tokenize_detokenize_metrics(workspace, capsys):
    root, ckpt, clip = workspace
    stream, recon = root / "clip.lfqt", root / "recon.lfqv"

    assert main(["tokenize", "--ckpt", str(ckpt), "--in", str(clip), "--out", str(stream)]) == 0
    tok = _values(capsys.readouterr().out)
    assert (tok["latent_frames"], tok["latent_height"], tok["latent_width"]) == ("3", "4", "4")
    assert tok["dim"] == "4"
    assert int(tok["bytes"]) == stream.stat().st_size == 18 + 3 * 4 * 4 * 4 // 8

    assert main(["detokenize", "--ckpt", str(ckpt), "--in", str(stream), "--out", str(recon)]) == 0
    assert _values(capsys.readouterr().out) == {"frames": "5", "height": "8", "width": "8"}

    assert main(["metrics", "--ref", str(clip), "--test", str(recon)]) == 0
    quality = _values(capsys.readouterr().out)
    print(f"[DEBUG] untrained tiny model PSNR {quality['psnr']}")
    assert math.isfinite(float(quality["psnr"]))


def test_inspect_matches_header(workspace, capsys):
    root, ckpt, clip = workspace
    stream = root / "clip.lfqt"
    main(["tokenize", "--ckpt", str(ckpt), "--in", str(clip), "--out", str(stream)])
    capsys.readouterr()
    assert main(["inspect", "--in", str(stream), "--top", "3"]) == 0
    info = _values(capsys.readouterr().out)
    header = read_header(stream.read_bytes())
    for key, value in header.as_dict().items():
        assert info[key] == str(value)
    assert 1 <= int(info["distinct"]) <= 16
    assert len(info["top"].split(",")) <= 3


def test_single_frame_is_one_token_frame(workspace, capsys):
    root, ckpt, _ = workspace
    image = write_video(root / "image.lfqv", np.zeros((1, 8, 8, 3)))
    assert main(["tokenize", "--ckpt", str(ckpt), "--in", str(image), "--out", str(root / "image.lfqt")]) == 0
    assert _values(capsys.readouterr().out)["latent_frames"] == "1"


def test_tokenizing_twice_gives_identical_bytes(workspace):
    root, ckpt, clip = workspace
    for name in ("a.lfqt", "b.lfqt"):
        main(["tokenize", "--ckpt", str(ckpt), "--in", str(clip), "--out", str(root / name)])
    assert (root / "a.lfqt").read_bytes() == (root / "b.lfqt").read_bytes()


# ──────────────────────────────────────────────────────────────────────────────
# ERRORS
# ──────────────────────────────────────────────────────────────────────────────

def test_malformed_stream_reports_field(workspace, capsys):
    root, ckpt, _ = workspace
    bad = root / "bad.lfqt"
    bad.write_bytes(b"NOPE" + bytes(20))
    assert main(["detokenize", "--ckpt", str(ckpt), "--in", str(bad), "--out", str(root / "x.lfqv")]) == 1
    assert "error: magic" in capsys.readouterr().err


def test_stream_from_another_codebook_is_rejected(workspace, capsys):
    root, ckpt, clip = workspace
    other = save_model(root / "big.lfqc", TokenizerModel(tiny_config(lfq=LfqConfig(codebook_size=64))))
    stream = root / "big.lfqt"
    assert main(["tokenize", "--ckpt", str(other), "--in", str(clip), "--out", str(stream)]) == 0
    capsys.readouterr()
    assert main(["detokenize", "--ckpt", str(ckpt), "--in", str(stream), "--out", str(root / "x.lfqv")]) == 1
    assert "error: dim" in capsys.readouterr().err


def test_missing_input_file(workspace, capsys):
    root, ckpt, _ = workspace
    assert main(["tokenize", "--ckpt", str(ckpt), "--in", str(root / "none.lfqv"), "--out", str(root / "o")]) == 1
    assert "error:" in capsys.readouterr().err


def test_ema_needs_a_training_checkpoint(workspace, capsys):
    root, ckpt, clip = workspace
    assert main(["tokenize", "--ckpt", str(ckpt), "--in", str(clip), "--out", str(root / "o.lfqt"), "--ema"]) == 1
    assert "error: group" in capsys.readouterr().err


def test_train_needs_config_or_resume(tmp_path: Path, capsys):
    assert main(["train", "--out", str(tmp_path / "m.lfqc")]) == 1
    assert "--config or --resume" in capsys.readouterr().err


def test_unknown_command_exits():
    with pytest.raises(SystemExit):
        build_parser().parse_args(["compress"])


# ──────────────────────────────────────────────────────────────────────────────
# TRAIN / SELFTEST
# ──────────────────────────────────────────────────────────────────────────────

def test_train_writes_checkpoint_and_metrics(tmp_path: Path, capsys):
    config = tmp_path / "tiny.yaml"
    config.write_text(TINY_YAML, encoding="utf-8")
    out = tmp_path / "run" / "tiny.lfqc"
    assert main(["train", "--config", str(config), "--out", str(out)]) == 0
    values = _values(capsys.readouterr().out)
    assert values["steps"] == "2"
    metrics = Path(values["metrics"])
    assert metrics == out.with_suffix(".metrics.jsonl")
    assert len(metrics.read_text(encoding="utf-8").splitlines()) == 2
    assert load_model(out).config == tiny_config()
    # the EMA group is there for --ema
    assert load_model(out, "ema").config == tiny_config()


def _pipeline(config: Path, root: Path, clip: Path) -> dict:
    ckpt, stream, recon = root / "tiny.lfqc", root / "clip.lfqt", root / "recon.lfqv"
    assert main(["train", "--config", str(config), "--out", str(ckpt)]) == 0
    assert main(["tokenize", "--ckpt", str(ckpt), "--in", str(clip), "--out", str(stream)]) == 0
    assert main(["detokenize", "--ckpt", str(ckpt), "--in", str(stream), "--out", str(recon)]) == 0
    files = (ckpt, ckpt.with_suffix(".metrics.jsonl"), stream, recon)
    return {path.name: path.read_bytes() for path in files}


def test_train_tokenize_detokenize_is_byte_identical(tmp_path: Path, capsys):
    config = tmp_path / "tiny.yaml"
    config.write_text(TINY_YAML, encoding="utf-8")
    clip = write_video(tmp_path / "clip.lfqv", np.random.default_rng(5).uniform(-1, 1, size=(5, 8, 8, 3)))

    first = _pipeline(config, tmp_path / "a", clip)
    second = _pipeline(config, tmp_path / "b", clip)
    # rerunning into an existing directory must not grow the metrics log
    again = _pipeline(config, tmp_path / "a", clip)
    capsys.readouterr()
    for name, data in first.items():
        if second[name] != data or again[name] != data:
            pytest.fail(f"{name} differs between identical runs "
                        f"({len(data)} / {len(second[name])} / {len(again[name])} bytes)")


def test_selftest_subset(capsys):
    assert main(["selftest", "bijection", "bitstream"]) == 0
    out = capsys.readouterr().out
    assert "bijection=ok" in out
    assert "2/2 checks passed" in out


def test_selftest_reaches_blur_pooling(capsys):
    assert main(["selftest", "blur_dc"]) == 0
    assert "blur_dc=ok" in capsys.readouterr().out


def test_selftest_unknown_check_fails(capsys):
    assert main(["selftest", "nonsense"]) == 1
    assert "nonsense=FAIL" in capsys.readouterr().out


def test_full_selftest_passes(capsys):
    assert main(["selftest"]) == 0
    assert "FAIL" not in capsys.readouterr().out
