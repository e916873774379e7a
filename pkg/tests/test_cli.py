import io
import json
import struct

import numpy as np
import pytest
from PIL import Image

from latentcave.cli import main
from latentcave.shadow import shipped_levels_dir

from digit_strokes import drawn_pair


@pytest.fixture()
def store(tmp_path):
    return str(tmp_path / "store")


def run(capsys, *argv):
    code = main(list(argv))
    captured = capsys.readouterr()
    return code, captured.out, captured.err


def strokes_file(tmp_path, n=5, seed=0):
    zeros, ones = drawn_pair(n, seed=seed)
    path = tmp_path / "strokes.json"
    path.write_text(json.dumps({
        "digit_a": [s.to_dict() for s in zeros],
        "digit_b": [s.to_dict() for s in ones],
    }))
    return str(path)


def import_dataset(capsys, tmp_path, store, n=5):
    code, out, _ = run(capsys, "draw-import", "--strokes", strokes_file(tmp_path, n),
                       "--num-images-per-digit", str(n), "--store", store, "--json")
    assert code == 0
    return json.loads(out)["dataset_id"]


def train_small(capsys, store, dataset_id, epochs=2):
    code, out, _ = run(capsys, "train", "--dataset", dataset_id, "--store", store,
                       "--epochs", str(epochs), "--batch-size", "4",
                       "--hidden-dim", "16", "--seed", "1", "--json")
    assert code == 0
    return json.loads(out)["model_id"]


def test_ingest_idx_roundtrip(capsys, tmp_path, store):
    blob = struct.pack(">IIII", 0x803, 2, 28, 28) + bytes(2 * 784)
    idx = tmp_path / "imgs.idx"
    idx.write_bytes(blob)
    code, out, _ = run(capsys, "ingest-idx", "--images", str(idx), "--store", store,
                       "--json")
    assert code == 0
    assert json.loads(out)["size"] == 2


def test_ingest_bad_magic_fails_cleanly(capsys, tmp_path, store):
    idx = tmp_path / "bad.idx"
    idx.write_bytes(struct.pack(">IIII", 0, 1, 28, 28) + bytes(784))
    code, out, err = run(capsys, "ingest-idx", "--images", str(idx), "--store", store)
    assert code == 1
    assert "bad_magic" in err


def test_draw_import_and_train_and_interpolate(capsys, tmp_path, store):
    dataset_id = import_dataset(capsys, tmp_path, store)
    model_id = train_small(capsys, store, dataset_id, epochs=2)

    out_gif = tmp_path / "interp.gif"
    code, out, _ = run(capsys, "interpolate", "--model", model_id, "--store", store,
                       "--endpoint-a", f"dataset:{dataset_id}:0",
                       "--endpoint-b", f"dataset:{dataset_id}:5",
                       "--num-images", "10", "--out", str(out_gif), "--json")
    assert code == 0
    assert json.loads(out)["frames"] == 10
    img = Image.open(io.BytesIO(out_gif.read_bytes()))
    assert img.n_frames == 10
    assert img.size == (28, 28)


def test_train_zero_epochs_keeps_checkpoint(capsys, tmp_path, store):
    dataset_id = import_dataset(capsys, tmp_path, store)
    base = train_small(capsys, store, dataset_id, epochs=1)
    code, out, _ = run(capsys, "train", "--dataset", dataset_id, "--store", store,
                       "--epochs", "0", "--base-model", base, "--json")
    assert code == 0
    result = json.loads(out)
    assert result["model_id"] == base  # content-addressed: unchanged weights
    assert result["epochs"] == []


def test_interpolate_frames_dir_and_export_gif(capsys, tmp_path, store):
    dataset_id = import_dataset(capsys, tmp_path, store)
    model_id = train_small(capsys, store, dataset_id, epochs=1)
    frames_dir = tmp_path / "frames"
    out_gif = tmp_path / "a.gif"
    code, out, _ = run(capsys, "interpolate", "--model", model_id, "--store", store,
                       "--endpoint-a", f"dataset:{dataset_id}:0",
                       "--endpoint-b", f"dataset:{dataset_id}:5",
                       "--num-images", "4", "--no-show-gif-only",
                       "--frames-dir", str(frames_dir),
                       "--out", str(out_gif), "--json")
    assert code == 0
    assert len(json.loads(out)["frame_files"]) == 4

    out2 = tmp_path / "b.gif"
    code, out, _ = run(capsys, "export-gif", "--frames-dir", str(frames_dir),
                       "--out", str(out2), "--delay-cs", "10", "--json")
    assert code == 0
    # same frames, same delay, same encoder: identical bytes
    assert out2.read_bytes() == out_gif.read_bytes()


def test_level_check_shipped_levels(capsys):
    for name in ("easy1", "hard1"):
        path = shipped_levels_dir() / f"{name}.json"
        code, out, _ = run(capsys, "level-check", str(path))
        assert code == 0
        assert "solvable" in out


def test_level_check_unsolvable_exits_nonzero(capsys, tmp_path):
    level = {
        "name": "wide", "variant": "AE", "cube_budget": 6,
        "targets": [["111111"]],
        "initial_cells": [[x - 2, 0, 0] for x in range(5)] + [[0, 1, 0]],
    }
    path = tmp_path / "wide.json"
    path.write_text(json.dumps(level))
    code, out, _ = run(capsys, "level-check", str(path), "--json")
    assert code == 1
    assert json.loads(out)["solvable"] is False


def test_unknown_flag_rejected(capsys):
    with pytest.raises(SystemExit) as exc:
        main(["level-check", "x.json", "--frobnicate"])
    assert exc.value.code == 2


def test_missing_model_fails_cleanly(capsys, tmp_path, store):
    code, _, err = run(capsys, "interpolate", "--model", "nope", "--store", store,
                       "--endpoint-a", "dataset:d:0", "--endpoint-b", "dataset:d:1",
                       "--out", str(tmp_path / "x.gif"))
    assert code == 1
    assert "no model" in err


def test_strokes_endpoint_and_pgm_endpoint(capsys, tmp_path, store):
    dataset_id = import_dataset(capsys, tmp_path, store)
    model_id = train_small(capsys, store, dataset_id, epochs=1)
    zeros, _ = drawn_pair(1, seed=9)
    sfile = tmp_path / "one_strokeset.json"
    sfile.write_text(json.dumps(zeros[0].to_dict()))

    from latentcave.dataset import rasterize
    from latentcave.media import quantize, write_pgm
    pfile = tmp_path / "digit.pgm"
    pfile.write_bytes(write_pgm(quantize(rasterize(zeros[0]))))

    out_gif = tmp_path / "mix.gif"
    code, out, _ = run(capsys, "interpolate", "--model", model_id, "--store", store,
                       "--endpoint-a", f"strokes:{sfile}",
                       "--endpoint-b", f"pgm:{pfile}",
                       "--num-images", "3", "--out", str(out_gif), "--json")
    assert code == 0
    assert json.loads(out)["frames"] == 3
