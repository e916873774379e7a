"""Shared fixtures: the desk-scale training corpus and a cached full run.

The desk corpus is 200 two-class digit images. When LATENTCAVE_MNIST_DIR
points at real IDX files (train-images-idx3-ubyte / train-labels-idx1-ubyte)
the zeros and ones are taken from there; otherwise an equivalent corpus is
synthesized from jittered stroke drawings and pushed through the same IDX
encode/parse path, so the byte-level pipeline is exercised either way.
"""

import os
import struct
from pathlib import Path

import numpy as np
import pytest

from latentcave.dataset import build_drawn_dataset, parse_idx, write_idx
from latentcave.trainer import TrainConfig, train
from latentcave.vae import init_model

from digit_strokes import drawn_pair

DESK_SEED = 42
DESK_EPOCHS = 50


def _mnist_zero_one_bytes(mnist_dir: Path, per_class: int) -> tuple[bytes, bytes]:
    images = (mnist_dir / "train-images-idx3-ubyte").read_bytes()
    labels_raw = (mnist_dir / "train-labels-idx1-ubyte").read_bytes()
    count = struct.unpack(">I", images[4:8])[0]
    labels = np.frombuffer(labels_raw, dtype=np.uint8, count=count, offset=8)
    pixels = np.frombuffer(images, dtype=np.uint8, count=count * 784, offset=16)
    pixels = pixels.reshape(count, 784)
    keep = np.concatenate([
        np.flatnonzero(labels == 0)[:per_class],
        np.flatnonzero(labels == 1)[:per_class],
    ])
    body = pixels[keep]
    return struct.pack(">IIII", 0x803, len(keep), 28, 28) + body.tobytes(), \
        struct.pack(">II", 0x801, len(keep)) + labels[keep].tobytes()


@pytest.fixture(scope="session")
def desk_dataset():
    """200 images of the digits 0 and 1, loaded through the IDX parser."""
    mnist_dir = os.environ.get("LATENTCAVE_MNIST_DIR")
    if mnist_dir and (Path(mnist_dir) / "train-images-idx3-ubyte").exists():
        images_bytes, labels_bytes = _mnist_zero_one_bytes(Path(mnist_dir), 100)
        return parse_idx(images_bytes, labels_bytes, seed=DESK_SEED)
    zeros, ones = drawn_pair(100, seed=7)
    drawn = build_drawn_dataset(zeros, ones, 100, seed=DESK_SEED)
    images_bytes, labels_bytes = write_idx(drawn)
    return parse_idx(images_bytes, labels_bytes, provenance="drawn", seed=DESK_SEED)


@pytest.fixture(scope="session")
def desk_run(desk_dataset):
    """The 50-epoch seed-42 training run reused by trainer and acceptance tests."""
    model = init_model(hidden_dim=512, latent_dim=2, seed=DESK_SEED)
    cfg = TrainConfig(epochs=DESK_EPOCHS, batch_size=32, seed=DESK_SEED,
                      hidden_dim=512, latent_dim=2)
    report = train(model, desk_dataset, cfg)
    return model, report, desk_dataset
