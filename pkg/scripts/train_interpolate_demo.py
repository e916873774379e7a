"""End-to-end desk demo: draw two digits, train a small VAE, emit a GIF.

Writes out/demo.gif (and the individual PGM frames) in the repository root.

    python scripts/train_interpolate_demo.py [--epochs 50] [--seed 42]
"""

import argparse
from pathlib import Path

import numpy as np

from latentcave.dataset import StrokeSet, build_drawn_dataset
from latentcave.media import InterpolationSpec, encode_gif, interpolate, write_pgm
from latentcave.trainer import TrainConfig, train
from latentcave.vae import init_model

OUT = Path(__file__).resolve().parent.parent / "out"


def jittered_zero(rng, canvas=280):
    cx, cy = canvas / 2 + rng.uniform(-8, 8), canvas / 2 + rng.uniform(-8, 8)
    theta = np.linspace(0, 2 * np.pi, 24)
    pts = [(float(np.clip(cx + 55 * np.cos(t) + rng.uniform(-4, 4), 0, canvas)),
            float(np.clip(cy + 78 * np.sin(t) + rng.uniform(-4, 4), 0, canvas)))
           for t in theta]
    return StrokeSet(strokes=[pts])


def jittered_one(rng, canvas=280):
    x = canvas / 2 + rng.uniform(-12, 12)
    pts = [(float(np.clip(x + rng.uniform(-3, 3), 0, canvas)),
            float(canvas * 0.2 + canvas * 0.6 * i / 9)) for i in range(10)]
    return StrokeSet(strokes=[pts])


def main():
    parser = argparse.ArgumentParser()
    parser.add_argument("--epochs", type=int, default=50)
    parser.add_argument("--num-images-per-digit", type=int, default=20)
    parser.add_argument("--num-images", type=int, default=12)
    parser.add_argument("--seed", type=int, default=42)
    args = parser.parse_args()

    rng = np.random.default_rng(args.seed)
    zeros = [jittered_zero(rng) for _ in range(args.num_images_per_digit)]
    ones = [jittered_one(rng) for _ in range(args.num_images_per_digit)]
    dataset = build_drawn_dataset(zeros, ones, args.num_images_per_digit,
                                  seed=args.seed)
    print(f"dataset: {len(dataset)} images "
          f"({dataset.train_idx.size} train / {dataset.test_idx.size} test)")

    cfg = TrainConfig(epochs=args.epochs, batch_size=8, hidden_dim=256,
                      latent_dim=2, seed=args.seed)
    model = init_model(cfg.hidden_dim, cfg.latent_dim, seed=cfg.seed)
    report = train(model, dataset, cfg,
                   progress=lambda e: print(e.to_event_line()))
    print(f"trained model {report.model_id} in {report.wall_time_s:.1f}s")

    seq = interpolate(model, InterpolationSpec(
        endpoint_a=dataset.images[0],
        endpoint_b=dataset.images[args.num_images_per_digit],
        num_images=args.num_images))
    OUT.mkdir(exist_ok=True)
    (OUT / "demo.gif").write_bytes(encode_gif(seq))
    for k, frame in enumerate(seq.frames):
        (OUT / f"demo_{k:03d}.pgm").write_bytes(write_pgm(frame))
    print(f"wrote {OUT / 'demo.gif'} ({len(seq)} frames) and the PGM frames")


if __name__ == "__main__":
    main()
