"""Operator command line: ingest data, train, interpolate, export, serve.

Flags mirror the notebook form-field names (digit_a / digit_b /
num_images_per_digit / num_images / show_gif_only) so docs stay aligned.
Every subcommand takes --json for machine-readable output; failures print a
reason to stderr and exit nonzero.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

import numpy as np

from . import dataset as ds_mod
from . import media as media_mod
from . import shadow as shadow_mod
from . import trainer as trainer_mod
from .service import ApiError, Store, create_app
from .vae import init_model


class CliError(RuntimeError):
    pass


def _emit(args, payload: dict, human: str) -> None:
    if args.json:
        print(json.dumps(payload))
    else:
        print(human)


def _store(args) -> Store:
    return Store(args.store)


def cmd_ingest_idx(args) -> int:
    images = Path(args.images).read_bytes()
    labels = Path(args.labels).read_bytes() if args.labels else None
    dataset = ds_mod.parse_idx(images, labels, seed=args.seed)
    _store(args).save_dataset(dataset)
    _emit(args, {"dataset_id": dataset.dataset_id, "size": len(dataset),
                 "train_size": int(dataset.train_idx.size),
                 "test_size": int(dataset.test_idx.size),
                 "warning": dataset.warning},
          f"dataset {dataset.dataset_id}: {len(dataset)} images "
          f"({dataset.train_idx.size} train / {dataset.test_idx.size} test)")
    return 0


def cmd_draw_import(args) -> int:
    raw = json.loads(Path(args.strokes).read_text())
    digit_a = [ds_mod.StrokeSet.from_dict(s) for s in raw["digit_a"]]
    digit_b = [ds_mod.StrokeSet.from_dict(s) for s in raw["digit_b"]]
    dataset = ds_mod.build_drawn_dataset(digit_a, digit_b,
                                         args.num_images_per_digit, seed=args.seed)
    _store(args).save_dataset(dataset)
    _emit(args, {"dataset_id": dataset.dataset_id, "size": len(dataset),
                 "warning": dataset.warning},
          f"dataset {dataset.dataset_id}: {len(dataset)} drawn images"
          + (f" (warning: {dataset.warning})" if dataset.warning else ""))
    return 0


def cmd_train(args) -> int:
    store = _store(args)
    dataset = store.load_dataset(args.dataset)
    raw_cfg = json.loads(Path(args.config).read_text()) if args.config else {}
    for key in ("epochs", "batch_size", "learning_rate", "seed",
                "hidden_dim", "latent_dim", "freeze_up_to"):
        value = getattr(args, key)
        if value is not None:
            raw_cfg[key] = value
    cfg = trainer_mod.TrainConfig.from_dict(raw_cfg)
    if args.base_model:
        model = store.load_model(args.base_model)
    else:
        model = init_model(hidden_dim=cfg.hidden_dim, latent_dim=cfg.latent_dim,
                           seed=cfg.seed)

    def progress(entry):
        if not args.json:
            print(entry.to_event_line())

    report = trainer_mod.train(model, dataset, cfg, progress=progress)
    model_id = store.save_model(model)
    _emit(args, {"model_id": model_id,
                 "epochs": [e.to_event() for e in report.epochs],
                 "wall_time_s": report.wall_time_s},
          f"model {model_id} after {len(report.epochs)} epochs")
    return 0


def _endpoint(store: Store, spec: str):
    kind, _, rest = spec.partition(":")
    if kind == "dataset":
        dataset_id, _, index = rest.partition(":")
        dataset = store.load_dataset(dataset_id)
        return dataset.images[int(index or 0)]
    if kind == "strokes":
        return ds_mod.rasterize(ds_mod.StrokeSet.from_dict(
            json.loads(Path(rest).read_text())))
    if kind == "pgm":
        return media_mod.read_pgm(Path(rest).read_bytes()).astype(np.float64).reshape(-1) / 255.0
    raise CliError(f"endpoint {spec!r} must be dataset:<id>:<index>, strokes:<file>, or pgm:<file>")


def cmd_interpolate(args) -> int:
    store = _store(args)
    model = store.load_model(args.model)
    spec = media_mod.InterpolationSpec(
        endpoint_a=_endpoint(store, args.endpoint_a),
        endpoint_b=_endpoint(store, args.endpoint_b),
        num_images=args.num_images,
        show_gif_only=args.show_gif_only,
        frame_delay_cs=args.delay_cs,
    )
    seq = media_mod.interpolate(model, spec)
    Path(args.out).write_bytes(media_mod.encode_gif(seq, delay_cs=args.delay_cs))
    frame_files = []
    if not spec.show_gif_only:
        frames_dir = Path(args.frames_dir or Path(args.out).with_suffix(""))
        frames_dir.mkdir(parents=True, exist_ok=True)
        for k, frame in enumerate(seq.frames):
            path = frames_dir / f"frame_{k:03d}.pgm"
            path.write_bytes(media_mod.write_pgm(frame))
            frame_files.append(str(path))
    _emit(args, {"out": args.out, "frames": len(seq), "frame_files": frame_files},
          f"wrote {len(seq)}-frame gif to {args.out}")
    return 0


def cmd_export_gif(args) -> int:
    paths = sorted(Path(args.frames_dir).glob("*.pgm"))
    if not paths:
        raise CliError(f"no .pgm frames in {args.frames_dir}")
    frames = [media_mod.read_pgm(p.read_bytes()) for p in paths]
    blob = media_mod.encode_gif(media_mod.FrameSequence(frames=frames),
                                delay_cs=args.delay_cs,
                                loop_forever=not args.no_loop)
    Path(args.out).write_bytes(blob)
    _emit(args, {"out": args.out, "frames": len(frames)},
          f"wrote {len(frames)}-frame gif to {args.out}")
    return 0


def cmd_level_check(args) -> int:
    level = shadow_mod.load_level(args.level)
    solution = shadow_mod.solve(level)
    solvable = solution is not None
    _emit(args, {"level": level.name, "solvable": solvable,
                 "cells": sorted(solution.cells) if solvable else None},
          f"{level.name}: {'solvable' if solvable else 'unsolvable'}")
    return 0 if solvable else 1


def cmd_serve(args) -> int:
    import uvicorn

    port = args.port or int(os.environ.get("LATENTCAVE_PORT", "8000"))
    app = create_app(args.store, max_workers=args.workers, ui_dir=args.ui)
    uvicorn.run(app, host=args.host, port=port, log_level="warning")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="latentcave")
    sub = parser.add_subparsers(dest="command", required=True)

    def add(name, fn, **kwargs):
        p = sub.add_parser(name, **kwargs)
        p.set_defaults(fn=fn)
        p.add_argument("--json", action="store_true", help="machine-readable output")
        return p

    p = add("ingest-idx", cmd_ingest_idx, help="import IDX image/label files")
    p.add_argument("--images", required=True)
    p.add_argument("--labels")
    p.add_argument("--store", required=True)
    p.add_argument("--seed", type=int, default=0)

    p = add("draw-import", cmd_draw_import, help="import drawn strokes JSON")
    p.add_argument("--strokes", required=True,
                   help="JSON file with digit_a / digit_b stroke-set lists")
    p.add_argument("--num-images-per-digit", type=int, required=True)
    p.add_argument("--store", required=True)
    p.add_argument("--seed", type=int, default=0)

    p = add("train", cmd_train, help="train a model on a stored dataset")
    p.add_argument("--dataset", required=True)
    p.add_argument("--store", required=True)
    p.add_argument("--config", help="JSON file with TrainConfig fields")
    p.add_argument("--epochs", type=int)
    p.add_argument("--batch-size", type=int, dest="batch_size")
    p.add_argument("--learning-rate", type=float, dest="learning_rate")
    p.add_argument("--seed", type=int)
    p.add_argument("--hidden-dim", type=int, dest="hidden_dim")
    p.add_argument("--latent-dim", type=int, dest="latent_dim")
    p.add_argument("--freeze-up-to", type=int, dest="freeze_up_to")
    p.add_argument("--base-model", dest="base_model")

    p = add("interpolate", cmd_interpolate, help="render an interpolation gif")
    p.add_argument("--model", required=True)
    p.add_argument("--store", required=True)
    p.add_argument("--endpoint-a", required=True, dest="endpoint_a",
                   help="dataset:<id>:<index> | strokes:<file> | pgm:<file>")
    p.add_argument("--endpoint-b", required=True, dest="endpoint_b")
    p.add_argument("--num-images", type=int, default=10, dest="num_images")
    p.add_argument("--show-gif-only", action=argparse.BooleanOptionalAction,
                   default=True, dest="show_gif_only")
    p.add_argument("--frames-dir", dest="frames_dir")
    p.add_argument("--delay-cs", type=int, default=media_mod.DEFAULT_DELAY_CS,
                   dest="delay_cs")
    p.add_argument("--out", required=True)

    p = add("export-gif", cmd_export_gif, help="re-encode stored PGM frames as a gif")
    p.add_argument("--frames-dir", required=True, dest="frames_dir")
    p.add_argument("--out", required=True)
    p.add_argument("--delay-cs", type=int, default=media_mod.DEFAULT_DELAY_CS,
                   dest="delay_cs")
    p.add_argument("--no-loop", action="store_true")

    p = add("level-check", cmd_level_check, help="run the solver over a level file")
    p.add_argument("level")

    p = add("serve", cmd_serve, help="run the HTTP service")
    p.add_argument("--store", required=True)
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int)
    p.add_argument("--workers", type=int, default=2)
    p.add_argument("--ui", help="directory with the built web UI to serve at /")

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.fn(args)
    except (ApiError, CliError, OSError, ValueError, RuntimeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
