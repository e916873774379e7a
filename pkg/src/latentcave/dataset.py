"""Digit datasets: IDX ingestion, stroke rasterization, splits, persistence.

Drawn digits are normalized the same way the classic handwritten corpus is:
ink is cropped, scaled to fit a 20x20 box with a plain box filter, and placed
in the 28x28 frame with the ink's center of mass moved to the middle. That
keeps user drawings and file-loaded digits in one distribution. Pixel values
are quantized to the byte grid (k/255) so every dataset round-trips through
the IDX container bit-exactly.
"""

from __future__ import annotations

import hashlib
import json
import struct
from dataclasses import dataclass, field
from datetime import datetime, timezone
from pathlib import Path
from typing import Optional

import numpy as np

IDX_IMAGES_MAGIC = 0x00000803
IDX_LABELS_MAGIC = 0x00000801
FRAME = 28
CONTENT = 20  # ink box inside the frame
DEFAULT_CANVAS = 280
DEFAULT_PEN_WIDTH = 18.0
TEST_FRACTION = 0.2


class IdxParseError(ValueError):
    """IDX payload rejected; reason is one of bad_magic / truncated / count_mismatch."""

    def __init__(self, reason: str, detail: str):
        super().__init__(f"{reason}: {detail}")
        self.reason = reason


class EmptyDrawingError(ValueError):
    """A stroke set with no ink cannot become a digit."""


class DatasetConfigError(ValueError):
    """Inconsistent arguments when assembling a dataset."""


@dataclass
class StrokeSet:
    """Freehand polylines on a square canvas, drawn with a round pen."""

    strokes: list
    canvas_size: int = DEFAULT_CANVAS
    pen_width: float = DEFAULT_PEN_WIDTH

    def __post_init__(self):
        if self.canvas_size <= 0:
            raise DatasetConfigError("canvas_size must be positive")
        if self.pen_width <= 0:
            raise DatasetConfigError("pen_width must be positive")
        for stroke in self.strokes:
            if len(stroke) < 1:
                raise DatasetConfigError("each stroke needs at least one point")
            for x, y in stroke:
                if not (0 <= x <= self.canvas_size and 0 <= y <= self.canvas_size):
                    raise DatasetConfigError(
                        f"point ({x}, {y}) outside canvas of size {self.canvas_size}"
                    )

    def to_dict(self) -> dict:
        return {
            "canvas_size": self.canvas_size,
            "pen_width": self.pen_width,
            "strokes": [[[float(x), float(y)] for x, y in s] for s in self.strokes],
        }

    @classmethod
    def from_dict(cls, raw: dict) -> "StrokeSet":
        return cls(
            strokes=[[(float(x), float(y)) for x, y in s] for s in raw["strokes"]],
            canvas_size=int(raw.get("canvas_size", DEFAULT_CANVAS)),
            pen_width=float(raw.get("pen_width", DEFAULT_PEN_WIDTH)),
        )


@dataclass
class DigitDataset:
    images: np.ndarray                 # (N, 784) float64 in [0, 1]
    labels: Optional[np.ndarray]       # (N,) ints or None
    train_idx: np.ndarray
    test_idx: np.ndarray
    provenance: str
    warning: Optional[str] = None
    dataset_id: str = field(default="", compare=False)

    def __post_init__(self):
        self.images = np.ascontiguousarray(self.images, dtype=np.float64)
        if self.images.ndim != 2 or self.images.shape[1] != FRAME * FRAME:
            raise DatasetConfigError(f"images must be (N, 784), got {self.images.shape}")
        if np.any(self.images < 0) or np.any(self.images > 1):
            raise DatasetConfigError("image values must lie in [0, 1]")
        combined = np.concatenate([self.train_idx, self.test_idx])
        if (len(np.unique(combined)) != len(combined)
                or sorted(combined.tolist()) != list(range(len(self.images)))):
            raise DatasetConfigError("split must be a disjoint cover of all indices")
        if self.labels is not None and len(self.labels) != len(self.images):
            raise IdxParseError(
                "count_mismatch",
                f"{len(self.images)} images vs {len(self.labels)} labels",
            )
        if not self.dataset_id:
            self.dataset_id = hashlib.sha256(
                np.round(self.images * 255).astype(np.uint8).tobytes()
            ).hexdigest()[:12]

    def __len__(self) -> int:
        return self.images.shape[0]

    def train_images(self) -> np.ndarray:
        return self.images[self.train_idx]

    def test_images(self) -> np.ndarray:
        return self.images[self.test_idx]


# --- IDX container ----------------------------------------------------------

def _read_u32s(buf: bytes, offset: int, n: int, what: str) -> tuple:
    end = offset + 4 * n
    if len(buf) < end:
        raise IdxParseError("truncated", f"{what} header ends early")
    return struct.unpack(f">{n}I", buf[offset:end])


def parse_idx(images_bytes: bytes, labels_bytes: Optional[bytes] = None,
              provenance: str = "mnist", seed: int = 0) -> DigitDataset:
    """Decode big-endian IDX image (and optional label) payloads.

    Pixels are scaled byte/255; the train/test split is a seeded shuffle with
    the trailing fifth held out.
    """
    (magic,) = _read_u32s(images_bytes, 0, 1, "image")
    if magic != IDX_IMAGES_MAGIC:
        raise IdxParseError("bad_magic", f"image magic 0x{magic:08x}")
    count, rows, cols = _read_u32s(images_bytes, 4, 3, "image")
    if rows != FRAME or cols != FRAME:
        raise IdxParseError("bad_magic", f"expected 28x28 images, got {rows}x{cols}")
    need = 16 + count * rows * cols
    if len(images_bytes) < need:
        raise IdxParseError("truncated", f"image payload {len(images_bytes)} < {need}")
    pixels = np.frombuffer(images_bytes, dtype=np.uint8, count=count * rows * cols,
                           offset=16)
    images = pixels.reshape(count, rows * cols).astype(np.float64) / 255.0

    labels = None
    if labels_bytes is not None:
        (lmagic,) = _read_u32s(labels_bytes, 0, 1, "label")
        if lmagic != IDX_LABELS_MAGIC:
            raise IdxParseError("bad_magic", f"label magic 0x{lmagic:08x}")
        (lcount,) = _read_u32s(labels_bytes, 4, 1, "label")
        if lcount != count:
            raise IdxParseError("count_mismatch", f"{count} images vs {lcount} labels")
        if len(labels_bytes) < 8 + lcount:
            raise IdxParseError("truncated", "label payload ends early")
        labels = np.frombuffer(labels_bytes, dtype=np.uint8, count=lcount,
                               offset=8).astype(np.int64)

    train_idx, test_idx, warning = _split(count, labels, seed)
    return DigitDataset(images=images, labels=labels, train_idx=train_idx,
                        test_idx=test_idx, provenance=provenance, warning=warning)


def write_idx(dataset: DigitDataset) -> tuple[bytes, Optional[bytes]]:
    """Encode back to IDX, quantizing pixels to bytes."""
    count = len(dataset)
    pixels = np.round(dataset.images * 255).astype(np.uint8)
    images_bytes = struct.pack(">IIII", IDX_IMAGES_MAGIC, count, FRAME, FRAME) + pixels.tobytes()
    labels_bytes = None
    if dataset.labels is not None:
        labels_bytes = struct.pack(">II", IDX_LABELS_MAGIC, count) + \
            dataset.labels.astype(np.uint8).tobytes()
    return images_bytes, labels_bytes


def _split(count: int, labels: Optional[np.ndarray], seed: int):
    """Seeded shuffle; the trailing floor(20%) of each stratum is held out.

    Strata with fewer than 5 items contribute nothing to the test split; if
    that leaves the test side empty a warning is attached instead of failing.
    """
    rng = np.random.default_rng(seed)
    train_parts, test_parts = [], []
    groups = [np.arange(count)] if labels is None else [
        np.flatnonzero(labels == v) for v in np.unique(labels)
    ]
    for idx in groups:
        idx = idx[rng.permutation(idx.size)]
        n_test = int(idx.size * TEST_FRACTION)
        train_parts.append(idx[: idx.size - n_test])
        test_parts.append(idx[idx.size - n_test:])
    train_idx = np.sort(np.concatenate(train_parts))
    test_idx = np.sort(np.concatenate(test_parts)) if any(p.size for p in test_parts) \
        else np.array([], dtype=np.int64)
    warning = None
    if test_idx.size == 0:
        warning = "test split is empty (fewer than 5 items per label); all items train"
    return train_idx.astype(np.int64), test_idx.astype(np.int64), warning


# --- rasterization ----------------------------------------------------------

def _render_ink(strokes: StrokeSet) -> np.ndarray:
    """Binary ink mask at canvas resolution: pixel centers within pen radius
    of any stroke segment (single points stamp a dot)."""
    size = strokes.canvas_size
    radius = strokes.pen_width / 2.0
    ys, xs = np.mgrid[0:size, 0:size]
    centers = np.stack([xs + 0.5, ys + 0.5], axis=-1).reshape(-1, 2)
    ink = np.zeros(size * size, dtype=bool)
    for stroke in strokes.strokes:
        pts = np.asarray(stroke, dtype=np.float64)
        if len(pts) == 1:
            seg_starts, seg_ends = pts, pts
        else:
            seg_starts, seg_ends = pts[:-1], pts[1:]
        for p, q in zip(seg_starts, seg_ends):
            d = q - p
            denom = float(d @ d)
            rel = centers - p
            t = np.clip((rel @ d) / denom, 0.0, 1.0) if denom > 0 else 0.0
            nearest = p + np.atleast_1d(t)[:, None] * d
            dist2 = np.sum((centers - nearest) ** 2, axis=1)
            ink |= dist2 <= radius * radius
    return ink.reshape(size, size).astype(np.float64)


def _box_filter_resize(img: np.ndarray, out_h: int, out_w: int) -> np.ndarray:
    """Exact area-weighted box filter via interval-overlap weight matrices."""
    def weights(n_out, n_in):
        scale = n_in / n_out
        w = np.zeros((n_out, n_in))
        for i in range(n_out):
            lo, hi = i * scale, (i + 1) * scale
            j0, j1 = int(np.floor(lo)), int(np.ceil(hi))
            for j in range(j0, min(j1, n_in)):
                w[i, j] = min(hi, j + 1) - max(lo, j)
            w[i] /= scale
        return w
    return weights(out_h, img.shape[0]) @ img @ weights(out_w, img.shape[1]).T


def rasterize(strokes: StrokeSet) -> np.ndarray:
    """Strokes -> flat 28x28 digit on the byte grid, ink mass centered."""
    if not strokes.strokes:
        raise EmptyDrawingError("no strokes to rasterize")
    ink = _render_ink(strokes)
    rows = np.flatnonzero(ink.any(axis=1))
    cols = np.flatnonzero(ink.any(axis=0))
    if rows.size == 0:
        raise EmptyDrawingError("strokes left no ink on the canvas")
    margin = 2
    r0, r1 = max(rows[0] - margin, 0), min(rows[-1] + margin + 1, ink.shape[0])
    c0, c1 = max(cols[0] - margin, 0), min(cols[-1] + margin + 1, ink.shape[1])
    crop = ink[r0:r1, c0:c1]

    h, w = crop.shape
    scale = min(1.0, CONTENT / max(h, w))
    out_h = max(1, min(CONTENT, round(h * scale)))
    out_w = max(1, min(CONTENT, round(w * scale)))
    small = _box_filter_resize(crop, out_h, out_w)

    frame = np.zeros((FRAME, FRAME))
    mass = small.sum()
    ys, xs = np.mgrid[0:out_h, 0:out_w]
    com_r = float((small * ys).sum() / mass)
    com_c = float((small * xs).sum() / mass)
    target = (FRAME - 1) / 2.0
    off_r = int(np.clip(round(target - com_r), 0, FRAME - out_h))
    off_c = int(np.clip(round(target - com_c), 0, FRAME - out_w))
    frame[off_r:off_r + out_h, off_c:off_c + out_w] = small
    return np.round(np.clip(frame, 0.0, 1.0) * 255).reshape(-1) / 255.0


def build_drawn_dataset(digit_a_strokes: list, digit_b_strokes: list,
                        num_images_per_digit: int, seed: int = 0) -> DigitDataset:
    """Rasterize the two endpoint digits into a labelled, split dataset."""
    if len(digit_a_strokes) != num_images_per_digit or \
            len(digit_b_strokes) != num_images_per_digit:
        raise DatasetConfigError(
            f"expected {num_images_per_digit} stroke sets per digit, got "
            f"{len(digit_a_strokes)} and {len(digit_b_strokes)}"
        )
    images = [rasterize(s) for s in digit_a_strokes] + \
             [rasterize(s) for s in digit_b_strokes]
    labels = np.array([0] * num_images_per_digit + [1] * num_images_per_digit)
    train_idx, test_idx, warning = _split(len(images), labels, seed)
    return DigitDataset(images=np.stack(images), labels=labels, train_idx=train_idx,
                        test_idx=test_idx, provenance="drawn", warning=warning)


# --- persistence --------------------------------------------------------------

def save_dataset(dataset: DigitDataset, directory) -> str:
    """Write IDX pair plus manifest into directory; returns the dataset id."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    images_bytes, labels_bytes = write_idx(dataset)
    (directory / "images.idx").write_bytes(images_bytes)
    if labels_bytes is not None:
        (directory / "labels.idx").write_bytes(labels_bytes)
    manifest = {
        "id": dataset.dataset_id,
        "provenance": dataset.provenance,
        "split": {
            "train": dataset.train_idx.tolist(),
            "test": dataset.test_idx.tolist(),
        },
        "warning": dataset.warning,
        "created_at": datetime.now(timezone.utc).isoformat(),
    }
    (directory / "manifest.json").write_text(json.dumps(manifest, indent=2))
    return dataset.dataset_id


def load_dataset(directory) -> DigitDataset:
    directory = Path(directory)
    manifest = json.loads((directory / "manifest.json").read_text())
    images_bytes = (directory / "images.idx").read_bytes()
    labels_path = directory / "labels.idx"
    labels_bytes = labels_path.read_bytes() if labels_path.exists() else None
    parsed = parse_idx(images_bytes, labels_bytes, provenance=manifest["provenance"])
    return DigitDataset(
        images=parsed.images,
        labels=parsed.labels,
        train_idx=np.asarray(manifest["split"]["train"], dtype=np.int64),
        test_idx=np.asarray(manifest["split"]["test"], dtype=np.int64),
        provenance=manifest["provenance"],
        warning=manifest.get("warning"),
        dataset_id=manifest["id"],
    )
