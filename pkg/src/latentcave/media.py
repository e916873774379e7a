"""Latent interpolation paths and their emission as PGM frames and GIF89a.

Interpolation uses encoder means only (no sampling), so endpoints reproduce
their reconstructions exactly and repeated renders are bit-identical. The GIF
encoder is written here byte by byte, LZW included (minimum code size 8,
grayscale 256-entry palette), because the output format is part of the
contract.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass
from typing import Optional, Sequence, Union

import numpy as np

from .vae import IMAGE_DIM, LatentCode, VaeModel, decode, encode

GIF_TRAILER = 0x3B
DEFAULT_DELAY_CS = 10
FRAME_SIDE = 28


class ModelError(ValueError):
    """No usable model for the requested media operation."""


class MediaSpecError(ValueError):
    """Invalid interpolation request."""


Endpoint = Union[np.ndarray, LatentCode]


@dataclass
class InterpolationSpec:
    endpoint_a: Endpoint
    endpoint_b: Endpoint
    num_images: int = 10
    show_gif_only: bool = True
    frame_delay_cs: int = DEFAULT_DELAY_CS

    def __post_init__(self):
        if self.num_images < 2:
            raise MediaSpecError("num_images must be at least 2")
        if self.frame_delay_cs <= 0:
            raise MediaSpecError("frame_delay_cs must be positive")


@dataclass
class FrameSequence:
    frames: list  # (28, 28) uint8 arrays

    def __post_init__(self):
        shapes = {f.shape for f in self.frames}
        if len(shapes) > 1:
            raise MediaSpecError(f"frames must share dimensions, got {shapes}")

    def __len__(self) -> int:
        return len(self.frames)


def quantize(x_hat: np.ndarray) -> np.ndarray:
    """Reconstruction in [0,1] -> square uint8 frame, round(255 * x)."""
    flat = np.asarray(x_hat, dtype=np.float64).reshape(-1)
    side = int(np.sqrt(flat.size))
    return np.rint(flat * 255).astype(np.uint8).reshape(side, side)


def _endpoint_mu(model: VaeModel, endpoint: Endpoint) -> np.ndarray:
    if isinstance(endpoint, LatentCode):
        return np.asarray(endpoint.mu, dtype=np.float64).reshape(-1)
    arr = np.asarray(endpoint, dtype=np.float64).reshape(-1)
    if arr.size == IMAGE_DIM:
        mu, _ = encode(model, arr[None, :])
        return mu[0]
    if arr.size == model.latent_dim:
        return arr
    raise MediaSpecError(
        f"endpoint must be a {IMAGE_DIM}-pixel image or a latent code, got {arr.size} values"
    )


def _blend(weights_and_codes) -> np.ndarray:
    total = None
    for w, z in weights_and_codes:
        term = w * z
        total = term if total is None else total + term
    return total


def interpolate(model: Optional[VaeModel], spec: InterpolationSpec) -> FrameSequence:
    """Frames along the latent line between the two endpoints' means."""
    if model is None:
        raise ModelError("no model loaded")
    z_a = _endpoint_mu(model, spec.endpoint_a)
    z_b = _endpoint_mu(model, spec.endpoint_b)
    n = spec.num_images
    frames = []
    for k in range(n):
        t = k / (n - 1)
        z = _blend([(1.0 - t, z_a), (t, z_b)])
        frames.append(quantize(decode(model, z[None, :])[0]))
    return FrameSequence(frames=frames)


def interpolate_2d(model: Optional[VaeModel], corners: Sequence[Endpoint],
                   grid_n: int) -> list:
    """grid_n x grid_n bilinear sweep over 4 corner codes, row-major corners
    (top-left, top-right, bottom-left, bottom-right)."""
    if model is None:
        raise ModelError("no model loaded")
    if len(corners) != 4:
        raise MediaSpecError(f"need exactly 4 corners, got {len(corners)}")
    if grid_n < 2:
        raise MediaSpecError("grid_n must be at least 2")
    z00, z01, z10, z11 = (_endpoint_mu(model, c) for c in corners)
    grid = []
    for i in range(grid_n):
        u = i / (grid_n - 1)
        row = []
        for j in range(grid_n):
            v = j / (grid_n - 1)
            z = _blend([((1.0 - u) * (1.0 - v), z00), ((1.0 - u) * v, z01),
                        (u * (1.0 - v), z10), (u * v, z11)])
            row.append(quantize(decode(model, z[None, :])[0]))
        grid.append(row)
    return grid


# --- GIF89a -------------------------------------------------------------------

class _BitWriter:
    """LSB-first bit packer for LZW code streams."""

    def __init__(self):
        self.out = bytearray()
        self._acc = 0
        self._nbits = 0

    def write(self, code: int, nbits: int) -> None:
        self._acc |= code << self._nbits
        self._nbits += nbits
        while self._nbits >= 8:
            self.out.append(self._acc & 0xFF)
            self._acc >>= 8
            self._nbits -= 8

    def flush(self) -> bytes:
        if self._nbits:
            self.out.append(self._acc & 0xFF)
            self._acc = 0
            self._nbits = 0
        return bytes(self.out)


def lzw_encode(indices: Sequence[int], min_code_size: int = 8) -> bytes:
    """GIF-variant LZW: clear/EOI codes, growing code width, 4096-entry cap."""
    clear = 1 << min_code_size
    eoi = clear + 1
    writer = _BitWriter()
    code_size = min_code_size + 1
    table: dict = {}
    next_code = eoi + 1
    writer.write(clear, code_size)
    prev = int(indices[0])
    for raw in indices[1:]:
        k = int(raw)
        if (prev, k) in table:
            prev = table[(prev, k)]
            continue
        writer.write(prev, code_size)
        if next_code < 4096:
            table[(prev, k)] = next_code
            next_code += 1
            # decoder grows its width one entry later than it adds ours
            if next_code == (1 << code_size) + 1 and code_size < 12:
                code_size += 1
        else:
            writer.write(clear, code_size)
            table.clear()
            next_code = eoi + 1
            code_size = min_code_size + 1
        prev = k
    writer.write(prev, code_size)
    writer.write(eoi, code_size)
    return writer.flush()


def _sub_blocks(data: bytes) -> bytes:
    out = bytearray()
    for start in range(0, len(data), 255):
        chunk = data[start:start + 255]
        out.append(len(chunk))
        out.extend(chunk)
    out.append(0)
    return bytes(out)


def encode_gif(seq: FrameSequence, delay_cs: int = DEFAULT_DELAY_CS,
               loop_forever: bool = True) -> bytes:
    """Animated GIF89a with a 256-entry grayscale palette, one GCE per frame."""
    if not seq.frames:
        raise MediaSpecError("cannot encode an empty frame sequence")
    height, width = seq.frames[0].shape
    out = bytearray(b"GIF89a")
    # logical screen descriptor: global palette, 8 bits/channel, 256 entries
    out += struct.pack("<HHBBB", width, height, 0xF7, 0, 0)
    for i in range(256):
        out += bytes((i, i, i))
    if loop_forever:
        out += b"\x21\xFF\x0BNETSCAPE2.0\x03\x01" + struct.pack("<H", 0) + b"\x00"
    for frame in seq.frames:
        # graphic control: keep-previous disposal, no transparency
        out += b"\x21\xF9\x04" + bytes((0x04,)) + struct.pack("<H", delay_cs) + b"\x00\x00"
        out += b"\x2C" + struct.pack("<HHHH", 0, 0, width, height) + b"\x00"
        out.append(8)  # LZW minimum code size
        out += _sub_blocks(lzw_encode(frame.reshape(-1)))
    out.append(GIF_TRAILER)
    return bytes(out)


def write_pgm(frame: np.ndarray) -> bytes:
    """Binary PGM (P5), maxval 255."""
    arr = np.asarray(frame)
    if arr.ndim == 1:
        arr = arr.reshape(FRAME_SIDE, FRAME_SIDE)
    arr = arr.astype(np.uint8)
    header = f"P5\n{arr.shape[1]} {arr.shape[0]}\n255\n".encode("ascii")
    return header + arr.tobytes()


class PgmFormatError(ValueError):
    """Bytes are not the P5 layout this toolkit writes."""


def read_pgm(blob: bytes) -> np.ndarray:
    """Inverse of write_pgm; accepts any whitespace-separated P5 header."""
    if not blob.startswith(b"P5"):
        raise PgmFormatError("missing P5 magic")
    fields = []
    pos = 2
    while len(fields) < 3:
        while pos < len(blob) and blob[pos:pos + 1].isspace():
            pos += 1
        start = pos
        while pos < len(blob) and not blob[pos:pos + 1].isspace():
            pos += 1
        if start == pos:
            raise PgmFormatError("truncated header")
        fields.append(int(blob[start:pos]))
    pos += 1  # single whitespace after maxval
    width, height, maxval = fields
    if maxval != 255:
        raise PgmFormatError(f"unsupported maxval {maxval}")
    raw = blob[pos:pos + width * height]
    if len(raw) != width * height:
        raise PgmFormatError("truncated pixel payload")
    return np.frombuffer(raw, dtype=np.uint8).reshape(height, width).copy()
