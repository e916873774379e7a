import io

import numpy as np
import numpy.testing as npt
import pytest
from PIL import Image

from latentcave.dataset import rasterize
from latentcave.media import (
    FrameSequence,
    InterpolationSpec,
    MediaSpecError,
    ModelError,
    encode_gif,
    interpolate,
    interpolate_2d,
    lzw_encode,
    quantize,
    write_pgm,
)
from latentcave.vae import LatentCode, decode, encode, init_model

from digit_strokes import one_strokes, zero_strokes


@pytest.fixture(scope="module")
def model():
    return init_model(hidden_dim=32, latent_dim=2, seed=3)


@pytest.fixture(scope="module")
def endpoints():
    return rasterize(zero_strokes(0)), rasterize(one_strokes(1))


def decode_mu(model, image):
    mu, _ = encode(model, image[None, :])
    return quantize(decode(model, mu)[0])


def pil_frames(gif_bytes):
    img = Image.open(io.BytesIO(gif_bytes))
    frames, delays = [], []
    for k in range(getattr(img, "n_frames", 1)):
        img.seek(k)
        frames.append(np.asarray(img.convert("L")))
        delays.append(img.info.get("duration"))
    return img, frames, delays


# --- interpolation ------------------------------------------------------------

def test_endpoint_frames_match_reconstructions_exactly(model, endpoints):
    a, b = endpoints
    seq = interpolate(model, InterpolationSpec(endpoint_a=a, endpoint_b=b, num_images=7))
    assert len(seq) == 7
    npt.assert_array_equal(seq.frames[0], decode_mu(model, a))
    npt.assert_array_equal(seq.frames[-1], decode_mu(model, b))


def test_two_images_is_just_the_endpoints(model, endpoints):
    a, b = endpoints
    seq = interpolate(model, InterpolationSpec(endpoint_a=a, endpoint_b=b, num_images=2))
    npt.assert_array_equal(seq.frames[0], decode_mu(model, a))
    npt.assert_array_equal(seq.frames[1], decode_mu(model, b))


def test_identical_endpoints_give_identical_frames(model, endpoints):
    a, _ = endpoints
    seq = interpolate(model, InterpolationSpec(endpoint_a=a, endpoint_b=a.copy(),
                                               num_images=5))
    for frame in seq.frames[1:]:
        npt.assert_array_equal(frame, seq.frames[0])


def test_latent_code_endpoints_accepted(model):
    za = LatentCode(mu=np.array([0.5, -1.0]), logvar=np.zeros(2))
    zb = LatentCode(mu=np.array([-0.5, 1.0]), logvar=np.zeros(2))
    seq = interpolate(model, InterpolationSpec(endpoint_a=za, endpoint_b=zb, num_images=3))
    npt.assert_array_equal(seq.frames[0], quantize(decode(model, za.mu[None, :])[0]))


def test_missing_model_rejected(endpoints):
    a, b = endpoints
    with pytest.raises(ModelError):
        interpolate(None, InterpolationSpec(endpoint_a=a, endpoint_b=b))


def test_spec_validation(endpoints):
    a, b = endpoints
    with pytest.raises(MediaSpecError):
        InterpolationSpec(endpoint_a=a, endpoint_b=b, num_images=1)


def test_2d_grid_corners_and_uniformity(model, endpoints):
    a, b = endpoints
    grid = interpolate_2d(model, [a, b, b, a], grid_n=2)
    npt.assert_array_equal(grid[0][0], decode_mu(model, a))
    npt.assert_array_equal(grid[0][1], decode_mu(model, b))
    npt.assert_array_equal(grid[1][0], decode_mu(model, b))
    npt.assert_array_equal(grid[1][1], decode_mu(model, a))

    same = interpolate_2d(model, [a, a, a, a], grid_n=3)
    for row in same:
        for cell in row:
            npt.assert_array_equal(cell, same[0][0])


def test_2d_grid_edges_equal_1d_interpolations(model, endpoints):
    a, b = endpoints
    corners = [a, b, rasterize(zero_strokes(5)), rasterize(one_strokes(6))]
    n = 4
    grid = interpolate_2d(model, corners, grid_n=n)
    line_top = interpolate(model, InterpolationSpec(endpoint_a=corners[0],
                                                    endpoint_b=corners[1], num_images=n))
    line_left = interpolate(model, InterpolationSpec(endpoint_a=corners[0],
                                                     endpoint_b=corners[2], num_images=n))
    line_bottom = interpolate(model, InterpolationSpec(endpoint_a=corners[2],
                                                       endpoint_b=corners[3], num_images=n))
    line_right = interpolate(model, InterpolationSpec(endpoint_a=corners[1],
                                                      endpoint_b=corners[3], num_images=n))
    for j in range(n):
        npt.assert_array_equal(grid[0][j], line_top.frames[j])
        npt.assert_array_equal(grid[n - 1][j], line_bottom.frames[j])
        npt.assert_array_equal(grid[j][0], line_left.frames[j])
        npt.assert_array_equal(grid[j][n - 1], line_right.frames[j])


# --- GIF ----------------------------------------------------------------------

def test_gif_format_laws(model, endpoints):
    a, b = endpoints
    seq = interpolate(model, InterpolationSpec(endpoint_a=a, endpoint_b=b, num_images=3))
    blob = encode_gif(seq)
    assert blob[:6] == b"GIF89a"
    assert blob[-1] == 0x3B
    assert b"NETSCAPE2.0" in blob


def test_gif_single_frame_decodes(model, endpoints):
    a, _ = endpoints
    frame = decode_mu(model, a)
    blob = encode_gif(FrameSequence(frames=[frame]), loop_forever=False)
    img, frames, _ = pil_frames(blob)
    assert getattr(img, "n_frames", 1) == 1
    assert img.size == (28, 28)
    npt.assert_array_equal(frames[0], frame)
    assert b"NETSCAPE2.0" not in blob


def test_gif_roundtrips_through_reference_decoder(model, endpoints):
    a, b = endpoints
    seq = interpolate(model, InterpolationSpec(endpoint_a=a, endpoint_b=b, num_images=6))
    blob = encode_gif(seq, delay_cs=7)
    img, frames, delays = pil_frames(blob)
    assert img.n_frames == 6
    assert img.size == (28, 28)
    assert all(d == 70 for d in delays)  # 7 cs = 70 ms
    assert img.info.get("loop") == 0
    for ours, theirs in zip(seq.frames, frames):
        npt.assert_array_equal(theirs, ours)


def test_gif_survives_dictionary_reset():
    # a big noisy frame forces the LZW table past 4096 entries
    rng = np.random.default_rng(0)
    frame = rng.integers(0, 256, size=(100, 100), dtype=np.uint8)
    blob = encode_gif(FrameSequence(frames=[frame]))
    _, frames, _ = pil_frames(blob)
    npt.assert_array_equal(frames[0], frame)


def test_gif_gradient_image_exercises_code_growth():
    frame = np.tile(np.arange(256, dtype=np.uint8), 4).reshape(32, 32)
    blob = encode_gif(FrameSequence(frames=[frame]))
    _, frames, _ = pil_frames(blob)
    npt.assert_array_equal(frames[0], frame)


def test_lzw_single_pixel():
    data = lzw_encode(np.array([42], dtype=np.uint8))
    assert len(data) >= 2  # clear + code + eoi packed


# --- PGM ----------------------------------------------------------------------

def parse_pgm(blob: bytes):
    # reference reader: P5, single whitespace-separated header, raw bytes
    parts = blob.split(b"\n", 3)
    assert parts[0] == b"P5"
    w, h = map(int, parts[1].split())
    assert parts[2] == b"255"
    raw = parts[3]
    assert len(raw) == w * h
    return np.frombuffer(raw, dtype=np.uint8).reshape(h, w)


def test_pgm_all_zero():
    blob = write_pgm(np.zeros((28, 28), dtype=np.uint8))
    assert blob.endswith(bytes(784))
    npt.assert_array_equal(parse_pgm(blob), np.zeros((28, 28)))


def test_pgm_all_white():
    blob = write_pgm(np.full((28, 28), 255, dtype=np.uint8))
    assert blob.endswith(b"\xff" * 784)


def test_pgm_roundtrip_and_pil_agrees(model, endpoints):
    frame = decode_mu(model, endpoints[0])
    blob = write_pgm(frame)
    npt.assert_array_equal(parse_pgm(blob), frame)
    with Image.open(io.BytesIO(blob)) as img:
        npt.assert_array_equal(np.asarray(img), frame)
