"""The digit VAE: encoder means/variances, reparameterized sampling, decoder, loss.

Architecture is a fixed two-layer MLP on each side:

    x (784) -> enc_hidden -> relu -> enc_mu     -> mu      (L)
                                  -> enc_logvar -> logvar  (L, clamped)
    z (L)   -> dec_hidden -> relu -> dec_out -> sigmoid -> x_hat (784)

The logvar head saturates at +-LOGVAR_CLAMP so exp() can never overflow
during training; the clamp is part of the encoder, with zero gradient in
the saturated region. Loss is the negative ELBO: Bernoulli reconstruction
(summed over pixels, mean over batch) plus closed-form Gaussian KL.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass

import numpy as np

from .numerics import (
    DimensionError,
    LinearLayer,
    Tensor,
    linear_backward,
    linear_forward,
    relu,
    relu_backward,
    sigmoid,
)

IMAGE_DIM = 784  # 28 x 28
LOGVAR_CLAMP = 10.0
# keep decoder output strictly inside (0, 1) even where sigmoid saturates
_XHAT_EPS = 1e-12

CHECKPOINT_MAGIC = b"LVAE"
CHECKPOINT_VERSION = 1

# canonical layer order; freeze_up_to indexes into this
LAYER_NAMES = ("enc_hidden", "enc_mu", "enc_logvar", "dec_hidden", "dec_out")


@dataclass
class LatentCode:
    """A point in latent space as produced by the encoder."""

    mu: Tensor
    logvar: Tensor


@dataclass
class VaeModel:
    enc_hidden: LinearLayer
    enc_mu: LinearLayer
    enc_logvar: LinearLayer
    dec_hidden: LinearLayer
    dec_out: LinearLayer
    hidden_dim: int
    latent_dim: int

    def __post_init__(self):
        if self.enc_mu.in_dim != self.hidden_dim or self.enc_logvar.in_dim != self.hidden_dim:
            raise DimensionError("mu/logvar heads must consume the hidden width")
        if self.enc_mu.out_dim != self.latent_dim or self.enc_logvar.out_dim != self.latent_dim:
            raise DimensionError("mu/logvar heads must emit the latent width")
        if self.dec_out.out_dim != IMAGE_DIM:
            raise DimensionError(f"decoder output must be {IMAGE_DIM} wide")

    def layers(self) -> tuple[LinearLayer, ...]:
        return (self.enc_hidden, self.enc_mu, self.enc_logvar, self.dec_hidden, self.dec_out)

    def zero_grads(self) -> None:
        for layer in self.layers():
            layer.zero_grads()


def init_model(hidden_dim: int = 512, latent_dim: int = 2, seed: int = 0) -> VaeModel:
    """Fresh model with Glorot-uniform weights and zero biases drawn from seed."""
    rng = np.random.default_rng(seed)
    return VaeModel(
        enc_hidden=LinearLayer.create(hidden_dim, IMAGE_DIM, rng),
        enc_mu=LinearLayer.create(latent_dim, hidden_dim, rng),
        enc_logvar=LinearLayer.create(latent_dim, hidden_dim, rng),
        dec_hidden=LinearLayer.create(hidden_dim, latent_dim, rng),
        dec_out=LinearLayer.create(IMAGE_DIM, hidden_dim, rng),
        hidden_dim=hidden_dim,
        latent_dim=latent_dim,
    )


def _as_batch(x: Tensor, width: int, what: str) -> Tensor:
    x = np.asarray(x, dtype=np.float64)
    if x.ndim == 1:
        x = x[None, :]
    if x.ndim != 2 or x.shape[1] != width:
        raise DimensionError(f"{what} must be (batch, {width}), got {x.shape}")
    return x


def encode(model: VaeModel, x: Tensor) -> tuple[Tensor, Tensor]:
    """Means and (clamped) log-variances for a batch of images."""
    x = _as_batch(x, IMAGE_DIM, "encoder input")
    g = relu(linear_forward(model.enc_hidden, x))
    mu = linear_forward(model.enc_mu, g)
    logvar = np.clip(linear_forward(model.enc_logvar, g), -LOGVAR_CLAMP, LOGVAR_CLAMP)
    return mu, logvar


def reparameterize(mu: Tensor, logvar: Tensor, rng: np.random.Generator) -> Tensor:
    """z = mu + exp(logvar / 2) * eps with eps ~ N(0, 1) from rng."""
    mu = np.asarray(mu, dtype=np.float64)
    logvar = np.asarray(logvar, dtype=np.float64)
    if mu.shape != logvar.shape:
        raise DimensionError(f"mu {mu.shape} and logvar {logvar.shape} must match")
    if not (np.all(np.isfinite(mu)) and np.all(np.isfinite(logvar))):
        raise ValueError("mu and logvar must be finite")
    eps = rng.standard_normal(mu.shape)
    return mu + np.exp(0.5 * logvar) * eps


def decode(model: VaeModel, z: Tensor) -> Tensor:
    """Reconstruction in the open interval (0, 1)."""
    z = _as_batch(z, model.latent_dim, "latent input")
    g = relu(linear_forward(model.dec_hidden, z))
    s = sigmoid(linear_forward(model.dec_out, g))
    return np.clip(s, _XHAT_EPS, 1.0 - _XHAT_EPS)


def elbo_loss(x: Tensor, x_hat: Tensor, mu: Tensor, logvar: Tensor) -> tuple[float, float, float]:
    """(total, bce, kl): negative ELBO with Bernoulli reconstruction.

    bce is summed over pixels and averaged over the batch; kl is the
    closed-form KL(N(mu, e^logvar) || N(0, 1)), averaged over the batch.
    """
    x = _as_batch(x, IMAGE_DIM, "target image")
    x_hat = _as_batch(x_hat, IMAGE_DIM, "reconstruction")
    mu = np.atleast_2d(np.asarray(mu, dtype=np.float64))
    logvar = np.atleast_2d(np.asarray(logvar, dtype=np.float64))
    batch = x.shape[0]
    # non-finite values signal divergence to the trainer; no warning spam
    with np.errstate(over="ignore", invalid="ignore"):
        bce = float(-np.sum(x * np.log(x_hat) + (1.0 - x) * np.log(1.0 - x_hat)) / batch)
        kl = float(-0.5 * np.sum(1.0 + logvar - mu**2 - np.exp(logvar)) / batch)
    return bce + kl, bce, kl


@dataclass
class ForwardCache:
    """Every intermediate needed to run the analytic backward pass."""

    x: Tensor
    h_enc: Tensor
    g_enc: Tensor
    mu: Tensor
    logvar_raw: Tensor
    logvar: Tensor
    sig: Tensor  # exp(logvar / 2)
    eps: Tensor
    z: Tensor
    h_dec: Tensor
    g_dec: Tensor
    logits: Tensor
    x_hat: Tensor
    total: float
    bce: float
    kl: float


def forward_training(model: VaeModel, x: Tensor, rng: np.random.Generator) -> ForwardCache:
    """One training-mode pass: encode, sample, decode, loss, keeping caches."""
    x = _as_batch(x, IMAGE_DIM, "encoder input")
    h_enc = linear_forward(model.enc_hidden, x)
    g_enc = relu(h_enc)
    mu = linear_forward(model.enc_mu, g_enc)
    logvar_raw = linear_forward(model.enc_logvar, g_enc)
    logvar = np.clip(logvar_raw, -LOGVAR_CLAMP, LOGVAR_CLAMP)
    sig = np.exp(0.5 * logvar)
    eps = rng.standard_normal(mu.shape)
    z = mu + sig * eps
    h_dec = linear_forward(model.dec_hidden, z)
    g_dec = relu(h_dec)
    logits = linear_forward(model.dec_out, g_dec)
    x_hat = np.clip(sigmoid(logits), _XHAT_EPS, 1.0 - _XHAT_EPS)
    total, bce, kl = elbo_loss(x, x_hat, mu, logvar)
    return ForwardCache(
        x=x, h_enc=h_enc, g_enc=g_enc, mu=mu, logvar_raw=logvar_raw, logvar=logvar,
        sig=sig, eps=eps, z=z, h_dec=h_dec, g_dec=g_dec, logits=logits, x_hat=x_hat,
        total=total, bce=bce, kl=kl,
    )


def backward_training(model: VaeModel, cache: ForwardCache) -> None:
    """Accumulate d(total)/d(params) into the layer grad buffers.

    eps is held fixed (the reparameterization path); the logvar clamp has
    zero gradient where it saturates.
    """
    batch = cache.x.shape[0]
    d_xhat = (-(cache.x / cache.x_hat) + (1.0 - cache.x) / (1.0 - cache.x_hat)) / batch
    s = cache.x_hat  # clip is inactive wherever the gradient is non-negligible
    d_logits = d_xhat * s * (1.0 - s)
    d_gdec = linear_backward(model.dec_out, cache.g_dec, d_logits)
    d_hdec = relu_backward(cache.h_dec, d_gdec)
    d_z = linear_backward(model.dec_hidden, cache.z, d_hdec)

    d_mu = d_z + cache.mu / batch
    d_logvar = d_z * cache.eps * 0.5 * cache.sig + 0.5 * (np.exp(cache.logvar) - 1.0) / batch
    d_logvar_raw = d_logvar * (np.abs(cache.logvar_raw) < LOGVAR_CLAMP)

    d_genc = linear_backward(model.enc_mu, cache.g_enc, d_mu)
    d_genc += linear_backward(model.enc_logvar, cache.g_enc, d_logvar_raw)
    d_henc = relu_backward(cache.h_enc, d_genc)
    linear_backward(model.enc_hidden, cache.x, d_henc)


def save_checkpoint(model: VaeModel) -> bytes:
    """Versioned binary checkpoint: magic, version, dims, then raw little-endian f64."""
    parts = [CHECKPOINT_MAGIC, struct.pack("<H", CHECKPOINT_VERSION),
             struct.pack("<II", model.hidden_dim, model.latent_dim)]
    for layer in model.layers():
        parts.append(np.ascontiguousarray(layer.weights, dtype="<f8").tobytes())
        parts.append(np.ascontiguousarray(layer.bias, dtype="<f8").tobytes())
    return b"".join(parts)


class CheckpointError(ValueError):
    """Checkpoint bytes are not a valid model file."""


def load_checkpoint(blob: bytes) -> VaeModel:
    if blob[:4] != CHECKPOINT_MAGIC:
        raise CheckpointError("bad checkpoint magic")
    (version,) = struct.unpack("<H", blob[4:6])
    if version != CHECKPOINT_VERSION:
        raise CheckpointError(f"unsupported checkpoint version {version}")
    hidden_dim, latent_dim = struct.unpack("<II", blob[6:14])
    shapes = [
        (hidden_dim, IMAGE_DIM), (latent_dim, hidden_dim), (latent_dim, hidden_dim),
        (hidden_dim, latent_dim), (IMAGE_DIM, hidden_dim),
    ]
    offset = 14
    layers = []
    for out_dim, in_dim in shapes:
        w_bytes = out_dim * in_dim * 8
        b_bytes = out_dim * 8
        if offset + w_bytes + b_bytes > len(blob):
            raise CheckpointError("truncated checkpoint payload")
        weights = np.frombuffer(blob, dtype="<f8", count=out_dim * in_dim, offset=offset)
        offset += w_bytes
        bias = np.frombuffer(blob, dtype="<f8", count=out_dim, offset=offset)
        offset += b_bytes
        layers.append(LinearLayer(weights=weights.reshape(out_dim, in_dim).copy(),
                                  bias=bias.copy()))
    if offset != len(blob):
        raise CheckpointError("trailing bytes after checkpoint payload")
    return VaeModel(*layers, hidden_dim=hidden_dim, latent_dim=latent_dim)
