"""Minibatch Adam training with seeded determinism, freezing, and progress events.

All randomness (weight init happens upstream in init_model, shuffling here,
and the per-batch reparameterization draws) derives from TrainConfig.seed via
SeedSequence children, so a config + seed pins the whole run bit-for-bit.
freeze_up_to freezes the leading layers in the canonical order
(enc_hidden, enc_mu, enc_logvar, dec_hidden, dec_out); freeze_up_to=2 keeps
the entire encoder fixed, the retrain-only-the-decoder configuration.
"""

from __future__ import annotations

import hashlib
import json
import math
import time
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .vae import VaeModel, backward_training, forward_training, save_checkpoint

ADAM_BETA1 = 0.9
ADAM_BETA2 = 0.999
ADAM_EPS = 1e-8


class ConfigurationError(ValueError):
    """Invalid training configuration for the given dataset."""


class DivergedError(RuntimeError):
    """Training produced a non-finite loss; surfaced rather than clamped."""

    def __init__(self, epoch: int):
        super().__init__(f"training diverged (non-finite loss) at epoch {epoch}")
        self.epoch = epoch


class TrainingCancelled(RuntimeError):
    """Raised between batches when a cancel hook fires."""


@dataclass
class TrainConfig:
    epochs: int = 50
    batch_size: int = 32
    learning_rate: float = 1e-3
    seed: int = 0
    freeze_up_to: Optional[int] = None
    latent_dim: int = 2
    hidden_dim: int = 512

    @classmethod
    def from_dict(cls, raw: dict) -> "TrainConfig":
        known = {f for f in cls.__dataclass_fields__}
        unknown = set(raw) - known
        if unknown:
            raise ConfigurationError(f"unknown config keys: {sorted(unknown)}")
        cfg = cls(**raw)
        cfg.validate()
        return cfg

    def validate(self) -> None:
        for name in ("epochs", "batch_size", "latent_dim", "hidden_dim"):
            v = getattr(self, name)
            if not isinstance(v, int) or isinstance(v, bool) or (v < 0 if name == "epochs" else v <= 0):
                raise ConfigurationError(f"{name} must be a positive integer, got {v!r}")
        if not (isinstance(self.learning_rate, (int, float)) and self.learning_rate > 0):
            raise ConfigurationError(f"learning_rate must be positive, got {self.learning_rate!r}")
        if self.freeze_up_to is not None and not (0 <= int(self.freeze_up_to) <= 4):
            raise ConfigurationError("freeze_up_to must index a layer (0..4)")


@dataclass
class EpochStats:
    epoch: int
    train_total: float
    train_bce: float
    train_kl: float
    test_total: Optional[float]

    def to_event(self) -> dict:
        return {
            "epoch": self.epoch,
            "train_total": self.train_total,
            "train_bce": self.train_bce,
            "train_kl": self.train_kl,
            "test_total": self.test_total,
        }

    def to_event_line(self) -> str:
        return json.dumps(self.to_event())


@dataclass
class TrainReport:
    epochs: list[EpochStats]
    model_id: str
    wall_time_s: float = field(compare=False, default=0.0)


class _Adam:
    def __init__(self, layers, learning_rate: float):
        self.lr = learning_rate
        self.t = 0
        self.state = [
            (np.zeros_like(l.weights), np.zeros_like(l.weights),
             np.zeros_like(l.bias), np.zeros_like(l.bias))
            for l in layers
        ]
        self.layers = layers

    def _delta(self, m, v, grad, bc1, bc2):
        m *= ADAM_BETA1
        m += (1.0 - ADAM_BETA1) * grad
        v *= ADAM_BETA2
        v += (1.0 - ADAM_BETA2) * grad**2
        return -self.lr * (m / bc1) / (np.sqrt(v / bc2) + ADAM_EPS)

    def step(self) -> None:
        self.t += 1
        bc1 = 1.0 - ADAM_BETA1**self.t
        bc2 = 1.0 - ADAM_BETA2**self.t
        for layer, (m_w, v_w, m_b, v_b) in zip(self.layers, self.state):
            delta_w = self._delta(m_w, v_w, layer.grad_weights, bc1, bc2)
            delta_b = self._delta(m_b, v_b, layer.grad_bias, bc1, bc2)
            layer.apply_update(delta_w, delta_b)


def evaluate(model: VaeModel, images: np.ndarray, seed: int = 0, batch_size: int = 256) -> float:
    """Mean total loss over images; parameters untouched, eps fixed by seed."""
    images = np.atleast_2d(np.asarray(images, dtype=np.float64))
    if images.shape[0] == 0:
        raise ConfigurationError("cannot evaluate an empty split")
    rng = np.random.default_rng(seed)
    total = 0.0
    for start in range(0, images.shape[0], batch_size):
        batch = images[start:start + batch_size]
        cache = forward_training(model, batch, rng)
        total += cache.total * batch.shape[0]
    return total / images.shape[0]


def train(
    model: VaeModel,
    dataset,
    cfg: TrainConfig,
    progress: Optional[Callable[[EpochStats], None]] = None,
    cancel: Optional[Callable[[], bool]] = None,
) -> TrainReport:
    """Run cfg.epochs of Adam over the dataset's train split.

    progress receives one EpochStats per completed epoch; cancel is polled
    between batches and raises TrainingCancelled when it returns True.
    """
    cfg.validate()
    train_images = dataset.train_images()
    if train_images.shape[0] == 0:
        raise ConfigurationError("dataset has no training images")
    if cfg.epochs > 0 and cfg.batch_size > train_images.shape[0]:
        raise ConfigurationError(
            f"batch_size {cfg.batch_size} exceeds training-set size {train_images.shape[0]}"
        )
    test_images = dataset.test_images()

    frozen_before = [l.frozen for l in model.layers()]
    if cfg.freeze_up_to is not None:
        for layer in model.layers()[: cfg.freeze_up_to + 1]:
            layer.frozen = True

    started = time.monotonic()
    seeds = np.random.SeedSequence(cfg.seed).spawn(2)
    shuffle_rng = np.random.default_rng(seeds[0])
    eps_rng = np.random.default_rng(seeds[1])
    adam = _Adam(model.layers(), cfg.learning_rate)
    model.zero_grads()

    stats: list[EpochStats] = []
    try:
        for epoch in range(1, cfg.epochs + 1):
            order = shuffle_rng.permutation(train_images.shape[0])
            sums = np.zeros(3)
            for start in range(0, order.size, cfg.batch_size):
                if cancel is not None and cancel():
                    raise TrainingCancelled()
                batch = train_images[order[start:start + cfg.batch_size]]
                cache = forward_training(model, batch, eps_rng)
                if not math.isfinite(cache.total):
                    raise DivergedError(epoch)
                backward_training(model, cache)
                adam.step()
                sums += np.array([cache.total, cache.bce, cache.kl]) * batch.shape[0]
            means = sums / order.size
            test_total = (
                evaluate(model, test_images) if test_images.shape[0] else None
            )
            entry = EpochStats(epoch, float(means[0]), float(means[1]), float(means[2]),
                               test_total)
            stats.append(entry)
            if progress is not None:
                progress(entry)
    finally:
        for layer, was in zip(model.layers(), frozen_before):
            layer.frozen = was

    blob = save_checkpoint(model)
    model_id = hashlib.sha256(blob).hexdigest()[:16]
    return TrainReport(epochs=stats, model_id=model_id,
                       wall_time_s=time.monotonic() - started)
