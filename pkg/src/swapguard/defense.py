"""Training regimes for the MLP victim.

Three regimes: standard cross-entropy training, fine-tuning the trained
model on an attacked copy of the train set, and training from scratch on
attacked data only. Either regime can use the noise-augmented loss
(1 - alpha) * CE + alpha * CE-under-noise instead of plain CE. Plain SGD,
mean-of-batch gradients, deterministic given the seed.
"""

import time
from dataclasses import dataclass, field

import numpy as np

from .corpus import Dataset
from .embedding import EmbeddingTable
from .seeding import derive_seed
from .victim import (LOSS_CE, LOSS_EP, MlpVictim, NoiseSpec, batch_loss_and_grads,
                     featurize)

__all__ = ["TrainConfig", "TrainReport", "TrainingDivergedError", "train",
           "finetune_on_attacked", "train_augmented_only"]


class TrainingDivergedError(RuntimeError):
    pass


@dataclass(frozen=True)
class TrainConfig:
    """Hyperparameters for one training run.

    Defaults suit the small MLP victim: batch 32 / 10 epochs / lr 0.05 for
    training from scratch; fine-tuning runs typically use batch 16 and
    3 epochs. Degenerate values (lr 0, 0 epochs) are allowed and leave the
    model unchanged.
    """
    batch_size: int = 32
    learning_rate: float = 0.05
    epochs: int = 10
    loss_mode: str = LOSS_CE
    alpha: float = 0.5
    noise: NoiseSpec = field(default_factory=NoiseSpec)
    seed: int = 0
    shuffle: bool = True

    def __post_init__(self):
        if self.batch_size < 1:
            raise ValueError("batch_size must be >= 1")
        if not np.isfinite(self.learning_rate) or self.learning_rate < 0:
            raise ValueError("learning_rate must be finite and >= 0")
        if self.epochs < 0:
            raise ValueError("epochs must be >= 0")
        if self.loss_mode not in (LOSS_CE, LOSS_EP):
            raise ValueError(f"loss_mode must be '{LOSS_CE}' or '{LOSS_EP}'")
        if not 0.0 <= self.alpha <= 1.0:
            raise ValueError("alpha must be in [0, 1]")


@dataclass(frozen=True)
class TrainReport:
    epoch_losses: tuple[float, ...]
    dev_accuracy: float
    config: TrainConfig
    wall_time_s: float


def _features(table: EmbeddingTable, ds: Dataset) -> tuple[np.ndarray, np.ndarray]:
    X = np.stack([featurize(table, ex) for ex in ds.examples])
    y = np.array([int(ex.label) for ex in ds.examples])
    return X, y


def _accuracy(model: MlpVictim, ds: Dataset) -> float:
    hits = sum(model.predict_example(ex) == ex.label for ex in ds.examples)
    return hits / len(ds.examples)


def train(model: MlpVictim, table: EmbeddingTable, train_ds: Dataset,
          dev_ds: Dataset, config: TrainConfig,
          epoch_callback=None) -> tuple[MlpVictim, TrainReport]:
    """Mini-batch SGD on the configured loss; the input model is not mutated.

    ``epoch_callback(epoch, model)``, if given, runs after each epoch (for
    periodic checkpoints).
    """
    if not train_ds.examples or not dev_ds.examples:
        raise ValueError("train and dev datasets must be non-empty")
    start = time.perf_counter()
    model = model.copy()
    X, y = _features(table, train_ds)
    n = len(y)
    noise_dim = model.input_dim if config.noise.site == "representation" else 2

    ss = np.random.SeedSequence(config.seed)
    shuffle_rng, noise_rng = (np.random.default_rng(c) for c in ss.spawn(2))

    epoch_losses = []
    params = model.params()
    for epoch in range(config.epochs):
        order = shuffle_rng.permutation(n) if config.shuffle else np.arange(n)
        total = 0.0
        for bi, lo in enumerate(range(0, n, config.batch_size)):
            idx = order[lo:lo + config.batch_size]
            delta = None
            if config.loss_mode == LOSS_EP:
                delta = noise_rng.normal(config.noise.mean, config.noise.std_dev,
                                         (len(idx), noise_dim))
            loss, grads = batch_loss_and_grads(model, X[idx], y[idx],
                                               config.loss_mode, config.alpha,
                                               delta, config.noise.site)
            if not np.isfinite(loss):
                raise TrainingDivergedError(
                    f"non-finite loss {loss} at epoch {epoch}, batch {bi} "
                    f"(examples {lo}..{lo + len(idx) - 1})")
            for name, g in grads.items():
                params[name] -= config.learning_rate * g
            total += loss * len(idx)
        epoch_losses.append(total / n)
        if epoch_callback is not None:
            epoch_callback(epoch, model)

    report = TrainReport(
        epoch_losses=tuple(epoch_losses),
        dev_accuracy=_accuracy(model, dev_ds),
        config=config,
        wall_time_s=time.perf_counter() - start,
    )
    return model, report


def finetune_on_attacked(baseline: MlpVictim, attacked_train: Dataset,
                         dev: Dataset, config: TrainConfig) -> MlpVictim:
    """Continue training from the baseline's parameters on attacked data."""
    model, _ = train(baseline, baseline.table, attacked_train, dev, config)
    return model


def train_augmented_only(table: EmbeddingTable, attacked_train: Dataset,
                         dev: Dataset, config: TrainConfig,
                         hidden_dim: int = 64) -> MlpVictim:
    """Train a fresh model on attacked data only."""
    fresh = MlpVictim.initialize(table, hidden_dim=hidden_dim,
                                 seed=derive_seed(config.seed, "init"))
    model, _ = train(fresh, table, attacked_train, dev, config)
    return model
