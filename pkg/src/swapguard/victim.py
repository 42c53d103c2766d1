"""Victim interface, pooled-embedding features, trainable MLP classifier.

The built-in victim is a one-hidden-layer tanh MLP over a 4d feature vector
[mean(premise); mean(hypothesis); |diff|; product]. It exposes cross-entropy
loss, a Gaussian-noise loss, their convex combination, and exact analytic
gradients for all parameters.
"""

import json
from dataclasses import dataclass
from pathlib import Path
from typing import Protocol

import numpy as np

from .corpus import EntailmentExample, flatten_dialogue
from .embedding import EmbeddingTable
from .tokenization import tokenize

CHECKPOINT_MAGIC = "PBVICTIM1"


class CheckpointFormatError(ValueError):
    """Raised when a model checkpoint file is malformed."""

LOSS_CE = "ce"
LOSS_EP = "ep"

NOISE_SITES = ("representation", "logits")


class VictimInterface(Protocol):
    """Black-box query surface every attack target must provide."""

    def predict_proba(self, dialogue: str, hypothesis: str) -> tuple[float, float]:
        """Return (p_false, p_true); non-negative, summing to 1."""
        ...


@dataclass(frozen=True)
class NoiseSpec:
    """Where and how Gaussian noise is injected for the perturbation loss."""
    site: str = "representation"
    mean: float = 0.0
    std_dev: float = 1.0
    seed: int = 0

    def __post_init__(self):
        if self.site not in NOISE_SITES:
            raise ValueError(f"site must be one of {NOISE_SITES}, got {self.site!r}")
        if self.std_dev < 0:
            raise ValueError("std_dev must be >= 0")

    def draw(self, size) -> np.ndarray:
        return np.random.default_rng(self.seed).normal(self.mean, self.std_dev, size)


# --------------------------------------------------------------------------
# Features

def _pool(table: EmbeddingTable, text: str) -> np.ndarray:
    vecs = [table.vector(t.text) for t in tokenize(text) if t.text in table]
    if not vecs:
        return np.zeros(table.dim)
    return np.mean(vecs, axis=0)


def featurize_pair(table: EmbeddingTable, premise: str, hypothesis: str) -> np.ndarray:
    """4d feature vector [u; v; |u - v|; u * v] from mean-pooled embeddings."""
    u = _pool(table, premise)
    v = _pool(table, hypothesis)
    return np.concatenate([u, v, np.abs(u - v), u * v])


def featurize(table: EmbeddingTable, example: EntailmentExample) -> np.ndarray:
    return featurize_pair(table, flatten_dialogue(example), example.hypothesis)


# --------------------------------------------------------------------------
# Model

class MlpVictim:
    """One-hidden-layer tanh MLP over pooled-embedding features."""

    activation = "tanh"

    def __init__(self, table: EmbeddingTable, W1: np.ndarray, b1: np.ndarray,
                 W2: np.ndarray, b2: np.ndarray):
        W1 = np.array(W1, dtype=np.float64)
        b1 = np.array(b1, dtype=np.float64)
        W2 = np.array(W2, dtype=np.float64)
        b2 = np.array(b2, dtype=np.float64)
        h, d_in = W1.shape
        if b1.shape != (h,) or W2.shape != (2, h) or b2.shape != (2,):
            raise ValueError("inconsistent parameter shapes")
        if d_in != 4 * table.dim:
            raise ValueError(f"input dim {d_in} does not match 4 x table dim {4 * table.dim}")
        for arr in (W1, b1, W2, b2):
            if not np.all(np.isfinite(arr)):
                raise ValueError("parameters must be finite")
        self.table = table
        self.W1, self.b1, self.W2, self.b2 = W1, b1, W2, b2
        self._pool_cache: dict[str, np.ndarray] = {}

    @classmethod
    def initialize(cls, table: EmbeddingTable, hidden_dim: int = 64, seed: int = 0) -> "MlpVictim":
        rng = np.random.default_rng(seed)
        d_in = 4 * table.dim
        return cls(
            table,
            rng.uniform(-0.1, 0.1, (hidden_dim, d_in)),
            rng.uniform(-0.1, 0.1, hidden_dim),
            rng.uniform(-0.1, 0.1, (2, hidden_dim)),
            rng.uniform(-0.1, 0.1, 2),
        )

    @property
    def hidden_dim(self) -> int:
        return self.W1.shape[0]

    @property
    def input_dim(self) -> int:
        return self.W1.shape[1]

    def params(self) -> dict[str, np.ndarray]:
        return {"W1": self.W1, "b1": self.b1, "W2": self.W2, "b2": self.b2}

    def copy(self) -> "MlpVictim":
        return MlpVictim(self.table, self.W1.copy(), self.b1.copy(),
                         self.W2.copy(), self.b2.copy())

    def forward(self, x: np.ndarray) -> np.ndarray:
        x = np.asarray(x, dtype=np.float64)
        if x.shape != (self.input_dim,):
            raise ValueError(f"expected feature vector of shape ({self.input_dim},), got {x.shape}")
        return self.W2 @ np.tanh(self.W1 @ x + self.b1) + self.b2

    def _pooled(self, text: str) -> np.ndarray:
        hit = self._pool_cache.get(text)
        if hit is None:
            if len(self._pool_cache) >= 100_000:
                self._pool_cache.clear()
            hit = _pool(self.table, text)
            self._pool_cache[text] = hit
        return hit

    def features(self, premise: str, hypothesis: str) -> np.ndarray:
        u = self._pooled(premise)
        v = self._pooled(hypothesis)
        return np.concatenate([u, v, np.abs(u - v), u * v])

    def predict_proba(self, dialogue: str, hypothesis: str) -> tuple[float, float]:
        p = softmax(self.forward(self.features(dialogue, hypothesis)))
        return float(p[0]), float(p[1])

    def predict(self, dialogue: str, hypothesis: str) -> bool:
        p_false, p_true = self.predict_proba(dialogue, hypothesis)
        return p_true > p_false

    def predict_example(self, example: EntailmentExample) -> bool:
        return self.predict(flatten_dialogue(example), example.hypothesis)

    def save(self, path) -> None:
        payload = {
            "format": CHECKPOINT_MAGIC,
            "input_dim": self.input_dim,
            "hidden_dim": self.hidden_dim,
            "activation": self.activation,
            "W1": self.W1.tolist(),
            "b1": self.b1.tolist(),
            "W2": self.W2.tolist(),
            "b2": self.b2.tolist(),
        }
        Path(path).write_text(json.dumps(payload, indent=2) + "\n", encoding="utf-8")

    @classmethod
    def load(cls, path, table: EmbeddingTable) -> "MlpVictim":
        data = json.loads(Path(path).read_text(encoding="utf-8"))
        if not isinstance(data, dict) or data.get("format") != CHECKPOINT_MAGIC:
            raise CheckpointFormatError(f"{path}: not a {CHECKPOINT_MAGIC} checkpoint")
        if data.get("activation") != cls.activation:
            raise CheckpointFormatError(
                f"{path}: unsupported activation {data.get('activation')!r}")
        try:
            model = cls(table, np.array(data["W1"]), np.array(data["b1"]),
                        np.array(data["W2"]), np.array(data["b2"]))
            if (model.input_dim != data["input_dim"]
                    or model.hidden_dim != data["hidden_dim"]):
                raise ValueError("declared dims do not match parameter shapes")
        except (KeyError, TypeError, ValueError) as exc:
            raise CheckpointFormatError(f"{path}: {exc}") from exc
        return model


# --------------------------------------------------------------------------
# Losses

def softmax(logits: np.ndarray) -> np.ndarray:
    z = np.asarray(logits, dtype=np.float64)
    z = z - z.max()
    e = np.exp(z)
    return e / e.sum()


def ce_loss(logits, y: bool) -> float:
    """Cross entropy -log softmax(logits)[y], computed stably."""
    z = np.asarray(logits, dtype=np.float64)
    if z.shape != (2,):
        raise ValueError(f"expected two logits, got shape {z.shape}")
    m = z.max()
    lse = m + np.log(np.exp(z - m).sum())
    return float(lse - z[int(y)])


def noise_loss(model: MlpVictim, x: np.ndarray, y: bool, noise: NoiseSpec) -> float:
    """Cross entropy under additive Gaussian noise at the configured site."""
    if noise.site == "representation":
        delta = noise.draw(model.input_dim)
        return ce_loss(model.forward(x + delta), y)
    delta = noise.draw(2)
    return ce_loss(model.forward(x) + delta, y)


def ep_loss(model: MlpVictim, x: np.ndarray, y: bool, alpha: float, noise: NoiseSpec) -> float:
    """(1 - alpha) * clean cross entropy + alpha * noise-corrupted cross entropy."""
    if not 0.0 <= alpha <= 1.0:
        raise ValueError("alpha must be in [0, 1]")
    return (1.0 - alpha) * ce_loss(model.forward(x), y) + alpha * noise_loss(model, x, y, noise)


# --------------------------------------------------------------------------
# Gradients

def _grads_single(model: MlpVictim, x: np.ndarray, y: bool,
                  delta: np.ndarray | None, site: str | None) -> dict[str, np.ndarray]:
    x_eff = x + delta if (delta is not None and site == "representation") else x
    z1 = model.W1 @ x_eff + model.b1
    h = np.tanh(z1)
    logits = model.W2 @ h + model.b2
    if delta is not None and site == "logits":
        logits = logits + delta
    g = softmax(logits)
    g[int(y)] -= 1.0
    dz1 = (model.W2.T @ g) * (1.0 - h * h)
    return {
        "W1": np.outer(dz1, x_eff),
        "b1": dz1,
        "W2": np.outer(g, h),
        "b2": g,
    }


def grad(model: MlpVictim, x: np.ndarray, y: bool, loss_mode: str = LOSS_CE,
         alpha: float = 0.5, noise: NoiseSpec | None = None) -> dict[str, np.ndarray]:
    """Analytic gradient of the selected loss w.r.t. all parameters.

    In EP mode the noise draw is treated as a constant, and the same draw
    that ep_loss would make is used, so grad is the exact derivative of
    ep_loss for a fixed NoiseSpec.
    """
    x = np.asarray(x, dtype=np.float64)
    if loss_mode == LOSS_CE:
        return _grads_single(model, x, y, None, None)
    if loss_mode != LOSS_EP:
        raise ValueError(f"unknown loss mode {loss_mode!r}")
    if noise is None:
        raise ValueError("EP mode requires a NoiseSpec")
    if not 0.0 <= alpha <= 1.0:
        raise ValueError("alpha must be in [0, 1]")
    size = model.input_dim if noise.site == "representation" else 2
    delta = noise.draw(size)
    clean = _grads_single(model, x, y, None, None)
    noisy = _grads_single(model, x, y, delta, noise.site)
    return {k: (1.0 - alpha) * clean[k] + alpha * noisy[k] for k in clean}


# --------------------------------------------------------------------------
# Vectorized batch path used by the trainer

def batch_loss_and_grads(model: MlpVictim, X: np.ndarray, y_idx: np.ndarray,
                         loss_mode: str = LOSS_CE, alpha: float = 0.5,
                         delta: np.ndarray | None = None,
                         site: str = "representation"
                         ) -> tuple[float, dict[str, np.ndarray]]:
    """Mean loss and mean-gradient over a batch.

    ``delta`` holds one noise row per example (n x input_dim for the
    representation site, n x 2 for logits); required in EP mode.
    """
    n = X.shape[0]

    def pass_through(X_eff, logit_delta=None):
        Z1 = X_eff @ model.W1.T + model.b1
        H = np.tanh(Z1)
        L = H @ model.W2.T + model.b2
        if logit_delta is not None:
            L = L + logit_delta
        M = L.max(axis=1, keepdims=True)
        E = np.exp(L - M)
        P = E / E.sum(axis=1, keepdims=True)
        lse = M[:, 0] + np.log(E.sum(axis=1))
        losses = lse - L[np.arange(n), y_idx]
        G = P.copy()
        G[np.arange(n), y_idx] -= 1.0
        dZ1 = (G @ model.W2) * (1.0 - H * H)
        grads = {
            "W1": dZ1.T @ X_eff / n,
            "b1": dZ1.mean(axis=0),
            "W2": G.T @ H / n,
            "b2": G.mean(axis=0),
        }
        return float(losses.mean()), grads

    clean_loss, clean_grads = pass_through(X)
    if loss_mode == LOSS_CE:
        return clean_loss, clean_grads
    if loss_mode != LOSS_EP:
        raise ValueError(f"unknown loss mode {loss_mode!r}")
    if delta is None:
        raise ValueError("EP mode requires a noise matrix")
    if site == "representation":
        noisy_loss, noisy_grads = pass_through(X + delta)
    elif site == "logits":
        noisy_loss, noisy_grads = pass_through(X, logit_delta=delta)
    else:
        raise ValueError(f"unknown noise site {site!r}")
    loss = (1.0 - alpha) * clean_loss + alpha * noisy_loss
    grads = {k: (1.0 - alpha) * clean_grads[k] + alpha * noisy_grads[k] for k in clean_grads}
    return loss, grads
