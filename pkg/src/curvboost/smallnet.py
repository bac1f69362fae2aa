"""Minimal feedforward network with hand-rolled backpropagation.

Parameters live in one flat partitioned vector (one partition per weight
matrix and per bias), which is exactly the per-tensor granularity the
curvature booster needs. The loss is softmax cross-entropy with the fused
(softmax - onehot) / B output gradient.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .tensorcore import PartitionedParams


@dataclass
class MlpSpec:
    widths: list[int] = field(default_factory=lambda: [2, 32, 32, 3])
    activation: str = "relu"        # hidden-layer activation: relu | tanh | identity

    def validate(self) -> None:
        if len(self.widths) < 2:
            raise ValueError("need at least an input and an output width")
        if self.activation not in ("relu", "tanh", "identity"):
            raise ValueError(f"unknown activation {self.activation!r}")

    @property
    def n_classes(self) -> int:
        return self.widths[-1]


def _act(name: str, h: np.ndarray) -> np.ndarray:
    if name == "relu":
        return np.maximum(h, 0.0)
    if name == "tanh":
        return np.tanh(h)
    return h


def _act_grad(name: str, h: np.ndarray) -> np.ndarray:
    if name == "relu":
        return (h > 0.0).astype(np.float64)
    if name == "tanh":
        return 1.0 - np.tanh(h) ** 2
    return np.ones_like(h)


class Mlp:
    """Fully connected classifier over a flat partitioned parameter vector."""

    def __init__(self, spec: MlpSpec, seed: int = 0):
        spec.validate()
        self.spec = spec
        rng = np.random.default_rng(seed)
        segments = []
        for i, (n_in, n_out) in enumerate(zip(spec.widths[:-1], spec.widths[1:]), start=1):
            bound = np.sqrt(6.0 / (n_in + n_out))
            segments.append((f"W{i}", rng.uniform(-bound, bound, size=(n_out, n_in))))
            segments.append((f"b{i}", np.zeros(n_out)))
        self.params = PartitionedParams.from_segments(segments)

    @property
    def layout(self) -> PartitionedParams:
        return self.params

    def _unpack(self, theta: np.ndarray):
        layers = []
        widths = self.spec.widths
        off = 0
        for n_in, n_out in zip(widths[:-1], widths[1:]):
            W = theta[off:off + n_out * n_in].reshape(n_out, n_in)
            off += n_out * n_in
            b = theta[off:off + n_out]
            off += n_out
            layers.append((W, b))
        return layers

    def forward(self, theta: np.ndarray, X: np.ndarray):
        """Returns (logits, cache); cache holds activations and pre-activations
        layer by layer for the backward pass."""
        layers = self._unpack(theta)
        a = np.asarray(X, dtype=np.float64)
        if a.shape[1] != self.spec.widths[0]:
            raise ValueError(f"input width {a.shape[1]}, expected {self.spec.widths[0]}")
        activations = [a]
        pre_activations = []
        n_layers = len(layers)
        for i, (W, b) in enumerate(layers):
            h = a @ W.T + b
            pre_activations.append(h)
            a = h if i == n_layers - 1 else _act(self.spec.activation, h)
            activations.append(a)
        return activations[-1], (activations, pre_activations)

    def loss_and_grad(self, theta: np.ndarray, X: np.ndarray, y: np.ndarray):
        """Mean softmax cross-entropy and its gradient as a flat vector."""
        logits, (activations, pre_activations) = self.forward(theta, X)
        B = X.shape[0]
        shifted = logits - logits.max(axis=1, keepdims=True)
        logsumexp = np.log(np.exp(shifted).sum(axis=1))
        loss = float(np.mean(logsumexp - shifted[np.arange(B), y]))
        probs = np.exp(shifted)
        probs /= probs.sum(axis=1, keepdims=True)
        delta = probs
        delta[np.arange(B), y] -= 1.0
        delta /= B
        layers = self._unpack(theta)
        grads = [None] * len(layers)
        for i in range(len(layers) - 1, -1, -1):
            W, _ = layers[i]
            grads[i] = (delta.T @ activations[i], delta.sum(axis=0))
            if i > 0:
                delta = (delta @ W) * _act_grad(self.spec.activation, pre_activations[i - 1])
        flat = np.concatenate([np.concatenate([gW.ravel(), gb]) for gW, gb in grads])
        return loss, flat

    def loss(self, theta: np.ndarray, X: np.ndarray, y: np.ndarray) -> float:
        logits, _ = self.forward(theta, X)
        shifted = logits - logits.max(axis=1, keepdims=True)
        logsumexp = np.log(np.exp(shifted).sum(axis=1))
        return float(np.mean(logsumexp - shifted[np.arange(X.shape[0]), y]))

    def accuracy(self, theta: np.ndarray, X: np.ndarray, y: np.ndarray) -> float:
        logits, _ = self.forward(theta, X)
        return float(np.mean(logits.argmax(axis=1) == y))


@dataclass
class BlobConfig:
    n_train: int = 3000
    n_test: int = 1000
    n_classes: int = 3
    dim: int = 2
    center_scale: float = 2.0
    spread: float = 1.0

    def validate(self) -> None:
        if self.n_train < 1 or self.n_test < 1 or self.n_classes < 2 or self.dim < 1:
            raise ValueError("invalid blob dataset sizes")
        if self.spread <= 0 or self.center_scale <= 0:
            raise ValueError("spread and center scale must be positive")


def make_blobs(cfg: BlobConfig, seed: int):
    """Gaussian-cluster classification data, balanced within +-1 per class.

    Returns (X_train, y_train, X_test, y_test); deterministic given the seed.
    """
    cfg.validate()
    rng = np.random.default_rng(seed)
    centers = rng.uniform(-cfg.center_scale, cfg.center_scale,
                          size=(cfg.n_classes, cfg.dim))

    def split(n):
        base, extra = divmod(n, cfg.n_classes)
        counts = [base + (1 if c < extra else 0) for c in range(cfg.n_classes)]
        xs, ys = [], []
        for c, cnt in enumerate(counts):
            xs.append(centers[c] + rng.normal(0.0, cfg.spread, size=(cnt, cfg.dim)))
            ys.append(np.full(cnt, c, dtype=np.int64))
        X = np.concatenate(xs)
        y = np.concatenate(ys)
        order = rng.permutation(n)
        return X[order], y[order]

    X_train, y_train = split(cfg.n_train)
    X_test, y_test = split(cfg.n_test)
    return X_train, y_train, X_test, y_test


def epoch_batches(n: int, batch_size: int, rng: np.random.Generator) -> list[np.ndarray]:
    """A seeded permutation of range(n) split into batches; the last batch may
    be smaller, and batch_size > n collapses to a single batch."""
    if batch_size < 1:
        raise ValueError("batch size must be positive")
    perm = rng.permutation(n)
    return [perm[i:i + batch_size] for i in range(0, n, batch_size)]
