"""Training for small quadratic-activation networks.

The network alternates affine layers with elementwise squaring on every
hidden layer; the output layer feeds a softmax used only by the loss.
This mirrors the architecture the verified-inference tooling accepts, so
an exported model can be quantized and proven without modification.

Optimization is minibatch adaptive-gradient descent (per-parameter
accumulated squared gradients) with global-norm gradient clipping.
Everything is deterministic for a fixed config: one process, one RNG.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, replace

import numpy as np

from .datasets import class_count, input_feature_count, load_dataset


class ConfigError(ValueError):
    """Raised when a TrainConfig cannot describe a valid network."""


class DivergenceError(RuntimeError):
    """Raised when the training loss stops being finite."""


@dataclass(frozen=True)
class TrainConfig:
    """Everything that determines a training run.

    widths is the full layer chain including input and output sizes,
    e.g. (64, 32, 10) for one hidden layer of 32 units on the digit set.
    """

    dataset: str = "digits"
    widths: tuple[int, ...] = (64, 32, 10)
    epochs: int = 30
    learning_rate: float = 0.01
    clip_norm: float = 1.0
    seed: int = 0
    out_path: str | None = None
    samples_per_class: int = 100
    batch_size: int = 32
    val_fraction: float = 0.2
    # Max |weight| per layer in the exported file (None exports raw weights).
    # Rescaling layers is exactly argmax-preserving (see normalize_weight_range)
    # and makes small integer scale factors usable downstream.
    weight_range: float | None = 8.0

    def validate(self) -> None:
        if self.dataset not in ("digits", "blobs"):
            raise ConfigError(
                f"unknown dataset {self.dataset!r} (expected 'digits' or 'blobs')"
            )
        if len(self.widths) < 3:
            raise ConfigError(
                "widths must list input, at least one hidden layer, and output; "
                f"got {self.widths}"
            )
        if any(w < 1 for w in self.widths):
            raise ConfigError(f"layer widths must be positive; got {self.widths}")
        expected_in = input_feature_count(self.dataset)
        expected_out = class_count(self.dataset)
        if self.widths[0] != expected_in:
            raise ConfigError(
                f"dataset {self.dataset!r} has {expected_in} features but "
                f"widths[0] is {self.widths[0]}"
            )
        if self.widths[-1] != expected_out:
            raise ConfigError(
                f"dataset {self.dataset!r} has {expected_out} classes but "
                f"widths[-1] is {self.widths[-1]}"
            )
        if self.epochs < 1:
            raise ConfigError("epochs must be at least 1")
        if self.learning_rate <= 0:
            raise ConfigError("learning rate must be positive")
        if self.clip_norm <= 0:
            raise ConfigError("clip norm must be positive")
        if self.batch_size < 1:
            raise ConfigError("batch size must be at least 1")
        if not 0.0 < self.val_fraction < 1.0:
            raise ConfigError("val fraction must lie strictly between 0 and 1")
        if self.samples_per_class < 2:
            raise ConfigError("need at least 2 samples per class")
        if self.weight_range is not None and self.weight_range <= 0:
            raise ConfigError("weight range must be positive (or None to disable)")


@dataclass
class EpochMetrics:
    epoch: int
    loss: float
    train_accuracy: float
    val_accuracy: float
    grad_norm_max: float


class QuadraticNet:
    """Affine layers with elementwise squaring between them.

    Weights are stored as (n_out, n_in) matrices; data flows column-major
    (one sample per column), so a layer computes z = W @ y + b and hidden
    layers continue with y = z * z.
    """

    def __init__(self, widths, rng: np.random.Generator | None = None):
        widths = tuple(int(w) for w in widths)
        if len(widths) < 2:
            raise ConfigError("a network needs at least two widths (input, output)")
        self.widths = widths
        self.weights: list[np.ndarray] = []
        self.biases: list[np.ndarray] = []
        for n_in, n_out in zip(widths[:-1], widths[1:]):
            if rng is None:
                w = np.zeros((n_out, n_in))
            else:
                # Small init keeps the squared activations from blowing up
                # in the first few steps.
                w = rng.normal(0.0, 0.5 / math.sqrt(n_in), size=(n_out, n_in))
            self.weights.append(w)
            self.biases.append(np.zeros(n_out))

    @property
    def num_layers(self) -> int:
        return len(self.weights)

    def forward(self, x: np.ndarray):
        """Return (pre_activations, layer_inputs) for every layer.

        layer_inputs[i] is what layer i consumed; pre_activations[i] is
        its affine output.  The last pre-activation is the logits block.
        """
        if x.ndim != 2 or x.shape[0] != self.widths[0]:
            raise ValueError(
                f"input must have shape ({self.widths[0]}, batch); got {x.shape}"
            )
        inputs = [x]
        pre = []
        y = x
        for i, (w, b) in enumerate(zip(self.weights, self.biases)):
            z = w @ y + b[:, None]
            pre.append(z)
            if i + 1 < self.num_layers:
                y = z * z
                inputs.append(y)
        return pre, inputs

    def logits(self, x: np.ndarray) -> np.ndarray:
        pre, _ = self.forward(x)
        return pre[-1]

    def predict(self, x: np.ndarray) -> np.ndarray:
        return np.argmax(self.logits(x), axis=0)


def _softmax(z: np.ndarray) -> np.ndarray:
    shifted = z - z.max(axis=0, keepdims=True)
    e = np.exp(shifted)
    return e / e.sum(axis=0, keepdims=True)


def _loss_and_grads(net: QuadraticNet, x: np.ndarray, labels: np.ndarray):
    """Mean cross-entropy over the batch plus gradients for every parameter.

    Saturated or overflowing activations surface as an inf/nan loss,
    which the caller reports as divergence; numpy's overflow warnings
    are silenced because the loss check is the real signal.
    """
    with np.errstate(divide="ignore", over="ignore", invalid="ignore"):
        pre, inputs = net.forward(x)
        batch = x.shape[1]
        probs = _softmax(pre[-1])
        picked = probs[labels, np.arange(batch)]
        loss = float(-np.log(picked).mean())

        dz = probs.copy()
        dz[labels, np.arange(batch)] -= 1.0
        dz /= batch

        grads_w = [None] * net.num_layers
        grads_b = [None] * net.num_layers
        for i in reversed(range(net.num_layers)):
            grads_w[i] = dz @ inputs[i].T
            grads_b[i] = dz.sum(axis=1)
            if i > 0:
                dy = net.weights[i].T @ dz
                # y = z*z on the previous layer, so dy/dz = 2z.
                dz = dy * (2.0 * pre[i - 1])
    return loss, grads_w, grads_b


def _clip_global_norm(grads_w, grads_b, clip_norm: float) -> float:
    total_sq = 0.0
    for g in grads_w + grads_b:
        total_sq += float((g * g).sum())
    norm = math.sqrt(total_sq)
    if norm > clip_norm:
        scale = clip_norm / norm
        for g in grads_w + grads_b:
            g *= scale
        return clip_norm
    return norm


def _accuracy(net: QuadraticNet, x: np.ndarray, labels: np.ndarray) -> float:
    return float((net.predict(x) == labels).mean())


def train_toy_model(cfg: TrainConfig):
    """Train per cfg and return (net, per-epoch metrics).

    If cfg.out_path is set, the final model is also exported there.
    Raises DivergenceError as soon as the loss stops being finite.
    """
    cfg.validate()
    x, labels = load_dataset(
        cfg.dataset, n_per_class=cfg.samples_per_class, seed=cfg.seed
    )
    n = x.shape[1]
    n_val = max(1, int(round(n * cfg.val_fraction)))
    x_val, y_val = x[:, :n_val], labels[:n_val]
    x_train, y_train = x[:, n_val:], labels[n_val:]

    rng = np.random.default_rng(cfg.seed + 0x5EED)
    net = QuadraticNet(cfg.widths, rng)

    accum_w = [np.zeros_like(w) for w in net.weights]
    accum_b = [np.zeros_like(b) for b in net.biases]
    eps = 1e-8

    metrics: list[EpochMetrics] = []
    n_train = x_train.shape[1]
    for epoch in range(1, cfg.epochs + 1):
        order = rng.permutation(n_train)
        epoch_loss = 0.0
        grad_norm_max = 0.0
        n_batches = 0
        for start in range(0, n_train, cfg.batch_size):
            idx = order[start : start + cfg.batch_size]
            loss, grads_w, grads_b = _loss_and_grads(net, x_train[:, idx], y_train[idx])
            if not math.isfinite(loss):
                raise DivergenceError(
                    f"loss became non-finite ({loss}) in epoch {epoch}"
                )
            norm = _clip_global_norm(grads_w, grads_b, cfg.clip_norm)
            grad_norm_max = max(grad_norm_max, norm)
            for i in range(net.num_layers):
                accum_w[i] += grads_w[i] * grads_w[i]
                accum_b[i] += grads_b[i] * grads_b[i]
                net.weights[i] -= cfg.learning_rate * grads_w[i] / (
                    np.sqrt(accum_w[i]) + eps
                )
                net.biases[i] -= cfg.learning_rate * grads_b[i] / (
                    np.sqrt(accum_b[i]) + eps
                )
            epoch_loss += loss
            n_batches += 1
        metrics.append(
            EpochMetrics(
                epoch=epoch,
                loss=epoch_loss / max(1, n_batches),
                train_accuracy=_accuracy(net, x_train, y_train),
                val_accuracy=_accuracy(net, x_val, y_val),
                grad_norm_max=grad_norm_max,
            )
        )

    if cfg.out_path is not None:
        exported = net
        if cfg.weight_range is not None:
            exported = normalize_weight_range(net, cfg.weight_range)
        export_model(exported, cfg.out_path)
    return net, metrics


def normalize_weight_range(net: QuadraticNet, target: float) -> QuadraticNet:
    """Rescale each layer so its largest |weight| equals target.

    Scaling layer i's weights by a gain g_i multiplies its pre-activation
    by g_i; squaring turns that into g_i^2 on the next layer's input, so
    carrying the cumulative factor into each bias keeps every layer's
    pre-activation an exact positive multiple of the original.  Argmax
    predictions are therefore unchanged, while the exported weights span
    a range that survives coarse integer scaling.
    """
    if target <= 0:
        raise ValueError("target weight range must be positive")
    out = QuadraticNet(net.widths)
    input_scale = 1.0
    for i, (w, b) in enumerate(zip(net.weights, net.biases)):
        peak = float(np.abs(w).max())
        gain = target / peak if peak > 0 else 1.0
        out.weights[i] = w * gain
        out.biases[i] = b * (gain * input_scale)
        input_scale = (gain * input_scale) ** 2
    return out


def model_document(net: QuadraticNet) -> dict:
    """The exported JSON document for a trained network.

    Matches the float-model schema the verified-inference tooling loads:
    a "layers" list alternating linear entries (row-major flattened
    weights plus a bias vector) with bare {"type": "quad"} activation
    markers between them.
    """
    entries = []
    for i, (w, b) in enumerate(zip(net.weights, net.biases)):
        if i:
            entries.append({"type": "quad"})
        entries.append(
            {
                "type": "linear",
                "rows": int(w.shape[0]),
                "cols": int(w.shape[1]),
                "weights": [float(v) for v in w.reshape(-1)],
                "bias": [float(v) for v in b],
            }
        )
    return {"layers": entries}


def export_model(net: QuadraticNet, path: str) -> None:
    """Write the network as a float-model JSON file.

    The serialization is plain json.dump of Python floats, so a fixed
    network always produces identical bytes.
    """
    doc = model_document(net)
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(doc, fh)


def import_model(path: str) -> QuadraticNet:
    """Rebuild a QuadraticNet from an exported float-model file."""
    with open(path, encoding="utf-8") as fh:
        doc = json.load(fh)
    if not isinstance(doc, dict) or not isinstance(doc.get("layers"), list):
        raise ValueError(f"{path}: not a float-model document")
    linear = [e for e in doc["layers"] if e.get("type") == "linear"]
    if not linear:
        raise ValueError(f"{path}: document has no linear layers")
    widths = [int(linear[0]["cols"])] + [int(e["rows"]) for e in linear]
    net = QuadraticNet(widths)
    for i, entry in enumerate(linear):
        rows, cols = int(entry["rows"]), int(entry["cols"])
        w = np.array(entry["weights"], dtype=np.float64).reshape(rows, cols)
        b = np.array(entry["bias"], dtype=np.float64)
        if w.shape != net.weights[i].shape or b.shape != net.biases[i].shape:
            raise ValueError(f"{path}: layer {i} shape mismatch")
        net.weights[i] = w
        net.biases[i] = b
    return net


def save_input_batch(x: np.ndarray, path: str) -> None:
    """Write a sample batch as the plain 2-D JSON array the inference
    tooling reads: one row per feature, one column per sample."""
    doc = [[float(v) for v in row] for row in x]
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(doc, fh)


def config_with_overrides(cfg: TrainConfig, **kwargs) -> TrainConfig:
    return replace(cfg, **kwargs)
