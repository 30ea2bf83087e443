"""Loss, model assembly, evaluation and the mini-batch training loop.

Three pipelines share one loop:

* ``pca-vqc``: fixed PCA projection to 4 features, trainable circuit.
* ``mps-classifier``: MPS with a 2-dim output leg whose outputs are logits.
* ``mps-vqc``: MPS with a 4-dim output leg feeding the circuit, both trained
  together.

Class scores are turned into a loss by softmax cross-entropy.
"""

from __future__ import annotations

import logging
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field, fields
from typing import Callable

import numpy as np

from .data import LabeledDataset
from .errors import ConfigError, InputError, NumericError
from .features import PcaModel, embed_batch, fit_pca, pca_project
from .mps import DEFAULT_OUTPUT_SITE, MpsModel, calibrate_site_scales, init_mps, mps_backward, mps_forward
from .optim import Adam, RMSProp
from .vqc import init_params, vqc_backward, vqc_forward

log = logging.getLogger(__name__)

MODES = ("pca-vqc", "mps-classifier", "mps-vqc")

__all__ = [
    "MODES",
    "TrainConfig",
    "EpochMetrics",
    "HybridModel",
    "TrainResult",
    "loss_and_grad",
    "softmax_cross_entropy",
    "build_model",
    "evaluate",
    "train",
]

_MODE_DEFAULTS = {
    "pca-vqc": dict(chi=None, optimizer="rmsprop", learning_rate=1e-2),
    "mps-classifier": dict(chi=1, optimizer="adam", learning_rate=1e-3),
    "mps-vqc": dict(chi=1, optimizer="adam", learning_rate=1e-4),
}


@dataclass
class TrainConfig:
    """Every knob of a run.  Use :meth:`for_mode` to get per-mode defaults."""

    mode: str = "mps-vqc"
    chi: int | None = 1
    optimizer: str = "adam"
    learning_rate: float = 1e-4
    rmsprop_alpha: float = 0.99
    rmsprop_eps: float = 1e-8
    adam_beta1: float = 0.9
    adam_beta2: float = 0.999
    adam_eps: float = 1e-8
    batch_size: int = 100
    epochs: int = 30
    seed: int = 0
    output_site: int = DEFAULT_OUTPUT_SITE
    init_noise: float = 1e-2
    calibrate_init: bool = True
    vqc_init_scale: float = 0.1
    workers: int = 1

    @classmethod
    def for_mode(cls, mode: str, **overrides) -> TrainConfig:
        if mode not in MODES:
            raise ConfigError(f"unknown mode {mode!r}; choose from {MODES}")
        values = dict(_MODE_DEFAULTS[mode])
        values.update({k: v for k, v in overrides.items() if v is not None})
        cfg = cls(mode=mode, **values)
        cfg.validate()
        return cfg

    def validate(self):
        if self.mode not in MODES:
            raise ConfigError(f"unknown mode {self.mode!r}")
        if self.mode == "pca-vqc" and self.chi is not None:
            raise ConfigError("bond dimension does not apply to pca-vqc")
        if self.mode != "pca-vqc" and (self.chi is None or self.chi < 1):
            raise ConfigError("MPS modes need a bond dimension >= 1")
        if self.optimizer not in ("adam", "rmsprop"):
            raise ConfigError(f"unknown optimizer {self.optimizer!r}")
        if not self.learning_rate > 0:
            raise ConfigError("learning rate must be positive")
        if self.batch_size < 1 or self.epochs < 1 or self.workers < 1:
            raise ConfigError("batch size, epochs and workers must be >= 1")

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def field_types(cls) -> dict[str, str]:
        return {f.name: f.type for f in fields(cls)}


@dataclass(frozen=True)
class EpochMetrics:
    epoch: int
    train_loss: float
    train_acc: float
    test_loss: float
    test_acc: float

    CSV_HEADER = "epoch,train_loss,train_acc,test_loss,test_acc"

    def csv_row(self) -> str:
        return (
            f"{self.epoch},{self.train_loss!r},{self.train_acc!r},"
            f"{self.test_loss!r},{self.test_acc!r}"
        )


def softmax_cross_entropy(scores, labels) -> tuple[np.ndarray, np.ndarray]:
    """Per-sample loss and gradient for a batch of 2-class scores."""
    scores = np.asarray(scores, dtype=np.float64)
    labels = np.asarray(labels, dtype=np.int64)
    if not np.all(np.isfinite(scores)):
        raise NumericError("non-finite class scores")
    shifted = scores - scores.max(axis=-1, keepdims=True)
    log_norm = np.log(np.exp(shifted).sum(axis=-1, keepdims=True))
    log_probs = shifted - log_norm
    idx = np.arange(scores.shape[0])
    losses = -log_probs[idx, labels]
    grads = np.exp(log_probs)
    grads[idx, labels] -= 1.0
    return losses, grads


def loss_and_grad(scores, label: int) -> tuple[float, np.ndarray]:
    """Softmax cross-entropy of one score pair against ``label``."""
    losses, grads = softmax_cross_entropy(np.asarray(scores, dtype=np.float64)[None], [label])
    return float(losses[0]), grads[0]


class HybridModel:
    """Trainable parameters of one pipeline plus the fixed PCA, if any."""

    def __init__(self, mode: str, mps: MpsModel | None = None, vqc_params=None, pca: PcaModel | None = None):
        if mode not in MODES:
            raise ConfigError(f"unknown mode {mode!r}")
        if mode != "pca-vqc" and mps is None:
            raise ConfigError(f"{mode} needs an MPS")
        if mode != "mps-classifier" and vqc_params is None:
            raise ConfigError(f"{mode} needs circuit parameters")
        if mode == "pca-vqc" and pca is None:
            raise ConfigError("pca-vqc needs a fitted PCA")
        if mode == "mps-classifier" and mps.output_dim != 2:
            raise ConfigError("the MPS classifier needs a 2-dim output leg")
        if mode == "mps-vqc" and mps.output_dim != 4:
            raise ConfigError("the MPS feature extractor needs a 4-dim output leg")
        self.mode = mode
        self.mps = mps
        self.vqc_params = None if vqc_params is None else np.array(vqc_params, dtype=np.float64)
        self.pca = pca

    def parameters(self) -> list[np.ndarray]:
        params = [] if self.mps is None else self.mps.parameters()
        if self.vqc_params is not None:
            params.append(self.vqc_params)
        return params

    def mark_modified(self):
        if self.mps is not None:
            self.mps.mark_modified()

    def prepare(self, images: np.ndarray) -> np.ndarray:
        """Map normalized images to model inputs (product states or PCA features)."""
        if self.mode == "pca-vqc":
            return pca_project(self.pca, images)
        return embed_batch(images)

    def scores(self, inputs: np.ndarray) -> np.ndarray:
        if self.mode == "pca-vqc":
            return vqc_forward(inputs, self.vqc_params)
        f, _ = mps_forward(self.mps, inputs)
        return f if self.mode == "mps-classifier" else vqc_forward(f, self.vqc_params)

    def loss_grads(self, inputs: np.ndarray, labels: np.ndarray, scale: float):
        """Summed loss over the chunk and gradients of ``scale * sum(losses)``."""
        if self.mode == "pca-vqc":
            scores = vqc_forward(inputs, self.vqc_params)
            losses, g = softmax_cross_entropy(scores, labels)
            gp, _ = vqc_backward(inputs, self.vqc_params, g * scale)
            return losses.sum(), scores, [gp]
        f, trace = mps_forward(self.mps, inputs)
        if self.mode == "mps-classifier":
            losses, g = softmax_cross_entropy(f, labels)
            gm, _ = mps_backward(self.mps, trace, g * scale)
            return losses.sum(), f, gm.arrays()
        scores = vqc_forward(f, self.vqc_params)
        losses, g = softmax_cross_entropy(scores, labels)
        gp, gx = vqc_backward(f, self.vqc_params, g * scale)
        gm, _ = mps_backward(self.mps, trace, gx)
        return losses.sum(), scores, gm.arrays() + [gp]


def build_model(config: TrainConfig, train_images: np.ndarray | None = None) -> HybridModel:
    """Initialize the model for ``config``; PCA is fit on ``train_images``."""
    config.validate()
    mps_seq, vqc_seq, _ = np.random.SeedSequence(config.seed).spawn(3)
    vqc_params = None
    if config.mode != "mps-classifier":
        vqc_seed = int(vqc_seq.generate_state(1)[0])
        vqc_params = init_params(vqc_seed, scale=config.vqc_init_scale)
    if config.mode == "pca-vqc":
        if train_images is None:
            raise InputError("pca-vqc needs training images to fit the PCA")
        return HybridModel("pca-vqc", vqc_params=vqc_params, pca=fit_pca(train_images))
    n_sites = 784 if train_images is None else np.asarray(train_images).shape[1]
    mps = init_mps(
        n_sites=n_sites,
        chi=config.chi,
        d_out=2 if config.mode == "mps-classifier" else 4,
        output_site=min(config.output_site, n_sites - 1),
        seed=int(mps_seq.generate_state(1)[0]),
        noise=config.init_noise,
        site_scales=(
            calibrate_site_scales(train_images)
            if config.calibrate_init and train_images is not None
            else None
        ),
    )
    return HybridModel(config.mode, mps=mps, vqc_params=vqc_params)


def _shuffle_rng(seed: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence(seed).spawn(3)[2])


def evaluate(model: HybridModel, dataset: LabeledDataset, chunk: int = 500) -> tuple[float, float]:
    """Mean loss and accuracy; ties in the scores count as class 0."""
    if len(dataset) == 0:
        raise InputError("cannot evaluate on an empty dataset")
    total_loss = 0.0
    correct = 0
    for start in range(0, len(dataset), chunk):
        images = dataset.images[start : start + chunk]
        labels = dataset.labels[start : start + chunk]
        scores = model.scores(model.prepare(images))
        losses, _ = softmax_cross_entropy(scores, labels)
        total_loss += losses.sum()
        correct += int(np.sum(np.argmax(scores, axis=1) == labels))
    return float(total_loss / len(dataset)), correct / len(dataset)


def batch_loss_grads(model: HybridModel, images, labels, workers: int = 1, pool=None):
    """Mean loss and mean gradients over one mini-batch.

    With several workers the batch is split into contiguous chunks whose
    gradients are summed in chunk order.
    """
    inputs = model.prepare(images)
    n = len(labels)
    scale = 1.0 / n
    if workers <= 1 or pool is None or n < 2 * workers:
        loss, _, grads = model.loss_grads(inputs, labels, scale)
        return loss / n, grads
    bounds = np.linspace(0, n, workers + 1).astype(int)
    jobs = [
        pool.submit(model.loss_grads, inputs[a:b], labels[a:b], scale)
        for a, b in zip(bounds[:-1], bounds[1:])
        if b > a
    ]
    results = [job.result() for job in jobs]
    loss = sum(r[0] for r in results)
    grads = [np.array(g) for g in results[0][2]]
    for r in results[1:]:
        for acc, g in zip(grads, r[2]):
            acc += g
    return loss / n, grads


@dataclass
class TrainResult:
    config: TrainConfig
    model: HybridModel
    metrics: list[EpochMetrics] = field(default_factory=list)
    wall_seconds: float = 0.0

    @property
    def best_test_acc(self) -> float:
        return max(m.test_acc for m in self.metrics)


def _make_optimizer(config: TrainConfig):
    if config.optimizer == "adam":
        return Adam(config.learning_rate, config.adam_beta1, config.adam_beta2, config.adam_eps)
    return RMSProp(config.learning_rate, config.rmsprop_alpha, config.rmsprop_eps)


def train(
    config: TrainConfig,
    train_set: LabeledDataset,
    test_set: LabeledDataset,
    model: HybridModel | None = None,
    on_epoch: Callable[[EpochMetrics], None] | None = None,
) -> TrainResult:
    """Run the mini-batch loop for ``config.epochs`` epochs.

    Each epoch shuffles the training set with a generator seeded only by
    ``config.seed``, applies one optimizer step per mini-batch using the mean
    gradient, then evaluates the full train and test sets.

    Raises:
        InputError: an empty split.
        NumericError: the MPS sweep overflowed; the message names the epoch
            and step.
    """
    config.validate()
    if len(train_set) == 0 or len(test_set) == 0:
        raise InputError("training and test sets must be non-empty")
    start = time.perf_counter()
    if model is None:
        model = build_model(config, train_set.images)
    optimizer = _make_optimizer(config)
    rng = _shuffle_rng(config.seed)
    result = TrainResult(config, model)
    pool = ThreadPoolExecutor(config.workers) if config.workers > 1 else None
    try:
        for epoch in range(1, config.epochs + 1):
            order = rng.permutation(len(train_set))
            for step, lo in enumerate(range(0, len(order), config.batch_size)):
                idx = order[lo : lo + config.batch_size]
                try:
                    _, grads = batch_loss_grads(
                        model, train_set.images[idx], train_set.labels[idx], config.workers, pool
                    )
                except NumericError as exc:
                    raise NumericError(f"epoch {epoch}, step {step}: {exc}") from exc
                optimizer.step(model.parameters(), grads)
                model.mark_modified()
            tr_loss, tr_acc = evaluate(model, train_set)
            te_loss, te_acc = evaluate(model, test_set)
            metrics = EpochMetrics(epoch, tr_loss, tr_acc, te_loss, te_acc)
            result.metrics.append(metrics)
            log.info(
                "epoch %d  train loss %.4f acc %.4f  test loss %.4f acc %.4f",
                epoch, tr_loss, tr_acc, te_loss, te_acc,
            )
            if on_epoch is not None:
                on_epoch(metrics)
    finally:
        if pool is not None:
            pool.shutdown()
    result.wall_seconds = time.perf_counter() - start
    return result
