"""Turbulence-strength classification with a small from-scratch CNN.

The classifier maps a received 8-bit petal image to one of the discrete
cn2 labels.  Architecture, fixed:

    input (h x w, pixels/255)
    -> conv 5x5, nf filters, stride 1, zero padding 2, ReLU
    -> max pool 2x2
    -> fully connected, 100 units, ReLU
    -> fully connected, n_classes units, softmax

Training is plain mini-batch SGD on the softmax cross entropy.  Everything
is numpy; the convolution runs as an im2col matrix product and the whole
forward/backward pass is deterministic for a given rng_seed (batch order
is the shuffled image-index order, reductions are numpy sums over
fixed-layout arrays).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from .channel import LinkSetup
from .errors import DegenerateDataset, EmptyDataset, ShapeMismatch
from .optics import Image8
from .rng import derive_seed, philox
from .turbulence import draw_seed, synthesize_screen

LABEL_START = 0.5e-11
LABEL_STEP = 0.2179e-11
LABEL_COUNT = 40


@dataclass(frozen=True)
class LabelGrid:
    """The 40 discrete cn2 class values, arithmetic with step 0.2179e-11."""

    values: np.ndarray

    def nearest(self, cn2: float) -> int:
        return int(np.argmin(np.abs(self.values - cn2)))


def label_grid() -> LabelGrid:
    return LabelGrid(LABEL_START + LABEL_STEP * np.arange(LABEL_COUNT))


@dataclass(frozen=True)
class Dataset:
    """Stack of received images with integer labels.

    label_values maps label index to the cn2 each class was generated at;
    a profile may train on a subset of the full grid, so its length is the
    class count of the model trained from it.
    """

    images: np.ndarray  # (N, h, w) uint8
    labels: np.ndarray  # (N,) int
    label_values: np.ndarray
    ell: int
    base_seed: int

    def __len__(self) -> int:
        return len(self.labels)


def generate_dataset(
    setup: LinkSetup,
    label_values: np.ndarray,
    ell: int,
    per_label: int,
    base_seed: int,
) -> Dataset:
    """per_label received images for each label value.

    Image j of label i runs the full pipeline (mode mask, first leg, a
    fresh screen at that label's cn2, second leg, quantization) with
    screen seed derive_seed(base_seed, i, j).  Disjoint base seeds give
    disjoint screen ensembles, which is how train and test pools are kept
    separate.
    """
    if per_label < 1:
        raise EmptyDataset(f"per_label must be >= 1, got {per_label}")
    theta = setup.ideal_mask(ell).theta
    n = setup.grid.n
    count = len(label_values) * per_label
    images = np.empty((count, n, n), dtype=np.uint8)
    labels = np.empty(count, dtype=np.int64)
    pos = 0
    for i, cn2 in enumerate(label_values):
        spectrum = setup.spectrum(float(cn2))
        for j in range(per_label):
            seed = draw_seed(derive_seed(base_seed, i, j), setup.grid)
            screen = synthesize_screen(seed, spectrum)
            images[pos] = setup.received_image(theta, screen).pixels
            labels[pos] = i
            pos += 1
    return Dataset(images, labels, np.asarray(label_values, dtype=np.float64), int(ell), int(base_seed))


def subset_per_label(pool: Dataset, per_label: int, rng_seed: int) -> Dataset:
    """Random per-class subsample of a larger pool (without replacement)."""
    rng = philox(rng_seed)
    keep: list[np.ndarray] = []
    for i in range(len(pool.label_values)):
        idx = np.flatnonzero(pool.labels == i)
        if len(idx) < per_label:
            raise EmptyDataset(
                f"label {i} has {len(idx)} images, need {per_label}"
            )
        chosen = rng.permutation(len(idx))[:per_label]
        keep.append(idx[np.sort(chosen)])
    order = np.concatenate(keep)
    return Dataset(
        pool.images[order], pool.labels[order], pool.label_values, pool.ell, pool.base_seed
    )


@dataclass(frozen=True)
class TrainConfig:
    """SGD settings; per_label, when set, subsamples the pool first.

    step_final, when set, decays the step geometrically from step to
    step_final over the epochs; None keeps it constant.
    """

    per_label: int | None = None
    epochs: int = 30
    batch: int = 32
    step: float = 0.01
    step_final: float | None = None
    nf: int = 8
    rng_seed: int = 0


@dataclass
class CnnModel:
    """Weights plus the label values the output units stand for.

    The architecture fields (input side, nf, class count) are fixed at
    construction; training updates the weight arrays in place under
    single ownership.
    """

    side: int
    nf: int
    label_values: np.ndarray
    conv_w: np.ndarray  # (nf, 25)
    conv_b: np.ndarray  # (nf,)
    fc1_w: np.ndarray   # (flat, 100)
    fc1_b: np.ndarray   # (100,)
    fc2_w: np.ndarray   # (100, K)
    fc2_b: np.ndarray   # (K,)

    @property
    def n_classes(self) -> int:
        return len(self.label_values)

    @property
    def flat_size(self) -> int:
        return self.nf * (self.side // 2) ** 2


def init_model(side: int, nf: int, label_values: np.ndarray, rng_seed: int) -> CnnModel:
    """He-scaled Gaussian init for the ReLU layers, smaller for the head."""
    rng = philox(derive_seed(rng_seed, "init"))
    flat = nf * (side // 2) ** 2
    k = len(label_values)
    return CnnModel(
        side=side,
        nf=nf,
        label_values=np.asarray(label_values, dtype=np.float64),
        conv_w=rng.normal(0.0, np.sqrt(2.0 / 25.0), (nf, 25)),
        conv_b=np.zeros(nf),
        fc1_w=rng.normal(0.0, np.sqrt(2.0 / flat), (flat, 100)),
        fc1_b=np.zeros(100),
        fc2_w=rng.normal(0.0, np.sqrt(1.0 / 100.0), (100, k)),
        fc2_b=np.zeros(k),
    )


def _im2col(x: np.ndarray) -> np.ndarray:
    """(B, h, w) -> (B, h*w, 25) of 5x5 neighborhoods, zero padded by 2."""
    b, h, w = x.shape
    padded = np.pad(x, ((0, 0), (2, 2), (2, 2)))
    win = sliding_window_view(padded, (5, 5), axis=(1, 2))
    return win.reshape(b, h * w, 25)


def _forward(model: CnnModel, x: np.ndarray) -> dict[str, np.ndarray]:
    """All intermediate activations for a batch x of shape (B, h, w)."""
    b, h, w = x.shape
    cols = _im2col(x)
    conv = cols @ model.conv_w.T + model.conv_b          # (B, h*w, nf)
    relu1 = np.maximum(conv, 0.0)
    # pool 2x2: expose the four pool positions as a trailing axis
    r = relu1.reshape(b, h, w, model.nf)
    blocks = r.reshape(b, h // 2, 2, w // 2, 2, model.nf)
    blocks = blocks.transpose(0, 1, 3, 5, 2, 4).reshape(
        b, h // 2, w // 2, model.nf, 4
    )
    pool_arg = np.argmax(blocks, axis=-1)
    pooled = np.take_along_axis(blocks, pool_arg[..., None], axis=-1)[..., 0]
    flat = pooled.reshape(b, -1)
    z1 = flat @ model.fc1_w + model.fc1_b
    a1 = np.maximum(z1, 0.0)
    logits = a1 @ model.fc2_w + model.fc2_b
    shifted = logits - logits.max(axis=1, keepdims=True)
    expd = np.exp(shifted)
    probs = expd / expd.sum(axis=1, keepdims=True)
    return {
        "cols": cols, "conv": conv, "blocks": blocks, "pool_arg": pool_arg,
        "flat": flat, "z1": z1, "a1": a1, "logits": logits, "probs": probs,
    }


def _backward(
    model: CnnModel, cache: dict[str, np.ndarray], labels: np.ndarray
) -> dict[str, np.ndarray]:
    """Mean cross-entropy gradients for one batch."""
    b, hw, nf = cache["conv"].shape
    h = w = model.side
    probs = cache["probs"]
    dlogits = probs.copy()
    dlogits[np.arange(b), labels] -= 1.0
    dlogits /= b
    g_fc2_w = cache["a1"].T @ dlogits
    g_fc2_b = dlogits.sum(axis=0)
    da1 = dlogits @ model.fc2_w.T
    dz1 = da1 * (cache["z1"] > 0.0)
    g_fc1_w = cache["flat"].T @ dz1
    g_fc1_b = dz1.sum(axis=0)
    dflat = dz1 @ model.fc1_w.T
    dpooled = dflat.reshape(b, h // 2, w // 2, nf)
    dblocks = np.zeros_like(cache["blocks"])
    np.put_along_axis(dblocks, cache["pool_arg"][..., None], dpooled[..., None], axis=-1)
    # undo the pooling reshape back to (B, h*w, nf)
    drelu = (
        dblocks.reshape(b, h // 2, w // 2, nf, 2, 2)
        .transpose(0, 1, 4, 2, 5, 3)
        .reshape(b, hw, nf)
    )
    dconv = drelu * (cache["conv"] > 0.0)
    g_conv_w = np.einsum("bpf,bpc->fc", dconv, cache["cols"])
    g_conv_b = dconv.sum(axis=(0, 1))
    return {
        "conv_w": g_conv_w, "conv_b": g_conv_b,
        "fc1_w": g_fc1_w, "fc1_b": g_fc1_b,
        "fc2_w": g_fc2_w, "fc2_b": g_fc2_b,
    }


def batch_loss(model: CnnModel, x: np.ndarray, labels: np.ndarray) -> float:
    probs = _forward(model, x)["probs"]
    p = np.clip(probs[np.arange(len(labels)), labels], 1e-300, None)
    return float(-np.mean(np.log(p)))


def batch_gradients(
    model: CnnModel, x: np.ndarray, labels: np.ndarray
) -> dict[str, np.ndarray]:
    """Loss gradients for an arbitrary batch; exposed for gradient checks."""
    return _backward(model, _forward(model, x), labels)


def train(
    cfg: TrainConfig, data: Dataset
) -> tuple[CnnModel, list[float]]:
    """SGD training; returns the model and per-epoch mean training loss.

    Batches walk a per-epoch Philox shuffle of the image indices; inside
    a batch the images keep ascending index order so the reduction order
    never depends on thread count or platform.
    """
    if len(data) == 0:
        raise EmptyDataset("cannot train on an empty dataset")
    if cfg.per_label is not None:
        data = subset_per_label(data, cfg.per_label, derive_seed(cfg.rng_seed, "subset"))
    if len(np.unique(data.labels)) < 2:
        raise DegenerateDataset("training needs at least two distinct labels")
    side = data.images.shape[1]
    model = init_model(side, cfg.nf, data.label_values, cfg.rng_seed)
    x_all = data.images.astype(np.float64) / 255.0
    y_all = data.labels
    trace: list[float] = []
    params = ("conv_w", "conv_b", "fc1_w", "fc1_b", "fc2_w", "fc2_b")
    for epoch in range(cfg.epochs):
        step = cfg.step
        if cfg.step_final is not None and cfg.epochs > 1:
            step = cfg.step * (cfg.step_final / cfg.step) ** (
                epoch / (cfg.epochs - 1)
            )
        order = philox(derive_seed(cfg.rng_seed, "epoch", epoch)).permutation(len(data))
        losses = []
        for start in range(0, len(data), cfg.batch):
            idx = np.sort(order[start : start + cfg.batch])
            cache = _forward(model, x_all[idx])
            p = np.clip(cache["probs"][np.arange(len(idx)), y_all[idx]], 1e-300, None)
            losses.append(-np.mean(np.log(p)))
            grads = _backward(model, cache, y_all[idx])
            for name in params:
                getattr(model, name)[...] -= step * grads[name]
        trace.append(float(np.mean(losses)))
    return model, trace


def predict(model: CnnModel, image: Image8) -> tuple[int, float]:
    """Class index and its cn2 for one image; ties break to the lowest index."""
    if image.shape != (model.side, model.side):
        raise ShapeMismatch(
            f"image shape {image.shape} does not match model side {model.side}"
        )
    x = image.pixels.astype(np.float64)[None, :, :] / 255.0
    probs = _forward(model, x)["probs"][0]
    label = int(np.argmax(probs))
    return label, float(model.label_values[label])


def predict_probs(model: CnnModel, image: Image8) -> np.ndarray:
    """Full softmax vector (sums to 1 within 1e-9)."""
    x = image.pixels.astype(np.float64)[None, :, :] / 255.0
    return _forward(model, x)["probs"][0]


@dataclass(frozen=True)
class EvalReport:
    top1: float
    within_one: float
    confusion: np.ndarray
    count: int


def evaluate(model: CnnModel, data: Dataset) -> EvalReport:
    """Top-1 and within-one-class accuracy plus the confusion matrix."""
    if len(data) == 0:
        raise EmptyDataset("cannot evaluate on an empty dataset")
    x = data.images.astype(np.float64) / 255.0
    k = model.n_classes
    confusion = np.zeros((k, k), dtype=np.int64)
    preds = np.empty(len(data), dtype=np.int64)
    # batch the forward passes to bound im2col memory
    for start in range(0, len(data), 64):
        probs = _forward(model, x[start : start + 64])["probs"]
        preds[start : start + len(probs)] = np.argmax(probs, axis=1)
    for t, p in zip(data.labels, preds):
        confusion[t, p] += 1
    top1 = float(np.mean(preds == data.labels))
    within = float(np.mean(np.abs(preds - data.labels) <= 1))
    return EvalReport(top1, within, confusion, len(data))
