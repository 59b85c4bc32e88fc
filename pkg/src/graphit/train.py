"""Training loop, losses, sign-flip augmentation, and the selection protocol.

Protocol per split: train each candidate config on the train fold, score it
by the mean validation metric over its last 50 epochs, retrain the winner on
train+val, and report the mean test metric over the retrain's last 50
epochs. Dataset-level numbers aggregate the per-split estimates as
mean +- standard deviation.

Laplacian-coordinate features are sign-ambiguous, so during training every
batch draws an independent +-1 sign per eigenvector column per graph;
evaluation fixes all signs to +1.

Anything fitted from data (the path-feature anchors) sees the training
indices only; the prepared dataset records which indices fed the fit.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import autodiff as ad
from .data import DatasetBundle, one_hot
from .graphs import degree_vector
from .kernels import KernelSpec, build_kernel, laplacian_pe
from .model import GraphBatch, GraphiT, ModelConfig, build_batch, build_input_features
from .optim import Adam, halving_lr, warmup_lr
from .paths import NystromEmbedding, embed_nodes, fit_path_embedding


@dataclass(frozen=True)
class TrainSettings:
    lr: float = 1e-3
    weight_decay: float = 0.0
    batch_size: int = 32
    epochs: int = 300
    schedule: str = "halving"  # or "warmup"
    warmup_steps: int = 2000
    seed: int = 0

    def __post_init__(self):
        if self.schedule not in ("halving", "warmup"):
            raise ValueError("schedule must be 'halving' or 'warmup'")
        if self.batch_size < 1 or self.epochs < 1:
            raise ValueError("batch_size and epochs must be positive")


@dataclass(frozen=True)
class EpochStat:
    epoch: int
    lr: float
    train_loss: float
    val_metric: float
    test_metric: float


@dataclass(frozen=True)
class RunRecord:
    config_hash: str
    task: str
    epochs: tuple[EpochStat, ...]
    selection_score: float
    test_estimate: float


SELECTION_WINDOW = 50


def selection_score_from(stats, task: str) -> float:
    """Mean validation metric over the final 50 epochs, sign-flipped for
    regression so that higher is always better."""
    window = [s.val_metric for s in stats[-SELECTION_WINDOW:]]
    mean = float(np.mean(window))
    return -mean if task == "regress" else mean


def test_estimate_from(stats) -> float:
    return float(np.mean([s.test_metric for s in stats[-SELECTION_WINDOW:]]))


def compute_loss(task: str, predictions: ad.Tensor, targets: np.ndarray) -> ad.Tensor:
    if task == "classify":
        return ad.cross_entropy_logits(predictions, targets.astype(int))
    return ad.l1_loss(predictions, targets)


@dataclass
class PreparedDataset:
    """Per-graph tensors precomputed once per (bundle, config, train fold)."""

    bundle: DatasetBundle
    cfg: ModelConfig
    features: list[np.ndarray]
    kernel_values: list[np.ndarray]
    degrees: list[np.ndarray]
    lappe: list[np.ndarray] | None
    gckn_rows: list[np.ndarray] | None
    gckn_embedding: NystromEmbedding | None
    fitted_on: tuple[int, ...] | None

    @property
    def in_dim(self) -> int:
        return self.cfg.input_dim(self.bundle.vocab_size)


def prepare_dataset(bundle: DatasetBundle, cfg: ModelConfig,
                    train_idx, seed: int) -> PreparedDataset:
    """One-hot labels, kernel matrices, degrees, and structure encodings.

    The path-feature anchors are fitted exclusively on `train_idx`.
    """
    feats = one_hot(bundle)
    kspec = cfg.kernel if cfg.kernel is not None else KernelSpec.all_ones()
    kernel_values = [build_kernel(g, kspec).values for g in bundle.graphs]
    degrees = [degree_vector(g) for g in bundle.graphs]
    lappe = None
    gckn_rows = None
    gckn_emb = None
    fitted_on = None
    if cfg.structure == "lappe":
        lappe = [laplacian_pe(g, cfg.lappe_dim) for g in bundle.graphs]
    elif cfg.structure == "gckn":
        fitted_on = tuple(sorted(int(i) for i in train_idx))
        train_graphs = [bundle.graphs[i] for i in fitted_on]
        gckn_emb = fit_path_embedding(
            train_graphs, bundle.vocab_size, cfg.gckn_path_size,
            cfg.gckn_filters, cfg.gckn_sigma, seed,
        )
        gckn_rows = [embed_nodes(g, gckn_emb) for g in bundle.graphs]
    return PreparedDataset(bundle, cfg, feats, kernel_values, degrees,
                           lappe, gckn_rows, gckn_emb, fitted_on)


def assemble_batch(prep: PreparedDataset, indices,
                   sign_rng: np.random.Generator | None = None) -> GraphBatch:
    """Build a padded batch; draws fresh Laplacian-coordinate signs when a
    generator is supplied (training), else uses +1 everywhere (evaluation)."""
    cfg = prep.cfg
    feature_mats = []
    for i in indices:
        lappe = prep.lappe[i] if prep.lappe is not None else None
        signs = None
        if lappe is not None and sign_rng is not None:
            signs = sign_rng.choice((-1.0, 1.0), size=cfg.lappe_dim)
        gckn = prep.gckn_rows[i] if prep.gckn_rows is not None else None
        feature_mats.append(
            build_input_features(prep.features[i], cfg, lappe, signs, gckn)
        )
    targets = np.array([prep.bundle.graphs[i].graph_label for i in indices])
    return build_batch(
        feature_mats,
        [prep.kernel_values[i] for i in indices],
        [prep.degrees[i] for i in indices],
        targets,
        cfg,
    )


def evaluate(model: GraphiT, prep: PreparedDataset, indices,
             batch_size: int = 64) -> float:
    """Accuracy for classification, mean absolute error for regression."""
    indices = list(indices)
    if not indices:
        return float("nan")
    correct = 0.0
    abs_err = 0.0
    for start in range(0, len(indices), batch_size):
        chunk = indices[start:start + batch_size]
        batch = assemble_batch(prep, chunk)
        pred = model.forward(batch).value
        if prep.cfg.task == "classify":
            correct += float(np.sum(np.argmax(pred, axis=1) == batch.targets))
        else:
            abs_err += float(np.sum(np.abs(pred.reshape(-1) - batch.targets)))
    if prep.cfg.task == "classify":
        return correct / len(indices)
    return abs_err / len(indices)


def train_one(bundle: DatasetBundle, split, cfg: ModelConfig,
              settings: TrainSettings, config_hash: str = "",
              prep: PreparedDataset | None = None):
    """Run one config on one (train, val, test) split.

    Returns (RunRecord, model, prepared dataset). An empty validation fold
    (the retrain-on-train+val stage) records NaN validation metrics.
    """
    train_idx, val_idx, test_idx = [list(part) for part in split]
    ss = np.random.SeedSequence(settings.seed)
    fit_seed, model_seed, loop_seed = [int(s.generate_state(1)[0]) for s in ss.spawn(3)]
    if prep is None:
        prep = prepare_dataset(bundle, cfg, train_idx, fit_seed)
    model = GraphiT(cfg, prep.in_dim, seed=model_seed)
    adam = Adam(model.params, lr=settings.lr, weight_decay=settings.weight_decay)
    rng = np.random.default_rng(loop_seed)

    stats: list[EpochStat] = []
    step = 0
    for epoch in range(settings.epochs):
        order = rng.permutation(len(train_idx))
        losses = []
        lr_used = 0.0
        for start in range(0, len(order), settings.batch_size):
            chunk = [train_idx[i] for i in order[start:start + settings.batch_size]]
            batch = assemble_batch(prep, chunk, sign_rng=rng)
            adam.zero_grad()
            pred = model.forward(batch, rng=rng if cfg.dropout > 0 else None)
            loss = compute_loss(cfg.task, pred, batch.targets)
            if not math.isfinite(float(loss.value)):
                raise RuntimeError(f"non-finite training loss at epoch {epoch}")
            ad.backward(loss)
            step += 1
            if settings.schedule == "warmup":
                lr_used = warmup_lr(settings.lr, step, settings.warmup_steps)
            else:
                lr_used = halving_lr(settings.lr, epoch)
            adam.step(lr_used)
            losses.append(float(loss.value))
        stats.append(EpochStat(
            epoch=epoch,
            lr=lr_used,
            train_loss=float(np.mean(losses)) if losses else float("nan"),
            val_metric=evaluate(model, prep, val_idx, settings.batch_size),
            test_metric=evaluate(model, prep, test_idx, settings.batch_size),
        ))
    record = RunRecord(
        config_hash=config_hash,
        task=cfg.task,
        epochs=tuple(stats),
        selection_score=selection_score_from(stats, cfg.task),
        test_estimate=test_estimate_from(stats),
    )
    return record, model, prep


def select_and_report(runs: dict[str, RunRecord]) -> str:
    """Pick the winner by selection score; ties break toward the
    lexicographically smallest config hash."""
    if not runs:
        raise ValueError("empty grid: nothing to select from")
    best_hash = None
    best_score = -float("inf")
    for h in sorted(runs):
        score = runs[h].selection_score
        if score > best_score:
            best_score = score
            best_hash = h
    return best_hash


def aggregate_estimates(estimates) -> tuple[float, float]:
    """Mean and standard deviation of per-split test estimates."""
    arr = np.asarray(list(estimates), dtype=float)
    return float(arr.mean()), float(arr.std())


def write_run_record(record: RunRecord, fp) -> None:
    """One epoch per line: epoch, lr, train loss, val metric, test metric."""
    for s in record.epochs:
        fp.write(
            f"epoch={s.epoch} lr={s.lr:.10g} train_loss={s.train_loss:.10g} "
            f"val_metric={s.val_metric:.10g} test_metric={s.test_metric:.10g}\n"
        )


def read_run_record(fp, config_hash: str, task: str) -> RunRecord:
    stats = []
    for line in fp:
        line = line.strip()
        if not line:
            continue
        kv = dict(item.split("=", 1) for item in line.split())
        stats.append(EpochStat(
            epoch=int(kv["epoch"]),
            lr=float(kv["lr"]),
            train_loss=float(kv["train_loss"]),
            val_metric=float(kv["val_metric"]),
            test_metric=float(kv["test_metric"]),
        ))
    return RunRecord(
        config_hash=config_hash,
        task=task,
        epochs=tuple(stats),
        selection_score=selection_score_from(stats, task),
        test_estimate=test_estimate_from(stats),
    )
