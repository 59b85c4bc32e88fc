"""Transformer encoder over graphs with kernel-modulated self-attention.

Attention scores use a single shared projection for queries and keys, so the
logit matrix Q Q^T / sqrt(d_head) is symmetric and itself a positive definite
kernel on node pairs. Per head:

    out = l1_normalize_rows( exp(Q Q^T / sqrt(d_head)) .* K ) @ V

where K is a kernel-on-graph Gram matrix. With K all-ones this is exactly
softmax attention; with K the identity each node attends only to itself.
A constant per-row shift (the row max of the logits) is subtracted before
exponentiation; it cancels in the normalization and prevents overflow.

The attention contribution enters the residual stream scaled per node by
deg^{-1/2} (degree-0 nodes get 0) when degree scaling is on, damping hub
nodes. Layers are post-norm with a 2x-wide relu feed-forward block.

Batches pad node counts to the largest graph; padded kernel rows/columns are
zero except a unit diagonal, which keeps padded rows inert (they attend only
to themselves and carry zero value rows) without masking logic inside ops.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import autodiff as ad
from .autodiff import Tensor
from .kernels import KernelSpec

POOLINGS = ("mean", "sum", "max")
STRUCTURES = ("none", "lappe", "gckn")
TASKS = ("classify", "regress")


@dataclass(frozen=True)
class ModelConfig:
    """Architecture plus the structural-information choices.

    kernel None means vanilla softmax attention (internally the all-ones
    kernel). degree_scaling None resolves to "on exactly when a kernel is
    configured". The feed-forward hidden width is fixed at twice d_model.
    """

    layers: int
    heads: int
    d_model: int
    pooling: str = "mean"
    kernel: KernelSpec | None = None
    structure: str = "none"
    lappe_dim: int = 2
    gckn_path_size: int = 5
    gckn_filters: int = 32
    gckn_sigma: float = 0.6
    degree_scaling: bool | None = None
    task: str = "classify"
    n_classes: int = 2
    dropout: float = 0.0
    negative_kernel: str = "clamp"  # or "reject"

    def __post_init__(self):
        if self.layers < 1:
            raise ValueError("need at least one encoder layer")
        if self.heads < 1 or self.d_model < 1 or self.d_model % self.heads:
            raise ValueError("d_model must be a positive multiple of heads")
        if self.pooling not in POOLINGS:
            raise ValueError(f"pooling must be one of {POOLINGS}")
        if self.structure not in STRUCTURES:
            raise ValueError(f"structure must be one of {STRUCTURES}")
        if self.task not in TASKS:
            raise ValueError(f"task must be one of {TASKS}")
        if self.task == "classify" and self.n_classes < 2:
            raise ValueError("classification needs at least two classes")
        if not (0.0 <= self.dropout < 1.0):
            raise ValueError("dropout must lie in [0, 1)")
        if self.structure == "lappe" and self.lappe_dim < 1:
            raise ValueError("lappe_dim must be >= 1")
        if self.structure == "gckn":
            if self.gckn_path_size < 1 or self.gckn_filters < 1:
                raise ValueError("gckn path size and filter count must be >= 1")
            if self.gckn_sigma <= 0:
                raise ValueError("gckn bandwidth must be positive")
        if self.negative_kernel not in ("clamp", "reject"):
            raise ValueError("negative_kernel must be 'clamp' or 'reject'")

    @property
    def ffn_dim(self) -> int:
        return 2 * self.d_model

    @property
    def head_dim(self) -> int:
        return self.d_model // self.heads

    @property
    def use_degree_scaling(self) -> bool:
        if self.degree_scaling is None:
            return self.kernel is not None
        return self.degree_scaling

    @property
    def out_dim(self) -> int:
        return self.n_classes if self.task == "classify" else 1

    def input_dim(self, vocab_size: int) -> int:
        extra = 0
        if self.structure == "lappe":
            extra = self.lappe_dim
        elif self.structure == "gckn":
            extra = self.gckn_filters
        return vocab_size + extra


def build_input_features(one_hot: np.ndarray, cfg: ModelConfig,
                         lappe: np.ndarray | None = None,
                         lappe_signs: np.ndarray | None = None,
                         gckn_rows: np.ndarray | None = None) -> np.ndarray:
    """Assemble the raw per-node feature matrix the input projection consumes.

    lappe_signs is a +-1 vector with one entry per eigenvector column; the
    caller draws fresh signs per graph per batch during training and passes
    all +1 at evaluation time.
    """
    parts = [one_hot]
    if cfg.structure == "lappe":
        if lappe is None:
            raise ValueError("config asks for Laplacian coordinates but none were given")
        pe = lappe if lappe_signs is None else lappe * np.asarray(lappe_signs)[None, :]
        parts.append(pe)
    elif cfg.structure == "gckn":
        if gckn_rows is None:
            raise ValueError("config asks for path features but no fitted embedding rows were given")
        parts.append(gckn_rows)
    return np.concatenate(parts, axis=1)


@dataclass(frozen=True)
class GraphBatch:
    """Padded batch: features (B,N,f), mask (B,N), kernels (B,N,N),
    residual scale (B,N,1), targets (B,)."""

    features: np.ndarray
    mask: np.ndarray
    kernels: np.ndarray
    res_scale: np.ndarray
    targets: np.ndarray
    sizes: tuple[int, ...]


def build_batch(feature_mats: list[np.ndarray], kernel_mats: list[np.ndarray],
                degrees: list[np.ndarray], targets, cfg: ModelConfig) -> GraphBatch:
    """Pad features/kernels/degrees to the batch's max node count.

    Kernel entries are clamped at zero (or rejected, per config) so the
    Hadamard modulation keeps its smoothing interpretation; padded rows get
    identity kernel rows, zero features, and zero residual scale.
    """
    b = len(feature_mats)
    sizes = tuple(f.shape[0] for f in feature_mats)
    n_max = max(sizes)
    f_dim = feature_mats[0].shape[1]
    features = np.zeros((b, n_max, f_dim))
    mask = np.zeros((b, n_max), dtype=bool)
    kernels = np.tile(np.eye(n_max), (b, 1, 1))
    res_scale = np.zeros((b, n_max, 1))
    for i, (feats, kern, deg) in enumerate(zip(feature_mats, kernel_mats, degrees)):
        n = sizes[i]
        features[i, :n] = feats
        mask[i, :n] = True
        if np.min(kern) < 0:
            if cfg.negative_kernel == "reject":
                raise ValueError(
                    "kernel matrix has negative entries and config says reject"
                )
            kern = np.maximum(kern, 0.0)
        kernels[i, :n, :n] = kern
        if cfg.use_degree_scaling:
            d = np.asarray(deg, dtype=float)
            scale = np.zeros(n)
            nz = d > 0
            scale[nz] = 1.0 / np.sqrt(d[nz])
            res_scale[i, :n, 0] = scale
        else:
            res_scale[i, :n, 0] = 1.0
    return GraphBatch(features, mask, kernels, res_scale,
                      np.asarray(targets), sizes)


def _xavier(rng: np.random.Generator, fan_in: int, fan_out: int) -> np.ndarray:
    a = np.sqrt(6.0 / (fan_in + fan_out))
    return rng.uniform(-a, a, size=(fan_in, fan_out))


def pos_attention(q: Tensor, v: Tensor, kernel: Tensor) -> tuple[Tensor, Tensor]:
    """Kernel-modulated attention for one head.

    q, v: (..., N, d_head) with shared query/key projection already applied;
    kernel: (..., N, N) nonnegative Gram matrix. Returns (output, attention)
    where attention = l1_normalize_rows(exp(q q^T / sqrt(d_head)) .* kernel).

    The row max of the logits is subtracted as a constant before exp; the
    division cancels it exactly, so this equals the unshifted expression
    while never overflowing.
    """
    d_head = q.value.shape[-1]
    logits = ad.scale(ad.matmul(q, ad.transpose_last2(q)), 1.0 / np.sqrt(d_head))
    shift = ad.constant(-logits.value.max(axis=-1, keepdims=True))
    scores = ad.mul(ad.exp(ad.add(logits, shift)), kernel)
    attn = ad.row_l1_normalize(scores)
    return ad.matmul(attn, v), attn


class GraphiT:
    """The encoder: input projection, L kernel-attention layers, pooling, head."""

    def __init__(self, cfg: ModelConfig, in_dim: int, seed: int = 0,
                 zero_attention: bool = False):
        self.cfg = cfg
        self.in_dim = in_dim
        rng = np.random.default_rng(seed)
        d = cfg.d_model
        dh = cfg.head_dim
        p: dict[str, Tensor] = {}
        p["input.w"] = ad.parameter(_xavier(rng, in_dim, d), "input.w")
        p["input.b"] = ad.parameter(np.zeros(d), "input.b")
        for i in range(cfg.layers):
            for h in range(cfg.heads):
                q = np.zeros((d, dh)) if zero_attention else _xavier(rng, d, dh)
                p[f"layer{i}.q{h}"] = ad.parameter(q, f"layer{i}.q{h}")
                p[f"layer{i}.v{h}"] = ad.parameter(_xavier(rng, d, dh), f"layer{i}.v{h}")
            p[f"layer{i}.attn_out.w"] = ad.parameter(_xavier(rng, d, d), f"layer{i}.attn_out.w")
            p[f"layer{i}.attn_out.b"] = ad.parameter(np.zeros(d), f"layer{i}.attn_out.b")
            p[f"layer{i}.ln1.g"] = ad.parameter(np.ones(d), f"layer{i}.ln1.g")
            p[f"layer{i}.ln1.b"] = ad.parameter(np.zeros(d), f"layer{i}.ln1.b")
            p[f"layer{i}.ffn.w1"] = ad.parameter(_xavier(rng, d, cfg.ffn_dim), f"layer{i}.ffn.w1")
            p[f"layer{i}.ffn.b1"] = ad.parameter(np.zeros(cfg.ffn_dim), f"layer{i}.ffn.b1")
            p[f"layer{i}.ffn.w2"] = ad.parameter(_xavier(rng, cfg.ffn_dim, d), f"layer{i}.ffn.w2")
            p[f"layer{i}.ffn.b2"] = ad.parameter(np.zeros(d), f"layer{i}.ffn.b2")
            p[f"layer{i}.ln2.g"] = ad.parameter(np.ones(d), f"layer{i}.ln2.g")
            p[f"layer{i}.ln2.b"] = ad.parameter(np.zeros(d), f"layer{i}.ln2.b")
        p["head.w"] = ad.parameter(_xavier(rng, d, cfg.out_dim), "head.w")
        p["head.b"] = ad.parameter(np.zeros(cfg.out_dim), "head.b")
        self.params = p

    def parameter_arrays(self) -> dict[str, np.ndarray]:
        return {k: t.value.copy() for k, t in self.params.items()}

    def load_parameter_arrays(self, arrays: dict[str, np.ndarray]) -> None:
        missing = set(self.params) ^ set(arrays)
        if missing:
            raise ValueError(f"parameter names do not match checkpoint: {sorted(missing)}")
        for k, t in self.params.items():
            if t.value.shape != arrays[k].shape:
                raise ValueError(f"shape mismatch for {k}: {t.value.shape} vs {arrays[k].shape}")
            t.value = arrays[k].astype(float).copy()

    def _dropout(self, x: Tensor, rng: np.random.Generator | None) -> Tensor:
        p = self.cfg.dropout
        if p <= 0.0 or rng is None:
            return x
        keep = (rng.random(x.value.shape) >= p) / (1.0 - p)
        return ad.mul(x, ad.constant(keep))

    def _attention(self, i: int, x: Tensor, kernels: Tensor,
                   collect: list | None) -> Tensor:
        cfg = self.cfg
        heads = []
        head_attn = []
        for h in range(cfg.heads):
            q = ad.matmul(x, self.params[f"layer{i}.q{h}"])
            v = ad.matmul(x, self.params[f"layer{i}.v{h}"])
            out, attn = pos_attention(q, v, kernels)
            if collect is not None:
                head_attn.append(attn.value)
            heads.append(out)
        if collect is not None:
            collect.append(np.mean(head_attn, axis=0))
        cat = heads[0] if len(heads) == 1 else ad.concat(heads, axis=-1)
        return ad.add(ad.matmul(cat, self.params[f"layer{i}.attn_out.w"]),
                      self.params[f"layer{i}.attn_out.b"])

    def _encoder_layer(self, i: int, x: Tensor, kernels: Tensor,
                       res_scale: np.ndarray, rng, collect) -> Tensor:
        attn_out = self._attention(i, x, kernels, collect)
        attn_out = self._dropout(attn_out, rng)
        scaled = ad.mul(attn_out, ad.constant(res_scale))
        x = ad.layer_norm(ad.add(x, scaled),
                          self.params[f"layer{i}.ln1.g"], self.params[f"layer{i}.ln1.b"])
        hidden = ad.relu(ad.add(ad.matmul(x, self.params[f"layer{i}.ffn.w1"]),
                                self.params[f"layer{i}.ffn.b1"]))
        hidden = self._dropout(hidden, rng)
        ff = ad.add(ad.matmul(hidden, self.params[f"layer{i}.ffn.w2"]),
                    self.params[f"layer{i}.ffn.b2"])
        return ad.layer_norm(ad.add(x, ff),
                             self.params[f"layer{i}.ln2.g"], self.params[f"layer{i}.ln2.b"])

    def forward(self, batch: GraphBatch, rng: np.random.Generator | None = None,
                collect_attention: list | None = None) -> Tensor:
        """Predictions: (B, C) logits for classification, (B, 1) for regression.

        Pass `collect_attention=[]` to receive one head-averaged (B, N, N)
        attention matrix per layer (padded rows attend to themselves).
        """
        cfg = self.cfg
        x = ad.add(ad.matmul(ad.constant(batch.features), self.params["input.w"]),
                   self.params["input.b"])
        kernels = ad.constant(batch.kernels)
        for i in range(cfg.layers):
            x = self._encoder_layer(i, x, kernels, batch.res_scale, rng,
                                    collect_attention)
        if cfg.pooling == "mean":
            pooled = ad.mean_nodes(x, batch.mask)
        elif cfg.pooling == "sum":
            pooled = ad.sum_nodes(x, batch.mask)
        else:
            pooled = ad.max_nodes(x, batch.mask)
        return ad.add(ad.matmul(pooled, self.params["head.w"]), self.params["head.b"])

    def export_attention(self, features: np.ndarray, kernel_values: np.ndarray,
                         degrees: np.ndarray) -> list[np.ndarray]:
        """Head-averaged attention per layer for one graph, rows summing to 1."""
        batch = build_batch([features], [kernel_values], [degrees],
                            np.zeros(1), self.cfg)
        collected: list[np.ndarray] = []
        self.forward(batch, collect_attention=collected)
        n = features.shape[0]
        return [m[0, :n, :n] for m in collected]


ATTENTION_DUMP_VERSION = 1


def write_attention_dump(fp, graph_id: int, matrices: list[np.ndarray]) -> None:
    """Attention export file: versioned header, then one N x N block per layer.

    Header line: `version=<v> graph=<id> layers=<L> n=<N>`; each block is N
    lines of comma-separated values, blocks in layer order with no separator.
    """
    n = matrices[0].shape[0]
    fp.write(f"version={ATTENTION_DUMP_VERSION} graph={graph_id} "
             f"layers={len(matrices)} n={n}\n")
    for mat in matrices:
        for row in mat:
            fp.write(",".join(f"{x:.17g}" for x in row) + "\n")


def read_attention_dump(fp) -> tuple[int, list[np.ndarray]]:
    """Inverse of write_attention_dump; returns (graph_id, matrices)."""
    kv = dict(item.split("=", 1) for item in fp.readline().split())
    if int(kv["version"]) != ATTENTION_DUMP_VERSION:
        raise ValueError(f"unsupported attention dump version {kv['version']}")
    layers, n = int(kv["layers"]), int(kv["n"])
    mats = []
    for _ in range(layers):
        rows = [[float(x) for x in fp.readline().split(",")] for _ in range(n)]
        mats.append(np.array(rows))
    return int(kv["graph"]), mats
