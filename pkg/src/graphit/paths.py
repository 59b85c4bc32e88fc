"""Per-node substructure features from short simple paths.

Each node u is described by the sum, over all simple paths of at most
`path_size` nodes starting at u, of a kernel embedding of the path's label
sequence:

    X(u) = sum over paths p from u of  N^{-1/2} kappa(Z, psi_raw(p))

where psi_raw(p) concatenates one-hot label encodings along the path
(zero-padded to path_size slots, then l2-normalized), Z holds m anchor
vectors fitted by spherical k-means, kappa(a, b) = exp((a.b - 1) / sigma^2)
is the Gaussian kernel restricted to unit-norm inputs, and N = kappa(Z Z^T)
+ eps*I is the anchor Gram whose inverse square root whitens the feature map
(the Nystrom approximation of the kernel's RKHS embedding).

Paths are node-simple: no node repeats. A path of a single node always
exists, so every node gets at least one contribution.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .graphs import Graph, adjacency_lists
from .spectral import symmetric_eig

GRAM_RIDGE = 1e-6


def enumerate_paths(g: Graph, u: int, k_max: int) -> list[tuple[int, ...]]:
    """All simple paths of 1..k_max nodes starting at u.

    Depth-first, extending by ascending neighbor index, so the order is
    deterministic: each path appears immediately before its extensions.
    """
    if not (0 <= u < g.n):
        raise ValueError(f"node {u} out of range for n={g.n}")
    if k_max < 1:
        raise ValueError("k_max must be >= 1")
    nbrs = adjacency_lists(g)
    out: list[tuple[int, ...]] = []
    path = [u]
    on_path = [False] * g.n
    on_path[u] = True

    def rec():
        out.append(tuple(path))
        if len(path) == k_max:
            return
        for w in nbrs[path[-1]]:
            if not on_path[w]:
                path.append(w)
                on_path[w] = True
                rec()
                on_path[w] = False
                path.pop()

    rec()
    return out


def path_features(g: Graph, path: tuple[int, ...], vocab_size: int,
                  k_max: int) -> np.ndarray:
    """Concatenated one-hot labels along the path, padded and l2-normalized.

    The vector has k_max * vocab_size entries; slots past the path's length
    stay zero. A path of j nodes has raw norm sqrt(j), so normalization makes
    paths of different lengths comparable.
    """
    q = k_max * vocab_size
    x = np.zeros(q)
    for slot, node in enumerate(path):
        lab = g.node_labels[node]
        if lab >= vocab_size:
            raise ValueError(f"node label {lab} outside vocabulary of size {vocab_size}")
        x[slot * vocab_size + lab] = 1.0
    norm = np.linalg.norm(x)
    if norm > 0:
        x /= norm
    return x


@dataclass(frozen=True)
class NystromEmbedding:
    """Fitted anchor set for the path kernel feature map.

    anchors: (m, q) rows, l2-normalized.
    sigma: kernel bandwidth.
    normalizer: (kappa(Z Z^T) + ridge I)^{-1/2}, symmetric PSD.
    path_size / vocab_size: the feature layout the anchors were fitted on,
    kept so a mismatched graph vocabulary is rejected instead of silently
    misread.
    """

    anchors: np.ndarray
    sigma: float
    normalizer: np.ndarray
    path_size: int
    vocab_size: int

    @property
    def n_anchors(self) -> int:
        return self.anchors.shape[0]

    def kernel_against_anchors(self, feats: np.ndarray) -> np.ndarray:
        """kappa(Z, x) for each row x of feats; returns (len(feats), m)."""
        return np.exp((feats @ self.anchors.T - 1.0) / (self.sigma ** 2))

    def save(self, path) -> None:
        np.savez(
            path,
            anchors=self.anchors,
            sigma=np.array([self.sigma]),
            normalizer=self.normalizer,
            path_size=np.array([self.path_size]),
            vocab_size=np.array([self.vocab_size]),
        )

    @staticmethod
    def load(path) -> "NystromEmbedding":
        with np.load(path) as z:
            return NystromEmbedding(
                anchors=z["anchors"],
                sigma=float(z["sigma"][0]),
                normalizer=z["normalizer"],
                path_size=int(z["path_size"][0]),
                vocab_size=int(z["vocab_size"][0]),
            )


def _spherical_kmeans(samples: np.ndarray, m: int, rng: np.random.Generator,
                      max_iter: int = 100) -> np.ndarray:
    """Cosine-distance k-means on l2-normalized rows, seeded init by sampling.

    Fewer than m distinct samples falls back to cycling duplicates. Empty
    clusters keep their previous centroid.
    """
    n = samples.shape[0]
    distinct = np.unique(samples, axis=0)
    if distinct.shape[0] >= m:
        idx = rng.choice(n, size=m, replace=False)
        centers = samples[idx].copy()
        # re-draw collided picks from the distinct pool for a full-rank start
        if np.unique(centers, axis=0).shape[0] < m:
            pick = rng.permutation(distinct.shape[0])[:m]
            centers = distinct[pick].copy()
    else:
        reps = int(np.ceil(m / distinct.shape[0]))
        centers = np.tile(distinct, (reps, 1))[:m].copy()
    assign = None
    for _ in range(max_iter):
        sims = samples @ centers.T
        new_assign = np.argmax(sims, axis=1)
        if assign is not None and np.array_equal(new_assign, assign):
            break
        assign = new_assign
        for j in range(m):
            members = samples[assign == j]
            if members.shape[0] == 0:
                continue
            c = members.mean(axis=0)
            norm = np.linalg.norm(c)
            if norm > 1e-12:
                centers[j] = c / norm
    return centers


def fit_unsupervised(samples: np.ndarray, m: int, sigma: float,
                     seed: int) -> NystromEmbedding:
    """Fit anchors to a sample of path-feature vectors without labels.

    Raises on an empty sample set or non-positive bandwidth. The trailing
    feature-layout fields are inferred later by the caller via
    `with_layout`; use `fit_path_embedding` for the end-to-end version.
    """
    samples = np.asarray(samples, dtype=float)
    if samples.ndim != 2 or samples.shape[0] == 0:
        raise ValueError("need a non-empty 2-D sample matrix")
    if sigma <= 0:
        raise ValueError("bandwidth sigma must be positive")
    if m < 1:
        raise ValueError("need at least one anchor")
    rng = np.random.default_rng(seed)
    anchors = _spherical_kmeans(samples, m, rng)
    gram = np.exp((anchors @ anchors.T - 1.0) / (sigma ** 2))
    gram = gram + GRAM_RIDGE * np.eye(m)
    eig = symmetric_eig(gram)
    w = np.maximum(eig.eigenvalues, GRAM_RIDGE / 2)
    v = eig.eigenvectors
    normalizer = (v / np.sqrt(w)) @ v.T
    normalizer = 0.5 * (normalizer + normalizer.T)
    return NystromEmbedding(anchors, float(sigma), normalizer,
                            path_size=0, vocab_size=0)


def sample_path_features(graphs, vocab_size: int, k_max: int,
                         rng: np.random.Generator,
                         max_samples: int = 100_000) -> np.ndarray:
    """Path-feature vectors pooled over graphs, subsampled when too many."""
    feats = []
    for g in graphs:
        for u in range(g.n):
            for p in enumerate_paths(g, u, k_max):
                feats.append(path_features(g, p, vocab_size, k_max))
    feats = np.array(feats)
    if feats.shape[0] > max_samples:
        idx = rng.choice(feats.shape[0], size=max_samples, replace=False)
        feats = feats[idx]
    return feats


def fit_path_embedding(graphs, vocab_size: int, k_max: int, m: int,
                       sigma: float, seed: int,
                       max_samples: int = 100_000) -> NystromEmbedding:
    """Enumerate, sample, and fit in one step; records the feature layout."""
    rng = np.random.default_rng(seed)
    samples = sample_path_features(graphs, vocab_size, k_max, rng, max_samples)
    emb = fit_unsupervised(samples, m, sigma, seed)
    return NystromEmbedding(emb.anchors, emb.sigma, emb.normalizer,
                            path_size=k_max, vocab_size=vocab_size)


def embed_nodes(g: Graph, emb: NystromEmbedding, k_max: int | None = None,
                vocab_size: int | None = None) -> np.ndarray:
    """Per-node feature rows X(u), shape (n, m).

    k_max/vocab_size default to the layout recorded at fit time; passing
    values that disagree with the anchors' dimension is an error.
    """
    k_max = emb.path_size if k_max is None else k_max
    vocab_size = emb.vocab_size if vocab_size is None else vocab_size
    q = k_max * vocab_size
    if q != emb.anchors.shape[1]:
        raise ValueError(
            f"feature layout {k_max}x{vocab_size} does not match anchors of "
            f"dimension {emb.anchors.shape[1]}"
        )
    out = np.zeros((g.n, emb.n_anchors))
    for u in range(g.n):
        paths = enumerate_paths(g, u, k_max)
        feats = np.array([path_features(g, p, vocab_size, k_max) for p in paths])
        k_vals = emb.kernel_against_anchors(feats)  # (n_paths, m)
        out[u] = emb.normalizer @ k_vals.sum(axis=0)
    return out
