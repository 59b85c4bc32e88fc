"""Dataset loading: TU-style classification sets and the ZINC regression subset.

TU layout (the de-facto text format, 1-indexed on disk, 0-indexed here):

    NAME_A.txt                edge list "u, v", global node ids
    NAME_graph_indicator.txt  line i: graph id of node i
    NAME_graph_labels.txt     line g: class label of graph g
    NAME_node_labels.txt      line i: discrete label of node i

Directed duplicates (u,v)/(v,u) merge into one undirected edge. Node and
graph labels are remapped to dense ids (0..V-1 / 0..C-1) in ascending order
of the raw values, with the mapping kept on the bundle.

ZINC container (documented here; `scripts/fetch_datasets.py` builds it from
the public sources):

    ZINC_graphs.jsonl   one object per line:
                        {"nodes": [atom_type, ...],
                         "edges": [[u, v], ...],   # 0-indexed, undirected
                         "y": float}               # constrained solubility
    ZINC_train.index    newline-separated indices into the jsonl
    ZINC_val.index
    ZINC_test.index

Edge bond types are not part of the container; they are dropped at
conversion time.
"""
from __future__ import annotations

import json
import os
from dataclasses import dataclass

import numpy as np

from .graphs import Graph


class DataError(RuntimeError):
    pass


@dataclass
class DatasetBundle:
    name: str
    graphs: list[Graph]
    vocab_size: int
    task: str  # "classify" | "regress"
    n_classes: int | None
    node_label_map: dict[int, int]
    class_map: dict[int, int] | None

    def targets(self) -> np.ndarray:
        return np.array([g.graph_label for g in self.graphs])


@dataclass(frozen=True)
class SplitPlan:
    """Ten (train, val, test) index triples partitioning the dataset."""

    dataset: str
    seed: int
    triples: tuple[tuple[tuple[int, ...], tuple[int, ...], tuple[int, ...]], ...]


def _read_int_lines(path, what: str) -> list[int]:
    out = []
    with open(path) as fp:
        for ln, line in enumerate(fp, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                out.append(int(float(line)) if "." in line else int(line))
            except ValueError:
                raise DataError(f"{path}:{ln}: expected an integer {what}, got {line!r}")
    return out


def load_tu(directory, name: str) -> DatasetBundle:
    """Load a TU-format classification dataset from `directory`."""
    paths = {
        key: os.path.join(directory, f"{name}_{key}.txt")
        for key in ("A", "graph_indicator", "graph_labels", "node_labels")
    }
    for key, path in paths.items():
        if not os.path.exists(path):
            raise DataError(f"missing dataset file {path}")

    indicator = _read_int_lines(paths["graph_indicator"], "graph id")
    raw_graph_labels = _read_int_lines(paths["graph_labels"], "graph label")
    raw_node_labels = _read_int_lines(paths["node_labels"], "node label")
    n_nodes = len(indicator)
    if len(raw_node_labels) != n_nodes:
        raise DataError(
            f"{name}: {n_nodes} nodes in the indicator but "
            f"{len(raw_node_labels)} node labels"
        )
    n_graphs = max(indicator)
    if sorted(set(indicator)) != list(range(1, n_graphs + 1)):
        raise DataError(f"{name}: graph indicator ids are not contiguous from 1")
    if len(raw_graph_labels) != n_graphs:
        raise DataError(
            f"{name}: {n_graphs} graphs but {len(raw_graph_labels)} graph labels"
        )

    # node id -> (graph index, local index)
    sizes = [0] * n_graphs
    local = np.zeros(n_nodes, dtype=int)
    owner = np.zeros(n_nodes, dtype=int)
    for i, gid in enumerate(indicator):
        owner[i] = gid - 1
        local[i] = sizes[gid - 1]
        sizes[gid - 1] += 1
    if min(sizes) == 0:
        raise DataError(f"{name}: graph {sizes.index(0) + 1} has zero nodes")

    edge_sets: list[set[tuple[int, int]]] = [set() for _ in range(n_graphs)]
    with open(paths["A"]) as fp:
        for ln, line in enumerate(fp, start=1):
            line = line.strip()
            if not line:
                continue
            parts = line.replace(",", " ").split()
            try:
                u, v = int(parts[0]), int(parts[1])
            except (ValueError, IndexError):
                raise DataError(f"{paths['A']}:{ln}: expected two integers, got {line!r}")
            if not (1 <= u <= n_nodes and 1 <= v <= n_nodes):
                raise DataError(f"{paths['A']}:{ln}: node id out of range")
            gu, gv = owner[u - 1], owner[v - 1]
            if gu != gv:
                raise DataError(
                    f"{paths['A']}:{ln}: edge ({u},{v}) crosses graph boundary"
                )
            if u == v:
                raise DataError(f"{paths['A']}:{ln}: self-loop at node {u}")
            a, b = int(local[u - 1]), int(local[v - 1])
            edge_sets[gu].add((min(a, b), max(a, b)))

    node_label_map = {raw: i for i, raw in enumerate(sorted(set(raw_node_labels)))}
    class_map = {raw: i for i, raw in enumerate(sorted(set(raw_graph_labels)))}

    node_labels_per_graph: list[list[int]] = [[0] * s for s in sizes]
    for i in range(n_nodes):
        node_labels_per_graph[owner[i]][local[i]] = node_label_map[raw_node_labels[i]]

    graphs = [
        Graph(sizes[gi], tuple(edge_sets[gi]),
              tuple(node_labels_per_graph[gi]),
              class_map[raw_graph_labels[gi]])
        for gi in range(n_graphs)
    ]
    return DatasetBundle(name, graphs, len(node_label_map), "classify",
                         len(class_map), node_label_map, class_map)


def write_tu(bundle: DatasetBundle, directory, name: str) -> None:
    """Write a bundle back out in TU layout (round-trip / fixture helper)."""
    os.makedirs(directory, exist_ok=True)
    with open(os.path.join(directory, f"{name}_A.txt"), "w") as fa, \
            open(os.path.join(directory, f"{name}_graph_indicator.txt"), "w") as fi, \
            open(os.path.join(directory, f"{name}_graph_labels.txt"), "w") as fg, \
            open(os.path.join(directory, f"{name}_node_labels.txt"), "w") as fn:
        offset = 1
        for gi, g in enumerate(bundle.graphs, start=1):
            for _ in range(g.n):
                fi.write(f"{gi}\n")
            for lab in g.node_labels:
                fn.write(f"{lab}\n")
            for u, v in g.edges:
                fa.write(f"{offset + u}, {offset + v}\n")
                fa.write(f"{offset + v}, {offset + u}\n")
            fg.write(f"{g.graph_label}\n")
            offset += g.n


def _read_index_file(path, n_total: int) -> tuple[int, ...]:
    idx = _read_int_lines(path, "graph index")
    for i in idx:
        if not (0 <= i < n_total):
            raise DataError(f"{path}: split index {i} out of range (0..{n_total - 1})")
    return tuple(idx)


def load_zinc(directory) -> tuple[DatasetBundle, dict[str, tuple[int, ...]]]:
    """Load the ZINC regression subset plus its fixed train/val/test splits."""
    graphs_path = os.path.join(directory, "ZINC_graphs.jsonl")
    if not os.path.exists(graphs_path):
        raise DataError(f"missing dataset file {graphs_path}")
    graphs: list[Graph] = []
    max_label = -1
    with open(graphs_path) as fp:
        for ln, line in enumerate(fp, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                rec = json.loads(line)
                nodes = [int(x) for x in rec["nodes"]]
                edges = tuple((int(u), int(v)) for u, v in rec["edges"])
                y = float(rec["y"])
            except (ValueError, KeyError, TypeError) as e:
                raise DataError(f"{graphs_path}:{ln}: malformed record ({e})")
            if not nodes:
                raise DataError(f"{graphs_path}:{ln}: graph has zero nodes")
            if any(x < 0 for x in nodes):
                raise DataError(f"{graphs_path}:{ln}: negative atom type")
            graphs.append(Graph(len(nodes), edges, tuple(nodes), y))
            max_label = max(max_label, max(nodes))
    vocab = max_label + 1
    splits = {
        part: _read_index_file(os.path.join(directory, f"ZINC_{part}.index"),
                               len(graphs))
        for part in ("train", "val", "test")
    }
    bundle = DatasetBundle("ZINC", graphs, vocab, "regress", None,
                           {i: i for i in range(vocab)}, None)
    return bundle, splits


def make_splits(bundle: DatasetBundle, seed: int, n_splits: int = 10) -> SplitPlan:
    """Seeded random 80/10/10 index triples, rounded to whole graphs."""
    n = len(bundle.graphs)
    if n < 10:
        raise DataError(f"dataset {bundle.name} has only {n} graphs; need >= 10")
    rng = np.random.default_rng(seed)
    triples = []
    for _ in range(n_splits):
        perm = rng.permutation(n)
        n_train = int(round(0.8 * n))
        n_val = int(round(0.1 * n))
        train = tuple(int(i) for i in perm[:n_train])
        val = tuple(int(i) for i in perm[n_train:n_train + n_val])
        test = tuple(int(i) for i in perm[n_train + n_val:])
        triples.append((train, val, test))
    return SplitPlan(bundle.name, seed, tuple(triples))


def write_split_plan(plan: SplitPlan, fp) -> None:
    """Plain index lists, one line per part, for auditability."""
    fp.write(f"dataset={plan.dataset} seed={plan.seed} splits={len(plan.triples)}\n")
    for s, (train, val, test) in enumerate(plan.triples):
        for part, idx in (("train", train), ("val", val), ("test", test)):
            fp.write(f"split={s} part={part} indices=" +
                     ",".join(str(i) for i in idx) + "\n")


def one_hot(bundle: DatasetBundle) -> list[np.ndarray]:
    """Per-graph (n, vocab) matrices with exactly one 1 per row."""
    out = []
    eye = np.eye(bundle.vocab_size)
    for g in bundle.graphs:
        out.append(eye[list(g.node_labels)].copy())
    return out
