import numpy as np
import pytest
from hypothesis import settings

from graphit.graphs import Graph

settings.register_profile("ci", deadline=None, derandomize=True, max_examples=30)
settings.load_profile("ci")


@pytest.fixture
def p2():
    return Graph(2, ((0, 1),), (0, 0))


@pytest.fixture
def p3():
    return Graph(3, ((0, 1), (1, 2)), (0, 0, 0))


@pytest.fixture
def k3():
    return Graph(3, ((0, 1), (0, 2), (1, 2)), (0, 0, 0))


@pytest.fixture
def single():
    return Graph(1, (), (0,))


def make_toy_bundle(n_graphs=24, seed=0, vocab=3):
    """Small labeled classification set: class 1 graphs contain a triangle,
    class 0 graphs are trees; node labels correlate with the class so the
    task is learnable from structure and features."""
    from graphit.data import DatasetBundle

    rng = np.random.default_rng(seed)
    graphs = []
    for i in range(n_graphs):
        label = i % 2
        n = int(rng.integers(4, 8))
        edges = {(j - 1, j) for j in range(1, n)}
        if label == 1:
            edges |= {(0, 2)}
        node_labels = tuple(int(x) for x in rng.integers(0, vocab - 1, size=n))
        if label == 1:
            node_labels = (vocab - 1,) + node_labels[1:]
        graphs.append(Graph(n, tuple(edges), node_labels, label))
    return DatasetBundle("toy", graphs, vocab, "classify", 2,
                         {i: i for i in range(vocab)}, {0: 0, 1: 1})


@pytest.fixture
def toy_bundle():
    return make_toy_bundle()


def write_toy_zinc(directory, n_graphs=12, seed=0):
    """Synthetic container in the ZINC on-disk layout (format tests only)."""
    import json
    import os

    rng = np.random.default_rng(seed)
    os.makedirs(directory, exist_ok=True)
    with open(os.path.join(directory, "ZINC_graphs.jsonl"), "w") as fp:
        for _ in range(n_graphs):
            n = int(rng.integers(2, 9))
            edges = [[j - 1, j] for j in range(1, n)]
            nodes = [int(x) for x in rng.integers(0, 4, size=n)]
            y = float(len(edges)) - 0.5 * sum(nodes) / n
            fp.write(json.dumps({"nodes": nodes, "edges": edges, "y": y}) + "\n")
    counts = {"train": n_graphs - 4, "val": 2, "test": 2}
    start = 0
    for part, count in counts.items():
        with open(os.path.join(directory, f"ZINC_{part}.index"), "w") as fp:
            for i in range(start, start + count):
                fp.write(f"{i}\n")
        start += count
