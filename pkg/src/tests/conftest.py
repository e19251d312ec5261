import os
import sys
import numpy as np
import pytest

sys.path.insert(0, os.path.abspath(os.path.join(os.path.dirname(__file__), '..')))

from skgpool.methods.data_handling import Graph, Dataset  # noqa: E402


def make_graph(n, edges=(), features=None, label=0):
    if features is None:
        features = np.ones((n, 1))
    edges = tuple(sorted((min(i, j), max(i, j)) for i, j in edges))
    return Graph(n, edges, np.asarray(features, dtype=np.float64), label)


def random_graph(rng, n, d, edge_prob=0.4, label=0):
    upper = np.triu(rng.random((n, n)) < edge_prob, k=1)
    edges = tuple((int(i), int(j)) for i, j in zip(*np.nonzero(upper)))
    return Graph(n, edges, rng.normal(size=(n, d)), label)


def relative_error(analytic, numeric):
    return abs(analytic - numeric) / max(abs(analytic), abs(numeric), 1e-6)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture
def toy_dataset():
    graphs = [make_graph(3, [(0, 1), (1, 2)], np.eye(3)[[0, 1, 1]], 0),
              make_graph(2, [(0, 1)], np.eye(3)[[2, 2]], 1),
              make_graph(4, [(0, 1), (1, 2), (2, 3)], np.eye(3)[[0, 0, 1, 2]], 0),
              make_graph(1, [], np.eye(3)[[1]], 1)]
    return Dataset("TOY", graphs, 2, 3, [0, 1])
