"""
Global pooling criteria that reduce an n x d' node-feature matrix to k rows.

- sort: rank nodes by the last channel of the last conv layer, keep the largest.
- geometric: rank nodes by their summed pairwise metric against all other nodes and keep the
  k least similar ones (largest distance sums, smallest similarity sums).
- mixed: sort pooling down to ceil(alpha * k) nodes, then geometric pooling down to k.
"""
import math
from dataclasses import dataclass
import numpy as np
from scipy.spatial.distance import cdist
from .tensor import Tensor, gather_rows

METHODS = ('sort', 'geometric', 'mixed')
METRICS = ('euclidean', 'inner_product', 'cosine')
ORIENTATION = {'euclidean': 'distance_like', 'inner_product': 'similarity_like', 'cosine': 'similarity_like'}


@dataclass
class PoolingConfig:
    method: str = 'geometric'
    k: int = 1
    metric: str = 'euclidean'
    alpha: float = 2.0 # mixed: intermediate width is ceil(alpha * k)
    literal_eq3: bool = False # debug: retain the most similar nodes instead

    def __post_init__(self):
        if self.method not in METHODS:
            raise ValueError("'method' must be one of "+str(METHODS))
        if self.metric not in METRICS:
            raise ValueError("'metric' must be one of "+str(METRICS))
        if not isinstance(self.k, (int, np.integer)) or self.k < 1:
            raise ValueError("'k' must be a positive integer")
        if self.alpha <= 1:
            raise ValueError("'alpha' must be greater than 1")

    @property
    def mixed_width(self):
        return int(math.ceil(self.alpha * self.k))


@dataclass
class SimilarityVector:
    values: np.ndarray
    orientation: str


@dataclass
class SelectionResult:
    idx: list # retained node indices, ascending
    order: list # retained node indices, best-ranked first
    pooled: Tensor # k x d', rows follow `order`, zero padded


def _values(H):
    return H.values if isinstance(H, Tensor) else np.asarray(H, dtype=np.float64)


def _gram(X):
    # one row reduction per pair, so G[i, j] and G[j, i] agree bitwise
    return np.stack([(X * row).sum(axis=1) for row in X], axis=1)


def _column_sums(G):
    # symmetric with zero diagonal; sorted summation keeps tied columns bit-equal
    G = (G + G.T) / 2
    np.fill_diagonal(G, 0.0)
    return np.sort(G, axis=0).sum(axis=0)


def similarity(H, metric):
    X = _values(H)
    if metric == 'euclidean':
        G = cdist(X, X, 'euclidean')
    elif metric == 'inner_product':
        G = _gram(X)
    elif metric == 'cosine':
        norms = np.linalg.norm(X, axis=1)
        unit = np.zeros_like(X)
        nonzero = norms > 0
        unit[nonzero] = X[nonzero] / norms[nonzero, None]
        G = _gram(unit)
    else:
        raise ValueError("'metric' must be one of "+str(METRICS))
    return SimilarityVector(_column_sums(G), ORIENTATION[metric])


def _rank_least_similar(sim, literal_eq3=False):
    # ascending node index breaks ties
    n = len(sim.values)
    keep_large = (sim.orientation == 'distance_like') != literal_eq3
    key = -sim.values if keep_large else sim.values
    return np.lexsort((np.arange(n), key))


def _result(H, order, k):
    order = [int(i) for i in order[:k]]
    return SelectionResult(sorted(order), order, gather_rows(H, order, pad_to=k))


def geometric_select(H, cfg):
    sim = similarity(H, cfg.metric)
    return _result(H, _rank_least_similar(sim, cfg.literal_eq3), cfg.k)


def sort_select(H_concat, last_layer_cols, k):
    """Descending by the last column of last_layer_cols, then every preceding column of H_concat right to left, then node index."""
    X = _values(H_concat)
    cols = list(last_layer_cols)
    if not cols:
        raise ValueError("'last_layer_cols' must be non-empty")
    keys = [np.arange(X.shape[0])] + [-X[:, c] for c in range(cols[-1] + 1)]
    return _result(H_concat, np.lexsort(keys), k)


def mixed_select(H, cfg, last_layer_cols=None):
    X = _values(H)
    n = X.shape[0]
    if last_layer_cols is None:
        last_layer_cols = range(X.shape[1] - 1, X.shape[1])
    width = min(n, cfg.mixed_width)
    survivors = sort_select(X, last_layer_cols, width).idx
    sim = similarity(X[survivors], cfg.metric)
    ranked = _rank_least_similar(sim, cfg.literal_eq3)
    return _result(H, [survivors[i] for i in ranked], cfg.k)


def pool(H, cfg, last_layer_cols):
    if cfg.method == 'sort':
        return sort_select(H, last_layer_cols, cfg.k)
    if cfg.method == 'geometric':
        return geometric_select(H, cfg)
    return mixed_select(H, cfg, last_layer_cols)


def dropped_values(H, result):
    """Flat list of every entry in the rows that the selection dropped."""
    X = _values(H)
    dropped = np.setdiff1d(np.arange(X.shape[0]), result.idx)
    return X[dropped].ravel().tolist()
