import math
from itertools import combinations
import numpy as np
import pytest
from conftest import random_graph
from skgpool.methods.tensor import Tape, Tensor, sum_all, elementwise, backward
from skgpool.methods.layers import Backbone, backbone_forward
from skgpool.methods.data_handling import permute_graph
from skgpool.methods.pooling import (PoolingConfig, similarity, geometric_select, sort_select, mixed_select, pool,
                                     dropped_values, METRICS)


def brute_force_scores(X, metric):
    """Per-node summed metric with explicit loops; returned so that larger means 'keep'."""
    n = len(X)
    scores = []
    for j in range(n):
        total = 0.0
        for i in range(n):
            if i == j:
                continue
            if metric == 'euclidean':
                total += math.sqrt(sum((a - b) ** 2 for a, b in zip(X[i], X[j])))
            elif metric == 'inner_product':
                total += sum(a * b for a, b in zip(X[i], X[j]))
            else:
                norm_i = math.sqrt(sum(a * a for a in X[i]))
                norm_j = math.sqrt(sum(b * b for b in X[j]))
                total += sum(a * b for a, b in zip(X[i], X[j])) / (norm_i * norm_j)
        scores.append(total if metric == 'euclidean' else -total)
    return scores


def brute_force_geometric(X, metric, k):
    scores = brute_force_scores(X, metric)
    best = max(combinations(range(len(X)), min(k, len(X))), key=lambda c: sum(scores[j] for j in c))
    return set(best)


def brute_force_mixed(X, metric, k, alpha):
    width = min(len(X), math.ceil(alpha * k))
    survivors = sorted(max(combinations(range(len(X)), width), key=lambda c: sum(X[j][-1] for j in c)))
    chosen = brute_force_geometric([X[j] for j in survivors], metric, k)
    return set(survivors[j] for j in chosen)


def test_similarity_examples():
    np.testing.assert_allclose(similarity(np.array([[0.0], [0.0], [1.0]]), 'euclidean').values, [1, 1, 2])
    np.testing.assert_allclose(similarity(np.array([[1.0], [2.0]]), 'inner_product').values, [2, 2])
    assert similarity(np.array([[3.0, 4.0]]), 'cosine').values.tolist() == [0.0]
    assert similarity(np.array([[1.0]]), 'euclidean').orientation == 'distance_like'
    assert similarity(np.array([[1.0]]), 'cosine').orientation == 'similarity_like'


def test_geometric_keeps_least_similar():
    H = np.array([[0.0], [0.0], [1.0]])
    result = geometric_select(H, PoolingConfig('geometric', 2))
    assert result.idx == [0, 2]
    assert result.order == [2, 0]
    np.testing.assert_array_equal(result.pooled.values, [[1.0], [0.0]])


def test_literal_orientation_keeps_most_similar():
    H = np.array([[0.0], [0.1], [5.0]])
    assert geometric_select(H, PoolingConfig('geometric', 1)).idx == [2]
    assert geometric_select(H, PoolingConfig('geometric', 1, literal_eq3=True)).idx == [1]


def test_ties_break_by_ascending_index():
    H = np.ones((5, 3))
    for metric in METRICS:
        assert geometric_select(H, PoolingConfig('geometric', 3, metric)).idx == [0, 1, 2]
    assert sort_select(H, range(2, 3), 2).order == [0, 1]


def test_zero_padding_when_graph_is_small(rng):
    H = rng.normal(size=(2, 4))
    for method in ('sort', 'geometric', 'mixed'):
        result = pool(H, PoolingConfig(method, 5), range(3, 4))
        assert result.pooled.shape == (5, 4)
        assert sorted(result.idx) == [0, 1]
        np.testing.assert_array_equal(result.pooled.values[2:], np.zeros((3, 4)))


def test_sort_select_orders_by_last_layer_columns():
    H = np.array([[0.0, 0.2, 0.5],
                  [0.0, 0.9, 0.5],
                  [0.0, 0.1, 0.9],
                  [0.0, 0.3, -0.1]])
    result = sort_select(H, range(1, 3), 3)
    assert result.order == [2, 1, 0]
    assert result.idx == [0, 1, 2]


def test_mixed_reduces_to_geometric(rng):
    for _ in range(50):
        n, d, k = int(rng.integers(1, 10)), int(rng.integers(1, 5)), int(rng.integers(1, 6))
        H = rng.normal(size=(n, d))
        geometric = geometric_select(H, PoolingConfig('geometric', k))
        assert mixed_select(H, PoolingConfig('mixed', k, alpha=1000.0)).idx == geometric.idx
        if n <= k:
            assert mixed_select(H, PoolingConfig('mixed', k)).idx == geometric.idx


def test_selection_matches_brute_force(rng):
    for _ in range(1000):
        n, d = int(rng.integers(1, 13)), int(rng.integers(1, 9))
        k = int(rng.integers(1, n + 3))
        metric = str(rng.choice(METRICS))
        alpha = float(rng.choice([1.5, 2.0, 3.0]))
        H = rng.normal(size=(n, d))
        X = H.tolist()

        result = geometric_select(H, PoolingConfig('geometric', k, metric))
        assert set(result.idx) == brute_force_geometric(X, metric, k)
        assert result.pooled.shape == (k, d)
        np.testing.assert_array_equal(result.pooled.values[:len(result.order)], H[result.order])

        mixed = mixed_select(H, PoolingConfig('mixed', k, metric, alpha), range(d - 1, d))
        assert set(mixed.idx) == brute_force_mixed(X, metric, k, alpha)


def well_separated(values, gap=1e-9):
    ordered = np.sort(np.asarray(values))
    return bool(np.all(np.diff(ordered) > gap * (1.0 + np.abs(ordered).max())))


def ranking_is_unambiguous(H, method, metric, k, d):
    """No near-ties at any stage that decides membership."""
    if method == 'sort':
        return well_separated(H[:, d - 1])
    if method == 'geometric':
        return well_separated(similarity(H, metric).values)
    width = min(len(H), PoolingConfig(method, k, metric).mixed_width)
    if not well_separated(H[:, d - 1]):
        return False
    survivors = sort_select(H, range(d - 1, d), width).idx
    return width <= k or well_separated(similarity(H[survivors], metric).values)


def test_selection_set_is_permutation_invariant(rng):
    checked = 0
    while checked < 200:
        n, d, k = int(rng.integers(2, 13)), int(rng.integers(1, 6)), int(rng.integers(1, 8))
        H = rng.normal(size=(n, d))
        perm = rng.permutation(n)
        method, metric = str(rng.choice(('sort', 'geometric', 'mixed'))), str(rng.choice(METRICS))
        if k < n and not ranking_is_unambiguous(H, method, metric, k, d):
            continue
        cfg = PoolingConfig(method, k, metric)
        original = pool(H, cfg, range(d - 1, d))
        permuted = pool(H[perm], cfg, range(d - 1, d))
        assert sorted(perm[permuted.idx].tolist()) == original.idx
        checked += 1


def test_selection_through_backbone_is_permutation_invariant(rng):
    checked = 0
    while checked < 200:
        g = random_graph(rng, int(rng.integers(4, 12)), 3)
        b = Backbone(3, (5, 5, 1), rng=rng)
        perm = rng.permutation(g.n)
        cfg = PoolingConfig('geometric', 3)
        H = backbone_forward(g, b)
        if not well_separated(similarity(H, cfg.metric).values):
            continue
        original = geometric_select(H, cfg)
        permuted = geometric_select(backbone_forward(permute_graph(g, perm), b), cfg)
        assert sorted(perm[permuted.idx].tolist()) == original.idx
        checked += 1


def test_two_node_tie_keeps_lower_index(rng):
    for _ in range(200):
        H = rng.normal(size=(2, 4))
        for metric in METRICS:
            S = similarity(H, metric).values
            assert S[0] == S[1]
            assert geometric_select(H, PoolingConfig('geometric', 1, metric)).idx == [0]


def test_duplicate_rows_rank_by_index(rng):
    H = rng.normal(size=(6, 3))
    H[4] = H[1]
    for metric in METRICS:
        order = geometric_select(H, PoolingConfig('geometric', 6, metric)).order
        assert order.index(4) == order.index(1) + 1


def test_mixed_two_survivor_stage_keeps_lower_index(rng):
    for _ in range(200):
        H = rng.normal(size=(7, 3))
        survivors = sort_select(H, range(2, 3), 2).idx
        for metric in METRICS:
            assert mixed_select(H, PoolingConfig('mixed', 1, metric), range(2, 3)).idx == survivors[:1]


def test_sort_ties_fall_back_to_earlier_columns():
    H = np.array([[0.1, 0.5, 1.0],
                  [0.9, 0.2, 1.0],
                  [0.3, 0.5, 1.0],
                  [0.0, 0.0, 2.0]])
    assert sort_select(H, range(2, 3), 4).order == [3, 2, 0, 1]


def test_cosine_is_scale_invariant(rng):
    H = rng.normal(size=(8, 4))
    scaled = H * rng.uniform(0.1, 10.0, size=(8, 1))
    np.testing.assert_allclose(similarity(H, 'cosine').values, similarity(scaled, 'cosine').values, atol=1e-12)
    cfg = PoolingConfig('geometric', 4, 'cosine')
    assert geometric_select(H, cfg).idx == geometric_select(scaled, cfg).idx


def test_gradients_flow_to_selected_rows_only(rng):
    tape = Tape()
    H = Tensor(rng.normal(size=(6, 3)), tape=tape, trainable=True)
    weights = rng.normal(size=(4, 3))
    result = geometric_select(H, PoolingConfig('geometric', 4))
    grads = backward(sum_all(elementwise('mul', result.pooled, Tensor(weights))))
    expected = np.zeros((6, 3))
    expected[result.order] = weights
    np.testing.assert_array_equal(grads[H], expected)


def test_dropped_values(rng):
    H = rng.normal(size=(7, 3))
    result = geometric_select(H, PoolingConfig('geometric', 4))
    dropped = dropped_values(H, result)
    assert len(dropped) == 9
    kept = set(H[result.idx].ravel().tolist())
    assert not kept & set(dropped)
    assert dropped_values(H, geometric_select(H, PoolingConfig('geometric', 10))) == []


def test_pooling_config_validation():
    with pytest.raises(ValueError):
        PoolingConfig('average', 3)
    with pytest.raises(ValueError):
        PoolingConfig('geometric', 0)
    with pytest.raises(ValueError):
        PoolingConfig('geometric', 3, 'manhattan')
    with pytest.raises(ValueError):
        PoolingConfig('mixed', 3, alpha=1.0)
    assert PoolingConfig('mixed', 3, alpha=2.5).mixed_width == 8
