import logging
import math
import numpy as np
import pytest
from conftest import make_graph, random_graph
from skgpool.methods.data_handling import Dataset
from skgpool.methods.model import GPoolNet, ModelConfig
from skgpool.methods.training import TrainConfig, RunReport, mean_predictive_entropy
from skgpool.methods.diagnostics import (dropped_histogram, collect_dropped_values, central_fraction, entropy_trace,
                                         comparison_table, render_table)
from skgpool.experiments.graph_sim import graph_classification_simulation

SMALL = ModelConfig(conv_widths=(4, 4, 1), hidden=8)


def random_dataset(rng, sizes, d=3):
    return Dataset("RAND", [random_graph(rng, n, d, label=i % 2) for i, n in enumerate(sizes)], 2, d)


def test_histogram_is_empty_when_k_covers_every_node(rng, caplog):
    ds = random_dataset(rng, [3, 5, 4])
    net = GPoolNet(3, 2, 5, SMALL, rng)
    with caplog.at_level(logging.WARNING):
        histogram = dropped_histogram(net, ds)
    assert list(histogram.columns) == ['bin_lo', 'bin_hi', 'count']
    assert len(histogram) == 50
    assert histogram['count'].sum() == 0
    assert "no dropped units" in caplog.text


def test_histogram_conserves_dropped_units(rng):
    ds = random_dataset(rng, [3, 9, 6, 12])
    net = GPoolNet(3, 2, 4, SMALL, rng)
    for method in ('sort', 'geometric', 'mixed'):
        histogram = dropped_histogram(net, ds, method, bins=7, value_range=(-0.5, 0.5))
        assert histogram['count'].sum() == (0 + 5 + 2 + 8) * 9


def test_zero_features_fill_the_central_bin(rng):
    graphs = [make_graph(n, [(0, 1)], np.zeros((n, 2))) for n in (4, 6)]
    net = GPoolNet(2, 2, 2, SMALL, rng)
    histogram = dropped_histogram(net, Dataset("ZERO", graphs, 2, 2), bins=5)
    assert histogram['count'].tolist() == [0, 0, 6 * 9, 0, 0]
    assert histogram.loc[2, 'bin_lo'] < 0 < histogram.loc[2, 'bin_hi']


def test_histogram_parameter_checks(rng):
    net = GPoolNet(3, 2, 2, SMALL, rng)
    ds = random_dataset(rng, [4])
    with pytest.raises(ValueError):
        dropped_histogram(net, ds, bins=2)
    with pytest.raises(ValueError):
        dropped_histogram(net, ds, value_range=(1.0, -1.0))


def test_central_fraction():
    assert central_fraction([0.0, 0.05, -0.09, 0.5]) == 0.75
    assert math.isnan(central_fraction([]))


def test_untrained_uniform_model_has_maximal_entropy(rng):
    graphs = [make_graph(3, [(0, 1)], np.zeros((3, 2)), label=c) for c in (0, 1, 0)]
    net = GPoolNet(2, 2, 2, SMALL, rng)
    trace = entropy_trace(net, graphs)
    assert trace['Entropy'][0] == pytest.approx(math.log(2))


def test_entropy_trace_bounds_and_single_class_split(rng):
    ds = graph_classification_simulation(graphs=16, feature_dim=2, random_seed=3)
    net = GPoolNet(2, 2, 4, SMALL, rng)
    single_class = [g for g in ds.graphs if g.label == 0]
    trace = entropy_trace(net, single_class, ds.graphs, TrainConfig(epochs=3, batch_size=4), np.random.default_rng(0))
    assert list(trace['Epoch']) == [0, 1, 2, 3]
    assert trace['Entropy'].notnull().all()
    assert trace['Entropy'].between(0, math.log(2) + 1e-12).all()


def test_penalty_keeps_entropy_high():
    ds = graph_classification_simulation(graphs=24, feature_dim=2, min_nodes=4, max_nodes=8, signal=1.0, random_seed=8)
    eval_graphs = [g for g in ds.graphs if g.label == 0]
    final = {}
    for lam in (0.0, 10.0):
        net = GPoolNet(2, 2, 4, SMALL, np.random.default_rng(1))
        cfg = TrainConfig(epochs=30, learning_rate=0.02, batch_size=8, lambda_=lam)
        trace = entropy_trace(net, eval_graphs, ds.graphs, cfg, np.random.default_rng(2))
        final[lam] = trace['Entropy'].iloc[-1]
    assert final[10.0] >= final[0.0]


def test_mean_predictive_entropy_is_finite_for_one_graph(rng):
    net = GPoolNet(3, 2, 2, SMALL, rng)
    value = mean_predictive_entropy(net, [random_graph(rng, 4, 3)])
    assert 0 <= value <= math.log(2)


def report(label, dataset, accuracies, metric='euclidean'):
    runs = [{'repeat': 0, 'fold': f, 'accuracy': a, 'train_loss': []} for f, a in enumerate(accuracies)]
    return RunReport(label, dataset, 'geometric', metric, 'tanh', 0.0, 10, 1000, runs)


def test_comparison_table_layout():
    table = comparison_table([report('GP', 'MUTAG', [0.8, 0.9]), report('GP', 'PTC', [0.6]),
                              report('Sort', 'MUTAG', [0.7]), report('Sort', 'PTC', [0.5, 0.7])])
    assert list(table.index) == ['GP', 'Sort']
    assert list(table.columns) == ['MUTAG', 'PTC']
    assert table.loc['GP', 'MUTAG'] == "85.00 ± 5.00"
    assert table.loc['Sort', 'PTC'] == "60.00 ± 10.00"
    text = render_table(table)
    assert "GP" in text and "85.00 ± 5.00" in text


def test_comparison_table_rows_by_metric():
    table = comparison_table([report('a', 'PTC', [0.6], 'euclidean'), report('b', 'PTC', [0.5], 'cosine')], row_by='metric')
    assert list(table.index) == ['euclidean', 'cosine']
    assert table.index.name == 'metric'


def test_comparison_table_reports_missing_datasets():
    with pytest.raises(ValueError, match="'Sort' lacks PTC"):
        comparison_table([report('GP', 'MUTAG', [0.8]), report('GP', 'PTC', [0.6]), report('Sort', 'MUTAG', [0.7])])
    with pytest.raises(ValueError):
        comparison_table([])


def test_collect_dropped_values_uses_trained_features(rng):
    ds = random_dataset(rng, [6])
    net = GPoolNet(3, 2, 2, SMALL, rng)
    values = collect_dropped_values(net, ds, 'sort')
    H = net.pooled_features(ds.graphs[0])
    assert set(values) <= set(H.ravel().tolist())
    assert len(values) == 4 * 9
