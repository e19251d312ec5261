import numpy as np
from ..methods.data_handling import Graph, Dataset


def graph_classification_simulation(graphs=200, classes=2, min_nodes=8, max_nodes=20, feature_dim=4, signal=1.0,
                                    edge_prob=0.3, random_seed=None):
    """
    Create an artificial graph-classification dataset with one-hot node labels.

    Each node carries the category of its graph's class with probability `signal` and a
    uniformly drawn category otherwise, so signal=1 gives separable data and signal=0 gives
    features that are independent of the label.

    :param graphs: dataset size
    :param classes: number of classes (labels are balanced)
    :param min_nodes: smallest node count
    :param max_nodes: largest node count
    :param feature_dim: number of node categories (>= classes)
    :param signal: probability that a node's category encodes the class, 0 - 1
    :param edge_prob: probability of each undirected edge
    :param random_seed:

    :return: Dataset
    """
    if classes < 2 or feature_dim < classes:
        raise Exception("'classes' must be at least 2 and no larger than 'feature_dim'")
    if min_nodes < 1 or max_nodes < min_nodes:
        raise Exception("'min_nodes' must be positive and no larger than 'max_nodes'")
    if not 0 <= signal <= 1 or not 0 <= edge_prob <= 1:
        raise Exception("'signal' and 'edge_prob' must be floats from 0 - 1")
    rng = np.random.default_rng(random_seed)

    labels = rng.permutation(np.arange(graphs) % classes)
    sim_graphs = []
    for label in labels:
        n = int(rng.integers(min_nodes, max_nodes + 1))
        category = np.where(rng.random(n) < signal, label, rng.integers(0, feature_dim, size=n))
        features = np.zeros((n, feature_dim))
        features[np.arange(n), category] = 1.0
        upper = np.triu(rng.random((n, n)) < edge_prob, k=1)
        edges = tuple((int(i), int(j)) for i, j in zip(*np.nonzero(upper)))
        sim_graphs.append(Graph(n, edges, features, int(label)))
    return Dataset("SIM", sim_graphs, classes, feature_dim, list(range(classes)))
