import os
import re
import logging
import functools
from dataclasses import dataclass, field
import numpy as np
import pandas as pd

logger = logging.getLogger(__name__)


class IngestionError(Exception):
    def __init__(self, path, line, message):
        self.path = path
        self.line = line
        location = os.path.basename(path) + ("" if line is None else ", line "+str(line))
        super().__init__(location+": "+message)


@dataclass(frozen=True, eq=False)
class Graph:
    n: int # node count
    edges: tuple # unordered (i, j) pairs, i < j, 0-based, each edge once
    features: np.ndarray # n x d
    label: int # dense class index

    def __post_init__(self):
        if self.features.shape[0] != self.n:
            raise ValueError("features has "+str(self.features.shape[0])+" rows for a graph of "+str(self.n)+" nodes")
        for i, j in self.edges:
            if i == j:
                raise ValueError("self-loop on node "+str(i))
            if not (0 <= i < self.n and 0 <= j < self.n):
                raise ValueError("edge ("+str(i)+", "+str(j)+") outside node range "+str(self.n))

    @property
    def feature_dim(self):
        return self.features.shape[1]

    def adjacency(self):
        A = np.zeros((self.n, self.n))
        for i, j in self.edges:
            A[i, j] = 1.0
            A[j, i] = 1.0
        return A

    @functools.cached_property
    def normalized_adjacency(self):
        return normalize_adjacency(self)


@dataclass(frozen=True, eq=False)
class Dataset:
    name: str
    graphs: list
    class_count: int
    feature_dim: int
    class_values: list = field(default_factory=list) # original label value for each dense class index

    def __post_init__(self):
        for g in self.graphs:
            if g.feature_dim != self.feature_dim:
                raise ValueError("graph feature width "+str(g.feature_dim)+" differs from dataset feature_dim "+str(self.feature_dim))
            if not 0 <= g.label < self.class_count:
                raise ValueError("graph label "+str(g.label)+" outside 0.."+str(self.class_count - 1))

    def __len__(self):
        return len(self.graphs)

    @property
    def labels(self):
        return np.array([g.label for g in self.graphs], dtype=np.int64)

    @property
    def node_counts(self):
        return np.array([g.n for g in self.graphs], dtype=np.int64)

    def subset(self, index):
        return Dataset(self.name, [self.graphs[i] for i in index], self.class_count, self.feature_dim, self.class_values)

    def summary(self, percentile=0.6):
        return {'name': self.name, 'graphs': len(self.graphs), 'classes': self.class_count,
                'feature_dim': self.feature_dim, 'k_suggested': select_k(self, percentile)}


def _read_table(path, min_cols=1, numeric=int):
    # Returns (DataFrame of numbers, list of 1-based source line numbers)
    try:
        df = pd.read_csv(path, header=None, sep=',', dtype=str, skip_blank_lines=False, skipinitialspace=True)
    except pd.errors.EmptyDataError:
        return pd.DataFrame(), []
    except pd.errors.ParserError as e:
        found = re.search(r"line (\d+)", str(e))
        raise IngestionError(path, int(found.group(1)) if found else None, "inconsistent number of values") from None
    df = df.apply(lambda s: s.str.strip() if s.notnull().any() else s).replace("", np.nan)
    df = df[df.notnull().any(axis=1)]
    line_numbers = [int(i) + 1 for i in df.index]
    df = df.reset_index(drop=True)
    if len(df) == 0:
        return df, line_numbers
    if df.shape[1] < min_cols or df.iloc[:, :min_cols].isnull().any(axis=None):
        bad = df.iloc[:, :min_cols].isnull().any(axis=1).to_numpy().nonzero()[0]
        row = int(bad[0]) if len(bad) else 0
        raise IngestionError(path, line_numbers[row], "expected "+str(min_cols)+" comma-separated values")
    converted = df.apply(lambda s: pd.to_numeric(s, errors='coerce'))
    invalid = converted.isnull() & df.notnull()
    if invalid.any(axis=None):
        row = int(invalid.any(axis=1).to_numpy().nonzero()[0][0])
        text = ", ".join(df.iloc[row].dropna())
        raise IngestionError(path, line_numbers[row], "non-numeric value in '"+text+"'")
    if numeric is int:
        values = converted.to_numpy(dtype=np.float64)
        non_int = ~np.isnan(values) & (values != np.round(values))
        if non_int.any():
            row = int(non_int.any(axis=1).nonzero()[0][0])
            raise IngestionError(path, line_numbers[row], "expected integer values")
    return converted, line_numbers


def parse_tudataset(root_dir, name):
    """
    Load a TUDataset flat-file dataset from root_dir (either root_dir/name/ or root_dir itself).

    :param root_dir: directory containing the dataset folder or the files directly
    :param name: dataset name used as the file prefix (e.g. 'MUTAG')
    :return: Dataset
    """
    folder = os.path.join(root_dir, name)
    if not os.path.isfile(os.path.join(folder, name+"_A.txt")):
        folder = root_dir
    path = lambda suffix: os.path.join(folder, name+"_"+suffix+".txt")

    for suffix in ['A', 'graph_indicator', 'graph_labels']:
        if not os.path.isfile(path(suffix)):
            raise IngestionError(path(suffix), None, "mandatory file is missing")

    # Graph labels, remapped to a dense 0..C-1 range
    graph_df, _ = _read_table(path('graph_labels'))
    raw_labels = graph_df.iloc[:, 0].astype(np.int64).to_numpy()
    class_values = sorted(set(raw_labels.tolist()))
    label_map = {v: i for i, v in enumerate(class_values)}
    graph_count = len(raw_labels)

    # Graph indicator: global node (1-based line order) -> graph id (1-based)
    ind_df, ind_lines = _read_table(path('graph_indicator'))
    indicator = ind_df.iloc[:, 0].astype(np.int64).to_numpy()
    for row, gid in enumerate(indicator):
        if gid < 1 or gid > graph_count:
            raise IngestionError(path('graph_indicator'), ind_lines[row], "graph id "+str(gid)+" outside 1.."+str(graph_count))
    node_total = len(indicator)
    local_index = np.zeros(node_total, dtype=np.int64)
    sizes = np.zeros(graph_count + 1, dtype=np.int64)
    for node, gid in enumerate(indicator):
        local_index[node] = sizes[gid]
        sizes[gid] += 1
    for gid in range(1, graph_count + 1):
        if sizes[gid] == 0:
            raise IngestionError(path('graph_indicator'), None, "graph "+str(gid)+" has no nodes")

    # Edges, symmetrized and deduplicated
    edge_sets = [set() for _ in range(graph_count + 1)]
    a_df, a_lines = _read_table(path('A'), min_cols=2)
    self_loops = 0
    for row, (u, v) in enumerate(a_df.iloc[:, :2].astype(np.int64).itertuples(index=False, name=None)):
        for endpoint in (u, v):
            if endpoint < 1 or endpoint > node_total:
                raise IngestionError(path('A'), a_lines[row], "dangling node index "+str(endpoint)+" (nodes are 1.."+str(node_total)+")")
        gu, gv = indicator[u - 1], indicator[v - 1]
        if gu != gv:
            raise IngestionError(path('A'), a_lines[row], "edge ("+str(u)+", "+str(v)+") crosses graphs "+str(gu)+" and "+str(gv))
        i, j = local_index[u - 1], local_index[v - 1]
        if i == j:
            self_loops += 1
            continue
        edge_sets[gu].add((int(min(i, j)), int(max(i, j))))
    if self_loops:
        logger.debug("%s: dropped %d self-loop rows", name, self_loops)

    # Node features: one-hot node labels, then continuous node attributes
    blocks = []
    if os.path.isfile(path('node_labels')):
        nl_df, nl_lines = _read_table(path('node_labels'))
        if len(nl_df) != node_total:
            raise IngestionError(path('node_labels'), None, "has "+str(len(nl_df))+" rows for "+str(node_total)+" nodes")
        node_labels = nl_df.iloc[:, 0].astype(np.int64).to_numpy()
        values = sorted(set(node_labels.tolist()))
        position = {v: i for i, v in enumerate(values)}
        one_hot = np.zeros((node_total, len(values)))
        one_hot[np.arange(node_total), [position[v] for v in node_labels]] = 1.0
        blocks.append(one_hot)
    if os.path.isfile(path('node_attributes')):
        at_df, at_lines = _read_table(path('node_attributes'), numeric=float)
        if len(at_df) != node_total:
            raise IngestionError(path('node_attributes'), None, "has "+str(len(at_df))+" rows for "+str(node_total)+" nodes")
        attributes = at_df.to_numpy(dtype=np.float64)
        if np.isnan(attributes).any():
            row = int(np.isnan(attributes).any(axis=1).nonzero()[0][0])
            raise IngestionError(path('node_attributes'), at_lines[row], "ragged attribute row")
        blocks.append(attributes)
    node_features = np.hstack(blocks) if blocks else None

    graphs = []
    members = [[] for _ in range(graph_count + 1)]
    for node, gid in enumerate(indicator):
        members[gid].append(node)
    for gid in range(1, graph_count + 1):
        n = int(sizes[gid])
        edges = tuple(sorted(edge_sets[gid]))
        if node_features is not None:
            features = node_features[members[gid]]
        else:
            features = degree_features(n, edges)
        graphs.append(Graph(n, edges, features, int(label_map[raw_labels[gid - 1]])))

    feature_dim = graphs[0].feature_dim
    ds = Dataset(name, graphs, len(class_values), feature_dim, class_values)
    logger.info("Loaded %s: %d graphs, %d classes, feature_dim %d", name, len(graphs), ds.class_count, feature_dim)
    return ds


def degree_features(n, edges):
    degree = np.zeros(n)
    for i, j in edges:
        degree[i] += 1
        degree[j] += 1
    top = degree.max() if n else 0.0
    if top == 0:
        return np.zeros((n, 1))
    return (degree / top).reshape(n, 1)


def write_tudataset(ds, root_dir):
    """
    Write a Dataset in TUDataset flat-file form to root_dir/<name>/.
    One-hot feature matrices are written as node labels, anything else as node attributes.
    """
    folder = os.path.join(root_dir, ds.name)
    os.makedirs(folder, exist_ok=True)
    path = lambda suffix: os.path.join(folder, ds.name+"_"+suffix+".txt")
    all_features = np.vstack([g.features for g in ds.graphs])
    one_hot = np.all((all_features == 0) | (all_features == 1)) and np.all(all_features.sum(axis=1) == 1)
    class_values = ds.class_values if ds.class_values else list(range(ds.class_count))

    offset = 0
    a_lines, ind_lines, feat_lines, label_lines = [], [], [], []
    for gid, g in enumerate(ds.graphs, start=1):
        for i, j in g.edges:
            a_lines.append(str(offset + i + 1)+", "+str(offset + j + 1))
            a_lines.append(str(offset + j + 1)+", "+str(offset + i + 1))
        ind_lines.extend([str(gid)] * g.n)
        if one_hot:
            feat_lines.extend(str(int(np.argmax(row))) for row in g.features)
        else:
            feat_lines.extend(", ".join(repr(float(v)) for v in row) for row in g.features)
        label_lines.append(str(class_values[g.label]))
        offset += g.n

    for suffix, lines in [('A', a_lines), ('graph_indicator', ind_lines), ('graph_labels', label_lines),
                          ('node_labels' if one_hot else 'node_attributes', feat_lines)]:
        with open(path(suffix), 'w') as fh:
            fh.write("\n".join(lines) + ("\n" if lines else ""))
    return folder


def normalize_adjacency(g):
    """D~^-1 (A + I) as a dense n x n row-stochastic matrix."""
    A_tilde = g.adjacency() + np.eye(g.n)
    return A_tilde / A_tilde.sum(axis=1, keepdims=True)


def permute_graph(g, perm):
    """
    Relabel nodes so that new node p holds old node perm[p]
    (features become features[perm], the P·g of the permutation properties).
    """
    perm = np.asarray(perm, dtype=np.int64)
    inverse = np.empty_like(perm)
    inverse[perm] = np.arange(len(perm))
    edges = tuple(sorted((int(min(inverse[i], inverse[j])), int(max(inverse[i], inverse[j]))) for i, j in g.edges))
    return Graph(g.n, edges, g.features[perm], g.label)


def select_k(ds, percentile=0.6):
    """
    Number of retained nodes such that `percentile` of the graphs have more nodes than k:
    the (1 - percentile) quantile of node counts, rounded down to an observed count.
    """
    if len(ds.graphs) == 0:
        raise ValueError("select_k needs a non-empty dataset")
    if not 0 <= percentile <= 1:
        raise ValueError("'percentile' must be within 0 - 1")
    k = int(np.percentile(ds.node_counts, 100.0 * (1.0 - percentile), method='lower'))
    return max(k, 1)


def stratified_folds(ds, folds, seed):
    """
    Fold id (0..folds-1) for every graph. Members of each class are shuffled with the seed and
    dealt round-robin; the dealing position carries over from one class to the next so total
    fold sizes also differ by at most one.
    """
    if folds < 2:
        raise ValueError("'folds' must be at least 2")
    labels = ds.labels
    rng = np.random.default_rng(seed)
    assignment = np.full(len(labels), -1, dtype=np.int64)
    position = 0
    for c in range(ds.class_count):
        members = np.flatnonzero(labels == c)
        if 0 < len(members) < folds:
            raise ValueError("class "+str(c)+" has "+str(len(members))+" graphs, fewer than "+str(folds)+" folds")
        for member in rng.permutation(members):
            assignment[member] = position % folds
            position += 1
    return assignment
