"""
Analyses of trained networks and finished runs: histograms of the feature values that pooling
drops, predictive-entropy trajectories, and mean +/- std comparison tables across runs.
"""
import logging
import numpy as np
import pandas as pd
from .data_handling import Dataset
from .pooling import PoolingConfig, pool, dropped_values
from .training import train_model, mean_predictive_entropy

logger = logging.getLogger(__name__)


def _graphs(ds):
    return ds.graphs if isinstance(ds, Dataset) else list(ds)


def collect_dropped_values(model, ds, method=None):
    """
    Every entry of every node row the pooling step discards, over all graphs of ds.
    `method` re-pools the same trained features with another criterion (same k and metric).
    """
    cfg = model.pooling
    if method is not None and method != cfg.method:
        cfg = PoolingConfig(method, cfg.k, cfg.metric, cfg.alpha, cfg.literal_eq3)
    values = []
    for g in _graphs(ds):
        H = model.pooled_features(g)
        values.extend(dropped_values(H, pool(H, cfg, model.backbone.last_layer_cols)))
    return values


def dropped_histogram(model, ds, method=None, bins=50, value_range=(-1.0, 1.0)):
    """
    :return: DataFrame with columns bin_lo, bin_hi, count; values outside value_range are
        counted in the outermost bins so the total equals the number of dropped units
    """
    if bins < 3:
        raise ValueError("'bins' must be at least 3")
    lo, hi = float(value_range[0]), float(value_range[1])
    if not lo < hi:
        raise ValueError("'value_range' must satisfy lo < hi")
    values = np.asarray(collect_dropped_values(model, ds, method), dtype=np.float64)
    if values.size == 0:
        logger.warning("no dropped units: k covers every node of every graph")
    counts, edges = np.histogram(np.clip(values, lo, hi), bins=bins, range=(lo, hi))
    return pd.DataFrame({'bin_lo': edges[:-1], 'bin_hi': edges[1:], 'count': counts.astype(np.int64)})


def central_fraction(values, band=0.1):
    values = np.asarray(values, dtype=np.float64)
    if values.size == 0:
        return float('nan')
    return float(np.mean(np.abs(values) < band))


def entropy_trace(model, ds_eval, train_graphs=None, train_cfg=None, rng=None):
    """
    Mean predictive entropy on ds_eval per epoch. Without train_graphs only the current
    (epoch 0) value is reported; otherwise model is trained and traced epoch by epoch.
    """
    eval_graphs = _graphs(ds_eval)
    if train_graphs is None:
        return pd.DataFrame({'Epoch': [0], 'Entropy': [mean_predictive_entropy(model, eval_graphs)]})
    if train_cfg is None:
        raise ValueError("'train_cfg' is required when train_graphs is given")
    history = train_model(model, _graphs(train_graphs), train_cfg, rng, eval_graphs)
    return history[['Epoch', 'Eval Entropy']].rename(columns={'Eval Entropy': 'Entropy'})


def comparison_table(reports, row_by='label'):
    """
    Rows keyed by the report attribute `row_by`, one column per dataset, cells
    'mean ± std' in percent.
    """
    if len(reports) == 0:
        raise ValueError("comparison_table needs at least one report")
    rows, datasets, cells = [], [], {}
    for report in reports:
        key = str(getattr(report, row_by))
        if key not in rows:
            rows.append(key)
        if report.dataset not in datasets:
            datasets.append(report.dataset)
        if (key, report.dataset) in cells:
            raise ValueError("duplicate report for row '"+key+"' on dataset '"+report.dataset+"'")
        cells[(key, report.dataset)] = "{:.2f} ± {:.2f}".format(100 * report.mean, 100 * report.std)

    problems = []
    for key in rows:
        missing = [d for d in datasets if (key, d) not in cells]
        if missing:
            problems.append("'"+key+"' lacks "+", ".join(missing))
    if problems:
        raise ValueError("reports cover different datasets: "+"; ".join(problems))

    table = pd.DataFrame([[cells[(key, d)] for d in datasets] for key in rows], index=rows, columns=datasets)
    table.index.name = row_by
    return table


def render_table(table):
    return table.to_string() + "\n"
