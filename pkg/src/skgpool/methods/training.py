import json
import logging
from dataclasses import dataclass, field, asdict
import numpy as np
import pandas as pd
from joblib import Parallel, delayed
from scipy.stats import entropy
from sklearn.metrics import accuracy_score
from tqdm import tqdm
from .tensor import Tensor, elementwise, clamp_min, take, sum_all, backward
from .data_handling import select_k, stratified_folds
from .model import GPoolNet, ModelConfig, count_parameters

logger = logging.getLogger(__name__)

PROB_FLOOR = 1e-12
OPTIMIZERS = ('adam', 'sgd')


@dataclass
class TrainConfig:
    epochs: int = 200
    learning_rate: float = 1e-3
    optimizer: str = 'adam'
    betas: tuple = (0.9, 0.999)
    eps: float = 1e-8
    lambda_: float = 0.0 # weight of the KL-to-uniform penalty
    folds: int = 10
    repeats: int = 10
    seed: int = 0
    batch_size: int = 32 # graphs whose gradients are accumulated per update
    verbose: bool = False

    def __post_init__(self):
        self.betas = tuple(float(b) for b in self.betas)
        if self.epochs < 0:
            raise ValueError("'epochs' must be a non-negative integer")
        if self.learning_rate <= 0:
            raise ValueError("'learning_rate' must be positive")
        if self.optimizer not in OPTIMIZERS:
            raise ValueError("'optimizer' must be one of "+str(OPTIMIZERS))
        if self.lambda_ < 0:
            raise ValueError("'lambda_' must be non-negative")
        if self.folds < 2 or self.repeats < 1:
            raise ValueError("'folds' must be at least 2 and 'repeats' at least 1")
        if self.batch_size < 1:
            raise ValueError("'batch_size' must be a positive integer")

    def to_dict(self):
        d = asdict(self)
        d['betas'] = list(self.betas)
        return d


def cross_entropy(q, label):
    """-log q[label] on a 1 x C probability row, clamped at PROB_FLOOR."""
    log_q = elementwise('log', clamp_min(q, PROB_FLOOR))
    return elementwise('scale', take(log_q, 0, int(label)), factor=-1.0)


def kl_uniform(q):
    """KL(U || q) = sum_c (1/C) (log(1/C) - log q_c); exactly 0 for a uniform q."""
    q = q if isinstance(q, Tensor) else Tensor(q)
    C = q.cols
    log_u = Tensor(np.full((1, C), np.log(1.0 / C)))
    log_q = elementwise('log', clamp_min(q, PROB_FLOOR))
    return elementwise('scale', sum_all(elementwise('sub', log_u, log_q)), factor=1.0 / C)


def total_loss(outputs, labels, lam=0.0):
    """
    Mean over the batch of cross_entropy + lam * kl_uniform.

    :param outputs: list of 1 x C probability tensors
    :param labels: class index per output
    :param lam: penalty weight; 0 leaves plain mean cross-entropy
    """
    if lam < 0:
        raise ValueError("'lam' must be non-negative")
    if len(outputs) == 0 or len(outputs) != len(labels):
        raise ValueError("total_loss needs one label per output and at least one output")
    total = None
    for q, label in zip(outputs, labels):
        term = cross_entropy(q, label)
        if lam > 0:
            term = elementwise('add', term, elementwise('scale', kl_uniform(q), factor=float(lam)))
        total = term if total is None else elementwise('add', total, term)
    return elementwise('scale', total, factor=1.0 / len(outputs))


class SGD:
    def __init__(self, params, learning_rate=1e-3):
        self.params = list(params)
        self.learning_rate = learning_rate

    def step(self, grads):
        for p in self.params:
            g = grads.get(p)
            if g is not None:
                p.values -= self.learning_rate * g


class Adam:
    def __init__(self, params, learning_rate=1e-3, betas=(0.9, 0.999), eps=1e-8):
        self.params = list(params)
        self.learning_rate = learning_rate
        self.beta1, self.beta2 = betas
        self.eps = eps
        self.t = 0
        self.m = [np.zeros_like(p.values) for p in self.params]
        self.v = [np.zeros_like(p.values) for p in self.params]

    def step(self, grads):
        self.t += 1
        for i, p in enumerate(self.params):
            g = grads.get(p)
            if g is None:
                continue
            self.m[i] = self.beta1 * self.m[i] + (1 - self.beta1) * g
            self.v[i] = self.beta2 * self.v[i] + (1 - self.beta2) * g * g
            m_hat = self.m[i] / (1 - self.beta1 ** self.t)
            v_hat = self.v[i] / (1 - self.beta2 ** self.t)
            p.values -= self.learning_rate * m_hat / (np.sqrt(v_hat) + self.eps)


def make_optimizer(params, cfg):
    if cfg.optimizer == 'sgd':
        return SGD(params, cfg.learning_rate)
    return Adam(params, cfg.learning_rate, cfg.betas, cfg.eps)


def evaluate_accuracy(net, graphs):
    if len(graphs) == 0:
        return float('nan')
    preds = [int(np.argmax(net.predict_proba(g))) for g in graphs]
    return float(accuracy_score([g.label for g in graphs], preds))


def mean_predictive_entropy(net, graphs):
    """Entropy (nats) of the softmax output averaged over graphs."""
    if len(graphs) == 0:
        return float('nan')
    q_bar = np.mean([net.predict_proba(g) for g in graphs], axis=0)
    return float(entropy(q_bar))


def _epoch_loss(net, graphs, lam):
    with net.tape.paused():
        outputs = [net.predict_proba_tensor(g) for g in graphs]
        return total_loss(outputs, [g.label for g in graphs], lam).item()


def train_model(net, graphs, cfg, rng=None, eval_graphs=None):
    """
    Fixed-budget training of net on graphs.

    :return: DataFrame with one row per epoch (epoch 0 = before the first update) and
        columns Epoch, Train Loss, Eval Accuracy, Eval Entropy (NaN without eval_graphs)
    """
    if len(graphs) == 0:
        raise ValueError("train_model needs at least one training graph")
    rng = np.random.default_rng(cfg.seed) if rng is None else rng
    eval_graphs = [] if eval_graphs is None else list(eval_graphs)
    optimizer = make_optimizer(net.parameters(), cfg)
    rows = [[0, _epoch_loss(net, graphs, cfg.lambda_), evaluate_accuracy(net, eval_graphs),
             mean_predictive_entropy(net, eval_graphs)]]
    for epoch in tqdm(range(1, cfg.epochs + 1), disable=not cfg.verbose, leave=False):
        order = rng.permutation(len(graphs))
        running = 0.0
        for start in range(0, len(order), cfg.batch_size):
            batch = [graphs[i] for i in order[start:start + cfg.batch_size]]
            outputs = [net.predict_proba_tensor(g) for g in batch]
            loss = total_loss(outputs, [g.label for g in batch], cfg.lambda_)
            running += loss.item() * len(batch)
            optimizer.step(backward(loss))
        rows.append([epoch, running / len(graphs), evaluate_accuracy(net, eval_graphs),
                     mean_predictive_entropy(net, eval_graphs)])
    return pd.DataFrame(rows, columns=['Epoch', 'Train Loss', 'Eval Accuracy', 'Eval Entropy'])


@dataclass
class RunReport:
    label: str
    dataset: str
    method: str
    metric: str
    activation: str
    lambda_: float
    k: int
    parameter_count: int
    runs: list = field(default_factory=list) # {repeat, fold, accuracy, train_loss} sorted by (repeat, fold)

    @property
    def accuracies(self):
        return [r['accuracy'] for r in self.runs]

    @property
    def mean(self):
        return float(np.mean(self.accuracies)) if self.runs else float('nan')

    @property
    def std(self):
        return float(np.std(self.accuracies)) if self.runs else float('nan')

    def to_dict(self):
        d = asdict(self)
        d['mean'] = self.mean
        d['std'] = self.std
        return d

    @classmethod
    def from_dict(cls, d):
        d = {key: value for key, value in d.items() if key not in ('mean', 'std')}
        return cls(**d)

    def to_json(self):
        return json.dumps(self.to_dict(), sort_keys=True, indent=2)

    @classmethod
    def from_json(cls, text):
        return cls.from_dict(json.loads(text))

    def summary_frame(self):
        return pd.DataFrame([[self.label, self.dataset, self.method, self.metric, self.activation, self.lambda_,
                              self.k, self.parameter_count, len(self.runs), self.mean, self.std]],
                            columns=['Label', 'Dataset', 'Method', 'Metric', 'Activation', 'Lambda', 'k',
                                     'Parameters', 'Runs', 'Mean Accuracy', 'Std Accuracy'])


def run_seeds(seed, repeat, fold):
    """(weight init rng, shuffle rng) for one run; independent of the pooling method."""
    return np.random.default_rng([seed, repeat, fold, 0]), np.random.default_rng([seed, repeat, fold, 1])


def fold_split(ds, train_cfg, repeat, fold):
    assignment = stratified_folds(ds, train_cfg.folds, [train_cfg.seed, repeat])
    return np.flatnonzero(assignment != fold), np.flatnonzero(assignment == fold)


def resolve_k(ds, model_cfg):
    return model_cfg.k if model_cfg.k is not None else select_k(ds)


def train_single_run(ds, model_cfg, train_cfg, repeat=0, fold=0, k=None, track_eval=False):
    """
    Train one model on every fold but `fold` of repetition `repeat`.

    :return: (net, history, accuracy on the held-out fold, train index, test index)
    """
    k = resolve_k(ds, model_cfg) if k is None else k
    train_idx, test_idx = fold_split(ds, train_cfg, repeat, fold)
    init_rng, shuffle_rng = run_seeds(train_cfg.seed, repeat, fold)
    net = GPoolNet(ds.feature_dim, ds.class_count, k, model_cfg, init_rng)
    train_graphs = [ds.graphs[i] for i in train_idx]
    test_graphs = [ds.graphs[i] for i in test_idx]
    history = train_model(net, train_graphs, train_cfg, shuffle_rng, test_graphs if track_eval else None)
    accuracy = evaluate_accuracy(net, test_graphs)
    logger.info("%s %s repeat %d fold %d: accuracy %.4f", ds.name, model_cfg.method, repeat, fold, accuracy)
    return net, history, accuracy, train_idx, test_idx


def _run_record(ds, model_cfg, train_cfg, repeat, fold, k):
    _, history, accuracy, _, _ = train_single_run(ds, model_cfg, train_cfg, repeat, fold, k)
    return {'repeat': repeat, 'fold': fold, 'accuracy': accuracy,
            'train_loss': [float(v) for v in history['Train Loss']]}


def run_cross_validation(ds, model_cfg=None, train_cfg=None, jobs=1, label=None):
    """
    Repeated stratified k-fold evaluation. Fold assignments depend only on (seed, repeat) and
    initial weights only on (seed, repeat, fold), so methods compared under one seed share both.
    """
    model_cfg = ModelConfig() if model_cfg is None else model_cfg
    train_cfg = TrainConfig() if train_cfg is None else train_cfg
    k = resolve_k(ds, model_cfg)
    tasks = [(r, f) for r in range(train_cfg.repeats) for f in range(train_cfg.folds)]
    for r in range(train_cfg.repeats):
        stratified_folds(ds, train_cfg.folds, [train_cfg.seed, r])
    records = Parallel(n_jobs=jobs)(delayed(_run_record)(ds, model_cfg, train_cfg, r, f, k) for r, f in tasks)
    records = sorted(records, key=lambda rec: (rec['repeat'], rec['fold']))
    probe = GPoolNet(ds.feature_dim, ds.class_count, k, model_cfg, np.random.default_rng(0))
    label = model_cfg.method if label is None else label
    report = RunReport(label, ds.name, model_cfg.method, model_cfg.metric, model_cfg.activation,
                       float(train_cfg.lambda_), int(k), count_parameters(probe), records)
    logger.info("%s %s: mean accuracy %.4f +/- %.4f over %d runs", ds.name, label, report.mean, report.std, len(records))
    return report
