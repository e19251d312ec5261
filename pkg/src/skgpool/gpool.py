import dataclasses
import numpy as np
from sklearn.base import BaseEstimator, ClassifierMixin
from .methods.data_handling import Dataset, Graph, select_k
from .methods.model import GPoolNet, ModelConfig, count_parameters
from .methods.pooling import METHODS, METRICS
from .methods.layers import ACTIVATIONS
from .methods.training import TrainConfig, OPTIMIZERS, train_model, run_seeds
from .methods.diagnostics import dropped_histogram
from .methods.util import write_config_file


class GPOOL(BaseEstimator, ClassifierMixin):
    def __init__(self, method="geometric", k=None, metric="euclidean", alpha=2.0, literal_eq3=False,
                 conv_widths=(32, 32, 32, 32, 1), activation="tanh", include_input=False, hidden=128,
                 epochs=200, learning_rate=1e-3, optimizer="adam", lambda_=0.0, batch_size=32,
                 random_seed=None, verbose=False):

        """
        A Scikit-Learn compatible graph classifier: graph convolutions, a global pooling
        step (sort, geometric or mixed) and a dense readout head.

        ..
            Pooling Parameters

        :param method: global pooling criterion ['sort','geometric','mixed']
        :param k: number of retained nodes; None picks k so that 60% of the training graphs have more than k nodes
        :param metric: pairwise metric used by geometric pooling ['euclidean','inner_product','cosine']
        :param alpha: for 'mixed' pooling - sort pooling first keeps ceil(alpha*k) nodes, geometric pooling then keeps k
        :param literal_eq3: debugging switch that keeps the most similar nodes instead of the least similar

        ..
            Network Parameters

        :param conv_widths: output width of each graph convolution layer
        :param activation: convolution nonlinearity ['tanh','relu']
        :param include_input: prepend the raw node features to the concatenated layer outputs
        :param hidden: width of the hidden dense layer of the readout head

        ..
            Training Parameters

        :param epochs: number of passes over the training graphs
        :param learning_rate: optimizer step size
        :param optimizer: ['adam','sgd']
        :param lambda_: weight of the KL-to-uniform penalty on the output distribution (0 disables it)
        :param batch_size: number of graphs whose gradients are accumulated per update
        :param random_seed: the seed value for weight initialization and shuffling
        :param verbose: Boolean flag to run in 'verbose' mode - display epoch progress
        """
        if method not in METHODS:
            raise Exception("'method' param can only have values of 'sort', 'geometric', or 'mixed'")

        if k is not None and (not self.check_is_int(k) or k < 1):
            raise Exception("'k' param must be a positive integer or None")

        if metric not in METRICS:
            raise Exception("'metric' param can only have values of 'euclidean', 'inner_product', or 'cosine'")

        if not self.check_is_number(alpha) or alpha <= 1:
            raise Exception("'alpha' param must be an int or float larger than 1")

        if literal_eq3 not in (True, False):
            raise Exception("'literal_eq3' param must be a boolean, i.e. True or False")

        if len(conv_widths) == 0 or not all(self.check_is_int(w) and w > 0 for w in conv_widths):
            raise Exception("'conv_widths' param must be a non-empty sequence of positive integers")

        if activation not in ACTIVATIONS:
            raise Exception("'activation' param can only have values of 'tanh' or 'relu'")

        if include_input not in (True, False):
            raise Exception("'include_input' param must be a boolean, i.e. True or False")

        if not self.check_is_int(hidden) or hidden < 1:
            raise Exception("'hidden' param must be a positive integer")

        if not self.check_is_int(epochs) or epochs < 0:
            raise Exception("'epochs' param must be a non-negative integer")

        if not self.check_is_number(learning_rate) or learning_rate <= 0:
            raise Exception("'learning_rate' param must be a positive float")

        if optimizer not in OPTIMIZERS:
            raise Exception("'optimizer' param can only have values of 'adam' or 'sgd'")

        if not self.check_is_number(lambda_) or lambda_ < 0:
            raise Exception("'lambda_' param must be a non-negative int or float")

        if not self.check_is_int(batch_size) or batch_size < 1:
            raise Exception("'batch_size' param must be a positive integer")

        if not self.check_is_int(random_seed) and not random_seed == None:
            raise Exception("'random_seed' param must be an int or None")

        if verbose not in (True, False):
            raise Exception("'verbose' param must be a boolean, i.e. True or False")

        self.method = method
        self.k = k
        self.metric = metric
        self.alpha = alpha
        self.literal_eq3 = literal_eq3
        self.conv_widths = conv_widths
        self.activation = activation
        self.include_input = include_input
        self.hidden = hidden
        self.epochs = epochs
        self.learning_rate = learning_rate
        self.optimizer = optimizer
        self.lambda_ = lambda_
        self.batch_size = batch_size
        self.random_seed = random_seed
        self.verbose = verbose

        self.hasTrained = False

    @staticmethod
    def check_is_int(num):
        """
        :meta private:
        """
        return isinstance(num, (int, np.integer)) and not isinstance(num, bool)

    @staticmethod
    def check_is_number(num):
        """
        :meta private:
        """
        return isinstance(num, (int, float, np.integer, np.floating)) and not isinstance(num, bool)

    def check_x_y(self, x, y):
        """
        Accepts a Dataset, or a list of Graph objects, with optional labels y overriding the
        graph labels. Returns (graphs with dense labels, original class values).

        :meta private:
        """
        if isinstance(x, Dataset):
            graphs = list(x.graphs)
        elif isinstance(x, (list, tuple)) and all(isinstance(g, Graph) for g in x):
            graphs = list(x)
        else:
            raise Exception("x must be a Dataset or a list of Graph objects")
        if len(graphs) == 0:
            raise Exception("x must contain at least one graph")
        if len(set(g.feature_dim for g in graphs)) != 1:
            raise Exception("all graphs in x must share one node feature width")

        if y is None:
            labels = np.array([g.label for g in graphs])
            if isinstance(x, Dataset):
                classes = np.arange(x.class_count)
            else:
                classes = np.arange(labels.max() + 1)
        else:
            labels = np.asarray(y)
            if len(labels) != len(graphs):
                raise Exception("y must have one label per graph")
            classes = np.unique(labels)
        dense = np.searchsorted(classes, labels)
        graphs = [g if g.label == int(c) else dataclasses.replace(g, label=int(c)) for g, c in zip(graphs, dense)]
        return graphs, classes

    def model_config(self, k=None):
        """
        :meta private:
        """
        return ModelConfig(self.method, self.k if k is None else k, self.metric, self.alpha, self.literal_eq3,
                           tuple(self.conv_widths), self.activation, self.include_input, self.hidden)

    def train_config(self):
        """
        :meta private:
        """
        seed = 0 if self.random_seed is None else self.random_seed
        return TrainConfig(epochs=self.epochs, learning_rate=self.learning_rate, optimizer=self.optimizer,
                           lambda_=self.lambda_, seed=seed, batch_size=self.batch_size, verbose=self.verbose)

    def fit(self, x, y=None, eval_set=None):
        """
        Scikit-learn required function for supervised training of GPOOL

        :param x: Dataset or list of Graph training instances
        :param y: None (use graph labels) or array-like {n_graphs} class labels
        :param eval_set: optional Dataset or list of Graph tracked for accuracy and predictive entropy each epoch
        :return: self
        """
        graphs, self.classes_ = self.check_x_y(x, y)
        if self.k is None:
            self.k_ = select_k(Dataset("fit", graphs, len(self.classes_), graphs[0].feature_dim))
        else:
            self.k_ = self.k

        if self.random_seed is None:
            init_rng, shuffle_rng = np.random.default_rng(), np.random.default_rng()
        else:
            init_rng, shuffle_rng = run_seeds(self.random_seed, 0, 0)

        self.model_ = GPoolNet(graphs[0].feature_dim, len(self.classes_), self.k_, self.model_config(self.k_), init_rng)
        eval_graphs = None
        if eval_set is not None:
            eval_graphs, _ = self.check_x_y(eval_set, None)
        self.history_ = train_model(self.model_, graphs, self.train_config(), shuffle_rng, eval_graphs)
        self.hasTrained = True
        return self

    def check_fitted(self):
        """
        :meta private:
        """
        if not self.hasTrained:
            raise Exception("GPOOL must be fit first")

    def predict_proba(self, x):
        """
        :param x: Dataset or list of Graph
        :return: array {n_graphs, n_classes} of class probabilities
        """
        self.check_fitted()
        graphs = x.graphs if isinstance(x, Dataset) else list(x)
        return np.array([self.model_.predict_proba(g) for g in graphs])

    def predict(self, x):
        self.check_fitted()
        return self.classes_[np.argmax(self.predict_proba(x), axis=1)]

    def score(self, x, y=None, sample_weight=None):
        """Mean accuracy; y defaults to the labels stored on the graphs."""
        self.check_fitted()
        if y is None:
            graphs = x.graphs if isinstance(x, Dataset) else list(x)
            y = self.classes_[[g.label for g in graphs]]
        return super().score(x, y, sample_weight)

    def count_parameters(self):
        self.check_fitted()
        return count_parameters(self.model_)

    def get_performance_tracking(self):
        self.check_fitted()
        return self.history_

    def get_dropped_histogram(self, x, method=None, bins=50, value_range=(-1.0, 1.0)):
        self.check_fitted()
        return dropped_histogram(self.model_, x, method, bins, value_range)

    def get_entropy_trace(self):
        """Per-epoch mean predictive entropy on the eval_set passed to fit (NaN without one)."""
        self.check_fitted()
        return self.history_[['Epoch', 'Eval Entropy']].rename(columns={'Eval Entropy': 'Entropy'})

    def save_run_params(self, filename):
        write_config_file(filename, self.get_params())
