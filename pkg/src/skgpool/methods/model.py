from dataclasses import dataclass, asdict
import numpy as np
from .tensor import Tape, Tensor, ShapeError, matmul, add_bias, elementwise, flatten, softmax_rows
from .layers import Backbone, backbone_forward, ACTIVATIONS
from .pooling import PoolingConfig, pool, METHODS, METRICS


@dataclass
class ModelConfig:
    method: str = 'geometric'
    k: int = None # None -> select_k on the dataset
    metric: str = 'euclidean'
    alpha: float = 2.0
    literal_eq3: bool = False
    conv_widths: tuple = (32, 32, 32, 32, 1)
    activation: str = 'tanh'
    include_input: bool = False
    hidden: int = 128

    def __post_init__(self):
        self.conv_widths = tuple(int(w) for w in self.conv_widths)
        if self.method not in METHODS:
            raise ValueError("'method' must be one of "+str(METHODS))
        if self.metric not in METRICS:
            raise ValueError("'metric' must be one of "+str(METRICS))
        if self.activation not in ACTIVATIONS:
            raise ValueError("'activation' must be one of "+str(ACTIVATIONS))
        if self.k is not None and self.k < 1:
            raise ValueError("'k' must be a positive integer or None")
        if self.hidden < 1 or not self.conv_widths or min(self.conv_widths) < 1:
            raise ValueError("'hidden' and every conv width must be positive")

    def pooling_config(self, k=None):
        k = self.k if k is None else k
        return PoolingConfig(self.method, int(k), self.metric, self.alpha, self.literal_eq3)

    def to_dict(self):
        d = asdict(self)
        d['conv_widths'] = list(self.conv_widths)
        return d


class DenseLayer:
    def __init__(self, in_dim, out_dim, rng, tape, name):
        bound = np.sqrt(6.0 / (in_dim + out_dim))
        self.W = Tensor(rng.uniform(-bound, bound, size=(in_dim, out_dim)), tape=tape, trainable=True, name=name+".W")
        self.b = Tensor(np.zeros((1, out_dim)), tape=tape, trainable=True, name=name+".b")

    def __call__(self, x):
        return add_bias(matmul(x, self.W), self.b)

    def parameters(self):
        return [self.W, self.b]


class ClassifierHead:
    def __init__(self, k, width, n_classes, hidden=128, rng=None, tape=None):
        rng = np.random.default_rng() if rng is None else rng
        self.k = k
        self.width = width
        self.hidden = DenseLayer(k * width, hidden, rng, tape, "hidden")
        self.out = DenseLayer(hidden, n_classes, rng, tape, "out")

    def parameters(self):
        return self.hidden.parameters() + self.out.parameters()


def head_forward(pooled, head):
    if pooled.shape != (head.k, head.width):
        raise ShapeError("head expects a "+str(head.k)+"x"+str(head.width)+" pooled matrix, got "+str(pooled.shape))
    return head.out(elementwise('tanh', head.hidden(flatten(pooled))))


class GPoolNet:
    """
    Backbone -> pooling -> classifier head for one graph at a time.
    The network owns its gradient tape; all of its parameters are leaves on that tape.
    """
    def __init__(self, in_dim, n_classes, k, config=None, rng=None):
        self.config = ModelConfig() if config is None else config
        rng = np.random.default_rng() if rng is None else rng
        self.tape = Tape()
        self.in_dim = in_dim
        self.n_classes = n_classes
        self.pooling = self.config.pooling_config(k)
        self.backbone = Backbone(in_dim, self.config.conv_widths, self.config.activation,
                                 self.config.include_input, rng, self.tape)
        self.head = ClassifierHead(self.pooling.k, self.backbone.output_dim, n_classes, self.config.hidden, rng, self.tape)

    @property
    def k(self):
        return self.pooling.k

    def parameters(self):
        return self.backbone.parameters() + self.head.parameters()

    def forward(self, g):
        H = backbone_forward(g, self.backbone)
        selection = pool(H, self.pooling, self.backbone.last_layer_cols)
        return head_forward(selection.pooled, self.head)

    def predict_proba_tensor(self, g):
        return softmax_rows(self.forward(g))

    def predict_proba(self, g):
        with self.tape.paused():
            return self.predict_proba_tensor(g).values[0].copy()

    def pooled_features(self, g):
        """H^{0:L} for g without recording."""
        with self.tape.paused():
            return backbone_forward(g, self.backbone).values.copy()


def count_parameters(model):
    params = model.parameters() if hasattr(model, 'parameters') else list(model)
    return int(sum(p.values.size for p in params))
