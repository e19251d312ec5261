import numpy as np
from .tensor import Tensor, ShapeError, matmul, elementwise, concat_cols

ACTIVATIONS = ('tanh', 'relu')


class GraphConvLayer:
    def __init__(self, in_dim, out_dim, activation='tanh', rng=None, tape=None, name=None):
        if activation not in ACTIVATIONS:
            raise ValueError("'activation' must be one of "+str(ACTIVATIONS))
        rng = np.random.default_rng() if rng is None else rng
        bound = np.sqrt(6.0 / (in_dim + out_dim))
        self.activation = activation
        self.W = Tensor(rng.uniform(-bound, bound, size=(in_dim, out_dim)), tape=tape, trainable=True, name=name)

    @property
    def in_dim(self):
        return self.W.rows

    @property
    def out_dim(self):
        return self.W.cols

    def parameters(self):
        return [self.W]


def conv_forward(H, A_hat, layer):
    """sigma(A_hat . H . W) for one graph convolution layer."""
    if H.cols != layer.in_dim:
        raise ShapeError("layer expects "+str(layer.in_dim)+" input columns, got "+str(H.cols))
    if A_hat.shape != (H.rows, H.rows):
        raise ShapeError("normalized adjacency "+str(A_hat.shape)+" does not match "+str(H.rows)+" nodes")
    return elementwise(layer.activation, matmul(A_hat, matmul(H, layer.W)))


class Backbone:
    """
    Stacked graph convolutions whose outputs are concatenated column-wise into H^{0:L}.

    :param in_dim: node feature width d
    :param widths: output width of each conv layer; the final (usually 1-wide) layer drives sort pooling
    :param activation: 'tanh' or 'relu'
    :param include_input: prepend the raw node features to the concatenation
    """
    def __init__(self, in_dim, widths=(32, 32, 32, 32, 1), activation='tanh', include_input=False, rng=None, tape=None):
        if len(widths) == 0:
            raise ValueError("'widths' needs at least one layer")
        self.in_dim = in_dim
        self.include_input = include_input
        self.layers = []
        dims = [in_dim] + list(widths)
        for l in range(len(widths)):
            self.layers.append(GraphConvLayer(dims[l], dims[l + 1], activation, rng, tape, name="W"+str(l)))

    @property
    def output_dim(self):
        return (self.in_dim if self.include_input else 0) + sum(layer.out_dim for layer in self.layers)

    @property
    def last_layer_cols(self):
        end = self.output_dim
        return range(end - self.layers[-1].out_dim, end)

    def parameters(self):
        return [p for layer in self.layers for p in layer.parameters()]


def backbone_forward(g, b):
    if g.feature_dim != b.in_dim:
        raise ShapeError("graph feature width "+str(g.feature_dim)+" differs from backbone input width "+str(b.in_dim))
    A_hat = Tensor(g.normalized_adjacency)
    H = Tensor(g.features)
    parts = [H] if b.include_input else []
    for layer in b.layers:
        H = conv_forward(H, A_hat, layer)
        parts.append(H)
    if len(parts) == 1:
        return parts[0]
    return concat_cols(parts)
