"""
Dense double-precision matrices with a reverse-mode gradient tape.

Every operation below takes and returns :class:`Tensor` objects. When any input is attached
to a :class:`Tape`, the operation records a node holding its inputs and a closure that maps
the output gradient to input gradients. :func:`backward` replays the tape in reverse.
"""
import contextlib
import numpy as np
from scipy.special import softmax


class ShapeError(ValueError):
    pass


class DomainError(ValueError):
    pass


class Tape:
    def __init__(self):
        self.nodes = [] # (output, inputs, backward_fn) in recording order
        self.generation = 0 # bumped on clear so stale tensors can be detected
        self.enabled = True

    def __len__(self):
        return len(self.nodes)

    def record(self, output, inputs, backward_fn):
        self.nodes.append((output, inputs, backward_fn))
        return len(self.nodes) - 1

    def clear(self):
        self.nodes = []
        self.generation += 1

    @contextlib.contextmanager
    def paused(self):
        """Run operations on tape-attached tensors without recording them."""
        previous = self.enabled
        self.enabled = False
        try:
            yield self
        finally:
            self.enabled = previous


class Tensor:
    def __init__(self, values, tape=None, trainable=False, name=None):
        values = np.array(values, dtype=np.float64)
        if values.ndim == 0:
            values = values.reshape(1, 1)
        elif values.ndim == 1:
            values = values.reshape(1, -1)
        elif values.ndim != 2:
            raise ShapeError("Tensor values must be at most 2-dimensional, got "+str(values.ndim)+" dimensions")
        self.values = values
        self.tape = tape
        self.trainable = trainable
        self.name = name
        self.node = None
        self.generation = None if tape is None else tape.generation
        self.grad = None

    @property
    def rows(self):
        return self.values.shape[0]

    @property
    def cols(self):
        return self.values.shape[1]

    @property
    def shape(self):
        return self.values.shape

    def item(self):
        if self.values.size != 1:
            raise ShapeError("item() requires a 1x1 tensor, got "+str(self.shape))
        return float(self.values[0, 0])

    def numpy(self):
        return self.values.copy()

    def __repr__(self):
        label = self.name if self.name is not None else "Tensor"
        return label+"("+str(self.rows)+"x"+str(self.cols)+")"


def as_tensor(x):
    return x if isinstance(x, Tensor) else Tensor(x)


def _result(values, inputs, backward_fn):
    tape = None
    for t in inputs:
        if t.tape is not None and t.tape.enabled:
            tape = t.tape
            break
    out = Tensor(values, tape=tape)
    if tape is not None:
        out.node = tape.record(out, inputs, backward_fn)
    return out


def _check_same_shape(a, b, op):
    if a.shape != b.shape:
        raise ShapeError("'"+op+"' needs equal shapes, got "+str(a.shape)+" and "+str(b.shape))


def matmul(a, b):
    a, b = as_tensor(a), as_tensor(b)
    if a.cols != b.rows:
        raise ShapeError("matmul dimension mismatch: "+str(a.shape)+" x "+str(b.shape))
    av, bv = a.values, b.values

    def backward_fn(g):
        return [g @ bv.T, av.T @ g]

    return _result(av @ bv, [a, b], backward_fn)


def _tanh(x, factor):
    z = np.tanh(x.values)
    return z, lambda g: [g * (1.0 - z * z)]


def _relu(x, factor):
    mask = (x.values > 0).astype(np.float64)
    return x.values * mask, lambda g: [g * mask]


def _log(x, factor):
    if np.any(x.values <= 0):
        raise DomainError("log of non-positive entry (min "+str(np.min(x.values))+")")
    xv = x.values
    return np.log(xv), lambda g: [g / xv]


def _exp(x, factor):
    z = np.exp(x.values)
    return z, lambda g: [g * z]


def _scale(x, factor):
    if factor is None:
        raise ValueError("'scale' needs a factor")
    return x.values * factor, lambda g: [g * factor]


def _add(a, b):
    return a.values + b.values, lambda g: [g, g]


def _sub(a, b):
    return a.values - b.values, lambda g: [g, -g]


def _mul(a, b):
    av, bv = a.values, b.values
    return av * bv, lambda g: [g * bv, g * av]


_UNARY = {'tanh': _tanh, 'relu': _relu, 'log': _log, 'exp': _exp, 'scale': _scale}
_BINARY = {'add': _add, 'sub': _sub, 'mul': _mul}


def elementwise(op, *args, factor=None):
    """
    Elementwise operation by name.

    :param op: one of 'tanh', 'relu', 'log', 'exp', 'scale' (unary, 'scale' needs factor)
        or 'add', 'sub', 'mul' (binary, equal shapes)
    """
    args = [as_tensor(a) for a in args]
    if op in _UNARY:
        if len(args) != 1:
            raise ValueError("'"+op+"' takes one operand")
        values, backward_fn = _UNARY[op](args[0], factor)
    elif op in _BINARY:
        if len(args) != 2:
            raise ValueError("'"+op+"' takes two operands")
        _check_same_shape(args[0], args[1], op)
        values, backward_fn = _BINARY[op](args[0], args[1])
    else:
        raise ValueError("unknown elementwise op '"+str(op)+"'")
    return _result(values, args, backward_fn)


def add_bias(x, bias):
    """Add a 1 x cols row vector to every row of x."""
    x, bias = as_tensor(x), as_tensor(bias)
    if bias.rows != 1 or bias.cols != x.cols:
        raise ShapeError("bias must be 1x"+str(x.cols)+", got "+str(bias.shape))

    def backward_fn(g):
        return [g, g.sum(axis=0, keepdims=True)]

    return _result(x.values + bias.values, [x, bias], backward_fn)


def softmax_rows(logits):
    logits = as_tensor(logits)
    # scipy subtracts the row max before exponentiating
    s = softmax(logits.values, axis=1)

    def backward_fn(g):
        return [s * (g - np.sum(g * s, axis=1, keepdims=True))]

    return _result(s, [logits], backward_fn)


def clamp_min(x, floor):
    x = as_tensor(x)
    mask = (x.values > floor).astype(np.float64)
    return _result(np.maximum(x.values, floor), [x], lambda g: [g * mask])


def concat_cols(tensors):
    tensors = [as_tensor(t) for t in tensors]
    if not tensors:
        raise ShapeError("concat_cols needs at least one tensor")
    rows = tensors[0].rows
    for t in tensors:
        if t.rows != rows:
            raise ShapeError("concat_cols row mismatch: "+str(rows)+" vs "+str(t.rows))
    bounds = np.cumsum([0] + [t.cols for t in tensors])

    def backward_fn(g):
        return [g[:, bounds[i]:bounds[i + 1]] for i in range(len(tensors))]

    return _result(np.hstack([t.values for t in tensors]), tensors, backward_fn)


def gather_rows(x, index, pad_to=None):
    """Rows of x at index (in the given order), zero-padded to pad_to rows."""
    x = as_tensor(x)
    index = np.asarray(index, dtype=np.int64)
    count = len(index)
    total = count if pad_to is None else pad_to
    if total < count:
        raise ShapeError("pad_to ("+str(pad_to)+") is smaller than the gathered row count ("+str(count)+")")
    out = np.zeros((total, x.cols))
    out[:count] = x.values[index]
    n_rows = x.rows

    def backward_fn(g):
        gx = np.zeros((n_rows, g.shape[1]))
        np.add.at(gx, index, g[:count])
        return [gx]

    return _result(out, [x], backward_fn)


def flatten(x):
    x = as_tensor(x)
    shape = x.shape
    return _result(x.values.reshape(1, -1), [x], lambda g: [g.reshape(shape)])


def sum_all(x):
    x = as_tensor(x)
    shape = x.shape
    return _result(np.array([[x.values.sum()]]), [x], lambda g: [np.full(shape, g[0, 0])])


def take(x, row, col):
    x = as_tensor(x)
    shape = x.shape

    def backward_fn(g):
        gx = np.zeros(shape)
        gx[row, col] = g[0, 0]
        return [gx]

    return _result(np.array([[x.values[row, col]]]), [x], backward_fn)


def backward(scalar_loss):
    """
    Reverse pass over the loss's tape. Gradients are stored on, and returned for, every
    trainable leaf the loss depends on. The tape is cleared afterwards.

    :return: dict mapping trainable leaf Tensor -> gradient ndarray
    """
    if scalar_loss.shape != (1, 1):
        raise ShapeError("backward needs a 1x1 loss, got "+str(scalar_loss.shape))
    tape = scalar_loss.tape
    if tape is None or scalar_loss.node is None or scalar_loss.generation != tape.generation:
        raise ValueError("loss is not connected to a live gradient tape")

    grads = {id(scalar_loss): np.ones((1, 1))}
    leaves = {}
    for output, inputs, backward_fn in reversed(tape.nodes[:scalar_loss.node + 1]):
        g = grads.pop(id(output), None)
        if g is None:
            continue
        for inp, gi in zip(inputs, backward_fn(g)):
            if inp.node is None and not inp.trainable:
                continue # constant
            key = id(inp)
            grads[key] = gi if key not in grads else grads[key] + gi
            if inp.node is None:
                leaves[key] = inp

    result = {}
    for key, leaf in leaves.items():
        leaf.grad = grads[key]
        result[leaf] = leaf.grad
    tape.clear()
    return result


def numerical_gradient(fn, tensor, step=1e-5, entries=None):
    """
    Central finite differences of scalar fn() with respect to entries of tensor.values.

    :param entries: iterable of (row, col); all entries when None
    :return: dict (row, col) -> derivative estimate
    """
    if entries is None:
        entries = [(i, j) for i in range(tensor.rows) for j in range(tensor.cols)]
    estimates = {}
    for i, j in entries:
        original = tensor.values[i, j]
        tensor.values[i, j] = original + step
        upper = fn()
        tensor.values[i, j] = original - step
        lower = fn()
        tensor.values[i, j] = original
        estimates[(i, j)] = (upper - lower) / (2 * step)
    return estimates
