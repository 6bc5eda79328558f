# clustering/autodiff.py
"""Différentiation automatique en mode inverse sur des tableaux numpy réels.

Chaque opération crée un nœud qui garde ses parents et une fermeture
`_backward` ; `Tensor.backward()` parcourt le graphe en ordre topologique
inverse et accumule les gradients. Les feuilles (paramètres) conservent leur
gradient d'un appel à l'autre, les nœuds intermédiaires sont remis à zéro.
"""
import contextlib
import logging
import threading

import numpy as np

from clustering.exceptions import ShapeError

logger = logging.getLogger(__name__)

DEFAULT_DTYPE = np.float32

_state = threading.local()


def is_grad_enabled():
    return getattr(_state, "grad_enabled", True)


@contextlib.contextmanager
def no_grad():
    """Désactive la construction du graphe (inférence)."""
    previous = is_grad_enabled()
    _state.grad_enabled = False
    try:
        yield
    finally:
        _state.grad_enabled = previous


def _as_array(value, dtype=None):
    array = np.asarray(value, dtype=dtype)
    if not np.issubdtype(array.dtype, np.floating):
        array = array.astype(dtype or DEFAULT_DTYPE)
    return array


def unbroadcast(grad, shape):
    """Somme le gradient sur les axes ajoutés ou étendus par le broadcasting."""
    while grad.ndim > len(shape):
        grad = grad.sum(axis=0)
    for axis, size in enumerate(shape):
        if size == 1 and grad.shape[axis] != 1:
            grad = grad.sum(axis=axis, keepdims=True)
    return grad


def _broadcast_shape(a, b, op):
    try:
        return np.broadcast_shapes(a.shape, b.shape)
    except ValueError as exc:
        raise ShapeError(f"{op} : formes incompatibles {a.shape} et {b.shape}") from exc


class Tensor:
    """Tableau dense participant au graphe de calcul."""

    # ndarray (op) Tensor délègue aux opérateurs réfléchis
    __array_ufunc__ = None

    def __init__(self, data, requires_grad=False, dtype=None, _parents=(), _op=""):
        self.data = _as_array(data, dtype)
        self.requires_grad = requires_grad
        self.grad = None
        self._parents = _parents
        self._backward = None
        self._op = _op

    def __repr__(self):
        return f"Tensor(shape={self.shape}, op={self._op or 'leaf'}, requires_grad={self.requires_grad})"

    @property
    def shape(self):
        return self.data.shape

    @property
    def ndim(self):
        return self.data.ndim

    @property
    def dtype(self):
        return self.data.dtype

    @property
    def size(self):
        return self.data.size

    def __len__(self):
        return self.data.shape[0]

    def item(self):
        return float(self.data.reshape(-1)[0])

    def numpy(self):
        return self.data

    def detach(self):
        return Tensor(self.data, dtype=self.dtype)

    def zero_grad(self):
        self.grad = None

    def _accumulate(self, grad):
        grad = np.asarray(grad, dtype=self.data.dtype)
        if grad.shape != self.data.shape:
            raise ShapeError(f"gradient de forme {grad.shape} pour un tenseur {self.data.shape}")
        self.grad = grad.copy() if self.grad is None else self.grad + grad

    def backward(self, grad=None):
        if grad is None:
            if self.data.size != 1:
                raise ShapeError(f"backward() sans gradient exige un scalaire, forme {self.shape}")
            grad = np.ones_like(self.data)
        order = _topological_order(self)
        for node in order:
            if node._backward is not None:
                node.grad = None
        self._accumulate(grad)
        for node in reversed(order):
            if node._backward is not None and node.grad is not None:
                node._backward(node.grad)

    # Opérateurs
    def __add__(self, other):
        return add(self, other)

    def __radd__(self, other):
        return add(other, self)

    def __sub__(self, other):
        return sub(self, other)

    def __rsub__(self, other):
        return sub(other, self)

    def __mul__(self, other):
        return mul(self, other)

    def __rmul__(self, other):
        return mul(other, self)

    def __truediv__(self, other):
        return div(self, other)

    def __rtruediv__(self, other):
        return div(other, self)

    def __neg__(self):
        return neg(self)

    def __pow__(self, exponent):
        return power(self, exponent)

    def __matmul__(self, other):
        return matmul(self, other)

    def __getitem__(self, index):
        return getitem(self, index)

    def sum(self, axis=None, keepdims=False):
        return tsum(self, axis, keepdims)

    def mean(self, axis=None, keepdims=False):
        return mean(self, axis, keepdims)

    def reshape(self, *shape):
        if len(shape) == 1 and isinstance(shape[0], (tuple, list)):
            shape = tuple(shape[0])
        return reshape(self, shape)

    def transpose(self, *axes):
        if len(axes) == 1 and isinstance(axes[0], (tuple, list)):
            axes = tuple(axes[0])
        return transpose(self, axes or None)

    @property
    def T(self):
        return transpose(self, None)

    def relu(self):
        return relu(self)

    def exp(self):
        return exp(self)

    def log(self):
        return log(self)


def parameter(data, dtype=DEFAULT_DTYPE):
    return Tensor(np.array(data, dtype=dtype), requires_grad=True)


def as_tensor(value, like=None):
    if isinstance(value, Tensor):
        return value
    return Tensor(value, dtype=like.dtype if like is not None else None)


def _topological_order(root):
    order, visited = [], set()
    stack = [(root, False)]
    while stack:
        node, expanded = stack.pop()
        if expanded:
            order.append(node)
            continue
        if id(node) in visited:
            continue
        visited.add(id(node))
        stack.append((node, True))
        for parent in node._parents:
            if id(parent) not in visited:
                stack.append((parent, False))
    return order


def make_node(data, parents, op, backward):
    """Crée le nœud résultat ; le graphe n'est gardé que si un parent exige un gradient."""
    track = is_grad_enabled() and any(p.requires_grad for p in parents)
    out = Tensor(data, requires_grad=track, dtype=data.dtype, _parents=parents if track else (), _op=op)
    if track:
        def _backward(grad):
            for parent, parent_grad in zip(parents, backward(grad)):
                if parent_grad is not None and parent.requires_grad:
                    parent._accumulate(parent_grad)
        out._backward = _backward
    return out


# -----------------
# Opérations élémentaires
# -----------------

def add(a, b):
    a, b = as_tensor(a, b if isinstance(b, Tensor) else None), as_tensor(b, a if isinstance(a, Tensor) else None)
    _broadcast_shape(a, b, "add")
    return make_node(
        a.data + b.data, (a, b), "add",
        lambda g: (unbroadcast(g, a.shape), unbroadcast(g, b.shape)),
    )


def sub(a, b):
    a, b = as_tensor(a, b if isinstance(b, Tensor) else None), as_tensor(b, a if isinstance(a, Tensor) else None)
    _broadcast_shape(a, b, "sub")
    return make_node(
        a.data - b.data, (a, b), "sub",
        lambda g: (unbroadcast(g, a.shape), unbroadcast(-g, b.shape)),
    )


def neg(a):
    return make_node(-a.data, (a,), "neg", lambda g: (-g,))


def mul(a, b):
    a, b = as_tensor(a, b if isinstance(b, Tensor) else None), as_tensor(b, a if isinstance(a, Tensor) else None)
    _broadcast_shape(a, b, "mul")
    return make_node(
        a.data * b.data, (a, b), "mul",
        lambda g: (unbroadcast(g * b.data, a.shape), unbroadcast(g * a.data, b.shape)),
    )


def div(a, b):
    a, b = as_tensor(a, b if isinstance(b, Tensor) else None), as_tensor(b, a if isinstance(a, Tensor) else None)
    _broadcast_shape(a, b, "div")
    return make_node(
        a.data / b.data, (a, b), "div",
        lambda g: (
            unbroadcast(g / b.data, a.shape),
            unbroadcast(-g * a.data / (b.data ** 2), b.shape),
        ),
    )


def power(a, exponent):
    exponent = float(exponent)
    return make_node(
        a.data ** exponent, (a,), "pow",
        lambda g: (g * exponent * a.data ** (exponent - 1),),
    )


def matmul(a, b):
    """Produit matriciel (avec lots) ; les deux opérandes ont au moins 2 dimensions."""
    if a.ndim < 2 or b.ndim < 2 or a.shape[-1] != b.shape[-2]:
        raise ShapeError(f"matmul : formes incompatibles {a.shape} et {b.shape}")
    try:
        out = np.matmul(a.data, b.data)
    except ValueError as exc:
        raise ShapeError(f"matmul : formes incompatibles {a.shape} et {b.shape}") from exc
    return make_node(
        out, (a, b), "matmul",
        lambda g: (
            unbroadcast(np.matmul(g, np.swapaxes(b.data, -1, -2)), a.shape),
            unbroadcast(np.matmul(np.swapaxes(a.data, -1, -2), g), b.shape),
        ),
    )


def relu(a):
    mask = a.data > 0
    return make_node(np.where(mask, a.data, 0).astype(a.dtype), (a,), "relu", lambda g: (g * mask,))


def exp(a):
    out = np.exp(a.data)
    return make_node(out, (a,), "exp", lambda g: (g * out,))


def log(a):
    return make_node(np.log(a.data), (a,), "log", lambda g: (g / a.data,))


def _expand(grad, shape, axis, keepdims):
    if axis is not None and not keepdims:
        grad = np.expand_dims(grad, axis)
    return np.broadcast_to(grad, shape)


def tsum(a, axis=None, keepdims=False):
    out = np.asarray(a.data.sum(axis=axis, keepdims=keepdims))
    return make_node(out, (a,), "sum", lambda g: (_expand(g, a.shape, axis, keepdims),))


def mean(a, axis=None, keepdims=False):
    out = np.asarray(a.data.mean(axis=axis, keepdims=keepdims))
    count = a.data.size // max(out.size, 1)
    return make_node(out, (a,), "mean", lambda g: (_expand(g, a.shape, axis, keepdims) / count,))


def softmax(a, axis=-1):
    shifted = a.data - a.data.max(axis=axis, keepdims=True)
    e = np.exp(shifted)
    out = e / e.sum(axis=axis, keepdims=True)
    return make_node(
        out, (a,), "softmax",
        lambda g: (out * (g - (g * out).sum(axis=axis, keepdims=True)),),
    )


def log_softmax(a, axis=-1):
    shifted = a.data - a.data.max(axis=axis, keepdims=True)
    log_norm = np.log(np.exp(shifted).sum(axis=axis, keepdims=True))
    out = shifted - log_norm
    return make_node(
        out, (a,), "log_softmax",
        lambda g: (g - np.exp(out) * g.sum(axis=axis, keepdims=True),),
    )


def reshape(a, shape):
    try:
        out = a.data.reshape(shape)
    except ValueError as exc:
        raise ShapeError(f"reshape : {a.shape} vers {shape}") from exc
    return make_node(out, (a,), "reshape", lambda g: (g.reshape(a.shape),))


def transpose(a, axes=None):
    axes = tuple(reversed(range(a.ndim))) if axes is None else tuple(axes)
    inverse = tuple(np.argsort(axes))
    return make_node(a.data.transpose(axes), (a,), "transpose", lambda g: (g.transpose(inverse),))


def concat(tensors, axis=0):
    tensors = [as_tensor(t) for t in tensors]
    try:
        out = np.concatenate([t.data for t in tensors], axis=axis)
    except ValueError as exc:
        shapes = " et ".join(str(t.shape) for t in tensors)
        raise ShapeError(f"concat : formes incompatibles {shapes}") from exc
    bounds = np.cumsum([t.shape[axis] for t in tensors])[:-1]
    return make_node(out, tuple(tensors), "concat", lambda g: tuple(np.split(g, bounds, axis=axis)))


def getitem(a, index):
    """Tranche ou indexation avancée ; les indices répétés accumulent leur gradient."""
    out = np.asarray(a.data[index])

    def backward(g):
        grad = np.zeros_like(a.data)
        np.add.at(grad, index, g)
        return (grad,)

    return make_node(out, (a,), "getitem", backward)


def l2_normalize(a, axis=-1, eps=1e-12):
    norm = ((a * a).sum(axis=axis, keepdims=True) + eps) ** 0.5
    return a / norm
