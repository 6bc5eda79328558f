# clustering/nn.py
"""Couches du réseau (convolution 1D, pooling, normalisations, attention).

Les noyaux numériques sont écrits directement sur numpy avec leur gradient
exact ; les couches composées (layer norm, attention, feedforward) réutilisent
les opérations de `clustering.autodiff`.
"""
import logging
from collections import OrderedDict

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from clustering.autodiff import (
    DEFAULT_DTYPE,
    Tensor,
    make_node,
    parameter,
    relu,
    softmax,
)
from clustering.exceptions import CheckpointError, ShapeError

logger = logging.getLogger(__name__)

BATCHNORM_MOMENTUM = 0.1
NORM_EPS = 1e-5


# -----------------
# Noyaux
# -----------------

def conv1d(x, weight, bias=None, stride=1, padding=0):
    """Corrélation croisée : x (B, C, L), weight (O, C, K) → (B, O, L')."""
    if x.ndim != 3 or weight.ndim != 3 or x.shape[1] != weight.shape[1]:
        raise ShapeError(f"conv1d : entrée {x.shape} et noyau {weight.shape}")
    kernel = weight.shape[2]
    padded_len = x.shape[2] + 2 * padding
    if kernel > padded_len:
        raise ShapeError(f"conv1d : noyau {weight.shape} plus long que l'entrée {x.shape} (padding {padding})")

    xp = np.pad(x.data, ((0, 0), (0, 0), (padding, padding)))
    # (B, C, L', K)
    windows = sliding_window_view(xp, kernel, axis=2)[:, :, ::stride, :]
    out_len = windows.shape[2]
    out = np.tensordot(windows, weight.data, axes=([1, 3], [1, 2])).transpose(0, 2, 1)

    def backward(g):
        grad_w = np.tensordot(g, windows, axes=([0, 2], [0, 2]))
        grad_xp = np.zeros_like(xp)
        stop = stride * (out_len - 1) + 1
        for k in range(kernel):
            grad_xp[:, :, k:k + stop:stride] += np.einsum("bot,oc->bct", g, weight.data[:, :, k])
        return grad_xp[:, :, padding:padding + x.shape[2]], grad_w

    out = make_node(np.ascontiguousarray(out), (x, weight), "conv1d", backward)
    if bias is not None:
        out = out + bias.reshape(1, -1, 1)
    return out


def _pool_windows(x, window):
    if x.ndim != 3:
        raise ShapeError(f"pooling : entrée {x.shape}, attendu (B, C, L)")
    if window < 1 or window > x.shape[2]:
        raise ShapeError(f"pooling : fenêtre {window} pour une entrée {x.shape}")
    batch, channels, length = x.shape
    out_len = length // window
    return x.data[:, :, :out_len * window].reshape(batch, channels, out_len, window)


def maxpool1d(x, window):
    """Pas = fenêtre ; les échantillons en surplus sont ignorés."""
    blocks = _pool_windows(x, window)
    index = blocks.argmax(axis=-1)[..., None]
    out = np.take_along_axis(blocks, index, axis=-1)[..., 0]

    def backward(g):
        grad_blocks = np.zeros_like(blocks)
        np.put_along_axis(grad_blocks, index, g[..., None], axis=-1)
        grad = np.zeros_like(x.data)
        grad[:, :, :blocks.shape[2] * window] = grad_blocks.reshape(blocks.shape[0], blocks.shape[1], -1)
        return (grad,)

    return make_node(out, (x,), "maxpool1d", backward)


def avgpool1d(x, window):
    blocks = _pool_windows(x, window)
    out = blocks.mean(axis=-1)

    def backward(g):
        grad = np.zeros_like(x.data)
        grad[:, :, :blocks.shape[2] * window] = np.repeat(g / window, window, axis=-1)
        return (grad,)

    return make_node(out, (x,), "avgpool1d", backward)


def _channel_axes(x):
    if x.ndim == 3:
        return (0, 2), (1, -1, 1)
    if x.ndim == 2:
        return (0,), (1, -1)
    raise ShapeError(f"batchnorm1d : entrée {x.shape}, attendu (B, C) ou (B, C, L)")


def batchnorm1d(x, gamma, beta, running_mean, running_var, training=True,
                momentum=BATCHNORM_MOMENTUM, eps=NORM_EPS):
    """Normalisation par canal ; en entraînement, met à jour les statistiques glissantes en place."""
    axes, view = _channel_axes(x)
    if gamma.shape != (x.shape[1],):
        raise ShapeError(f"batchnorm1d : entrée {x.shape} et échelle {gamma.shape}")

    if not training:
        scale = gamma.reshape(view) / np.sqrt(running_var.reshape(view) + eps)
        return (x - running_mean.reshape(view)) * scale + beta.reshape(view)

    count = x.data.size // x.shape[1]
    mean = x.data.mean(axis=axes, keepdims=True)
    var = x.data.var(axis=axes, keepdims=True)
    inv_std = 1.0 / np.sqrt(var + eps)
    xhat = (x.data - mean) * inv_std
    out = xhat * gamma.data.reshape(view) + beta.data.reshape(view)

    running_mean *= 1 - momentum
    running_mean += momentum * mean.reshape(-1)
    unbiased = var.reshape(-1) * count / max(count - 1, 1)
    running_var *= 1 - momentum
    running_var += momentum * unbiased

    def backward(g):
        dxhat = g * gamma.data.reshape(view)
        dx = inv_std / count * (
            count * dxhat
            - dxhat.sum(axis=axes, keepdims=True)
            - xhat * (dxhat * xhat).sum(axis=axes, keepdims=True)
        )
        return dx, (g * xhat).sum(axis=axes), g.sum(axis=axes)

    return make_node(out.astype(x.dtype), (x, gamma, beta), "batchnorm1d", backward)


def layer_norm(x, gamma, beta, eps=NORM_EPS):
    mu = x.mean(axis=-1, keepdims=True)
    centered = x - mu
    var = (centered * centered).mean(axis=-1, keepdims=True)
    return centered / (var + eps) ** 0.5 * gamma + beta


def positional_encoding(length, dim, dtype=DEFAULT_DTYPE):
    """Encodage sinusoïdal (length, dim), ajouté avant les couches d'attention."""
    position = np.arange(length)[:, None]
    rates = np.exp(-np.log(10000.0) * (np.arange(0, dim, 2) / dim))
    table = np.zeros((length, dim))
    table[:, 0::2] = np.sin(position * rates)
    table[:, 1::2] = np.cos(position * rates[:dim // 2])
    return table.astype(dtype)


# -----------------
# Couches
# -----------------

class Module:
    """Conteneur de paramètres ; les sous-modules sont découverts par attribut."""

    def __init__(self):
        self.training = True
        self._buffers = OrderedDict()

    def __call__(self, *args, **kwargs):
        return self.forward(*args, **kwargs)

    def forward(self, *args, **kwargs):
        raise NotImplementedError

    def _children(self):
        for name, value in vars(self).items():
            if isinstance(value, Module):
                yield name, value
            elif isinstance(value, (list, tuple)):
                for index, item in enumerate(value):
                    if isinstance(item, Module):
                        yield f"{name}.{index}", item

    def named_parameters(self, prefix=""):
        for name, value in vars(self).items():
            if isinstance(value, Tensor) and value.requires_grad:
                yield prefix + name, value
        for name, child in self._children():
            yield from child.named_parameters(f"{prefix}{name}.")

    def parameters(self):
        return [tensor for _, tensor in self.named_parameters()]

    def named_buffers(self, prefix=""):
        for name, value in self._buffers.items():
            yield prefix + name, value
        for name, child in self._children():
            yield from child.named_buffers(f"{prefix}{name}.")

    def state_dict(self):
        state = OrderedDict((name, tensor.data.copy()) for name, tensor in self.named_parameters())
        state.update((name, buffer.copy()) for name, buffer in self.named_buffers())
        return state

    def load_state_dict(self, state, strict=True):
        targets = OrderedDict((name, tensor.data) for name, tensor in self.named_parameters())
        targets.update(self.named_buffers())
        missing = [name for name in targets if name not in state]
        unexpected = [name for name in state if name not in targets]
        if strict and (missing or unexpected):
            raise CheckpointError(f"Clés manquantes {missing}, clés inattendues {unexpected}")
        for name, array in targets.items():
            if name not in state:
                continue
            value = np.asarray(state[name])
            if value.shape != array.shape:
                raise ShapeError(f"{name} : forme {value.shape} pour un paramètre {array.shape}")
            array[...] = value

    def train(self, mode=True):
        self.training = mode
        for _, child in self._children():
            child.train(mode)
        return self

    def eval(self):
        return self.train(False)

    def zero_grad(self):
        for tensor in self.parameters():
            tensor.zero_grad()

    def num_parameters(self):
        return sum(tensor.size for tensor in self.parameters())


class Linear(Module):

    def __init__(self, in_features, out_features, rng, bias=True, dtype=DEFAULT_DTYPE):
        super().__init__()
        bound = 1.0 / np.sqrt(in_features)
        self.weight = parameter(rng.uniform(-bound, bound, (in_features, out_features)), dtype)
        self.bias = parameter(rng.uniform(-bound, bound, out_features), dtype) if bias else None

    def forward(self, x):
        out = x @ self.weight
        return out + self.bias if self.bias is not None else out


class Conv1d(Module):

    def __init__(self, in_channels, out_channels, kernel_size, rng, stride=1, padding=None,
                 bias=True, dtype=DEFAULT_DTYPE):
        super().__init__()
        bound = 1.0 / np.sqrt(in_channels * kernel_size)
        self.weight = parameter(rng.uniform(-bound, bound, (out_channels, in_channels, kernel_size)), dtype)
        self.bias = parameter(rng.uniform(-bound, bound, out_channels), dtype) if bias else None
        self.stride = stride
        # "same" pour un noyau impair
        self.padding = kernel_size // 2 if padding is None else padding

    def forward(self, x):
        return conv1d(x, self.weight, self.bias, self.stride, self.padding)


class BatchNorm1d(Module):

    def __init__(self, num_features, momentum=BATCHNORM_MOMENTUM, eps=NORM_EPS, dtype=DEFAULT_DTYPE):
        super().__init__()
        self.gamma = parameter(np.ones(num_features), dtype)
        self.beta = parameter(np.zeros(num_features), dtype)
        self.momentum = momentum
        self.eps = eps
        self._buffers["running_mean"] = np.zeros(num_features, dtype=dtype)
        self._buffers["running_var"] = np.ones(num_features, dtype=dtype)

    def forward(self, x):
        return batchnorm1d(
            x, self.gamma, self.beta,
            self._buffers["running_mean"], self._buffers["running_var"],
            training=self.training, momentum=self.momentum, eps=self.eps,
        )


class LayerNorm(Module):

    def __init__(self, dim, eps=NORM_EPS, dtype=DEFAULT_DTYPE):
        super().__init__()
        self.gamma = parameter(np.ones(dim), dtype)
        self.beta = parameter(np.zeros(dim), dtype)
        self.eps = eps

    def forward(self, x):
        return layer_norm(x, self.gamma, self.beta, self.eps)


class MultiHeadAttention(Module):
    """Attention produit scalaire normalisée, dimension par tête = dim / heads."""

    def __init__(self, dim, num_heads, rng, dtype=DEFAULT_DTYPE):
        super().__init__()
        if dim % num_heads:
            raise ShapeError(f"dimension {dim} non divisible par {num_heads} têtes")
        self.num_heads = num_heads
        self.head_dim = dim // num_heads
        self.query = Linear(dim, dim, rng, dtype=dtype)
        self.key = Linear(dim, dim, rng, dtype=dtype)
        self.value = Linear(dim, dim, rng, dtype=dtype)
        self.output = Linear(dim, dim, rng, dtype=dtype)

    def _split(self, x, batch, length):
        return x.reshape(batch, length, self.num_heads, self.head_dim).transpose(0, 2, 1, 3)

    def forward(self, x):
        batch, length, dim = x.shape
        q = self._split(self.query(x), batch, length)
        k = self._split(self.key(x), batch, length)
        v = self._split(self.value(x), batch, length)
        scores = (q @ k.transpose(0, 1, 3, 2)) * (1.0 / np.sqrt(self.head_dim))
        context = softmax(scores, axis=-1) @ v
        return self.output(context.transpose(0, 2, 1, 3).reshape(batch, length, dim))


class FeedForward(Module):

    def __init__(self, dim, hidden_dim, rng, dtype=DEFAULT_DTYPE):
        super().__init__()
        self.inner = Linear(dim, hidden_dim, rng, dtype=dtype)
        self.outer = Linear(hidden_dim, dim, rng, dtype=dtype)

    def forward(self, x):
        return self.outer(relu(self.inner(x)))


class TransformerEncoderLayer(Module):
    """Attention puis feedforward, chacun avec connexion résiduelle et layer norm (post-norm)."""

    def __init__(self, dim, num_heads, ffn_dim, rng, dtype=DEFAULT_DTYPE):
        super().__init__()
        self.attention = MultiHeadAttention(dim, num_heads, rng, dtype=dtype)
        self.norm1 = LayerNorm(dim, dtype=dtype)
        self.feedforward = FeedForward(dim, ffn_dim, rng, dtype=dtype)
        self.norm2 = LayerNorm(dim, dtype=dtype)

    def forward(self, x):
        x = self.norm1(x + self.attention(x))
        return self.norm2(x + self.feedforward(x))
