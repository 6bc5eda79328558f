# clustering/encoder.py
"""Encodeur Trans-CNN : blocs convolutifs, deux couches d'attention, tête de projection."""
import logging

import numpy as np
from attrs import evolve, field, frozen, validators

from clustering.autodiff import DEFAULT_DTYPE, Tensor, l2_normalize, no_grad, relu
from clustering.exceptions import ShapeError
from clustering.nn import (
    BatchNorm1d,
    Conv1d,
    Linear,
    Module,
    TransformerEncoderLayer,
    maxpool1d,
    positional_encoding,
)
from waveforms.synth import FRAME_LENGTH

logger = logging.getLogger(__name__)

IQ_CHANNELS = 2


@frozen
class EncoderConfig:
    channels: tuple = field(default=(32, 64, 128, 256), converter=tuple)
    kernels: tuple = field(default=(5, 5, 5, 3), converter=tuple)
    pool_window: int = field(default=2, validator=validators.ge(1))
    num_layers: int = field(default=2, validator=validators.ge(0))
    num_heads: int = field(default=8, validator=validators.ge(1))
    ffn_dim: int = field(default=128, validator=validators.ge(1))
    feature_dim: int = field(default=128, validator=validators.ge(1))
    projection_dim: int = field(default=12, validator=validators.ge(1))
    scale: int = field(default=1, validator=validators.ge(1))
    frame_len: int = field(default=FRAME_LENGTH, validator=validators.ge(1))

    def __attrs_post_init__(self):
        if len(self.channels) != len(self.kernels):
            raise ShapeError(f"{len(self.channels)} largeurs de canaux pour {len(self.kernels)} noyaux")
        if self.feature_dim % self.num_heads:
            raise ShapeError(f"feature_dim {self.feature_dim} non divisible par {self.num_heads} têtes")
        if self.sequence_length < 1:
            raise ShapeError(
                f"frame_len {self.frame_len} trop court pour {len(self.channels)} poolings de {self.pool_window}"
            )

    @property
    def scaled_channels(self):
        """Largeurs réduites ; la dernière reste un multiple du nombre de têtes."""
        widths = [max(1, c // self.scale) for c in self.channels]
        widths[-1] = max(self.num_heads, -(-widths[-1] // self.num_heads) * self.num_heads)
        return tuple(widths)

    @property
    def model_dim(self):
        return self.scaled_channels[-1]

    @property
    def scaled_ffn_dim(self):
        return max(1, self.ffn_dim // self.scale)

    @property
    def sequence_length(self):
        return self.frame_len // self.pool_window ** len(self.channels)

    def with_classes(self, num_classes):
        return evolve(self, projection_dim=num_classes)


class ConvBlock(Module):
    """conv → batchnorm → relu → pooling."""

    def __init__(self, in_channels, out_channels, kernel_size, pool_window, rng, dtype=DEFAULT_DTYPE):
        super().__init__()
        # Sans biais : la batchnorm le neutralise
        self.conv = Conv1d(in_channels, out_channels, kernel_size, rng, bias=False, dtype=dtype)
        self.norm = BatchNorm1d(out_channels, dtype=dtype)
        self.pool_window = pool_window

    def forward(self, x):
        return maxpool1d(relu(self.norm(self.conv(x))), self.pool_window)


class TransCNN(Module):

    def __init__(self, config, seed=0, dtype=DEFAULT_DTYPE):
        super().__init__()
        self.config = config
        self.dtype = np.dtype(dtype)
        rng = np.random.default_rng(seed)

        widths = (IQ_CHANNELS,) + config.scaled_channels
        self.blocks = [
            ConvBlock(widths[i], widths[i + 1], config.kernels[i], config.pool_window, rng, dtype=dtype)
            for i in range(len(config.kernels))
        ]
        self.layers = [
            TransformerEncoderLayer(config.model_dim, config.num_heads, config.scaled_ffn_dim, rng, dtype=dtype)
            for _ in range(config.num_layers)
        ]
        self.fc = Linear(config.model_dim, config.feature_dim, rng, dtype=dtype)
        self.head = Linear(config.feature_dim, config.projection_dim, rng, dtype=dtype)
        self.positions = positional_encoding(config.sequence_length, config.model_dim, dtype)

    def features(self, x):
        if not isinstance(x, Tensor):
            x = Tensor(np.asarray(x, dtype=self.dtype))
        if x.ndim != 3 or x.shape[1:] != (IQ_CHANNELS, self.config.frame_len):
            raise ShapeError(f"Entrée {x.shape}, attendu (B, {IQ_CHANNELS}, {self.config.frame_len})")
        h = x
        for block in self.blocks:
            h = block(h)
        # (B, D, S) → (B, S, D)
        h = h.transpose(0, 2, 1) + self.positions
        for layer in self.layers:
            h = layer(h)
        return self.fc(h.mean(axis=1))

    def forward(self, x):
        """Renvoie (caractéristiques (B, feature_dim), projections (B, projection_dim))."""
        features = self.features(x)
        return features, self.head(features)

    def encode(self, x, normalize=True):
        """Caractéristiques d'inférence (la tête de projection est ignorée)."""
        with no_grad():
            features = self.features(x)
            if normalize:
                features = l2_normalize(features)
        return features.data


def build_encoder(config, num_classes=None, seed=0, dtype=DEFAULT_DTYPE):
    if num_classes is not None:
        config = config.with_classes(num_classes)
    encoder = TransCNN(config, seed=seed, dtype=dtype)
    logger.debug("Encodeur construit : %d paramètres", encoder.num_parameters())
    return encoder
