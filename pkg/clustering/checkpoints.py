# clustering/checkpoints.py
"""Fichier de points de contrôle : tenseurs nommés avec en-tête de forme.

Disposition (little-endian) :
    magic b"PCLK" | version u16 | longueur JSON u32 | métadonnées JSON
    nombre de tenseurs u32
    pour chaque tenseur : longueur du nom u16 | nom utf-8 | code dtype u8 |
    ndim u8 | dims u32 × ndim | données brutes
"""
import io
import logging
import struct
from collections import OrderedDict
from pathlib import Path

import numpy as np
from rest_framework.exceptions import ParseError
from rest_framework.parsers import JSONParser
from rest_framework.renderers import JSONRenderer

from clustering.exceptions import CheckpointError

logger = logging.getLogger(__name__)

MAGIC = b"PCLK"
FORMAT_VERSION = 1
DTYPE_CODES = {1: np.dtype("<f4"), 2: np.dtype("<f8"), 3: np.dtype("<i8")}
CODE_OF_DTYPE = {dtype: code for code, dtype in DTYPE_CODES.items()}


def _dtype_code(array):
    dtype = array.dtype.newbyteorder("<")
    if dtype not in CODE_OF_DTYPE:
        raise CheckpointError(f"Type {array.dtype} non pris en charge")
    return CODE_OF_DTYPE[dtype]


def save_checkpoint(path, tensors, metadata=None):
    """Écrit `tensors` (nom → ndarray) et un dictionnaire de métadonnées JSON."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    meta = JSONRenderer().render(metadata or {})

    buffer = io.BytesIO()
    buffer.write(MAGIC)
    buffer.write(struct.pack("<HI", FORMAT_VERSION, len(meta)))
    buffer.write(meta)
    buffer.write(struct.pack("<I", len(tensors)))
    for name, array in tensors.items():
        array = np.asarray(array)
        code = _dtype_code(array)
        encoded = name.encode("utf-8")
        buffer.write(struct.pack("<H", len(encoded)))
        buffer.write(encoded)
        buffer.write(struct.pack("<BB", code, array.ndim))
        buffer.write(struct.pack(f"<{array.ndim}I", *array.shape))
        buffer.write(np.ascontiguousarray(array, dtype=DTYPE_CODES[code]).tobytes())

    path.write_bytes(buffer.getvalue())
    logger.info("Point de contrôle écrit : %s (%d tenseurs)", path, len(tensors))
    return path


class _Reader:

    def __init__(self, data):
        self.data = data
        self.offset = 0

    def take(self, size):
        if self.offset + size > len(self.data):
            raise CheckpointError("Point de contrôle tronqué")
        chunk = self.data[self.offset:self.offset + size]
        self.offset += size
        return chunk

    def unpack(self, fmt):
        return struct.unpack(fmt, self.take(struct.calcsize(fmt)))


def load_checkpoint(path):
    """Renvoie (tenseurs, métadonnées) ; toute incohérence lève CheckpointError."""
    try:
        data = Path(path).read_bytes()
    except OSError as exc:
        raise CheckpointError(f"Lecture impossible de {path} : {exc}") from exc

    reader = _Reader(data)
    if reader.take(len(MAGIC)) != MAGIC:
        raise CheckpointError(f"{path} n'est pas un point de contrôle")
    version, meta_len = reader.unpack("<HI")
    if version != FORMAT_VERSION:
        raise CheckpointError(f"Version {version} non prise en charge (attendu {FORMAT_VERSION})")
    try:
        metadata = JSONParser().parse(io.BytesIO(reader.take(meta_len)))
    except ParseError as exc:
        raise CheckpointError(f"Métadonnées illisibles : {exc}") from exc

    (count,) = reader.unpack("<I")
    tensors = OrderedDict()
    for _ in range(count):
        (name_len,) = reader.unpack("<H")
        name = reader.take(name_len).decode("utf-8")
        code, ndim = reader.unpack("<BB")
        if code not in DTYPE_CODES:
            raise CheckpointError(f"Code de type inconnu {code} pour {name}")
        shape = reader.unpack(f"<{ndim}I")
        dtype = DTYPE_CODES[code]
        size = int(np.prod(shape, dtype=np.int64)) * dtype.itemsize
        tensors[name] = np.frombuffer(reader.take(size), dtype=dtype).reshape(shape).copy()

    if reader.offset != len(data):
        raise CheckpointError(f"{len(data) - reader.offset} octets en trop à la fin de {path}")
    return tensors, metadata
