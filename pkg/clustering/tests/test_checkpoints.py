import struct
import tempfile
from collections import OrderedDict
from pathlib import Path

import numpy as np
from django.test import SimpleTestCase

from clustering.checkpoints import MAGIC, load_checkpoint, save_checkpoint
from clustering.exceptions import CheckpointError


class CheckpointTests(SimpleTestCase):

    def setUp(self):
        tmp = tempfile.TemporaryDirectory()
        self.addCleanup(tmp.cleanup)
        self.path = Path(tmp.name) / "nested" / "stage1.ckpt"
        self.tensors = OrderedDict([
            ("blocks.0.conv.weight", np.arange(24, dtype=np.float32).reshape(2, 3, 4)),
            ("head.bias", np.array([0.5, -1.25])),
            ("steps", np.array(7, dtype=np.int64)),
        ])
        self.metadata = {"stage": 1, "encoder": {"channels": [4, 8]}, "history": [1.5, 1.25]}

    def test_round_trip(self):
        save_checkpoint(self.path, self.tensors, self.metadata)
        tensors, metadata = load_checkpoint(self.path)
        self.assertEqual(list(tensors), list(self.tensors))
        for name, array in self.tensors.items():
            self.assertEqual(tensors[name].dtype, array.dtype)
            np.testing.assert_array_equal(tensors[name], array)
        self.assertEqual(metadata, self.metadata)

    def _corrupt(self, mutate):
        save_checkpoint(self.path, self.tensors, self.metadata)
        data = bytearray(self.path.read_bytes())
        self.path.write_bytes(bytes(mutate(data)))
        with self.assertRaises(CheckpointError):
            load_checkpoint(self.path)

    def test_bad_magic(self):
        self._corrupt(lambda data: b"XXXX" + data[len(MAGIC):])

    def test_unknown_version(self):
        self._corrupt(lambda data: data[:4] + struct.pack("<H", 99) + data[6:])

    def test_truncated(self):
        self._corrupt(lambda data: data[:-3])

    def test_trailing_bytes(self):
        self._corrupt(lambda data: data + b"\x00")

    def test_unknown_dtype_code(self):
        def mutate(data):
            (meta_len,) = struct.unpack("<I", data[6:10])
            offset = 10 + meta_len + 4 + 2 + len("blocks.0.conv.weight")
            data[offset] = 42
            return data
        self._corrupt(mutate)

    def test_missing_file(self):
        with self.assertRaises(CheckpointError):
            load_checkpoint(self.path)

    def test_unsupported_dtype(self):
        with self.assertRaises(CheckpointError):
            save_checkpoint(self.path, {"z": np.zeros(2, dtype=np.complex64)})
