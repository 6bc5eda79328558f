import tempfile
from io import StringIO
from pathlib import Path

from django.contrib.auth import get_user_model
from django.core.management import CommandError, call_command
from django.test import TestCase
from rest_framework import status
from rest_framework.test import APITestCase

from waveforms.datasets import read_dataset, resolve_dataset
from waveforms.models import DatasetKind, DatasetRecord


class GenCommandTests(TestCase):

    def setUp(self):
        tmp = tempfile.TemporaryDirectory()
        self.addCleanup(tmp.cleanup)
        self.tmp = Path(tmp.name)

    def test_writes_dataset_and_catalogues_it(self):
        out = StringIO()
        call_command("gen", "--dataset", "toy", "--seed", "2", "--scale", "0.02", "--out", str(self.tmp), stdout=out)
        self.assertIn("16 échantillons", out.getvalue())

        record = DatasetRecord.objects.get()
        self.assertEqual(record.kind, DatasetKind.TOY)
        self.assertEqual(record.seed, 2)
        self.assertEqual(record.num_samples, 16)

        dataset = read_dataset(record.path)
        self.assertEqual(dataset.iq.shape, (16, 2, 1024))
        # Un dataset sur disque se relit par son chemin, un type se régénère
        self.assertEqual(len(resolve_dataset(record.path, seed=0)), 16)
        self.assertEqual(resolve_dataset("toy", seed=2, scale=0.02).manifest.seed, 2)

    def test_regenerating_updates_the_same_record(self):
        for _ in range(2):
            call_command("gen", "--dataset", "toy", "--scale", "0.02", "--out", str(self.tmp), stdout=StringIO())
        self.assertEqual(DatasetRecord.objects.count(), 1)

    def test_rejects_non_positive_scale(self):
        with self.assertRaises(CommandError):
            call_command("gen", "--scale", "0", "--out", str(self.tmp), stdout=StringIO())


class DatasetApiTests(APITestCase):

    @classmethod
    def setUpTestData(cls):
        cls.user = get_user_model().objects.create_user(username="analyste", password="mot-de-passe")
        for kind, path in ((DatasetKind.TOY, "/data/toy"), (DatasetKind.DATASET2, "/data/dataset2")):
            DatasetRecord.objects.create(
                name=str(kind), kind=kind, path=path, seed=0, num_samples=10, frame_len=1024, sample_rate_hz=1e8
            )

    def test_requires_authentication(self):
        self.assertEqual(self.client.get("/api/datasets/").status_code, status.HTTP_401_UNAUTHORIZED)

    def test_list_and_filter_by_kind(self):
        self.client.force_authenticate(self.user)
        response = self.client.get("/api/datasets/")
        self.assertEqual(response.data["count"], 2)
        response = self.client.get("/api/datasets/", {"kind": "2"})
        self.assertEqual([item["path"] for item in response.data["results"]], ["/data/dataset2"])

    def test_read_only(self):
        self.client.force_authenticate(self.user)
        response = self.client.post("/api/datasets/", {"name": "x"})
        self.assertEqual(response.status_code, status.HTTP_405_METHOD_NOT_ALLOWED)
