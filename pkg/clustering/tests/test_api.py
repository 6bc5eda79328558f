from django.contrib.auth import get_user_model
from rest_framework import status
from rest_framework.test import APITestCase

from clustering.models import MetricRecord, ThresholdRecord, TrainingRun
from clustering.pipeline import MetricRow, ThresholdRow, desk_config


class TrainingRunApiTests(APITestCase):

    @classmethod
    def setUpTestData(cls):
        User = get_user_model()
        cls.user = User.objects.create_user(username="analyste", password="mot-de-passe")
        cls.staff = User.objects.create_user(username="admin", password="mot-de-passe", is_staff=True)

        cls.completed_run = TrainingRun.objects.start(desk_config(name="bureau"), "/tmp/runs/bureau")
        MetricRecord.objects.record_rows(cls.completed_run, [
            MetricRow(stage=stage, dataset="toy", snr_db=None, acc=0.5 + stage / 10, nmi=0.4, ari=0.3, purity=0.6)
            for stage in (1, 2, 3)
        ])
        ThresholdRecord.objects.record_rows(cls.completed_run, [ThresholdRow(0, c, 0.99, 0.1) for c in range(4)])
        cls.completed_run.finish(last_stage=3)
        cls.failed = TrainingRun.objects.start(desk_config(name="échec"), "/tmp/runs/echec")
        cls.failed.fail()

    def test_requires_authentication(self):
        response = self.client.get("/api/runs/")
        self.assertEqual(response.status_code, status.HTTP_401_UNAUTHORIZED)

    def test_list_and_filter_by_status(self):
        self.client.force_authenticate(self.user)
        response = self.client.get("/api/runs/")
        self.assertEqual(response.status_code, status.HTTP_200_OK)
        self.assertEqual(response.data["count"], 2)

        response = self.client.get("/api/runs/", {"status": "completed"})
        self.assertEqual([run["name"] for run in response.data["results"]], ["bureau"])

    def test_retrieve(self):
        self.client.force_authenticate(self.user)
        response = self.client.get(f"/api/runs/{self.completed_run.pk}/")
        self.assertEqual(response.data["last_stage"], 3)
        self.assertEqual(response.data["config"]["stage1"]["temperature"], 0.5)

    def test_metrics_and_thresholds_actions(self):
        self.client.force_authenticate(self.user)
        response = self.client.get(f"/api/runs/{self.completed_run.pk}/metrics/")
        self.assertEqual([row["stage"] for row in response.data], [1, 2, 3])

        response = self.client.get(f"/api/runs/{self.completed_run.pk}/metrics/", {"stage": 2})
        self.assertEqual(len(response.data), 1)
        self.assertAlmostEqual(response.data[0]["acc"], 0.7)

        response = self.client.get(f"/api/runs/{self.completed_run.pk}/thresholds/")
        self.assertEqual([row["class_id"] for row in response.data], [0, 1, 2, 3])

    def test_training_is_not_triggered_over_http(self):
        self.client.force_authenticate(self.staff)
        response = self.client.post("/api/runs/", {"name": "nouveau"})
        self.assertEqual(response.status_code, status.HTTP_405_METHOD_NOT_ALLOWED)

    def test_only_staff_can_delete(self):
        self.client.force_authenticate(self.user)
        response = self.client.delete(f"/api/runs/{self.failed.pk}/")
        self.assertEqual(response.status_code, status.HTTP_403_FORBIDDEN)

        self.client.force_authenticate(self.staff)
        response = self.client.delete(f"/api/runs/{self.failed.pk}/")
        self.assertEqual(response.status_code, status.HTTP_204_NO_CONTENT)
        self.assertFalse(TrainingRun.objects.filter(pk=self.failed.pk).exists())

    def test_delete_cascades_to_metrics(self):
        self.client.force_authenticate(self.staff)
        self.client.delete(f"/api/runs/{self.completed_run.pk}/")
        self.assertFalse(MetricRecord.objects.exists())
        self.assertFalse(ThresholdRecord.objects.exists())
