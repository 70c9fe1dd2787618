"""HTTP API integration tests via the in-process test client."""

import json
import time

import pytest
from fastapi.testclient import TestClient

from payplan.presets import base_plan
from payplan.service import create_app


@pytest.fixture
def client(tmp_path):
    app = create_app(data_dir=tmp_path / "data", max_jobs=2)
    return TestClient(app)


def wait_for(client, job_id, timeout=60.0):
    deadline = time.time() + timeout
    while time.time() < deadline:
        record = client.get(f"/jobs/{job_id}").json()
        if record["state"] in ("done", "failed"):
            return record
        time.sleep(0.05)
    raise AssertionError("job did not finish in time")


class TestPlans:
    def test_create_and_fetch(self, client):
        response = client.post("/plans", json=base_plan().to_dict())
        assert response.status_code == 201
        plan_id = response.json()["id"]
        fetched = client.get(f"/plans/{plan_id}")
        assert fetched.status_code == 200
        assert fetched.json() == base_plan().to_dict()

    def test_missing_goals_is_400_with_path(self, client):
        body = base_plan().to_dict()
        body.pop("goals")
        response = client.post("/plans", json=body)
        assert response.status_code == 400
        assert response.json()["path"] == "goals"

    def test_duplicate_retirement_is_400(self, client):
        body = base_plan().to_dict()
        body["goals"].append(dict(body["goals"][4], id="retirement2"))
        response = client.post("/plans", json=body)
        assert response.status_code == 400
        assert "at most one" in response.json()["message"]

    def test_unknown_plan_404(self, client):
        assert client.get("/plans/zzz").status_code == 404


TRAIN_BODY = {"iterations": 60, "seed": 0, "hidden": [16, 16], "mode": "constant"}


class TestJobs:
    def test_job_lifecycle(self, client):
        plan_id = client.post("/plans", json=base_plan().to_dict()).json()["id"]
        response = client.post(f"/plans/{plan_id}/jobs", json=TRAIN_BODY)
        assert response.status_code == 202
        job_id = response.json()["id"]

        record = wait_for(client, job_id)
        assert record["state"] == "done"
        assert record["result"] == f"/jobs/{job_id}/schedule"

        schedule = client.get(f"/jobs/{job_id}/schedule")
        assert schedule.status_code == 200
        body = schedule.json()
        assert len(body["months"]) == 121
        assert body["total_utility"] <= 0.0
        assert set(body["contributions"]) == {g.id for g in base_plan().goals}

    def test_unknown_plan_is_404(self, client):
        assert client.post("/plans/zzz/jobs", json=TRAIN_BODY).status_code == 404

    def test_identical_running_job_is_409(self, client):
        plan_id = client.post("/plans", json=base_plan().to_dict()).json()["id"]
        body = dict(TRAIN_BODY, iterations=4000)
        first = client.post(f"/plans/{plan_id}/jobs", json=body)
        assert first.status_code == 202
        second = client.post(f"/plans/{plan_id}/jobs", json=body)
        assert second.status_code == 409
        wait_for(client, first.json()["id"], timeout=120)

    def test_schedule_before_done_is_409(self, client):
        plan_id = client.post("/plans", json=base_plan().to_dict()).json()["id"]
        job_id = client.post(
            f"/plans/{plan_id}/jobs", json=dict(TRAIN_BODY, iterations=3000)
        ).json()["id"]
        response = client.get(f"/jobs/{job_id}/schedule")
        assert response.status_code == 409
        wait_for(client, job_id, timeout=120)

    def test_unknown_job_404(self, client):
        assert client.get("/jobs/zzz").status_code == 404
        assert client.get("/jobs/zzz/schedule").status_code == 404

    def test_bad_train_config_is_400(self, client):
        plan_id = client.post("/plans", json=base_plan().to_dict()).json()["id"]
        response = client.post(f"/plans/{plan_id}/jobs", json={"iterations": 0})
        assert response.status_code == 400

    def test_identical_jobs_yield_identical_schedules(self, client):
        plan_id = client.post("/plans", json=base_plan().to_dict()).json()["id"]
        first = client.post(f"/plans/{plan_id}/jobs", json=TRAIN_BODY).json()["id"]
        wait_for(client, first)
        second = client.post(f"/plans/{plan_id}/jobs", json=TRAIN_BODY).json()["id"]
        wait_for(client, second)
        a = client.get(f"/jobs/{first}/schedule").content
        b = client.get(f"/jobs/{second}/schedule").content
        assert a == b

    def test_compare_endpoint(self, client):
        plan_id = client.post("/plans", json=base_plan().to_dict()).json()["id"]
        job_id = client.post(f"/plans/{plan_id}/jobs", json=TRAIN_BODY).json()["id"]
        wait_for(client, job_id)
        response = client.get(f"/jobs/{job_id}/compare")
        assert response.status_code == 200
        body = response.json()
        assert set(body) == {"learned", "waterfall", "even_split"}


class TestRates:
    def test_series_listing(self, client):
        response = client.get("/rates/series")
        assert response.status_code == 200
        listing = {s["series_id"]: s for s in response.json()}
        assert set(listing) == {"cpi", "tbill3m", "sp500"}
        assert listing["cpi"]["start"] == "1985-01"
        assert listing["cpi"]["end"] == "2022-12"
