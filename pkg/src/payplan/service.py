"""HTTP API for the planning UI: create plans, launch training jobs, poll
status, fetch schedules and baseline comparisons.

Persistence is plain files under a data directory (plans/, jobs/, results/);
training runs on a small thread pool and jobs report their current iteration
while running.  Errors are JSON `{code, message, path?}`.
"""

from __future__ import annotations

import json
import threading
import uuid
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path
from typing import Any

from fastapi import FastAPI, Request
from fastapi.responses import JSONResponse

from .baselines import even_split_policy, waterfall_policy
from .errors import ConfigError, PayplanError
from .goals import PlanConfig
from .neural import save_checkpoint
from .rates import (
    RateTrajectory,
    all_windows,
    constant_trajectory,
    load_rates_dir,
    month_label,
    trajectory_for_config,
    window_at,
)
from .schedule import build_schedule, schedule_to_csv
from .trainer import TrainConfig, rollout, rollout_policy, train_constant, train_stochastic

DEFAULT_EVAL_START = "2012-01"
PROGRESS_INTERVAL = 50  # iterations between job-status updates


def _error(status: int, message: str, path: str | None = None) -> JSONResponse:
    body: dict[str, Any] = {"code": status, "message": message}
    if path:
        body["path"] = path
    return JSONResponse(status_code=status, content=body)


def _train_config_from_body(body: dict) -> TrainConfig:
    if not isinstance(body, dict):
        raise ConfigError("train config must be a JSON object", "")
    known = {
        "iterations", "lr", "seed", "hidden", "batch_size", "mode",
        "fixed_batch", "log_every",
    }
    unknown = set(body) - known
    if unknown:
        raise ConfigError(f"unknown fields {sorted(unknown)}", "train")
    hidden = body.get("hidden", [64, 64])
    if not isinstance(hidden, list) or not all(isinstance(h, int) and h > 0 for h in hidden):
        raise ConfigError("hidden must be a list of positive integers", "train.hidden")
    tc = TrainConfig(
        iterations=int(body.get("iterations", 5000)),
        lr=float(body.get("lr", 1e-3)),
        seed=int(body.get("seed", 0)),
        hidden=tuple(hidden),
        batch_size=int(body.get("batch_size", 8)),
        mode=str(body.get("mode", "constant")),
        fixed_batch=bool(body.get("fixed_batch", False)),
        log_every=0,
    )
    tc.validate()
    return tc


class JobStore:
    """In-memory job registry mirrored to job files, one lock for all updates."""

    def __init__(self, data_dir: Path):
        self.dir = data_dir / "jobs"
        self.dir.mkdir(parents=True, exist_ok=True)
        self.lock = threading.Lock()
        self.jobs: dict[str, dict] = {}
        for path in self.dir.glob("*.json"):
            record = json.loads(path.read_text())
            if record.get("state") in ("queued", "running"):
                record["state"] = "failed"
                record["reason"] = "interrupted by service restart"
            self.jobs[record["id"]] = record

    def _persist(self, record: dict) -> None:
        (self.dir / f"{record['id']}.json").write_text(json.dumps(record))

    def create(self, plan_id: str, train_body: dict) -> dict:
        record = {
            "id": uuid.uuid4().hex[:12],
            "plan_id": plan_id,
            "train": train_body,
            "state": "queued",
            "iteration": None,
            "reason": None,
        }
        with self.lock:
            self.jobs[record["id"]] = record
            self._persist(record)
        return record

    def get(self, job_id: str) -> dict | None:
        with self.lock:
            record = self.jobs.get(job_id)
            return dict(record) if record else None

    def update(self, job_id: str, **fields) -> None:
        with self.lock:
            record = self.jobs[job_id]
            record.update(fields)
            self._persist(record)

    def running_identical(self, plan_id: str, train_body: dict) -> bool:
        key = json.dumps(train_body, sort_keys=True)
        with self.lock:
            return any(
                r["plan_id"] == plan_id
                and r["state"] in ("queued", "running")
                and json.dumps(r["train"], sort_keys=True) == key
                for r in self.jobs.values()
            )


def create_app(
    data_dir: Path | str = "payplan_data",
    rates_dir: Path | str | None = None,
    max_jobs: int = 2,
) -> FastAPI:
    data_dir = Path(data_dir)
    plans_dir = data_dir / "plans"
    results_dir = data_dir / "results"
    plans_dir.mkdir(parents=True, exist_ok=True)
    results_dir.mkdir(parents=True, exist_ok=True)
    store = JobStore(data_dir)
    executor = ThreadPoolExecutor(max_workers=max_jobs)

    app = FastAPI(title="payplan service")

    @app.exception_handler(PayplanError)
    def _payplan_error(_request: Request, exc: PayplanError):
        path = getattr(exc, "path", None)
        return _error(400, str(exc), path)

    def _plan_path(plan_id: str) -> Path:
        return plans_dir / f"{plan_id}.json"

    def _load_plan(plan_id: str) -> PlanConfig | None:
        path = _plan_path(plan_id)
        if not path.exists():
            return None
        return PlanConfig.from_json(path.read_text())

    def _evaluation_trajectory(config: PlanConfig, mode: str) -> RateTrajectory:
        if mode == "constant":
            return constant_trajectory(config, config.horizon_months)
        series = list(load_rates_dir(rates_dir or _bundled_rates()).values())
        window = window_at(series, DEFAULT_EVAL_START, config.horizon_months)
        return trajectory_for_config(config, config.horizon_months, window)

    def _run_job(job_id: str, config: PlanConfig, tc: TrainConfig) -> None:
        try:
            store.update(job_id, state="running", iteration=0)

            def progress(k: int, _v: float) -> None:
                if k % PROGRESS_INTERVAL == 0:
                    store.update(job_id, iteration=k)

            if tc.mode == "constant":
                report = train_constant(config, tc, progress=progress)
            else:
                series = list(load_rates_dir(rates_dir or _bundled_rates()).values())
                windows = all_windows(series, config.horizon_months)
                dataset = [
                    trajectory_for_config(config, config.horizon_months, w)
                    for w in windows
                ]
                report = train_stochastic(config, dataset, tc, progress=progress)

            rates = _evaluation_trajectory(config, tc.mode)
            trajectory, _value = rollout(report.params, config, rates)
            schedule = build_schedule(trajectory, config)

            out = results_dir / job_id
            out.mkdir(parents=True, exist_ok=True)
            ckpt = out / "policy.ckpt"
            save_checkpoint(ckpt, report.params)
            report.checkpoint = str(ckpt)
            (out / "report.json").write_text(json.dumps(report.to_dict()))
            (out / "schedule.json").write_text(json.dumps(schedule))
            (out / "schedule.csv").write_text(schedule_to_csv(schedule, config))
            store.update(job_id, state="done", iteration=tc.iterations)
        except Exception as exc:  # surfaced through job status, not the API
            store.update(job_id, state="failed", reason=str(exc))

    @app.post("/plans", status_code=201)
    def create_plan(body: dict):
        config = PlanConfig.from_dict(body)  # ConfigError -> 400 via handler
        plan_id = uuid.uuid4().hex[:12]
        _plan_path(plan_id).write_text(config.to_json())
        return {"id": plan_id}

    @app.get("/plans/{plan_id}")
    def get_plan(plan_id: str):
        config = _load_plan(plan_id)
        if config is None:
            return _error(404, f"unknown plan {plan_id!r}")
        return config.to_dict()

    @app.post("/plans/{plan_id}/jobs", status_code=202)
    def start_job(plan_id: str, body: dict):
        config = _load_plan(plan_id)
        if config is None:
            return _error(404, f"unknown plan {plan_id!r}")
        tc = _train_config_from_body(body)
        if store.running_identical(plan_id, body):
            return _error(409, "an identical job is already queued or running")
        record = store.create(plan_id, body)
        executor.submit(_run_job, record["id"], config, tc)
        return {"id": record["id"]}

    @app.get("/jobs/{job_id}")
    def get_job(job_id: str):
        record = store.get(job_id)
        if record is None:
            return _error(404, f"unknown job {job_id!r}")
        if record["state"] == "done":
            record["result"] = f"/jobs/{job_id}/schedule"
        return record

    def _require_done(job_id: str):
        record = store.get(job_id)
        if record is None:
            return None, _error(404, f"unknown job {job_id!r}")
        if record["state"] != "done":
            return None, _error(409, f"job is {record['state']}, not finished")
        return record, None

    @app.get("/jobs/{job_id}/schedule")
    def get_schedule(job_id: str):
        _record, err = _require_done(job_id)
        if err is not None:
            return err
        return json.loads((results_dir / job_id / "schedule.json").read_text())

    @app.get("/jobs/{job_id}/compare")
    def get_compare(job_id: str):
        record, err = _require_done(job_id)
        if err is not None:
            return err
        config = _load_plan(record["plan_id"])
        schedule = json.loads((results_dir / job_id / "schedule.json").read_text())
        mode = record["train"].get("mode", "constant")
        rates = _evaluation_trajectory(config, mode)
        _, v_waterfall = rollout_policy(waterfall_policy, config, rates)
        _, v_even = rollout_policy(even_split_policy, config, rates)
        return {
            "learned": schedule["total_utility"],
            "waterfall": v_waterfall,
            "even_split": v_even,
        }

    @app.get("/rates/series")
    def rates_series():
        series = load_rates_dir(rates_dir or _bundled_rates())
        return [
            {
                "series_id": s.series_id,
                "start": month_label(s.start),
                "end": month_label(s.end - 1),
                "observations": len(s),
                "source": s.source,
            }
            for s in series.values()
        ]

    return app


def _bundled_rates() -> Path:
    from importlib import resources

    return Path(str(resources.files("payplan.data")))
