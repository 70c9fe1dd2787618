"""Command-line front end: train policies, evaluate checkpoints, compare
against baselines, and launch the HTTP service.

Exit codes: 0 success, 1 runtime failure, 2 usage or configuration error.
"""

from __future__ import annotations

import json
import sys
from importlib import resources
from pathlib import Path

import click

from .baselines import (
    DOMINANCE_HORIZON,
    even_split_policy,
    waterfall_counterexample,
    waterfall_policy,
)
from .errors import CheckpointError, ConfigError, DataError, ParseError, PayplanError
from .goals import PlanConfig
from .neural import load_checkpoint, save_checkpoint
from .presets import apply_profile, plan_by_name
from .rates import (
    RateTrajectory,
    all_windows,
    constant_trajectory,
    load_rates_dir,
    trajectory_for_config,
    window_at,
)
from .schedule import build_schedule, schedule_to_csv
from .trainer import TrainConfig, feature_spec, rollout, rollout_policy, train_constant, train_stochastic

BUNDLED_RATES = "bundled"
DEFAULT_EVAL_START = "2012-01"  # ten-year reporting window for stochastic runs

_USAGE_ERRORS = (ConfigError, CheckpointError, DataError, ParseError)


def _fail(exc: Exception) -> None:
    click.echo(f"error: {exc}", err=True)
    sys.exit(2 if isinstance(exc, _USAGE_ERRORS) else 1)


def _resolve_rates_dir(rates_dir: str | None) -> Path:
    if rates_dir in (None, BUNDLED_RATES):
        return Path(str(resources.files("payplan.data")))
    return Path(rates_dir)


def _load_plan(plan: str, profile: str) -> PlanConfig:
    path = Path(plan)
    if path.suffix == ".json" or path.exists():
        config = PlanConfig.from_json(path.read_text())
    else:
        config = plan_by_name(plan)
    return apply_profile(config, profile)


def _parse_hidden(hidden: str) -> tuple[int, ...]:
    try:
        dims = tuple(int(part) for part in hidden.split(",") if part.strip())
    except ValueError:
        raise ConfigError(f"--hidden expects comma-separated integers, got {hidden!r}")
    if not dims or any(d < 1 for d in dims):
        raise ConfigError(f"--hidden needs positive layer sizes, got {hidden!r}")
    return dims


def _training_dataset(config: PlanConfig, rates_dir: str | None) -> list[RateTrajectory]:
    if rates_dir is None:
        raise ConfigError(
            "stochastic mode needs --rates-dir (use 'bundled' for the packaged fixtures)"
        )
    series = load_rates_dir(_resolve_rates_dir(rates_dir))
    windows = all_windows(list(series.values()), config.horizon_months)
    return [
        trajectory_for_config(config, config.horizon_months, w) for w in windows
    ]


def _evaluation_trajectory(
    config: PlanConfig, mode: str, rates_dir: str | None
) -> RateTrajectory:
    if mode == "constant":
        return constant_trajectory(config, config.horizon_months)
    series = load_rates_dir(_resolve_rates_dir(rates_dir))
    window = window_at(list(series.values()), DEFAULT_EVAL_START, config.horizon_months)
    return trajectory_for_config(config, config.horizon_months, window)


@click.group()
def main() -> None:
    """Allocate monthly income across financial goals with a learned policy."""


@main.command()
@click.option("--plan", required=True, help="plan JSON path or bundled name (base, base_stochastic)")
@click.option("--profile", default="none", help="weight profile: home_buyer, saver, debtor, none")
@click.option("--mode", type=click.Choice(["constant", "stochastic"]), default="constant")
@click.option("--rates-dir", default=None, help="series directory; 'bundled' for packaged fixtures")
@click.option("--iterations", default=5000, show_default=True)
@click.option("--seed", default=0, show_default=True)
@click.option("--lr", default=1e-3, show_default=True)
@click.option("--batch", default=8, show_default=True, help="trajectories per iteration (stochastic)")
@click.option("--hidden", default="64,64", show_default=True, help="hidden layer sizes")
@click.option("--log-every", default=500, show_default=True, help="progress-line interval; 0 silences")
@click.option("--out", required=True, type=click.Path(), help="output directory")
def train(plan, profile, mode, rates_dir, iterations, seed, lr, batch, hidden, log_every, out):
    """Train a policy and write report.json plus policy.ckpt."""
    try:
        config = _load_plan(plan, profile)
        tc = TrainConfig(
            iterations=iterations,
            lr=lr,
            seed=seed,
            hidden=_parse_hidden(hidden),
            batch_size=batch,
            mode=mode,
            log_every=log_every,
        )
        if mode == "constant":
            report = train_constant(config, tc)
        else:
            dataset = _training_dataset(config, rates_dir)
            report = train_stochastic(config, dataset, tc)

        out_dir = Path(out)
        out_dir.mkdir(parents=True, exist_ok=True)
        ckpt = out_dir / "policy.ckpt"
        meta = {
            "plan": plan,
            "profile": profile,
            "mode": mode,
            "feature_rate_keys": list(feature_spec(config).rate_feature_keys),
        }
        save_checkpoint(ckpt, report.params, meta)
        report.checkpoint = str(ckpt)
        (out_dir / "report.json").write_text(json.dumps(report.to_dict(), indent=2))
        click.echo(f"final V: {report.final_v}")
    except PayplanError as exc:
        _fail(exc)


@main.command()
@click.option("--plan", required=True)
@click.option("--profile", default="none")
@click.option("--checkpoint", required=True, type=click.Path())
@click.option("--mode", type=click.Choice(["constant", "stochastic"]), default="constant")
@click.option("--rates-dir", default=None)
@click.option("--out", required=True, type=click.Path())
def evaluate(plan, profile, checkpoint, mode, rates_dir, out):
    """Roll out a checkpoint and write schedule.csv / schedule.json."""
    try:
        config = _load_plan(plan, profile)
        params, _meta = load_checkpoint(checkpoint)
        expected = feature_spec(config).length
        if params.input_dim != expected:
            raise CheckpointError(
                f"checkpoint input dim {params.input_dim} does not match the plan's "
                f"feature length {expected}"
            )
        if params.output_dim != config.n_slots:
            raise CheckpointError(
                f"checkpoint output dim {params.output_dim} does not match "
                f"{config.n_slots} allocation slots"
            )
        rates = _evaluation_trajectory(config, mode, rates_dir)
        trajectory, value = rollout(params, config, rates)
        schedule = build_schedule(trajectory, config)
        out_dir = Path(out)
        out_dir.mkdir(parents=True, exist_ok=True)
        (out_dir / "schedule.csv").write_text(schedule_to_csv(schedule, config))
        (out_dir / "schedule.json").write_text(json.dumps(schedule, indent=2))
        click.echo(f"total utility: {value}")
    except PayplanError as exc:
        _fail(exc)


@main.command()
@click.option("--plan", required=True, help="plan name/path, or 'counterexample'")
@click.option("--profile", default="none")
@click.option("--checkpoint", default=None, type=click.Path())
@click.option("--mode", type=click.Choice(["constant", "stochastic"]), default="constant")
@click.option("--rates-dir", default=None)
def compare(plan, profile, checkpoint, mode, rates_dir):
    """Side-by-side total utility: learned vs waterfall vs even-split."""
    try:
        if plan == "counterexample":
            scenario = waterfall_counterexample(horizon=DOMINANCE_HORIZON)
            config, rates = scenario.config, scenario.rates
        else:
            config = _load_plan(plan, profile)
            rates = _evaluation_trajectory(config, mode, rates_dir)
        result = {}
        if checkpoint:
            params, _meta = load_checkpoint(checkpoint)
            _, result["learned"] = rollout(params, config, rates)
        _, result["waterfall"] = rollout_policy(waterfall_policy, config, rates)
        _, result["even_split"] = rollout_policy(even_split_policy, config, rates)
        click.echo(json.dumps(result, indent=2))
    except PayplanError as exc:
        _fail(exc)


@main.command()
@click.option("--serve-addr", default="127.0.0.1:8000", show_default=True)
@click.option("--data-dir", default="payplan_data", show_default=True, type=click.Path())
@click.option("--rates-dir", default=BUNDLED_RATES, show_default=True)
@click.option("--max-jobs", default=2, show_default=True)
def serve(serve_addr, data_dir, rates_dir, max_jobs):
    """Run the HTTP API the planning UI drives."""
    try:
        import uvicorn

        from .service import create_app

        host, _, port = serve_addr.partition(":")
        app = create_app(
            data_dir=Path(data_dir),
            rates_dir=_resolve_rates_dir(rates_dir),
            max_jobs=max_jobs,
        )
        uvicorn.run(app, host=host or "127.0.0.1", port=int(port or 8000), log_level="warning")
    except PayplanError as exc:
        _fail(exc)


if __name__ == "__main__":
    main()
