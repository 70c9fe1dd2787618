"""Training loop: unroll the plan under the policy, accumulate utility,
backpropagate through time, update parameters with ADAM.

The whole horizon-length objective is traced once onto a tape (`PlanGraph`);
each iteration rebinds parameter and rate leaves and re-executes it, so the
per-iteration cost is two passes over a static instruction program.  An
eager `rollout` with identical semantics serves evaluation and baselines.
"""

from __future__ import annotations

import sys
import time
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .errors import ConfigError, DataError, TrainingError
from .goals import (
    INFLATION_KEY,
    Allocation,
    ConstantRate,
    GoalKind,
    GoalSpec,
    PlanConfig,
    PlanState,
    SeriesRate,
    advance,
    initial_state,
    rate_key,
)
from .neural import (
    AdamState,
    PolicyParams,
    Tape,
    adam_step,
    build_policy_graph,
    init_adam,
    init_params,
    policy_forward,
)
from .rates import RateTrajectory, constant_trajectory
from .utility import UtilityBreakdown, total_utility

RATE_FEATURE_SCALE = 100.0  # keep monthly-rate features O(1)


@dataclass(frozen=True)
class FeatureSpec:
    """Policy input layout: stock fractions, normalized month, then any
    series-backed monthly rates (scaled), in a fixed documented order."""

    n_stock: int
    horizon: int
    rate_feature_keys: tuple[str, ...]  # series-backed goal rates in goal order,
    # then inflation when series-backed

    @property
    def length(self) -> int:
        return self.n_stock + 1 + len(self.rate_feature_keys)


def feature_spec(config: PlanConfig) -> FeatureSpec:
    keys: list[str] = []
    for _, goal in config.stock_goals():
        src = goal.rate_source
        if isinstance(src, SeriesRate) and src.series_id not in keys:
            keys.append(src.series_id)
    if isinstance(config.inflation_source, SeriesRate):
        keys.append(INFLATION_KEY)
    return FeatureSpec(
        n_stock=len(config.stock_goals()),
        horizon=config.horizon_months,
        rate_feature_keys=tuple(keys),
    )


def features(spec: FeatureSpec, state: PlanState) -> np.ndarray:
    out = np.empty(spec.length)
    out[: spec.n_stock] = state.fractions_outstanding
    out[spec.n_stock] = state.month / max(spec.horizon, 1)
    for i, key in enumerate(spec.rate_feature_keys):
        out[spec.n_stock + 1 + i] = state.current_rates[key] * RATE_FEATURE_SCALE
    return out


# --- eager rollout -----------------------------------------------------------------


def rollout_policy(
    policy_fn: Callable[[PlanState, PlanConfig], Allocation],
    config: PlanConfig,
    rates: RateTrajectory,
) -> tuple[list[tuple[PlanState, Allocation]], float]:
    """Unroll any state->allocation policy; returns the (state, allocation)
    pairs for t = 0..T and the total utility."""
    _check_coverage(config, rates)
    T = config.horizon_months
    monthly = [rates.at(t) for t in range(T + 1)]
    state = initial_state(config, monthly[0])
    trajectory: list[tuple[PlanState, Allocation]] = []
    for t in range(T + 1):
        allocation = policy_fn(state, config)
        trajectory.append((state, allocation))
        if t < T:
            state = advance(state, allocation, config, monthly[t], monthly[t + 1])
    value, _ = total_utility(trajectory, config)
    return trajectory, value


def rollout(
    params: PolicyParams, config: PlanConfig, rates: RateTrajectory
) -> tuple[list[tuple[PlanState, Allocation]], float]:
    """Deterministic unroll under the neural policy."""
    spec = feature_spec(config)

    def policy(state: PlanState, _config: PlanConfig) -> Allocation:
        return Allocation(policy_forward(params, features(spec, state)))

    return rollout_policy(policy, config, rates)


def _check_coverage(config: PlanConfig, rates: RateTrajectory) -> None:
    needed = config.rate_keys()
    T = config.horizon_months
    for key in needed:
        if key not in rates.rates:
            raise DataError(f"rate trajectory is missing id {key!r}")
        if len(rates.rates[key]) < T + 1:
            raise DataError(
                f"rate series {key!r} covers {len(rates.rates[key])} months, need {T + 1}"
            )


# --- traced plan graph ---------------------------------------------------------------


class PlanGraph:
    """The unrolled objective as a compiled tape: policy forward, monthly
    dynamics, and utilities for every month, differentiable end to end."""

    def __init__(
        self,
        config: PlanConfig,
        hidden: Sequence[int] = (64, 64),
        backend: str | None = None,
    ):
        config.validate()
        self.config = config
        self.spec = feature_spec(config)
        T = config.horizon_months
        n_stock = self.spec.n_stock
        n_slots = config.n_slots
        stock = config.stock_goals()

        tape = Tape()
        dims = [self.spec.length, *hidden, n_slots]
        self.param_nodes = []
        for fan_in, fan_out in zip(dims[:-1], dims[1:]):
            self.param_nodes.append(tape.leaf((fan_out, fan_in)))
            self.param_nodes.append(tape.leaf(fan_out))

        # per-goal constants
        kappa = np.array(
            [0.0 if g.kind is GoalKind.DEBT else 1.0 for _, g in stock]
        )
        inv_totals = np.array([1.0 / g.total_amount for _, g in stock])
        pick = np.zeros((n_stock, n_slots))
        ret_row = None
        for j, (slot, goal) in enumerate(stock):
            pick[j, slot] = 1.0
            if goal.kind is GoalKind.RETIREMENT:
                ret_row = j
        c401k = config.goal_of_kind(GoalKind.CONTRIBUTION_401K)
        ira = config.goal_of_kind(GoalKind.CONTRIBUTION_IRA)
        ef = config.goal_of_kind(GoalKind.EMERGENCY_FUND)
        if ret_row is not None:
            for flow in (c401k, ira):
                if flow is not None:
                    pick[ret_row, config.slot_of(flow.id)] = 1.0

        # per-stock utility slopes: p everywhere, q on the emergency fund
        # (its steeper first segment is added separately)
        slope = np.array(
            [
                g.weight_q if g.kind is GoalKind.EMERGENCY_FUND else g.weight_p
                for _, g in stock
            ]
        )
        ef_index = next(
            (j for j, (_, g) in enumerate(stock) if g.kind is GoalKind.EMERGENCY_FUND),
            None,
        )

        kappa_c = tape.const(kappa)
        inv_totals_c = tape.const(inv_totals)
        pick_c = tape.const(pick)
        slope_c = tape.const(slope)
        match_col_c = None
        if ret_row is not None and c401k is not None and c401k.match_rate:
            col = np.zeros((n_stock, 1))
            col[ret_row, 0] = 1.0
            match_col_c = tape.const(col)

        self.rate_nodes = [tape.leaf(n_stock + 1) for _ in range(T + 1)]
        x = tape.const(np.ones(n_stock))
        income = tape.const([config.initial_income])
        penalty = None
        self._pi_nodes = []

        for t in range(T + 1):
            r_t = self.rate_nodes[t]
            parts = [x, tape.const([t / max(T, 1)])]
            for key in self.spec.rate_feature_keys:
                pos = self._rate_position(key)
                parts.append(tape.scale(tape.slice(r_t, pos, 1), RATE_FEATURE_SCALE))
            feats = tape.concat(parts)
            pi = build_policy_graph(tape, self.param_nodes, feats)
            self._pi_nodes.append(pi)

            # month-t utility (recorded as a positive penalty, negated at the end)
            terms = [tape.dot(slope_c, tape.relu(x))]
            if ef is not None:
                over = tape.shift(tape.slice(x, ef_index, 1), -ef.crossover_h)
                terms.append(tape.scale(tape.relu(over), ef.weight_p - ef.weight_q))
            if c401k is not None:
                short = tape.shift(
                    tape.scale(
                        tape.slice(pi, config.slot_of(c401k.id), 1),
                        -1.0 / c401k.max_contrib_frac,
                    ),
                    1.0,
                )
                h = (c401k.max_contrib_frac - c401k.min_contrib_frac) / c401k.max_contrib_frac
                terms.append(tape.scale(tape.relu(short), c401k.weight_q))
                terms.append(
                    tape.scale(
                        tape.relu(tape.shift(short, -h)),
                        c401k.weight_p - c401k.weight_q,
                    )
                )
            if ira is not None:
                dollars = tape.vsmul(
                    tape.slice(pi, config.slot_of(ira.id), 1), income
                )
                short = tape.shift(
                    tape.scale(dollars, -1.0 / ira.max_contrib_dollars), 1.0
                )
                terms.append(tape.scale(tape.relu(short), ira.weight_p))
            month_pen = terms[0]
            for term in terms[1:]:
                month_pen = tape.add(month_pen, term)
            penalty = month_pen if penalty is None else tape.add(penalty, month_pen)

            if t == T:
                break

            # dynamics: x' = clamp((1+r) x - kappa r - contributions/total)
            rs = tape.slice(r_t, 0, n_stock)
            base = tape.sub(
                tape.mul(tape.shift(rs, 1.0), x), tape.mul(rs, kappa_c)
            )
            dollars = tape.vsmul(tape.matvec(pick_c, pi), income)
            if match_col_c is not None:
                p401 = tape.slice(pi, config.slot_of(c401k.id), 1)
                capped = tape.sub(
                    p401, tape.relu(tape.shift(p401, -(c401k.match_cap_frac or 0.0)))
                )
                match = tape.scale(tape.vsmul(capped, income), c401k.match_rate)
                dollars = tape.add(dollars, tape.matvec(match_col_c, match))
            # debts (kappa 0) clamp below only; savings-type (kappa 1) clamp to [0,1]
            z = tape.sub(base, tape.mul(dollars, inv_totals_c))
            x = tape.sub(
                tape.relu(z), tape.mul(kappa_c, tape.relu(tape.shift(z, -1.0)))
            )
            income = tape.mul(
                income, tape.shift(tape.slice(r_t, n_stock, 1), 1.0)
            )

        value = tape.scale(penalty, -1.0)
        self._ct = tape.compile(value, backend)
        self._bound_rates: RateTrajectory | None = None

    def _rate_position(self, key: str) -> int:
        """Slot of a rate id inside the per-month rate leaf."""
        if key == INFLATION_KEY:
            return self.spec.n_stock
        for j, (_, goal) in enumerate(self.config.stock_goals()):
            if rate_key(goal) == key:
                return j
        raise KeyError(key)

    def bind_params(self, arrays: Sequence[np.ndarray]) -> None:
        for node, arr in zip(self.param_nodes, arrays):
            self._ct.set_value(node, arr)

    def bind_rates(self, trajectory: RateTrajectory) -> None:
        if trajectory is self._bound_rates:
            return
        _check_coverage(self.config, trajectory)
        stock = self.config.stock_goals()
        matrix = np.empty((len(self.rate_nodes), self.spec.n_stock + 1))
        for j, (_, goal) in enumerate(stock):
            matrix[:, j] = trajectory.rates[rate_key(goal)][: len(self.rate_nodes)]
        matrix[:, -1] = trajectory.rates[INFLATION_KEY][: len(self.rate_nodes)]
        for t, node in enumerate(self.rate_nodes):
            self._ct.set_value(node, matrix[t])
        self._bound_rates = trajectory

    def value(self) -> float:
        return self._ct.forward()

    def value_and_param_grads(self) -> tuple[float, list[np.ndarray]]:
        v = self._ct.forward()
        self._ct.backward()
        return v, [self._ct.grad_of(n) for n in self.param_nodes]

    def allocations(self) -> np.ndarray:
        """Per-month allocation matrix from the last forward pass."""
        return np.stack([self._ct.value_of(n) for n in self._pi_nodes])

    @property
    def kink_margin(self) -> float:
        return self._ct.last_kink_margin

    @property
    def compiled(self):
        return self._ct


# --- training -------------------------------------------------------------------


@dataclass(frozen=True)
class TrainConfig:
    iterations: int = 5000
    lr: float = 1e-3
    seed: int = 0
    hidden: tuple[int, ...] = (64, 64)
    batch_size: int = 1
    mode: str = "constant"  # "constant" | "stochastic"
    fixed_batch: bool = False  # reuse dataset[:batch_size] instead of resampling
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    log_every: int = 0  # 0 silences progress lines
    backend: str | None = None

    def validate(self) -> None:
        if self.iterations < 1:
            raise ConfigError("iterations must be >= 1", "iterations")
        if self.batch_size < 1:
            raise ConfigError("batch_size must be >= 1", "batch_size")
        if self.lr <= 0:
            raise ConfigError("lr must be positive", "lr")
        if self.mode not in ("constant", "stochastic"):
            raise ConfigError(f"unknown mode {self.mode!r}", "mode")
        if not self.hidden:
            raise ConfigError("at least one hidden layer", "hidden")


@dataclass
class TrainReport:
    v_history: np.ndarray  # objective value per iteration, pre-update
    params: PolicyParams
    duration_s: float
    mode: str
    seed: int
    checkpoint: str | None = None

    @property
    def initial_v(self) -> float:
        return float(self.v_history[0])

    @property
    def final_v(self) -> float:
        return float(self.v_history[-1])

    def to_dict(self) -> dict:
        return {
            "mode": self.mode,
            "seed": self.seed,
            "iterations": len(self.v_history),
            "initial_v": self.initial_v,
            "final_v": self.final_v,
            "duration_s": self.duration_s,
            "checkpoint": self.checkpoint,
            "v_history": [float(v) for v in self.v_history],
        }


def train_constant(
    plan: PlanConfig,
    train: TrainConfig,
    progress: Callable[[int, float], None] | None = None,
) -> TrainReport:
    """Gradient-ascent training with all rates constant."""
    plan.validate()
    train.validate()
    if train.mode != "constant":
        raise ConfigError("train_constant needs mode='constant'", "mode")
    trajectory = constant_trajectory(plan, plan.horizon_months)
    return _run_training(plan, [trajectory], train, resample=False, progress=progress)


def train_stochastic(
    plan: PlanConfig,
    dataset: Sequence[RateTrajectory],
    train: TrainConfig,
    progress: Callable[[int, float], None] | None = None,
) -> TrainReport:
    """Sample-average training over observed rate trajectories: each iteration
    averages the per-trajectory values and gradients (fixed reduction order)
    and takes one ADAM step.  No rate model is fitted."""
    plan.validate()
    train.validate()
    if train.mode != "stochastic":
        raise ConfigError("train_stochastic needs mode='stochastic'", "mode")
    if not dataset:
        raise DataError("stochastic training needs a non-empty trajectory dataset")
    return _run_training(
        plan, list(dataset), train, resample=not train.fixed_batch, progress=progress
    )


def _run_training(
    plan: PlanConfig,
    dataset: list[RateTrajectory],
    train: TrainConfig,
    resample: bool,
    progress: Callable[[int, float], None] | None,
) -> TrainReport:
    started = time.perf_counter()
    graph = PlanGraph(plan, hidden=train.hidden, backend=train.backend)
    params = init_params(graph.spec.length, list(train.hidden), plan.n_slots, train.seed)
    arrays = params.arrays()
    adam = init_adam(arrays, lr=train.lr, beta1=train.beta1, beta2=train.beta2, eps=train.eps)
    batch_rng = np.random.default_rng([train.seed, 1])

    v_history = np.empty(train.iterations)
    for k in range(train.iterations):
        if resample and len(dataset) > 1:
            batch = [
                dataset[int(i)]
                for i in batch_rng.integers(0, len(dataset), size=train.batch_size)
            ]
        else:
            batch = dataset  # fixed-batch mode: the literal sample average
        graph.bind_params(arrays)
        v_sum = 0.0
        grad_sum: list[np.ndarray] | None = None
        for trajectory in batch:
            graph.bind_rates(trajectory)
            v, grads = graph.value_and_param_grads()
            v_sum += v
            if grad_sum is None:
                grad_sum = grads
            else:
                for acc, g in zip(grad_sum, grads):
                    acc += g
        v_mean = v_sum / len(batch)
        if not np.isfinite(v_mean):
            raise TrainingError(
                f"objective became non-finite at iteration {k}", iteration=k
            )
        v_history[k] = v_mean
        neg_grads = [-(g / len(batch)) for g in grad_sum]
        arrays, adam = adam_step(arrays, neg_grads, adam)
        if train.log_every and (k % train.log_every == 0 or k == train.iterations - 1):
            print(f"iter={k} V={v_mean}", file=sys.stderr)
        if progress is not None:
            progress(k, v_mean)

    return TrainReport(
        v_history=v_history,
        params=PolicyParams.from_arrays(arrays),
        duration_s=time.perf_counter() - started,
        mode=train.mode,
        seed=train.seed,
    )
