"""Reference allocation policies and the two-debt instance where strict
priority ordering fails.

The waterfall policy funds the single unfinished stock goal with the highest
preference weight; the even-split policy spreads income uniformly over all
unfinished stock goals.  On the bundled counterexample the waterfall pays the
small urgent debt first and is then forever consumed by the large debt's
interest, while even-split retires both.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .goals import (
    INFLATION_KEY,
    Allocation,
    ConstantRate,
    GoalKind,
    GoalSpec,
    PlanConfig,
    PlanState,
    rate_key,
)
from .rates import RateTrajectory

COMPLETION_EPS = 0.0  # clamping makes completion exact


def _unfinished_stock_slots(state: PlanState, config: PlanConfig) -> list[tuple[int, GoalSpec]]:
    return [
        (slot, goal)
        for j, (slot, goal) in enumerate(config.stock_goals())
        if state.fractions_outstanding[j] > COMPLETION_EPS
    ]


def waterfall_policy(state: PlanState, config: PlanConfig) -> Allocation:
    """All income to the unfinished stock goal with the highest weight_p
    (ties broken by config order); residual once everything is finished;
    contribution goals receive nothing."""
    fractions = np.zeros(config.n_slots)
    unfinished = _unfinished_stock_slots(state, config)
    if unfinished:
        best_p = max(g.weight_p for _, g in unfinished)
        slot = next(s for s, g in unfinished if g.weight_p == best_p)
        fractions[slot] = 1.0
    else:
        fractions[-1] = 1.0
    return Allocation(fractions)


def even_split_policy(state: PlanState, config: PlanConfig) -> Allocation:
    """Income split uniformly across unfinished stock goals; residual once done."""
    fractions = np.zeros(config.n_slots)
    unfinished = _unfinished_stock_slots(state, config)
    if unfinished:
        share = 1.0 / len(unfinished)
        for slot, _ in unfinished:
            fractions[slot] = share
    else:
        fractions[-1] = 1.0
    return Allocation(fractions)


@dataclass(frozen=True)
class CounterexampleScenario:
    """The two-debt instance plus its expected dollar-denominated paths."""

    config: PlanConfig
    rates: RateTrajectory
    # expected dollars outstanding at t = 0, 1, 2 (then goal 2 declines / sticks)
    waterfall_goal1: tuple[float, float, float]
    waterfall_goal2_stuck_at: float
    even_split_goal1: tuple[float, float, float]
    even_split_goal2: tuple[float, float, float]


# the large debt's per-step rate; quoted per step, so the trajectory is built
# from it directly instead of an annual conversion
_STEP_RATE = 0.001

# The utility ranking only flips once the big debt's payoff becomes reachable
# within the horizon: even-split completes it at month ~14,518, so utility
# dominance over the waterfall is evaluated at this horizon.  At short
# horizons the waterfall scores higher (goal 1's weight-1000 penalty dwarfs
# the big debt's glacial decline), even though it never finishes goal 2.
DOMINANCE_HORIZON = 15_000


def waterfall_counterexample(horizon: int = 60) -> CounterexampleScenario:
    """$1,000/month against two debts: $1,000 at zero interest with priority
    1000, and $1,000,000/(1+r) at per-step rate r=0.001 with priority 1.

    Strict priority ordering clears the small debt first, after which the big
    debt's monthly interest exactly consumes the whole paycheck forever.
    Splitting evenly for two months, then going all-in, pays both down.
    """
    goal2_total = 1_000_000.0 / (1.0 + _STEP_RATE)
    config = PlanConfig(
        initial_income=1000.0,
        horizon_months=horizon,
        inflation_source=ConstantRate(0.0),
        goals=(
            GoalSpec(
                id="goal1",
                kind=GoalKind.DEBT,
                total_amount=1000.0,
                rate_source=ConstantRate(0.0),
                weight_p=1000.0,
            ),
            GoalSpec(
                id="goal2",
                kind=GoalKind.DEBT,
                total_amount=goal2_total,
                rate_source=ConstantRate((1.0 + _STEP_RATE) ** 12 - 1.0),
                weight_p=1.0,
            ),
        ),
    )
    config.validate()
    rates = RateTrajectory(
        start_month=None,
        rates={
            rate_key(config.goals[0]): np.zeros(horizon + 1),
            rate_key(config.goals[1]): np.full(horizon + 1, _STEP_RATE),
            INFLATION_KEY: np.zeros(horizon + 1),
        },
    )
    return CounterexampleScenario(
        config=config,
        rates=rates,
        waterfall_goal1=(1000.0, 0.0, 0.0),
        waterfall_goal2_stuck_at=1_000_000.0,
        even_split_goal1=(1000.0, 500.0, 0.0),
        even_split_goal2=(goal2_total, 999_500.0, 999_999.5),
    )


def dollars_outstanding(
    trajectory: list[tuple[PlanState, Allocation]], config: PlanConfig
) -> np.ndarray:
    """(T+1, n_stock) dollars still outstanding per stock goal per month."""
    totals = np.array([g.total_amount for _, g in config.stock_goals()])
    return np.stack(
        [state.fractions_outstanding * totals for state, _ in trajectory]
    )
