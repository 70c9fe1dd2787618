"""Piecewise-linear utilities: the single- and two-phase primitives, per-goal
dispatch, and the horizon-summed objective.

All utilities are nonpositive and reach zero exactly when the goal (or the
month's contribution target) is met.  Arguments are fractions *remaining*:
1 untouched, 0 complete.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import ConfigError
from .goals import Allocation, GoalKind, GoalSpec, PlanConfig, PlanState


def w1(x: float, p: float) -> float:
    """Single-phase utility: slope -p while any fraction x remains, 0 once done."""
    return -p * max(0.0, x)


def w2(x: float, p: float, q: float, h: float) -> float:
    """Two-phase utility with crossover h: slope magnitude p on x in (h, 1)
    (the urgent first segment), q on x in (0, h)."""
    return -q * max(0.0, x) - (p - q) * max(0.0, x - h)


@dataclass(frozen=True)
class UtilityBreakdown:
    """Per-goal utility values for one month."""

    month: int
    per_goal: dict[str, float]
    total: float


def goal_utility(
    goal: GoalSpec, state: PlanState, allocation: Allocation, config: PlanConfig
) -> float:
    """Utility of one goal at one month.

    Stock goals are scored on the fraction outstanding; contribution goals on
    how far the month's allocation falls short of the target contribution.
    """
    if goal.kind is GoalKind.EMERGENCY_FUND:
        x = _stock_fraction(goal, state, config)
        return w2(x, goal.weight_p, goal.weight_q, goal.crossover_h)
    if goal.is_stock:
        return w1(_stock_fraction(goal, state, config), goal.weight_p)

    pi = float(allocation.fractions[config.slot_of(goal.id)])
    if goal.kind is GoalKind.CONTRIBUTION_401K:
        m_lo, m_hi = goal.min_contrib_frac, goal.max_contrib_frac
        if m_lo is None or m_hi is None or goal.weight_q is None:
            raise ConfigError("401K goal is missing contribution bounds or weight_q")
        shortfall = 1.0 - pi / m_hi
        return w2(shortfall, goal.weight_p, goal.weight_q, (m_hi - m_lo) / m_hi)
    if goal.kind is GoalKind.CONTRIBUTION_IRA:
        if goal.max_contrib_dollars is None:
            raise ConfigError("IRA goal is missing max_contrib_dollars")
        shortfall = 1.0 - state.income * pi / goal.max_contrib_dollars
        return w1(shortfall, goal.weight_p)
    raise ConfigError(f"no utility defined for goal kind {goal.kind}")


def _stock_fraction(goal: GoalSpec, state: PlanState, config: PlanConfig) -> float:
    stock_index = [g.id for _, g in config.stock_goals()].index(goal.id)
    return float(state.fractions_outstanding[stock_index])


def month_utility(
    state: PlanState, allocation: Allocation, config: PlanConfig
) -> UtilityBreakdown:
    per_goal = {
        goal.id: goal_utility(goal, state, allocation, config) for goal in config.goals
    }
    return UtilityBreakdown(
        month=state.month, per_goal=per_goal, total=float(sum(per_goal.values()))
    )


def total_utility(
    trajectory: Sequence[tuple[PlanState, Allocation]], config: PlanConfig
) -> tuple[float, list[UtilityBreakdown]]:
    """Sum of all goal utilities over every month of a trajectory.

    The trajectory holds one (state, allocation) pair per month t = 0..T; the
    final month's allocation incurs contribution utilities but drives no
    further transition.
    """
    breakdowns = [
        month_utility(state, allocation, config) for state, allocation in trajectory
    ]
    return float(sum(b.total for b in breakdowns)), breakdowns
