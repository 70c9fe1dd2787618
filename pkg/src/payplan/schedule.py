"""Plot-ready schedule data: per-month dollar contributions, fractions
outstanding, income, and utility for one rolled-out plan.

The JSON and CSV forms carry identical numbers; the CSV column order is part
of the contract (golden-file tested).
"""

from __future__ import annotations

import io
from typing import Sequence

import numpy as np

from .goals import Allocation, GoalKind, PlanConfig, PlanState, employer_match
from .utility import total_utility


def build_schedule(
    trajectory: Sequence[tuple[PlanState, Allocation]], config: PlanConfig
) -> dict:
    """Assemble the schedule document from a rolled-out trajectory."""
    total, breakdowns = total_utility(trajectory, config)
    goal_ids = [g.id for g in config.goals]
    stock_ids = [g.id for _, g in config.stock_goals()]
    c401k = config.goal_of_kind(GoalKind.CONTRIBUTION_401K)

    months, income, residual, match, utility = [], [], [], [], []
    contributions = {gid: [] for gid in goal_ids}
    fractions = {gid: [] for gid in stock_ids}
    per_goal_utility = {gid: [] for gid in goal_ids}

    for (state, allocation), breakdown in zip(trajectory, breakdowns):
        pi = allocation.fractions
        months.append(state.month)
        income.append(state.income)
        residual.append(state.income * float(pi[-1]))
        for slot, gid in enumerate(goal_ids):
            contributions[gid].append(state.income * float(pi[slot]))
        m = 0.0
        if c401k is not None and c401k.match_rate:
            m = employer_match(
                float(pi[config.slot_of(c401k.id)]),
                state.income,
                c401k.match_rate,
                c401k.match_cap_frac or 0.0,
            )
        match.append(m)
        for j, gid in enumerate(stock_ids):
            fractions[gid].append(float(state.fractions_outstanding[j]))
        utility.append(breakdown.total)
        for gid in goal_ids:
            per_goal_utility[gid].append(breakdown.per_goal[gid])

    return {
        "months": months,
        "income": income,
        "contributions": contributions,
        "employer_match": match,
        "residual": residual,
        "fractions_outstanding": fractions,
        "utility": utility,
        "utility_breakdown": per_goal_utility,
        "total_utility": total,
        "completion_months": completion_months_from_fractions(fractions),
    }


def completion_months_from_fractions(fractions: dict[str, list[float]]) -> dict:
    """First month each stock goal reaches fraction 0 exactly; None if never."""
    out = {}
    for gid, series in fractions.items():
        out[gid] = next((t for t, x in enumerate(series) if x == 0.0), None)
    return out


def schedule_to_csv(schedule: dict, config: PlanConfig) -> str:
    """Stable-order CSV: month, income, one contribution column per goal,
    employer match, residual, one fraction column per stock goal, utility."""
    goal_ids = [g.id for g in config.goals]
    stock_ids = [g.id for _, g in config.stock_goals()]
    out = io.StringIO()
    header = (
        ["month", "income"]
        + [f"contrib_{gid}" for gid in goal_ids]
        + ["employer_match", "residual"]
        + [f"frac_{gid}" for gid in stock_ids]
        + ["utility"]
    )
    out.write(",".join(header) + "\n")
    for i, month in enumerate(schedule["months"]):
        row = [str(month), repr(schedule["income"][i])]
        row += [repr(schedule["contributions"][gid][i]) for gid in goal_ids]
        row += [repr(schedule["employer_match"][i]), repr(schedule["residual"][i])]
        row += [repr(schedule["fractions_outstanding"][gid][i]) for gid in stock_ids]
        row.append(repr(schedule["utility"][i]))
        out.write(",".join(row) + "\n")
    return out.getvalue()


def cumulative_retirement_contribution(
    schedule: dict, config: PlanConfig, through_month: int
) -> float:
    """Dollars that flowed into the retirement goal in months [0, through_month):
    direct, 401K, IRA, and employer match."""
    flow_ids = [
        g.id
        for g in config.goals
        if g.kind in (GoalKind.RETIREMENT, GoalKind.CONTRIBUTION_401K, GoalKind.CONTRIBUTION_IRA)
    ]
    upto = min(through_month, len(schedule["months"]))
    total = sum(
        sum(schedule["contributions"][gid][:upto]) for gid in flow_ids
    )
    return float(total + sum(schedule["employer_match"][:upto]))
