import numpy as np
import pytest

from payplan.goals import ConstantRate, GoalKind, GoalSpec, PlanConfig


@pytest.fixture
def single_debt_plan():
    """One $1,000 zero-rate debt, $2,000/month income, three months."""
    return PlanConfig(
        initial_income=2000.0,
        horizon_months=3,
        inflation_source=ConstantRate(0.0),
        goals=(
            GoalSpec(
                id="debt",
                kind=GoalKind.DEBT,
                total_amount=1000.0,
                rate_source=ConstantRate(0.0),
                weight_p=1.0,
            ),
        ),
    )


@pytest.fixture
def two_goal_plan():
    """A debt and a savings goal with nonzero rates, two months."""
    return PlanConfig(
        initial_income=1000.0,
        horizon_months=2,
        inflation_source=ConstantRate(0.02),
        goals=(
            GoalSpec(
                id="card",
                kind=GoalKind.DEBT,
                total_amount=500.0,
                rate_source=ConstantRate(0.20),
                weight_p=2.0,
            ),
            GoalSpec(
                id="nest_egg",
                kind=GoalKind.SAVINGS,
                total_amount=5000.0,
                rate_source=ConstantRate(0.05),
                weight_p=1.0,
            ),
        ),
    )


def residual_only(config):
    """Allocation putting all income on the residual slot."""
    from payplan.goals import Allocation

    fractions = np.zeros(config.n_slots)
    fractions[-1] = 1.0
    return Allocation(fractions)
