"""Bundled plan presets and the three persona weight profiles.

The base plan: $7,500 monthly income, 2% inflation, ten-year horizon, seven
goals (credit card, student loan, mortgage down payment, emergency fund,
retirement, 401K, IRA).  The stochastic variant maps the mortgage savings
rate to the 3-month T-bill series, the retirement rate to the S&P 500
series, and inflation to the CPI series.

Profiles scale preference weights only:
  home_buyer  mortgage p=20, everything else 1
  saver       retirement/401K(p,q)/IRA p=20, emergency fund p=5 q=3, else 1
  debtor      credit card and student loan p=20, emergency fund p=5 q=3, else 1
"""

from __future__ import annotations

from dataclasses import replace

from .errors import ConfigError
from .goals import ConstantRate, GoalKind, GoalSpec, PlanConfig, SeriesRate

# emergency tiers: $1,800 urgent on top of $9,000; crossover at the tier boundary
_EF_TOTAL = 10800.0
_EF_CROSSOVER = 9000.0 / 10800.0

# the down-payment savings sit in a risk-free-like instrument; a 2% constant
# stands in (the T-bill series takes over in stochastic mode)
_MORTGAGE_SAVINGS_RATE = 0.02


def _base_goals(stochastic: bool) -> tuple[GoalSpec, ...]:
    mortgage_rate = (
        SeriesRate("tbill3m") if stochastic else ConstantRate(_MORTGAGE_SAVINGS_RATE)
    )
    retirement_rate = SeriesRate("sp500") if stochastic else ConstantRate(0.10)
    return (
        GoalSpec(
            id="credit_card",
            kind=GoalKind.DEBT,
            total_amount=825.0,
            rate_source=ConstantRate(0.20),
        ),
        GoalSpec(
            id="student_loan",
            kind=GoalKind.DEBT,
            total_amount=80000.0,
            rate_source=ConstantRate(0.04),
        ),
        GoalSpec(
            id="mortgage_down_payment",
            kind=GoalKind.SAVINGS,
            total_amount=157000.0,
            rate_source=mortgage_rate,
        ),
        GoalSpec(
            id="emergency_fund",
            kind=GoalKind.EMERGENCY_FUND,
            total_amount=_EF_TOTAL,
            rate_source=ConstantRate(0.0),
            weight_q=1.0,
            crossover_h=_EF_CROSSOVER,
        ),
        GoalSpec(
            id="retirement",
            kind=GoalKind.RETIREMENT,
            total_amount=1_000_000.0,
            rate_source=retirement_rate,
        ),
        GoalSpec(
            id="c401k",
            kind=GoalKind.CONTRIBUTION_401K,
            weight_q=1.0,
            min_contrib_frac=0.06,
            max_contrib_frac=0.13,
            match_rate=1.0,
            match_cap_frac=0.06,
        ),
        GoalSpec(
            id="ira",
            kind=GoalKind.CONTRIBUTION_IRA,
            max_contrib_dollars=500.0,
        ),
    )


def base_plan(stochastic: bool = False) -> PlanConfig:
    config = PlanConfig(
        initial_income=7500.0,
        horizon_months=120,
        inflation_source=SeriesRate("cpi") if stochastic else ConstantRate(0.02),
        goals=_base_goals(stochastic),
    )
    config.validate()
    return config


PROFILES: dict[str, dict[str, dict[str, float]]] = {
    "home_buyer": {"mortgage_down_payment": {"weight_p": 20.0}},
    "saver": {
        "retirement": {"weight_p": 20.0},
        "c401k": {"weight_p": 20.0, "weight_q": 20.0},
        "ira": {"weight_p": 20.0},
        "emergency_fund": {"weight_p": 5.0, "weight_q": 3.0},
    },
    "debtor": {
        "credit_card": {"weight_p": 20.0},
        "student_loan": {"weight_p": 20.0},
        "emergency_fund": {"weight_p": 5.0, "weight_q": 3.0},
    },
}


def apply_profile(config: PlanConfig, profile: str) -> PlanConfig:
    if profile in (None, "", "none"):
        return config
    overrides = PROFILES.get(profile)
    if overrides is None:
        raise ConfigError(
            f"unknown profile {profile!r}; expected one of {sorted(PROFILES)}", "profile"
        )
    unknown = set(overrides) - {g.id for g in config.goals}
    if unknown:
        raise ConfigError(f"profile targets missing goals {sorted(unknown)}", "profile")
    goals = tuple(
        replace(goal, **overrides.get(goal.id, {})) for goal in config.goals
    )
    out = replace(config, goals=goals)
    out.validate()
    return out


def plan_by_name(name: str) -> PlanConfig:
    """Bundled plans: 'base' (constant rates) and 'base_stochastic'."""
    if name == "base":
        return base_plan(stochastic=False)
    if name == "base_stochastic":
        return base_plan(stochastic=True)
    raise ConfigError(f"unknown bundled plan {name!r}", "plan")
