"""Goal specifications, plan state, and the exact monthly transition dynamics.

States are fraction-normalized: each stock goal (debt, savings, emergency fund,
retirement) tracks the fraction of its total amount still outstanding, where 1
means untouched and 0 means complete.  Flow goals (401K, IRA) are assessed on
the per-month contribution only and carry no state.
"""

from __future__ import annotations

import enum
import json
from dataclasses import dataclass, field, replace
from typing import Mapping, NamedTuple, Sequence, Union

import numpy as np

from .errors import ConfigError, SequencingError

INFLATION_KEY = "inflation"

SIMPLEX_TOL = 1e-9


class GoalKind(str, enum.Enum):
    DEBT = "debt"
    SAVINGS = "savings"
    EMERGENCY_FUND = "emergency_fund"
    RETIREMENT = "retirement"
    CONTRIBUTION_401K = "contribution_401k"
    CONTRIBUTION_IRA = "contribution_ira"


STOCK_KINDS = frozenset(
    {GoalKind.DEBT, GoalKind.SAVINGS, GoalKind.EMERGENCY_FUND, GoalKind.RETIREMENT}
)
FLOW_KINDS = frozenset({GoalKind.CONTRIBUTION_401K, GoalKind.CONTRIBUTION_IRA})
# savings-type dynamics: interest grows the funded portion rather than the debt
SAVINGS_LIKE_KINDS = frozenset(
    {GoalKind.SAVINGS, GoalKind.EMERGENCY_FUND, GoalKind.RETIREMENT}
)


@dataclass(frozen=True)
class ConstantRate:
    annual_rate: float


@dataclass(frozen=True)
class SeriesRate:
    series_id: str


RateSource = Union[ConstantRate, SeriesRate]


@dataclass(frozen=True)
class GoalSpec:
    """Static description of one financial goal."""

    id: str
    kind: GoalKind
    total_amount: float | None = None
    rate_source: RateSource | None = None
    weight_p: float = 1.0
    weight_q: float | None = None
    crossover_h: float | None = None
    min_contrib_frac: float | None = None
    max_contrib_frac: float | None = None
    max_contrib_dollars: float | None = None
    match_rate: float | None = None
    match_cap_frac: float | None = None

    @property
    def is_stock(self) -> bool:
        return self.kind in STOCK_KINDS

    def validate(self, path: str = "goal") -> None:
        if not self.id:
            raise ConfigError("goal id must be a non-empty string", f"{path}.id")
        if self.weight_p < 0:
            raise ConfigError("weight_p must be nonnegative", f"{path}.weight_p")
        if self.weight_q is not None and self.weight_q < 0:
            raise ConfigError("weight_q must be nonnegative", f"{path}.weight_q")
        if self.crossover_h is not None and not 0.0 <= self.crossover_h <= 1.0:
            raise ConfigError("crossover_h must lie in [0, 1]", f"{path}.crossover_h")

        if self.is_stock:
            if self.total_amount is None or self.total_amount <= 0:
                raise ConfigError(
                    "stock goals need total_amount > 0", f"{path}.total_amount"
                )
            if self.rate_source is None:
                raise ConfigError("stock goals need a rate_source", f"{path}.rate_source")
        else:
            if self.total_amount is not None:
                raise ConfigError(
                    "contribution goals have no total_amount", f"{path}.total_amount"
                )

        if self.kind is GoalKind.EMERGENCY_FUND:
            src = self.rate_source
            if not (isinstance(src, ConstantRate) and src.annual_rate == 0.0):
                raise ConfigError(
                    "emergency fund must use a constant zero rate", f"{path}.rate_source"
                )
            if self.weight_q is None or self.crossover_h is None:
                raise ConfigError(
                    "emergency fund needs weight_q and crossover_h", f"{path}.weight_q"
                )

        if self.kind is GoalKind.CONTRIBUTION_401K:
            lo, hi = self.min_contrib_frac, self.max_contrib_frac
            if lo is None or hi is None or not 0.0 < lo < hi < 1.0:
                raise ConfigError(
                    "401K needs 0 < min_contrib_frac < max_contrib_frac < 1",
                    f"{path}.min_contrib_frac",
                )
            if self.weight_q is None:
                raise ConfigError("401K is two-phase and needs weight_q", f"{path}.weight_q")
            for name in ("match_rate", "match_cap_frac"):
                value = getattr(self, name)
                if value is not None and value < 0:
                    raise ConfigError(f"{name} must be nonnegative", f"{path}.{name}")
        elif self.match_rate is not None or self.match_cap_frac is not None:
            raise ConfigError(
                "employer match fields belong on the 401K goal", f"{path}.match_rate"
            )

        if self.kind is GoalKind.CONTRIBUTION_IRA:
            if self.max_contrib_dollars is None or self.max_contrib_dollars <= 0:
                raise ConfigError(
                    "IRA needs max_contrib_dollars > 0", f"{path}.max_contrib_dollars"
                )


@dataclass(frozen=True)
class PlanConfig:
    """A complete plan instance: income, horizon, inflation, and ordered goals.

    Goal order fixes the allocation-vector slots; the residual (unallocated
    cash) slot always comes last.
    """

    initial_income: float
    horizon_months: int
    inflation_source: RateSource
    goals: tuple[GoalSpec, ...]
    debt_rates_nominal: bool = False  # monthly = APR/12 for debts instead of geometric

    def __post_init__(self):
        object.__setattr__(self, "goals", tuple(self.goals))

    def validate(self) -> None:
        if self.initial_income <= 0:
            raise ConfigError("initial_income must be positive", "initial_income")
        if self.horizon_months < 1:
            raise ConfigError("horizon_months must be >= 1", "horizon_months")
        if not self.goals:
            raise ConfigError("at least one goal is required", "goals")
        seen: set[str] = set()
        for i, goal in enumerate(self.goals):
            goal.validate(f"goals[{i}]")
            if goal.id in seen:
                raise ConfigError(f"duplicate goal id {goal.id!r}", f"goals[{i}].id")
            seen.add(goal.id)
            src = goal.rate_source
            if isinstance(src, SeriesRate) and src.series_id == INFLATION_KEY:
                raise ConfigError(
                    f"series id {INFLATION_KEY!r} is reserved", f"goals[{i}].rate_source"
                )
        for kind in (
            GoalKind.RETIREMENT,
            GoalKind.CONTRIBUTION_401K,
            GoalKind.CONTRIBUTION_IRA,
            GoalKind.EMERGENCY_FUND,
        ):
            if sum(1 for g in self.goals if g.kind is kind) > 1:
                raise ConfigError(f"at most one goal of kind {kind.value}", "goals")
        has_retirement = any(g.kind is GoalKind.RETIREMENT for g in self.goals)
        if not has_retirement and any(g.kind in FLOW_KINDS for g in self.goals):
            raise ConfigError(
                "401K/IRA contributions pool into a retirement goal; add one", "goals"
            )

    # --- slot and index helpers -------------------------------------------------

    @property
    def n_slots(self) -> int:
        """Allocation vector length: one slot per goal plus the residual slot."""
        return len(self.goals) + 1

    def slot_of(self, goal_id: str) -> int:
        for i, g in enumerate(self.goals):
            if g.id == goal_id:
                return i
        raise KeyError(goal_id)

    def stock_goals(self) -> list[tuple[int, GoalSpec]]:
        """(allocation slot, goal) pairs for stock goals, in config order."""
        return [(i, g) for i, g in enumerate(self.goals) if g.is_stock]

    def goal_of_kind(self, kind: GoalKind) -> GoalSpec | None:
        for g in self.goals:
            if g.kind is kind:
                return g
        return None

    def rate_keys(self) -> list[str]:
        """Distinct rate ids the plan references, goal order then inflation."""
        keys: list[str] = []
        for goal in self.goals:
            if goal.is_stock:
                key = rate_key(goal)
                if key not in keys:
                    keys.append(key)
        keys.append(INFLATION_KEY)
        return keys

    # --- serialization ----------------------------------------------------------

    def to_dict(self) -> dict:
        return {
            "initial_income": self.initial_income,
            "horizon_months": self.horizon_months,
            "inflation_source": _rate_source_to_dict(self.inflation_source),
            "debt_rates_nominal": self.debt_rates_nominal,
            "goals": [_goal_to_dict(g) for g in self.goals],
        }

    def to_json(self, **kwargs) -> str:
        return json.dumps(self.to_dict(), indent=2, **kwargs)

    @staticmethod
    def from_dict(data: dict) -> "PlanConfig":
        if not isinstance(data, dict):
            raise ConfigError("plan config must be a JSON object", "")
        for name in ("initial_income", "horizon_months", "inflation_source", "goals"):
            if name not in data:
                raise ConfigError("missing required field", name)
        goals_raw = data["goals"]
        if not isinstance(goals_raw, list):
            raise ConfigError("goals must be an array", "goals")
        config = PlanConfig(
            initial_income=_number(data, "initial_income"),
            horizon_months=_integer(data, "horizon_months"),
            inflation_source=_rate_source_from_dict(
                data["inflation_source"], "inflation_source"
            ),
            goals=tuple(
                _goal_from_dict(g, f"goals[{i}]") for i, g in enumerate(goals_raw)
            ),
            debt_rates_nominal=bool(data.get("debt_rates_nominal", False)),
        )
        config.validate()
        return config

    @staticmethod
    def from_json(text: str) -> "PlanConfig":
        try:
            data = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"invalid JSON: {exc}", "") from exc
        return PlanConfig.from_dict(data)


def rate_key(goal: GoalSpec) -> str:
    """Rate-map key for one goal: the series id, or a per-goal constant key."""
    if isinstance(goal.rate_source, SeriesRate):
        return goal.rate_source.series_id
    return f"const:{goal.id}"


def _rate_source_to_dict(src: RateSource) -> dict:
    if isinstance(src, ConstantRate):
        return {"type": "constant", "annual_rate": src.annual_rate}
    return {"type": "series", "series_id": src.series_id}


def _rate_source_from_dict(data, path: str) -> RateSource:
    if not isinstance(data, dict) or "type" not in data:
        raise ConfigError("rate source needs a 'type' field", path)
    kind = data["type"]
    if kind == "constant":
        return ConstantRate(annual_rate=_number(data, "annual_rate", path))
    if kind == "series":
        sid = data.get("series_id")
        if not isinstance(sid, str) or not sid:
            raise ConfigError("series_id must be a non-empty string", f"{path}.series_id")
        return SeriesRate(series_id=sid)
    raise ConfigError(f"unknown rate source type {kind!r}", f"{path}.type")


_GOAL_OPTIONAL_FIELDS = (
    "total_amount",
    "weight_q",
    "crossover_h",
    "min_contrib_frac",
    "max_contrib_frac",
    "max_contrib_dollars",
    "match_rate",
    "match_cap_frac",
)


def _goal_to_dict(goal: GoalSpec) -> dict:
    out: dict = {"id": goal.id, "kind": goal.kind.value}
    if goal.rate_source is not None:
        out["rate_source"] = _rate_source_to_dict(goal.rate_source)
    out["weight_p"] = goal.weight_p
    for name in _GOAL_OPTIONAL_FIELDS:
        value = getattr(goal, name)
        if value is not None:
            out[name] = value
    return out


def _goal_from_dict(data, path: str) -> GoalSpec:
    if not isinstance(data, dict):
        raise ConfigError("goal must be a JSON object", path)
    if "id" not in data or "kind" not in data:
        raise ConfigError("goal needs 'id' and 'kind'", path)
    try:
        kind = GoalKind(data["kind"])
    except ValueError:
        raise ConfigError(f"unknown goal kind {data['kind']!r}", f"{path}.kind") from None
    rate_source = None
    if "rate_source" in data:
        rate_source = _rate_source_from_dict(data["rate_source"], f"{path}.rate_source")
    kwargs = {}
    for name in _GOAL_OPTIONAL_FIELDS:
        if data.get(name) is not None:
            kwargs[name] = _number(data, name, path)
    return GoalSpec(
        id=str(data["id"]),
        kind=kind,
        rate_source=rate_source,
        weight_p=_number(data, "weight_p", path) if "weight_p" in data else 1.0,
        **kwargs,
    )


def _number(data: dict, name: str, path: str = "") -> float:
    value = data.get(name)
    if not isinstance(value, (int, float)) or isinstance(value, bool):
        where = f"{path}.{name}" if path else name
        raise ConfigError("expected a number", where)
    return float(value)


def _integer(data: dict, name: str, path: str = "") -> int:
    value = data.get(name)
    if not isinstance(value, int) or isinstance(value, bool):
        where = f"{path}.{name}" if path else name
        raise ConfigError("expected an integer", where)
    return value


@dataclass(frozen=True)
class PlanState:
    """Per-goal fractions outstanding plus income and rates at month t."""

    month: int
    fractions_outstanding: np.ndarray  # over stock goals, config order
    income: float
    current_rates: Mapping[str, float]  # rate key -> monthly rate


@dataclass(frozen=True)
class Allocation:
    """Simplex vector of income fractions: one slot per goal, residual last."""

    fractions: np.ndarray

    def validate(self, n_slots: int | None = None) -> None:
        f = np.asarray(self.fractions, dtype=float)
        if n_slots is not None and f.shape != (n_slots,):
            raise ConfigError(f"allocation needs {n_slots} slots, got {f.shape}")
        if np.any(f < 0):
            raise ConfigError("allocation entries must be nonnegative")
        if abs(float(f.sum()) - 1.0) > SIMPLEX_TOL:
            raise ConfigError(f"allocation must sum to 1, got {f.sum()!r}")


class StepResult(NamedTuple):
    value: float  # fraction outstanding, clamped to [0, 1]
    raw: float  # unclamped value, for diagnostics


def monthly_rate(annual_rate: float) -> float:
    """Geometric annual -> monthly conversion: (1+r)^(1/12) - 1."""
    if annual_rate <= -1.0:
        raise ValueError(f"annual rate must exceed -1, got {annual_rate}")
    return (1.0 + annual_rate) ** (1.0 / 12.0) - 1.0


def monthly_rate_nominal(annual_rate: float) -> float:
    """Nominal APR/12 convention, used for debts when a config opts in."""
    return annual_rate / 12.0


def _clamp01(x: float) -> float:
    return 0.0 if x < 0.0 else (1.0 if x > 1.0 else x)


def step_debt(x: float, r_m: float, payment: float, total: float) -> StepResult:
    """One month of debt dynamics: interest compounds, then the payment reduces it.

    Clamped below at 0 only (a paid-off debt stays paid); the fraction may
    exceed 1 because unserviced interest grows a debt past its original
    balance — the compounding threat the even-split baseline exists to beat.
    """
    if total <= 0:
        raise ValueError("total must be positive")
    if payment < 0:
        raise ValueError("payment must be nonnegative")
    raw = (1.0 + r_m) * x - payment / total
    return StepResult(max(0.0, raw), raw)


def step_savings(x: float, r_m: float, contribution: float, total: float) -> StepResult:
    """One month of savings dynamics: returns grow the funded portion."""
    if total <= 0:
        raise ValueError("total must be positive")
    if contribution < 0:
        raise ValueError("contribution must be nonnegative")
    raw = 1.0 - (1.0 + r_m) * (1.0 - x) - contribution / total
    return StepResult(_clamp01(raw), raw)


def employer_match(
    pi_401k: float, income: float, match_rate: float, match_cap_frac: float
) -> float:
    """Employer 401K match: match_rate times the contribution fraction up to the cap."""
    if min(pi_401k, income, match_rate, match_cap_frac) < 0:
        raise ValueError("employer match inputs must be nonnegative")
    return match_rate * min(pi_401k, match_cap_frac) * income


def step_retirement(
    x: float,
    r_m: float,
    income: float,
    pi_401k: float,
    pi_ira: float,
    pi_rs: float,
    match_dollars: float,
    total: float,
) -> StepResult:
    """One month of retirement dynamics: 401K, IRA, direct contributions and the
    employer match all pool into the same goal."""
    if total <= 0:
        raise ValueError("total must be positive")
    if min(pi_401k, pi_ira, pi_rs) < 0:
        raise ValueError("allocation fractions must be nonnegative")
    contribution = match_dollars + income * (pi_401k + pi_ira + pi_rs)
    raw = 1.0 - (1.0 + r_m) * (1.0 - x) - contribution / total
    return StepResult(_clamp01(raw), raw)


def initial_state(config: PlanConfig, rates_at_0: Mapping[str, float]) -> PlanState:
    """Month-0 state: every stock goal untouched, income at its initial value."""
    n_stock = len(config.stock_goals())
    return PlanState(
        month=0,
        fractions_outstanding=np.ones(n_stock),
        income=config.initial_income,
        current_rates=dict(rates_at_0),
    )


def advance(
    state: PlanState,
    allocation: Allocation,
    config: PlanConfig,
    rates_at_t: Mapping[str, float],
    next_rates: Mapping[str, float] | None = None,
) -> PlanState:
    """Apply one month of dynamics under the given allocation.

    Dollar amounts are income * slot fraction; the 401K goal's employer match
    and the 401K/IRA contributions pool into the retirement goal; income then
    grows by the month's inflation.  The allocation is never mutated.
    """
    if state.month >= config.horizon_months:
        raise SequencingError(
            f"cannot advance past the horizon (month {state.month} of {config.horizon_months})"
        )
    allocation.validate(config.n_slots)
    pi = np.asarray(allocation.fractions, dtype=float)
    income = state.income

    c401k = config.goal_of_kind(GoalKind.CONTRIBUTION_401K)
    ira = config.goal_of_kind(GoalKind.CONTRIBUTION_IRA)
    match_dollars = 0.0
    if c401k is not None and c401k.match_rate:
        match_dollars = employer_match(
            float(pi[config.slot_of(c401k.id)]),
            income,
            c401k.match_rate,
            c401k.match_cap_frac or 0.0,
        )

    stock = config.stock_goals()
    new_fractions = np.empty(len(stock))
    for j, (slot, goal) in enumerate(stock):
        x = float(state.fractions_outstanding[j])
        r_m = rates_at_t[rate_key(goal)]
        if goal.kind is GoalKind.DEBT:
            new_fractions[j] = step_debt(x, r_m, income * pi[slot], goal.total_amount).value
        elif goal.kind is GoalKind.RETIREMENT:
            new_fractions[j] = step_retirement(
                x,
                r_m,
                income,
                pi_401k=float(pi[config.slot_of(c401k.id)]) if c401k else 0.0,
                pi_ira=float(pi[config.slot_of(ira.id)]) if ira else 0.0,
                pi_rs=float(pi[slot]),
                match_dollars=match_dollars,
                total=goal.total_amount,
            ).value
        else:
            new_fractions[j] = step_savings(
                x, r_m, income * pi[slot], goal.total_amount
            ).value

    new_income = income * (1.0 + rates_at_t[INFLATION_KEY])
    return PlanState(
        month=state.month + 1,
        fractions_outstanding=new_fractions,
        income=new_income,
        current_rates=dict(next_rates if next_rates is not None else rates_at_t),
    )
