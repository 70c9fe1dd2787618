"""Dynamics unit tests: every step function against an independent
high-precision oracle, plus the module invariants as property tests."""

import mpmath
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from payplan.errors import ConfigError, SequencingError
from payplan.goals import (
    Allocation,
    ConstantRate,
    GoalKind,
    GoalSpec,
    PlanConfig,
    SeriesRate,
    advance,
    employer_match,
    initial_state,
    monthly_rate,
    monthly_rate_nominal,
    step_debt,
    step_retirement,
    step_savings,
)

mpmath.mp.dps = 50


def mp_monthly(annual: float) -> float:
    return float(mpmath.power(1 + mpmath.mpf(repr(annual)), mpmath.mpf(1) / 12) - 1)


class TestMonthlyRate:
    def test_zero_is_fixed_point(self):
        assert monthly_rate(0.0) == 0.0

    @pytest.mark.parametrize("annual", [0.20, 0.02, 0.10, 0.04, -0.5, 3.0])
    def test_against_high_precision_oracle(self, annual):
        assert monthly_rate(annual) == pytest.approx(mp_monthly(annual), rel=1e-14)

    def test_credit_card_value(self):
        # (1.2)^(1/12) - 1 evaluated with 50-digit arithmetic
        assert monthly_rate(0.20) == pytest.approx(0.015309470499731217, rel=1e-12)

    def test_inflation_value(self):
        assert monthly_rate(0.02) == pytest.approx(0.001651581301920175, rel=1e-12)

    def test_domain_error(self):
        with pytest.raises(ValueError):
            monthly_rate(-1.0)
        with pytest.raises(ValueError):
            monthly_rate(-1.5)

    def test_nominal_convention(self):
        assert monthly_rate_nominal(0.12) == pytest.approx(0.01)


class TestStepDebt:
    def test_no_interest_no_payment(self):
        assert step_debt(1.0, 0.0, 0.0, 825.0).value == 1.0

    def test_one_payment_nearly_clears(self):
        r = monthly_rate(0.20)
        out = step_debt(1.0, r, 825.0, 825.0)
        # direct formula: (1+r)*1 - 1
        assert out.value == pytest.approx(r, abs=1e-15)
        assert out.raw == out.value

    def test_overpayment_clamps_to_zero(self):
        out = step_debt(0.001, 0.01, 500.0, 825.0)
        assert out.value == 0.0
        assert out.raw < 0.0

    def test_interest_can_grow_past_original_balance(self):
        out = step_debt(1.0, 0.01, 0.0, 100.0)
        assert out.value == pytest.approx(1.01)

    def test_preconditions(self):
        with pytest.raises(ValueError):
            step_debt(1.0, 0.0, -1.0, 100.0)
        with pytest.raises(ValueError):
            step_debt(1.0, 0.0, 0.0, 0.0)


class TestStepSavings:
    def test_untouched_stays_untouched(self):
        assert step_savings(1.0, 0.05, 0.0, 157000.0).value == 1.0

    def test_exact_payoff_of_remaining_half(self):
        assert step_savings(0.5, 0.0, 78500.0, 157000.0).value == 0.0

    def test_direct_formula(self):
        out = step_savings(0.5, 0.008, 1000.0, 157000.0)
        expected = 1.0 - 1.008 * 0.5 - 1000.0 / 157000.0
        assert out.value == pytest.approx(expected, rel=1e-15)


class TestEmployerMatch:
    def test_no_contribution_no_match(self):
        assert employer_match(0.0, 7500.0, 1.0, 0.06) == 0.0

    def test_cap_binds(self):
        # 1.0 * min(0.10, 0.06) * 7500
        assert employer_match(0.10, 7500.0, 1.0, 0.06) == pytest.approx(450.0)

    def test_below_cap(self):
        # 0.5 * 0.04 * 7500
        assert employer_match(0.04, 7500.0, 0.5, 0.06) == pytest.approx(150.0)


class TestStepRetirement:
    def test_zero_contributions_leave_untouched(self):
        out = step_retirement(1.0, 0.1 / 12, 7500.0, 0.0, 0.0, 0.0, 0.0, 1e6)
        assert out.value == 1.0

    def test_pooled_contributions(self):
        out = step_retirement(1.0, 0.0, 7500.0, 0.06, 0.0667, 0.1, 450.0, 1e6)
        expected = 1.0 - (450.0 + 7500.0 * (0.06 + 0.0667 + 0.1)) / 1e6
        assert out.value == pytest.approx(expected, rel=1e-15)

    def test_completed_stays_completed(self):
        assert step_retirement(0.0, 0.05, 7500.0, 0.1, 0.1, 0.1, 450.0, 1e6).value == 0.0


def mp_step_debt(x, r, payment, total):
    x, r, payment, total = (mpmath.mpf(repr(v)) for v in (x, r, payment, total))
    return float(max(0, (1 + r) * x - payment / total))


def mp_step_savings(x, r, c, total):
    x, r, c, total = (mpmath.mpf(repr(v)) for v in (x, r, c, total))
    return float(min(1, max(0, 1 - (1 + r) * (1 - x) - c / total)))


def mp_step_retirement(x, r, income, p401, pira, prs, match, total):
    x, r, income, p401, pira, prs, match, total = (
        mpmath.mpf(repr(v)) for v in (x, r, income, p401, pira, prs, match, total)
    )
    c = match + income * (p401 + pira + prs)
    return float(min(1, max(0, 1 - (1 + r) * (1 - x) - c / total)))


class TestStepOracles:
    """Random-input agreement with 50-digit direct formula evaluation."""

    def test_debt_oracle(self):
        rng = np.random.default_rng(11)
        for _ in range(300):
            x = rng.uniform(0, 1.5)
            r = rng.uniform(-0.01, 0.03)
            payment = rng.uniform(0, 2000)
            total = rng.uniform(100, 1e6)
            got = step_debt(x, r, payment, total).value
            want = mp_step_debt(x, r, payment, total)
            assert got == pytest.approx(want, rel=1e-12, abs=1e-15)

    def test_savings_oracle(self):
        rng = np.random.default_rng(12)
        for _ in range(300):
            x = rng.uniform(0, 1)
            r = rng.uniform(-0.05, 0.05)
            c = rng.uniform(0, 5000)
            total = rng.uniform(100, 1e6)
            got = step_savings(x, r, c, total).value
            want = mp_step_savings(x, r, c, total)
            assert got == pytest.approx(want, rel=1e-12, abs=1e-15)

    def test_retirement_oracle(self):
        rng = np.random.default_rng(13)
        for _ in range(300):
            args = (
                rng.uniform(0, 1),
                rng.uniform(-0.05, 0.05),
                rng.uniform(1000, 20000),
                rng.uniform(0, 0.3),
                rng.uniform(0, 0.3),
                rng.uniform(0, 0.3),
                rng.uniform(0, 500),
                rng.uniform(1e4, 1e7),
            )
            got = step_retirement(*args).value
            assert got == pytest.approx(mp_step_retirement(*args), rel=1e-12, abs=1e-15)


class TestDynamicsProperties:
    @given(
        x=st.floats(0.0, 1.0),
        r=st.floats(0.0, 0.05),
        c=st.floats(0.0, 1e5),
        total=st.floats(1.0, 1e7),
    )
    @settings(max_examples=200)
    def test_savings_monotone_and_clamped(self, x, r, c, total):
        out = step_savings(x, r, c, total).value
        assert 0.0 <= out <= 1.0
        assert out <= x + 1e-12  # monotone up to one rounding step

    @given(x=st.floats(1e-6, 2.0), r=st.floats(1e-6, 0.05))
    @settings(max_examples=200)
    def test_debt_compounds_without_payment(self, x, r):
        assert step_debt(x, r, 0.0, 100.0).value > x

    @given(
        r=st.floats(0.0, 0.05),
        payment=st.floats(0.0, 1e4),
        c=st.floats(0.0, 1e4),
    )
    @settings(max_examples=100)
    def test_completion_absorbs(self, r, payment, c):
        assert step_debt(0.0, r, payment, 1000.0).value == 0.0
        assert step_savings(0.0, r, c, 1000.0).value == 0.0


class TestAllocation:
    def test_simplex_ok(self):
        Allocation(np.array([0.25, 0.25, 0.5])).validate(3)

    def test_negative_entry_rejected(self):
        with pytest.raises(ConfigError):
            Allocation(np.array([-0.1, 0.6, 0.5])).validate(3)

    def test_sum_tolerance(self):
        Allocation(np.array([0.5, 0.5 + 5e-10])).validate(2)
        with pytest.raises(ConfigError):
            Allocation(np.array([0.5, 0.51])).validate(2)


class TestPlanConfig:
    def test_zero_income_rejected(self, single_debt_plan):
        from dataclasses import replace

        with pytest.raises(ConfigError):
            replace(single_debt_plan, initial_income=0.0).validate()

    def test_duplicate_goal_ids_rejected(self, single_debt_plan):
        from dataclasses import replace

        bad = replace(
            single_debt_plan, goals=single_debt_plan.goals + single_debt_plan.goals
        )
        with pytest.raises(ConfigError):
            bad.validate()

    def test_flow_goal_without_retirement_rejected(self):
        config = PlanConfig(
            initial_income=1000.0,
            horizon_months=12,
            inflation_source=ConstantRate(0.0),
            goals=(
                GoalSpec(
                    id="ira",
                    kind=GoalKind.CONTRIBUTION_IRA,
                    max_contrib_dollars=500.0,
                ),
            ),
        )
        with pytest.raises(ConfigError):
            config.validate()

    def test_emergency_fund_needs_zero_rate(self):
        goal = GoalSpec(
            id="ef",
            kind=GoalKind.EMERGENCY_FUND,
            total_amount=1000.0,
            rate_source=ConstantRate(0.02),
            weight_q=1.0,
            crossover_h=0.5,
        )
        with pytest.raises(ConfigError):
            goal.validate()

    def test_401k_bounds(self):
        goal = GoalSpec(
            id="k",
            kind=GoalKind.CONTRIBUTION_401K,
            weight_q=1.0,
            min_contrib_frac=0.13,
            max_contrib_frac=0.06,
        )
        with pytest.raises(ConfigError):
            goal.validate()

    def test_json_round_trip(self, two_goal_plan):
        text = two_goal_plan.to_json()
        again = PlanConfig.from_json(text)
        assert again == two_goal_plan
        assert again.to_json() == text

    def test_reserved_series_id(self):
        config = PlanConfig(
            initial_income=1000.0,
            horizon_months=12,
            inflation_source=ConstantRate(0.0),
            goals=(
                GoalSpec(
                    id="debt",
                    kind=GoalKind.DEBT,
                    total_amount=100.0,
                    rate_source=SeriesRate("inflation"),
                ),
            ),
        )
        with pytest.raises(ConfigError):
            config.validate()


class TestAdvance:
    def test_residual_only_keeps_everything_but_month(self, two_goal_plan):
        from tests.conftest import residual_only

        rates = {"const:card": 0.0, "const:nest_egg": 0.0, "inflation": 0.0}
        state = initial_state(two_goal_plan, rates)
        nxt = advance(state, residual_only(two_goal_plan), two_goal_plan, rates)
        assert nxt.month == 1
        assert nxt.income == state.income
        np.testing.assert_array_equal(nxt.fractions_outstanding, [1.0, 1.0])

    def test_allocation_never_mutated(self, two_goal_plan):
        rates = {"const:card": 0.01, "const:nest_egg": 0.005, "inflation": 0.001}
        state = initial_state(two_goal_plan, rates)
        alloc = Allocation(np.array([0.3, 0.3, 0.4]))
        before = alloc.fractions.copy()
        advance(state, alloc, two_goal_plan, rates)
        np.testing.assert_array_equal(alloc.fractions, before)

    def test_month_out_of_range(self, two_goal_plan):
        from tests.conftest import residual_only

        rates = {"const:card": 0.0, "const:nest_egg": 0.0, "inflation": 0.0}
        state = initial_state(two_goal_plan, rates)
        state = advance(state, residual_only(two_goal_plan), two_goal_plan, rates)
        state = advance(state, residual_only(two_goal_plan), two_goal_plan, rates)
        with pytest.raises(SequencingError):
            advance(state, residual_only(two_goal_plan), two_goal_plan, rates)

    def test_single_step_matches_formula_oracles(self, two_goal_plan):
        rates = {"const:card": 0.015, "const:nest_egg": 0.004, "inflation": 0.002}
        state = initial_state(two_goal_plan, rates)
        alloc = Allocation(np.array([0.5, 0.3, 0.2]))
        nxt = advance(state, alloc, two_goal_plan, rates)
        assert nxt.fractions_outstanding[0] == pytest.approx(
            mp_step_debt(1.0, 0.015, 500.0, 500.0), rel=1e-14
        )
        assert nxt.fractions_outstanding[1] == pytest.approx(
            mp_step_savings(1.0, 0.004, 300.0, 5000.0), rel=1e-14
        )
        assert nxt.income == pytest.approx(1000.0 * 1.002, rel=1e-15)

    def test_income_compounds_with_inflation(self, single_debt_plan):
        from dataclasses import replace
        from tests.conftest import residual_only

        plan = replace(
            single_debt_plan, horizon_months=24, inflation_source=ConstantRate(0.03)
        )
        r_m = monthly_rate(0.03)
        rates = {"const:debt": 0.0, "inflation": r_m}
        state = initial_state(plan, rates)
        for _ in range(24):
            state = advance(state, residual_only(plan), plan, rates)
        expected = plan.initial_income * (1.03) ** (24 / 12)
        assert state.income == pytest.approx(expected, rel=1e-12)
