"""Reward routing, aggregation, answer extraction, and advantages."""

import math
import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ifrl import mock, rewards, verifier
from ifrl.core import Constraint, ConstraintKind, HardRule, SchemaError
from ifrl.rewards import (
    AdvantageConfig,
    MissingScorerError,
    RewardMode,
    SoftConstraintInRuleOnlyError,
    constraint_reward,
    extract_final_answer,
    group_advantages,
    reasoning_reward,
    sample_reward,
)
from ifrl.scorer import FeatureConfig, zero_model

TINY = FeatureConfig(dim=2**8)
HARD = Constraint(
    id="h1",
    kind=ConstraintKind.HARD,
    rule=HardRule("keyword_inclusion", {"keyword": "tide", "relation": "at_least", "count": 1}),
)
SOFT = Constraint(id="s1", kind=ConstraintKind.SOFT, text="Adopt a cheerful tone.")


# -- routing ------------------------------------------------------------------


def test_hard_constraint_uses_rule_verdict():
    assert constraint_reward("the tide rises", HARD).reward == 1.0
    assert constraint_reward("nothing here", HARD).reward == 0.0
    assert constraint_reward("the tide rises", HARD).source == "rule"


def test_soft_constraint_uses_scorer_probability():
    r = constraint_reward("any text", SOFT, scorer=zero_model(TINY))
    assert r.reward == 0.5 and r.source == "model"


def test_soft_without_scorer_raises():
    with pytest.raises(MissingScorerError):
        constraint_reward("text", SOFT)


def test_rule_only_rejects_soft_constraints():
    with pytest.raises(SoftConstraintInRuleOnlyError):
        constraint_reward("text", SOFT, mode=RewardMode.RULE_ONLY)
    assert constraint_reward("the tide", HARD, mode=RewardMode.RULE_ONLY).reward == 1.0


def test_model_only_never_invokes_the_verifier(monkeypatch):
    calls = []
    original = verifier.verify

    def spy(*args, **kwargs):
        calls.append(args)
        return original(*args, **kwargs)

    monkeypatch.setattr(rewards.verifier, "verify", spy)
    breakdown = sample_reward("some text", [HARD, SOFT], zero_model(TINY), RewardMode.MODEL_ONLY)
    assert calls == []
    assert all(r.source == "model" for r in breakdown.per_constraint)


def test_binary_soft_thresholds_soft_rewards():
    r = constraint_reward("text", SOFT, zero_model(TINY), RewardMode.BINARY_SOFT, binary_threshold=0.5)
    assert r.reward in (0.0, 1.0)
    assert r.reward == 1.0  # zero model scores exactly the 0.5 cutoff
    r = constraint_reward("text", SOFT, zero_model(TINY), RewardMode.BINARY_SOFT, binary_threshold=0.6)
    assert r.reward == 0.0


@pytest.mark.parametrize("threshold", [0.0, 1.0, -0.5, 2.0])
def test_binary_soft_threshold_must_be_interior(threshold):
    with pytest.raises(SchemaError, match="threshold"):
        constraint_reward("x", SOFT, zero_model(TINY), RewardMode.BINARY_SOFT, threshold)


# -- aggregation --------------------------------------------------------------


def test_sample_reward_is_mean_of_constraint_rewards():
    breakdown = sample_reward("the tide rises", [HARD, SOFT], zero_model(TINY))
    assert breakdown.aggregate == (1.0 + 0.5) / 2
    assert [r.constraint_id for r in breakdown.per_constraint] == ["h1", "s1"]


def test_sample_reward_requires_constraints():
    with pytest.raises(SchemaError):
        sample_reward("text", [])


def _random_hard_instruction(rng):
    used = set()
    templates = mock._hard_templates(rng, used)
    names = rng.sample(list(templates), rng.randint(1, 5))
    return [
        Constraint(id=f"c{i}", kind=ConstraintKind.HARD, rule=templates[name]())
        for i, name in enumerate(names)
    ]


def test_all_hard_aggregate_equals_satisfied_fraction():
    rng = random.Random(21)
    texts = [
        "plain filler",
        "- item\n1. step\nBADGE zzz <<T>> *note*",
        mock.mock_response(mock.make_instruction(0, 5, random.Random(2)), 5).text,
    ]
    for trial in range(300):
        constraints = _random_hard_instruction(rng)
        text = rng.choice(texts)
        breakdown = sample_reward(text, constraints, mode=RewardMode.RULE_ONLY)
        satisfied = sum(verifier.verify(text, c.rule).satisfied for c in constraints)
        assert breakdown.aggregate == satisfied / len(constraints)


# -- reasoning reward ---------------------------------------------------------


def test_extract_final_answer_prefers_last_boxed():
    assert extract_final_answer(r"first \boxed{1} then \boxed{42}") == "42"
    assert extract_final_answer("line one\nline two\n\n") == "line two"
    assert extract_final_answer("") == ""


def test_reasoning_reward_whitespace_and_case_fold_only():
    assert reasoning_reward(r"steps...\n\boxed{ 42 }", "42") == 1.0
    assert reasoning_reward("The answer is\nYES", "yes") == 1.0
    assert reasoning_reward(r"\boxed{1/2}", "0.5") == 0.0  # no numeric equivalence
    assert reasoning_reward("   \n ", "4") == 0.0
    with pytest.raises(SchemaError):
        reasoning_reward("anything", "  ")


# -- advantages ---------------------------------------------------------------


def test_constant_group_gives_exact_zeros():
    assert group_advantages([0.7, 0.7, 0.7]) == [0.0, 0.0, 0.0]


def test_binary_group_normalizes_to_unit_advantages():
    adv = group_advantages([0.0, 1.0], AdvantageConfig(group_size=2, eps=1e-9))
    assert abs(adv[0] + 1.0) < 1e-6 and abs(adv[1] - 1.0) < 1e-6


def test_group_size_mismatch_rejected():
    with pytest.raises(SchemaError, match="group of 5"):
        group_advantages([1.0, 2.0], AdvantageConfig(group_size=5))


@pytest.mark.parametrize("eps", [0.0, -1e-6, 1e-2])
def test_eps_bounds(eps):
    with pytest.raises(SchemaError, match="eps"):
        AdvantageConfig(eps=eps)


def test_group_size_lower_bound():
    with pytest.raises(SchemaError, match="group_size"):
        AdvantageConfig(group_size=1)


@settings(max_examples=100, deadline=None)
@given(
    st.lists(st.floats(min_value=0.0, max_value=1.0, allow_nan=False), min_size=2, max_size=8)
)
def test_advantage_properties(rewards_in):
    adv = group_advantages(rewards_in)
    assert len(adv) == len(rewards_in)
    assert abs(sum(adv)) < 1e-9
    if len(set(rewards_in)) == 1:
        assert adv == [0.0] * len(rewards_in)
    else:
        std = math.sqrt(
            sum((a - sum(adv) / len(adv)) ** 2 for a in adv) / len(adv)
        )
        assert std <= 1.0 + 1e-12


def test_advantages_are_permutation_covariant():
    rewards_in = [0.1, 0.9, 0.4, 0.6, 0.2]
    adv = group_advantages(rewards_in)
    order = [3, 0, 4, 2, 1]
    shuffled = group_advantages([rewards_in[i] for i in order])
    # summation order shifts the mean by ~1 ulp, so compare approximately
    assert all(abs(x - y) < 1e-12 for x, y in zip(shuffled, [adv[i] for i in order]))


def test_advantages_are_shift_invariant():
    rewards_in = [0.2, 0.5, 0.8, 0.1]
    shifted = [r + 10.0 for r in rewards_in]
    a = group_advantages(rewards_in)
    b = group_advantages(shifted)
    assert all(abs(x - y) < 1e-9 for x, y in zip(a, b))
