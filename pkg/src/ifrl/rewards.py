"""Constraint routing, sample-level rewards, and group-relative advantages.

Hard constraints earn a binary rule reward; soft constraints earn the
scorer's satisfaction probability. Per-constraint rewards are averaged
left-to-right into the sample-level reward. Rollout groups are
normalized into advantages by centering on the group mean and dividing
by the population standard deviation.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass
from enum import Enum

from . import verifier
from .core import Constraint, ConstraintKind, ConstraintReward, RewardBreakdown, SchemaError
from .scorer import ScorerModel
from .scorer import score as scorer_score


class RewardMode(str, Enum):
    FULL = "full"
    RULE_ONLY = "rule_only"
    MODEL_ONLY = "model_only"
    BINARY_SOFT = "binary_soft"


DEFAULT_BINARY_THRESHOLD = 0.5
DEFAULT_ADVANTAGE_EPS = 1e-6

_BOXED = re.compile(r"\\boxed\{([^{}]*)\}")


@dataclass(frozen=True)
class AdvantageConfig:
    group_size: int = 5
    eps: float = DEFAULT_ADVANTAGE_EPS

    def __post_init__(self) -> None:
        if self.group_size < 2:
            raise SchemaError(f"group_size must be >= 2, got {self.group_size}")
        if not 0.0 < self.eps <= 1e-3:
            raise SchemaError(f"eps must be in (0, 1e-3], got {self.eps}")


class MissingScorerError(ValueError):
    """A mode routed a constraint to the model but no scorer was given."""


class SoftConstraintInRuleOnlyError(ValueError):
    """rule_only mode cannot reward soft constraints."""


def constraint_reward(
    response_text: str,
    constraint: Constraint,
    scorer: ScorerModel | None = None,
    mode: RewardMode = RewardMode.FULL,
    binary_threshold: float = DEFAULT_BINARY_THRESHOLD,
) -> ConstraintReward:
    """Reward one constraint: rule verdict for hard, probability for soft."""
    if mode is RewardMode.BINARY_SOFT and not 0.0 < binary_threshold < 1.0:
        raise SchemaError(f"binary threshold must be strictly inside (0, 1), got {binary_threshold}")

    def by_rule() -> ConstraintReward:
        verdict = verifier.verify(response_text, constraint.rule, constraint.id)
        return ConstraintReward(constraint.id, 1.0 if verdict.satisfied else 0.0, "rule")

    def by_model(threshold: float | None = None) -> ConstraintReward:
        if scorer is None:
            raise MissingScorerError(
                f"mode {mode.value!r} routes constraint {constraint.id!r} to the model, "
                "but no scorer was provided"
            )
        prob = scorer_score(scorer, response_text, constraint)
        if threshold is not None:
            prob = 1.0 if prob >= threshold else 0.0
        return ConstraintReward(constraint.id, prob, "model")

    is_hard = constraint.kind is ConstraintKind.HARD
    if mode is RewardMode.MODEL_ONLY:
        return by_model()
    if is_hard:
        return by_rule()
    if mode is RewardMode.RULE_ONLY:
        raise SoftConstraintInRuleOnlyError(
            f"constraint {constraint.id!r} is soft; rule_only mode cannot reward it"
        )
    if mode is RewardMode.BINARY_SOFT:
        return by_model(threshold=binary_threshold)
    return by_model()


def sample_reward(
    response_text: str,
    constraints: list[Constraint] | tuple[Constraint, ...],
    scorer: ScorerModel | None = None,
    mode: RewardMode = RewardMode.FULL,
    binary_threshold: float = DEFAULT_BINARY_THRESHOLD,
) -> RewardBreakdown:
    """Mean of per-constraint rewards, summed left to right."""
    if not constraints:
        raise SchemaError("sample_reward requires at least one constraint")
    per = tuple(
        constraint_reward(response_text, c, scorer, mode, binary_threshold) for c in constraints
    )
    total = 0.0
    for r in per:
        total += r.reward
    return RewardBreakdown(per_constraint=per, aggregate=total / len(per))


def extract_final_answer(response_text: str) -> str:
    r"""Last \boxed{...} content if present, else the last non-empty line."""
    boxed = _BOXED.findall(response_text)
    if boxed:
        return boxed[-1]
    for line in reversed(response_text.splitlines()):
        if line.strip():
            return line.strip()
    return ""


def reasoning_reward(response_text: str, gold_answer: str) -> float:
    """1.0 when the extracted final answer matches the gold answer.

    Comparison is strict up to surrounding whitespace and letter case;
    an unextractable answer scores 0.0.
    """
    if not gold_answer.strip():
        raise SchemaError("gold_answer must be non-empty")
    extracted = extract_final_answer(response_text)
    if not extracted:
        return 0.0
    return 1.0 if extracted.strip().casefold() == gold_answer.strip().casefold() else 0.0


def group_advantages(rewards: list[float], config: AdvantageConfig | None = None) -> list[float]:
    """Center on the group mean and scale by population std (plus eps).

    A constant group short-circuits to exact zeros instead of dividing
    eps into rounding noise.
    """
    config = config or AdvantageConfig(group_size=max(2, len(rewards)))
    if len(rewards) != config.group_size:
        raise SchemaError(f"expected a group of {config.group_size} rewards, got {len(rewards)}")
    first = rewards[0]
    if all(r == first for r in rewards):
        return [0.0] * len(rewards)
    n = len(rewards)
    mean = sum(rewards) / n
    variance = sum((r - mean) ** 2 for r in rewards) / n
    std = math.sqrt(variance)
    return [(r - mean) / (std + config.eps) for r in rewards]
