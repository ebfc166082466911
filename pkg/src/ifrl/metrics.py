"""Agreement metrics between model and human response rankings,
plus constraint/instruction satisfaction rates.

Rankings use the convention rank 1 = best. Kendall's tau is the
tie-corrected tau-b, which coincides with tau-a on tie-free rankings.
Position consistency is the fraction of unordered pairs ordered
identically in both rankings, with half credit when the model ranking
ties a pair; on tie-free rankings tau == 2 * pc - 1.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass
from typing import Any, Sequence

from scipy.stats import rankdata

from .core import (
    Constraint,
    ConstraintKind,
    Instruction,
    SchemaError,
    constraint_from_json,
    constraint_to_json,
    validate_constraint,
)
from .rewards import RewardMode, sample_reward
from .scorer import ScorerModel

GROUP_SIZE = 5


@dataclass(frozen=True)
class PreferenceGroup:
    """Five constraints and five human-ranked responses to the same seed."""

    constraint_set: tuple[Constraint, ...]
    responses: tuple[tuple[str, int], ...]  # (response_text, human_rank)

    def __post_init__(self) -> None:
        if len(self.constraint_set) != GROUP_SIZE:
            raise SchemaError(f"a preference group needs exactly {GROUP_SIZE} constraints")
        if len(self.responses) != GROUP_SIZE:
            raise SchemaError(f"a preference group needs exactly {GROUP_SIZE} responses")
        ranks = sorted(rank for _, rank in self.responses)
        if ranks != list(range(1, GROUP_SIZE + 1)):
            raise SchemaError(f"human ranks must be a permutation of 1..{GROUP_SIZE}, got {ranks}")


@dataclass(frozen=True)
class AgreementReport:
    kendall_tau: float
    position_consistency: float
    time_per_group: float
    num_groups: int


def _check_rankings(rank_a: Sequence[float], rank_b: Sequence[float]) -> None:
    if len(rank_a) != len(rank_b):
        raise SchemaError(f"ranking lengths differ: {len(rank_a)} vs {len(rank_b)}")
    if len(rank_a) < 2:
        raise SchemaError("rankings need at least two entries")


def kendall_tau(rank_a: Sequence[float], rank_b: Sequence[float]) -> float:
    """Tie-corrected Kendall rank correlation (tau-b) in [-1, 1].

    Pair counts are kept as exact integers, so perfect agreement and
    perfect reversal return exactly 1.0 and -1.0.
    """
    _check_rankings(rank_a, rank_b)
    n = len(rank_a)
    concordant = discordant = 0
    untied_a = untied_b = 0
    for i in range(n):
        for j in range(i + 1, n):
            da = rank_a[i] - rank_a[j]
            db = rank_b[i] - rank_b[j]
            if da != 0:
                untied_a += 1
            if db != 0:
                untied_b += 1
            if da != 0 and db != 0:
                if (da > 0) == (db > 0):
                    concordant += 1
                else:
                    discordant += 1
    if untied_a == 0 or untied_b == 0:
        raise SchemaError("kendall_tau is undefined when a ranking is entirely tied")
    return (concordant - discordant) / math.sqrt(untied_a * untied_b)


def position_consistency(rank_a: Sequence[float], rank_b: Sequence[float]) -> float:
    """Fraction of pairs ordered identically; ties in rank_b earn 0.5."""
    _check_rankings(rank_a, rank_b)
    n = len(rank_a)
    agree = 0.0
    for i in range(n):
        for j in range(i + 1, n):
            da = rank_a[i] - rank_a[j]
            db = rank_b[i] - rank_b[j]
            if db == 0:
                agree += 0.5
            elif (da > 0) == (db > 0) and da != 0:
                agree += 1.0
    return agree / (n * (n - 1) / 2)


def eval_reward_model(
    groups: list[PreferenceGroup],
    scorer: ScorerModel | None = None,
    mode: RewardMode = RewardMode.FULL,
) -> AgreementReport:
    """Rank each group's responses by sample reward and compare with humans.

    tau and position consistency are averaged over groups; timing is the
    mean wall-clock seconds spent scoring one group.
    """
    if not groups:
        raise SchemaError("eval_reward_model requires at least one group")
    taus = []
    pcs = []
    elapsed = 0.0
    for index, group in enumerate(groups):
        start = time.perf_counter()
        try:
            rewards = [
                sample_reward(text, group.constraint_set, scorer, mode).aggregate
                for text, _ in group.responses
            ]
        except Exception as exc:
            raise RuntimeError(f"scoring failed on group {index}: {exc}") from exc
        elapsed += time.perf_counter() - start
        model_ranks = rankdata([-r for r in rewards], method="average")
        human_ranks = [rank for _, rank in group.responses]
        taus.append(kendall_tau(human_ranks, model_ranks))
        pcs.append(position_consistency(human_ranks, model_ranks))
    n = len(groups)
    return AgreementReport(
        kendall_tau=sum(taus) / n,
        position_consistency=sum(pcs) / n,
        time_per_group=elapsed / n,
        num_groups=n,
    )


def satisfaction_rates(
    results: list[tuple[Instruction, Sequence[bool]]],
) -> tuple[float, float]:
    """(csr, isr): satisfied-constraint fraction and all-satisfied fraction."""
    if not results:
        raise SchemaError("satisfaction_rates requires at least one result")
    total = 0
    satisfied = 0
    fully_satisfied = 0
    for inst, verdicts in results:
        if not verdicts:
            raise SchemaError(f"instruction {inst.id!r} has no constraint results")
        total += len(verdicts)
        satisfied += sum(bool(v) for v in verdicts)
        fully_satisfied += all(verdicts)
    return satisfied / total, fully_satisfied / len(results)


def strict_hard_rates(
    results: list[tuple[Instruction, Sequence[bool]]],
) -> tuple[float, float]:
    """csr/isr restricted to hard constraints (instruction- and prompt-level strict)."""
    filtered = []
    for inst, verdicts in results:
        if len(verdicts) != len(inst.constraints):
            raise SchemaError(
                f"instruction {inst.id!r}: {len(verdicts)} results for "
                f"{len(inst.constraints)} constraints"
            )
        hard = [
            bool(v)
            for c, v in zip(inst.constraints, verdicts)
            if c.kind is ConstraintKind.HARD
        ]
        if hard:
            filtered.append((inst, hard))
    if not filtered:
        raise SchemaError("no hard constraints in any result")
    return satisfaction_rates(filtered)


# ---------------------------------------------------------------------------
# JSON codec for preference groups
# ---------------------------------------------------------------------------


def group_to_json(group: PreferenceGroup) -> dict[str, Any]:
    return {
        "constraints": [constraint_to_json(c) for c in group.constraint_set],
        "responses": [{"text": text, "human_rank": rank} for text, rank in group.responses],
    }


def group_from_json(d: dict[str, Any]) -> PreferenceGroup:
    constraints = tuple(constraint_from_json(c) for c in d.get("constraints", []))
    for c in constraints:
        validate_constraint(c)
    responses = tuple(
        (str(r.get("text", "")), int(r.get("human_rank", 0))) for r in d.get("responses", [])
    )
    return PreferenceGroup(constraint_set=constraints, responses=responses)


def load_groups(path) -> list[PreferenceGroup]:
    from .core import _load_jsonl

    return _load_jsonl(path, group_from_json, "preference group")


def save_groups(groups: list[PreferenceGroup], path) -> None:
    from .core import _save_jsonl

    _save_jsonl(groups, group_to_json, path)
