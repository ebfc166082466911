"""Incremental constraint curricula and self-supervised training pairs.

A multi-constraint instruction with constraints c_1..c_n is decomposed
into n levels: level k carries the first k constraints. A response
written for level k should satisfy c_k while the level k-1 response
(which never saw c_k) should not, which yields labeled training pairs
for the soft-constraint scorer without any external annotation.
"""

from __future__ import annotations

from dataclasses import dataclass

from . import verifier
from .core import (
    Constraint,
    ConstraintKind,
    CurriculumLevel,
    Instruction,
    LabeledPair,
    Response,
    SchemaError,
    TaskKind,
)


@dataclass(frozen=True)
class LevelStats:
    k: int
    num_instructions: int
    num_constraints: int
    num_soft: int
    num_hard: int


@dataclass(frozen=True)
class CurriculumStats:
    per_level: tuple[LevelStats, ...]


def render_level_text(seed_text: str, constraints: tuple[Constraint, ...]) -> str:
    """Seed text followed by one constraint sentence per line."""
    lines = [seed_text]
    lines.extend(c.display_text() for c in constraints)
    return "\n".join(lines)


def decompose(instruction: Instruction) -> list[CurriculumLevel]:
    """Split an instruction into levels 1..n, each a constraint prefix."""
    if instruction.task_kind is not TaskKind.INSTRUCTION_FOLLOWING:
        raise SchemaError(f"instruction {instruction.id!r} is a reasoning task; nothing to decompose")
    if not instruction.constraints:
        raise SchemaError(f"instruction {instruction.id!r} has no constraints; nothing to decompose")
    levels = []
    for k in range(1, len(instruction.constraints) + 1):
        prefix = instruction.constraints[:k]
        levels.append(
            CurriculumLevel(
                instruction_id=instruction.id,
                k=k,
                rendered_text=render_level_text(instruction.seed_text, prefix),
                constraints=prefix,
            )
        )
    return levels


def build_pairs(
    levels: list[CurriculumLevel],
    responses: dict[int, Response],
    denoise_hard: bool = False,
) -> list[LabeledPair]:
    """Emit (o_k, c_k, 1) and (o_{k-1}, c_k, 0) for every level k.

    ``responses`` maps level index to the response generated for that
    level, and must include level 0 (the response to the bare seed),
    which serves as the negative example for the first constraint.

    With ``denoise_hard`` set, pairs whose hard constraint contradicts
    the assigned label under rule verification are dropped; by default
    all pairs are kept.
    """
    if not levels:
        return []
    instruction_id = levels[0].instruction_id
    for level in levels:
        if level.instruction_id != instruction_id:
            raise SchemaError(
                f"levels mix instructions {instruction_id!r} and {level.instruction_id!r}"
            )
    for response in responses.values():
        if response.instruction_id != instruction_id:
            raise SchemaError(
                f"response for instruction {response.instruction_id!r} does not belong "
                f"to {instruction_id!r}"
            )
    needed = {0} | {level.k for level in levels}
    missing = sorted(needed - set(responses))
    if missing:
        raise SchemaError(f"missing responses for levels {missing} of instruction {instruction_id!r}")

    pairs: list[LabeledPair] = []
    for level in sorted(levels, key=lambda lv: lv.k):
        c_k = level.constraints[-1]
        positive = LabeledPair(responses[level.k].text, c_k, 1)
        negative = LabeledPair(responses[level.k - 1].text, c_k, 0)
        for pair in (positive, negative):
            if denoise_hard and c_k.kind is ConstraintKind.HARD:
                verdict = verifier.verify(pair.response_text, c_k.rule, c_k.id)
                if int(verdict.satisfied) != pair.label:
                    continue
            pairs.append(pair)
    return pairs


def dataset_stats(levels: list[CurriculumLevel]) -> CurriculumStats:
    """Per-level instruction/constraint counts with the soft/hard split."""
    by_k: dict[int, list[CurriculumLevel]] = {}
    for level in levels:
        by_k.setdefault(level.k, []).append(level)
    rows = []
    for k in sorted(by_k):
        group = by_k[k]
        num_soft = sum(
            1 for level in group for c in level.constraints if c.kind is ConstraintKind.SOFT
        )
        num_constraints = sum(len(level.constraints) for level in group)
        rows.append(
            LevelStats(
                k=k,
                num_instructions=len(group),
                num_constraints=num_constraints,
                num_soft=num_soft,
                num_hard=num_constraints - num_soft,
            )
        )
    return CurriculumStats(per_level=tuple(rows))
