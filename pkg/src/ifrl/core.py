"""Shared domain types and JSONL dataset I/O.

All record types are frozen dataclasses: once constructed they are
immutable and safe to share across threads. Loaders validate every
record and reject bad data with the offending line number; nothing is
silently repaired.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import Any

MAX_CONSTRAINTS = 8


class SchemaError(ValueError):
    """A record violates the schema of its type."""


class DatasetError(ValueError):
    """A dataset file could not be read or parsed; carries path context."""


class DatasetIOError(DatasetError):
    """The file itself could not be read or written (as opposed to bad content)."""


class ConstraintKind(str, Enum):
    HARD = "hard"
    SOFT = "soft"


class TaskKind(str, Enum):
    INSTRUCTION_FOLLOWING = "instruction_following"
    REASONING = "reasoning"


class ResponseSource(str, Enum):
    EXTERNAL = "external"
    MOCK = "mock"


@dataclass(frozen=True)
class HardRule:
    """A machine-checkable rule: a catalog rule_type plus its parameters."""

    rule_type: str
    params: dict[str, Any] = field(default_factory=dict)


@dataclass(frozen=True)
class Constraint:
    """One atomic requirement, either a hard rule or a soft description."""

    id: str
    kind: ConstraintKind
    rule: HardRule | None = None
    text: str = ""
    category: str = ""

    def display_text(self) -> str:
        """Human-readable surface form used for rendering and featurizing."""
        if self.kind is ConstraintKind.SOFT:
            return self.text
        from . import verifier

        return verifier.describe_rule(self.rule)


@dataclass(frozen=True)
class Instruction:
    id: str
    seed_text: str
    constraints: tuple[Constraint, ...] = ()
    task_kind: TaskKind = TaskKind.INSTRUCTION_FOLLOWING
    gold_answer: str = ""


@dataclass(frozen=True)
class CurriculumLevel:
    """Sub-instruction carrying the first k constraints of its parent."""

    instruction_id: str
    k: int
    rendered_text: str
    constraints: tuple[Constraint, ...]


@dataclass(frozen=True)
class Response:
    instruction_id: str
    level_k: int
    text: str
    source: ResponseSource = ResponseSource.EXTERNAL


@dataclass(frozen=True)
class LabeledPair:
    """Self-supervised scorer-training record: (response, constraint, label)."""

    response_text: str
    constraint: Constraint
    label: int


@dataclass(frozen=True)
class ConstraintReward:
    constraint_id: str
    reward: float
    source: str  # "rule" | "model"


@dataclass(frozen=True)
class RewardBreakdown:
    """Per-constraint rewards plus their arithmetic mean."""

    per_constraint: tuple[ConstraintReward, ...]
    aggregate: float


@dataclass(frozen=True)
class RolloutGroup:
    level: CurriculumLevel
    responses: tuple[str, ...]
    rewards: tuple[float, ...]
    advantages: tuple[float, ...] | None = None

    def __post_init__(self) -> None:
        if len(self.responses) != len(self.rewards):
            raise SchemaError("responses and rewards must have equal length")
        if self.advantages is not None and len(self.advantages) != len(self.rewards):
            raise SchemaError("advantages must align with rewards")


# ---------------------------------------------------------------------------
# Validation
# ---------------------------------------------------------------------------


def validate_constraint(c: Constraint) -> None:
    if not c.id:
        raise SchemaError("constraint id must be non-empty")
    if c.kind is ConstraintKind.HARD:
        if c.rule is None:
            raise SchemaError(f"hard constraint {c.id!r} is missing its rule")
        from . import verifier

        verifier.validate_rule(c.rule)
    else:
        if not c.text.strip():
            raise SchemaError(f"soft constraint {c.id!r} has empty description text")


def validate_instruction(inst: Instruction) -> None:
    if not inst.id:
        raise SchemaError("instruction id must be non-empty")
    if len(inst.constraints) > MAX_CONSTRAINTS:
        raise SchemaError(
            f"instruction {inst.id!r} has {len(inst.constraints)} constraints "
            f"(maximum is {MAX_CONSTRAINTS})"
        )
    seen: set[str] = set()
    for c in inst.constraints:
        validate_constraint(c)
        if c.id in seen:
            raise SchemaError(f"duplicate constraint id {c.id!r} in instruction {inst.id!r}")
        seen.add(c.id)
    if inst.task_kind is TaskKind.REASONING:
        if inst.constraints:
            raise SchemaError(f"reasoning instruction {inst.id!r} must have no constraints")
        if not inst.gold_answer.strip():
            raise SchemaError(f"reasoning instruction {inst.id!r} must carry a gold_answer")


# ---------------------------------------------------------------------------
# JSON codecs (lower_snake_case fields throughout; see docs/formats.md)
# ---------------------------------------------------------------------------


def constraint_to_json(c: Constraint) -> dict[str, Any]:
    d: dict[str, Any] = {"id": c.id, "kind": c.kind.value}
    if c.kind is ConstraintKind.HARD:
        d["rule"] = {"rule_type": c.rule.rule_type, "params": dict(c.rule.params)}
    else:
        d["text"] = c.text
        d["category"] = c.category
    return d


def constraint_from_json(d: dict[str, Any]) -> Constraint:
    try:
        kind = ConstraintKind(d["kind"])
    except (KeyError, ValueError):
        raise SchemaError(f"constraint field 'kind' must be 'hard' or 'soft': {d.get('kind')!r}")
    if kind is ConstraintKind.HARD:
        rule = d.get("rule")
        if not isinstance(rule, dict) or "rule_type" not in rule:
            raise SchemaError("hard constraint requires a 'rule' object with 'rule_type'")
        return Constraint(
            id=str(d.get("id", "")),
            kind=kind,
            rule=HardRule(rule_type=rule["rule_type"], params=dict(rule.get("params", {}))),
        )
    return Constraint(
        id=str(d.get("id", "")),
        kind=kind,
        text=str(d.get("text", "")),
        category=str(d.get("category", "")),
    )


def instruction_to_json(inst: Instruction) -> dict[str, Any]:
    d: dict[str, Any] = {
        "id": inst.id,
        "seed_text": inst.seed_text,
        "task_kind": inst.task_kind.value,
        "constraints": [constraint_to_json(c) for c in inst.constraints],
    }
    if inst.task_kind is TaskKind.REASONING:
        d["gold_answer"] = inst.gold_answer
    return d


def instruction_from_json(d: dict[str, Any]) -> Instruction:
    try:
        task_kind = TaskKind(d.get("task_kind", TaskKind.INSTRUCTION_FOLLOWING.value))
    except ValueError:
        raise SchemaError(f"unknown task_kind {d.get('task_kind')!r}")
    constraints = tuple(constraint_from_json(c) for c in d.get("constraints", []))
    inst = Instruction(
        id=str(d.get("id", "")),
        seed_text=str(d.get("seed_text", "")),
        constraints=constraints,
        task_kind=task_kind,
        gold_answer=str(d.get("gold_answer", "")),
    )
    validate_instruction(inst)
    return inst


def level_to_json(level: CurriculumLevel) -> dict[str, Any]:
    return {
        "instruction_id": level.instruction_id,
        "k": level.k,
        "rendered_text": level.rendered_text,
        "constraints": [constraint_to_json(c) for c in level.constraints],
    }


def level_from_json(d: dict[str, Any]) -> CurriculumLevel:
    k = d.get("k")
    if not isinstance(k, int) or k < 1:
        raise SchemaError(f"level field 'k' must be an integer >= 1, got {k!r}")
    constraints = tuple(constraint_from_json(c) for c in d.get("constraints", []))
    if len(constraints) != k:
        raise SchemaError(f"level k={k} must carry exactly k constraints, got {len(constraints)}")
    for c in constraints:
        validate_constraint(c)
    return CurriculumLevel(
        instruction_id=str(d.get("instruction_id", "")),
        k=k,
        rendered_text=str(d.get("rendered_text", "")),
        constraints=constraints,
    )


def response_to_json(r: Response) -> dict[str, Any]:
    return {
        "instruction_id": r.instruction_id,
        "level_k": r.level_k,
        "text": r.text,
        "source": r.source.value,
    }


def response_from_json(d: dict[str, Any]) -> Response:
    level_k = d.get("level_k")
    if not isinstance(level_k, int) or level_k < 0:
        raise SchemaError(f"response field 'level_k' must be an integer >= 0, got {level_k!r}")
    try:
        source = ResponseSource(d.get("source", ResponseSource.EXTERNAL.value))
    except ValueError:
        raise SchemaError(f"unknown response source {d.get('source')!r}")
    return Response(
        instruction_id=str(d.get("instruction_id", "")),
        level_k=level_k,
        text=str(d.get("text", "")),
        source=source,
    )


def pair_to_json(p: LabeledPair) -> dict[str, Any]:
    return {
        "response_text": p.response_text,
        "constraint": constraint_to_json(p.constraint),
        "label": p.label,
    }


def pair_from_json(d: dict[str, Any]) -> LabeledPair:
    label = d.get("label")
    if label not in (0, 1):
        raise SchemaError(f"pair label must be 0 or 1, got {label!r}")
    constraint = constraint_from_json(d.get("constraint", {}))
    validate_constraint(constraint)
    return LabeledPair(response_text=str(d.get("response_text", "")), constraint=constraint, label=label)


# ---------------------------------------------------------------------------
# JSONL loaders/savers
# ---------------------------------------------------------------------------


def _load_jsonl(path: str | Path, decode, what: str) -> list:
    path = Path(path)
    if not path.exists():
        raise DatasetIOError(f"{path}: file does not exist")
    records = []
    with path.open("r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                raw = json.loads(line)
            except json.JSONDecodeError as exc:
                raise DatasetError(f"{path}:{lineno}: malformed JSON: {exc.msg}") from exc
            try:
                records.append(decode(raw))
            except SchemaError as exc:
                raise DatasetError(f"{path}:{lineno}: invalid {what}: {exc}") from exc
    return records


def _save_jsonl(records, encode, path: str | Path) -> None:
    path = Path(path)
    try:
        with path.open("w", encoding="utf-8") as fh:
            for rec in records:
                fh.write(json.dumps(encode(rec), ensure_ascii=False) + "\n")
    except OSError as exc:
        raise DatasetIOError(f"{path}: cannot write: {exc.strerror or exc}") from exc


def load_instructions(path: str | Path) -> list[Instruction]:
    """Load and validate an instruction dataset, rejecting duplicates."""
    instructions = _load_jsonl(path, instruction_from_json, "instruction")
    seen: set[str] = set()
    for inst in instructions:
        if inst.id in seen:
            raise DatasetError(f"{path}: duplicate instruction id {inst.id!r}")
        seen.add(inst.id)
    return instructions


def save_instructions(instructions: list[Instruction], path: str | Path) -> None:
    _save_jsonl(instructions, instruction_to_json, path)


def load_levels(path: str | Path) -> list[CurriculumLevel]:
    return _load_jsonl(path, level_from_json, "curriculum level")


def save_levels(levels: list[CurriculumLevel], path: str | Path) -> None:
    _save_jsonl(levels, level_to_json, path)


def load_responses(path: str | Path) -> list[Response]:
    return _load_jsonl(path, response_from_json, "response")


def save_responses(responses: list[Response], path: str | Path) -> None:
    _save_jsonl(responses, response_to_json, path)


def load_pairs(path: str | Path) -> list[LabeledPair]:
    return _load_jsonl(path, pair_from_json, "labeled pair")


def save_pairs(pairs: list[LabeledPair], path: str | Path) -> None:
    """Write labeled pairs as JSONL; load_pairs round-trips to equal values."""
    _save_jsonl(pairs, pair_to_json, path)
