"""Domain types, validation, and JSONL round trips."""

import pytest

from ifrl import core
from ifrl.core import (
    Constraint,
    ConstraintKind,
    CurriculumLevel,
    DatasetError,
    DatasetIOError,
    HardRule,
    Instruction,
    LabeledPair,
    Response,
    ResponseSource,
    RolloutGroup,
    SchemaError,
    TaskKind,
)

HARD = Constraint(
    id="c1",
    kind=ConstraintKind.HARD,
    rule=HardRule("word_count", {"relation": "at_least", "count": 3}),
)
SOFT = Constraint(id="c2", kind=ConstraintKind.SOFT, text="Use a formal tone.", category="Style")


def make_instruction(constraints=(HARD, SOFT)):
    return Instruction(id="i1", seed_text="Write a memo.", constraints=tuple(constraints))


# -- validation ---------------------------------------------------------------


def test_validate_constraint_accepts_both_kinds():
    core.validate_constraint(HARD)
    core.validate_constraint(SOFT)


def test_hard_constraint_requires_rule():
    with pytest.raises(SchemaError, match="missing its rule"):
        core.validate_constraint(Constraint(id="c", kind=ConstraintKind.HARD))


def test_soft_constraint_requires_text():
    with pytest.raises(SchemaError, match="empty description"):
        core.validate_constraint(Constraint(id="c", kind=ConstraintKind.SOFT, text="  "))


def test_constraint_requires_id():
    with pytest.raises(SchemaError, match="id"):
        core.validate_constraint(Constraint(id="", kind=ConstraintKind.SOFT, text="x"))


def test_display_text_renders_hard_rule_and_soft_text():
    assert "at least 3" in HARD.display_text()
    assert SOFT.display_text() == "Use a formal tone."


def test_instruction_constraint_limit():
    many = tuple(
        Constraint(id=f"c{i}", kind=ConstraintKind.SOFT, text="t")
        for i in range(core.MAX_CONSTRAINTS + 1)
    )
    with pytest.raises(SchemaError, match="maximum"):
        core.validate_instruction(make_instruction(many))


def test_instruction_rejects_duplicate_constraint_ids():
    dup = Constraint(id="c1", kind=ConstraintKind.SOFT, text="x")
    with pytest.raises(SchemaError, match="duplicate constraint id"):
        core.validate_instruction(make_instruction((HARD, dup)))


def test_reasoning_instruction_rules():
    ok = Instruction(id="r1", seed_text="2+2?", task_kind=TaskKind.REASONING, gold_answer="4")
    core.validate_instruction(ok)
    with pytest.raises(SchemaError, match="gold_answer"):
        core.validate_instruction(
            Instruction(id="r2", seed_text="2+2?", task_kind=TaskKind.REASONING)
        )
    with pytest.raises(SchemaError, match="no constraints"):
        core.validate_instruction(
            Instruction(
                id="r3",
                seed_text="2+2?",
                constraints=(SOFT,),
                task_kind=TaskKind.REASONING,
                gold_answer="4",
            )
        )


def test_rollout_group_length_checks():
    level = CurriculumLevel("i1", 1, "text", (HARD,))
    with pytest.raises(SchemaError):
        RolloutGroup(level, responses=("a", "b"), rewards=(1.0,))
    with pytest.raises(SchemaError):
        RolloutGroup(level, responses=("a",), rewards=(1.0,), advantages=(0.0, 0.0))


# -- JSON codecs --------------------------------------------------------------


def test_constraint_json_round_trip():
    for c in (HARD, SOFT):
        assert core.constraint_from_json(core.constraint_to_json(c)) == c


def test_constraint_json_rejects_bad_kind():
    with pytest.raises(SchemaError, match="kind"):
        core.constraint_from_json({"id": "c", "kind": "fuzzy"})


def test_hard_constraint_json_requires_rule_object():
    with pytest.raises(SchemaError, match="rule"):
        core.constraint_from_json({"id": "c", "kind": "hard"})


def test_pair_json_rejects_bad_label():
    d = core.pair_to_json(LabeledPair("text", SOFT, 1))
    d["label"] = 2
    with pytest.raises(SchemaError, match="label"):
        core.pair_from_json(d)


def test_level_json_enforces_k_matches_constraints():
    level = CurriculumLevel("i1", 1, "text", (HARD,))
    d = core.level_to_json(level)
    assert core.level_from_json(d) == level
    d["k"] = 2
    with pytest.raises(SchemaError, match="exactly k"):
        core.level_from_json(d)


def test_response_json_round_trip_and_validation():
    r = Response("i1", 2, "body", ResponseSource.MOCK)
    assert core.response_from_json(core.response_to_json(r)) == r
    with pytest.raises(SchemaError, match="level_k"):
        core.response_from_json({"instruction_id": "i1", "level_k": -1, "text": "x"})
    with pytest.raises(SchemaError, match="source"):
        core.response_from_json({"instruction_id": "i1", "level_k": 0, "text": "x", "source": "??"})


# -- JSONL files --------------------------------------------------------------


def test_instruction_file_round_trip(tmp_path):
    insts = [make_instruction(), Instruction(id="i2", seed_text="Another.", constraints=(SOFT,))]
    path = tmp_path / "insts.jsonl"
    core.save_instructions(insts, path)
    assert core.load_instructions(path) == insts


def test_pairs_file_round_trip(tmp_path):
    pairs = [LabeledPair("good", SOFT, 1), LabeledPair("bad", SOFT, 0)]
    path = tmp_path / "pairs.jsonl"
    core.save_pairs(pairs, path)
    assert core.load_pairs(path) == pairs


def test_load_reports_line_number_for_bad_json(tmp_path):
    path = tmp_path / "broken.jsonl"
    path.write_text('{"id": "i1", "seed_text": "ok", "constraints": []}\n{oops\n', encoding="utf-8")
    with pytest.raises(DatasetError, match=r"broken\.jsonl:2"):
        core.load_instructions(path)


def test_load_reports_line_number_for_schema_error(tmp_path):
    path = tmp_path / "bad.jsonl"
    path.write_text('{"response_text": "t", "constraint": {}, "label": 5}\n', encoding="utf-8")
    with pytest.raises(DatasetError, match=r"bad\.jsonl:1"):
        core.load_pairs(path)


def test_load_skips_blank_lines(tmp_path):
    path = tmp_path / "gaps.jsonl"
    path.write_text('\n{"id": "i1", "seed_text": "ok", "constraints": []}\n\n', encoding="utf-8")
    assert len(core.load_instructions(path)) == 1


def test_duplicate_instruction_ids_rejected(tmp_path):
    path = tmp_path / "dups.jsonl"
    core.save_instructions([make_instruction(), make_instruction()], path)
    with pytest.raises(DatasetError, match="duplicate instruction id"):
        core.load_instructions(path)


def test_missing_file_raises_io_error(tmp_path):
    with pytest.raises(DatasetIOError, match="does not exist"):
        core.load_instructions(tmp_path / "nope.jsonl")


def test_unwritable_path_raises_io_error(tmp_path):
    # a directory path cannot be opened for writing
    with pytest.raises(DatasetIOError, match="cannot write"):
        core.save_instructions([make_instruction()], tmp_path)
