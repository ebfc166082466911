"""Deterministic mock policy and synthetic corpora for tests and demos.

The mock policy answers curriculum level k with a base paragraph plus
one satisfier snippet per constraint c_1..c_k. Constraint templates are
chosen to be order-insensitive and non-interacting (appending the
satisfier for one constraint can never accidentally satisfy another),
so the level-k response provably satisfies c_k while the level-(k-1)
response provably does not.
"""

from __future__ import annotations

import random
import re

from .core import (
    Constraint,
    ConstraintKind,
    HardRule,
    Instruction,
    LabeledPair,
    Response,
    ResponseSource,
)
from .metrics import PreferenceGroup

# Letters reserved for letter_frequency constraints; every other snippet
# (base text, nonce words, caps words, list items) avoids them.
RARE_LETTERS = ("z", "q", "x", "j")

_SYLLABLES = ("ba", "ce", "di", "fo", "gu", "hem", "lor", "mun", "pel", "rin", "sat", "tov")
_CAPS_WORDS = ("BADGE", "CABLE", "DECAL", "FABLE", "GABLE")
_ITEM_WORDS = ("one", "two", "three", "four")
_HIGHLIGHT_WORDS = ("calm", "bright", "steady")

_BASE_TEXT = (
    "Report {index}. The crew compiled field notes after the long survey. "
    "Results held steady across each area and the team agreed on the summary."
)

_QUOTED = re.compile(r'"([a-z]+)"')


def _nonce(rng: random.Random, used: set[str]) -> str:
    while True:
        word = "".join(rng.choice(_SYLLABLES) for _ in range(3))
        if word not in used:
            used.add(word)
            return word


# ---------------------------------------------------------------------------
# Constraint templates
# ---------------------------------------------------------------------------


def _hard_templates(rng: random.Random, used: set[str]):
    return {
        "keyword": lambda: HardRule(
            "keyword_inclusion",
            {"keyword": _nonce(rng, used), "relation": "at_least", "count": rng.randint(1, 2)},
        ),
        "letter": lambda: HardRule(
            "letter_frequency",
            {"letter": rng.choice(RARE_LETTERS), "relation": "at_least", "count": rng.randint(2, 4)},
        ),
        "bullets": lambda: HardRule(
            "bullet_point_count", {"relation": "at_least", "count": rng.randint(1, 3)}
        ),
        "numbered": lambda: HardRule(
            "numbered_list_count", {"relation": "at_least", "count": rng.randint(1, 2)}
        ),
        "caps": lambda: HardRule(
            "all_caps_word_frequency", {"relation": "at_least", "count": rng.randint(1, 2)}
        ),
        "highlight": lambda: HardRule(
            "markdown_highlight_sections", {"relation": "at_least", "count": rng.randint(1, 2)}
        ),
        "title": lambda: HardRule("title_in_double_angular_brackets", {}),
    }


_SOFT_TEMPLATES = (
    ('Mention the project codename "{nonce}" somewhere in your answer.', "Lexical content constraint"),
    ('Weave the landmark "{nonce}" into your response.', "Element constraint"),
    ('Address the reader as "{nonce}" at least once.', "Audience-specific"),
)


def hard_satisfier(rule: HardRule) -> str:
    """A text snippet that satisfies the rule when appended to any response."""
    t, p = rule.rule_type, rule.params
    if t == "keyword_inclusion":
        return " ".join([p["keyword"]] * p["count"]) + "."
    if t == "letter_frequency":
        return p["letter"] * p["count"]
    if t == "bullet_point_count":
        return "\n".join(f"- item {_ITEM_WORDS[i]}" for i in range(p["count"]))
    if t == "numbered_list_count":
        return "\n".join(f"{i + 1}. step {_ITEM_WORDS[i]}" for i in range(p["count"]))
    if t == "all_caps_word_frequency":
        return " ".join(_CAPS_WORDS[: p["count"]])
    if t == "markdown_highlight_sections":
        return " ".join(f"*{_HIGHLIGHT_WORDS[i]} note*" for i in range(p["count"]))
    if t == "title_in_double_angular_brackets":
        return "<<Field Notes>>"
    raise ValueError(f"no mock satisfier for rule_type {t!r}")


def soft_satisfier(constraint: Constraint) -> str:
    match = _QUOTED.search(constraint.text)
    if match is None:
        raise ValueError(f"soft constraint {constraint.id!r} carries no quoted mock token")
    return f"We note {match.group(1)} in this report."


def satisfier(constraint: Constraint) -> str:
    if constraint.kind is ConstraintKind.HARD:
        return hard_satisfier(constraint.rule)
    return soft_satisfier(constraint)


# ---------------------------------------------------------------------------
# Corpus generation
# ---------------------------------------------------------------------------


def make_instruction(
    index: int,
    n: int,
    rng: random.Random,
    soft_only: bool = False,
) -> Instruction:
    """One synthetic instruction with n mutually independent constraints."""
    used: set[str] = set()
    hard = _hard_templates(rng, used)
    hard_names = list(hard)
    soft_slots = [f"soft{i}" for i in range(len(_SOFT_TEMPLATES))]
    if soft_only:
        # templates may repeat: each draw gets a fresh nonce token
        slots = [rng.choice(soft_slots) for _ in range(n)]
    else:
        slots = rng.sample(hard_names + soft_slots, n)
    constraints = []
    for i, slot in enumerate(slots):
        cid = f"c{i + 1}"
        if slot in hard:
            constraints.append(Constraint(id=cid, kind=ConstraintKind.HARD, rule=hard[slot]()))
        else:
            template, category = _SOFT_TEMPLATES[int(slot[4:])]
            constraints.append(
                Constraint(
                    id=cid,
                    kind=ConstraintKind.SOFT,
                    text=template.format(nonce=_nonce(rng, used)),
                    category=category,
                )
            )
    return Instruction(
        id=f"inst-{index:04d}",
        seed_text=_BASE_TEXT.format(index=index),
        constraints=tuple(constraints),
    )


def make_corpus(num_instructions: int = 50, n: int = 5, seed: int = 0) -> list[Instruction]:
    rng = random.Random(seed)
    return [make_instruction(i, n, rng) for i in range(num_instructions)]


def mock_response(instruction: Instruction, k: int) -> Response:
    """Deterministic response satisfying exactly constraints c_1..c_k."""
    if not 0 <= k <= len(instruction.constraints):
        raise ValueError(f"level {k} out of range for instruction {instruction.id!r}")
    parts = [instruction.seed_text]
    parts.extend(satisfier(c) for c in instruction.constraints[:k])
    return Response(
        instruction_id=instruction.id,
        level_k=k,
        text="\n".join(parts),
        source=ResponseSource.MOCK,
    )


def mock_responses(instruction: Instruction) -> dict[int, Response]:
    """Responses for levels 0..n (level 0 answers the bare seed)."""
    return {k: mock_response(instruction, k) for k in range(len(instruction.constraints) + 1)}


def make_preference_groups(instructions: list[Instruction]) -> list[PreferenceGroup]:
    """Groups of 5 constraints and 5 responses satisfying 1..5 of them.

    Built from existing 5-constraint instructions (typically the same
    corpus a scorer trained on, since hashed nonce features do not
    transfer to unseen instructions). The response satisfying all five
    constraints gets human rank 1.
    """
    groups = []
    for inst in instructions:
        if len(inst.constraints) != 5:
            raise ValueError(f"instruction {inst.id!r} needs exactly 5 constraints")
        responses = tuple((mock_response(inst, j).text, 6 - j) for j in range(1, 6))
        groups.append(PreferenceGroup(constraint_set=inst.constraints, responses=responses))
    return groups


# ---------------------------------------------------------------------------
# Linearly separable toy pair set
# ---------------------------------------------------------------------------

_FILLER = (
    "the report covers recent findings",
    "a short summary follows here",
    "please review the details below",
    "results appear broadly consistent",
    "further study may help later",
)

SEPARABLE_CONSTRAINT = Constraint(
    id="c-cats",
    kind=ConstraintKind.SOFT,
    text="The response must mention cats.",
    category="Lexical content constraint",
)


def make_separable_pairs(num_pairs: int = 200, seed: int = 0) -> list[LabeledPair]:
    """Half positive (contain the token 'cats'), half negative (do not)."""
    rng = random.Random(seed)
    pairs = []
    for i in range(num_pairs):
        label = i % 2
        words = [rng.choice(_FILLER) for _ in range(rng.randint(1, 3))]
        text = ". ".join(words)
        if label:
            text += ". We truly admire cats."
        pairs.append(LabeledPair(response_text=text, constraint=SEPARABLE_CONSTRAINT, label=label))
    return pairs
