"""Deterministic rule-based verification of hard constraints.

Every rule is a pure function of the response text, so results are
identical across runs and platforms. Text conventions, chosen so that
fixtures are unambiguous:

* word: maximal run of non-whitespace characters after trimming
* sentence: segment terminated by '.', '!' or '?' followed by
  whitespace or end of string (runs like "?!" count once)
* paragraph: block of non-blank lines separated by at least one blank line
* letter counting is case-insensitive
* keyword matching is case-insensitive on whole words
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass
from typing import Any, Callable

from .core import HardRule, SchemaError

RELATIONS = ("at_least", "at_most", "exactly")

_SENTENCE_END = re.compile(r"[.!?]+(?=\s|$)")
_HIGHLIGHT = re.compile(r"\*\*([^*\n]+)\*\*|\*([^*\n]+)\*")
_TITLE = re.compile(r"<<([^<>\n]+)>>")
_NUMBERED_LINE = re.compile(r"^\s*\d+[.)]\s+\S")


class UnsupportedRuleError(ValueError):
    """rule_type is not in this binary's catalog (dataset/binary version skew)."""


@dataclass(frozen=True)
class VerificationResult:
    constraint_id: str
    satisfied: bool
    detail: str


def _relation_holds(observed: int, relation: str, count: int) -> bool:
    if relation == "at_least":
        return observed >= count
    if relation == "at_most":
        return observed <= count
    return observed == count


# -- measurement helpers ----------------------------------------------------


def count_words(text: str) -> int:
    return len(text.split())


def count_sentences(text: str) -> int:
    return len(_SENTENCE_END.findall(text))


def count_paragraphs(text: str) -> int:
    blocks = re.split(r"\n\s*\n", text.strip())
    return sum(1 for b in blocks if b.strip())


def count_letter(text: str, letter: str) -> int:
    return text.lower().count(letter.lower())


def count_keyword(text: str, keyword: str) -> int:
    pattern = r"(?<!\w)" + re.escape(keyword) + r"(?!\w)"
    return len(re.findall(pattern, text, re.IGNORECASE))


def count_all_caps_words(text: str) -> int:
    n = 0
    for token in text.split():
        start, end = 0, len(token)
        while start < end and not token[start].isalpha():
            start += 1
        while end > start and not token[end - 1].isalpha():
            end -= 1
        core = token[start:end]
        if len(core) >= 2 and core.isalpha() and core.isupper():
            n += 1
    return n


def count_highlights(text: str) -> int:
    n = 0
    for m in _HIGHLIGHT.finditer(text):
        interior = m.group(1) or m.group(2) or ""
        if interior.strip():
            n += 1
    return n


def count_bullets(text: str) -> int:
    n = 0
    for line in text.splitlines():
        stripped = line.lstrip()
        if stripped.startswith("- ") or stripped.startswith("* ") or stripped.startswith("• "):
            n += 1
    return n


def count_numbered_lines(text: str) -> int:
    return sum(1 for line in text.splitlines() if _NUMBERED_LINE.match(line))


# -- parameter schemas ------------------------------------------------------


def _check_relation_count(params: dict[str, Any], rule_type: str) -> None:
    relation = params.get("relation")
    if relation not in RELATIONS:
        raise SchemaError(f"{rule_type}: 'relation' must be one of {RELATIONS}, got {relation!r}")
    count = params.get("count")
    if not isinstance(count, int) or isinstance(count, bool) or count < 0:
        raise SchemaError(f"{rule_type}: 'count' must be a non-negative integer, got {count!r}")


def _check_nonempty_str(params: dict[str, Any], key: str, rule_type: str) -> None:
    value = params.get(key)
    if not isinstance(value, str) or not value.strip():
        raise SchemaError(f"{rule_type}: {key!r} must be a non-empty string, got {value!r}")


def _schema_counted(rule_type: str):
    def check(params: dict[str, Any]) -> None:
        _check_relation_count(params, rule_type)

    return check


def _schema_none(rule_type: str):
    def check(params: dict[str, Any]) -> None:
        if params:
            raise SchemaError(f"{rule_type} takes no parameters, got {sorted(params)}")

    return check


# -- rule implementations ---------------------------------------------------


def _counted_check(measure: Callable[[str, dict], int], unit: str):
    def check(text: str, params: dict[str, Any]) -> tuple[bool, str]:
        observed = measure(text, params)
        ok = _relation_holds(observed, params["relation"], params["count"])
        return ok, f"observed {observed} {unit}; required {params['relation'].replace('_', ' ')} {params['count']}"

    return check


def _check_json_format(text: str, params: dict[str, Any]) -> tuple[bool, str]:
    stripped = text.strip()
    if not stripped:
        return False, "response is empty, not a JSON value"
    try:
        json.loads(stripped)
        return True, "entire trimmed response parses as a single JSON value"
    except json.JSONDecodeError as exc:
        return False, f"JSON parse failed: {exc.msg} at position {exc.pos}"


def _check_all_caps(text: str, params: dict[str, Any]) -> tuple[bool, str]:
    has_upper = any(ch.isupper() for ch in text)
    lower = sum(1 for ch in text if ch.islower())
    ok = has_upper and lower == 0
    return ok, f"observed {lower} lowercase letters; uppercase present: {has_upper}"


def _check_all_lowercase(text: str, params: dict[str, Any]) -> tuple[bool, str]:
    has_lower = any(ch.islower() for ch in text)
    upper = sum(1 for ch in text if ch.isupper())
    ok = has_lower and upper == 0
    return ok, f"observed {upper} uppercase letters; lowercase present: {has_lower}"


def _check_keyword_exclusion(text: str, params: dict[str, Any]) -> tuple[bool, str]:
    observed = count_keyword(text, params["keyword"])
    return observed == 0, f"observed {observed} occurrences of {params['keyword']!r}"


def _check_wrapped_quotes(text: str, params: dict[str, Any]) -> tuple[bool, str]:
    stripped = text.strip()
    ok = len(stripped) >= 2 and stripped.startswith('"') and stripped.endswith('"')
    return ok, f"trimmed response starts with {stripped[:1]!r} and ends with {stripped[-1:]!r}"


def _check_starts_with(text: str, params: dict[str, Any]) -> tuple[bool, str]:
    phrase = params["phrase"]
    head = text.strip()[: len(phrase)]
    ok = head.lower() == phrase.lower()
    return ok, f"response starts with {head!r}; required {phrase!r}"


def _check_ends_with(text: str, params: dict[str, Any]) -> tuple[bool, str]:
    phrase = params["phrase"]
    tail = text.strip()[-len(phrase):] if phrase else ""
    ok = tail.lower() == phrase.lower()
    return ok, f"response ends with {tail!r}; required {phrase!r}"


def _check_title(text: str, params: dict[str, Any]) -> tuple[bool, str]:
    for m in _TITLE.finditer(text):
        if m.group(1).strip():
            return True, f"found title {m.group(0)!r}"
    return False, "no non-empty <<...>> title found"


def _check_no_commas(text: str, params: dict[str, Any]) -> tuple[bool, str]:
    observed = text.count(",")
    return observed == 0, f"observed {observed} commas"


# -- catalog ----------------------------------------------------------------


@dataclass(frozen=True)
class CatalogEntry:
    rule_type: str
    param_schema: dict[str, str]
    description: str


_COUNTED_PARAMS = {"relation": "one of at_least/at_most/exactly", "count": "integer >= 0"}


def _describe_counted(unit: str):
    def describe(params: dict[str, Any]) -> str:
        return f"Use {params['relation'].replace('_', ' ')} {params['count']} {unit}."

    return describe


@dataclass(frozen=True)
class _Rule:
    schema_check: Callable[[dict[str, Any]], None]
    check: Callable[[str, dict[str, Any]], tuple[bool, str]]
    describe: Callable[[dict[str, Any]], str]
    param_schema: dict[str, str]
    description: str


def _make_catalog() -> dict[str, _Rule]:
    rules: dict[str, _Rule] = {}

    def add(rule_type, schema_check, check, describe, param_schema, description):
        rules[rule_type] = _Rule(schema_check, check, describe, dict(param_schema), description)

    add(
        "word_count",
        _schema_counted("word_count"),
        _counted_check(lambda t, p: count_words(t), "words"),
        _describe_counted("words"),
        _COUNTED_PARAMS,
        "Bound the number of whitespace-separated words.",
    )
    add(
        "sentence_count",
        _schema_counted("sentence_count"),
        _counted_check(lambda t, p: count_sentences(t), "sentences"),
        _describe_counted("sentences"),
        _COUNTED_PARAMS,
        "Bound the number of '.', '!' or '?' terminated sentences.",
    )
    add(
        "paragraph_count",
        _schema_counted("paragraph_count"),
        _counted_check(lambda t, p: count_paragraphs(t), "paragraphs"),
        _describe_counted("paragraphs"),
        _COUNTED_PARAMS,
        "Bound the number of blank-line separated paragraphs.",
    )
    add(
        "json_format",
        _schema_none("json_format"),
        _check_json_format,
        lambda p: "Format the entire response as a single valid JSON value.",
        {},
        "The entire trimmed response must parse as one JSON value.",
    )
    add(
        "all_capital_letters",
        _schema_none("all_capital_letters"),
        _check_all_caps,
        lambda p: "Write the response in all capital letters.",
        {},
        "Every letter uppercase, with at least one letter present.",
    )
    add(
        "all_lowercase",
        _schema_none("all_lowercase"),
        _check_all_lowercase,
        lambda p: "Write the response entirely in lowercase.",
        {},
        "Every letter lowercase, with at least one letter present.",
    )

    def _schema_letter(params: dict[str, Any]) -> None:
        _check_relation_count(params, "letter_frequency")
        letter = params.get("letter")
        if not isinstance(letter, str) or len(letter) != 1 or not letter.isalpha():
            raise SchemaError(f"letter_frequency: 'letter' must be a single letter, got {letter!r}")

    add(
        "letter_frequency",
        _schema_letter,
        _counted_check(lambda t, p: count_letter(t, p["letter"]), "occurrences"),
        lambda p: (
            f"Answer with the letter \"{p['letter']}\" appearing "
            f"{p['relation'].replace('_', ' ')} {p['count']} times."
        ),
        {"letter": "single letter", **_COUNTED_PARAMS},
        "Bound the case-insensitive frequency of one letter.",
    )

    def _schema_keyword_inc(params: dict[str, Any]) -> None:
        _check_nonempty_str(params, "keyword", "keyword_inclusion")
        _check_relation_count(params, "keyword_inclusion")

    add(
        "keyword_inclusion",
        _schema_keyword_inc,
        _counted_check(lambda t, p: count_keyword(t, p["keyword"]), "occurrences"),
        lambda p: (
            f"Include the word \"{p['keyword']}\" "
            f"{p['relation'].replace('_', ' ')} {p['count']} times."
        ),
        {"keyword": "non-empty string", **_COUNTED_PARAMS},
        "Bound case-insensitive whole-word occurrences of a keyword.",
    )

    def _schema_keyword_exc(params: dict[str, Any]) -> None:
        _check_nonempty_str(params, "keyword", "keyword_exclusion")
        extra = set(params) - {"keyword"}
        if extra:
            raise SchemaError(f"keyword_exclusion: unexpected parameters {sorted(extra)}")

    add(
        "keyword_exclusion",
        _schema_keyword_exc,
        _check_keyword_exclusion,
        lambda p: f"Do not use the word \"{p['keyword']}\" anywhere in the response.",
        {"keyword": "non-empty string"},
        "The keyword must not appear as a whole word.",
    )
    add(
        "all_caps_word_frequency",
        _schema_counted("all_caps_word_frequency"),
        _counted_check(lambda t, p: count_all_caps_words(t), "all-caps words"),
        _describe_counted("words in all capital letters"),
        _COUNTED_PARAMS,
        "Bound the count of words (length >= 2) made solely of uppercase letters.",
    )
    add(
        "markdown_highlight_sections",
        _schema_counted("markdown_highlight_sections"),
        _counted_check(lambda t, p: count_highlights(t), "highlighted sections"),
        _describe_counted("markdown-highlighted sections such as *highlighted section*"),
        _COUNTED_PARAMS,
        "Bound the count of non-overlapping *...* or **...** spans with non-empty interior.",
    )
    add(
        "wrapped_in_double_quotes",
        _schema_none("wrapped_in_double_quotes"),
        _check_wrapped_quotes,
        lambda p: "Put your entire response inside double quotation marks.",
        {},
        "Trimmed response starts and ends with a double quote.",
    )
    add(
        "bullet_point_count",
        _schema_counted("bullet_point_count"),
        _counted_check(lambda t, p: count_bullets(t), "bullet points"),
        _describe_counted("bullet points (lines starting with '- ' or '* ')"),
        _COUNTED_PARAMS,
        "Bound the number of bullet-point lines.",
    )

    def _schema_phrase(rule_type: str):
        def check(params: dict[str, Any]) -> None:
            _check_nonempty_str(params, "phrase", rule_type)
            extra = set(params) - {"phrase"}
            if extra:
                raise SchemaError(f"{rule_type}: unexpected parameters {sorted(extra)}")

        return check

    add(
        "starts_with_phrase",
        _schema_phrase("starts_with_phrase"),
        _check_starts_with,
        lambda p: f"Begin your response with the exact phrase \"{p['phrase']}\".",
        {"phrase": "non-empty string"},
        "Trimmed response begins with the phrase (case-insensitive).",
    )
    add(
        "ends_with_phrase",
        _schema_phrase("ends_with_phrase"),
        _check_ends_with,
        lambda p: f"End your response with the exact phrase \"{p['phrase']}\".",
        {"phrase": "non-empty string"},
        "Trimmed response ends with the phrase (case-insensitive).",
    )
    add(
        "title_in_double_angular_brackets",
        _schema_none("title_in_double_angular_brackets"),
        _check_title,
        lambda p: "Give your response a title wrapped in double angular brackets, i.e. <<title>>.",
        {},
        "Response contains a non-empty <<...>> title.",
    )
    add(
        "no_commas",
        _schema_none("no_commas"),
        _check_no_commas,
        lambda p: "Do not use any commas in your response.",
        {},
        "The response contains no ',' characters.",
    )
    add(
        "numbered_list_count",
        _schema_counted("numbered_list_count"),
        _counted_check(lambda t, p: count_numbered_lines(t), "numbered list items"),
        _describe_counted("numbered list items (lines like '1. ...')"),
        _COUNTED_PARAMS,
        "Bound the number of numbered list lines.",
    )
    return rules


_CATALOG: dict[str, _Rule] = _make_catalog()


def _lookup(rule_type: str) -> _Rule:
    rule = _CATALOG.get(rule_type)
    if rule is None:
        raise UnsupportedRuleError(
            f"unsupported rule_type {rule_type!r}; this catalog knows {sorted(_CATALOG)}"
        )
    return rule


def validate_rule(rule: HardRule) -> None:
    """Check params against the rule_type's schema; raises SchemaError."""
    _lookup(rule.rule_type).schema_check(rule.params)


def describe_rule(rule: HardRule) -> str:
    """Render a rule as the instruction sentence shown to the policy."""
    return _lookup(rule.rule_type).describe(rule.params)


def verify(response_text: str, rule: HardRule, constraint_id: str = "") -> VerificationResult:
    """Check one rule against a response; detail reports the measurement."""
    entry = _lookup(rule.rule_type)
    satisfied, detail = entry.check(response_text, rule.params)
    return VerificationResult(constraint_id=constraint_id, satisfied=satisfied, detail=detail)


def verify_all(response_text: str, rules: list[HardRule]) -> list[VerificationResult]:
    """Verify rules in order; the first unsupported rule aborts with its index."""
    results = []
    for i, rule in enumerate(rules):
        try:
            results.append(verify(response_text, rule))
        except UnsupportedRuleError as exc:
            raise UnsupportedRuleError(f"rule {i}: {exc}") from exc
    return results


def catalog() -> list[CatalogEntry]:
    """Stable rule catalog, sorted by rule_type name."""
    return [
        CatalogEntry(rule_type=name, param_schema=dict(rule.param_schema), description=rule.description)
        for name, rule in sorted(_CATALOG.items())
    ]
