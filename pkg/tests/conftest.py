"""Shared fixtures: a small deterministic corpus and scorers trained on it.

Training is the slow part of the suite, so the corpus, its labeled
pairs, and the two trained scorer variants are built once per session
and shared read-only across test modules.
"""

from __future__ import annotations

import json
from pathlib import Path

import pytest

from ifrl import mock
from ifrl.cli import _bt_triples_from_pairs
from ifrl.curriculum import build_pairs, decompose
from ifrl.scorer import FeatureConfig, TrainConfig, train_bce, train_bt

GOLDEN_PATH = Path(__file__).parent / "golden" / "hard_rules.jsonl"

# small enough to train in well under a second, large enough that hash
# collisions stay negligible for the fixture corpus
SMALL_FEATURES = FeatureConfig(dim=2**16)
SMALL_TRAIN = TrainConfig(learning_rate=0.05, epochs=300)


def load_golden() -> list[dict]:
    with GOLDEN_PATH.open(encoding="utf-8") as fh:
        return [json.loads(line) for line in fh if line.strip()]


@pytest.fixture(scope="session")
def corpus50():
    return mock.make_corpus(num_instructions=50, n=5, seed=0)


@pytest.fixture(scope="session")
def corpus_pairs(corpus50):
    pairs = []
    for inst in corpus50:
        pairs.extend(build_pairs(decompose(inst), mock.mock_responses(inst)))
    return pairs


@pytest.fixture(scope="session")
def bce_model(corpus_pairs):
    return train_bce(corpus_pairs, SMALL_TRAIN, SMALL_FEATURES)


@pytest.fixture(scope="session")
def bt_model(corpus_pairs):
    return train_bt(_bt_triples_from_pairs(corpus_pairs), SMALL_TRAIN, SMALL_FEATURES)


@pytest.fixture(scope="session")
def pref_groups(corpus50):
    return mock.make_preference_groups(corpus50)
