#!/usr/bin/env python3
"""Regenerate the bundled sample corpus under src/ifrl/data/.

The corpus is fully deterministic (seed 0), so rerunning this script
must produce byte-identical files.
"""

from pathlib import Path

from ifrl import core, mock
from ifrl.metrics import save_groups

DATA_DIR = Path(__file__).resolve().parent.parent / "src" / "ifrl" / "data"


def main() -> None:
    DATA_DIR.mkdir(parents=True, exist_ok=True)
    corpus = mock.make_corpus(num_instructions=50, n=5, seed=0)
    core.save_instructions(corpus, DATA_DIR / "sample_instructions.jsonl")

    responses = []
    for inst in corpus:
        responses.extend(mock.mock_responses(inst).values())
    core.save_responses(responses, DATA_DIR / "sample_responses.jsonl")

    save_groups(mock.make_preference_groups(corpus), DATA_DIR / "sample_groups.jsonl")
    print(f"wrote sample data to {DATA_DIR}")


if __name__ == "__main__":
    main()
