"""Command-line pipeline: curriculum building, pair construction, scorer
training, reward scoring, advantage normalization, agreement evaluation,
rule verification, and the HTTP service.

Every subcommand is a thin adapter over the library modules; failures
exit with 1 (validation), 2 (I/O), or 3 (internal) and a single-line
``error: <kind>: <message>`` on stderr.
"""

from __future__ import annotations

import json
import sys
from pathlib import Path

import click

from . import core, curriculum, metrics, verifier
from .core import DatasetError, DatasetIOError, SchemaError
from .rewards import AdvantageConfig, RewardMode, group_advantages, reasoning_reward, sample_reward
from .scorer import FeatureConfig, TrainConfig, load_model, save_model, train_bce, train_bt
from .service import ServiceConfig, run_service
from .verifier import UnsupportedRuleError

EXIT_OK = 0
EXIT_VALIDATION = 1
EXIT_IO = 2
EXIT_INTERNAL = 3


@click.group()
def cli() -> None:
    """Reward backend for instruction-following RL."""


def _mode_option(fn):
    return click.option(
        "--mode",
        type=click.Choice([m.value for m in RewardMode]),
        default=RewardMode.FULL.value,
        show_default=True,
        envvar="IFRL_MODE",
    )(fn)


@cli.command("verify")
@click.option("--rule", "rule_json", required=True, help="Hard rule as JSON.")
@click.option("--text", default=None, help="Response text to check.")
@click.option("--file", "file_path", default=None, help="Read the response text from a file.")
def verify_cmd(rule_json: str, text: str | None, file_path: str | None) -> None:
    """Check one hard rule against a response text."""
    if (text is None) == (file_path is None):
        raise click.UsageError("provide exactly one of --text or --file")
    if file_path is not None:
        try:
            text = Path(file_path).read_text(encoding="utf-8")
        except OSError as exc:
            raise DatasetIOError(f"{file_path}: cannot read: {exc.strerror or exc}") from exc
    try:
        raw = json.loads(rule_json)
    except json.JSONDecodeError as exc:
        raise SchemaError(f"--rule is not valid JSON: {exc.msg}") from exc
    rule = core.HardRule(rule_type=raw.get("rule_type", ""), params=raw.get("params", {}))
    verifier.validate_rule(rule)
    result = verifier.verify(text, rule)
    click.echo(f"satisfied={'true' if result.satisfied else 'false'} detail={result.detail!r}")


@cli.command("build-curriculum")
@click.option("--in", "in_path", required=True, help="Instructions JSONL.")
@click.option("--out", "out_path", required=True, help="Curriculum levels JSONL.")
@click.option("--stats", "stats_path", default=None, help="Per-level statistics JSON.")
def build_curriculum_cmd(in_path: str, out_path: str, stats_path: str | None) -> None:
    """Decompose multi-constraint instructions into incremental levels."""
    instructions = core.load_instructions(in_path)
    levels = []
    for inst in instructions:
        if inst.task_kind is not core.TaskKind.INSTRUCTION_FOLLOWING or not inst.constraints:
            continue
        levels.extend(curriculum.decompose(inst))
    core.save_levels(levels, out_path)
    if stats_path is not None:
        stats = curriculum.dataset_stats(levels)
        payload = {
            "per_level": [
                {
                    "k": row.k,
                    "num_instructions": row.num_instructions,
                    "num_constraints": row.num_constraints,
                    "num_soft": row.num_soft,
                    "num_hard": row.num_hard,
                }
                for row in stats.per_level
            ]
        }
        Path(stats_path).write_text(json.dumps(payload, indent=2) + "\n", encoding="utf-8")
    click.echo(f"wrote {len(levels)} levels from {len(instructions)} instructions")


@cli.command("make-pairs")
@click.option("--levels", "levels_path", required=True, help="Curriculum levels JSONL.")
@click.option("--responses", "responses_path", required=True, help="Responses JSONL (levels 0..n).")
@click.option("--out", "out_path", required=True, help="Labeled pairs JSONL.")
@click.option("--denoise-hard", is_flag=True, help="Drop hard pairs contradicted by the rule verifier.")
def make_pairs_cmd(levels_path: str, responses_path: str, out_path: str, denoise_hard: bool) -> None:
    """Build self-supervised scorer-training pairs from curriculum responses."""
    levels = core.load_levels(levels_path)
    responses = core.load_responses(responses_path)
    by_instruction: dict[str, list] = {}
    for level in levels:
        by_instruction.setdefault(level.instruction_id, []).append(level)
    response_map: dict[str, dict[int, core.Response]] = {}
    for response in responses:
        response_map.setdefault(response.instruction_id, {})[response.level_k] = response
    pairs = []
    for instruction_id, inst_levels in by_instruction.items():
        pairs.extend(
            curriculum.build_pairs(
                inst_levels, response_map.get(instruction_id, {}), denoise_hard=denoise_hard
            )
        )
    core.save_pairs(pairs, out_path)
    click.echo(f"wrote {len(pairs)} pairs")


def _bt_triples_from_pairs(pairs):
    """Pair positives with negatives that share a constraint, in file order."""
    by_key: dict[str, tuple[list, list]] = {}
    for pair in pairs:
        key = json.dumps(core.constraint_to_json(pair.constraint), sort_keys=True)
        pos, neg = by_key.setdefault(key, ([], []))
        (pos if pair.label == 1 else neg).append(pair)
    triples = []
    for pos, neg in by_key.values():
        for p, n in zip(pos, neg):
            triples.append((p.response_text, n.response_text, p.constraint))
    return triples


@cli.command("train-scorer")
@click.option("--pairs", "pairs_path", required=True, help="Labeled pairs JSONL.")
@click.option("--out", "out_path", required=True, help="Output model file (.ifrm).")
@click.option("--loss", type=click.Choice(["bce", "bt"]), default="bce", show_default=True)
@click.option("--lr", type=float, default=0.05, show_default=True)
@click.option("--epochs", type=int, default=300, show_default=True)
@click.option("--l2", type=float, default=0.0, show_default=True)
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--dim", type=int, default=2**18, show_default=True)
def train_scorer_cmd(pairs_path, out_path, loss, lr, epochs, l2, seed, dim) -> None:
    """Train the soft-constraint scorer on labeled pairs."""
    pairs = core.load_pairs(pairs_path)
    config = TrainConfig(learning_rate=lr, epochs=epochs, l2=l2, seed=seed)
    features = FeatureConfig(dim=dim, seed=seed)
    if loss == "bce":
        model = train_bce(pairs, config, features)
    else:
        triples = _bt_triples_from_pairs(pairs)
        if not triples:
            raise SchemaError("no positive/negative pairs share a constraint; cannot form BT data")
        model = train_bt(triples, config, features)
    save_model(model, out_path)
    click.echo(f"wrote model to {out_path}")


@cli.command("score")
@click.option("--model", "model_path", default=None, envvar="IFRL_MODEL")
@_mode_option
@click.option("--in", "in_path", required=True, help="Rollouts JSONL.")
@click.option("--out", "out_path", required=True, help="Rewards JSONL.")
@click.option("--threshold", type=float, default=0.5, show_default=True, help="binary_soft cutoff.")
def score_cmd(model_path, mode, in_path, out_path, threshold) -> None:
    """Score rollouts: constraint items get breakdowns, reasoning items 0/1."""
    mode = RewardMode(mode)
    model = load_model(model_path) if model_path else None
    records = core._load_jsonl(in_path, lambda d: d, "rollout")
    out_lines = []
    for i, record in enumerate(records):
        response = record.get("response")
        if not isinstance(response, str):
            raise SchemaError(f"rollout {i}: field 'response' must be a string")
        if "gold_answer" in record:
            out_lines.append({"reward": reasoning_reward(response, str(record["gold_answer"]))})
            continue
        constraints = [core.constraint_from_json(c) for c in record.get("constraints", [])]
        for c in constraints:
            core.validate_constraint(c)
        breakdown = sample_reward(response, constraints, model, mode, threshold)
        out_lines.append(
            {
                "reward": breakdown.aggregate,
                "per_constraint": [
                    {"id": r.constraint_id, "reward": r.reward, "source": r.source}
                    for r in breakdown.per_constraint
                ],
            }
        )
    core._save_jsonl(out_lines, lambda d: d, out_path)
    click.echo(f"wrote {len(out_lines)} rewards")


@cli.command("advantages")
@click.option("--group-size", type=int, default=5, show_default=True)
@click.option("--eps", type=float, default=1e-6, show_default=True)
@click.option("--in", "in_path", required=True, help="Rewards JSONL (objects with 'reward' or bare numbers).")
@click.option("--out", "out_path", required=True, help="Advantages JSONL, aligned with input lines.")
def advantages_cmd(group_size, eps, in_path, out_path) -> None:
    """Normalize sequential reward groups into group-relative advantages."""
    records = core._load_jsonl(in_path, lambda d: d, "reward record")
    rewards = []
    for i, record in enumerate(records):
        value = record.get("reward") if isinstance(record, dict) else record
        if not isinstance(value, (int, float)) or isinstance(value, bool):
            raise SchemaError(f"reward record {i}: expected a number, got {value!r}")
        rewards.append(float(value))
    if len(rewards) % group_size:
        raise SchemaError(
            f"{len(rewards)} rewards do not divide into groups of {group_size}"
        )
    config = AdvantageConfig(group_size=group_size, eps=eps)
    out_lines = []
    for start in range(0, len(rewards), group_size):
        group = rewards[start : start + group_size]
        for reward, advantage in zip(group, group_advantages(group, config)):
            out_lines.append({"reward": reward, "advantage": advantage})
    core._save_jsonl(out_lines, lambda d: d, out_path)
    click.echo(f"wrote {len(out_lines)} advantages in groups of {group_size}")


@cli.command("eval-rm")
@click.option("--groups", "groups_path", required=True, help="Preference groups JSONL.")
@click.option("--model", "model_path", required=True, envvar="IFRL_MODEL")
@click.option("--report", "report_path", required=True, help="Agreement report JSON.")
@_mode_option
def eval_rm_cmd(groups_path, model_path, report_path, mode) -> None:
    """Measure rank agreement between the reward model and human labels."""
    groups = metrics.load_groups(groups_path)
    model = load_model(model_path)
    report = metrics.eval_reward_model(groups, model, RewardMode(mode))
    payload = {
        "kendall_tau": report.kendall_tau,
        "position_consistency": report.position_consistency,
        "time_per_group": report.time_per_group,
        "num_groups": report.num_groups,
    }
    Path(report_path).write_text(json.dumps(payload, indent=2) + "\n", encoding="utf-8")
    click.echo(
        f"tau={report.kendall_tau:.4f} pc={report.position_consistency:.4f} "
        f"time_per_group={report.time_per_group * 1000:.2f}ms over {report.num_groups} groups"
    )


@cli.command("serve")
@click.option("--bind", default="127.0.0.1:8080", show_default=True, envvar="IFRL_BIND")
@click.option("--model", "model_path", default=None, envvar="IFRL_MODEL")
@_mode_option
@click.option("--max-batch", type=int, default=256, show_default=True)
def serve_cmd(bind, model_path, mode, max_batch) -> None:
    """Serve /v1/score, /v1/advantages, and /healthz over HTTP."""
    config = ServiceConfig(
        bind_address=bind, model_path=model_path, mode=RewardMode(mode), max_batch=max_batch
    )
    run_service(config)


def run(argv: list[str]) -> int:
    """Dispatch argv to the CLI; returns the process exit code."""
    try:
        cli.main(args=argv, prog_name="ifrl", standalone_mode=False)
        return EXIT_OK
    except click.exceptions.Exit as exc:  # --help and friends
        return int(exc.exit_code)
    except click.UsageError as exc:
        click.echo(f"error: usage: {exc.format_message()}", err=True)
        if exc.ctx is not None:
            click.echo(exc.ctx.get_usage(), err=True)
        return EXIT_VALIDATION
    except DatasetIOError as exc:
        click.echo(f"error: io: {exc}", err=True)
        return EXIT_IO
    except OSError as exc:
        click.echo(f"error: io: {exc}", err=True)
        return EXIT_IO
    except (SchemaError, DatasetError, UnsupportedRuleError) as exc:
        click.echo(f"error: validation: {exc}", err=True)
        return EXIT_VALIDATION
    except Exception as exc:
        click.echo(f"error: internal: {exc}", err=True)
        return EXIT_INTERNAL


def main() -> None:
    sys.exit(run(sys.argv[1:]))


if __name__ == "__main__":
    main()
