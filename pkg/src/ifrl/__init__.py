"""Reward backend for instruction-following reinforcement learning."""

from .core import (
    Constraint,
    ConstraintKind,
    ConstraintReward,
    CurriculumLevel,
    DatasetError,
    HardRule,
    Instruction,
    LabeledPair,
    Response,
    RewardBreakdown,
    RolloutGroup,
    SchemaError,
    TaskKind,
    load_instructions,
    load_pairs,
    save_pairs,
)
from .curriculum import CurriculumStats, build_pairs, dataset_stats, decompose
from .estimator import ConstraintScorer
from .metrics import (
    AgreementReport,
    PreferenceGroup,
    eval_reward_model,
    kendall_tau,
    position_consistency,
    satisfaction_rates,
)
from .rewards import (
    AdvantageConfig,
    RewardMode,
    constraint_reward,
    group_advantages,
    reasoning_reward,
    sample_reward,
)
from .scorer import (
    FeatureConfig,
    ScorerModel,
    TrainConfig,
    bce_loss,
    bt_loss,
    featurize,
    load_model,
    remote_score,
    save_model,
    score,
    train_bce,
    train_bt,
)
from .verifier import VerificationResult, catalog, verify, verify_all

__version__ = "0.1.0"

__all__ = [
    "AdvantageConfig",
    "AgreementReport",
    "Constraint",
    "ConstraintKind",
    "ConstraintReward",
    "ConstraintScorer",
    "CurriculumLevel",
    "CurriculumStats",
    "DatasetError",
    "FeatureConfig",
    "HardRule",
    "Instruction",
    "LabeledPair",
    "PreferenceGroup",
    "Response",
    "RewardBreakdown",
    "RewardMode",
    "RolloutGroup",
    "SchemaError",
    "ScorerModel",
    "TaskKind",
    "TrainConfig",
    "VerificationResult",
    "bce_loss",
    "bt_loss",
    "build_pairs",
    "catalog",
    "constraint_reward",
    "dataset_stats",
    "decompose",
    "eval_reward_model",
    "featurize",
    "group_advantages",
    "kendall_tau",
    "load_instructions",
    "load_model",
    "load_pairs",
    "position_consistency",
    "reasoning_reward",
    "remote_score",
    "sample_reward",
    "satisfaction_rates",
    "save_model",
    "save_pairs",
    "score",
    "train_bce",
    "train_bt",
    "verify",
    "verify_all",
]
