"""Trainable constraint-level satisfaction scorer.

The scorer is a two-logit linear classifier over hashed text features:
unigrams/bigrams of the response and of the constraint text, plus
crossed response-word x constraint-word features. The positive-class
softmax probability estimates how likely the response satisfies the
constraint. Training minimizes binary cross-entropy on self-supervised
curriculum pairs; a Bradley-Terry pairwise objective is kept as a
baseline trainer.
"""

from __future__ import annotations

import json
import re
import struct
import warnings
import zlib
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp
from scipy.special import expit

from .core import Constraint, LabeledPair, SchemaError

PROB_EPS = 1e-12
MODEL_MAGIC = b"IFRM"
MODEL_VERSION = 1

_TOKEN = re.compile(r"\w+")


@dataclass(frozen=True)
class FeatureConfig:
    dim: int = 2**18
    seed: int = 0
    max_ngram: int = 2
    crossed: bool = True

    def __post_init__(self) -> None:
        if self.dim < 2 or self.dim & (self.dim - 1):
            raise SchemaError(f"feature dim must be a power of two >= 2, got {self.dim}")
        if self.max_ngram < 1:
            raise SchemaError("max_ngram must be >= 1")


@dataclass(frozen=True)
class TrainConfig:
    learning_rate: float = 0.05
    epochs: int = 300
    l2: float = 0.0
    seed: int = 0

    def __post_init__(self) -> None:
        if not 0.0 < self.learning_rate <= 1.0:
            raise SchemaError(f"learning_rate must be in (0, 1], got {self.learning_rate}")
        if not 1 <= self.epochs <= 10**6:
            raise SchemaError(f"epochs must be in [1, 10^6], got {self.epochs}")
        if self.l2 < 0:
            raise SchemaError(f"l2 must be non-negative, got {self.l2}")


@dataclass(frozen=True)
class FeatureVector:
    indices: np.ndarray  # strictly increasing hash buckets
    values: np.ndarray  # weight per bucket (L2-normalized counts)
    dim: int


@dataclass
class ScorerModel:
    weights: np.ndarray  # shape (2, dim)
    bias: np.ndarray  # shape (2,)
    config: FeatureConfig = field(default_factory=FeatureConfig)

    def validate(self) -> None:
        if self.weights.shape != (2, self.config.dim) or self.bias.shape != (2,):
            raise SchemaError(
                f"model shape mismatch: weights {self.weights.shape}, bias {self.bias.shape}, "
                f"dim {self.config.dim}"
            )
        if not (np.all(np.isfinite(self.weights)) and np.all(np.isfinite(self.bias))):
            raise SchemaError("model parameters must be finite")


def zero_model(config: FeatureConfig | None = None) -> ScorerModel:
    config = config or FeatureConfig()
    return ScorerModel(np.zeros((2, config.dim)), np.zeros(2), config)


class DivergenceError(RuntimeError):
    """Training produced a non-finite loss (learning rate too large)."""


# ---------------------------------------------------------------------------
# Featurization
# ---------------------------------------------------------------------------


def _tokens(text: str) -> list[str]:
    return _TOKEN.findall(text.lower())


def _bucket(feature: str, config: FeatureConfig) -> int:
    return zlib.crc32(feature.encode("utf-8"), config.seed) & (config.dim - 1)


def constraint_feature_text(constraint: Constraint) -> str:
    return constraint.display_text()


def featurize(response_text: str, constraint: Constraint | str, config: FeatureConfig | None = None) -> FeatureVector:
    """Hash response/constraint n-grams and crossed word pairs into buckets.

    Deterministic under a fixed config; empty inputs yield an empty
    vector. Values are occurrence counts normalized to unit L2 norm.
    """
    config = config or FeatureConfig()
    constraint_text = constraint if isinstance(constraint, str) else constraint_feature_text(constraint)
    r_tokens = _tokens(response_text)
    c_tokens = _tokens(constraint_text)

    counts: dict[int, float] = {}

    def bump(feature: str) -> None:
        idx = _bucket(feature, config)
        counts[idx] = counts.get(idx, 0.0) + 1.0

    for prefix, tokens in (("r", r_tokens), ("c", c_tokens)):
        for n in range(1, config.max_ngram + 1):
            for i in range(len(tokens) - n + 1):
                bump(prefix + ":" + " ".join(tokens[i : i + n]))
    if config.crossed:
        c_unique = sorted(set(c_tokens))
        for rt in set(r_tokens):
            for ct in c_unique:
                bump("x:" + rt + "|" + ct)

    if not counts:
        return FeatureVector(np.empty(0, dtype=np.int64), np.empty(0), config.dim)
    indices = np.array(sorted(counts), dtype=np.int64)
    values = np.array([counts[i] for i in indices])
    values = values / np.linalg.norm(values)
    return FeatureVector(indices=indices, values=values, dim=config.dim)


def design_matrix(rows: list[tuple[str, Constraint | str]], config: FeatureConfig) -> sp.csr_matrix:
    """Stack featurized rows into an (n_rows, dim) sparse matrix."""
    data: list[float] = []
    indices: list[int] = []
    indptr = [0]
    for response_text, constraint in rows:
        fv = featurize(response_text, constraint, config)
        indices.extend(fv.indices.tolist())
        data.extend(fv.values.tolist())
        indptr.append(len(indices))
    return sp.csr_matrix(
        (np.array(data), np.array(indices, dtype=np.int64), np.array(indptr, dtype=np.int64)),
        shape=(len(rows), config.dim),
    )


# ---------------------------------------------------------------------------
# Scoring
# ---------------------------------------------------------------------------


def _margins(model: ScorerModel, matrix: sp.csr_matrix) -> np.ndarray:
    v = model.weights[1] - model.weights[0]
    return matrix @ v + (model.bias[1] - model.bias[0])


def score(model: ScorerModel, response_text: str, constraint: Constraint | str) -> float:
    """Softmax probability of the 'satisfied' logit, shift-stabilized."""
    model.validate()
    fv = featurize(response_text, constraint, model.config)
    logits = model.weights[:, fv.indices] @ fv.values + model.bias
    shifted = logits - logits.max()
    exp = np.exp(shifted)
    return float(exp[1] / exp.sum())


def score_batch(model: ScorerModel, rows: list[tuple[str, Constraint | str]]) -> np.ndarray:
    model.validate()
    matrix = design_matrix(rows, model.config)
    return expit(_margins(model, matrix))


# ---------------------------------------------------------------------------
# Binary cross-entropy objective
# ---------------------------------------------------------------------------


def _pair_rows(pairs: list[LabeledPair]) -> list[tuple[str, Constraint]]:
    return [(p.response_text, p.constraint) for p in pairs]


def bce_loss(model: ScorerModel, pairs: list[LabeledPair]) -> float:
    """Sum over pairs of -[y log f + (1-y) log(1-f)], f clamped away from {0,1}."""
    if not pairs:
        raise SchemaError("bce_loss requires a non-empty pair list")
    matrix = design_matrix(_pair_rows(pairs), model.config)
    probs = np.clip(expit(_margins(model, matrix)), PROB_EPS, 1.0 - PROB_EPS)
    y = np.array([p.label for p in pairs], dtype=np.float64)
    return float(-np.sum(y * np.log(probs) + (1.0 - y) * np.log(1.0 - probs)))


def bce_gradient(model: ScorerModel, pairs: list[LabeledPair]) -> tuple[np.ndarray, np.ndarray]:
    """Analytic gradient of the summed BCE loss w.r.t. weights and bias."""
    matrix = design_matrix(_pair_rows(pairs), model.config)
    y = np.array([p.label for p in pairs], dtype=np.float64)
    g = expit(_margins(model, matrix)) - y  # d(loss)/d(margin) per pair
    gm = matrix.T @ g
    grad_w = np.vstack([-gm, gm])
    grad_b = np.array([-g.sum(), g.sum()])
    return grad_w, grad_b


def train_bce(
    pairs: list[LabeledPair],
    config: TrainConfig | None = None,
    feature_config: FeatureConfig | None = None,
) -> ScorerModel:
    """Full-batch gradient descent on mean BCE; deterministic per seed."""
    if not pairs:
        raise SchemaError("train_bce requires a non-empty pair list")
    labels = {p.label for p in pairs}
    if len(labels) < 2:
        warnings.warn("training pairs contain a single label class", stacklevel=2)
    config = config or TrainConfig()
    feature_config = feature_config or FeatureConfig()
    model = zero_model(feature_config)

    matrix = design_matrix(_pair_rows(pairs), feature_config)
    y = np.array([p.label for p in pairs], dtype=np.float64)
    n = len(pairs)
    v = np.zeros(feature_config.dim)  # logit margin weights (weights[1] - weights[0])
    b = 0.0

    for _ in range(config.epochs):
        z = matrix @ v + b
        p = expit(z)
        g = (p - y) / n
        gv = matrix.T @ g + config.l2 * v
        gb = g.sum() + config.l2 * b
        v -= config.learning_rate * gv
        b -= config.learning_rate * gb
        if not (np.all(np.isfinite(v)) and np.isfinite(b)):
            raise DivergenceError("training diverged: non-finite parameters")

    model.weights[1] = v / 2.0
    model.weights[0] = -v / 2.0
    model.bias[1] = b / 2.0
    model.bias[0] = -b / 2.0
    model.validate()
    return model


# ---------------------------------------------------------------------------
# Bradley-Terry baseline objective
# ---------------------------------------------------------------------------

PreferenceTriple = tuple[str, str, Constraint]


def bt_loss(model: ScorerModel, groups: list[PreferenceTriple]) -> float:
    """Sum of -log sigmoid(margin(preferred) - margin(rejected))."""
    if not groups:
        raise SchemaError("bt_loss requires a non-empty group list")
    m_a = _margins(model, design_matrix([(a, c) for a, _, c in groups], model.config))
    m_b = _margins(model, design_matrix([(b, c) for _, b, c in groups], model.config))
    delta = m_a - m_b
    sigma = np.clip(expit(delta), PROB_EPS, 1.0 - PROB_EPS)
    return float(-np.sum(np.log(sigma)))


def bt_gradient(model: ScorerModel, groups: list[PreferenceTriple]) -> tuple[np.ndarray, np.ndarray]:
    """Analytic gradient of the summed BT loss (bias cancels in the margin gap)."""
    x_a = design_matrix([(a, c) for a, _, c in groups], model.config)
    x_b = design_matrix([(b, c) for _, b, c in groups], model.config)
    delta = _margins(model, x_a) - _margins(model, x_b)
    g = expit(delta) - 1.0  # d(loss)/d(delta)
    gm = (x_a - x_b).T @ g
    grad_w = np.vstack([-gm, gm])
    return grad_w, np.zeros(2)


def train_bt(
    groups: list[PreferenceTriple],
    config: TrainConfig | None = None,
    feature_config: FeatureConfig | None = None,
) -> ScorerModel:
    """Full-batch gradient descent on the mean BT loss; deterministic per seed."""
    if not groups:
        raise SchemaError("train_bt requires a non-empty group list")
    config = config or TrainConfig()
    feature_config = feature_config or FeatureConfig()
    model = zero_model(feature_config)

    x_a = design_matrix([(a, c) for a, _, c in groups], feature_config)
    x_b = design_matrix([(b, c) for _, b, c in groups], feature_config)
    x_diff = (x_a - x_b).tocsr()
    n = len(groups)
    v = np.zeros(feature_config.dim)

    for _ in range(config.epochs):
        delta = x_diff @ v
        g = (expit(delta) - 1.0) / n
        gv = x_diff.T @ g + config.l2 * v
        v -= config.learning_rate * gv
        if not np.all(np.isfinite(v)):
            raise DivergenceError("training diverged: non-finite parameters")

    model.weights[1] = v / 2.0
    model.weights[0] = -v / 2.0
    model.validate()
    return model


# ---------------------------------------------------------------------------
# Serialization: magic "IFRM", version, dim, config JSON, float64 LE params
# ---------------------------------------------------------------------------


def save_model(model: ScorerModel, path) -> None:
    model.validate()
    config_json = json.dumps(
        {
            "dim": model.config.dim,
            "seed": model.config.seed,
            "max_ngram": model.config.max_ngram,
            "crossed": model.config.crossed,
        }
    ).encode("utf-8")
    with open(path, "wb") as fh:
        fh.write(MODEL_MAGIC)
        fh.write(struct.pack("<II", MODEL_VERSION, model.config.dim))
        fh.write(struct.pack("<I", len(config_json)))
        fh.write(config_json)
        fh.write(model.weights.astype("<f8").tobytes(order="C"))
        fh.write(model.bias.astype("<f8").tobytes())


def load_model(path) -> ScorerModel:
    with open(path, "rb") as fh:
        magic = fh.read(4)
        if magic != MODEL_MAGIC:
            raise SchemaError(f"{path}: not a scorer model file (bad magic {magic!r})")
        version, dim = struct.unpack("<II", fh.read(8))
        if version != MODEL_VERSION:
            raise SchemaError(f"{path}: unsupported model version {version}")
        (config_len,) = struct.unpack("<I", fh.read(4))
        raw = json.loads(fh.read(config_len).decode("utf-8"))
        config = FeatureConfig(
            dim=raw["dim"], seed=raw["seed"], max_ngram=raw["max_ngram"], crossed=raw["crossed"]
        )
        if config.dim != dim:
            raise SchemaError(f"{path}: header dim {dim} disagrees with config dim {config.dim}")
        weights = np.frombuffer(fh.read(2 * dim * 8), dtype="<f8").reshape(2, dim).copy()
        bias = np.frombuffer(fh.read(16), dtype="<f8").copy()
    model = ScorerModel(weights=weights, bias=bias, config=config)
    model.validate()
    return model


# ---------------------------------------------------------------------------
# Remote scorer client
# ---------------------------------------------------------------------------


class RemoteScoreError(RuntimeError):
    def __init__(self, message: str, retryable: bool):
        super().__init__(message)
        self.retryable = retryable


def remote_score(endpoint: str, batch: list[tuple[str, Constraint]], timeout: float = 30.0) -> list[float]:
    """Score a batch against a remote /v1/score endpoint, one constraint per item.

    Order-preserving; probabilities are clamped to [0, 1]. Network
    failures raise a retryable error, malformed replies a non-retryable
    one. An empty batch returns immediately without any network call.
    """
    if not batch:
        return []
    import httpx

    from .core import constraint_to_json

    payload = {
        "items": [
            {"response": response_text, "constraints": [constraint_to_json(c)]}
            for response_text, c in batch
        ],
        "mode": "model_only",
    }
    try:
        reply = httpx.post(endpoint, json=payload, timeout=timeout)
    except httpx.HTTPError as exc:
        raise RemoteScoreError(f"request to {endpoint} failed: {exc}", retryable=True) from exc
    if reply.status_code >= 500:
        raise RemoteScoreError(f"{endpoint} returned {reply.status_code}", retryable=True)
    if reply.status_code != 200:
        raise RemoteScoreError(
            f"{endpoint} returned {reply.status_code}: {reply.text[:200]}", retryable=False
        )
    try:
        results = reply.json()["results"]
        probs = [float(r["per_constraint"][0]["reward"]) for r in results]
    except (KeyError, IndexError, TypeError, ValueError) as exc:
        raise RemoteScoreError(f"malformed reply from {endpoint}: {exc}", retryable=False) from exc
    if len(probs) != len(batch):
        raise RemoteScoreError(
            f"batch-size mismatch: sent {len(batch)} items, got {len(probs)} results",
            retryable=False,
        )
    return [min(1.0, max(0.0, p)) for p in probs]
