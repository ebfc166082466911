"""Scikit-learn style front door for the constraint scorer.

ConstraintScorer wraps the functional trainer behind the familiar
fit/predict_proba surface (get_params/set_params come from
BaseEstimator), so the scorer composes with sklearn tooling such as
cross-validation or grid search over the training hyperparameters.
"""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.exceptions import NotFittedError

from .core import Constraint, LabeledPair, SchemaError
from .scorer import (
    FeatureConfig,
    ScorerModel,
    TrainConfig,
    score,
    train_bce,
    train_bt,
)


def _as_pair_list(X, y) -> list[LabeledPair]:
    if y is None:
        pairs = list(X)
        if not all(isinstance(p, LabeledPair) for p in pairs):
            raise SchemaError("without y, X must be a list of LabeledPair records")
        return pairs
    rows = list(X)
    labels = list(y)
    if len(rows) != len(labels):
        raise SchemaError(f"X and y lengths differ: {len(rows)} vs {len(labels)}")
    pairs = []
    for (response_text, constraint), label in zip(rows, labels):
        if label not in (0, 1):
            raise SchemaError(f"labels must be 0 or 1, got {label!r}")
        pairs.append(LabeledPair(response_text, _as_constraint(constraint), int(label)))
    return pairs


def _as_constraint(constraint) -> Constraint:
    if isinstance(constraint, Constraint):
        return constraint
    if isinstance(constraint, str):
        from .core import ConstraintKind

        return Constraint(id="adhoc", kind=ConstraintKind.SOFT, text=constraint)
    raise SchemaError(f"expected a Constraint or constraint text, got {type(constraint).__name__}")


class ConstraintScorer(BaseEstimator):
    """Binary satisfaction scorer for (response, constraint) inputs.

    Parameters mirror the functional trainer: hashed-feature settings
    plus full-batch gradient descent hyperparameters. ``loss`` selects
    the cross-entropy trainer ("bce", the default) or the pairwise
    Bradley-Terry baseline ("bt"); for "bt", fit expects preference
    triples (preferred_text, rejected_text, constraint) and no y.
    """

    def __init__(
        self,
        dim: int = 2**18,
        seed: int = 0,
        max_ngram: int = 2,
        crossed: bool = True,
        learning_rate: float = 0.05,
        epochs: int = 300,
        l2: float = 0.0,
        loss: str = "bce",
    ):
        self.dim = dim
        self.seed = seed
        self.max_ngram = max_ngram
        self.crossed = crossed
        self.learning_rate = learning_rate
        self.epochs = epochs
        self.l2 = l2
        self.loss = loss

    def _configs(self) -> tuple[TrainConfig, FeatureConfig]:
        train = TrainConfig(
            learning_rate=self.learning_rate, epochs=self.epochs, l2=self.l2, seed=self.seed
        )
        features = FeatureConfig(
            dim=self.dim, seed=self.seed, max_ngram=self.max_ngram, crossed=self.crossed
        )
        return train, features

    def fit(self, X, y=None):
        if self.loss not in ("bce", "bt"):
            raise SchemaError(f"loss must be 'bce' or 'bt', got {self.loss!r}")
        train, features = self._configs()
        if self.loss == "bce":
            self.model_ = train_bce(_as_pair_list(X, y), train, features)
        else:
            triples = [(a, b, _as_constraint(c)) for a, b, c in X]
            self.model_ = train_bt(triples, train, features)
        return self

    def _check_fitted(self) -> ScorerModel:
        model = getattr(self, "model_", None)
        if model is None:
            raise NotFittedError("ConstraintScorer must be fitted before scoring")
        return model

    def predict_proba(self, X) -> np.ndarray:
        """Column-stacked [P(not satisfied), P(satisfied)] per row of X."""
        model = self._check_fitted()
        p1 = np.array([score(model, text, _as_constraint(c)) for text, c in X])
        return np.column_stack([1.0 - p1, p1])

    def predict(self, X, threshold: float = 0.5) -> np.ndarray:
        return (self.predict_proba(X)[:, 1] >= threshold).astype(int)
