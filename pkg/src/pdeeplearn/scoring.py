"""Fold harness and model selection.

Each fold trains one network on the observed encodings of its training
split; every sampled model is then scored by re-encoding the held-out
traces with that model's own lists and measuring argmax accuracy per real
target step. The speculated ideal model is the accuracy argmax, with ties
broken by fewest total predicates and then by model id.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

from .core import PlanTrace
from .encoding import EncodingLayout, encode_corpus, max_action_count
from .lstm import LstmParameters, TrainConfig, accuracy, train
from .pruning import SampledModelSet


def fold_split(count: int, folds: int) -> list[list[int]]:
    """Deterministic disjoint cover: trace i goes to fold i mod folds."""
    if count < folds:
        raise ValueError(f"cannot split {count} traces into {folds} folds")
    return [list(range(k, count, folds)) for k in range(folds)]


@dataclass(frozen=True)
class TrainedFold:
    fold_index: int
    params: LstmParameters
    train_indices: tuple[int, ...]
    validation_indices: tuple[int, ...]
    loss_history: tuple[float, ...]


def train_folds(
    traces: Sequence[PlanTrace], layout: EncodingLayout, cfg: TrainConfig
) -> list[TrainedFold]:
    """One trained network per fold, all sharing the corpus padding."""
    pad_len = max_action_count(traces)
    folds = fold_split(len(traces), cfg.folds)
    out = []
    for k, validation in enumerate(folds):
        held_out = set(validation)
        train_idx = [i for i in range(len(traces)) if i not in held_out]
        dataset = encode_corpus([traces[i] for i in train_idx], layout, pad_len=pad_len)
        params, history = train(dataset, cfg, seed_key=("fold", k))
        out.append(TrainedFold(k, params, tuple(train_idx), tuple(validation),
                               tuple(history)))
    return out


@dataclass(frozen=True)
class ModelScore:
    model_id: str
    fold_correct: tuple[int, ...]
    fold_total: tuple[int, ...]
    total_predicates: int

    @property
    def fold_accuracies(self) -> tuple[Fraction, ...]:
        return tuple(Fraction(c, t) for c, t in zip(self.fold_correct, self.fold_total))

    @property
    def mean_accuracy(self) -> Fraction:
        accs = self.fold_accuracies
        return sum(accs, Fraction(0)) / len(accs)


def score_models(
    folds: Sequence[TrainedFold],
    traces: Sequence[PlanTrace],
    sampled: SampledModelSet,
    layout: EncodingLayout,
) -> tuple[list[ModelScore], str]:
    """Validation accuracy of every sampled model plus the selected id."""
    pad_len = max_action_count(traces)
    scores = []
    for candidate in sampled.models:
        correct, total = [], []
        for fold in folds:
            val_traces = [traces[i] for i in fold.validation_indices]
            dataset = encode_corpus(val_traces, layout, model=candidate.model,
                                    pad_len=pad_len)
            c, t = accuracy(fold.params, dataset)
            if t == 0:
                raise ValueError(f"fold {fold.fold_index} has no target steps")
            correct.append(c)
            total.append(t)
        scores.append(ModelScore(
            candidate.model_id, tuple(correct), tuple(total),
            candidate.model.total_predicates))
    selected = min(
        scores, key=lambda s: (-s.mean_accuracy, s.total_predicates, s.model_id)
    ).model_id
    return scores, selected


def ranked(scores: Sequence[ModelScore]) -> list[ModelScore]:
    return sorted(scores, key=lambda s: (-s.mean_accuracy, s.total_predicates, s.model_id))


def scores_json(scores: Sequence[ModelScore], selected: str) -> str:
    payload = {
        "schema_version": 1,
        "selected": selected,
        "models": [
            {
                "id": s.model_id,
                "fold_correct": list(s.fold_correct),
                "fold_total": list(s.fold_total),
                "fold_accuracy": [str(a) for a in s.fold_accuracies],
                "mean_accuracy": str(s.mean_accuracy),
                "total_predicates": s.total_predicates,
            }
            for s in ranked(scores)
        ],
    }
    return json.dumps(payload, indent=2, sort_keys=True) + "\n"
