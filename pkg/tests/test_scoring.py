"""Fold-harness and selection tests."""

from fractions import Fraction

import pytest

from pdeeplearn.domains import get_domain
from pdeeplearn.encoding import build_layout
from pdeeplearn.lstm import TrainConfig
from pdeeplearn.pruning import SampledModel, SampledModelSet, sample_models
from pdeeplearn.scoring import ModelScore, fold_split, ranked, score_models, train_folds
from pdeeplearn.tracegen import GenerationSpec, PlannerConfig, generate_traces
from pdeeplearn import candidates as cand


def test_fold_split_is_a_disjoint_cover():
    folds = fold_split(23, 5)
    seen = sorted(i for fold in folds for i in fold)
    assert seen == list(range(23))
    assert len(folds) == 5


def test_fold_split_requires_enough_traces():
    with pytest.raises(ValueError):
        fold_split(3, 5)


def _score(mean_num, mean_den, preds, model_id):
    # build a ModelScore with two folds hitting the given totals
    return ModelScore(model_id, (mean_num, mean_num), (mean_den, mean_den), preds)


def test_selection_tie_breaks_by_size_then_id():
    high = _score(9, 10, 8, "m0002")
    tied_small = _score(9, 10, 5, "m0003")
    low = _score(5, 10, 1, "m0001")
    order = ranked([high, tied_small, low])
    assert [s.model_id for s in order] == ["m0003", "m0002", "m0001"]
    same_size_a = _score(9, 10, 5, "m0009")
    order2 = ranked([tied_small, same_size_a])
    assert [s.model_id for s in order2] == ["m0003", "m0009"]


def test_mean_accuracy_is_exact_fraction():
    score = ModelScore("m0001", (3, 4), (6, 8), 7)
    assert score.fold_accuracies == (Fraction(1, 2), Fraction(1, 2))
    assert score.mean_accuracy == Fraction(1, 2)
    uneven = ModelScore("m0002", (1, 4), (2, 4), 7)
    assert uneven.mean_accuracy == Fraction(3, 4)


@pytest.fixture(scope="module")
def kiln_setup():
    info = get_domain("kiln")
    schema, model, unitary = info.load()
    spec = GenerationSpec(problem_count=20, object_count_ranges=info.default_ranges,
                          rng_seed=8)
    traces = generate_traces(spec, model, PlannerConfig(rng_seed=8), info.sampler)
    layout = build_layout(schema)
    cfg = TrainConfig(hidden_units=12, dropout_rate=0.0, epochs=3, folds=5, rng_seed=8)
    folds = train_folds(traces, layout, cfg)
    return schema, model, unitary, traces, layout, folds


def test_train_folds_shapes_and_determinism(kiln_setup):
    schema, model, unitary, traces, layout, folds = kiln_setup
    assert len(folds) == 5
    covered = sorted(i for f in folds for i in f.validation_indices)
    assert covered == list(range(len(traces)))
    for fold in folds:
        assert set(fold.train_indices).isdisjoint(fold.validation_indices)
        assert len(fold.loss_history) == 3


def test_singleton_model_set_selects_it(kiln_setup):
    schema, model, unitary, traces, layout, folds = kiln_setup
    only = SampledModelSet((SampledModel("m0000", model, (0, 0, 0), True, True),))
    scores, selected = score_models(folds, traces, only, layout)
    assert selected == "m0000"
    assert len(scores) == 1
    for c, t in zip(scores[0].fold_correct, scores[0].fold_total):
        assert 0 <= c <= t


def test_score_models_scores_every_model(kiln_setup):
    schema, model, unitary, traces, layout, folds = kiln_setup
    space = cand.build_space(schema)
    sampled = sample_models(space, unitary, PlannerConfig(), budget=5, rng_seed=2,
                            include_reference=True, reference=model)
    scores, selected = score_models(folds, traces, sampled, layout)
    assert len(scores) == len(sampled)
    assert selected in {s.model_id for s in scores}
    best = ranked(scores)[0]
    assert best.model_id == selected
