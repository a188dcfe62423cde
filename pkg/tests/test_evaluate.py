"""Reconstruction-error tests: exact rational arithmetic, symmetry, the
single-perturbation delta, and report rendering."""

import json
from fractions import Fraction

import pytest

from pdeeplearn.core import ActionModel, make_entry
from pdeeplearn.domains import get_domain
from pdeeplearn.encoding import build_layout
from pdeeplearn.evaluate import (
    EvaluationReport,
    percent,
    reconstruction_error,
    render_report,
)
from pdeeplearn.pruning import PruneStats
from pdeeplearn.scoring import ModelScore
from pdeeplearn.util import stream_rng


@pytest.fixture(scope="module")
def gripper():
    schema, model, _ = get_domain("gripper").load()
    return schema, model, build_layout(schema)


def test_identical_models_have_zero_error(gripper):
    _, model, layout = gripper
    error, diffs = reconstruction_error(model, model, layout)
    assert error == 0
    assert all(d.total_diff == 0 for d in diffs)


def test_hand_computed_single_action_example():
    # One action with three relevant refs; the learned pre list misses one
    # reference predicate: E = (1 + 0 + 0) / 3 / 1 = 1/3.
    from pdeeplearn.core import ActionSignature, DomainSchema, PredicateSchema
    from pdeeplearn.core import LiftedPredicateRef as Ref

    schema = DomainSchema(
        "mini", frozenset(["t"]),
        (PredicateSchema("p0", ("t",)), PredicateSchema("p1", ("t",)),
         PredicateSchema("p2", ("t",))),
        (ActionSignature("act", ("t",)),))
    layout = build_layout(schema)
    assert layout.relevant_count("act") == 3
    reference = ActionModel(schema, (make_entry(
        "act", pre=[Ref("p0", (0,)), Ref("p1", (0,))], add=[Ref("p2", (0,))]),))
    learned = ActionModel(schema, (make_entry(
        "act", pre=[Ref("p0", (0,))], add=[Ref("p2", (0,))]),))
    error, diffs = reconstruction_error(learned, reference, layout)
    assert error == Fraction(1, 3)
    assert diffs[0].pre_diff == 1 and diffs[0].add_diff == 0 and diffs[0].del_diff == 0


def _random_model(schema, layout, rng):
    entries = []
    for action in layout.actions:
        refs = layout.block(action)
        pre, add, dele = [], [], []
        for ref in refs:
            state = int(rng.integers(5))
            if state == 1:
                dele.append(ref)
            elif state == 2:
                add.append(ref)
            elif state == 3:
                pre.append(ref)
            elif state == 4:
                pre.append(ref)
                dele.append(ref)
        entries.append(make_entry(action, pre, add, dele))
    return ActionModel(schema, tuple(entries))


def test_symmetry_and_perturbation_delta_randomized(gripper):
    schema, _, layout = gripper
    rng = stream_rng(29, "eq2")
    n = len(layout.actions)
    for _ in range(100):
        a = _random_model(schema, layout, rng)
        b = _random_model(schema, layout, rng)
        e_ab, _ = reconstruction_error(a, b, layout)
        e_ba, _ = reconstruction_error(b, a, layout)
        assert e_ab == e_ba
        assert e_ab >= 0
        assert (e_ab == 0) == all(
            a.entry(x) == b.entry(x) for x in layout.actions)

        # flipping one predicate in one list changes E by 1/(n * relCons)
        action = layout.actions[int(rng.integers(n))]
        refs = layout.block(action)
        entry = a.entry(action)
        candidates = [r for r in refs if r not in entry.add and r not in entry.delete]
        if not candidates:
            continue
        ref = candidates[int(rng.integers(len(candidates)))]
        if ref in entry.pre:
            new_pre = entry.pre - {ref}
        else:
            new_pre = entry.pre | {ref}
        perturbed = a.replace_entry(make_entry(action, new_pre, entry.add, entry.delete))
        e_pert, _ = reconstruction_error(perturbed, a, layout)
        assert e_pert == Fraction(1, n * layout.relevant_count(action))
        e_vs_b, _ = reconstruction_error(perturbed, b, layout)
        assert abs(e_vs_b - e_ab) == Fraction(1, n * layout.relevant_count(action))


def test_mismatched_schemas_error(gripper):
    _, model, layout = gripper
    kiln_schema, kiln_model, _ = get_domain("kiln").load()
    with pytest.raises(ValueError):
        reconstruction_error(model, kiln_model, layout)


def test_zero_relevance_action_contributes_zero():
    from pdeeplearn.core import ActionSignature, DomainSchema

    schema = DomainSchema("empty", frozenset(["t"]), (),
                          (ActionSignature("a", ("t",)), ActionSignature("b", ())))
    layout = build_layout(schema)
    model = ActionModel(schema, (make_entry("a"), make_entry("b")))
    error, diffs = reconstruction_error(model, model, layout)
    assert error == 0


def _report(gripper, error=Fraction(0)):
    schema, model, layout = gripper
    scores = (ModelScore("m0000", (19, 18), (20, 19), model.total_predicates),
              ModelScore("m0001", (10, 9), (20, 19), 4))
    stats = PruneStats(31250, {"drop": 625, "move": 25, "pick": 625},
                       {"drop": 500, "move": 21, "pick": 500})
    _, diffs = reconstruction_error(model, model, layout)
    return EvaluationReport(
        domain="gripper", schedule=(10, 20), frequent_pairs=(("pick", "move"),),
        prune_stats=stats, sampled_count=2, space_size_initial=9765625,
        space_size_final=5250000, scores=scores, selected_id="m0000",
        selected_is_reference_identical=True, error=error, diffs=diffs,
        config_echo={"seed": "42"})


def test_text_report_renders_table_columns(gripper):
    text = render_report(_report(gripper), "text")
    assert "initial" in text and "final" in text and "reduction" in text
    assert "E = 0.00" in text
    assert "97.94" in text  # published context footer on gripper
    assert "m0000" in text


def test_error_percent_rendering(gripper):
    assert percent(0.0) == "0.00"
    assert percent(100.0) == "100.00"
    report = _report(gripper, error=Fraction(1, 3))
    text = render_report(report, "text")
    assert "E = 33.33" in text


def test_json_report_is_schema_versioned_and_parses(gripper):
    payload = json.loads(render_report(_report(gripper), "json"))
    assert payload["schema_version"] == 1
    assert payload["selected"] == "m0000"
    assert payload["reconstruction_error"]["fraction"] == "0"
    assert payload["pruning"]["percent_reduction"] == "19.92"
    assert payload["scores"][0]["mean_accuracy"]


def test_unknown_format_rejected(gripper):
    with pytest.raises(ValueError):
        render_report(_report(gripper), "yaml")
