"""Acceptance suite: one test per criterion, each printing a PASS/FAIL
line (run with -s to see them). The pipeline-level criteria reuse the
session-scoped shipped runs from conftest."""

import itertools
import json
import math
from fractions import Fraction

import numpy as np
import pytest

from pdeeplearn import candidates as cand
from pdeeplearn.core import ActionModel, ActionSignature, DomainSchema, PredicateSchema, make_entry
from pdeeplearn.domains import get_domain
from pdeeplearn.encoding import EncodedSequence, build_layout
from pdeeplearn.evaluate import reconstruction_error
from pdeeplearn.lstm import (
    PARAM_ORDER,
    TrainConfig,
    accuracy,
    init_parameters,
    loss_and_gradients,
    lstm_forward,
    make_dropout_masks,
    sequence_loss,
    train,
)
from pdeeplearn.mining import SequenceDatabase, frequent_pairs, mine_rules, stability_scan
from pdeeplearn.pruning import prune_candidates
from pdeeplearn.tracegen import GenerationSpec, PlannerConfig, generate_traces
from pdeeplearn.util import stream_rng

DOMAINS = ("gripper", "kiln", "battery")

# Golden pruning outcomes for the shipped configs (our encodings; the
# originally reported gripper figures 292 -> 6, 97.94% used an
# unpublished encoding and are quoted in report footers only).
GOLDEN_INITIAL = {
    "gripper": {"drop": 625, "move": 25, "pick": 625},
    "kiln": {"fire": 625, "glaze": 625, "shape": 625},
    "battery": {"charge": 625, "dock": 625, "undock": 625},
}
GOLDEN_PRUNED = {
    "gripper": {"drop": 500, "move": 21, "pick": 500},
    "kiln": {"fire": 624, "glaze": 609, "shape": 624},
    "battery": {"charge": 624, "dock": 624, "undock": 609},
}


def check(num: int, description: str, ok: bool) -> None:
    print(f"[{'PASS' if ok else 'FAIL'}] criterion {num}: {description}")
    assert ok, f"criterion {num}: {description}"


def test_criterion_01_gripper_end_to_end_recovery(pipeline_runs):
    run = pipeline_runs["gripper"]
    report = run.report
    ok = (report.error == 0
          and report.selected_is_reference_identical
          and run.config.trace_count == 100)
    check(1, "gripper pipeline with 100 traces selects a model with E = 0", ok)


def test_criterion_02_candidate_count_oracle():
    ok = True
    for k in range(7):
        action = ActionSignature("act", tuple(f"t{i}" for i in range(k)))
        preds = [PredicateSchema(f"p{i}", (f"t{i}",)) for i in range(k)]
        refs = cand.relevant_predicates(action, preds)
        enumerated = len(cand.enumerate_candidates(action, refs))
        brute = 0
        for pre in range(1 << k):
            for add in range(1 << k):
                if pre & add:
                    continue
                brute += sum(1 for d in range(1 << k) if not (add & d))
        ok = ok and enumerated == brute
        if k == 1:
            ok = ok and enumerated == 5
    check(2, "enumerate_candidates matches the brute-force filter for k = 0..6", ok)


def test_criterion_03_ground_truth_survival(pipeline_runs):
    ok = True
    for name in DOMAINS:
        info = get_domain(name)
        schema, reference, _ = info.load()
        run = pipeline_runs[name]
        enumerated = cand.read_candidates(
            (run.run_dir / "candidates.sexp").read_text(), schema)
        pruned = cand.read_candidates(
            (run.run_dir / "pruned.sexp").read_text(), schema)
        ok = ok and cand.contains_reference(enumerated, reference)
        ok = ok and cand.contains_reference(pruned, reference)
        ok = ok and enumerated.counts() == GOLDEN_INITIAL[name]
        ok = ok and pruned.counts() == GOLDEN_PRUNED[name]
        ok = ok and run.report.frequent_pairs != ()
    check(3, "reference entries survive enumeration and pruning on all shipped domains", ok)


def test_criterion_04_miner_oracle_equivalence():
    rng = stream_rng(401, "acceptance-miner")
    alphabet = list("abcdefgh")
    ok = True
    for _ in range(200):
        n_seqs = int(rng.integers(1, 51))
        seqs = []
        for _ in range(n_seqs):
            length = int(rng.integers(1, 31))
            seqs.append(tuple(alphabet[i] for i in rng.integers(0, len(alphabet), length)))
        database = SequenceDatabase(tuple(seqs))
        pairs, singles = {}, {}
        for seq in seqs:
            for name in seq:
                singles[name] = singles.get(name, 0) + 1
            for x, y in zip(seq, seq[1:]):
                pairs[(x, y)] = pairs.get((x, y), 0) + 1
        rules = mine_rules(database)
        ok = ok and {(r.antecedent, r.consequent) for r in rules} == set(pairs)
        for rule in rules:
            key = (rule.antecedent, rule.consequent)
            ok = (ok and rule.pair_count == pairs[key]
                  and rule.antecedent_count == singles[rule.antecedent]
                  and rule.support == Fraction(pairs[key], n_seqs)
                  and rule.confidence == Fraction(pairs[key], singles[rule.antecedent]))
    check(4, "mine_rules equals the naive adjacent-pair counter on 200 random databases", ok)


def _random_seq(rng, pad, d, n, valid):
    inputs = np.zeros((pad, d))
    targets = np.zeros((pad, n))
    for t in range(valid):
        inputs[t, int(rng.integers(n))] = 1.0
        inputs[t, n:] = (rng.random(d - n) < 0.4).astype(float)
        if t < valid - 1:
            targets[t, int(rng.integers(n))] = 1.0
    return EncodedSequence(inputs, targets, valid)


def test_criterion_05_gradient_correctness():
    worst = 0.0
    for seed in range(10):
        rng = stream_rng(seed, "acceptance-gradcheck")
        d, h, n, pad, valid = 6, 4, 2, 5, 4
        seq = _random_seq(rng, pad, d, n, valid)
        params = init_parameters(d, h, n, rng)
        masks = make_dropout_masks(rng, valid, h, 0.5) if seed % 2 else None
        _, _, grads = loss_and_gradients(params, seq, masks)
        eps = 1e-5
        for name in PARAM_ORDER:
            arr = getattr(params, name)
            g = getattr(grads, name)
            it = np.nditer(arr, flags=["multi_index"])
            for _ in it:
                idx = it.multi_index
                orig = arr[idx]
                arr[idx] = orig + eps
                hi, _ = sequence_loss(lstm_forward(params, seq, masks), seq)
                arr[idx] = orig - eps
                lo, _ = sequence_loss(lstm_forward(params, seq, masks), seq)
                arr[idx] = orig
                numeric = (hi - lo) / (2 * eps)
                worst = max(worst, abs(numeric - g[idx]) /
                            max(1e-8, abs(numeric) + abs(g[idx])))
    check(5, f"BPTT gradients match central differences (max rel err {worst:.2e})",
          worst < 1e-4)


def test_criterion_06_padding_neutrality():
    rng = stream_rng(601, "acceptance-padding")
    d, h, n = 6, 4, 3
    seq = _random_seq(rng, 9, d, n, 4)
    params = init_parameters(d, h, n, rng)
    loss_a, steps_a, grads_a = loss_and_gradients(params, seq)
    acc_a = accuracy(params, [seq])
    noisy_inputs = seq.inputs.copy()
    noisy_inputs[4:] = rng.random((5, d)) * 1e6
    noisy_targets = seq.targets.copy()
    noisy_targets[4:] = rng.random((5, n))
    noisy = EncodedSequence(noisy_inputs, noisy_targets, 4)
    loss_b, steps_b, grads_b = loss_and_gradients(params, noisy)
    ok = (loss_a == loss_b and steps_a == steps_b
          and accuracy(params, [noisy]) == acc_a
          and all(np.array_equal(getattr(grads_a, k), getattr(grads_b, k))
                  for k in PARAM_ORDER))
    check(6, "perturbing padding rows leaves loss, gradients, accuracy bit-identical", ok)


def test_criterion_07_dimension_law():
    rng = stream_rng(701, "acceptance-dimension")
    ok = True
    for _ in range(50):
        n_types = int(rng.integers(1, 4))
        types = [f"t{i}" for i in range(n_types)]
        preds = tuple(
            PredicateSchema(f"p{p}", tuple(
                types[int(rng.integers(n_types))]
                for _ in range(int(rng.integers(1, 3)))))
            for p in range(int(rng.integers(0, 5))))
        actions = tuple(
            ActionSignature(f"a{a}", tuple(
                types[int(rng.integers(n_types))]
                for _ in range(int(rng.integers(0, 4)))))
            for a in range(int(rng.integers(1, 5))))
        schema = DomainSchema("random", frozenset(types), preds, actions)
        layout = build_layout(schema)
        independent = len(schema.actions) + sum(
            len(cand.relevant_predicates(a, schema.predicates)) for a in schema.actions)
        ok = ok and layout.input_dim == independent
    check(7, "layout dimension equals action count plus summed relevant refs "
             "on 50 random schemas", ok)


def _random_model(schema, layout, rng):
    entries = []
    for action in layout.actions:
        pre, add, dele = [], [], []
        for ref in layout.block(action):
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


def test_criterion_08_reconstruction_error_properties():
    schema, _, _ = get_domain("gripper").load()
    layout = build_layout(schema)
    n = len(layout.actions)
    rng = stream_rng(801, "acceptance-error")
    ok = True
    for _ in range(100):
        a = _random_model(schema, layout, rng)
        b = _random_model(schema, layout, rng)
        e_ab, _ = reconstruction_error(a, b, layout)
        e_ba, _ = reconstruction_error(b, a, layout)
        e_aa, _ = reconstruction_error(a, a, layout)
        ok = ok and e_ab == e_ba and e_aa == 0
        action = layout.actions[int(rng.integers(n))]
        entry = a.entry(action)
        free = [r for r in layout.block(action)
                if r not in entry.add and r not in entry.delete]
        if not free:
            continue
        ref = free[int(rng.integers(len(free)))]
        new_pre = entry.pre - {ref} if ref in entry.pre else entry.pre | {ref}
        perturbed = a.replace_entry(make_entry(action, new_pre, entry.add, entry.delete))
        e_pert, _ = reconstruction_error(perturbed, a, layout)
        ok = ok and e_pert == Fraction(1, n * layout.relevant_count(action))
    check(8, "E(m,m)=0, symmetry, and the exact 1/(n*relCons) perturbation step "
             "on 100 random model pairs", ok)


def test_criterion_09_training_signal_sanity():
    pad, copies = 8, 24
    seqs = []
    for start in (0, 1):
        inputs = np.zeros((pad, 4))
        targets = np.zeros((pad, 2))
        for t in range(pad):
            cls = (start + t) % 2
            inputs[t, cls] = 1.0
            inputs[t, 2 + cls] = 1.0
            if t < pad - 1:
                targets[t, (cls + 1) % 2] = 1.0
        seqs.append(EncodedSequence(inputs, targets, pad))
    dataset = seqs * copies
    cfg = TrainConfig(hidden_units=16, dropout_rate=0.0, epochs=10, folds=2, rng_seed=901)
    params, history = train(dataset, cfg)
    correct, total = accuracy(params, dataset)
    ok = history[9] < history[0] and correct / total >= 0.95
    check(9, f"alternating-task loss falls (epoch 1 {history[0]:.3f} -> epoch 10 "
             f"{history[9]:.3f}) and accuracy {correct / total:.3f} >= 0.95", ok)


def test_criterion_10_reference_tops_every_sampled_model(pipeline_runs):
    ok = True
    for name in DOMAINS:
        report = pipeline_runs[name].report
        reference_score = next(s for s in report.scores if s.model_id == "m0000")
        ok = ok and all(reference_score.mean_accuracy >= s.mean_accuracy
                        for s in report.scores)
        ok = ok and report.selected_is_reference_identical
    check(10, "reference validation accuracy tops every sampled model and "
              "selection lands on a reference-identical model, on all shipped domains", ok)


def test_criterion_11_pipeline_determinism(pipeline_runs, gripper_rerun):
    first = pipeline_runs["gripper"].run_dir
    second = gripper_rerun.run_dir
    files = ["report.txt", "report.json", "traces.traces", "scores.json",
             "models.json", "rules.json"] + [f"params-fold{k}.bin" for k in range(5)]
    ok = first != second
    for name in files:
        ok = ok and (first / name).read_bytes() == (second / name).read_bytes()
    check(11, "two runs with the same config and seed produce byte-identical "
              "reports and parameters", ok)
