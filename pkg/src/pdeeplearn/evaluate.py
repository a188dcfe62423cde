"""Reconstruction error between a learned and a reference model, and the
pruning/accuracy report tables.

The error for one action is the size of the symmetric difference of the
two pre lists, plus the same for add and del, divided by the action's
relevant-ref count; the model error E averages this over all actions.
E is exact rational arithmetic; it is zero iff the two models have
list-wise identical entries.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from fractions import Fraction
from typing import Optional

from .core import ActionModel
from .encoding import EncodingLayout
from .pruning import PruneStats, SampledModelSet
from .scoring import ModelScore, ranked, scores_json

# Results reported for the original PDeepLearn system on its own gripper
# encoding, quoted for context in report footers; our encoding differs,
# so these are never asserted anywhere.
PUBLISHED_CONTEXT = {
    "gripper": {
        "initial_candidates": 292,
        "final_candidates": 6,
        "percent_reduction": 97.94,
        "accuracy_rate": 100.00,
        "arms_error": 22.22,
    },
}


@dataclass(frozen=True)
class DiffCounts:
    action: str
    pre_diff: int
    add_diff: int
    del_diff: int
    relevant_count: int

    @property
    def total_diff(self) -> int:
        return self.pre_diff + self.add_diff + self.del_diff


def reconstruction_error(
    learned: ActionModel, reference: ActionModel, layout: EncodingLayout
) -> tuple[Fraction, tuple[DiffCounts, ...]]:
    """Average normalized symmetric-difference count between the models.

    Every predicate present in exactly one of the two corresponding lists
    counts once (so each direction of the comparison contributes). Actions
    with no relevant refs have necessarily empty lists and contribute 0.
    """
    if learned.schema != reference.schema:
        raise ValueError("models must share a schema")
    counts = []
    total = Fraction(0)
    for action in layout.actions:
        le = learned.entry(action)
        re = reference.entry(action)
        diff = DiffCounts(
            action=action,
            pre_diff=len(le.pre ^ re.pre),
            add_diff=len(le.add ^ re.add),
            del_diff=len(le.delete ^ re.delete),
            relevant_count=layout.relevant_count(action),
        )
        counts.append(diff)
        if diff.relevant_count:
            total += Fraction(diff.total_diff, diff.relevant_count)
    n = len(layout.actions)
    return total / n if n else Fraction(0), tuple(counts)


@dataclass(frozen=True)
class EvaluationReport:
    domain: str
    schedule: tuple[int, ...]
    frequent_pairs: tuple[tuple[str, str], ...]
    prune_stats: Optional[PruneStats]
    sampled_count: int
    space_size_initial: int
    space_size_final: int
    scores: tuple[ModelScore, ...]
    selected_id: str
    selected_is_reference_identical: bool
    error: Fraction
    diffs: tuple[DiffCounts, ...]
    config_echo: dict

    @property
    def error_percent(self) -> float:
        return float(self.error) * 100.0


def percent(value: float) -> str:
    return f"{value:.2f}"


def render_report(report: EvaluationReport, fmt: str = "text") -> str:
    if fmt == "json":
        return _render_json(report)
    if fmt == "text":
        return _render_text(report)
    raise ValueError(f"unknown report format: {fmt!r}")


def _render_text(report: EvaluationReport) -> str:
    lines = [f"== evaluation report: {report.domain} =="]
    lines.append("")
    lines.append("-- candidate pruning --")
    lines.append(f"{'action':<12} {'initial':>8} {'final':>8} {'reduction':>10}")
    if report.prune_stats is not None:
        stats = report.prune_stats
        for action in sorted(stats.initial_counts):
            initial = stats.initial_counts[action]
            final = stats.final_counts[action]
            cut = 100.0 * (initial - final) / initial if initial else 0.0
            lines.append(f"{action:<12} {initial:>8} {final:>8} {percent(cut):>9}%")
        lines.append(f"{'total':<12} {stats.initial_total:>8} {stats.final_total:>8} "
                     f"{percent(stats.percent_reduction):>9}%")
    else:
        lines.append("(pruning skipped)")
    lines.append(f"model space: {report.space_size_initial} -> {report.space_size_final}")
    lines.append("")
    lines.append("-- mining --")
    lines.append("schedule: " + " ".join(str(s) for s in report.schedule))
    if report.frequent_pairs:
        lines.append("frequent pairs: " +
                     ", ".join(f"{a}->{b}" for a, b in report.frequent_pairs))
    else:
        lines.append("frequent pairs: (none)")
    lines.append("")
    lines.append(f"-- model scores ({report.sampled_count} sampled) --")
    lines.append(f"{'model':<8} {'accuracy':>9} {'predicates':>11}")
    for score in ranked(list(report.scores)):
        acc = percent(float(score.mean_accuracy) * 100.0)
        lines.append(f"{score.model_id:<8} {acc:>9} {score.total_predicates:>11}")
    lines.append("")
    lines.append(f"selected: {report.selected_id}")
    lines.append(f"reconstruction error E = {percent(report.error_percent)}")
    for diff in report.diffs:
        if diff.total_diff:
            lines.append(f"  {diff.action}: pre {diff.pre_diff}, add {diff.add_diff}, "
                         f"del {diff.del_diff} over {diff.relevant_count} refs")
    context = PUBLISHED_CONTEXT.get(report.domain)
    if context:
        lines.append("")
        lines.append(
            "context (original PDeepLearn system, different domain encoding): "
            f"pruning {context['initial_candidates']} -> {context['final_candidates']} "
            f"({percent(context['percent_reduction'])}%), accuracy "
            f"{percent(context['accuracy_rate'])}, ARMS error {percent(context['arms_error'])}"
        )
    return "\n".join(lines) + "\n"


def _render_json(report: EvaluationReport) -> str:
    stats = report.prune_stats
    payload = {
        "schema_version": 1,
        "domain": report.domain,
        "config": report.config_echo,
        "mining": {
            "schedule": list(report.schedule),
            "frequent_pairs": [list(p) for p in report.frequent_pairs],
        },
        "pruning": None if stats is None else {
            "initial_counts": dict(sorted(stats.initial_counts.items())),
            "final_counts": dict(sorted(stats.final_counts.items())),
            "initial_total": stats.initial_total,
            "final_total": stats.final_total,
            "percent_reduction": percent(stats.percent_reduction),
            "pair_evaluations": stats.pair_evaluations,
        },
        "space_size_initial": report.space_size_initial,
        "space_size_final": report.space_size_final,
        "sampled_count": report.sampled_count,
        "scores": json.loads(scores_json(list(report.scores), report.selected_id))["models"],
        "selected": report.selected_id,
        "selected_is_reference_identical": report.selected_is_reference_identical,
        "reconstruction_error": {
            "fraction": str(report.error),
            "percent": percent(report.error_percent),
            "per_action": [
                {
                    "action": d.action,
                    "pre_diff": d.pre_diff,
                    "add_diff": d.add_diff,
                    "del_diff": d.del_diff,
                    "relevant_count": d.relevant_count,
                }
                for d in report.diffs
            ],
        },
    }
    return json.dumps(payload, indent=2, sort_keys=True) + "\n"


def reference_identical(sampled: SampledModelSet, selected_id: str,
                        reference: ActionModel) -> bool:
    selected = sampled.by_id(selected_id)
    return selected.model.entries == reference.entries
