"""Sequential action-pair rules mined from traces.

A rule x -> y counts every strictly adjacent occurrence of x followed by
y across the database. Support divides the pair count by the number of
sequences (so it can exceed 1; this follows the occurrence-counting
definition rather than the conventional sequences-containing one), and
confidence divides it by the total number of occurrences of x.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Sequence, Union

from .core import PlanTrace
from .util import as_fraction

Threshold = Union[int, float, str, Fraction]


@dataclass(frozen=True)
class SequenceDatabase:
    """Action-name sequences with states stripped, in trace order."""

    sequences: tuple[tuple[str, ...], ...]

    @classmethod
    def from_traces(cls, traces: Iterable[PlanTrace]) -> "SequenceDatabase":
        return cls(tuple(t.action_names() for t in traces))

    def __len__(self) -> int:
        return len(self.sequences)

    def prefix(self, count: int) -> "SequenceDatabase":
        return SequenceDatabase(self.sequences[:count])

    def is_prefix_of(self, other: "SequenceDatabase") -> bool:
        return self.sequences == other.sequences[: len(self.sequences)]


@dataclass(frozen=True)
class SequentialRule:
    antecedent: str
    consequent: str
    pair_count: int
    antecedent_count: int
    support: Fraction
    confidence: Fraction


def count_adjacent_pairs(db: SequenceDatabase) -> tuple[dict[tuple[str, str], int], dict[str, int]]:
    """Raw counters: adjacent (x, y) occurrences and total occurrences of x."""
    pairs: dict[tuple[str, str], int] = {}
    singles: dict[str, int] = {}
    for seq in db.sequences:
        for name in seq:
            singles[name] = singles.get(name, 0) + 1
        for x, y in zip(seq, seq[1:]):
            pairs[(x, y)] = pairs.get((x, y), 0) + 1
    return pairs, singles


def mine_rules(
    db: SequenceDatabase,
    min_support: Threshold = 0,
    min_confidence: Threshold = 0,
) -> tuple[SequentialRule, ...]:
    """All adjacent-pair rules clearing both thresholds, sorted by name."""
    if len(db) == 0:
        raise ValueError("cannot mine an empty sequence database")
    min_sup = as_fraction(min_support)
    min_conf = as_fraction(min_confidence)
    if min_sup < 0 or min_conf < 0:
        raise ValueError("thresholds must be non-negative")
    pairs, singles = count_adjacent_pairs(db)
    total = len(db)
    rules = []
    for (x, y), count in sorted(pairs.items()):
        support = Fraction(count, total)
        confidence = Fraction(count, singles[x])
        if support >= min_sup and confidence >= min_conf:
            rules.append(SequentialRule(x, y, count, singles[x], support, confidence))
    return tuple(rules)


@dataclass(frozen=True)
class RulePoint:
    trace_count: int
    pair_count: int
    antecedent_count: int
    support: Fraction
    confidence: Fraction


@dataclass(frozen=True)
class RuleSeries:
    antecedent: str
    consequent: str
    points: tuple[RulePoint, ...]
    stable: bool

    @property
    def final(self) -> RulePoint:
        return self.points[-1]


@dataclass(frozen=True)
class StabilityReport:
    """Per-rule support/confidence series across the doubling schedule."""

    schedule: tuple[int, ...]
    rules: tuple[RuleSeries, ...]

    def stable_rules(self) -> tuple[RuleSeries, ...]:
        return tuple(r for r in self.rules if r.stable)


def stability_scan(
    databases: Sequence[SequenceDatabase],
    min_support: Threshold = 0,
    min_confidence: Threshold = 0,
    tolerance: Threshold = "1/10",
) -> StabilityReport:
    """Track rules across nested prefix databases of increasing size.

    A rule is stable iff it clears both thresholds at every schedule point
    and neither its support nor its confidence moves by more than
    tolerance between consecutive points.
    """
    if not databases:
        raise ValueError("empty schedule")
    sizes = tuple(len(db) for db in databases)
    if any(b <= a for a, b in zip(sizes, sizes[1:])):
        raise ValueError("schedule sizes must be strictly increasing")
    for smaller, larger in zip(databases, databases[1:]):
        if not smaller.is_prefix_of(larger):
            raise ValueError("schedule databases must be nested prefixes")
    tol = as_fraction(tolerance)

    per_point = [mine_rules(db, min_support, min_confidence) for db in databases]
    series: dict[tuple[str, str], list[RulePoint]] = {}
    for db, rules in zip(databases, per_point):
        for rule in rules:
            series.setdefault((rule.antecedent, rule.consequent), []).append(
                RulePoint(len(db), rule.pair_count, rule.antecedent_count,
                          rule.support, rule.confidence)
            )
    out = []
    for (x, y), points in sorted(series.items()):
        stable = len(points) == len(databases) and all(
            abs(b.support - a.support) <= tol and abs(b.confidence - a.confidence) <= tol
            for a, b in zip(points, points[1:])
        )
        out.append(RuleSeries(x, y, tuple(points), stable))
    return StabilityReport(sizes, tuple(out))


def frequent_pairs(report: StabilityReport) -> tuple[tuple[str, str], ...]:
    """Stable rules projected to ordered action pairs.

    Ordered by descending final confidence, then descending final support,
    then lexicographically.
    """
    stable = report.stable_rules()
    ranked = sorted(
        stable,
        key=lambda r: (-r.final.confidence, -r.final.support, r.antecedent, r.consequent),
    )
    return tuple((r.antecedent, r.consequent) for r in ranked)


def render_rules_text(report: StabilityReport) -> str:
    lines = ["trace counts: " + " ".join(str(s) for s in report.schedule)]
    lines.append(f"{'rule':<24} {'stable':<7} " +
                 " ".join(f"{'sup@%d conf@%d' % (s, s):<17}" for s in report.schedule))
    for series in report.rules:
        cells = {p.trace_count: p for p in series.points}
        row = [f"{series.antecedent}->{series.consequent:<15}"[:24].ljust(24),
               ("yes" if series.stable else "no").ljust(7)]
        for s in report.schedule:
            p = cells.get(s)
            row.append(("-      -" if p is None else
                        f"{float(p.support):.3f} {float(p.confidence):.3f}").ljust(17))
        lines.append(" ".join(row))
    return "\n".join(lines) + "\n"


def rules_report_json(report: StabilityReport) -> str:
    payload = {
        "schema_version": 1,
        "schedule": list(report.schedule),
        "rules": [
            {
                "antecedent": r.antecedent,
                "consequent": r.consequent,
                "stable": r.stable,
                "points": [
                    {
                        "trace_count": p.trace_count,
                        "pair_count": p.pair_count,
                        "antecedent_count": p.antecedent_count,
                        "support": str(p.support),
                        "confidence": str(p.confidence),
                    }
                    for p in r.points
                ],
            }
            for r in report.rules
        ],
        "frequent_pairs": [list(p) for p in frequent_pairs(report)],
    }
    return json.dumps(payload, indent=2, sort_keys=True) + "\n"
