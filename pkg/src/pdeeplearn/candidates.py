"""Candidate model space: relevant predicates, per-action (pre, add, del)
triples under the STRIPS semantic constraints, and an implicit cross
product that is counted but never materialized.

For k relevant refs every candidate assigns each ref one of five states:
absent, del-only, add-only, pre-only, or pre-and-del (add together with
pre or del is forbidden), so a full candidate action set has 5^k entries.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

from .core import (
    ActionModel,
    ActionModelEntry,
    ActionSignature,
    DomainSchema,
    LiftedPredicateRef,
    PredicateSchema,
)
from .pddl import Group, ParseError, read_sexprs


class TooManyRelevantPredicates(ValueError):
    """|relevant refs| exceeded the enumeration cap for some action."""


def relevant_predicates(
    action: ActionSignature, predicates: Iterable[PredicateSchema]
) -> tuple[LiftedPredicateRef, ...]:
    """All injective type-compatible bindings of each predicate onto the
    action's parameter positions, sorted canonically.

    A predicate with any parameter type absent from the action's types
    contributes nothing. Note that this includes every type-sharing
    predicate, even ones the hand-written model never mentions.
    """
    refs = []
    for pred in sorted(predicates):
        pools = []
        for ptype in pred.param_types:
            positions = [i for i, t in enumerate(action.param_types) if t == ptype]
            pools.append(positions)
        for combo in itertools.product(*pools):
            if len(set(combo)) != len(combo):
                continue
            refs.append(LiftedPredicateRef(pred.name, combo))
    return tuple(sorted(refs))


# Per-ref membership states (in_pre, in_add, in_del) allowed by the two
# semantic constraints add&del = 0 and add&pre = 0.
_REF_STATES = (
    (False, False, False),
    (False, False, True),
    (False, True, False),
    (True, False, False),
    (True, False, True),
)


@dataclass(frozen=True)
class CandidateActionSet:
    """All admissible (pre, add, del) triples for one action."""

    action: str
    refs: tuple[LiftedPredicateRef, ...]
    candidates: tuple[ActionModelEntry, ...]
    _member_index: Mapping[ActionModelEntry, int] = field(
        init=False, repr=False, compare=False, default=None  # type: ignore[assignment]
    )

    def __post_init__(self) -> None:
        object.__setattr__(
            self, "_member_index", {entry: i for i, entry in enumerate(self.candidates)}
        )

    def __len__(self) -> int:
        return len(self.candidates)

    def __contains__(self, entry: ActionModelEntry) -> bool:
        return entry in self._member_index

    def index_of(self, entry: ActionModelEntry) -> int:
        return self._member_index[entry]


def enumerate_candidates(
    action: ActionSignature,
    refs: Sequence[LiftedPredicateRef],
    strict_del: bool = False,
    max_relevant: int = 16,
) -> CandidateActionSet:
    """Every admissible triple over the given refs.

    strict_del additionally requires del to be a subset of pre (an action
    only deletes what it required); by default the literal two semantic
    constraints apply.
    """
    if len(refs) > max_relevant:
        raise TooManyRelevantPredicates(
            f"action {action.name} has {len(refs)} relevant refs (cap {max_relevant})"
        )
    states = tuple(s for s in _REF_STATES if not (strict_del and s == (False, False, True)))
    entries = []
    for assignment in itertools.product(states, repeat=len(refs)):
        pre, add, dele = [], [], []
        for ref, (in_pre, in_add, in_del) in zip(refs, assignment):
            if in_pre:
                pre.append(ref)
            if in_add:
                add.append(ref)
            if in_del:
                dele.append(ref)
        entries.append(ActionModelEntry(action.name, frozenset(pre), frozenset(add),
                                        frozenset(dele)))
    return CandidateActionSet(action.name, tuple(refs), tuple(entries))


@dataclass(frozen=True)
class CandidateModelSpace:
    """One CandidateActionSet per action; the model space is their cross
    product and is only ever represented implicitly."""

    schema: DomainSchema
    per_action: tuple[CandidateActionSet, ...]
    _index: Mapping[str, CandidateActionSet] = field(
        init=False, repr=False, compare=False, default=None  # type: ignore[assignment]
    )

    def __post_init__(self) -> None:
        ordered = tuple(sorted(self.per_action, key=lambda c: c.action))
        object.__setattr__(self, "per_action", ordered)
        object.__setattr__(self, "_index", {c.action: c for c in ordered})
        names = {a.name for a in self.schema.actions}
        if set(self._index) != names:
            raise ValueError("candidate sets do not cover the schema's actions")

    def for_action(self, action: str) -> CandidateActionSet:
        return self._index[action]

    def action_names(self) -> tuple[str, ...]:
        return tuple(c.action for c in self.per_action)

    def counts(self) -> dict[str, int]:
        return {c.action: len(c) for c in self.per_action}

    def total_candidates(self) -> int:
        return sum(len(c) for c in self.per_action)


def build_space(schema: DomainSchema, strict_del: bool = False,
                max_relevant: int = 16) -> CandidateModelSpace:
    sets = []
    for sig in schema.actions:
        refs = relevant_predicates(sig, schema.predicates)
        sets.append(enumerate_candidates(sig, refs, strict_del, max_relevant))
    return CandidateModelSpace(schema, tuple(sets))


def space_size(space: CandidateModelSpace) -> int:
    """Exact number of full models in the implicit cross product."""
    size = 1
    for cas in space.per_action:
        size *= len(cas)
    return size


def contains_reference(space: CandidateModelSpace, model: ActionModel) -> bool:
    """Ground-truth membership: every reference entry is in its action's set."""
    return all(model.entry(cas.action) in cas for cas in space.per_action)


# -- candidate-set files ------------------------------------------------------


def _format_entry(entry: ActionModelEntry) -> str:
    def refs(lst: frozenset[LiftedPredicateRef]) -> str:
        return " ".join(r.pretty() for r in sorted(lst))

    return "(:candidate (:pre %s) (:add %s) (:del %s))" % (
        refs(entry.pre), refs(entry.add), refs(entry.delete))


def write_candidates(space: CandidateModelSpace) -> str:
    lines = ["(candidate-sets", f"  (:domain {space.schema.name})"]
    for cas in space.per_action:
        lines.append(f"  (:action {cas.action}")
        lines.append("    (:relevant %s)" % " ".join(r.pretty() for r in cas.refs))
        lines.append(f"    (:count {len(cas)})")
        for entry in cas.candidates:
            lines.append("    " + _format_entry(entry))
        lines.append("  )")
    lines.append(")")
    return "\n".join(lines) + "\n"


def _ref_from_group(group: Group) -> LiftedPredicateRef:
    name = group.items[0].text  # type: ignore[union-attr]
    return LiftedPredicateRef(name, tuple(int(a.text) for a in group.items[1:]))  # type: ignore[union-attr]


def read_candidates(text: str, schema: DomainSchema) -> CandidateModelSpace:
    tops = read_sexprs(text)
    if len(tops) != 1 or not isinstance(tops[0], Group) or not tops[0].items:
        raise ParseError("expected a single (candidate-sets ...) block", 1, 1)
    root = tops[0]
    sets = []
    for section in root.items[1:]:
        if not isinstance(section, Group) or not section.items:
            raise ParseError("malformed candidate-sets section", section.line, section.col)
        head = section.items[0].text  # type: ignore[union-attr]
        if head == ":domain":
            continue
        if head != ":action":
            raise ParseError(f"unknown section {head!r}", section.line, section.col)
        action = section.items[1].text  # type: ignore[union-attr]
        refs: tuple[LiftedPredicateRef, ...] = ()
        entries = []
        for part in section.items[2:]:
            phead = part.items[0].text  # type: ignore[union-attr]
            if phead == ":relevant":
                refs = tuple(_ref_from_group(g) for g in part.items[1:])  # type: ignore[arg-type]
            elif phead == ":count":
                continue
            elif phead == ":candidate":
                lists: dict[str, list[LiftedPredicateRef]] = {":pre": [], ":add": [], ":del": []}
                for sub in part.items[1:]:  # type: ignore[union-attr]
                    key = sub.items[0].text
                    lists[key] = [_ref_from_group(g) for g in sub.items[1:]]
                entries.append(ActionModelEntry(
                    action, frozenset(lists[":pre"]), frozenset(lists[":add"]),
                    frozenset(lists[":del"])))
        sets.append(CandidateActionSet(action, refs, tuple(entries)))
    return CandidateModelSpace(schema, tuple(sets))
