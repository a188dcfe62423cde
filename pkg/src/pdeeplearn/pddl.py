"""Disk formats: typed-STRIPS domain/problem files and interleaved traces.

The surface syntax is an s-expression PDDL subset (:strips and :typing
only). Trace files hold one (trace ...) block per trace: a header naming
the domain and typed objects, an (:init ...) state, alternating
(action (...)) / (state ...) blocks, and a final (:goal ...) block that
records the full state reached by the last action.

Serializers emit a canonical form (alphabetical orderings everywhere), so
parse followed by serialize is the identity on canonical text.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Optional, Union

from .core import (
    ActionModel,
    ActionModelEntry,
    ActionSignature,
    DomainSchema,
    GroundAction,
    GroundAtom,
    LiftedPredicateRef,
    PlanTrace,
    PredicateSchema,
    State,
    make_state,
)


class ParseError(ValueError):
    """A located syntax or validation error in an input file."""

    def __init__(self, message: str, line: int, col: int):
        super().__init__(f"line {line}, column {col}: {message}")
        self.line = line
        self.col = col


@dataclass(frozen=True)
class Atom:
    text: str
    line: int
    col: int


@dataclass(frozen=True)
class Group:
    items: tuple[Union["Group", Atom], ...]
    line: int
    col: int


SExpr = Union[Group, Atom]


def _tokenize(text: str):
    line, col = 1, 1
    i, n = 0, len(text)
    while i < n:
        ch = text[i]
        if ch == "\n":
            line += 1
            col = 1
            i += 1
        elif ch in " \t\r":
            col += 1
            i += 1
        elif ch == ";":
            while i < n and text[i] != "\n":
                i += 1
        elif ch in "()":
            yield ch, line, col
            col += 1
            i += 1
        else:
            start = i
            start_col = col
            while i < n and text[i] not in " \t\r\n();":
                i += 1
                col += 1
            yield text[start:i], line, start_col
    yield None, line, col


def read_sexprs(text: str) -> list[SExpr]:
    """Read all top-level s-expressions, raising located ParseErrors."""
    stack: list[tuple[list[SExpr], int, int]] = []
    top: list[SExpr] = []
    for tok, line, col in _tokenize(text):
        if tok is None:
            if stack:
                raise ParseError("unclosed '('", stack[-1][1], stack[-1][2])
            return top
        if tok == "(":
            stack.append(([], line, col))
        elif tok == ")":
            if not stack:
                raise ParseError("unmatched ')'", line, col)
            items, gline, gcol = stack.pop()
            group = Group(tuple(items), gline, gcol)
            (stack[-1][0] if stack else top).append(group)
        else:
            (stack[-1][0] if stack else top).append(Atom(tok.lower(), line, col))
    return top


def _fail(node: SExpr, message: str) -> "ParseError":
    return ParseError(message, node.line, node.col)


def _expect_group(node: SExpr, what: str) -> Group:
    if not isinstance(node, Group):
        raise _fail(node, f"expected {what}, got {node.text!r}")  # type: ignore[union-attr]
    return node


def _expect_atom(node: SExpr, what: str) -> Atom:
    if not isinstance(node, Atom):
        raise _fail(node, f"expected {what}")
    return node


def _head(group: Group) -> str:
    if not group.items or not isinstance(group.items[0], Atom):
        return ""
    return group.items[0].text


def _parse_typed_names(items: tuple[SExpr, ...], owner: Group, what: str) -> list[tuple[str, str]]:
    """Parse 'a b - t c - u' name/type runs into (name, type) pairs."""
    out: list[tuple[str, str]] = []
    pending: list[Atom] = []
    i = 0
    while i < len(items):
        atom = _expect_atom(items[i], f"{what} name")
        if atom.text == "-":
            if not pending:
                raise _fail(atom, f"dangling '-' in {what} list")
            if i + 1 >= len(items):
                raise _fail(atom, f"missing type after '-' in {what} list")
            type_atom = _expect_atom(items[i + 1], "type name")
            out.extend((p.text, type_atom.text) for p in pending)
            pending = []
            i += 2
        else:
            pending.append(atom)
            i += 1
    if pending:
        raise _fail(owner, f"{what} list ends without a '- type' annotation")
    return out


def _parse_lifted_atom(
    group: Group, params: dict[str, tuple[int, str]], schema_preds: dict[str, PredicateSchema]
) -> LiftedPredicateRef:
    if not group.items:
        raise _fail(group, "empty predicate application")
    name = _expect_atom(group.items[0], "predicate name").text
    if name not in schema_preds:
        raise _fail(group.items[0], f"unknown predicate: {name}")
    pred = schema_preds[name]
    args = group.items[1:]
    if len(args) != pred.arity:
        raise _fail(group, f"predicate {name} expects {pred.arity} arguments, got {len(args)}")
    binding = []
    for slot, arg in enumerate(args):
        atom = _expect_atom(arg, "variable")
        if not atom.text.startswith("?"):
            raise _fail(atom, f"expected a ?variable, got {atom.text!r}")
        if atom.text not in params:
            raise _fail(atom, f"variable {atom.text} is not an action parameter")
        pos, ptype = params[atom.text]
        if ptype != pred.param_types[slot]:
            raise _fail(atom, f"{atom.text} has type {ptype}, predicate {name} needs "
                              f"{pred.param_types[slot]} at slot {slot}")
        binding.append(pos)
    return LiftedPredicateRef(name, tuple(binding))


def parse_domain(text: str) -> tuple[DomainSchema, ActionModel]:
    """Parse a domain file into its schema and its reference action model."""
    tops = read_sexprs(text)
    if not tops:
        raise ParseError("empty domain file", 1, 1)
    if len(tops) > 1:
        raise _fail(tops[1], "domain file must contain a single (define ...) form")
    define = _expect_group(tops[0], "(define ...)")
    if _head(define) != "define":
        raise _fail(define, "expected (define (domain ...) ...)")

    domain_name: Optional[str] = None
    types: list[str] = []
    predicates: dict[str, PredicateSchema] = {}
    signatures: list[ActionSignature] = []
    entries: list[ActionModelEntry] = []

    sections = define.items[1:]
    if not sections:
        raise _fail(define, "missing (domain NAME)")
    name_group = _expect_group(sections[0], "(domain NAME)")
    if _head(name_group) != "domain" or len(name_group.items) != 2:
        raise _fail(name_group, "expected (domain NAME)")
    domain_name = _expect_atom(name_group.items[1], "domain name").text

    for section in sections[1:]:
        group = _expect_group(section, "a domain section")
        head = _head(group)
        if head == ":requirements":
            for req in group.items[1:]:
                atom = _expect_atom(req, "requirement")
                if atom.text not in (":strips", ":typing"):
                    raise _fail(atom, f"unsupported requirement: {atom.text}")
        elif head == ":types":
            for item in group.items[1:]:
                types.append(_expect_atom(item, "type name").text)
        elif head == ":predicates":
            for item in group.items[1:]:
                pgroup = _expect_group(item, "a predicate declaration")
                if not pgroup.items:
                    raise _fail(pgroup, "empty predicate declaration")
                pname = _expect_atom(pgroup.items[0], "predicate name").text
                if pname in predicates:
                    raise _fail(pgroup, f"duplicate predicate: {pname}")
                typed = _parse_typed_names(pgroup.items[1:], pgroup, "parameter")
                for var, _ in typed:
                    if not var.startswith("?"):
                        raise _fail(pgroup, f"predicate parameter {var!r} must be a ?variable")
                predicates[pname] = PredicateSchema(pname, tuple(t for _, t in typed))
        elif head == ":action":
            sig, entry = _parse_action(group, predicates)
            signatures.append(sig)
            entries.append(entry)
        else:
            raise _fail(group, f"unknown domain section: {head!r}")

    try:
        schema = DomainSchema(
            name=domain_name,
            types=frozenset(types),
            predicates=tuple(predicates.values()),
            actions=tuple(signatures),
        )
        model = ActionModel(schema, tuple(entries))
    except ParseError:
        raise
    except ValueError as exc:
        raise ParseError(str(exc), define.line, define.col) from exc
    return schema, model


def _parse_action(
    group: Group, predicates: dict[str, PredicateSchema]
) -> tuple[ActionSignature, ActionModelEntry]:
    items = group.items
    if len(items) < 2:
        raise _fail(group, "action without a name")
    name = _expect_atom(items[1], "action name").text
    params: dict[str, tuple[int, str]] = {}
    param_types: list[str] = []
    pre: list[LiftedPredicateRef] = []
    add: list[LiftedPredicateRef] = []
    dele: list[LiftedPredicateRef] = []
    i = 2
    seen_params = False
    while i < len(items):
        key = _expect_atom(items[i], "an :action keyword")
        if i + 1 >= len(items):
            raise _fail(key, f"missing value after {key.text}")
        value = _expect_group(items[i + 1], f"value of {key.text}")
        if key.text == ":parameters":
            seen_params = True
            typed = _parse_typed_names(value.items, value, "parameter")
            for pos, (var, ptype) in enumerate(typed):
                if not var.startswith("?"):
                    raise _fail(value, f"action parameter {var!r} must be a ?variable")
                if var in params:
                    raise _fail(value, f"duplicate parameter {var}")
                params[var] = (pos, ptype)
                param_types.append(ptype)
        elif key.text == ":precondition":
            for g in _conjuncts(value):
                pre.append(_parse_lifted_atom(g, params, predicates))
        elif key.text == ":effect":
            for g in _conjuncts(value):
                if _head(g) == "not":
                    if len(g.items) != 2:
                        raise _fail(g, "(not ...) takes exactly one atom")
                    inner = _expect_group(g.items[1], "a negated atom")
                    dele.append(_parse_lifted_atom(inner, params, predicates))
                else:
                    add.append(_parse_lifted_atom(g, params, predicates))
        else:
            raise _fail(key, f"unknown action keyword: {key.text}")
        i += 2
    if not seen_params:
        raise _fail(group, f"action {name} is missing :parameters")
    sig = ActionSignature(name, tuple(param_types))
    try:
        entry = ActionModelEntry(name, frozenset(pre), frozenset(add), frozenset(dele))
    except ValueError as exc:
        raise _fail(group, str(exc))
    return sig, entry


def _conjuncts(group: Group) -> list[Group]:
    """Unwrap (and a b c) / (a ...) / () into a list of atom groups."""
    if _head(group) == "and":
        return [_expect_group(g, "an atom") for g in group.items[1:]]
    if not group.items:
        return []
    return [group]


# -- problems ---------------------------------------------------------------


@dataclass(frozen=True)
class ProblemSpec:
    """A planning problem: typed objects, full initial state, partial goal."""

    name: str
    domain: str
    objects: tuple[tuple[str, str], ...]
    init: State
    goal: frozenset[GroundAtom]

    def object_table(self) -> dict[str, str]:
        return dict(self.objects)


def _parse_ground_atom(
    group: Group, objects: dict[str, str], schema: DomainSchema
) -> GroundAtom:
    if not group.items:
        raise _fail(group, "empty atom")
    name = _expect_atom(group.items[0], "predicate name").text
    try:
        pred = schema.predicate(name)
    except Exception:
        raise _fail(group.items[0], f"unknown predicate: {name}") from None
    args = group.items[1:]
    if len(args) != pred.arity:
        raise _fail(group, f"predicate {name} expects {pred.arity} arguments, got {len(args)}")
    names = []
    for slot, arg in enumerate(args):
        atom = _expect_atom(arg, "object name")
        if atom.text not in objects:
            raise _fail(atom, f"unknown object: {atom.text}")
        if objects[atom.text] != pred.param_types[slot]:
            raise _fail(atom, f"object {atom.text} has type {objects[atom.text]}, "
                              f"predicate {name} needs {pred.param_types[slot]}")
        names.append(atom.text)
    return GroundAtom(name, tuple(names))


def parse_problem(text: str, schema: DomainSchema) -> ProblemSpec:
    tops = read_sexprs(text)
    if len(tops) != 1:
        raise ParseError("problem file must contain a single (define ...) form", 1, 1)
    define = _expect_group(tops[0], "(define ...)")
    if _head(define) != "define":
        raise _fail(define, "expected (define (problem ...) ...)")
    sections = define.items[1:]
    if not sections:
        raise _fail(define, "missing (problem NAME)")
    name_group = _expect_group(sections[0], "(problem NAME)")
    if _head(name_group) != "problem" or len(name_group.items) != 2:
        raise _fail(name_group, "expected (problem NAME)")
    pname = _expect_atom(name_group.items[1], "problem name").text

    domain = ""
    objects: dict[str, str] = {}
    init: list[GroundAtom] = []
    goal: list[GroundAtom] = []
    for section in sections[1:]:
        group = _expect_group(section, "a problem section")
        head = _head(group)
        if head == ":domain":
            if len(group.items) != 2:
                raise _fail(group, "expected (:domain NAME)")
            domain = _expect_atom(group.items[1], "domain name").text
            if domain != schema.name:
                raise _fail(group, f"problem is for domain {domain}, schema is {schema.name}")
        elif head == ":objects":
            for name, otype in _parse_typed_names(group.items[1:], group, "object"):
                if otype not in schema.types:
                    raise _fail(group, f"object {name} has undeclared type {otype}")
                if name in objects:
                    raise _fail(group, f"duplicate object: {name}")
                objects[name] = otype
        elif head == ":init":
            for item in group.items[1:]:
                init.append(_parse_ground_atom(_expect_group(item, "an atom"), objects, schema))
        elif head == ":goal":
            for g in _conjuncts_of_goal(group):
                goal.append(_parse_ground_atom(g, objects, schema))
        else:
            raise _fail(group, f"unknown problem section: {head!r}")
    return ProblemSpec(
        name=pname,
        domain=domain or schema.name,
        objects=tuple(sorted(objects.items())),
        init=make_state(init),
        goal=frozenset(goal),
    )


def _conjuncts_of_goal(group: Group) -> list[Group]:
    if len(group.items) == 2 and isinstance(group.items[1], Group):
        return _conjuncts(group.items[1])
    return [_expect_group(g, "an atom") for g in group.items[1:]]


# -- traces -----------------------------------------------------------------


def parse_traces(text: str, schema: DomainSchema) -> list[PlanTrace]:
    """Parse a .traces file: zero or more (trace ...) blocks."""
    traces = []
    for top in read_sexprs(text):
        group = _expect_group(top, "a (trace ...) block")
        if _head(group) != "trace":
            raise _fail(group, "expected (trace ...)")
        traces.append(_parse_trace(group, schema))
    return traces


def _parse_trace(group: Group, schema: DomainSchema) -> PlanTrace:
    objects: dict[str, str] = {}
    steps: list = []
    stage = "header"
    for item in group.items[1:]:
        sub = _expect_group(item, "a trace section")
        head = _head(sub)
        if head == ":domain":
            if len(sub.items) != 2:
                raise _fail(sub, "expected (:domain NAME)")
            dname = _expect_atom(sub.items[1], "domain name").text
            if dname != schema.name:
                raise _fail(sub, f"trace is for domain {dname}, schema is {schema.name}")
        elif head == ":objects":
            for name, otype in _parse_typed_names(sub.items[1:], sub, "object"):
                if otype not in schema.types:
                    raise _fail(sub, f"object {name} has undeclared type {otype}")
                objects[name] = otype
        elif head == ":init":
            if stage != "header":
                raise _fail(sub, "(:init ...) must come before any action")
            steps.append(make_state(
                _parse_ground_atom(_expect_group(g, "an atom"), objects, schema)
                for g in sub.items[1:]
            ))
            stage = "after-state"
        elif head == "action":
            if stage != "after-state":
                raise _fail(sub, "two actions with no state between them")
            if len(sub.items) != 2:
                raise _fail(sub, "expected (action (NAME obj...))")
            steps.append(_parse_ground_action(_expect_group(sub.items[1], "a ground action"),
                                              objects, schema))
            stage = "after-action"
        elif head in ("state", ":goal"):
            if stage != "after-action":
                raise _fail(sub, "state block must follow an action")
            steps.append(make_state(
                _parse_ground_atom(_expect_group(g, "an atom"), objects, schema)
                for g in sub.items[1:]
            ))
            stage = "done" if head == ":goal" else "after-state"
        else:
            raise _fail(sub, f"unknown trace section: {head!r}")
    if stage != "done":
        raise _fail(group, "trace must end with a (:goal ...) state")
    try:
        return PlanTrace(tuple(sorted(objects.items())), tuple(steps))
    except ValueError as exc:
        raise _fail(group, str(exc))


def _parse_ground_action(group: Group, objects: dict[str, str], schema: DomainSchema) -> GroundAction:
    if not group.items:
        raise _fail(group, "empty action")
    name = _expect_atom(group.items[0], "action name").text
    try:
        sig = schema.action(name)
    except Exception:
        raise _fail(group.items[0], f"unknown action: {name}") from None
    args = group.items[1:]
    if len(args) != sig.arity:
        raise _fail(group, f"action {name} expects {sig.arity} arguments, got {len(args)}")
    arg_names = []
    for slot, arg in enumerate(args):
        atom = _expect_atom(arg, "object name")
        if atom.text not in objects:
            raise _fail(atom, f"unknown object: {atom.text}")
        if objects[atom.text] != sig.param_types[slot]:
            raise _fail(atom, f"object {atom.text} has type {objects[atom.text]}, "
                              f"action {name} needs {sig.param_types[slot]}")
        arg_names.append(atom.text)
    return GroundAction(name, tuple(arg_names))


# -- serialization ----------------------------------------------------------


def _var_names(sig: ActionSignature) -> list[str]:
    return [f"?x{i}" for i in range(sig.arity)]


def _format_typed_vars(names: Iterable[str], types: Iterable[str]) -> str:
    return " ".join(f"{n} - {t}" for n, t in zip(names, types))


def _format_ref(ref: LiftedPredicateRef, var_names: list[str]) -> str:
    return "(%s)" % " ".join([ref.predicate] + [var_names[i] for i in ref.binding])


def serialize_model(model: ActionModel) -> str:
    """Emit a complete canonical domain file for the model and its schema.

    Ordering is fixed: types, predicates, and actions alphabetically, and
    predicates alphabetically within each pre/add/del list, so equal
    models always serialize to identical bytes.
    """
    schema = model.schema
    lines = [f"(define (domain {schema.name})"]
    lines.append("  (:requirements :strips :typing)")
    lines.append("  (:types %s)" % " ".join(sorted(schema.types)))
    lines.append("  (:predicates")
    for pred in schema.predicates:
        names = [f"?x{i}" for i in range(pred.arity)]
        body = (" " + _format_typed_vars(names, pred.param_types)) if pred.arity else ""
        lines.append(f"    ({pred.name}{body})")
    lines.append("  )")
    for sig in schema.actions:
        entry = model.entry(sig.name)
        names = _var_names(sig)
        lines.append(f"  (:action {sig.name}")
        lines.append(f"    :parameters ({_format_typed_vars(names, sig.param_types)})")
        pre = " ".join(_format_ref(r, names) for r in sorted(entry.pre))
        lines.append(f"    :precondition (and{' ' + pre if pre else ''})")
        adds = [_format_ref(r, names) for r in sorted(entry.add)]
        dels = ["(not %s)" % _format_ref(r, names) for r in sorted(entry.delete)]
        eff = " ".join(adds + dels)
        lines.append(f"    :effect (and{' ' + eff if eff else ''})")
        lines.append("  )")
    lines.append(")")
    return "\n".join(lines) + "\n"


def serialize_problem(problem: ProblemSpec) -> str:
    lines = [f"(define (problem {problem.name})"]
    lines.append(f"  (:domain {problem.domain})")
    by_type: dict[str, list[str]] = {}
    for name, otype in problem.objects:
        by_type.setdefault(otype, []).append(name)
    parts = []
    for otype in sorted(by_type):
        parts.append("%s - %s" % (" ".join(sorted(by_type[otype])), otype))
    lines.append("  (:objects %s)" % " ".join(parts))
    lines.append("  (:init %s)" % " ".join(a.pretty() for a in sorted(problem.init.atoms)))
    lines.append("  (:goal (and %s))" % " ".join(a.pretty() for a in sorted(problem.goal)))
    lines.append(")")
    return "\n".join(lines) + "\n"


def serialize_traces(traces: Iterable[PlanTrace], domain_name: str) -> str:
    blocks = []
    for trace in traces:
        lines = ["(trace"]
        lines.append(f"  (:domain {domain_name})")
        by_type: dict[str, list[str]] = {}
        for name, otype in trace.objects:
            by_type.setdefault(otype, []).append(name)
        parts = ["%s - %s" % (" ".join(sorted(by_type[t])), t) for t in sorted(by_type)]
        lines.append("  (:objects %s)" % " ".join(parts))
        lines.append("  (:init %s)" % " ".join(a.pretty() for a in trace.initial_state.sorted_atoms()))
        steps = trace.steps
        for i in range(1, len(steps), 2):
            action = steps[i]
            state = steps[i + 1]
            lines.append(f"  (action {action.pretty()})")
            body = " ".join(a.pretty() for a in state.sorted_atoms())
            key = ":goal" if i + 1 == len(steps) - 1 else "state"
            lines.append(f"  ({key} {body})")
        lines.append(")")
        blocks.append("\n".join(lines))
    return "\n".join(blocks) + ("\n" if blocks else "")
