"""Training-data generation: a forward state-space planner over ground
actions, random solvable problems, and state-action interleaved traces.

Plans are found by breadth-first search (shortest) or greedy search on the
number of unsatisfied goal atoms. Random problems come from a per-domain
configuration sampler plus a seeded random walk that picks a reachable
goal, so generation never stalls on unsolvable instances.
"""

from __future__ import annotations

import itertools
from collections import deque
from dataclasses import dataclass
from heapq import heappop, heappush
from typing import Mapping, Optional, Sequence

import numpy as np

from .core import (
    ActionModel,
    DomainSchema,
    GroundAction,
    GroundAtom,
    PlanTrace,
    State,
    apply,
    is_applicable,
)
from .domains import Sampler
from .pddl import ProblemSpec
from .util import stream_rng

STRATEGIES = ("breadth-first", "greedy-by-goal-count")


class GenerationError(RuntimeError):
    """Trace generation exhausted its retry budget for some problem index."""


@dataclass(frozen=True)
class PlannerConfig:
    strategy: str = "breadth-first"
    max_expansions: int = 100_000
    rng_seed: int = 0

    def __post_init__(self) -> None:
        if self.strategy not in STRATEGIES:
            raise ValueError(f"strategy must be one of {STRATEGIES}")
        if self.max_expansions <= 0:
            raise ValueError("max_expansions must be positive")


@dataclass(frozen=True)
class PlanResult:
    actions: Optional[tuple[GroundAction, ...]]
    expansions: int
    exhausted: bool

    @property
    def found(self) -> bool:
        return self.actions is not None


@dataclass(frozen=True)
class GenerationSpec:
    """How many traces to produce and from what object populations.

    trace_targets is the doubling schedule used later by the stability
    scan; its maximum never exceeds problem_count. A positive
    catalog_size cycles the problem stream through that many distinct
    configurations, so the corpus repeats each instance roughly
    problem_count / catalog_size times and every cross-validation fold
    sees the same instance mix.
    """

    problem_count: int
    object_count_ranges: Mapping[str, tuple[int, int]]
    trace_targets: tuple[int, ...] = ()
    rng_seed: int = 0
    catalog_size: int = 0

    def __post_init__(self) -> None:
        if self.problem_count <= 0:
            raise ValueError("problem_count must be positive")
        for t, (lo, hi) in self.object_count_ranges.items():
            if lo <= 0 or hi < lo:
                raise ValueError(f"bad object count range for {t}: ({lo}, {hi})")
        if self.trace_targets and max(self.trace_targets) > self.problem_count:
            raise ValueError("trace_targets exceed problem_count")
        if self.catalog_size < 0:
            raise ValueError("catalog_size must be non-negative")


def doubling_schedule(count: int, start: int = 10) -> tuple[int, ...]:
    """10, 20, 40, ... capped with the final count itself."""
    if count <= start:
        return (count,)
    points = []
    value = start
    while value < count:
        points.append(value)
        value *= 2
    points.append(count)
    return tuple(points)


def ground_actions(schema: DomainSchema, objects: Mapping[str, str]) -> tuple[GroundAction, ...]:
    """All well-typed ground instantiations, in a fixed sorted order."""
    by_type: dict[str, list[str]] = {}
    for name in sorted(objects):
        by_type.setdefault(objects[name], []).append(name)
    out = []
    for sig in schema.actions:
        pools = [by_type.get(t, []) for t in sig.param_types]
        for combo in itertools.product(*pools):
            out.append(GroundAction(sig.name, combo))
    return tuple(out)


def _goal_satisfied(state: State, goal: frozenset[GroundAtom]) -> bool:
    return goal <= state.atoms


def plan(problem: ProblemSpec, model: ActionModel, cfg: PlannerConfig) -> PlanResult:
    """Search for an action sequence from init to a state containing goal."""
    actions = ground_actions(model.schema, problem.object_table())
    init = problem.init
    if _goal_satisfied(init, problem.goal):
        return PlanResult((), 0, False)

    greedy = cfg.strategy == "greedy-by-goal-count"
    seen = {init.atoms}
    expansions = 0
    if greedy:
        counter = itertools.count()
        frontier: list = []
        heappush(frontier, (len(problem.goal - init.atoms), next(counter), init, ()))
    else:
        queue: deque = deque([(init, ())])

    while True:
        if greedy:
            if not frontier:
                return PlanResult(None, expansions, False)
            _, _, state, path = heappop(frontier)
        else:
            if not queue:
                return PlanResult(None, expansions, False)
            state, path = queue.popleft()
        if expansions >= cfg.max_expansions:
            return PlanResult(None, expansions, True)
        expansions += 1
        for ga in actions:
            if not is_applicable(state, ga, model):
                continue
            successor = apply(state, ga, model)
            if successor.atoms in seen:
                continue
            seen.add(successor.atoms)
            new_path = path + (ga,)
            if _goal_satisfied(successor, problem.goal):
                return PlanResult(new_path, expansions, False)
            if greedy:
                heappush(frontier, (len(problem.goal - successor.atoms), next(counter),
                                    successor, new_path))
            else:
                queue.append((successor, new_path))


def solves_unitary(model: ActionModel, problem: ProblemSpec, cfg: PlannerConfig) -> bool:
    """True iff the model can solve the screening problem at all."""
    return plan(problem, model, cfg).found


def replay(init: State, actions: Sequence[GroundAction], model: ActionModel,
           objects: Mapping[str, str]) -> PlanTrace:
    """Record the interleaved trace of executing actions from init."""
    steps: list = [init]
    state = init
    for ga in actions:
        state = apply(state, ga, model)
        steps.extend([ga, state])
    return PlanTrace(tuple(sorted(objects.items())), tuple(steps))


def _random_walk(state: State, actions: Sequence[GroundAction], model: ActionModel,
                 length: int, rng: np.random.Generator) -> State:
    """Self-avoiding walk: never revisit a state, so steps make progress
    instead of cycling (plain uniform walks mostly pace back and forth)."""
    seen = {state.atoms}
    for _ in range(length):
        successors = []
        for ga in actions:
            if is_applicable(state, ga, model):
                successor = apply(state, ga, model)
                if successor.atoms not in seen:
                    successors.append(successor)
        if not successors:
            break
        state = successors[int(rng.integers(len(successors)))]
        seen.add(state.atoms)
    return state


def sample_problem(index: int, spec: GenerationSpec, model: ActionModel, sampler: Sampler,
                   attempt: int = 0, walk_range: tuple[int, int] = (3, 12)) -> ProblemSpec:
    """One random problem: sampled objects and init, goal via random walk.

    The goal is the full state reached by a seeded self-avoiding walk of
    3..12 steps, so a plan always exists and is rarely trivial.
    """
    if spec.catalog_size:
        index = index % spec.catalog_size
    rng = stream_rng(spec.rng_seed, "problem", index, attempt)
    objects, init = sampler(rng, spec.object_count_ranges)
    actions = ground_actions(model.schema, objects)
    length = int(rng.integers(walk_range[0], walk_range[1] + 1))
    final = _random_walk(init, actions, model, length, rng)
    goal = frozenset(final.atoms)
    return ProblemSpec(
        name=f"generated-{index}",
        domain=model.schema.name,
        objects=tuple(sorted(objects.items())),
        init=init,
        goal=goal,
    )


def generate_traces(
    spec: GenerationSpec,
    model: ActionModel,
    cfg: PlannerConfig,
    sampler: Sampler,
    max_retries: int = 20,
) -> list[PlanTrace]:
    """problem_count traces, each validated against the generating model.

    The i-th trace depends only on (rng_seed, i), so shorter runs are
    exact prefixes of longer ones and reruns are byte-identical.
    """
    traces = []
    for index in range(spec.problem_count):
        trace = None
        for attempt in range(max_retries):
            problem = sample_problem(index, spec, model, sampler, attempt)
            if problem.goal <= problem.init.atoms:
                continue
            result = plan(problem, model, cfg)
            if result.actions:
                trace = replay(problem.init, result.actions, model, problem.object_table())
                break
        if trace is None:
            raise GenerationError(
                f"no solvable problem with a nonempty plan for index {index} "
                f"after {max_retries} attempts"
            )
        traces.append(trace)
    return traces
