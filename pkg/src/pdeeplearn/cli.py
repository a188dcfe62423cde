"""Command-line front end: per-phase subcommands plus the full pipeline.

Exit codes: 0 on success; the pipeline command exits with a distinct code
per failing phase (see pipeline.PHASE_EXIT_CODES); other commands exit 1
on any error.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from . import candidates as cand
from . import domains as domain_registry
from .encoding import build_layout
from .lstm import TrainConfig, save_params
from .mining import (
    SequenceDatabase,
    frequent_pairs,
    render_rules_text,
    rules_report_json,
    stability_scan,
)
from .pddl import parse_domain, parse_problem, parse_traces, serialize_traces
from .pipeline import PhaseError, parse_config, run_pipeline
from .pruning import manifest_json, manifest_load, prune_candidates, sample_models
from .scoring import score_models, scores_json, train_folds
from .tracegen import (
    GenerationSpec,
    PlannerConfig,
    doubling_schedule,
    generate_traces,
)


class CliError(RuntimeError):
    """A usage problem reported as a one-line error with exit code 1."""


def _load_domain(arg: str):
    """Domain by registry name or by .pddl path -> (schema, reference, info)."""
    if arg in domain_registry.REGISTRY:
        info = domain_registry.get_domain(arg)
        schema, reference, _ = info.load()
        return schema, reference, info
    path = Path(arg)
    if not path.exists():
        raise CliError(f"domain {arg!r} is neither registered nor a file")
    schema, reference = parse_domain(path.read_text())
    return schema, reference, None


def _domain_of_traces(path: Path) -> str:
    from .pddl import Atom, Group, read_sexprs

    for top in read_sexprs(path.read_text()):
        if isinstance(top, Group):
            for item in top.items:
                if (isinstance(item, Group) and item.items
                        and isinstance(item.items[0], Atom)
                        and item.items[0].text == ":domain"):
                    return item.items[1].text  # type: ignore[union-attr]
    raise CliError(f"{path} has no (:domain ...) header")


def _resolve_for_traces(args) -> tuple:
    domain_arg = getattr(args, "domain", None) or _domain_of_traces(Path(args.traces))
    schema, reference, info = _load_domain(domain_arg)
    traces = parse_traces(Path(args.traces).read_text(), schema)
    return schema, reference, info, traces


def _cmd_generate(args) -> int:
    schema, reference, info = _load_domain(args.domain)
    if info is not None:
        sampler = info.sampler
        ranges = dict(info.default_ranges)
        unitary = parse_problem(info.unitary_text(), schema)
    else:
        if not args.unitary:
            raise CliError("unregistered domains need --unitary")
        unitary = parse_problem(Path(args.unitary).read_text(), schema)
        sampler = domain_registry.fixed_sampler(unitary.object_table(), unitary.init)
        ranges = {}
    spec = GenerationSpec(
        problem_count=args.count,
        object_count_ranges=ranges,
        trace_targets=doubling_schedule(args.count),
        rng_seed=args.seed,
    )
    cfg = PlannerConfig(strategy=args.strategy, max_expansions=args.max_expansions,
                        rng_seed=args.seed)
    traces = generate_traces(spec, reference, cfg, sampler)
    Path(args.out).write_text(serialize_traces(traces, schema.name))
    print(f"wrote {len(traces)} traces to {args.out}")
    return 0


def _cmd_enumerate(args) -> int:
    schema, _, _ = _load_domain(args.domain)
    space = cand.build_space(schema, args.strict_del, args.max_rel)
    Path(args.out).write_text(cand.write_candidates(space))
    for action, count in sorted(space.counts().items()):
        print(f"{action}: {count} candidates")
    print(f"total: {space.total_candidates()} candidate actions; "
          f"model space size {cand.space_size(space)}")
    return 0


def _cmd_mine(args) -> int:
    _, _, _, traces = _resolve_for_traces(args)
    db = SequenceDatabase.from_traces(traces)
    schedule = (tuple(int(s) for s in args.schedule.split(","))
                if args.schedule else doubling_schedule(len(db)))
    databases = [db.prefix(point) for point in schedule]
    report = stability_scan(databases, args.min_support, args.min_confidence,
                            args.tolerance)
    text = render_rules_text(report)
    Path(args.out).write_text(rules_report_json(report))
    if args.out_text:
        Path(args.out_text).write_text(text)
    print(text, end="")
    print("frequent pairs: " + ", ".join(f"{a}->{b}" for a, b in frequent_pairs(report)))
    return 0


def _cmd_prune(args) -> int:
    schema, _, _ = _load_domain(args.domain)
    space = cand.read_candidates(Path(args.candidates).read_text(), schema)
    rules = json.loads(Path(args.rules).read_text())
    pairs = [tuple(p) for p in rules["frequent_pairs"]]
    result = prune_candidates(space, pairs)
    Path(args.out).write_text(cand.write_candidates(result.space))
    stats = result.stats
    for action in sorted(stats.initial_counts):
        print(f"{action}: {stats.initial_counts[action]} -> {stats.final_counts[action]}")
    print(f"total: {stats.initial_total} -> {stats.final_total} "
          f"({stats.percent_reduction:.2f}% reduction, "
          f"{stats.pair_evaluations} pair evaluations)")
    return 0


def _cmd_sample(args) -> int:
    schema, reference, info = _load_domain(args.domain)
    space = cand.read_candidates(Path(args.candidates).read_text(), schema)
    if args.unitary:
        unitary = parse_problem(Path(args.unitary).read_text(), schema)
    elif info is not None:
        unitary = parse_problem(info.unitary_text(), schema)
    else:
        raise CliError("unregistered domains need --unitary")
    cfg = PlannerConfig(strategy=args.strategy, max_expansions=args.max_expansions,
                        rng_seed=args.seed)
    sampled = sample_models(space, unitary, cfg, args.budget, rng_seed=args.seed,
                            include_reference=args.include_reference,
                            reference=reference)
    Path(args.out).write_text(manifest_json(sampled, space))
    print(f"sampled {len(sampled)} viable models to {args.out}")
    return 0


def _train_config(args) -> TrainConfig:
    return TrainConfig(
        hidden_units=args.hidden,
        dropout_rate=args.dropout,
        epochs=args.epochs,
        folds=args.folds,
        learning_rate=args.lr,
        rng_seed=args.seed,
    )


def _cmd_train(args) -> int:
    schema, _, _, traces = _resolve_for_traces(args)
    layout = build_layout(schema)
    folds = train_folds(traces, layout, _train_config(args))
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    for fold in folds:
        save_params(out_dir / f"params-fold{fold.fold_index}.bin", fold.params,
                    layout_hash=layout.layout_hash(),
                    extra={"fold": fold.fold_index, "seed": args.seed})
        print(f"fold {fold.fold_index}: loss {fold.loss_history[0]:.4f} -> "
              f"{fold.loss_history[-1]:.4f}")
    return 0


def _cmd_select(args) -> int:
    schema, _, _, traces = _resolve_for_traces(args)
    layout = build_layout(schema)
    sampled = manifest_load(Path(args.models).read_text(), schema)
    folds = train_folds(traces, layout, _train_config(args))
    scores, selected = score_models(folds, traces, sampled, layout)
    Path(args.out).write_text(scores_json(scores, selected))
    best = next(s for s in scores if s.model_id == selected)
    print(f"selected {selected} with mean accuracy "
          f"{float(best.mean_accuracy) * 100.0:.2f}%")
    return 0


def _cmd_pipeline(args) -> int:
    config = parse_config(Path(args.config).read_text())
    try:
        run = run_pipeline(config, Path(args.out_root))
    except PhaseError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.exit_code
    report = run.report
    print((run.run_dir / "report.txt").read_text(), end="")
    print(f"artifacts in {run.run_dir}")
    return 0 if report is not None else 1


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="pdeeplearn",
        description="Learn STRIPS action models from state-action plan traces.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("generate", help="generate traces with the reference model")
    p.add_argument("--domain", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--count", type=int, default=100)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--strategy", default="breadth-first",
                   choices=("breadth-first", "greedy-by-goal-count"))
    p.add_argument("--max-expansions", type=int, default=100_000)
    p.add_argument("--unitary", default="")
    p.set_defaults(func=_cmd_generate)

    p = sub.add_parser("enumerate", help="enumerate candidate action sets")
    p.add_argument("--domain", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--strict-del", action="store_true")
    p.add_argument("--max-rel", type=int, default=16)
    p.set_defaults(func=_cmd_enumerate)

    p = sub.add_parser("mine", help="mine sequential rules and stability")
    p.add_argument("--traces", required=True)
    p.add_argument("--domain", default="")
    p.add_argument("--min-support", default="0.4")
    p.add_argument("--min-confidence", default="0.6")
    p.add_argument("--schedule", default="")
    p.add_argument("--tolerance", default="0.1")
    p.add_argument("--out", required=True, help="rules JSON output")
    p.add_argument("--out-text", default="")
    p.set_defaults(func=_cmd_mine)

    p = sub.add_parser("prune", help="filter candidates by pair constraints")
    p.add_argument("--candidates", required=True)
    p.add_argument("--rules", required=True, help="rules JSON from 'mine'")
    p.add_argument("--domain", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_prune)

    p = sub.add_parser("sample", help="sample planner-viable models")
    p.add_argument("--candidates", required=True)
    p.add_argument("--domain", required=True)
    p.add_argument("--unitary", default="")
    p.add_argument("--budget", type=int, default=50)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--include-reference", action="store_true")
    p.add_argument("--strategy", default="breadth-first",
                   choices=("breadth-first", "greedy-by-goal-count"))
    p.add_argument("--max-expansions", type=int, default=100_000)
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_sample)

    for name, help_text in (("train", "train the fold networks"),
                            ("select", "train folds and score sampled models")):
        p = sub.add_parser(name, help=help_text)
        p.add_argument("--traces", required=True)
        p.add_argument("--domain", default="")
        p.add_argument("--hidden", type=int, default=128)
        p.add_argument("--dropout", type=float, default=0.8)
        p.add_argument("--epochs", type=int, default=10)
        p.add_argument("--folds", type=int, default=5)
        p.add_argument("--seed", type=int, default=0)
        p.add_argument("--lr", type=float, default=1e-3)
        if name == "train":
            p.add_argument("--out-dir", required=True)
            p.set_defaults(func=_cmd_train)
        else:
            p.add_argument("--models", required=True)
            p.add_argument("--out", required=True)
            p.set_defaults(func=_cmd_select)

    p = sub.add_parser("pipeline", help="run every phase end to end")
    p.add_argument("--config", required=True)
    p.add_argument("--out-root", default="runs")
    p.set_defaults(func=_cmd_pipeline)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except SystemExit:
        raise
    except PhaseError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.exit_code
    except Exception as exc:  # located parse errors, bad inputs, ...
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
