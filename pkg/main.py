# main.py
import argparse
import logging
import sys
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Tuple

from dotenv import load_dotenv
from pydantic import ValidationError

# Import after environment setup
load_dotenv(".env")

from config.settings import GenConfig, load_solver_config, settings
from modules import oracle
from modules.evaluator import build_solver, calibrate, calibrated_config, evaluate_fold, select_fold, solve_dataset
from modules.exceptions import BlicketError, EvaluationError
from modules.generator import generate_split, label_shares, query_type_shares, scene_descriptor
from modules.models import Metrics, Problem, ReportSummary, Split
from modules.report import render_report, write_report
from modules.serialization import read_predictions, read_problems, write_predictions, write_problems, write_records
from modules.validation import validate_problem

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_ERROR = 1
EXIT_CONFIG = 2
EXIT_UNEXPECTED = 3


def setup_logging():
    """Configure logging for the application"""
    handlers: List[logging.Handler] = [logging.StreamHandler(sys.stderr)]
    log_file = settings.log_file
    if log_file is not None:
        log_file.parent.mkdir(parents=True, exist_ok=True)
        handlers.append(logging.FileHandler(log_file))

    logging.basicConfig(
        level=getattr(logging, settings.LOG_LEVEL.upper(), logging.INFO),
        format="%(asctime)s - %(name)s - %(levelname)s - %(message)s",
        handlers=handlers,
        force=True,
    )


def cmd_generate(args: argparse.Namespace) -> int:
    config = GenConfig(split=args.split, problems_per_split=args.count)
    dataset = generate_split(Split(args.split), config, args.seed, args.workers)
    invalid = [(p.problem_id, v) for p in dataset.problems if (v := validate_problem(p))]
    if invalid:
        problem_id, violations = invalid[0]
        raise BlicketError(f"{len(invalid)} generated problems failed validation, first {problem_id}: {violations}")
    write_problems(args.out, dataset.problems)
    if args.scenes:
        write_records(args.scenes, (scene_descriptor(p) for p in dataset.problems))
    types = query_type_shares(dataset.problems)
    logger.info(f"Query types: {dict((k, round(v, 4)) for k, v in types.items())}")
    return EXIT_OK


def cmd_solve(args: argparse.Namespace) -> int:
    config = load_solver_config(args.config)
    problems = read_problems(args.data)
    solver = build_solver(args.solver, config, args.seed)
    if args.calibrate:
        solver, _, _ = calibrate(solver, problems, args.workers)
    result = solve_dataset(solver, select_fold(problems, args.fold), args.workers, bool(args.diagnostics))
    write_predictions(args.out, result.predictions)
    if args.diagnostics:
        count = write_records(args.diagnostics, result.diagnostics)
        unconverged = sum(1 for d in result.diagnostics if d.get("h_unconverged"))
        logger.info(f"Wrote {count} diagnostic records to {args.diagnostics} ({unconverged} unconverged)")
    return EXIT_OK


def cmd_calibrate(args: argparse.Namespace) -> int:
    config = load_solver_config(args.config)
    problems = read_problems(args.data)
    solver = build_solver(args.solver, config, args.seed)
    _, params, metrics = calibrate(solver, problems, args.workers)
    tuned = calibrated_config(args.solver, config, params)
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    out.write_text(tuned.model_dump_json(indent=2) + "\n", encoding="utf-8")
    if metrics is not None:
        print(f"{args.solver}: {params} -> query {metrics.query_accuracy:.4f}, problem {metrics.problem_accuracy:.4f}")
    return EXIT_OK


def _pred_label(entry: str) -> Tuple[str, Path]:
    """NAME=FILE, or FILE with the file stem as solver name"""
    if "=" in entry:
        name, path = entry.split("=", 1)
        return name, Path(path)
    return Path(entry).stem, Path(entry)


def cmd_evaluate(args: argparse.Namespace) -> int:
    datasets: Dict[Path, List[Problem]] = {Path(d): read_problems(d) for d in args.data}
    entries: Dict[str, Dict[str, Metrics]] = {}
    for entry in args.pred:
        name, path = _pred_label(entry)
        predictions = read_predictions(path)
        ids = {p.problem_id for p in predictions}
        matches = [(d, probs) for d, probs in datasets.items() if ids & {p.problem_id for p in probs}]
        if not matches:
            raise EvaluationError(extra=ids)
        for data_path, problems in matches:
            split = problems[0].split.value if problems else data_path.stem
            metrics = evaluate_fold(predictions, problems, args.fold)
            entries.setdefault(split, {})[name] = metrics
            logger.info(
                f"{name} on {split}/{args.fold}: query {metrics.query_accuracy:.4f}, "
                f"problem {metrics.problem_accuracy:.4f} ({metrics.n_problems} problems)"
            )
    summary = ReportSummary(entries=entries)
    if args.report:
        write_report(summary, args.report)
    print(render_report(summary), end="")
    return EXIT_OK


def _describe(problem: Problem) -> str:
    hs = oracle.consistent_hypotheses(problem.context, problem.n_objects)
    lines = [f"{problem.problem_id} (split {problem.split.value}, fold {problem.fold.value}, seed {problem.seed})"]
    lines.append("objects:")
    for o in problem.objects:
        lines.append(
            f"  {o.id}: {o.color.value} {o.material.value} {o.shape.value}"
            f"  blicket={o.is_blicket}  oracle={oracle.blicketness(hs, o.id).value}"
        )
    lines.append("context:")
    for i, t in enumerate(problem.context):
        lines.append(f"  [{i}] {list(t.object_ids)} -> {t.machine_state.value}")
    lines.append(f"consistent hypotheses: {[sorted(h) for h in hs.hypotheses]}")
    lines.append("queries:")
    for q in problem.queries:
        base = f" base [{q.base_trial_index}]" if q.base_trial_index is not None else ""
        lines.append(f"  {q.kind.value}{base} {list(q.object_ids)} -> {q.label.value} ({q.query_type.value})")
    violations = validate_problem(problem)
    lines.append(f"validation: {', '.join(violations) if violations else 'ok'}")
    return "\n".join(lines)


def _stats(problems: Sequence[Problem]) -> str:
    lines = [f"{len(problems)} problems"]
    for fold in ("train", "val", "test"):
        subset = select_fold(problems, fold)
        lines.append(f"{fold}: {len(subset)} problems")
        if subset:
            labels = label_shares(subset)
            lines.append("  labels: " + ", ".join(f"{k.value} {v:.3f}" for k, v in labels.items()))
            types = query_type_shares(subset)
            lines.append("  types:  " + ", ".join(f"{k} {v:.3f}" for k, v in types.items()))
    return "\n".join(lines)


def cmd_inspect(args: argparse.Namespace) -> int:
    problems = read_problems(args.data)
    if args.stats:
        print(_stats(problems))
    if args.problem:
        found = [p for p in problems if p.problem_id == args.problem]
        if not found:
            raise BlicketError(f"problem {args.problem} not found in {args.data}")
        print(_describe(found[0]))
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="blicket", description="Blicket causal-induction workbench")
    sub = parser.add_subparsers(dest="command", required=True)

    gen = sub.add_parser("generate", help="generate a dataset split as JSONL")
    gen.add_argument("--split", choices=[s.value for s in Split], required=True)
    gen.add_argument("--count", type=int, default=settings.PROBLEMS_PER_SPLIT)
    gen.add_argument("--seed", type=int, default=settings.MASTER_SEED)
    gen.add_argument("--out", required=True)
    gen.add_argument("--scenes", help="optional sidecar with object positions")
    gen.add_argument("--workers", type=int, default=None)
    gen.set_defaults(func=cmd_generate)

    solve = sub.add_parser("solve", help="predict query labels for a dataset")
    solve.add_argument("--solver", choices=["rw", "pc", "opt", "always_on", "random"], required=True)
    solve.add_argument("--data", required=True)
    solve.add_argument("--out", required=True)
    solve.add_argument("--config")
    solve.add_argument("--fold", choices=["train", "val", "test", "all"], default="all")
    solve.add_argument("--calibrate", action="store_true", help="tune thresholds on the val fold first")
    solve.add_argument("--diagnostics", help="per-problem SEM diagnostics (opt only)")
    solve.add_argument("--seed", type=int, default=settings.MASTER_SEED)
    solve.add_argument("--workers", type=int, default=None)
    solve.set_defaults(func=cmd_solve)

    ev = sub.add_parser("evaluate", help="score predictions and render a report")
    ev.add_argument("--data", action="append", required=True)
    ev.add_argument("--pred", action="append", required=True, help="FILE or NAME=FILE, repeatable")
    ev.add_argument("--report")
    ev.add_argument("--fold", choices=["train", "val", "test", "all"], default="test")
    ev.set_defaults(func=cmd_evaluate)

    ins = sub.add_parser("inspect", help="show one problem with oracle annotations")
    ins.add_argument("--data", required=True)
    ins.add_argument("--problem")
    ins.add_argument("--stats", action="store_true", help="label and query-type distribution per fold")
    ins.set_defaults(func=cmd_inspect)

    cal = sub.add_parser("calibrate", help="tune decision thresholds on the val fold")
    cal.add_argument("--solver", choices=["rw", "pc", "opt"], required=True)
    cal.add_argument("--data", required=True)
    cal.add_argument("--out", required=True)
    cal.add_argument("--config")
    cal.add_argument("--seed", type=int, default=settings.MASTER_SEED)
    cal.add_argument("--workers", type=int, default=None)
    cal.set_defaults(func=cmd_calibrate)
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.command == "inspect" and not (args.problem or args.stats):
        parser.error("inspect needs --problem ID, --stats or both")
    setup_logging()
    for problem in settings.validate():
        logger.warning(f"Configuration: {problem}")
    try:
        return args.func(args)
    except ValidationError as e:
        logger.error(f"Invalid configuration: {e}")
        return EXIT_CONFIG
    except (BlicketError, OSError) as e:
        logger.error(f"{args.command} failed: {e}")
        return EXIT_ERROR
    except Exception as e:
        logger.error(f"Unhandled exception in {args.command}: {e}", exc_info=True)
        return EXIT_UNEXPECTED


if __name__ == "__main__":
    sys.exit(main())
