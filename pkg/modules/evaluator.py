"""Batch solving, baselines and threshold calibration."""
import logging
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Any, Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np

from config.settings import SolverConfig, settings
from modules.exceptions import ConfigError
from modules.generator import derive_seed
from modules.models import LABEL_ORDER, Fold, Label, Metrics, Prediction, Problem, ProblemView, redact
from modules.scoring import MetricsScorer, evaluate
from modules.solver_base import BaseSolver, Scores
from modules.solver_opt import OptSolver
from modules.solver_pc import PCSolver
from modules.solver_rw import RWSolver

logger = logging.getLogger(__name__)


class AlwaysOnSolver(BaseSolver):
    name = "always_on"

    def score_problem(self, view: ProblemView) -> Scores:
        return [None] * len(view.queries)

    def decide(self, scores: Scores, params: Optional[Dict[str, float]] = None) -> List[Label]:
        return [Label.ACTIVATED] * len(scores)


class RandomSolver(BaseSolver):
    """Uniform labels; each problem draws from its own stream so order and workers do not matter"""

    name = "random"

    def __init__(self, seed: int = 0):
        self.seed = seed

    def score_problem(self, view: ProblemView) -> Scores:
        rng = np.random.default_rng(derive_seed(self.seed, view.problem_id))
        return [float(i) for i in rng.integers(0, len(LABEL_ORDER), size=len(view.queries))]

    def decide(self, scores: Scores, params: Optional[Dict[str, float]] = None) -> List[Label]:
        return [LABEL_ORDER[int(s)] for s in scores]


SOLVERS: Dict[str, Callable[[SolverConfig, int], BaseSolver]] = {
    "rw": lambda config, seed: RWSolver(config.rw),
    "pc": lambda config, seed: PCSolver(config.pc),
    "opt": lambda config, seed: OptSolver(config.opt),
    "always_on": lambda config, seed: AlwaysOnSolver(),
    "random": lambda config, seed: RandomSolver(seed),
}
BASELINES = ("always_on", "random")


def build_solver(name: str, config: Optional[SolverConfig] = None, seed: int = 0) -> BaseSolver:
    if name not in SOLVERS:
        raise ConfigError(f"unknown solver '{name}', expected one of {', '.join(SOLVERS)}")
    return SOLVERS[name](config or SolverConfig(), seed)


@dataclass
class SolveResult:
    predictions: List[Prediction]
    scores: List[Scores]
    diagnostics: List[Dict[str, Any]] = field(default_factory=list)


def _solve_one(view: ProblemView, solver: BaseSolver, diagnostics: bool) -> Tuple[Scores, Optional[Dict[str, Any]]]:
    if diagnostics and isinstance(solver, OptSolver):
        return solver.solve_with_diagnostics(view)
    return solver.score_problem(view), None


def solve_dataset(
    solver: BaseSolver,
    problems: Sequence[Problem],
    workers: Optional[int] = None,
    diagnostics: bool = False,
) -> SolveResult:
    """Score every problem through its redacted view, then apply the solver's thresholds"""
    workers = workers or settings.WORKERS
    views = [redact(p) for p in problems]
    logger.info(f"Solving {len(views)} problems with {solver.name} ({workers} workers)")
    args = (views, [solver] * len(views), [diagnostics] * len(views))
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            outcomes = list(pool.map(_solve_one, *args, chunksize=8))
    else:
        outcomes = list(map(_solve_one, *args))

    scores = [s for s, _ in outcomes]
    predictions = [
        Prediction(problem_id=v.problem_id, labels=tuple(solver.decide(s))) for v, s in zip(views, scores)
    ]
    return SolveResult(
        predictions=predictions, scores=scores, diagnostics=[d for _, d in outcomes if d is not None]
    )


def baseline_predict(kind: str, problems: Sequence[Problem], seed: int = 0) -> List[Prediction]:
    if kind not in BASELINES:
        raise ConfigError(f"unknown baseline '{kind}'")
    return build_solver(kind, seed=seed).predict_many([redact(p) for p in problems])


def _metrics_for(solver: BaseSolver, problems: Sequence[Problem], scores: Sequence[Scores], params) -> Metrics:
    scorer = MetricsScorer()
    for problem, s in zip(problems, scores):
        scorer.add(problem, solver.decide(s, params))
    return scorer.metrics()


def calibrate(
    solver: BaseSolver, problems: Sequence[Problem], workers: Optional[int] = None
) -> Tuple[BaseSolver, Dict[str, float], Optional[Metrics]]:
    """Grid-search decision thresholds on the validation fold.

    Scores are computed once; each grid point only re-thresholds them. Ties in query
    accuracy go to problem accuracy, then to the earlier grid point.
    """
    grid = solver.param_grid()
    val = [p for p in problems if p.fold == Fold.VAL]
    if not grid or not val:
        logger.warning(f"Nothing to calibrate for {solver.name} ({len(val)} validation problems)")
        return solver, {}, None
    scores = solve_dataset(solver, val, workers).scores
    best_params: Dict[str, float] = {}
    best: Optional[Metrics] = None
    for params in grid:
        metrics = _metrics_for(solver, val, scores, params)
        if best is None or (metrics.query_accuracy, metrics.problem_accuracy) > (
            best.query_accuracy,
            best.problem_accuracy,
        ):
            best_params, best = params, metrics
    logger.info(
        f"Calibrated {solver.name} on {len(val)} validation problems: {best_params} "
        f"(query {best.query_accuracy:.4f}, problem {best.problem_accuracy:.4f})"
    )
    return solver.with_params(best_params), best_params, best


def calibrated_config(name: str, config: SolverConfig, params: Dict[str, float]) -> SolverConfig:
    """SolverConfig with the calibrated thresholds written into the solver's section"""
    if name not in ("rw", "pc", "opt") or not params:
        return config
    section = getattr(config, name)
    updated = type(section).model_validate({**section.model_dump(), **params})
    return config.model_copy(update={name: updated})


def select_fold(problems: Sequence[Problem], fold: str) -> List[Problem]:
    if fold == "all":
        return list(problems)
    return [p for p in problems if p.fold == Fold(fold)]


def evaluate_fold(predictions: Sequence[Prediction], problems: Sequence[Problem], fold: str = "test") -> Metrics:
    """Metrics on one fold; predictions for other folds of the same dataset are ignored"""
    selected = select_fold(problems, fold)
    other_folds = {p.problem_id for p in problems} - {p.problem_id for p in selected}
    return evaluate([p for p in predictions if p.problem_id not in other_folds], selected)

