"""Covariation baseline: Blicketness as co-occurrence with an activated machine."""
from dataclasses import dataclass
from typing import Dict, Iterable, List, Optional, Sequence

import numpy as np

from config.settings import RWConfig
from modules.models import ContextTrial, Label, MachineState, ProblemView
from modules.solver_base import BaseSolver, Scores


@dataclass(frozen=True)
class ScoreTable:
    score: Dict[int, float]

    def __getitem__(self, object_id: int) -> float:
        return self.score.get(object_id, 0.0)


def fit_scores(context: Sequence[ContextTrial]) -> ScoreTable:
    """score(o) = on-trials containing o / trials containing o"""
    seen: Dict[int, int] = {}
    lit: Dict[int, int] = {}
    for trial in context:
        for o in trial.object_ids:
            seen[o] = seen.get(o, 0) + 1
            if trial.machine_state == MachineState.ON:
                lit[o] = lit.get(o, 0) + 1
    return ScoreTable(score={o: lit.get(o, 0) / n for o, n in sorted(seen.items())})


def fit_scores_iterative(
    context: Sequence[ContextTrial], learning_rate: float = 0.25, epochs: int = 10
) -> ScoreTable:
    """Associative strengths from repeated error-driven updates over the trials"""
    ids = sorted({o for t in context for o in t.object_ids})
    column = {o: k for k, o in enumerate(ids)}
    strength = np.zeros(len(ids))
    for _ in range(epochs):
        for trial in context:
            present = [column[o] for o in trial.object_ids]
            target = 1.0 if trial.machine_state == MachineState.ON else 0.0
            error = target - strength[present].sum()
            strength[present] += learning_rate * error
    strength = np.clip(strength, 0.0, 1.0)
    return ScoreTable(score={o: float(strength[column[o]]) for o in ids})


def max_score(scores: ScoreTable, config: Iterable[int]) -> float:
    return max((scores[o] for o in config), default=0.0)


def predict_rw(scores: ScoreTable, config: Iterable[int], theta: float = 0.5) -> Label:
    # no epistemic third state; ties go to activated
    return Label.ACTIVATED if max_score(scores, config) >= theta else Label.INACTIVATED


class RWSolver(BaseSolver):
    name = "rw"

    def __init__(self, config: Optional[RWConfig] = None):
        self.config = config or RWConfig()

    def fit(self, context: Sequence[ContextTrial]) -> ScoreTable:
        if self.config.variant == "iterative":
            return fit_scores_iterative(context, self.config.learning_rate, self.config.epochs)
        return fit_scores(context)

    def score_problem(self, view: ProblemView) -> Scores:
        table = self.fit(view.context)
        return [max_score(table, q.object_ids) for q in view.queries]

    def decide(self, scores: Scores, params: Optional[Dict[str, float]] = None) -> List[Label]:
        theta = (params or {}).get("theta", self.config.theta)
        return [Label.ACTIVATED if (s or 0.0) >= theta else Label.INACTIVATED for s in scores]

    def param_grid(self) -> List[Dict[str, float]]:
        return [{"theta": round(float(t), 2)} for t in np.linspace(0.05, 1.0, 20)]

    def with_params(self, params: Dict[str, float]) -> "RWSolver":
        return RWSolver(RWConfig.model_validate({**self.config.model_dump(), **params}))
