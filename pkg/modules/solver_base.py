from abc import ABC, abstractmethod
from typing import Dict, List, Optional, Sequence

from modules.models import Label, Prediction, ProblemView

# One raw score per query; None means the solver has no evidence for that configuration
Scores = List[Optional[float]]


class BaseSolver(ABC):
    name: str = "base"

    @abstractmethod
    def score_problem(self, view: ProblemView) -> Scores:
        """Threshold-free per-query scores"""

    @abstractmethod
    def decide(self, scores: Scores, params: Optional[Dict[str, float]] = None) -> List[Label]:
        """Map raw scores to labels, optionally overriding the decision thresholds"""

    def param_grid(self) -> List[Dict[str, float]]:
        """Threshold settings tried by calibration; empty when nothing is tunable"""
        return []

    def with_params(self, params: Dict[str, float]) -> "BaseSolver":
        return self

    def predict(self, view: ProblemView) -> Prediction:
        return Prediction(problem_id=view.problem_id, labels=tuple(self.decide(self.score_problem(view))))

    def predict_many(self, views: Sequence[ProblemView]) -> List[Prediction]:
        return [self.predict(v) for v in views]
