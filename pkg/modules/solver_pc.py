"""Constraint-based baseline: find the machine's parents by conditional independence
tests, estimate its conditional probability table and read queries off it."""
import logging
from dataclasses import dataclass, field
from enum import Enum
from itertools import combinations
from typing import Dict, Iterable, List, Optional, Sequence, Tuple

import numpy as np

from config.settings import PCConfig
from modules.models import ContextTrial, Label, MachineState, ProblemView
from modules.solver_base import BaseSolver, Scores

logger = logging.getLogger(__name__)


class CIVerdict(str, Enum):
    INDEPENDENT = "independent"
    DEPENDENT = "dependent"


@dataclass(frozen=True)
class BinarySample:
    """Rows are trials; columns are object presence in object_ids order, machine last"""

    rows: np.ndarray = field(compare=False)
    object_ids: Tuple[int, ...]

    @property
    def machine(self) -> int:
        return self.rows.shape[1] - 1

    def column_of(self, object_id: int) -> int:
        return self.object_ids.index(object_id)


def build_binary_sample(
    context: Sequence[ContextTrial], object_ids: Optional[Sequence[int]] = None
) -> BinarySample:
    ids = tuple(sorted(object_ids if object_ids is not None else {o for t in context for o in t.object_ids}))
    column = {o: k for k, o in enumerate(ids)}
    rows = np.zeros((len(context), len(ids) + 1), dtype=np.int8)
    for r, trial in enumerate(context):
        for o in trial.object_ids:
            rows[r, column[o]] = 1
        rows[r, -1] = trial.machine_state == MachineState.ON
    return BinarySample(rows=rows, object_ids=ids)


def _mutual_information(x: np.ndarray, y: np.ndarray) -> float:
    joint = np.bincount(2 * x.astype(np.int64) + y.astype(np.int64), minlength=4).reshape(2, 2) / len(x)
    px = joint.sum(axis=1, keepdims=True)
    py = joint.sum(axis=0, keepdims=True)
    nz = joint > 0
    return float((joint[nz] * np.log(joint[nz] / (px @ py)[nz])).sum())


def conditional_mutual_information(data: BinarySample, i: int, j: int, S: Sequence[int] = ()) -> float:
    """CMI in nats; strata of S with no rows contribute nothing"""
    rows = data.rows
    if not len(S):
        return _mutual_information(rows[:, i], rows[:, j])
    _, strata = np.unique(rows[:, list(S)], axis=0, return_inverse=True)
    strata = strata.reshape(-1)
    total = 0.0
    for s in np.unique(strata):
        mask = strata == s
        total += mask.mean() * _mutual_information(rows[mask, i], rows[mask, j])
    return total


def ci_test(data: BinarySample, i: int, j: int, S: Sequence[int] = (), eps_ci: float = 0.01) -> CIVerdict:
    if i == j or i in S or j in S:
        raise ValueError("ci_test needs distinct i, j outside the conditioning set")
    cmi = conditional_mutual_information(data, i, j, S)
    return CIVerdict.DEPENDENT if cmi > eps_ci else CIVerdict.INDEPENDENT


def learn_parents(data: BinarySample, eps_ci: float = 0.01, max_condition_size: int = 2) -> Tuple[int, ...]:
    """Objects whose dependence with the machine survives every small conditioning set"""
    machine = data.machine
    columns = range(machine)
    parents = []
    for o in columns:
        others = [c for c in columns if c != o]
        separated = any(
            ci_test(data, o, machine, S, eps_ci) == CIVerdict.INDEPENDENT
            for size in range(max_condition_size + 1)
            for S in combinations(others, size)
        )
        if not separated:
            parents.append(data.object_ids[o])
    return tuple(parents)


@dataclass(frozen=True)
class Cpt:
    parents: Tuple[int, ...]
    table: Dict[str, float]

    def key(self, config: Iterable[int]) -> str:
        present = set(config)
        return "".join("1" if p in present else "0" for p in self.parents)

    def lookup(self, config: Iterable[int]) -> Optional[float]:
        """P(on | parent configuration), None when the configuration was never observed"""
        return self.table.get(self.key(config))


def estimate_cpt(data: BinarySample, parents: Sequence[int]) -> Cpt:
    columns = [data.column_of(p) for p in parents]
    lit: Dict[str, int] = {}
    seen: Dict[str, int] = {}
    for row in data.rows:
        key = "".join(str(int(row[c])) for c in columns)
        seen[key] = seen.get(key, 0) + 1
        lit[key] = lit.get(key, 0) + int(row[data.machine])
    return Cpt(parents=tuple(parents), table={k: lit[k] / n for k, n in sorted(seen.items())})


def label_from_cpt_probability(p: Optional[float], delta: float = 0.1) -> Label:
    if p is None:
        return Label.UNDETERMINED
    if p >= 0.5 + delta:
        return Label.ACTIVATED
    if p <= 0.5 - delta:
        return Label.INACTIVATED
    return Label.UNDETERMINED


def predict_pc(cpt: Cpt, config: Iterable[int], delta: float = 0.1) -> Label:
    return label_from_cpt_probability(cpt.lookup(config), delta)


class PCSolver(BaseSolver):
    name = "pc"

    def __init__(self, config: Optional[PCConfig] = None):
        self.config = config or PCConfig()

    def fit(self, context: Sequence[ContextTrial]) -> Cpt:
        data = build_binary_sample(context)
        parents = learn_parents(data, self.config.eps_ci, self.config.max_condition_size)
        logger.debug(f"PC parents {parents} over objects {data.object_ids}")
        return estimate_cpt(data, parents)

    def score_problem(self, view: ProblemView) -> Scores:
        cpt = self.fit(view.context)
        return [cpt.lookup(q.object_ids) for q in view.queries]

    def decide(self, scores: Scores, params: Optional[Dict[str, float]] = None) -> List[Label]:
        delta = (params or {}).get("delta", self.config.delta)
        return [label_from_cpt_probability(s, delta) for s in scores]

    def param_grid(self) -> List[Dict[str, float]]:
        return [{"delta": round(float(d), 2)} for d in np.arange(0.0, 0.5, 0.05)]

    def with_params(self, params: Dict[str, float]) -> "PCSolver":
        return PCSolver(PCConfig.model_validate({**self.config.model_dump(), **params}))
