from pydantic import BaseModel, ConfigDict, Field
from typing import Dict, List, Optional, Tuple
from enum import Enum


class Shape(str, Enum):
    CUBE = "cube"
    SPHERE = "sphere"
    CYLINDER = "cylinder"


class Material(str, Enum):
    METAL = "metal"
    RUBBER = "rubber"


class Color(str, Enum):
    GRAY = "gray"
    RED = "red"
    BLUE = "blue"
    GREEN = "green"
    BROWN = "brown"
    CYAN = "cyan"
    PURPLE = "purple"
    YELLOW = "yellow"


class MachineState(str, Enum):
    OFF = "off"
    ON = "on"


class QueryKind(str, Enum):
    INDEPENDENT = "independent"
    INTERVENTIONAL = "interventional"


class Label(str, Enum):
    INACTIVATED = "inactivated"
    UNDETERMINED = "undetermined"
    ACTIVATED = "activated"


class QueryType(str, Enum):
    DIRECT = "direct"
    INDIRECT = "indirect"
    SCREENING_OFF = "screening_off"
    BACKWARD_BLOCKING = "backward_blocking"


class Blicketness(str, Enum):
    BLICKET = "blicket"
    NON_BLICKET = "non_blicket"
    UNDETERMINED = "undetermined"


class Split(str, Enum):
    IID = "iid"
    COMP = "comp"
    SYS = "sys"


class Fold(str, Enum):
    TRAIN = "train"
    VAL = "val"
    TEST = "test"


# Fixed orders used for confusion matrices and report rows
LABEL_ORDER: Tuple[Label, ...] = (Label.INACTIVATED, Label.UNDETERMINED, Label.ACTIVATED)
QUERY_TYPE_ORDER: Tuple[QueryType, ...] = (
    QueryType.DIRECT,
    QueryType.INDIRECT,
    QueryType.SCREENING_OFF,
    QueryType.BACKWARD_BLOCKING,
)

Attributes = Tuple[Shape, Material, Color]

CONTEXT_SIZE = 6
FAMILIARIZATION_SIZE = 3
QUERY_COUNT = 4
MIN_OBJECTS = 5
MAX_OBJECTS = 8


def attribute_space() -> List[Attributes]:
    """All 48 (shape, material, color) triples, shape-major then material then color"""
    return [(shape, material, color) for shape in Shape for material in Material for color in Color]


class _Frozen(BaseModel):
    model_config = ConfigDict(frozen=True)


class ObjectSpec(_Frozen):
    id: int = Field(..., ge=0)
    shape: Shape
    material: Material
    color: Color
    is_blicket: bool = False

    @property
    def attributes(self) -> Attributes:
        return (self.shape, self.material, self.color)


class ContextTrial(_Frozen):
    object_ids: Tuple[int, ...] = Field(..., min_length=1)
    machine_state: MachineState


class Query(_Frozen):
    # For interventional queries object_ids is the full configuration: base trial objects plus added ones
    object_ids: Tuple[int, ...] = Field(..., min_length=1)
    kind: QueryKind
    base_trial_index: Optional[int] = None
    label: Label
    query_type: QueryType


class Problem(_Frozen):
    problem_id: str
    seed: int = Field(..., ge=0, lt=2**64)
    split: Split
    fold: Fold
    objects: Tuple[ObjectSpec, ...]
    context: Tuple[ContextTrial, ...]
    queries: Tuple[Query, ...]

    @property
    def blicket_ids(self) -> Tuple[int, ...]:
        return tuple(o.id for o in self.objects if o.is_blicket)

    @property
    def n_objects(self) -> int:
        return len(self.objects)


class Dataset(_Frozen):
    split: Split
    master_seed: int = 0
    problems: Tuple[Problem, ...]
    fold_counts: Dict[Fold, int]

    def fold(self, fold: Fold) -> List[Problem]:
        return [p for p in self.problems if p.fold == fold]


class QueryView(_Frozen):
    object_ids: Tuple[int, ...]
    kind: QueryKind
    base_trial_index: Optional[int] = None


class ProblemView(_Frozen):
    """What a solver may see: context and unlabeled queries, no hidden flags"""

    problem_id: str
    seed: int
    object_ids: Tuple[int, ...]
    context: Tuple[ContextTrial, ...]
    queries: Tuple[QueryView, ...]


def redact(problem: Problem) -> ProblemView:
    """Strip the solution section and the query labels/types"""
    return ProblemView(
        problem_id=problem.problem_id,
        seed=problem.seed,
        object_ids=tuple(o.id for o in problem.objects),
        context=problem.context,
        queries=tuple(
            QueryView(object_ids=q.object_ids, kind=q.kind, base_trial_index=q.base_trial_index)
            for q in problem.queries
        ),
    )


class Prediction(_Frozen):
    problem_id: str
    labels: Tuple[Label, ...] = Field(..., min_length=QUERY_COUNT, max_length=QUERY_COUNT)


class Metrics(_Frozen):
    query_accuracy: float = Field(..., ge=0, le=1)
    problem_accuracy: float = Field(..., ge=0, le=1)
    per_type_accuracy: Dict[QueryType, Optional[float]]
    # rows: ground truth, columns: prediction, both in LABEL_ORDER
    per_label_confusion: Tuple[Tuple[int, int, int], Tuple[int, int, int], Tuple[int, int, int]]
    n_problems: int = Field(..., ge=0)


class ReportSummary(_Frozen):
    """Metrics keyed by split then solver"""

    entries: Dict[str, Dict[str, Metrics]]
