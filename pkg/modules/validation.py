from typing import List, Set

from modules.exceptions import InconsistentContextError
from modules.models import (
    CONTEXT_SIZE,
    FAMILIARIZATION_SIZE,
    MAX_OBJECTS,
    MIN_OBJECTS,
    QUERY_COUNT,
    MachineState,
    Problem,
    QueryKind,
)
from modules import oracle


def validate_problem(problem: Problem) -> List[str]:
    """Return the names of every violated invariant; empty means valid"""
    violations: List[str] = []

    def flag(name: str) -> None:
        if name not in violations:
            violations.append(name)

    ids = [o.id for o in problem.objects]
    known: Set[int] = set(ids)
    blickets = set(problem.blicket_ids)

    if not MIN_OBJECTS <= len(problem.objects) <= MAX_OBJECTS:
        flag("object-count")
    if ids != list(range(len(ids))):
        flag("object-ids")
    if len({o.attributes for o in problem.objects}) != len(problem.objects):
        flag("attribute-unique")
    if len(problem.context) != CONTEXT_SIZE:
        flag("context-size")
    if len(problem.queries) != QUERY_COUNT:
        flag("query-count")

    for trial in problem.context:
        if not set(trial.object_ids) <= known:
            flag("dangling-reference")
        lit = bool(set(trial.object_ids) & blickets)
        if lit != (trial.machine_state == MachineState.ON):
            flag("mechanism-consistency")

    familiarization = problem.context[:FAMILIARIZATION_SIZE]
    if len(familiarization) == FAMILIARIZATION_SIZE:
        solos = [t for t in familiarization[:2] if len(t.object_ids) == 1]
        pair = familiarization[2]
        on_count = sum(t.machine_state == MachineState.ON for t in familiarization)
        solo_ids = {t.object_ids[0] for t in solos}
        if len(solos) != 2 or set(pair.object_ids) != solo_ids or len(solo_ids) != 2 or on_count != 2:
            flag("familiarization-shape")
        main_ids = {i for t in problem.context[FAMILIARIZATION_SIZE:] for i in t.object_ids}
        if main_ids & solo_ids:
            flag("main-disjoint")

    independent_objects: List[int] = []
    interventions: List[tuple] = []
    for query in problem.queries:
        if not set(query.object_ids) <= known:
            flag("dangling-reference")
        if query.kind == QueryKind.INDEPENDENT:
            if len(query.object_ids) != 1 or query.base_trial_index is not None:
                flag("independent-shape")
            independent_objects.extend(query.object_ids)
            continue
        index = query.base_trial_index
        if index is None or not 0 <= index < len(problem.context):
            flag("interventional-base")
            continue
        base = problem.context[index]
        if base.machine_state != MachineState.OFF or not set(base.object_ids) <= set(query.object_ids):
            flag("interventional-base")
        added = frozenset(query.object_ids) - frozenset(base.object_ids)
        if not added:
            flag("interventional-base")
        interventions.append((index, added))

    if len(set(independent_objects)) != len(independent_objects) or len(set(interventions)) != len(
        interventions
    ):
        flag("query-independence")

    # Labels are only defined against a context that obeys the machine mechanism
    premises_hold = not {"dangling-reference", "mechanism-consistency"} & set(violations)
    if premises_hold and len(problem.objects) <= oracle.MAX_ENUMERATED_OBJECTS:
        hs = oracle.consistent_hypotheses(problem.context, len(problem.objects))
        shapes_hold = not {"interventional-base", "independent-shape"} & set(violations)
        try:
            for query in problem.queries:
                if oracle.label_query(hs, query.object_ids) != query.label:
                    flag("label-consistency")
                elif shapes_hold and oracle.classify_query_type(problem.context, hs, query) != query.query_type:
                    flag("type-consistency")
        except InconsistentContextError:
            flag("context-inconsistent")

    return violations
