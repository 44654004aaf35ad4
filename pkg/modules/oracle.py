"""Epistemic ground truth for Blicket contexts.

Enumerates every Blicket assignment that reproduces the observed trials under the
disjunctive (OR) machine, then reads labels and Blicketness off the surviving set.
"""
import logging
from dataclasses import dataclass, field
from typing import FrozenSet, Iterable, Sequence, Tuple, Union

import numpy as np

from modules.exceptions import InconsistentContextError
from modules.models import (
    Blicketness,
    ContextTrial,
    Label,
    MachineState,
    Query,
    QueryKind,
    QueryType,
    QueryView,
)

logger = logging.getLogger(__name__)

MAX_ENUMERATED_OBJECTS = 8


def _mask(object_ids: Iterable[int]) -> int:
    m = 0
    for i in object_ids:
        m |= 1 << i
    return m


@dataclass(frozen=True)
class HypothesisSet:
    hypotheses: Tuple[FrozenSet[int], ...]
    universe_size: int
    masks: np.ndarray = field(repr=False, compare=False)

    def __len__(self) -> int:
        return len(self.hypotheses)

    def __contains__(self, blickets: object) -> bool:
        return frozenset(blickets) in self.hypotheses  # type: ignore[arg-type]


def machine_state(hypothesis: Iterable[int], config: Iterable[int]) -> MachineState:
    """On iff at least one hypothesised Blicket is on the machine"""
    return MachineState.ON if set(hypothesis) & set(config) else MachineState.OFF


def consistent_hypotheses(context: Sequence[ContextTrial], n_objects: int) -> HypothesisSet:
    if n_objects > MAX_ENUMERATED_OBJECTS:
        raise ValueError(f"brute force supports at most {MAX_ENUMERATED_OBJECTS} objects, got {n_objects}")

    candidates = np.arange(1 << n_objects, dtype=np.int64)
    trial_masks = np.array([_mask(t.object_ids) for t in context], dtype=np.int64)
    observed = np.array([t.machine_state == MachineState.ON for t in context], dtype=bool)

    predicted = (candidates[:, None] & trial_masks[None, :]) != 0
    keep = candidates[(predicted == observed[None, :]).all(axis=1)]

    hypotheses = tuple(
        frozenset(i for i in range(n_objects) if (int(m) >> i) & 1) for m in keep
    )
    return HypothesisSet(hypotheses=hypotheses, universe_size=n_objects, masks=keep)


def _require(hs: HypothesisSet) -> None:
    if len(hs) == 0:
        raise InconsistentContextError("no Blicket assignment is consistent with the context")


def blicketness(hs: HypothesisSet, object_id: int) -> Blicketness:
    _require(hs)
    member = (hs.masks >> object_id) & 1
    if member.all():
        return Blicketness.BLICKET
    if not member.any():
        return Blicketness.NON_BLICKET
    return Blicketness.UNDETERMINED


def label_query(hs: HypothesisSet, config: Iterable[int]) -> Label:
    _require(hs)
    on = (hs.masks & _mask(config)) != 0
    if on.all():
        return Label.ACTIVATED
    if not on.any():
        return Label.INACTIVATED
    return Label.UNDETERMINED


def _object_type(context: Sequence[ContextTrial], object_id: int, label: Label) -> QueryType:
    """Decision procedure for a single object with its epistemic label"""
    trials = [t for t in context if object_id in t.object_ids]
    solo = [t for t in trials if len(t.object_ids) == 1]
    states = {t.machine_state for t in trials}
    expected = {Label.ACTIVATED: MachineState.ON, Label.INACTIVATED: MachineState.OFF}

    if solo and label in expected and states == {expected[label]}:
        return QueryType.DIRECT
    if (
        label == Label.INACTIVATED
        and any(t.machine_state == MachineState.OFF for t in solo)
        and MachineState.ON in states
    ):
        return QueryType.SCREENING_OFF
    if label == Label.UNDETERMINED and not solo and states == {MachineState.ON}:
        return QueryType.BACKWARD_BLOCKING
    return QueryType.INDIRECT


def classify_query_type(
    context: Sequence[ContextTrial], hs: HypothesisSet, query: Union[Query, QueryView]
) -> QueryType:
    """Attribute a query to the evidence that decides its label"""
    object_ids = query.object_ids
    base_trial_index = query.base_trial_index
    label = label_query(hs, object_ids)
    if query.kind == QueryKind.INDEPENDENT:
        (object_id,) = object_ids
        return _object_type(context, object_id, label)

    base = set(context[base_trial_index].object_ids) if base_trial_index is not None else set()
    added = [o for o in object_ids if o not in base]
    member_types = {
        o: _object_type(context, o, label_query(hs, [o])) for o in object_ids
    }

    if label == Label.ACTIVATED:
        if any(
            blicketness(hs, o) == Blicketness.BLICKET and member_types[o] == QueryType.DIRECT
            for o in object_ids
        ):
            return QueryType.DIRECT
    elif label == Label.INACTIVATED:
        if added and all(member_types[o] == QueryType.DIRECT for o in added):
            return QueryType.DIRECT
        if any(member_types[o] == QueryType.SCREENING_OFF for o in object_ids):
            return QueryType.SCREENING_OFF
    elif any(member_types[o] == QueryType.BACKWARD_BLOCKING for o in added):
        return QueryType.BACKWARD_BLOCKING
    return QueryType.INDIRECT
