"""Seed-driven construction of Blicket problems and dataset splits."""
import hashlib
import logging
from collections import Counter
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from functools import partial
from typing import Dict, FrozenSet, List, Optional, Sequence, Set, Tuple

import numpy as np

from config.settings import GenConfig, settings
from modules import oracle
from modules.exceptions import GenerationError, InfeasibleContextError, RejectionBudgetExceeded
from modules.models import (
    MAX_OBJECTS,
    MIN_OBJECTS,
    Attributes,
    Blicketness,
    Color,
    ContextTrial,
    Dataset,
    Fold,
    Label,
    MachineState,
    Material,
    ObjectSpec,
    Problem,
    Query,
    QueryKind,
    QueryView,
    Shape,
    Split,
    attribute_space,
)

logger = logging.getLogger(__name__)

TRAIN_POOL_SIZE = 36
# index % 10 -> fold, giving the 6:2:2 ratio
FOLD_PATTERN: Tuple[Fold, ...] = (Fold.TRAIN,) * 6 + (Fold.VAL,) * 2 + (Fold.TEST,) * 2
LABEL_SLOTS = (Label.ACTIVATED, Label.INACTIVATED, Label.UNDETERMINED)
# context resamples before a problem gives up on its target label multiset
RETARGET_AFTER = 50
_CANONICAL_INDEX: Dict[Attributes, int] = {a: i for i, a in enumerate(attribute_space())}


@dataclass(frozen=True)
class CombinationPartition:
    train_pool: FrozenSet[Attributes]
    test_pool: FrozenSet[Attributes]

    def pool_for(self, fold: Fold) -> FrozenSet[Attributes]:
        # val follows the train distribution
        return self.test_pool if fold == Fold.TEST else self.train_pool


def derive_seed(master_seed: int, *parts: object) -> int:
    """Stable 63-bit seed from the master seed and any labels"""
    key = ":".join(str(p) for p in (master_seed, *parts)).encode("utf-8")
    return int.from_bytes(hashlib.sha256(key).digest()[:8], "big") >> 1


def fold_for_index(index: int) -> Fold:
    return FOLD_PATTERN[index % len(FOLD_PATTERN)]


def _covers_all_values(pool: Set[Attributes]) -> bool:
    return (
        {a[0] for a in pool} == set(Shape)
        and {a[1] for a in pool} == set(Material)
        and {a[2] for a in pool} == set(Color)
    )


def build_partition(master_seed: int) -> CombinationPartition:
    """Greedy 36/12 split of the attribute space keeping every value in the train pool"""
    rng = np.random.default_rng(derive_seed(master_seed, "partition"))
    space = attribute_space()
    order = rng.permutation(len(space))
    train = set(space)
    test: Set[Attributes] = set()
    for i in order:
        if len(test) == len(space) - TRAIN_POOL_SIZE:
            break
        candidate = space[i]
        train.discard(candidate)
        if _covers_all_values(train):
            test.add(candidate)
        else:
            train.add(candidate)
    return CombinationPartition(train_pool=frozenset(train), test_pool=frozenset(test))


def sample_objects(rng: np.random.Generator, pool: Sequence[Attributes]) -> List[ObjectSpec]:
    """5-8 objects with distinct attribute triples; Blicket flags are set by the context builders"""
    if len(pool) < MAX_OBJECTS:
        raise GenerationError(f"attribute pool has {len(pool)} triples, need at least {MAX_OBJECTS}")
    # canonical order so the draw depends only on the pool's content
    ordered = sorted(pool, key=_CANONICAL_INDEX.__getitem__)
    count = int(rng.integers(MIN_OBJECTS, MAX_OBJECTS + 1))
    picks = rng.choice(len(ordered), size=count, replace=False)
    return [
        ObjectSpec(id=i, shape=ordered[p][0], material=ordered[p][1], color=ordered[p][2])
        for i, p in enumerate(picks)
    ]


def _trial(object_ids, blickets: Set[int]) -> ContextTrial:
    ids = tuple(sorted(object_ids))
    state = MachineState.ON if set(ids) & blickets else MachineState.OFF
    return ContextTrial(object_ids=ids, machine_state=state)


def gen_familiarization(
    rng: np.random.Generator, blicket: ObjectSpec, non_blicket: ObjectSpec
) -> List[ContextTrial]:
    if not blicket.is_blicket or non_blicket.is_blicket:
        raise GenerationError("familiarization needs one Blicket and one non-Blicket")
    blickets = {blicket.id}
    solos = [_trial([blicket.id], blickets), _trial([non_blicket.id], blickets)]
    if rng.random() < 0.5:
        solos.reverse()
    return solos + [_trial([blicket.id, non_blicket.id], blickets)]


def gen_main_context(
    rng: np.random.Generator,
    remaining_objects: Sequence[ObjectSpec],
    activation_count_main: str,
    overlap: float = 0.25,
) -> Tuple[List[ContextTrial], List[ObjectSpec]]:
    """Three overlapping subgroups of the remaining objects with 1 or 2 activations.

    Returns the trials and the remaining objects with their Blicket flags assigned.
    Raises InfeasibleContextError when no flag assignment realises the chosen activations.
    """
    if len(remaining_objects) < 3:
        raise GenerationError("main context needs at least 3 objects")
    ids = [o.id for o in remaining_objects]
    order = rng.permutation(len(ids))

    members: List[Set[int]] = [set(), set(), set()]
    for rank, i in enumerate(order):
        home = rank if rank < 3 else int(rng.integers(3))
        members[home].add(ids[i])
        for other in range(3):
            if other != home and rng.random() < overlap:
                members[other].add(ids[i])

    if activation_count_main == "one":
        n_on = 1
    elif activation_count_main == "two":
        n_on = 2
    else:
        n_on = int(rng.integers(1, 3))
    on_trials = set(int(t) for t in rng.choice(3, size=n_on, replace=False))

    in_off = set().union(*(members[t] for t in range(3) if t not in on_trials))
    blickets: Set[int] = set()
    for t in sorted(on_trials):
        candidates = sorted(members[t] - in_off)
        if not candidates:
            raise InfeasibleContextError(f"on-trial {t} has no object free of off-trials")
        for c in candidates:
            if rng.random() < 0.5:
                blickets.add(c)
    for t in sorted(on_trials):
        if not members[t] & blickets:
            candidates = sorted(members[t] - in_off)
            blickets.add(candidates[int(rng.integers(len(candidates)))])

    # an object seen both off and on stays only if it was also tested alone while off
    solo_off = {next(iter(members[t])) for t in range(3) if t not in on_trials and len(members[t]) == 1}
    for t in on_trials:
        members[t] -= in_off - solo_off

    trials = [_trial(m, blickets) for m in members]
    flagged = [o.model_copy(update={"is_blicket": o.id in blickets}) for o in remaining_objects]
    return trials, flagged


def _context_object_ids(context: Sequence[ContextTrial]) -> List[int]:
    return sorted({i for t in context for i in t.object_ids})


def _labeled(context, hs, view: QueryView) -> Query:
    return Query(
        object_ids=view.object_ids,
        kind=view.kind,
        base_trial_index=view.base_trial_index,
        label=oracle.label_query(hs, view.object_ids),
        query_type=oracle.classify_query_type(context, hs, view),
    )


def _sample_independent(rng, candidates: List[int]) -> QueryView:
    return QueryView(object_ids=(candidates[int(rng.integers(len(candidates)))],), kind=QueryKind.INDEPENDENT)


def _sample_interventional(rng, context, off_trials: List[int], pool: List[int], max_added: int) -> Optional[QueryView]:
    base_index = off_trials[int(rng.integers(len(off_trials)))]
    base = set(context[base_index].object_ids)
    available = [o for o in pool if o not in base]
    if not available:
        return None
    size = min(int(rng.integers(1, max_added + 1)), len(available))
    added = {available[int(i)] for i in rng.choice(len(available), size=size, replace=False)}
    return QueryView(
        object_ids=tuple(sorted(base | added)),
        kind=QueryKind.INTERVENTIONAL,
        base_trial_index=base_index,
    )


def gen_queries(
    rng: np.random.Generator,
    objects: Sequence[ObjectSpec],
    context: Sequence[ContextTrial],
    target_labels: Optional[Sequence[Label]] = None,
    max_rejections: int = 1000,
    max_added: int = 3,
) -> List[Query]:
    """Two independent then two interventional queries, labeled and typed by the oracle.

    When target_labels is given, slot k is rejection-sampled until its label equals
    target_labels[k]; RejectionBudgetExceeded is raised when a slot cannot be filled.
    """
    hs = oracle.consistent_hypotheses(context, len(objects))
    tested = _context_object_ids(context)
    off_trials = [i for i, t in enumerate(context) if t.machine_state == MachineState.OFF]
    if not off_trials:
        raise GenerationError("context has no inactivated trial to intervene on")
    targets = list(target_labels) if target_labels is not None else [None] * 4
    undetermined = {o for o in tested if oracle.blicketness(hs, o) == Blicketness.UNDETERMINED}

    queries: List[Query] = []
    used_objects: Set[int] = set()
    used_interventions: Set[Tuple[int, Tuple[int, ...]]] = set()

    for slot, target in enumerate(targets):
        independent = slot < 2
        if target == Label.UNDETERMINED and not undetermined - (used_objects if independent else set()):
            raise RejectionBudgetExceeded(f"slot {slot}: context has no undetermined object")
        for _ in range(max_rejections):
            if independent:
                candidates = [o for o in tested if o not in used_objects]
                if not candidates:
                    break
                view = _sample_independent(rng, candidates)
            else:
                view = _sample_interventional(rng, context, off_trials, tested, max_added)
                if view is None:
                    continue
                key = (view.base_trial_index, view.object_ids)
                if key in used_interventions:
                    continue
            query = _labeled(context, hs, view)
            if target is not None and query.label != target:
                continue
            if independent:
                used_objects.add(view.object_ids[0])
            else:
                used_interventions.add((view.base_trial_index, view.object_ids))
            queries.append(query)
            break
        else:
            raise RejectionBudgetExceeded(f"slot {slot}: no {target} query in {max_rejections} draws")
        if len(queries) != slot + 1:
            raise RejectionBudgetExceeded(f"slot {slot}: ran out of candidate objects")
    return queries


def _activation_count(config: GenConfig, fold: Fold) -> str:
    if config.split == Split.SYS.value:
        return "two" if fold == Fold.TEST else "one"
    return config.activation_count_main


def draw_target_labels(rng: np.random.Generator, shares: Dict[str, float]) -> List[Label]:
    probabilities = [shares[label.value] for label in LABEL_SLOTS]
    picks = rng.choice(len(LABEL_SLOTS), size=4, p=probabilities)
    return [LABEL_SLOTS[int(i)] for i in picks]


def generate_problem(
    seed: int,
    config: GenConfig,
    partition: Optional[CombinationPartition] = None,
    problem_id: Optional[str] = None,
    balance_labels: bool = True,
) -> Problem:
    """Build one problem; a pure function of (seed, config, partition)"""
    rng = np.random.default_rng(seed)
    fold = Fold(config.fold)
    split = Split(config.split)
    if split == Split.COMP:
        if partition is None:
            raise GenerationError(f"seed {seed}: comp problems need a combination partition")
        pool = sorted(partition.pool_for(fold))
    else:
        pool = attribute_space()
    activation = _activation_count(config, fold)
    targets = draw_target_labels(rng, config.target_label_shares) if balance_labels else None

    for attempt in range(config.max_rejections):
        if targets is not None and attempt and attempt % RETARGET_AFTER == 0:
            targets = draw_target_labels(rng, config.target_label_shares)
            logger.debug(f"seed {seed} attempt {attempt}: redrew target labels {[t.value for t in targets]}")
        objects = sample_objects(rng, pool)
        pair = [int(i) for i in rng.choice(len(objects), size=2, replace=False)]
        blicket = objects[pair[0]].model_copy(update={"is_blicket": True})
        non_blicket = objects[pair[1]]
        remaining = [o for o in objects if o.id not in pair]
        try:
            familiarization = gen_familiarization(rng, blicket, non_blicket)
            main, flagged = gen_main_context(rng, remaining, activation, config.main_overlap)
            by_id = {o.id: o for o in [blicket, non_blicket, *flagged]}
            final_objects = tuple(by_id[i] for i in range(len(objects)))
            context = tuple(familiarization + main)
            queries = gen_queries(rng, final_objects, context, targets, config.max_rejections, config.max_added)
        except (InfeasibleContextError, RejectionBudgetExceeded) as e:
            logger.debug(f"seed {seed} attempt {attempt}: resampling context ({e})")
            continue
        return Problem(
            problem_id=problem_id or f"{split.value}-{seed}",
            seed=seed,
            split=split,
            fold=fold,
            objects=final_objects,
            context=context,
            queries=tuple(queries),
        )
    raise GenerationError(f"seed {seed}: no valid problem after {config.max_rejections} context resamples")


def _generate_indexed(
    index: int, master_seed: int, config: GenConfig, partition: Optional[CombinationPartition]
) -> Problem:
    fold = fold_for_index(index)
    seed = derive_seed(master_seed, config.split, index)
    try:
        return generate_problem(
            seed,
            config.model_copy(update={"fold": fold.value}),
            partition,
            problem_id=f"{config.split}-{index:05d}",
        )
    except GenerationError as e:
        raise GenerationError(str(e), index=index) from e


def generate_split(
    kind: Split, config: GenConfig, master_seed: int, workers: Optional[int] = None
) -> Dataset:
    config = config.model_copy(update={"split": Split(kind).value})
    partition = build_partition(master_seed) if Split(kind) == Split.COMP else None
    workers = workers or settings.WORKERS
    count = config.problems_per_split
    logger.info(f"Generating {count} {config.split} problems (master seed {master_seed}, {workers} workers)")

    job = partial(_generate_indexed, master_seed=master_seed, config=config, partition=partition)
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            problems = tuple(pool.map(job, range(count), chunksize=64))
    else:
        problems = tuple(job(i) for i in range(count))

    fold_counts = Counter(p.fold for p in problems)
    dataset = Dataset(
        split=Split(kind),
        master_seed=master_seed,
        problems=problems,
        fold_counts={fold: fold_counts.get(fold, 0) for fold in Fold},
    )
    shares = label_shares(problems)
    logger.info(
        f"Split {config.split}: folds {dict((f.value, n) for f, n in dataset.fold_counts.items())}, "
        f"label shares {dict((k.value, round(v, 4)) for k, v in shares.items())}"
    )
    return dataset


def label_shares(problems: Sequence[Problem]) -> Dict[Label, float]:
    counts = Counter(q.label for p in problems for q in p.queries)
    total = sum(counts.values()) or 1
    return {label: counts.get(label, 0) / total for label in LABEL_SLOTS}


def query_type_shares(problems: Sequence[Problem]) -> Dict[str, float]:
    counts = Counter(q.query_type.value for p in problems for q in p.queries)
    total = sum(counts.values()) or 1
    return {k: v / total for k, v in sorted(counts.items())}


def scene_descriptor(problem: Problem, radius: float = 0.06, max_tries: int = 1000) -> Dict[str, object]:
    """Random non-overlapping positions in the unit square; no semantic weight"""
    rng = np.random.default_rng(derive_seed(problem.seed, "scene"))
    placed: List[np.ndarray] = []
    for _ in range(max_tries):
        placed = []
        for _obj in problem.objects:
            for _ in range(max_tries):
                point = rng.uniform(radius, 1.0 - radius, size=2)
                if all(np.linalg.norm(point - q) >= 2 * radius for q in placed):
                    placed.append(point)
                    break
            else:
                break
        if len(placed) == len(problem.objects):
            break
    else:
        raise GenerationError(f"{problem.problem_id}: could not place objects without overlap")
    return {
        "problem_id": problem.problem_id,
        "radius": radius,
        "positions": {str(o.id): [round(float(x), 6) for x in p] for o, p in zip(problem.objects, placed)},
    }
