import pytest

from config.settings import GenConfig
from modules.generator import generate_split
from modules.models import ContextTrial, MachineState, Split

A, B, C, D, E, F = range(6)


def trials(*pairs):
    """[({0}, 'on'), ...] -> ContextTrial tuple"""
    return tuple(ContextTrial(object_ids=tuple(sorted(ids)), machine_state=MachineState(state)) for ids, state in pairs)


@pytest.fixture
def familiarization():
    return trials(({A}, "on"), ({B}, "off"), ({A, B}, "on"))


@pytest.fixture
def indirect_context():
    # D is a Blicket only through the main set
    return trials(({A}, "on"), ({B}, "off"), ({A, B}, "on"), ({C, D}, "on"), ({C}, "off"), ({E}, "off"))


@pytest.fixture
def backward_blocking_context():
    return trials(({A}, "on"), ({B}, "off"), ({A, B}, "on"), ({A, C}, "on"), ({A}, "on"), ({D}, "off"))


@pytest.fixture(scope="session")
def small_iid():
    return generate_split(Split.IID, GenConfig(problems_per_split=40), master_seed=7, workers=1)


@pytest.fixture(scope="session")
def small_sys():
    return generate_split(Split.SYS, GenConfig(problems_per_split=30), master_seed=7, workers=1)


@pytest.fixture(scope="session")
def small_comp():
    return generate_split(Split.COMP, GenConfig(problems_per_split=30), master_seed=7, workers=1)
