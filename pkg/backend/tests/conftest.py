from collections.abc import Iterator

import pytest
from di.utils import create_container
from dishka import Container
from entities.group.models import Group
from entities.simulation.scenarios import worked_group
from services.equivalence import EquivalenceService
from services.group_io import GroupIOService
from services.metrics import MetricsService
from services.objectives import ObjectiveService
from services.process_tree import ProcessTreeService
from services.rewards import RewardService
from services.step_rewards import StepRewardService
from services.toy_sim import ToySimService
from services.tree_export import TreeExportService


@pytest.fixture(scope="session")
def container() -> Iterator[Container]:
    container = create_container()
    yield container
    container.close()


@pytest.fixture
def reward_service(container: Container) -> RewardService:
    return container.get(RewardService)


@pytest.fixture
def tree_service(container: Container) -> ProcessTreeService:
    return container.get(ProcessTreeService)


@pytest.fixture
def step_reward_service(container: Container) -> StepRewardService:
    return container.get(StepRewardService)


@pytest.fixture
def objective_service(container: Container) -> ObjectiveService:
    return container.get(ObjectiveService)


@pytest.fixture
def equivalence_service(container: Container) -> EquivalenceService:
    return container.get(EquivalenceService)


@pytest.fixture
def metrics_service(container: Container) -> MetricsService:
    return container.get(MetricsService)


@pytest.fixture
def export_service(container: Container) -> TreeExportService:
    return container.get(TreeExportService)


@pytest.fixture
def toy_sim_service(container: Container) -> ToySimService:
    return container.get(ToySimService)


@pytest.fixture
def group_io(container: Container) -> GroupIOService:
    return container.get(GroupIOService)


@pytest.fixture
def worked() -> Group:
    return worked_group()

