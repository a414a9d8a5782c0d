from dishka import Provider, Scope
from services.equivalence import EquivalenceService
from services.group_io import GroupIOService
from services.metrics import MetricsService
from services.objectives import ObjectiveService
from services.process_tree import ProcessTreeService
from services.rewards import RewardService
from services.step_rewards import StepRewardService
from services.toy_sim import ToySimService
from services.tree_export import TreeExportService

service_provider = Provider(scope=Scope.APP)
service_provider.provide_all(
    RewardService,
    ProcessTreeService,
    StepRewardService,
    ObjectiveService,
    EquivalenceService,
    MetricsService,
    TreeExportService,
    ToySimService,
    GroupIOService,
)
