from dishka import Provider, Scope
from interactors.analyze import AnalyzeInteractor
from interactors.report import ReportInteractor
from interactors.simulate import SimulateInteractor
from interactors.tree import TreeInteractor
from interactors.verify import VerifyInteractor
from interactors.weights import WeightsInteractor

interactor_provider = Provider(scope=Scope.REQUEST)
interactor_provider.provide_all(
    AnalyzeInteractor,
    TreeInteractor,
    VerifyInteractor,
    WeightsInteractor,
    SimulateInteractor,
    ReportInteractor,
)
