from shared.exceptions import PrmTreeError


class SimulationConfigError(PrmTreeError, ValueError):
    pass
