from entities.simulation import models, scenarios

__all__ = ["models", "scenarios"]
