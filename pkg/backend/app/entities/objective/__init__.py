from entities.objective import models

__all__ = ["models"]
