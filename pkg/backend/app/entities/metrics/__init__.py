from entities.metrics import models

__all__ = ["models"]
