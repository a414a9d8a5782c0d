from entities.tree import models

__all__ = ["models"]
