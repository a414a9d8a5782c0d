from entities.group import models

__all__ = ["models"]
