from entities.verification import models

__all__ = ["models"]
