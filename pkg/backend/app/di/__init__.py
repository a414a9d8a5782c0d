from di.utils import create_container

__all__ = [
    "create_container",
]
