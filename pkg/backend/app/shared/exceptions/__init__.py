class PrmTreeError(Exception):
    pass


__all__ = [
    "PrmTreeError",
]
