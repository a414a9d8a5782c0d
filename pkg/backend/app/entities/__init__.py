from entities import (
    group,
    metrics,
    objective,
    simulation,
    tree,
    verification,
)

__all__ = [
    "group",
    "metrics",
    "objective",
    "simulation",
    "tree",
    "verification",
]
