from __future__ import annotations

from pydantic import NonNegativeInt
from shared.schemas.base import WireModel


class TreeNodeSchema(WireModel):
    id: NonNegativeInt
    members: list[NonNegativeInt]
    span: tuple[NonNegativeInt, NonNegativeInt]
    terminal: bool
    label: str
    step_reward: float | None = None
    children: list[TreeNodeSchema] = []


class TreeDocumentSchema(WireModel):
    query_id: str
    k: NonNegativeInt
    lengths: list[NonNegativeInt]
    root: TreeNodeSchema
