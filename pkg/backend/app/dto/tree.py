from pathlib import Path

from dto.base import BaseDTO, ObjectiveOptionsDTO
from pydantic import Field
from shared.enums.objective import ExportFormat


class TreeDTO(BaseDTO):
    options: ObjectiveOptionsDTO
    input: Path
    group_id: str
    occurrence: int = Field(default=0, ge=0)
    format: ExportFormat = ExportFormat.DOT
    label_tokens: int = Field(default=8, ge=1)
    output: Path | None = None
