from pathlib import Path

from dto.base import BaseDTO, ObjectiveOptionsDTO


class AnalyzeDTO(BaseDTO):
    options: ObjectiveOptionsDTO
    input: Path
    output: Path | None = None
    summary: Path | None = None
