from pathlib import Path

from dto.base import BaseDTO
from pydantic import Field


class ReportDTO(BaseDTO):
    summaries: list[Path] = Field(min_length=1)
    output: Path | None = None
