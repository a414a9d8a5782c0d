from pathlib import Path

from dto.base import BaseDTO, ObjectiveOptionsDTO
from entities.verification.models import GenParams
from pydantic import Field


class VerifyDTO(BaseDTO):
    options: ObjectiveOptionsDTO
    input: Path | None = None
    random: int | None = Field(default=None, ge=0)
    params: GenParams = GenParams()
    identity_tolerance: float = Field(default=1e-12, gt=0)
    include_degenerate: bool = True
    output: Path | None = None
