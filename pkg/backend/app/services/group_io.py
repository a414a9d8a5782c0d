from collections.abc import Iterable, Iterator

from core.logs import logger
from entities.group.exceptions import GroupParseError
from entities.group.models import Group
from entities.group.schemas.records import GroupRecord, WeightRecord
from pydantic import ValidationError
from services.base import BaseService


class GroupReader:
    """Streams groups out of JSONL lines, one group in memory at a time.

    Strict readers raise on the first bad line; lenient ones skip it and
    keep the error.
    """

    def __init__(self, lines: Iterable[str | bytes], *, strict: bool) -> None:
        self.lines = lines
        self.strict = strict
        self.parsed = 0
        self.skipped = 0
        self.errors: list[GroupParseError] = []

    def __iter__(self) -> Iterator[Group]:
        for line_number, raw in enumerate(self.lines, start=1):
            try:
                line = raw.decode() if isinstance(raw, bytes) else raw
                if not line.strip():
                    continue
                group = GroupRecord.model_validate_json(line).to_group()
            except (UnicodeDecodeError, ValidationError, ValueError) as exc:
                error = GroupParseError(line_number, _describe(exc))
                if self.strict:
                    raise error from exc
                self.skipped += 1
                self.errors.append(error)
                logger.warning(
                    "Group skipped",
                    line_number=line_number,
                    reason=error.message,
                )
                continue
            self.parsed += 1
            yield group


class GroupIOService(BaseService):
    def parse_groups(
        self,
        lines: Iterable[str | bytes],
        *,
        strict: bool = False,
    ) -> GroupReader:
        return GroupReader(lines, strict=strict)

    def serialize_group(self, group: Group) -> str:
        return GroupRecord.from_group(group).model_dump_json(
            exclude_none=True,
        )

    def serialize_weights(self, record: WeightRecord) -> str:
        return record.model_dump_json(exclude_none=True)

    def find_group(
        self,
        reader: GroupReader,
        query_id: str,
        occurrence: int = 0,
    ) -> Group | None:
        seen = 0
        for group in reader:
            if group.query_id != query_id:
                continue
            if seen == occurrence:
                return group
            seen += 1
        return None


def _describe(exc: Exception) -> str:
    if isinstance(exc, ValidationError):
        first = exc.errors(include_url=False)[0]
        location = ".".join(str(part) for part in first["loc"])
        return f"{location}: {first['msg']}" if location else first["msg"]
    return str(exc)
