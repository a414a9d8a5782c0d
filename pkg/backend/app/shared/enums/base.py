from enum import StrEnum


class ChoiceStrEnum(StrEnum):
    @staticmethod
    def _generate_next_value_(name, *_):
        """
        Return the lower-cased member name, as typed on the command line.
        """
        return name.lower()

    @classmethod
    def choices(cls) -> list[str]:
        return [member.value for member in cls]
