from enum import StrEnum, auto


class OutputFormat(StrEnum):
    """Result file formats; each value doubles as the file extension."""

    CSV = auto()
    JSON = auto()
