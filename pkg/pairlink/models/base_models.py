"""The Base model from which all pairlink Model objects inherit."""

import json
from abc import ABC
from pathlib import Path
from typing import TYPE_CHECKING, Any, Callable, Union

import numpy as np
import toml
import yaml
from pydantic import BaseModel
from typing_extensions import Self

if TYPE_CHECKING:  # pragma: no cover
    from pydantic.typing import ReprArgs


__all__ = ["PairLinkModelBase"]

# Suffix -> parser for `open`. Anything else is read as json.
_READERS: dict[str, Callable[[str], Any]] = {
    ".yaml": yaml.safe_load,
    ".yml": yaml.safe_load,
    ".toml": toml.loads,
}

# Suffix -> writer for `save`, called with the dumped dict and the indent.
_WRITERS: dict[str, Callable[[dict, int], str]] = {
    ".yaml": lambda data, indent: yaml.dump(data, indent=indent),
    ".yml": lambda data, indent: yaml.dump(data, indent=indent),
    ".toml": lambda data, indent: toml.dumps(data),
}


def _json_writer(data: dict, indent: int) -> str:
    return json.dumps(data, indent=indent)


class PairLinkModelBase(BaseModel, ABC):
    """Base Model for all pairlink objects.

    Attributes:
        extras: Additional information to bundle with the object. Use for
            bookkeeping that does not belong to the schema (e.g., skipped mentions).
    """

    extras: dict[str, Any] = {}

    model_config = {
        # Raises an error if extra fields are passed to model.
        "extra": "forbid",
        # Allow numpy types in models.
        "arbitrary_types_allowed": True,
        # Models are immutable after construction.
        "frozen": True,
    }

    @classmethod
    def open(cls, filepath: Union[Path, str]) -> Self:
        """Load an object written by `save`.

        The format follows the suffix: `.yaml`/`.yml`, `.toml`, else json.

        Example:
            ```python
            report = SolverReport.open("reports/d1.json")
            ```
        """
        filepath = Path(filepath)
        text = filepath.read_text()
        reader = _READERS.get(filepath.suffix)
        if reader is None:
            return cls.model_validate_json(text)
        return cls.model_validate(reader(text))

    def save(
        self,
        filepath: Union[Path, str],
        exclude_none: bool = True,
        exclude_unset: bool = False,
        indent: int = 4,
        **kwargs,
    ) -> None:
        """Write the object to disk, creating parent directories as needed.

        `.yaml`/`.yml` and `.toml` suffixes select those formats; every other
        suffix is written as json.

        Args:
            filepath: Destination file.
            exclude_none: Leave out fields whose value is None.
            exclude_unset: Leave out fields that were never set explicitly.
            indent: Indentation for json and yaml output.
            **kwargs: Passed on to `model_dump`.
        """
        filepath = Path(filepath)
        filepath.parent.mkdir(exist_ok=True, parents=True)
        dumped = self.model_dump(
            mode="json",
            exclude_none=exclude_none,
            exclude_unset=exclude_unset,
            **kwargs,
        )
        writer = _WRITERS.get(filepath.suffix, _json_writer)
        filepath.write_text(writer(dumped, indent))

    def __repr_args__(self) -> "ReprArgs":
        """Hide empty fields (empty arrays, lists, dicts and None) from repr."""

        def shown(value: Any) -> bool:
            if isinstance(value, np.ndarray):
                return value.size > 0
            return bool(value) or value == 0

        return [  # pragma: no cover
            (name, value) for name, value in self.__dict__.items() if shown(value)
        ]

    def __eq__(self, other: Any) -> bool:
        """Compare by serialized value; pydantic's default cannot compare arrays."""
        if isinstance(other, self.__class__):
            return self.model_dump(mode="json") == other.model_dump(mode="json")
        return False
