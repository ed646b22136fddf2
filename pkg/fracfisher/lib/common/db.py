from __future__ import annotations

from typing import Any

import numpy as np
import orjson
from pydantic import BaseModel, ConfigDict

JSON_OPTIONS = orjson.OPT_SORT_KEYS | orjson.OPT_INDENT_2 | orjson.OPT_SERIALIZE_NUMPY


def _default(value: Any) -> Any:
    if isinstance(value, np.generic):
        return value.item()
    if isinstance(value, BaseModel):
        return value.model_dump(mode="python", by_alias=True)
    raise TypeError(f"cannot serialize {type(value).__name__}")


def dumps(obj: Any) -> bytes:
    """Deterministic JSON: sorted keys, fixed indentation, trailing newline."""
    return orjson.dumps(obj, default=_default, option=JSON_OPTIONS) + b"\n"


class ReportDocument(BaseModel):
    """
    Base for every report emitted by the library.

    Reports are immutable value objects. ``to_json`` produces byte-identical
    output for identical content, which the CLI relies on for determinism.
    """

    model_config = ConfigDict(
        frozen=True,
        arbitrary_types_allowed=True,
        populate_by_name=True,
    )

    def to_dict(self) -> dict[str, Any]:
        return self.model_dump(mode="python", by_alias=True)

    def to_json(self) -> bytes:
        return dumps(self.to_dict())
