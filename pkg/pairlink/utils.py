"""Utility functions for working with pairlink objects."""

import hashlib
import json
from typing import Any, Union

import numpy as np
from pydantic import BaseModel

__all__ = ["json_dumps", "stable_hash", "doc_rng"]


def json_dumps(obj: Union[BaseModel, list[BaseModel], dict[str, Any]]) -> str:
    """Serialize a model, a list of models or a plain dict to one line of JSON."""
    if isinstance(obj, list):
        return json.dumps([o.model_dump(mode="json") for o in obj])
    if isinstance(obj, BaseModel):
        return json.dumps(obj.model_dump(mode="json"))
    return json.dumps(obj)


def stable_hash(text: str) -> int:
    """64-bit hash of a string that is identical across processes and platforms."""
    digest = hashlib.blake2b(text.encode("utf-8"), digest_size=8).digest()
    return int.from_bytes(digest, "big")


def doc_rng(seed: int, doc_id: str) -> np.random.Generator:
    """Random generator private to one document.

    Streams depend only on `seed` and `doc_id`, so processing documents in any
    order or on any number of threads draws the same numbers per document.
    """
    return np.random.default_rng(seed ^ stable_hash(doc_id))
