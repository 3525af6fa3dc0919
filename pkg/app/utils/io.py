"""Byte-stable writers for run artifacts."""

import csv
import hashlib
import json
import math
from collections.abc import Iterable, Mapping, Sequence
from pathlib import Path
from typing import Any

import numpy as np
from pydantic import BaseModel


def format_float(value: float) -> str:
    """Render a float with 17 significant digits."""
    return format(float(value), ".17g")


def to_jsonable(obj: Any) -> Any:  # noqa: ANN401
    """
    Convert numpy values, pydantic models and containers to plain JSON data.

    Non-finite floats become ``None``.

    Args:
        obj: Object to convert

    Returns:
        Data accepted by ``json.dumps`` with ``allow_nan=False``
    """
    if isinstance(obj, BaseModel):
        return to_jsonable(obj.model_dump(mode="python"))
    if isinstance(obj, Mapping):
        return {str(k): to_jsonable(v) for k, v in obj.items()}
    if isinstance(obj, np.ndarray):
        return [to_jsonable(v) for v in obj.tolist()]
    if isinstance(obj, (list, tuple)):
        return [to_jsonable(v) for v in obj]
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        value = float(obj)
        return value if math.isfinite(value) else None
    if isinstance(obj, Path):
        return obj.as_posix()
    return obj


def canonical_json_bytes(obj: Any) -> bytes:  # noqa: ANN401
    """Serialize to JSON with sorted keys and a trailing newline."""
    text = json.dumps(
        to_jsonable(obj), sort_keys=True, indent=2, allow_nan=False, ensure_ascii=True
    )
    return (text + "\n").encode("utf-8")


def write_json(path: Path, obj: Any) -> Path:  # noqa: ANN401
    """
    Write a JSON document deterministically.

    Args:
        path: Target file
        obj: Document

    Returns:
        The written path
    """
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_bytes(canonical_json_bytes(obj))
    return path


def write_csv(
    path: Path, header: Sequence[str], rows: Iterable[Sequence[float]]
) -> Path:
    """
    Write numeric rows with 17 significant digits.

    Args:
        path: Target file
        header: Column names
        rows: Numeric rows

    Returns:
        The written path
    """
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", encoding="utf-8", newline="") as handle:
        writer = csv.writer(handle, lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow([format_float(v) for v in row])
    return path


def sha256_file(path: Path) -> str:
    """Hex SHA-256 digest of a file."""
    digest = hashlib.sha256()
    with path.open("rb") as handle:
        for chunk in iter(lambda: handle.read(1 << 20), b""):
            digest.update(chunk)
    return digest.hexdigest()
