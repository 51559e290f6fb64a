"""Report serialization.

A report is a JSON document with two top-level halves: `payload` carries
every number that is a function of (model, seed, settings) alone and is
hashed, so reruns can be compared byte for byte; `meta` carries wall-clock
facts (timestamps, durations, thread counts, host) that legitimately differ
between reruns and stay outside the hash.

Extended reals are encoded as the strings "inf", "-inf", and "nan" because
JSON has no spelling for them; readers that care should map them back.
"""

from __future__ import annotations

import dataclasses
import hashlib
import json
import math
import os
from typing import Any, Optional

import numpy as np

__all__ = [
    "SCHEMA_VERSION",
    "CONVENTIONS",
    "to_jsonable",
    "canonical_payload_bytes",
    "payload_digest",
    "build_report",
    "write_report",
    "read_report",
    "file_digest",
]

SCHEMA_VERSION = 1

# The sign and normalization choices that every number in a payload assumes.
CONVENTIONS = {
    "tail_identity": "s * K(s) = (1 - m(s)) * E|R|^s",
    "tail_constant": "K(s) is the survival-difference integral of |R| against t^(s-1) dt on (0, inf)",
    "moment_function": "m(s) = E sum_k |T_k|^s",
    "extended_reals": 'infinities and NaN are the JSON strings "inf", "-inf", "nan"',
}


def to_jsonable(obj: Any) -> Any:
    """Recursively convert results into JSON-safe plain data.

    Dataclasses become dicts, arrays become lists, numpy scalars become
    Python scalars, and nonfinite floats become strings.
    """
    if obj is None or isinstance(obj, (bool, int, str)):
        return obj
    if isinstance(obj, float):
        if math.isnan(obj):
            return "nan"
        if math.isinf(obj):
            return "inf" if obj > 0 else "-inf"
        return obj
    if isinstance(obj, (np.floating, np.integer, np.bool_)):
        return to_jsonable(obj.item())
    if isinstance(obj, np.ndarray):
        return [to_jsonable(v) for v in obj.tolist()]
    if dataclasses.is_dataclass(obj) and not isinstance(obj, type):
        return {
            f.name: to_jsonable(getattr(obj, f.name))
            for f in dataclasses.fields(obj)
        }
    if isinstance(obj, dict):
        out = {}
        for key, value in obj.items():
            if not isinstance(key, str):
                key = str(key)
            out[key] = to_jsonable(value)
        return out
    if isinstance(obj, (list, tuple, set, frozenset)):
        return [to_jsonable(v) for v in obj]
    if isinstance(obj, complex):
        return {"real": to_jsonable(obj.real), "imag": to_jsonable(obj.imag)}
    raise TypeError(f"cannot serialize {type(obj).__name__} into a report")


def canonical_payload_bytes(payload: dict) -> bytes:
    """Deterministic encoding of a payload: sorted keys, no whitespace."""
    return json.dumps(
        to_jsonable(payload),
        sort_keys=True,
        separators=(",", ":"),
        allow_nan=False,
    ).encode("utf-8")


def payload_digest(payload: dict) -> str:
    return hashlib.sha256(canonical_payload_bytes(payload)).hexdigest()


def file_digest(path) -> str:
    digest = hashlib.sha256()
    with open(path, "rb") as fh:
        for block in iter(lambda: fh.read(1 << 20), b""):
            digest.update(block)
    return digest.hexdigest()


def build_report(payload: dict, meta: Optional[dict] = None) -> dict:
    from . import __version__

    return {
        "schema": SCHEMA_VERSION,
        "version": __version__,
        "conventions": dict(CONVENTIONS),
        "payload": to_jsonable(payload),
        "payload_sha256": payload_digest(payload),
        "meta": to_jsonable(meta or {}),
    }


def write_report(path, report: dict) -> None:
    directory = os.path.dirname(os.fspath(path))
    if directory:
        os.makedirs(directory, exist_ok=True)
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(report, fh, indent=2, sort_keys=True, allow_nan=False)
        fh.write("\n")


def read_report(path) -> dict:
    with open(path, "r", encoding="utf-8") as fh:
        return json.load(fh)
