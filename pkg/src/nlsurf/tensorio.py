"""Flat binary tensor container (NLT).

Layout, in file order:

  bytes 0..3    magic b"NLT1"
  bytes 4..7    header length u32, little-endian
  next N bytes  UTF-8 JSON header: {"dtype": "f32", "shape": [...], "order": "row-major"}
  remainder     payload, little-endian float32, row-major, prod(shape) elements

The header JSON is written canonically (sorted keys, no whitespace) so the
same tensor always produces byte-identical files. Only f32 payloads exist in
version 1; in-memory arrays of any float dtype are cast on write.
"""

from __future__ import annotations

import json
import os

import numpy as np

from .errors import FormatError, InvalidArgumentError

MAGIC = b"NLT1"
_DTYPE = np.dtype("<f4")


def write_tensor(path, array) -> None:
    """Write ``array`` to ``path`` in the NLT container format.

    Values are cast to little-endian float32. Non-finite values are allowed
    (they round-trip); non-numeric input is rejected.
    """
    arr = np.asarray(array)
    if arr.dtype.kind not in "fiub":
        raise InvalidArgumentError(f"cannot serialize dtype {arr.dtype} as f32")
    payload = np.ascontiguousarray(arr, dtype=_DTYPE)
    header = {"dtype": "f32", "shape": list(arr.shape), "order": "row-major"}
    header_bytes = json.dumps(header, sort_keys=True, separators=(",", ":")).encode("utf-8")
    with open(path, "wb") as fh:
        fh.write(MAGIC)
        fh.write(len(header_bytes).to_bytes(4, "little"))
        fh.write(header_bytes)
        fh.write(payload.tobytes())


def read_tensor(path) -> np.ndarray:
    """Read an NLT file and return a float32 array of the recorded shape.

    Raises FormatError on a bad magic, malformed header, unsupported dtype,
    or a payload whose byte count disagrees with the header shape.
    """
    with open(path, "rb") as fh:
        data = fh.read()
    if len(data) < 8 or data[:4] != MAGIC:
        raise FormatError(f"{path}: not an NLT file (bad magic)")
    header_len = int.from_bytes(data[4:8], "little")
    if len(data) < 8 + header_len:
        raise FormatError(f"{path}: truncated header")
    try:
        header = json.loads(data[8 : 8 + header_len].decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise FormatError(f"{path}: malformed header JSON: {exc}") from exc
    if not isinstance(header, dict):
        raise FormatError(f"{path}: header is not a JSON object")
    if header.get("dtype") != "f32":
        raise FormatError(f"{path}: unsupported dtype {header.get('dtype')!r}")
    if header.get("order") != "row-major":
        raise FormatError(f"{path}: unsupported order {header.get('order')!r}")
    shape = header.get("shape")
    if not isinstance(shape, list) or not all(isinstance(s, int) and s >= 0 for s in shape):
        raise FormatError(f"{path}: invalid shape {shape!r}")
    count = 1
    for s in shape:
        count *= s
    payload = data[8 + header_len :]
    if len(payload) != 4 * count:
        raise FormatError(
            f"{path}: payload has {len(payload)} bytes, header shape {shape} needs {4 * count}"
        )
    return np.frombuffer(payload, dtype=_DTYPE).reshape(shape).copy()


def write_json(path, obj) -> None:
    """Write a JSON document atomically (temp file + rename)."""
    tmp = f"{path}.tmp-{os.getpid()}"
    with open(tmp, "w", encoding="utf-8") as fh:
        json.dump(obj, fh, indent=2, sort_keys=True)
        fh.write("\n")
    os.replace(tmp, path)


def read_json(path):
    try:
        with open(path, "r", encoding="utf-8") as fh:
            return json.load(fh)
    except json.JSONDecodeError as exc:
        raise FormatError(f"{path}: malformed JSON: {exc}") from exc
