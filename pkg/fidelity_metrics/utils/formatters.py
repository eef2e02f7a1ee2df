import json
from typing import Any, Dict, List

import numpy as np

from fidelity_metrics.errors import FormatError

EncodedMatrix = List[List[List[float]]]


def encode_matrix(m: np.ndarray) -> EncodedMatrix:
    """Row-major [[[re, im], ...], ...] encoding shared by states and channels."""
    arr = np.asarray(m, dtype=np.complex128)
    return [[[float(z.real), float(z.imag)] for z in row] for row in arr]


def decode_matrix(data: Any, what: str = "matrix") -> np.ndarray:
    if not isinstance(data, list) or not data:
        raise FormatError(f"{what} must be a non-empty list of rows")
    rows = []
    for r, row in enumerate(data):
        if not isinstance(row, list):
            raise FormatError(f"{what} row {r} is not a list")
        entries = []
        for c, pair in enumerate(row):
            if (
                not isinstance(pair, list)
                or len(pair) != 2
                or not all(isinstance(x, (int, float)) and not isinstance(x, bool) for x in pair)
            ):
                raise FormatError(f"{what} entry ({r},{c}) must be a [re, im] pair of numbers")
            entries.append(complex(pair[0], pair[1]))
        rows.append(entries)
    if len({len(row) for row in rows}) != 1:
        raise FormatError(f"{what} rows have unequal lengths")
    return np.array(rows, dtype=np.complex128)


def encode_vector(v: np.ndarray) -> List[List[float]]:
    return [[float(z.real), float(z.imag)] for z in np.asarray(v, dtype=np.complex128)]


def decode_vector(data: Any, what: str = "amplitudes") -> np.ndarray:
    if not isinstance(data, list) or not data:
        raise FormatError(f"{what} must be a non-empty list")
    return decode_matrix([data], what)[0]


def parse_json(text: str, source: str = "input") -> Dict[str, Any]:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise FormatError(f"malformed JSON in {source}: {exc.msg} (line {exc.lineno}, column {exc.colno})") from exc
    if not isinstance(doc, dict):
        raise FormatError(f"{source}: top-level JSON value must be an object")
    return doc


def require_key(doc: Dict[str, Any], key: str, source: str = "input") -> Any:
    if key not in doc:
        raise FormatError(f"{source}: missing key {key!r}")
    return doc[key]


def format_value(value: float) -> str:
    text = f"{value:.12g}"
    return "0" if text in ("0", "-0") else text


def format_seconds(seconds: float) -> str:
    if seconds >= 60:
        return f"{seconds / 60:.1f} min"
    elif seconds >= 1:
        return f"{seconds:.2f} s"
    else:
        return f"{seconds * 1000:.0f} ms"
