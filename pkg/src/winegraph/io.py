"""Small file helpers shared by every stage: atomic writes, comment headers
and the plain-text vector format."""

from __future__ import annotations

import os
import tempfile
from pathlib import Path
from typing import Iterator, Sequence

import numpy as np

_ESCAPES = (("%", "%25"), (" ", "%20"), ("\t", "%09"), ("\n", "%0A"), ("\r", "%0D"))


def quote_key(key: str) -> str:
    for raw, esc in _ESCAPES:
        key = key.replace(raw, esc)
    return key


def unquote_key(key: str) -> str:
    for raw, esc in reversed(_ESCAPES):
        key = key.replace(esc, raw)
    return key


def atomic_write(path: str | Path, text: str, header: str | None = None) -> None:
    """Write ``text`` via a temp file in the target directory and rename it
    into place.  ``header`` becomes a leading ``# ...`` line."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="\n") as fh:
            if header is not None:
                fh.write(f"# {header}\n")
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def read_header(path: str | Path) -> str | None:
    with open(path, encoding="utf-8") as fh:
        first = fh.readline()
    return first[2:].rstrip("\n") if first.startswith("# ") else None


def data_lines(path: str | Path) -> Iterator[str]:
    """Lines of ``path`` after any leading ``#`` comment lines."""
    with open(path, encoding="utf-8", newline="") as fh:
        in_header = True
        for line in fh:
            if in_header and line.startswith("#"):
                continue
            in_header = False
            yield line


def csv_field(value: str) -> str:
    if any(c in value for c in ',"\n\r'):
        return '"' + value.replace('"', '""') + '"'
    return value


def format_float(x: float) -> str:
    return f"{x:.7g}"


def write_vectors(
    path: str | Path, keys: Sequence[str], vectors: np.ndarray, header: str | None = None
) -> None:
    """``|V| dim`` line, then ``key v1 ... vdim`` per row."""
    vectors = np.asarray(vectors)
    n, dim = vectors.shape
    if len(keys) != n:
        raise ValueError("keys and vectors disagree in length")
    parts = [f"{n} {dim}\n"]
    for key, row in zip(keys, vectors):
        parts.append(quote_key(key) + " " + " ".join(format_float(float(x)) for x in row) + "\n")
    atomic_write(path, "".join(parts), header=header)


def read_vectors(path: str | Path) -> tuple[list[str], np.ndarray]:
    lines = data_lines(path)
    try:
        n, dim = (int(x) for x in next(lines).split())
    except (StopIteration, ValueError) as exc:
        raise ValueError(f"{path}: bad vector header") from exc
    keys: list[str] = []
    out = np.empty((n, dim), dtype=np.float64)
    for i, line in enumerate(lines):
        fields = line.split()
        if i >= n or len(fields) != dim + 1:
            raise ValueError(f"{path}: malformed vector line {i + 2}")
        keys.append(unquote_key(fields[0]))
        out[i] = [float(x) for x in fields[1:]]
    if len(keys) != n:
        raise ValueError(f"{path}: expected {n} vectors, found {len(keys)}")
    return keys, out
