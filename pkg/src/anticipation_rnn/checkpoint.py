"""Self-describing checkpoint container.

Layout: a magic line, a JSON header (format version, model config, vocabulary
surfaces, parameter names and shapes), a NUL separator, then the raw
little-endian float64 bytes of each parameter in header order. Writing is
fully deterministic, so identical models produce identical files, and a
write/read round trip reproduces every parameter bit for bit.
"""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from .encoding import Vocabulary
from .errors import InvalidInputError
from .model import AnticipationRNN, ModelConfig

MAGIC = b"ARNN-CHECKPOINT\n"
FORMAT_VERSION = 1


def save_checkpoint(model: AnticipationRNN, path: str | Path) -> None:
    names = model.store.names()
    header = {
        "format_version": FORMAT_VERSION,
        "config": model.config.to_dict(),
        "vocabulary": model.vocab.surfaces(),
        "params": [
            {"name": n, "shape": list(model.store[n].value.shape)} for n in names
        ],
    }
    blob = json.dumps(header, sort_keys=True, separators=(",", ":")).encode("utf-8")
    with open(path, "wb") as fh:
        fh.write(MAGIC)
        fh.write(blob)
        fh.write(b"\x00")
        for n in names:
            fh.write(np.ascontiguousarray(model.store[n].value, dtype="<f8").tobytes())


def load_checkpoint(path: str | Path) -> AnticipationRNN:
    data = Path(path).read_bytes()
    if not data.startswith(MAGIC):
        raise InvalidInputError(f"{path}: not a checkpoint file")
    sep = data.index(b"\x00", len(MAGIC))
    header = json.loads(data[len(MAGIC) : sep].decode("utf-8"))
    if header.get("format_version") != FORMAT_VERSION:
        raise InvalidInputError(
            f"{path}: unsupported checkpoint format version {header.get('format_version')}"
        )
    config = ModelConfig(**header["config"])
    surfaces = header["vocabulary"]
    vocab = Vocabulary.from_surfaces(surfaces)
    if vocab.surfaces() != surfaces:
        raise InvalidInputError(f"{path}: vocabulary ordering mismatch")
    model = AnticipationRNN(config, vocab)

    offset = sep + 1
    values = {}
    for entry in header["params"]:
        shape = tuple(entry["shape"])
        count = int(np.prod(shape)) if shape else 1
        raw = data[offset : offset + 8 * count]
        if len(raw) != 8 * count:
            raise InvalidInputError(f"{path}: truncated parameter {entry['name']!r}")
        values[entry["name"]] = np.frombuffer(raw, dtype="<f8").reshape(shape).copy()
        offset += 8 * count
    if offset != len(data):
        raise InvalidInputError(f"{path}: trailing bytes after parameters")
    model.store.load_values(values)
    return model
