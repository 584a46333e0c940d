"""Seed derivation and deterministic serialization helpers.

All randomness in the package flows from one master seed.  Stage and
per-unit seeds are derived by hashing the master seed together with a
string key path, so adding a stage or reordering work never perturbs the
streams of unrelated stages.
"""

from __future__ import annotations

import hashlib
import json
import os
import random
from typing import Any

import numpy as np


def derive_seed(master: int, *keys: object) -> int:
    """Derive a 63-bit child seed from a master seed and a key path.

    The key path is hashed, not summed, so ("pc", 12) and ("pc", 1, 2)
    cannot collide.
    """
    material = repr((int(master),) + tuple(keys)).encode("utf-8")
    digest = hashlib.sha256(material).digest()
    return int.from_bytes(digest[:8], "little") >> 1


def spawn_random(master: int, *keys: object) -> random.Random:
    """Stdlib RNG seeded from the derived key path."""
    return random.Random(derive_seed(master, *keys))


def spawn_generator(master: int, *keys: object) -> np.random.Generator:
    """Numpy RNG seeded from the derived key path."""
    return np.random.default_rng(derive_seed(master, *keys))


def canonical_dumps(obj: Any) -> str:
    """Serialize to JSON with a stable key order and no locale surprises.

    Reports and library files are compared byte-for-byte across reruns,
    so every serialization goes through here.
    """
    return json.dumps(obj, sort_keys=True, indent=2, ensure_ascii=True) + "\n"


def sha256_hex(data: bytes | str) -> str:
    if isinstance(data, str):
        data = data.encode("utf-8")
    return hashlib.sha256(data).hexdigest()


def write_text_atomic(path: str, text: str) -> None:
    """Write via a temp file and rename so checkpoints are never torn."""
    tmp = path + ".tmp"
    with open(tmp, "w", encoding="utf-8") as fh:
        fh.write(text)
    os.replace(tmp, path)


def write_json_atomic(path: str, obj: Any) -> str:
    """Write canonical JSON atomically; returns the file's sha256."""
    text = canonical_dumps(obj)
    write_text_atomic(path, text)
    return sha256_hex(text)


def read_json(path: str) -> Any:
    with open(path, "r", encoding="utf-8") as fh:
        return json.load(fh)
