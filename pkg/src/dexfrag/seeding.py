"""Named random substreams and configuration fingerprints.

Every random draw in the pipeline comes from one master seed. A stream is
identified by a tuple of names (module, config index, shard...) which is
hashed with CRC32 so the mapping is stable across interpreter runs.
"""

from __future__ import annotations

import hashlib
import json
import zlib
from dataclasses import asdict, is_dataclass

import numpy as np


def _key(name) -> int:
    if isinstance(name, (int, np.integer)):
        return int(name)
    return zlib.crc32(str(name).encode("utf-8"))


def derive_seed(master: int, *names) -> int:
    """64-bit seed for the substream ``names`` of ``master``."""
    ss = np.random.SeedSequence(int(master), spawn_key=tuple(_key(n) for n in names))
    return int(ss.generate_state(1, dtype=np.uint64)[0])


def substream(master: int, *names) -> np.random.Generator:
    ss = np.random.SeedSequence(int(master), spawn_key=tuple(_key(n) for n in names))
    return np.random.default_rng(ss)


def _plain(obj):
    if is_dataclass(obj) and not isinstance(obj, type):
        return {k: _plain(v) for k, v in asdict(obj).items()}
    if isinstance(obj, dict):
        return {str(k): _plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_plain(v) for v in obj]
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, np.floating):
        return float(obj)
    if hasattr(obj, "value") and not isinstance(obj, (int, float, str)):
        return obj.value
    return obj


def fingerprint(*parts) -> str:
    """Short SHA-256 digest of JSON-serialisable (or dataclass) parts."""
    blob = json.dumps([_plain(p) for p in parts], sort_keys=True, default=str)
    return hashlib.sha256(blob.encode("utf-8")).hexdigest()[:16]
