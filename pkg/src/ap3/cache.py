"""Append-only JSON-lines store of run records."""

from __future__ import annotations

import fcntl
import hashlib
import json
import os
import time
from dataclasses import asdict, dataclass
from pathlib import Path

from ap3 import __version__

RECORDS_FILE = "records.jsonl"


@dataclass
class RunRecord:
    command: str
    param_hash: str
    timestamp: float
    seed: int | None
    result: dict
    version: str = __version__
    params: dict | None = None


def cache_dir() -> Path:
    return Path(os.environ.get("AP3_CACHE_DIR", "./.ap3cache"))


def canonical_json(obj) -> str:
    return json.dumps(obj, sort_keys=True, separators=(",", ":"))


def param_hash(command: str, params: dict, seed: int | None) -> str:
    payload = canonical_json({"command": command, "params": params, "seed": seed})
    return hashlib.sha256(payload.encode()).hexdigest()[:16]


def _path(directory: Path | None = None) -> Path:
    d = directory or cache_dir()
    d.mkdir(parents=True, exist_ok=True)
    return d / RECORDS_FILE


def append(command: str, params: dict, seed: int | None, result: dict,
           directory: Path | None = None) -> RunRecord:
    rec = RunRecord(command, param_hash(command, params, seed), time.time(), seed,
                    result, params=params)
    line = canonical_json(asdict(rec)) + "\n"
    with open(_path(directory), "a") as fh:
        fcntl.flock(fh, fcntl.LOCK_EX)
        try:
            fh.write(line)
            fh.flush()
        finally:
            fcntl.flock(fh, fcntl.LOCK_UN)
    return rec


def records(directory: Path | None = None) -> list[RunRecord]:
    path = _path(directory)
    if not path.exists():
        return []
    out = []
    with open(path) as fh:
        fcntl.flock(fh, fcntl.LOCK_SH)
        try:
            lines = fh.readlines()
        finally:
            fcntl.flock(fh, fcntl.LOCK_UN)
    for line in lines:
        # a concurrent writer may leave a partial last line
        try:
            out.append(RunRecord(**json.loads(line)))
        except (json.JSONDecodeError, TypeError):
            continue
    return out


def lookup(hash_prefix: str, directory: Path | None = None) -> RunRecord | None:
    for rec in reversed(records(directory)):
        if rec.param_hash.startswith(hash_prefix):
            return rec
    return None


def clear(directory: Path | None = None) -> int:
    path = _path(directory)
    n = len(records(directory))
    if path.exists():
        with open(path, "w") as fh:
            fcntl.flock(fh, fcntl.LOCK_EX)
            fcntl.flock(fh, fcntl.LOCK_UN)
    return n
