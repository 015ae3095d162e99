"""Content-addressed on-disk cache for explored graph balls.

Entries are pickled payloads behind a small versioned header and are
written to a temporary file first, then renamed into place, so readers
never see a partial entry.
"""
from __future__ import annotations

import hashlib
import os
import pickle
import tempfile
from pathlib import Path
from typing import Any, Optional

CACHE_ENV = "PGFKIT_CACHE_DIR"
FORMAT_VERSION = 1
_MAGIC = b"PGFKIT-BALL"


def default_cache_dir() -> Path:
    env = os.environ.get(CACHE_ENV)
    if env:
        return Path(env)
    return Path(os.environ.get("XDG_CACHE_HOME", Path.home() / ".cache")) / "pgfkit"


def cache_key(*parts: Any) -> str:
    """Stable hash of the reprs of the given parts."""
    h = hashlib.sha256()
    for p in parts:
        h.update(repr(p).encode())
        h.update(b"\x00")
    return h.hexdigest()[:32]


class BallCache:
    def __init__(self, directory: Optional[os.PathLike] = None):
        self.directory = Path(directory) if directory is not None else default_cache_dir()

    def _path(self, key: str) -> Path:
        return self.directory / f"{key}.ball"

    def get(self, key: str) -> Optional[Any]:
        path = self._path(key)
        try:
            with open(path, "rb") as fh:
                magic = fh.read(len(_MAGIC))
                version = int.from_bytes(fh.read(2), "big")
                if magic != _MAGIC or version != FORMAT_VERSION:
                    return None
                return pickle.load(fh)
        except FileNotFoundError:
            return None
        except (pickle.UnpicklingError, EOFError):
            return None

    def put(self, key: str, value: Any) -> Path:
        self.directory.mkdir(parents=True, exist_ok=True)
        fd, tmp = tempfile.mkstemp(dir=self.directory, prefix=".tmp-", suffix=".ball")
        try:
            with os.fdopen(fd, "wb") as fh:
                fh.write(_MAGIC)
                fh.write(FORMAT_VERSION.to_bytes(2, "big"))
                pickle.dump(value, fh, protocol=pickle.HIGHEST_PROTOCOL)
            os.replace(tmp, self._path(key))
        except BaseException:
            if os.path.exists(tmp):
                os.unlink(tmp)
            raise
        return self._path(key)
