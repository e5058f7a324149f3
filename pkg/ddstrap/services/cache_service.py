"""
Cache Service

- Disk store of RCWA reflection matrices (one file per key, atomic writes)
- In-process memo for unit-power field maps and Casimir-Polder results, so scans
  over laser powers and detunings reuse them
"""

import hashlib
import json
import logging
import os
import tempfile
import threading
from pathlib import Path
from dataclasses import dataclass, field
from typing import Any, Callable, Dict, Hashable, List, Optional

import numpy as np
from dotenv import load_dotenv

load_dotenv()

logger = logging.getLogger(__name__)

FORMAT_VERSION = 2


@dataclass
class CachedReflection:
    """Stored solve: reflection data, k_z of the incidence orders as solved, solver flags."""

    data: np.ndarray
    kz: Optional[np.ndarray] = None
    flags: List[str] = field(default_factory=list)


class RcwaDiskCache:
    """
    Reflection matrices keyed by (geometry hash, axis, frequency, kx, ky, N).

    Each entry is one JSON header line (shape, kz length, solver flags) followed by the raw
    complex128 data and k_z; writes go to a temporary file in the same directory and are
    renamed into place, reads take no lock.
    """

    def __init__(self, directory: str):
        self.directory = Path(directory)
        self.directory.mkdir(parents=True, exist_ok=True)
        self.hits = 0
        self.misses = 0

    @staticmethod
    def _digest(key: tuple) -> str:
        text = json.dumps([repr(part) if isinstance(part, float) else part for part in key])
        return hashlib.sha1(text.encode("utf-8")).hexdigest()

    def _path(self, key: tuple) -> Path:
        digest = self._digest(key)
        return self.directory / digest[:2] / f"{digest}.rm"

    def load(self, key: tuple) -> Optional[CachedReflection]:
        path = self._path(key)
        try:
            raw = path.read_bytes()
        except FileNotFoundError:
            self.misses += 1
            return None
        newline = raw.index(b"\n")
        header = json.loads(raw[:newline])
        if header.get("version") != FORMAT_VERSION or header.get("key") != self._digest(key):
            logger.warning("Ignoring stale cache entry %s", path.name)
            self.misses += 1
            return None
        values = np.frombuffer(raw[newline + 1:], dtype=np.complex128)
        size = int(np.prod(header["shape"]))
        n_kz = header.get("kz_length", 0)
        if values.size != size + n_kz:
            logger.warning("Ignoring truncated cache entry %s", path.name)
            self.misses += 1
            return None
        self.hits += 1
        kz = values[size:].copy() if n_kz else None
        return CachedReflection(data=values[:size].reshape(header["shape"]).copy(), kz=kz, flags=list(header.get("flags", [])))

    def store(self, key: tuple, matrix: np.ndarray, kz: Optional[np.ndarray] = None,
              flags: Optional[List[str]] = None) -> None:
        path = self._path(key)
        path.parent.mkdir(parents=True, exist_ok=True)
        data = np.ascontiguousarray(matrix, dtype=np.complex128)
        kz_data = np.ascontiguousarray(kz if kz is not None else [], dtype=np.complex128).ravel()
        header = {"version": FORMAT_VERSION, "key": self._digest(key), "shape": list(data.shape),
                  "kz_length": int(kz_data.size), "flags": list(flags or [])}
        fd, tmp = tempfile.mkstemp(dir=path.parent, suffix=".tmp")
        try:
            with os.fdopen(fd, "wb") as handle:
                handle.write(json.dumps(header).encode("utf-8") + b"\n")
                handle.write(data.tobytes())
                handle.write(kz_data.tobytes())
            os.replace(tmp, path)
        except OSError:
            if os.path.exists(tmp):
                os.unlink(tmp)
            raise


class MemoryCache:
    """Thread-safe memo; concurrent callers of the same key compute it once."""

    def __init__(self):
        self._values: Dict[Hashable, Any] = {}
        self._locks: Dict[Hashable, threading.Lock] = {}
        self._guard = threading.Lock()

    def get_or_compute(self, key: Hashable, compute: Callable[[], Any]) -> Any:
        if key in self._values:
            return self._values[key]
        with self._guard:
            lock = self._locks.setdefault(key, threading.Lock())
        with lock:
            if key not in self._values:
                self._values[key] = compute()
            return self._values[key]

    def clear(self) -> None:
        with self._guard:
            self._values.clear()
            self._locks.clear()

    def __len__(self) -> int:
        return len(self._values)


class CacheService:
    """Process-wide caches; the RCWA disk store follows --cache or DDSTRAP_CACHE_DIR."""

    def __init__(self):
        self.memo = MemoryCache()
        self._rcwa: Optional[RcwaDiskCache] = None
        self._directory: Optional[str] = None

    def configure(self, directory: Optional[str] = None) -> Optional[RcwaDiskCache]:
        directory = directory or os.getenv("DDSTRAP_CACHE_DIR")
        if directory != self._directory:
            self._directory = directory
            self._rcwa = RcwaDiskCache(directory) if directory else None
            if directory:
                logger.info("RCWA cache at %s", directory)
        return self._rcwa

    @property
    def rcwa(self) -> Optional[RcwaDiskCache]:
        if self._directory is None:
            return self.configure()
        return self._rcwa

    def reset(self) -> None:
        self.memo.clear()
        self._rcwa = None
        self._directory = None


# Global cache service instance
cache_service = CacheService()
