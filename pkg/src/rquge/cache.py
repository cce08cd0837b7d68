"""Content-addressed disk cache for runner calls.

One JSON file per key under the cache directory. Keys combine the runner
name (which must carry the model version), the operation, and a stable hash
of the full input text, so a silently swapped model can never serve stale
responses. Readers may run concurrently; writes go through an atomic
replace, so a reader never observes a partially written entry.
"""

import hashlib
import json
import logging
import os
import tempfile
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

logger = logging.getLogger(__name__)

DEFAULT_CACHE_DIR = "~/.cache/rquge"
_MISS = object()


def content_hash(parts: Sequence[object]) -> str:
    """Stable hex digest of an ordered sequence of call inputs."""
    blob = json.dumps([str(p) for p in parts], ensure_ascii=False).encode("utf-8")
    return hashlib.sha256(blob).hexdigest()


@dataclass(frozen=True, slots=True)
class CacheKey:
    runner_name: str
    operation: str
    content_hash: str

    def digest(self) -> str:
        blob = f"{self.runner_name}\x1f{self.operation}\x1f{self.content_hash}".encode("utf-8")
        return hashlib.sha256(blob).hexdigest()


class DiskCache:
    """JSON-file cache keyed by :class:`CacheKey`.

    The directory is resolved in order: explicit ``directory`` argument, the
    ``RQUGE_CACHE_DIR`` environment variable, then ``~/.cache/rquge``.
    """

    def __init__(self, directory: str | Path | None = None):
        resolved = directory or os.environ.get("RQUGE_CACHE_DIR") or DEFAULT_CACHE_DIR
        self.directory = Path(resolved).expanduser()
        self.directory.mkdir(parents=True, exist_ok=True)

    def key(self, runner_name: str, operation: str, parts: Sequence[object]) -> CacheKey:
        return CacheKey(runner_name, operation, content_hash(parts))

    def _path(self, key: CacheKey) -> Path:
        return self.directory / f"{key.digest()}.json"

    def get(self, key: CacheKey):
        """Return the cached value, or ``None`` on a miss.

        A corrupt entry is discarded with a logged warning and treated as a
        miss, so the caller recomputes instead of failing.
        """
        path = self._path(key)
        try:
            with path.open("r", encoding="utf-8") as handle:
                payload = json.load(handle)
            if (
                payload.get("runner_name") != key.runner_name
                or payload.get("operation") != key.operation
                or payload.get("content_hash") != key.content_hash
                or "value" not in payload
            ):
                raise ValueError("cache payload does not match its key")
            return payload["value"]
        except FileNotFoundError:
            return None
        except (ValueError, OSError, AttributeError) as exc:
            logger.warning("discarding corrupt cache entry %s: %s", path.name, exc)
            try:
                path.unlink()
            except OSError:
                pass
            return None

    def put(self, key: CacheKey, value) -> None:
        payload = {
            "runner_name": key.runner_name,
            "operation": key.operation,
            "content_hash": key.content_hash,
            "value": value,
        }
        encoded = json.dumps(payload, ensure_ascii=False)
        fd, tmp_name = tempfile.mkstemp(dir=self.directory, suffix=".tmp")
        try:
            with os.fdopen(fd, "w", encoding="utf-8") as handle:
                handle.write(encoded)
            os.replace(tmp_name, self._path(key))
        except BaseException:
            try:
                os.unlink(tmp_name)
            except OSError:
                pass
            raise
