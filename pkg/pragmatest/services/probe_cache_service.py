"""
Probe records stored under the managed runtime directory.
"""
import os
from typing import Optional

from loguru import logger
from tinydb import Query, TinyDB
from tinydb.middlewares import CachingMiddleware
from tinydb.storages import JSONStorage

from pragmatest.models import ProbeRecord

ACTIVE_VERSION_DIR = "active"


class ProbeCacheService:
    """One probe.json TinyDB file per (runtime, version) under <home>/runtimes/, holding the latest probe"""

    def __init__(self, home: str = ".qutest"):
        self.home = home
        self.runtimes_dir = os.path.join(home, "runtimes")

    def path_for(self, runtime: str, version: Optional[str]) -> str:
        return os.path.join(self.runtimes_dir, runtime, version or ACTIVE_VERSION_DIR, "probe.json")

    def _open(self, runtime: str, version: Optional[str]) -> TinyDB:
        path = self.path_for(runtime, version)
        os.makedirs(os.path.dirname(path), exist_ok=True)
        return TinyDB(path, storage=CachingMiddleware(JSONStorage), indent=2)

    def record(self, probe: ProbeRecord) -> bool:
        """Replace the stored probe outcome; a cache that cannot be written never fails the run"""
        try:
            db = self._open(probe.runtime, probe.version)
            try:
                db.truncate()
                db.insert(probe.model_dump(by_alias=True))
                db.storage.flush()
            finally:
                db.close()
        except OSError as e:
            logger.warning(f"Could not write probe record for {probe.runtime}: {e}")
            return False
        logger.debug(f"Stored {probe.status} probe record at {self.path_for(probe.runtime, probe.version)}")
        return True

    def latest(self, runtime: str, version: Optional[str] = None) -> Optional[ProbeRecord]:
        path = self.path_for(runtime, version)
        if not os.path.exists(path):
            return None
        db = TinyDB(path, storage=CachingMiddleware(JSONStorage))
        try:
            Probe = Query()
            rows = db.search(Probe.runtime == runtime)
        finally:
            db.close()
        return ProbeRecord(**rows[-1]) if rows else None
