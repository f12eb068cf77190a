import asyncio
import hashlib
import json
import logging
from pathlib import Path
from typing import Dict, Optional, Union

import aiofiles

from ..modules.zeroshot import BackendDescriptor, NliLogits

logger = logging.getLogger(__name__)


class ScoreCache:
    """NLI logits keyed by (backend, model, template, premise, hypothesis).

    Persisted as JSONL, one {"key", "logits"} record per line; the file is
    read fully on construction and new entries are appended one line per
    write.
    """

    def __init__(self, path: Optional[Union[str, Path]] = None):
        self.path = Path(path) if path is not None else None
        self._entries: Dict[str, NliLogits] = {}
        self._write_lock = asyncio.Lock()
        self._needs_newline = False
        self.load()

    @staticmethod
    def key(descriptor: BackendDescriptor, premise: str, hypothesis: str) -> str:
        """Hex SHA-256 over length-prefixed fields, so field boundaries cannot shift"""
        digest = hashlib.sha256()
        for field in (descriptor.backend_id, descriptor.model_id, descriptor.template, premise, hypothesis):
            data = field.encode("utf-8")
            digest.update(f"{len(data)}:".encode("ascii"))
            digest.update(data)
        return digest.hexdigest()

    def load(self):
        if self.path is None or not self.path.exists():
            return
        skipped = 0
        with open(self.path, "r", encoding="utf-8") as f:
            for line in f:
                # Appends must not join onto an unterminated last line
                self._needs_newline = not line.endswith("\n")
                if not line.strip():
                    continue
                try:
                    record = json.loads(line)
                    self._entries[record["key"]] = NliLogits.from_list(record["logits"])
                except (ValueError, KeyError, TypeError) as e:
                    # A torn final line from an interrupted run
                    skipped += 1
                    logger.warning(f"Skipping unreadable cache line in {self.path}: {e}")
        logger.info(f"Loaded {len(self._entries)} cached scores from {self.path}" +
                    (f" ({skipped} lines skipped)" if skipped else ""))

    def get(self, key: str) -> Optional[NliLogits]:
        return self._entries.get(key)

    async def put(self, key: str, logits: NliLogits):
        async with self._write_lock:
            if key in self._entries:
                return
            self._entries[key] = logits
            if self.path is None:
                return
            line = json.dumps({"key": key, "logits": logits.as_list()}) + "\n"
            if self._needs_newline:
                line = "\n" + line
                self._needs_newline = False
            self.path.parent.mkdir(parents=True, exist_ok=True)
            async with aiofiles.open(self.path, "a", encoding="utf-8") as f:
                await f.write(line)

    def __len__(self) -> int:
        return len(self._entries)

    def __contains__(self, key: str) -> bool:
        return key in self._entries
