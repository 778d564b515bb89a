from __future__ import annotations

from pathlib import Path
from typing import Optional

from app.domain.exceptions import ArtifactStoreError
from app.domain.ports import ArtifactStore


class LocalArtifactStore(ArtifactStore):
    """Run outputs under one base directory."""

    def __init__(self, base_dir: Optional[str | Path] = None):
        self.base_dir = Path(base_dir or "output")
        self.base_dir.mkdir(parents=True, exist_ok=True)

    def _full_path(self, name: str) -> Path:
        full = (self.base_dir / name).resolve()
        if not str(full).startswith(str(self.base_dir.resolve())):
            raise ArtifactStoreError(f"Path traversal detected: {name}")
        return full

    def save_text(self, name: str, text: str) -> str:
        full = self._full_path(name)
        full.parent.mkdir(parents=True, exist_ok=True)
        try:
            full.write_text(text, encoding="utf-8")
        except OSError as e:
            raise ArtifactStoreError(f"Failed to write {name}: {e}")
        return str(full)

    def read_text(self, name: str) -> str:
        full = self._full_path(name)
        if not full.exists():
            raise ArtifactStoreError(f"Artifact not found: {full}")
        try:
            return full.read_text(encoding="utf-8")
        except OSError as e:
            raise ArtifactStoreError(f"Failed to read {name}: {e}")

    def exists(self, name: str) -> bool:
        return self._full_path(name).exists()

    def path_of(self, name: str) -> str:
        return str(self._full_path(name))
