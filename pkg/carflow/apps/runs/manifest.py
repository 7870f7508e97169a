"""
Run manifests: which files a command emitted, with checksums
"""

import hashlib
import json
from dataclasses import asdict, dataclass, field
from pathlib import Path

MANIFEST_NAME = "manifest.json"


def file_sha256(path):
    digest = hashlib.sha256()
    with open(path, "rb") as f:
        for chunk in iter(lambda: f.read(1 << 16), b""):
            digest.update(chunk)
    return digest.hexdigest()


@dataclass(frozen=True)
class EmittedEntry:
    name: str
    sha256: str
    size: int


@dataclass
class RunManifest:
    command: str
    output_dir: str
    scenario_path: str = ""
    seed: int = 0
    status: str = "ok"
    files: list = field(default_factory=list)
    details: dict = field(default_factory=dict)

    @property
    def directory(self):
        return Path(self.output_dir)

    def add(self, path):
        """Register an emitted file; call after the file is closed"""
        path = Path(path)
        entry = EmittedEntry(name=path.name, sha256=file_sha256(path), size=path.stat().st_size)
        self.files = [existing for existing in self.files if existing.name != entry.name]
        self.files.append(entry)
        return entry

    def as_dict(self):
        document = asdict(self)
        document["files"] = [asdict(entry) for entry in self.files]
        return document

    def write(self):
        """Write manifest.json; every other output must already be registered"""
        path = self.directory / MANIFEST_NAME
        with open(path, "w", encoding="utf-8", newline="\n") as f:
            json.dump(self.as_dict(), f, indent=2, sort_keys=True)
            f.write("\n")
        return path
