from __future__ import annotations

import json
import os
from dataclasses import dataclass, field
from typing import Dict, List, Optional

from mashumaro import DataClassDictMixin

from U2VChannel.__version__ import PACKAGE_VERSION
from U2VChannel.formats.tables import write_text_atomic


@dataclass()
class RunManifest(DataClassDictMixin):
    """
    Metadata written next to the outputs of every command

    """

    command: str
    config_hash: str = ""
    seed: Optional[int] = None
    version: str = PACKAGE_VERSION
    outputs: List[str] = field(default_factory=list)
    wall_time_s: float = 0.0
    warnings: List[str] = field(default_factory=list)
    metrics: Dict[str, float] = field(default_factory=dict)

    def write(self, path: str) -> None:
        write_text_atomic(path, json.dumps(self.to_dict(), indent=2) + "\n")

    @classmethod
    def read(cls, path: str) -> RunManifest:
        with open(path, "r", encoding="utf-8") as file:
            return cls.from_dict(json.load(file))


def manifest_path(output: str) -> str:
    """
    Where the manifest of an output goes: `<output>.manifest.json`, or `manifest.json` inside a directory

    """

    if os.path.isdir(output):
        return os.path.join(output, "manifest.json")

    return f"{output}.manifest.json"


__all__ = [
    "RunManifest",
    "manifest_path"
]
