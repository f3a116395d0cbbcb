"""Run manifests: everything needed to reproduce a CLI run bit for bit."""

from __future__ import annotations

import hashlib
import json
import time
from dataclasses import asdict
from pathlib import Path


def sha256_file(path) -> str:
    digest = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            digest.update(chunk)
    return digest.hexdigest()


class StageTimer:
    """Wall-clock seconds per named stage."""

    def __init__(self):
        self.timings: dict[str, float] = {}
        self._start: dict[str, float] = {}

    def start(self, stage: str) -> None:
        self._start[stage] = time.perf_counter()

    def stop(self, stage: str) -> None:
        self.timings[stage] = round(time.perf_counter() - self._start.pop(stage), 4)


def build_manifest(command: str, cfg, inputs: dict[str, str], codec_name: str, timer: StageTimer, extra: dict | None = None) -> dict:
    manifest = {
        "command": command,
        "config": asdict(cfg),
        "seed": cfg.seed,
        "codec": codec_name,
        "inputs": {name: {"path": str(path), "sha256": sha256_file(path)} for name, path in inputs.items()},
        "timings_seconds": dict(timer.timings),
    }
    if extra:
        manifest.update(extra)
    return manifest


def manifest_path(output_path) -> Path:
    out = Path(output_path)
    return out.with_suffix(out.suffix + ".manifest.json") if out.suffix != ".json" else out.with_suffix(".manifest.json")


def write_manifest(output_path, manifest: dict) -> Path:
    path = manifest_path(output_path)
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return path
