"""Artifact writers: full-precision CSV tables and checksummed manifests."""

from __future__ import annotations

import hashlib
import json
import time
from pathlib import Path

from . import __version__


def fmt(x) -> str:
    """Full-precision decimal text (17 significant digits) for floats."""
    if isinstance(x, bool):
        return str(int(x))
    if isinstance(x, float):
        return f"{x:.17g}"
    return str(x)


def write_csv(path: Path, header: list[str], rows) -> Path:
    path = Path(path)
    with path.open("w", encoding="utf-8", newline="\n") as fh:
        fh.write(",".join(header) + "\n")
        for row in rows:
            fh.write(",".join(fmt(x) for x in row) + "\n")
    return path


def write_matrix_csv(path: Path, matrix) -> Path:
    """Dense row-major matrix, one CSV line per row, 17 significant digits."""
    path = Path(path)
    with path.open("w", encoding="utf-8", newline="\n") as fh:
        for row in matrix:
            fh.write(",".join(f"{x:.17g}" for x in row) + "\n")
    return path


def sha256_of(path: Path) -> str:
    digest = hashlib.sha256()
    with Path(path).open("rb") as fh:
        while chunk := fh.read(1 << 20):
            digest.update(chunk)
    return digest.hexdigest()


class ManifestWriter:
    """Collects artifacts and warnings, then emits manifest.json."""

    def __init__(self, out_dir: Path, config_echo: dict):
        self.out_dir = Path(out_dir)
        self.out_dir.mkdir(parents=True, exist_ok=True)
        self.config_echo = config_echo
        self.artifacts: list[Path] = []
        self.warnings: list[str] = []
        self.extra: dict = {}
        self._t0 = time.perf_counter()

    def add(self, path: Path) -> Path:
        self.artifacts.append(Path(path))
        return path

    def warn(self, *messages: str):
        self.warnings.extend(messages)

    def write(self) -> Path:
        manifest = {
            "tool": "opgrowth",
            "version": __version__,
            "config": self.config_echo,
            "wall_time_s": round(time.perf_counter() - self._t0, 3),
            "warnings": self.warnings,
            "artifacts": {
                p.name: f"sha256:{sha256_of(p)}" for p in sorted(self.artifacts)
            },
        }
        manifest.update(self.extra)
        path = self.out_dir / "manifest.json"
        with path.open("w", encoding="utf-8") as fh:
            json.dump(manifest, fh, indent=2, sort_keys=True)
            fh.write("\n")
        return path


def write_json(path: Path, payload: dict) -> Path:
    path = Path(path)
    with path.open("w", encoding="utf-8") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return path
